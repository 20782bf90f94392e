"""
Main file used for running the code
"""

# hydra imports
import hydra
from omegaconf import OmegaConf
from omegaconf.errors import OmegaConfBaseException
from hydra.errors import InstantiationException
from hydra.utils import instantiate, to_absolute_path

# generic imports
from pathlib import Path
import json
import logging
import os
import sys

from fedbnsl.utils.exceptions import ConfigError, CsvFormatError, DivergenceError
from fedbnsl.utils.logging_utils import get_git_version

logger = logging.getLogger('fedbnsl')

EXIT_CONFIG_ERROR = 2
EXIT_ALL_DIVERGED = 3
EXIT_IO_ERROR = 4


def save_config(config, dump_path):
    """Save the effective config, defaults included, next to the results."""
    Path(dump_path).mkdir(parents=True, exist_ok=True)
    with open(Path(dump_path) / "config.json", 'w') as f:
        json.dump(OmegaConf.to_container(config, resolve=True), f, indent=2)
        f.write('\n')


def run_tasks(config):
    """
    Instantiate the engine and perform the tasks specified in the config, in order

    Args:
        config  ... hydra config specified in the @hydra.main annotation
    """
    if not config.get('tasks'):
        raise ConfigError("tasks", "no task selected")
    save_config(config, config.dump_path)

    engine = instantiate(config.engine, dump_path=config.dump_path, seeds=config.seeds)
    if 'data' in config:
        engine.configure_data(config.data)
    if 'method' in config:
        engine.configure_method(config.method)

    for task, task_config in config.tasks.items():
        if not hasattr(engine, task):
            raise ConfigError(f"tasks.{task}", "unknown task")
        getattr(engine, task)(task_config)


@hydra.main(version_base=None, config_path='config/', config_name='fed_sparse_d20')
def main(config):
    """
    Run the experiment tasks of the given config and exit with a status describing the outcome

    Args:
        config  ... hydra config specified in the @hydra.main annotation
    """
    logger.info(f"Using the following git version of the repository: {get_git_version(os.path.dirname(to_absolute_path(__file__)))}")
    logger.info(f"Running with the following config:\n{OmegaConf.to_yaml(config)}")

    try:
        try:
            run_tasks(config)
        except InstantiationException as e:
            # errors raised while building the engine arrive wrapped by hydra
            if e.__cause__ is None:
                raise
            raise e.__cause__ from e
    except (ConfigError, OmegaConfBaseException) as e:
        logger.error(str(e))
        sys.exit(EXIT_CONFIG_ERROR)
    except DivergenceError as e:
        logger.error(str(e))
        sys.exit(EXIT_ALL_DIVERGED)
    except (OSError, CsvFormatError) as e:
        logger.error(str(e))
        sys.exit(EXIT_IO_ERROR)


if __name__ == '__main__':
    # pylint: disable=no-value-for-parameter
    main()
