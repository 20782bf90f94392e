"""
Utils for seeding random streams and instantiating federations from hydra configs
"""

# hydra imports
from hydra.errors import InstantiationException
from hydra.utils import instantiate

# generic imports
from enum import IntEnum
import logging
import numpy as np

# fedbnsl imports
from fedbnsl.utils.exceptions import ConfigError, FedBnslError

log = logging.getLogger(__name__)


class Stream(IntEnum):
    """Purpose of a random stream. Each (seed, purpose, participant) triple gets an independent stream."""
    GRAPH = 0
    WEIGHTS = 1
    PERTURBATION = 2
    SAMPLES = 3
    SHUFFLE = 4
    SOLVER_NOISE = 5
    SMOOTHNESS_NOISE = 6
    COVARIANCE_NOISE = 7


def make_rng(seed, purpose, participant=None):
    """
    Create a counter-based random generator for one purpose and, optionally, one participant.

    Streams are derived from the master seed through `SeedSequence` spawn keys, so the draws of one participant do
    not depend on how many draws any other participant makes, nor on the order participants run in.

    Parameters
    ----------
    seed : int
        Master seed of the run.
    purpose : Stream
        What the stream is used for.
    participant : int, optional
        Index of the participant owning the stream.

    Returns
    -------
    np.random.Generator
    """
    key = (int(purpose),) if participant is None else (int(purpose), int(participant))
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed), spawn_key=key)))


def as_generator(seed):
    """Accept an integer seed or an existing generator."""
    if isinstance(seed, np.random.Generator):
        return seed
    return np.random.Generator(np.random.Philox(np.random.SeedSequence(int(seed))))


def get_federation(dataset, seed):
    """
    Instantiate a federation from its hydra config.

    The dataset config names a generator function or loader through `_target_`, e.g.
    `fedbnsl.dataset.synthetic.generate_federation` or `fedbnsl.dataset.csv_dataset.load_csv_federation`.

    Parameters
    ----------
    dataset
        Hydra config specifying the federation.
    seed : int
        Master seed passed to the target.

    Returns
    -------
    truth : GroundTruthModel or BinaryDag or None
        Ground truth when it is known.
    participants : list of ParticipantData
    """
    try:
        truth, participants = instantiate(dataset, seed=seed)
    except InstantiationException as e:
        cause = e.__cause__
        if isinstance(cause, (ValueError, TypeError)) and not isinstance(cause, FedBnslError):
            raise ConfigError("data", str(cause)) from e
        if cause is None:
            raise
        raise cause from e
    dims = {p.d for p in participants}
    if len(dims) != 1:
        raise ValueError(f"participants disagree on the number of variables: {sorted(dims)}")
    log.info(f"Loaded federation of {len(participants)} participants with d={dims.pop()} "
             f"and sample counts {[p.n for p in participants]}")
    return truth, participants
