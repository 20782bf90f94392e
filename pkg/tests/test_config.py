import json

import pytest
from hydra import compose, initialize
from omegaconf import OmegaConf

from fedbnsl.model.params import AdmmHyperparams, PrivacyBudget, load_schema
from fedbnsl.utils.exceptions import ConfigError
from main import run_tasks

JOBS = ["fed_sparse_d20", "fed_sparse_dp_d20", "fed_bnsl_d20", "fed_bnsl_dp_d20", "fed_sparse_hetero_d20",
        "gen_data_d20", "attack_demo", "metrics", "fed_sparse_csv"]


def compose_job(name, overrides=()):
    with initialize(version_base=None, config_path="../config"):
        return compose(config_name=name, overrides=list(overrides))


@pytest.mark.parametrize("name", JOBS)
def test_every_job_composes(name):
    config = compose_job(name, ["seeds=[0]"])
    assert config.engine._target_ == "fedbnsl.engine.engine_experiment.ExperimentEngine"
    assert config.tasks
    if 'method' in config:
        load_schema(AdmmHyperparams, config.method.hyperparams, "method.hyperparams")
        load_schema(PrivacyBudget, config.method.get('privacy'), "method.privacy")


def test_default_operating_point():
    config = compose_job("fed_sparse_d20")
    assert (config.data.d, config.data.P, config.data.n_p) == (20, 8, 5000)
    hp = load_schema(AdmmHyperparams, config.method.hyperparams, "method.hyperparams")
    assert (hp.T, hp.K, hp.lam) == (100, 30, 0.1)


def test_seeds_come_from_the_environment(monkeypatch):
    monkeypatch.setenv("FEDBNSL_SEEDS", "[3, 4]")
    config = compose_job("fed_sparse_d20")
    assert list(config.seeds) == [3, 4]
    monkeypatch.delenv("FEDBNSL_SEEDS")
    assert list(compose_job("fed_sparse_d20").seeds) == list(range(10))


def test_run_tasks_generates_data(tmp_path):
    out = tmp_path / "out"
    config = compose_job("gen_data_d20", ["seeds=[0]", f"dump_path='{out}'", "data.d=4", "data.P=2", "data.n_p=20"])
    run_tasks(config)
    saved = json.loads((out / "config.json").read_text())
    assert saved['data']['d'] == 4
    assert (out / "data" / "seed_0" / "participant_1.csv").exists()


def test_run_tasks_runs_a_small_experiment(tmp_path):
    out = tmp_path / "out"
    config = compose_job("fed_bnsl_d20", ["seeds=[0]", f"dump_path='{out}'", "data.d=4", "data.P=2",
                                          "data.n_p=50", "method.hyperparams.T=2"])
    run_tasks(config)
    summary = json.loads((out / "summary.json").read_text())
    assert summary['seeds'][0]['total_bytes'] == 2 * 2 * 16 * 8 * 2


def test_run_tasks_needs_a_task(tmp_path):
    config = OmegaConf.create({'dump_path': str(tmp_path), 'seeds': [0],
                               'engine': {'_target_': 'fedbnsl.engine.engine_experiment.ExperimentEngine'}})
    with pytest.raises(ConfigError):
        run_tasks(config)
