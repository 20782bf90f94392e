import json

import numpy as np
import pytest

from fedbnsl.dataset.csv_dataset import read_matrix, write_edge_list
from fedbnsl.engine import engine_experiment
from fedbnsl.engine.engine_experiment import TRACE_COLUMNS, ExperimentEngine
from fedbnsl.utils.exceptions import ConfigError, DivergenceError, SingularMatrixError

SMALL_DATA = {'_target_': 'fedbnsl.dataset.synthetic.generate_federation', 'd': 5, 'P': 2, 'n_p': 200}
SMALL_HYPERPARAMS = {'rho1': 10., 'T': 3, 'K': 5}


def make_engine(tmp_path, method="fed_sparse", seeds=(0, 1), data=None):
    engine = ExperimentEngine(dump_path=str(tmp_path / "out"), seeds=list(seeds))
    engine.configure_data(SMALL_DATA if data is None else data)
    engine.configure_method({'name': method, 'hyperparams': SMALL_HYPERPARAMS})
    return engine


def read_json(path):
    with open(path) as f:
        return json.load(f)


def test_engine_needs_seeds(tmp_path):
    with pytest.raises(ConfigError):
        ExperimentEngine(dump_path=str(tmp_path), seeds=[])


def test_unknown_method(tmp_path):
    engine = ExperimentEngine(dump_path=str(tmp_path), seeds=[0])
    with pytest.raises(ConfigError) as info:
        engine.configure_method({'name': 'notears'})
    assert info.value.field == "method.name"


def test_badly_typed_hyperparameter(tmp_path):
    engine = ExperimentEngine(dump_path=str(tmp_path), seeds=[0])
    with pytest.raises(ConfigError) as info:
        engine.configure_method({'name': 'fed_sparse', 'hyperparams': {'T': 'abc'}})
    assert info.value.field == "method.hyperparams.T"


def test_private_method_enables_privacy(tmp_path):
    engine = ExperimentEngine(dump_path=str(tmp_path), seeds=[0])
    engine.configure_method({'name': 'fed_sparse_dp', 'privacy': {'epsilon': 2.}})
    assert engine.privacy.enabled and engine.privacy.epsilon == 2.
    engine.configure_method({'name': 'fed_sparse'})
    assert not engine.privacy.enabled


def test_missing_data_field(tmp_path):
    engine = ExperimentEngine(dump_path=str(tmp_path), seeds=[0])
    with pytest.raises(ConfigError) as info:
        engine.configure_data({'_target_': 'fedbnsl.dataset.csv_dataset.load_csv_federation', 'path': '???',
                               'has_header': True, 'P': 3})
    assert info.value.field == "data.path"


def test_invalid_data_arguments_are_config_errors(tmp_path):
    engine = make_engine(tmp_path, data={**SMALL_DATA, 'P': 0})
    with pytest.raises(ConfigError):
        engine.run({})


def test_run_writes_trace_estimates_and_summary(tmp_path):
    engine = make_engine(tmp_path)
    engine.run({'trace_file': 'trace.csv', 'summary_file': 'summary.json'})
    out = tmp_path / "out"
    lines = (out / "trace.csv").read_text().splitlines()
    assert lines[0] == ",".join(TRACE_COLUMNS)
    assert len(lines) == 1 + 2 * 3
    assert [line.split(",")[:2] for line in lines[1:4]] == [["0", "1"], ["0", "2"], ["0", "3"]]
    assert (out / "estimates" / "seed_1.txt").exists()
    assert read_matrix(out / "estimates" / "seed_1_consensus.csv").shape == (5, 5)

    summary = read_json(out / "summary.json")
    assert summary['method'] == "fed_sparse"
    assert [result['seed'] for result in summary['seeds']] == [0, 1]
    assert summary['diverged'] == []
    assert set(summary['aggregate']['shd']) == {'mean', 'std'}
    shds = [result['shd'] for result in summary['seeds']]
    assert summary['aggregate']['shd']['mean'] == pytest.approx(np.mean(shds))


def test_runs_are_reproducible(tmp_path):
    make_engine(tmp_path / "a").run({})
    make_engine(tmp_path / "b").run({})
    for name in ("trace.csv", "summary.json"):
        assert (tmp_path / "a" / "out" / name).read_bytes() == (tmp_path / "b" / "out" / name).read_bytes()


def test_dense_baseline_bytes_in_summary(tmp_path):
    engine = make_engine(tmp_path, method="fed_bnsl", seeds=[0])
    summary = engine.run({})
    assert summary['seeds'][0]['total_bytes'] == 2 * 2 * 25 * 8 * 3


def test_personalization_report(tmp_path):
    data = {**SMALL_DATA, 'mode': 'heterogeneous'}
    summary = make_engine(tmp_path, seeds=[0], data=data).run({'personalization': True})
    report = summary['seeds'][0]['personalization']
    assert [entry['participant'] for entry in report] == [0, 1]


def test_failed_refit_is_reported_without_aborting(tmp_path, monkeypatch):
    def singular(*args, **kwargs):
        raise SingularMatrixError("node 0 has 3 parents but only 2 samples")

    monkeypatch.setattr(engine_experiment, "personalization_refit", singular)
    data = {**SMALL_DATA, 'mode': 'heterogeneous'}
    summary = make_engine(tmp_path, seeds=[0, 1], data=data).run({'personalization': True})
    assert [result['seed'] for result in summary['seeds']] == [0, 1]
    for result in summary['seeds']:
        assert all(entry['refit_mse'] is None for entry in result['personalization'])


def test_all_seeds_diverging(tmp_path, monkeypatch):
    engine = make_engine(tmp_path)

    def diverge(*args, **kwargs):
        raise DivergenceError("h(W) overflowed", round=2)

    monkeypatch.setattr(engine, "_run_method", diverge)
    with pytest.raises(DivergenceError):
        engine.run({})
    summary = read_json(tmp_path / "out" / "summary.json")
    assert [entry['round'] for entry in summary['diverged']] == [2, 2]
    assert summary['seeds'] == []


def test_gen_data_is_reproducible(tmp_path):
    for name in ("a", "b"):
        make_engine(tmp_path / name, seeds=[3]).gen_data({'out_subdir': 'data'})
    first, second = tmp_path / "a" / "out" / "data" / "seed_3", tmp_path / "b" / "out" / "data" / "seed_3"
    names = sorted(path.name for path in first.iterdir())
    assert names == ["metadata.json", "participant_0.csv", "participant_1.csv", "truth.txt"]
    for name in names:
        assert (first / name).read_bytes() == (second / name).read_bytes()
    assert read_json(first / "metadata.json")['samples'] == [200, 200]


def test_attack_demo(tmp_path):
    engine = make_engine(tmp_path, method="fed_bnsl", seeds=[0])
    report = engine.attack_demo({'methods': ['fed_bnsl', 'fed_sparse']})
    assert all(error <= 1e-8 for error in report[0]['fed_bnsl'])
    assert report[0]['error_ratio'] >= 10
    assert (tmp_path / "out" / "attack.json").exists()


def test_attack_demo_rejects_private_methods(tmp_path):
    engine = make_engine(tmp_path, method="fed_bnsl", seeds=[0])
    with pytest.raises(ConfigError):
        engine.attack_demo({'methods': ['fed_bnsl_dp']})


def test_metrics_task(tmp_path, capsys):
    truth = tmp_path / "truth.txt"
    W = np.zeros((3, 3))
    W[0, 1], W[1, 2] = 1., -0.5
    write_edge_list(truth, W)
    empty = tmp_path / "empty.txt"
    empty.write_text("")
    engine = ExperimentEngine(dump_path=str(tmp_path / "out"), seeds=[0])

    report = engine.metrics({'truth': str(truth), 'estimate': str(truth)})
    assert report['shd'] == 0 and report['tpr'] == 1.
    assert json.loads(capsys.readouterr().out)['shd'] == 0

    report = engine.metrics({'truth': str(truth), 'estimate': str(empty)})
    assert report['tpr'] == 0. and report['fdr_undefined']
    assert read_json(tmp_path / "out" / "metrics.json")['shd'] == 2


def test_metrics_task_needs_both_files(tmp_path):
    engine = ExperimentEngine(dump_path=str(tmp_path), seeds=[0])
    with pytest.raises(ConfigError) as info:
        engine.metrics({'truth': None, 'estimate': None})
    assert info.value.field == "tasks.metrics.truth"
