"""
Class for running federated structure learning experiments: data generation, runs over seeds, the covariance
reconstruction demo and metric reports
"""

# hydra imports
from hydra.utils import to_absolute_path
from omegaconf import OmegaConf

# generic imports
from dataclasses import replace
from pathlib import Path
import json
import logging
import numpy as np

# fedbnsl imports
from fedbnsl.dataset.csv_dataset import read_graph, write_edge_list, write_matrix, write_shards
from fedbnsl.dataset.data_utils import get_federation
from fedbnsl.federation.attack import reconstruct_covariance, reconstruction_error
from fedbnsl.federation.fed_bnsl import run_fed_bnsl_baseline
from fedbnsl.federation.fed_sparse import run_fed_sparse_bnsl
from fedbnsl.model.graph import BinaryDag, GroundTruthModel, prune
from fedbnsl.model.metric import normalized_mse, personalization_refit, shd, structure_report, tpr_fdr
from fedbnsl.model.params import AdmmHyperparams, PrivacyBudget, load_schema
from fedbnsl.utils.exceptions import AttackFailure, ConfigError, DivergenceError, SingularMatrixError
from fedbnsl.utils.logging_utils import CSVData

log = logging.getLogger(__name__)

METHODS = {
    'fed_sparse': (run_fed_sparse_bnsl, False),
    'fed_sparse_dp': (run_fed_sparse_bnsl, True),
    'fed_bnsl': (run_fed_bnsl_baseline, False),
    'fed_bnsl_dp': (run_fed_bnsl_baseline, True),
}

TRACE_COLUMNS = ['seed', 'round', 'shd', 'tpr', 'fdr', 'h_value', 'bytes_up_cum', 'bytes_down_cum']
SUMMARY_METRICS = ['shd', 'tpr', 'fdr', 'estimated_edges', 'total_bytes', 'total_mb']


def _truth_structure(truth):
    if isinstance(truth, GroundTruthModel):
        return truth.structure
    return truth


def _write_json(path, content):
    with open(path, 'w') as f:
        json.dump(content, f, indent=2)
        f.write('\n')


def _option(task_config, key, default=None):
    if task_config is None:
        return default
    value = OmegaConf.select(OmegaConf.create(task_config), key, default=None)
    return default if value is None else value


def _require(task_config, key, task):
    value = _option(task_config, key)
    if value is None:
        raise ConfigError(f"tasks.{task}.{key}", "missing mandatory value")
    return value


def _mean_std(values):
    values = np.asarray(values, dtype=np.float64)
    return {'mean': float(values.mean()), 'std': float(values.std())}


class ExperimentEngine:
    """Engine running the tasks of an experiment over a list of seeds."""
    def __init__(self, dump_path, seeds, participant_workers=1, report_interval=10):
        """
        Parameters
        ==========
        dump_path : string
            The path to store outputs in.
        seeds : sequence of int
            Master seeds; every task is repeated for each of them.
        participant_workers : int
            Threads running the participants' local updates.
        report_interval : int
            Rounds between progress log lines.
        """
        self.dirpath = Path(dump_path)
        self.seeds = [int(seed) for seed in seeds]
        if not self.seeds:
            raise ConfigError("seeds", "at least one seed is required")
        if participant_workers < 1:
            raise ConfigError("engine.participant_workers", f"must be at least 1, got {participant_workers}")
        self.participant_workers = participant_workers
        self.report_interval = report_interval

        self.data_config = None
        self.method = None
        self.hyperparams = None
        self.privacy = None

    def configure_data(self, data_config):
        """Store the federation config, resolving input paths against the launch directory."""
        if data_config is None or '_target_' not in data_config:
            raise ConfigError("data._target_", "missing mandatory value")
        data_config = OmegaConf.create(data_config)
        for key in data_config:
            if OmegaConf.is_missing(data_config, key):
                raise ConfigError(f"data.{key}", "missing mandatory value")
        data_config = OmegaConf.create(OmegaConf.to_container(data_config, resolve=True))
        for key in ('path', 'truth_path'):
            if data_config.get(key) is not None:
                data_config[key] = to_absolute_path(data_config[key])
        self.data_config = data_config

    def configure_method(self, method_config):
        """Select the method and validate its hyperparameters and privacy budget against their schemas."""
        method_config = OmegaConf.create(method_config if method_config is not None else {})
        name = method_config.get('name')
        if name not in METHODS:
            raise ConfigError("method.name", f"must be one of {sorted(METHODS)}, got {name!r}")
        self.method = name
        self.hyperparams = load_schema(AdmmHyperparams, method_config.get('hyperparams'), "method.hyperparams")
        privacy = load_schema(PrivacyBudget, method_config.get('privacy'), "method.privacy")
        self.privacy = replace(privacy, enabled=METHODS[name][1])
        log.info(f"Configured method {name} with {self.hyperparams}")

    def _load(self, seed):
        if self.data_config is None:
            raise ConfigError("data", "no federation configured")
        return get_federation(self.data_config, seed)

    def _run_method(self, participants, seed, method=None, hyperparams=None):
        if self.method is None:
            raise ConfigError("method", "no method configured")
        method = self.method if method is None else method
        runner, private = METHODS[method]
        return runner(participants, self.hyperparams if hyperparams is None else hyperparams,
                      privacy=replace(self.privacy, enabled=private), seed=seed, workers=self.participant_workers,
                      report_interval=self.report_interval)

    def gen_data(self, task_config):
        """Write each seed's participant shards, ground truth edge lists and generation metadata."""
        out_dir = self.dirpath / _option(task_config, 'out_subdir', 'data')
        for seed in self.seeds:
            truth, participants = self._load(seed)
            seed_dir = out_dir / f"seed_{seed}"
            write_shards(seed_dir, participants)
            metadata = {
                'seed': seed,
                'data': OmegaConf.to_container(self.data_config, resolve=True),
                'd': participants[0].d,
                'participants': len(participants),
                'samples': [data.n for data in participants],
            }
            if isinstance(truth, GroundTruthModel):
                write_edge_list(seed_dir / "truth.txt", truth.global_weights)
                for p, weights in enumerate(truth.participant_weights or []):
                    write_edge_list(seed_dir / f"truth_participant_{p}.txt", weights)
                metadata.update(true_edges=len(truth.structure), heterogeneous=truth.heterogeneous,
                                noise_variance=truth.noise_variance)
            elif truth is not None:
                write_edge_list(seed_dir / "truth.txt", truth.adjacency())
                metadata.update(true_edges=len(truth))
            _write_json(seed_dir / "metadata.json", metadata)
            log.info(f"Wrote {len(participants)} shards for seed {seed} to {seed_dir}")

    def _trace_rows(self, seed, record, structure):
        for entry in record.rounds:
            row = dict.fromkeys(TRACE_COLUMNS, float('nan'))
            row.update(seed=seed, round=entry.round, h_value=entry.h_value, bytes_up_cum=entry.bytes_up_cum,
                       bytes_down_cum=entry.bytes_down_cum)
            if structure is not None:
                estimate = prune(entry.W, self.hyperparams.prune_threshold).dag
                rates = tpr_fdr(estimate, structure)
                row.update(shd=shd(estimate, structure), tpr=rates.tpr, fdr=rates.fdr)
            yield row

    def _personalization(self, truth, record, participants):
        """Consensus and refit normalised MSE of every participant against its generating weights."""
        consensus = record.final_W * record.estimate.adjacency()
        results = []
        for p, data in enumerate(participants):
            target = truth.weights_for(p)
            if not np.any(target):
                results.append({'participant': p, 'consensus_mse': None, 'refit_mse': None})
                continue
            result = {'participant': p, 'consensus_mse': normalized_mse(consensus, target), 'refit_mse': None}
            try:
                result['refit_mse'] = normalized_mse(personalization_refit(record.estimate, data), target)
            except SingularMatrixError as e:
                log.warning(f"Participant {p}: personalisation refit failed: {e}")
            results.append(result)
        return results

    def run(self, task_config):
        """
        Run the configured method on every seed, writing the per-round trace CSV, the final estimates and a summary
        JSON with mean and standard deviation across seeds. Seeds that diverge are reported and skipped.
        """
        self.dirpath.mkdir(parents=True, exist_ok=True)
        estimates_dir = self.dirpath / "estimates"
        estimates_dir.mkdir(exist_ok=True)
        trace_file = _option(task_config, 'trace_file', "trace.csv")
        summary_file = _option(task_config, 'summary_file', "summary.json")
        personalization = bool(_option(task_config, 'personalization', False))

        per_seed = []
        diverged = []
        with CSVData(str(self.dirpath / trace_file)) as trace:
            for seed in self.seeds:
                truth, participants = self._load(seed)
                structure = _truth_structure(truth)
                try:
                    record = self._run_method(participants, seed)
                except DivergenceError as e:
                    log.error(f"Seed {seed} diverged: {e}")
                    diverged.append({'seed': seed, 'round': e.round, 'error': e.detail})
                    continue
                for row in self._trace_rows(seed, record, structure):
                    trace.record(row)
                    trace.write()
                trace.flush()
                write_edge_list(estimates_dir / f"seed_{seed}.txt", record.final_W * record.estimate.adjacency())
                write_matrix(estimates_dir / f"seed_{seed}_consensus.csv", record.final_W)

                result = {'seed': seed, 'estimated_edges': len(record.estimate),
                          'removed_edges': record.removed_edges, 'total_bytes': record.total_bytes,
                          'total_mb': record.total_bytes / 1e6, 'final_h_value': record.rounds[-1].h_value}
                if structure is not None:
                    rates = tpr_fdr(record.estimate, structure)
                    result.update(shd=shd(record.estimate, structure), tpr=rates.tpr, fdr=rates.fdr,
                                  tpr_undefined=rates.tpr_undefined, fdr_undefined=rates.fdr_undefined,
                                  structure=structure_report(record.estimate, structure))
                if record.privacy:
                    result['privacy'] = record.privacy
                if personalization and isinstance(truth, GroundTruthModel):
                    result['personalization'] = self._personalization(truth, record, participants)
                per_seed.append(result)
                log.info(f"Seed {seed}: " + ", ".join(f"{key} = {result[key]}" for key in SUMMARY_METRICS
                                                      if key in result))

        summary = {
            'method': self.method,
            'hyperparams': OmegaConf.to_container(OmegaConf.structured(self.hyperparams)),
            'seeds': per_seed,
            'diverged': diverged,
            'aggregate': {key: _mean_std([result[key] for result in per_seed])
                          for key in SUMMARY_METRICS if per_seed and key in per_seed[0]},
            'conventions': "reversed edges count once in SHD, as false discoveries in FDR and never as true positives",
        }
        _write_json(self.dirpath / summary_file, summary)
        log.info(f"Wrote summary of {len(per_seed)} seeds to {self.dirpath / summary_file}")
        if not per_seed:
            raise DivergenceError(f"all {len(self.seeds)} seeds diverged")
        return summary

    def attack_demo(self, task_config):
        """
        Reconstruct every participant's covariance from its first-round message and report the relative error,
        for the dense baseline and the sparse method.
        """
        methods = list(_option(task_config, 'methods', ['fed_bnsl', 'fed_sparse']))
        for method in methods:
            if method not in METHODS or METHODS[method][1]:
                raise ConfigError("tasks.attack_demo.methods", f"unknown non-private method {method!r}")
        if self.hyperparams is None:
            raise ConfigError("method", "no method configured")
        one_round = replace(self.hyperparams, T=1)
        report = []
        for seed in self.seeds:
            _, participants = self._load(seed)
            seed_report = {'seed': seed}
            for method in methods:
                record = self._run_method(participants, seed, method=method, hyperparams=one_round)
                d = record.d
                errors = []
                for p, (B, data) in enumerate(zip(record.local_matrices, participants)):
                    try:
                        estimate = reconstruct_covariance(B, np.zeros((d, d)), np.zeros((d, d)), one_round.rho2)
                        errors.append(reconstruction_error(estimate, data.covariance))
                    except AttackFailure as e:
                        log.warning(f"Seed {seed}, {method}, participant {p}: {e}")
                        errors.append(None)
                seed_report[method] = errors
                finite = [error for error in errors if error is not None]
                log.info(f"Seed {seed}, {method}: max relative reconstruction error "
                         f"{max(finite) if finite else float('nan'):.3e}")
            if 'fed_bnsl' in seed_report and 'fed_sparse' in seed_report:
                dense = [e for e in seed_report['fed_bnsl'] if e is not None]
                sparse = [e for e in seed_report['fed_sparse'] if e is not None]
                if dense and sparse and max(dense) > 0:
                    seed_report['error_ratio'] = min(sparse) / max(dense)
            report.append(seed_report)
        self.dirpath.mkdir(parents=True, exist_ok=True)
        _write_json(self.dirpath / "attack.json", report)
        return report

    def metrics(self, task_config):
        """Compare an estimated graph file with a ground truth graph file and print the report as JSON."""
        truth_path = to_absolute_path(_require(task_config, 'truth', 'metrics'))
        estimate_path = to_absolute_path(_require(task_config, 'estimate', 'metrics'))
        threshold = float(_option(task_config, 'threshold', 0.))
        truth = BinaryDag.from_adjacency(read_graph(truth_path))
        estimate, removed = prune(read_graph(estimate_path, d=truth.d), threshold)
        rates = tpr_fdr(estimate, truth)
        report = {'shd': shd(estimate, truth), 'tpr': rates.tpr, 'fdr': rates.fdr,
                  'tpr_undefined': rates.tpr_undefined, 'fdr_undefined': rates.fdr_undefined,
                  'removed_edges': removed, **structure_report(estimate, truth)}
        print(json.dumps(report, indent=2))
        self.dirpath.mkdir(parents=True, exist_ok=True)
        _write_json(self.dirpath / "metrics.json", report)
        log.info(f"{report['correct_undirected_edges']} out of {report['true_edges']} undirected edges and "
                 f"{report['correct_vstructures']} out of {report['true_vstructures']} v-structures recovered")
        return report
