"""Experiment drivers that turn an ``ExperimentConfig`` into a CSV table."""

from __future__ import annotations

import csv
import io
import logging
import math
from dataclasses import dataclass

import numpy as np

from .bounds import bound_pair, candidate_decision, lower_bound, upper_bound
from .config import ExperimentConfig
from .errors import TooFewFeasibleReplicates
from .geometry import (GenerationMode, SampleSet, covering_radius, quantize_greedy,
                       sample_uniform)
from .solver import reference_value, solve_sampled_model

log = logging.getLogger(__name__)

HEADERS = {
    "solve": ("omega_size", "seed", "v_hat", "x_hat", "evaluated_candidates",
              "infeasible_candidates", "theoretical_gap"),
    "bounds": ("omega_size", "seed", "side", "mean", "sigma_hat", "t_value", "bound",
               "replicates", "skipped"),
    "converge": ("omega_size", "seed", "v_hat", "reference", "gap", "beta", "theoretical_bound"),
    "beta-study": ("omega_size", "seed", "mode", "beta", "scaled_stat"),
    "coverage": ("trial", "lower", "upper", "reference", "covered_lower", "covered_upper"),
}
MODE_LABELS = {"uniform": GenerationMode.UNIFORM, "quantizer": GenerationMode.QUANTIZER}


def format_cell(value) -> str:
    if value is None:
        return ""
    if isinstance(value, (bool, np.bool_)):
        return "1" if value else "0"
    if isinstance(value, (int, np.integer)):
        return str(int(value))
    if isinstance(value, (float, np.floating)):
        return format(float(value), ".17g")
    if isinstance(value, (list, tuple, np.ndarray)):
        return ";".join(format_cell(v) for v in np.ravel(value))
    return str(value)


@dataclass(frozen=True)
class Table:
    header: tuple[str, ...]
    rows: tuple[tuple, ...]

    def column(self, name: str) -> list:
        i = self.header.index(name)
        return [r[i] for r in self.rows]

    def to_csv(self) -> str:
        buf = io.StringIO()
        writer = csv.writer(buf, lineterminator="\n")
        writer.writerow(self.header)
        for row in self.rows:
            writer.writerow([format_cell(v) for v in row])
        return buf.getvalue()


def _table(command: str, keyed_rows) -> Table:
    """Sort ``(key, row)`` pairs by key so output never depends on execution order."""
    return Table(HEADERS[command], tuple(row for _, row in sorted(keyed_rows, key=lambda kr: kr[0])))


def scaled_stat(omega_size: int, beta: float, dim: int) -> float | None:
    """``(n (2 beta)^d - log n) / log log n``; undefined for ``n <= 2``."""
    if omega_size <= 2:
        return None
    loglog = math.log(math.log(omega_size))
    if loglog <= 0:
        return None
    return (omega_size * (2.0 * beta) ** dim - math.log(omega_size)) / loglog


def draw_samples(cfg: ExperimentConfig, mode: str, omega_size: int, seed: int) -> SampleSet:
    support = cfg.support()
    if mode == "quantizer":
        return quantize_greedy(support, omega_size, cfg.instance.pool_factor * omega_size, seed)
    return sample_uniform(support, omega_size, seed)


def _reference(cfg: ExperimentConfig) -> float:
    inst = cfg.instance
    log.info("reference value on %d quantizer points", inst.reference_count)
    return reference_value(cfg.problem(), cfg.spec, inst.reference_count,
                           inst.reference_seed, inst.pool_factor)


def run_solve(cfg: ExperimentConfig) -> Table:
    rows = []
    for n in cfg.omega_sizes:
        for seed in cfg.seeds:
            log.info("solve omega_size=%d seed=%d", n, seed)
            rep = solve_sampled_model(cfg.problem(), cfg.spec, draw_samples(cfg, "uniform", n, seed),
                                      cfg.grid_per_dim)
            rows.append(((n, seed), (n, seed, rep.v_hat, rep.x_hat, rep.evaluated_candidates,
                                     rep.infeasible_candidates, rep.theoretical_gap)))
    return _table("solve", rows)


def run_bounds(cfg: ExperimentConfig) -> Table:
    inst, rows = cfg.problem(), []
    for n in cfg.omega_sizes:
        for seed in cfg.seeds:
            log.info("bounds omega_size=%d seed=%d", n, seed)
            x_bar = candidate_decision(inst, cfg.spec, n, seed)
            ests = (lower_bound(inst, cfg.spec, n, cfg.M_prime, cfg.alpha, seed),
                    upper_bound(inst, cfg.spec, x_bar, n, cfg.M, cfg.alpha, seed))
            for est in ests:
                rows.append(((n, seed, est.side.value),
                             (n, seed, est.side.value, est.mean, est.sigma_hat, est.t_value,
                              est.bound, len(est.replicate_values), est.skipped_replicates)))
    return _table("bounds", rows)


def run_converge(cfg: ExperimentConfig) -> Table:
    reference = _reference(cfg)
    rows = []
    for n in cfg.omega_sizes:
        for seed in cfg.seeds:
            log.info("converge omega_size=%d seed=%d", n, seed)
            samples = draw_samples(cfg, "uniform", n, seed)
            rep = solve_sampled_model(cfg.problem(), cfg.spec, samples, cfg.grid_per_dim)
            beta = rep.beta
            if beta is None:
                beta = covering_radius(cfg.support(), samples, cfg.grid_per_dim)
            rows.append(((n, seed), (n, seed, rep.v_hat, reference, abs(rep.v_hat - reference),
                                     beta, rep.theoretical_gap)))
    return _table("converge", rows)


def run_beta_study(cfg: ExperimentConfig) -> Table:
    support, rows = cfg.support(), []
    for mode in cfg.instance.sampling:
        label = MODE_LABELS[mode].value
        for n in cfg.omega_sizes:
            for seed in cfg.seeds:
                beta = covering_radius(support, draw_samples(cfg, mode, n, seed), cfg.grid_per_dim)
                rows.append(((n, seed, label),
                             (n, seed, label, beta, scaled_stat(n, beta, support.dim))))
    return _table("beta-study", rows)


def run_coverage(cfg: ExperimentConfig) -> Table:
    reference = _reference(cfg)
    (n,) = cfg.omega_sizes
    rows, hits_lo, hits_up = [], 0, 0
    for seed in cfg.seeds:
        log.info("coverage trial=%d", seed)
        try:
            lo, up = bound_pair(cfg.problem(), cfg.spec, n, cfg.M, cfg.M_prime, cfg.alpha, seed)
            lower, upper = lo.bound, up.bound
        except TooFewFeasibleReplicates:
            lower = upper = None
        cov_lo = lower is not None and lower <= reference
        cov_up = upper is not None and upper >= reference
        hits_lo += cov_lo
        hits_up += cov_up
        rows.append(((0, seed), (seed, lower, upper, reference, cov_lo, cov_up)))
    trials = len(cfg.seeds)
    rows.append(((1, 0), ("summary", None, None, reference, hits_lo / trials, hits_up / trials)))
    return _table("coverage", rows)


RUNNERS = {
    "solve": run_solve,
    "bounds": run_bounds,
    "converge": run_converge,
    "beta-study": run_beta_study,
    "coverage": run_coverage,
}


def run(cfg: ExperimentConfig) -> Table:
    return RUNNERS[cfg.command](cfg)
