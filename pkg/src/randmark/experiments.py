"""Simulation harness: four experiments, deterministic CSV emission.

Each experiment walks a parameter grid and, for every (grid point, rep)
pair, derives a private stream from the base seed by nested substream
labels.  Data, the shared uniform, and the shared permutations inside
one rep come from fixed labels of that stream, so every method compared
within a rep consumes identical randomness, reps are order-independent,
and reruns with the same config are byte-identical.

Output is one CSV per experiment with a fixed header, 12 significant
digits, and EMPTY as the marker for the fields of an empty interval.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import product
from pathlib import Path
from typing import Dict, Optional, Tuple

import numpy as np

from .betting import (
    PERM_LABEL,
    U_LABEL,
    _combined_finals,
    _draw_permutations,
    _one_sided_engine,
    default_strategy_lambda,
)
from .markov import emi_reject, eumi_reject, mi_reject, umi_reject
from .normal import norm_ppf
from .rand_core import (
    RngStream,
    beta_block,
    gaussian_block,
    make_rng,
    random_permutation,
    sample_ar1_toeplitz,
    substream,
    uniform01,
    uniform_block,
)
from .tail_bounds import ConfidenceInterval, hoeffding_ci
from .universal_inference import UiRule, goffinet_lrt_reject, split_evalues_block, ui_reject

DATA_LABEL = 1

# substream labels separating the four experiments under one base seed
EXPERIMENT_IDS = {
    "gaussian_ci": 101,
    "evalue_power": 102,
    "ui_power": 103,
    "betting_power": 104,
}

_N_GRID = tuple(int(round(v)) for v in np.linspace(100.0, 2000.0, 10))
_RHO_GRID = tuple(float(v) for v in np.linspace(0.0, 1.0, 10))
_B_GRID = tuple(float(v) for v in np.linspace(19.0, 20.8, 10))
_MU_GRID_EVALUE = tuple(float(v) for v in np.linspace(0.0, 4.0, 10))
_MU_GRID_UI = tuple(float(v) for v in np.linspace(0.0, 1.0, 10))

# (csv filename, ordered (column, type) pairs); rep separates the grid
# coordinate columns from the outcome columns
CSV_SCHEMAS = {
    "gaussian_ci": (
        "gaussian_ci.csv",
        (("method", str), ("n", int), ("rep", int), ("lower", float),
         ("upper", float), ("covered", int), ("width", float), ("empty_flag", int)),
    ),
    "evalue_power": (
        "evalue_power.csv",
        (("method", str), ("K", int), ("rho", float), ("mu", float),
         ("rep", int), ("reject", int)),
    ),
    "ui_power": (
        "ui_power.csv",
        (("method", str), ("n", int), ("mu", float), ("rep", int), ("reject", int)),
    ),
    "betting_power": (
        "betting_power.csv",
        (("method", str), ("b", float), ("n", int), ("rep", int), ("reject", int)),
    ),
}

EMPTY_MARKER = "EMPTY"

# cap on elements per batched wealth pass; keeps peak memory flat while
# leaving the vectorized inner loop wide enough to amortize overhead
_BATCH_ELEMENTS = 12_000_000


@dataclass(frozen=True)
class ExperimentConfig:
    """Knobs for one experiment run; defaults follow the reference study."""

    experiment: str
    alpha: float = 0.05
    reps: Optional[int] = None
    B: int = 100
    base_seed: int = 0
    out_dir: str = "results"
    paper_scale: bool = False
    n_grid: Tuple[int, ...] = _N_GRID
    mu_grid: Optional[Tuple[float, ...]] = None
    rho_grid: Tuple[float, ...] = _RHO_GRID
    b_grid: Tuple[float, ...] = _B_GRID
    k_values: Tuple[int, ...] = (100, 2)
    ui_n: int = 500
    split_frac: float = 0.5
    w1: float = 0.25
    beta_a: float = 20.0
    m0: float = 0.5

    def __post_init__(self):
        if self.experiment not in CSV_SCHEMAS:
            raise ValueError(f"unknown experiment {self.experiment!r}")
        if not 0.0 < self.alpha < 1.0:
            raise ValueError(f"alpha must be in (0,1), got {self.alpha}")
        if self.reps is not None and self.reps < 1:
            raise ValueError(f"reps must be at least 1, got {self.reps}")
        if self.B < 1:
            raise ValueError(f"B must be at least 1, got {self.B}")
        if self.ui_n < 2:
            raise ValueError(f"ui_n must be at least 2, got {self.ui_n}")
        if not 0.0 < self.m0 < 1.0:
            raise ValueError(f"m0 must be in (0,1), got {self.m0}")
        for name in ("n_grid", "rho_grid", "b_grid", "k_values"):
            if len(getattr(self, name)) == 0:
                raise ValueError(f"{name} must be nonempty")
        if self.mu_grid is not None and len(self.mu_grid) == 0:
            raise ValueError("mu_grid must be nonempty")

    def resolved_reps(self) -> int:
        if self.reps is not None:
            return self.reps
        if self.experiment == "gaussian_ci":
            return 20000 if self.paper_scale else 2000
        return 500

    def resolved_mu_grid(self) -> Tuple[float, ...]:
        if self.mu_grid is not None:
            return self.mu_grid
        return _MU_GRID_EVALUE if self.experiment == "evalue_power" else _MU_GRID_UI


@dataclass
class ResultRow:
    """One parsed CSV row; nan stands for an EMPTY field."""

    experiment: str
    method: str
    coords: Dict[str, float]
    rep: int
    outcome: Dict[str, float]

    def to_line(self) -> str:
        _, columns = CSV_SCHEMAS[self.experiment]
        parts = []
        for name, typ in columns:
            if name == "method":
                parts.append(self.method)
            elif name == "rep":
                parts.append(str(self.rep))
            elif name in self.coords:
                parts.append(_fmt(typ(self.coords[name])) if typ is int
                             else _fmt(float(self.coords[name])))
            else:
                parts.append(_fmt(self.outcome[name]) if typ is float
                             else _fmt(int(self.outcome[name])))
        return ",".join(parts)

    @classmethod
    def from_line(cls, experiment: str, line: str) -> "ResultRow":
        _, columns = CSV_SCHEMAS[experiment]
        parts = line.rstrip("\n").split(",")
        if len(parts) != len(columns):
            raise ValueError(
                f"expected {len(columns)} fields for {experiment}, got {len(parts)}")
        method, rep = "", 0
        coords: Dict[str, float] = {}
        outcome: Dict[str, float] = {}
        seen_rep = False
        for (name, typ), raw in zip(columns, parts):
            if name == "method":
                method = raw
            elif name == "rep":
                rep = int(raw)
                seen_rep = True
            else:
                value = math.nan if raw == EMPTY_MARKER else typ(raw)
                (outcome if seen_rep else coords)[name] = value
        return cls(experiment, method, coords, rep, outcome)


def _fmt(x) -> str:
    if isinstance(x, float):
        if math.isnan(x):
            return EMPTY_MARKER
        return f"{x:.12g}"
    return str(x)


def _rep_stream(root: RngStream, grid_index: int, rep: int) -> RngStream:
    return substream(substream(root, grid_index), rep)


def _experiment_root(cfg: ExperimentConfig) -> RngStream:
    return substream(make_rng(cfg.base_seed), EXPERIMENT_IDS[cfg.experiment])


def _open_csv(cfg: ExperimentConfig):
    out_dir = Path(cfg.out_dir)
    out_dir.mkdir(parents=True, exist_ok=True)
    filename, columns = CSV_SCHEMAS[cfg.experiment]
    path = out_dir / filename
    fh = open(path, "w", encoding="utf-8", newline="")
    fh.write(",".join(name for name, _ in columns) + "\n")
    return path, fh


def _require(cfg: ExperimentConfig, experiment: str) -> None:
    if cfg.experiment != experiment:
        raise ValueError(
            f"config is for {cfg.experiment!r}, this runner needs {experiment!r}")


def _ci_fields(ci: ConfidenceInterval, truth: float) -> str:
    if ci.empty:
        covered = 0
        lower = upper = width = EMPTY_MARKER
    else:
        covered = int(ci.covers(truth))
        lower, upper, width = _fmt(ci.lower), _fmt(ci.upper), _fmt(ci.width)
    return f"{lower},{upper},{covered},{width},{int(ci.empty)}"


def run_gaussian_ci_experiment(cfg: ExperimentConfig) -> Path:
    """Interval length and coverage for a standard Gaussian mean.

    Three intervals per rep on one shared sample and one shared uniform:
    the deterministic sub-Gaussian interval, its randomized tightening,
    and the asymptotically exact z interval.
    """
    _require(cfg, "gaussian_ci")
    reps = cfg.resolved_reps()
    root = _experiment_root(cfg)
    z = norm_ppf(1.0 - cfg.alpha / 2.0)
    path, fh = _open_csv(cfg)
    with fh:
        for gi, n in enumerate(cfg.n_grid):
            hw_exact = z / math.sqrt(n)
            for rep in range(reps):
                st = _rep_stream(root, gi, rep)
                xs = gaussian_block(substream(st, DATA_LABEL), n)
                u = uniform01(substream(st, U_LABEL))
                xbar = float(xs.mean())
                rows = (
                    ("hoeffding", hoeffding_ci(xbar, 1.0, n, cfg.alpha)),
                    ("rand_hoeffding", hoeffding_ci(xbar, 1.0, n, cfg.alpha, u=u)),
                    ("exact_z", ConfidenceInterval(
                        "exact_z", xbar, hw_exact, xbar - hw_exact,
                        xbar + hw_exact, None, False)),
                )
                for method, ci in rows:
                    fh.write(f"{method},{n},{rep},{_ci_fields(ci, 0.0)}\n")
    return path


def run_evalue_power_experiment(cfg: ExperimentConfig) -> Path:
    """Power of the four averaging rules on correlated e-values.

    Each rep draws a Gaussian vector with Toeplitz correlation rho^|i-j|
    and mean mu, exponentiates into e-values, and applies the plain
    average rule, its randomized version, the permuted running-average
    rule, and the combined rule, all on one (u, permutation) pair.
    """
    _require(cfg, "evalue_power")
    reps = cfg.resolved_reps()
    root = _experiment_root(cfg)
    mu_grid = cfg.resolved_mu_grid()
    path, fh = _open_csv(cfg)
    with fh:
        grid = list(product(cfg.k_values, cfg.rho_grid, mu_grid))
        for gi, (k, rho, mu) in enumerate(grid):
            coord = f"{k},{_fmt(float(rho))},{_fmt(float(mu))}"
            for rep in range(reps):
                st = _rep_stream(root, gi, rep)
                x = sample_ar1_toeplitz(substream(st, DATA_LABEL), k, rho, mu)
                es = np.exp(x - 0.5)
                u = uniform01(substream(st, U_LABEL))
                perm = random_permutation(substream(st, PERM_LABEL), k)
                shuffled = es[perm]
                mean = float(es.mean())
                decisions = (
                    ("AvMI", mi_reject(mean, cfg.alpha)),
                    ("UMI", umi_reject(mean, cfg.alpha, u)),
                    ("EMI", emi_reject(shuffled, cfg.alpha)),
                    ("EUMI", eumi_reject(shuffled, cfg.alpha, u)),
                )
                for method, d in decisions:
                    fh.write(f"{method},{coord},{rep},{int(d.reject)}\n")
    return path


def run_ui_power_experiment(cfg: ExperimentConfig) -> Path:
    """Power of the seven mixture tests on two-component Gaussian data.

    Data are n draws from w1 * N(-mu, 1) + (1 - w1) * N(mu, 1).  Each rep
    computes B split e-values in one batch; the single-split tests read
    the first of them, so every method shares splits and the uniform.
    """
    _require(cfg, "ui_power")
    reps = cfg.resolved_reps()
    root = _experiment_root(cfg)
    n = cfg.ui_n
    path, fh = _open_csv(cfg)
    with fh:
        for gi, mu in enumerate(cfg.resolved_mu_grid()):
            coord = f"{n},{_fmt(float(mu))}"
            for rep in range(reps):
                st = _rep_stream(root, gi, rep)
                data_stream = substream(st, DATA_LABEL)
                comp = uniform_block(data_stream, n)
                z = gaussian_block(data_stream, n)
                data = np.where(comp < cfg.w1, -mu, mu) + z
                u = uniform01(substream(st, U_LABEL))
                es = split_evalues_block(
                    data, cfg.B, rng=substream(st, PERM_LABEL),
                    split_frac=cfg.split_frac, w1=cfg.w1)
                first = es[:1]
                decisions = (
                    ("LRT", goffinet_lrt_reject(data, cfg.alpha, w1=cfg.w1)),
                    ("UI", ui_reject(first, cfg.alpha, rule=UiRule.UI)),
                    ("UMI_UI", ui_reject(first, cfg.alpha, u, rule=UiRule.UMI_UI)),
                    ("SUI", ui_reject(es, cfg.alpha, rule=UiRule.SUI)),
                    ("UMI_SUI", ui_reject(es, cfg.alpha, u, rule=UiRule.UMI_SUI)),
                    ("EMI_SUI", ui_reject(es, cfg.alpha, rule=UiRule.EMI_SUI)),
                    ("EUMI_SUI", ui_reject(es, cfg.alpha, u, rule=UiRule.EUMI_SUI)),
                )
                for method, d in decisions:
                    fh.write(f"{method},{coord},{rep},{int(d.reject)}\n")
    return path


_BETTING_METHODS = ("Ville", "RandVille", "AvMI", "UMI", "EMI", "EUMI")


def run_betting_power_experiment(cfg: ExperimentConfig) -> Path:
    """Power of the six betting rules on Beta(a, b) data for H0: mean = m0.

    Per grid point all reps run through two batched wealth passes: one
    full-trajectory pass in data order for the path-watching rules, and
    chunked permuted passes for the final-wealth rules.  The numbers are
    bitwise identical to per-rep betting_reject calls on the same
    substreams because the recursion is elementwise over rows.
    """
    _require(cfg, "betting_power")
    reps = cfg.resolved_reps()
    root = _experiment_root(cfg)
    alpha, big_b = cfg.alpha, cfg.B
    bar = 1.0 / alpha
    path, fh = _open_csv(cfg)
    with fh:
        for gi, (b_val, n) in enumerate(product(cfg.b_grid, cfg.n_grid)):
            groot = substream(root, gi)
            streams = [substream(groot, rep) for rep in range(reps)]
            data = np.empty((reps, n))
            us = np.empty(reps)
            for r, st in enumerate(streams):
                data[r] = beta_block(substream(st, DATA_LABEL), cfg.beta_a,
                                     float(b_val), n)
                us[r] = uniform01(substream(st, U_LABEL))

            plus, _ = _one_sided_engine(data, cfg.m0, alpha,
                                        default_strategy_lambda, full=True)
            minus, _ = _one_sided_engine(1.0 - data, 1.0 - cfg.m0, alpha,
                                         default_strategy_lambda, full=True)
            paths = 0.5 * (plus + minus)
            ville = paths.max(axis=1) >= bar
            randville = (paths[:, :-1].max(axis=1) >= bar) | (paths[:, -1] >= us / alpha)
            del plus, minus, paths

            avmi = np.empty(reps, dtype=bool)
            umi = np.empty(reps, dtype=bool)
            emi = np.empty(reps, dtype=bool)
            eumi = np.empty(reps, dtype=bool)
            chunk = max(1, _BATCH_ELEMENTS // (big_b * n))
            for lo in range(0, reps, chunk):
                hi = min(lo + chunk, reps)
                c = hi - lo
                perms = np.empty((c, big_b, n), dtype=np.int64)
                for j, st in enumerate(streams[lo:hi]):
                    perms[j] = _draw_permutations(st, big_b, n)
                rows = data[lo:hi][np.arange(c)[:, None, None], perms]
                finals = _combined_finals(rows.reshape(c * big_b, n), cfg.m0,
                                          alpha, default_strategy_lambda)
                finals = finals.reshape(c, big_b)
                means = finals.mean(axis=1)
                avmi[lo:hi] = means >= bar
                umi[lo:hi] = means >= us[lo:hi] / alpha
                prefix = np.cumsum(finals, axis=1) / np.arange(1.0, big_b + 1.0)
                crossed = (prefix >= bar).any(axis=1)
                emi[lo:hi] = crossed
                eumi[lo:hi] = crossed | (finals[:, 0] >= us[lo:hi] / alpha)

            masks = dict(zip(_BETTING_METHODS,
                             (ville, randville, avmi, umi, emi, eumi)))
            coord = f"{_fmt(float(b_val))},{n}"
            for rep in range(reps):
                for method in _BETTING_METHODS:
                    fh.write(f"{method},{coord},{rep},{int(masks[method][rep])}\n")
    return path


_RUNNERS = {
    "gaussian_ci": run_gaussian_ci_experiment,
    "evalue_power": run_evalue_power_experiment,
    "ui_power": run_ui_power_experiment,
    "betting_power": run_betting_power_experiment,
}


def run_experiment(cfg: ExperimentConfig) -> Path:
    return _RUNNERS[cfg.experiment](cfg)
