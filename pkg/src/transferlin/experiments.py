"""Monte Carlo trials, sweeps and universality checks.

A sweep runs ``trials`` independent instances per (grid value, entry law),
reduces them in trial-index order and attaches the asymptotic prediction for
the same parameters.  Each trial draws its randomness from
``derive_trial_seed(master_seed, trial, tag)``, with a tag naming the grid
value and entry law, so the output does not depend on worker count or
completion order.
"""
from __future__ import annotations

import math
import os
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field, replace
from itertools import combinations
from typing import Dict, List, Optional, Sequence

import numpy as np

from .classification import (
    ClassificationEnsemble,
    predict_class_error,
    t_eta_from_noise_ratio,
    invert_w0_error,
    w0_class_error,
    oracle_class_error,
)
from .datagen import (
    ClassificationInstanceSpec,
    EntryDistribution,
    RegressionInstanceSpec,
    derive_trial_seed,
    sample_classification_instance,
    sample_regression_instance,
)
from .errors import DegenerateError, DomainError, TransferLinError
from .regression import RegressionEnsemble, predict_ep
from .solvers import feasibility_residual, min_norm_interpolate, renormalize_alpha
from .spectral import JointSpectralDensity, SpectralDensity, q_tail

FAILURE_LIMIT = 0.10
GAP_THRESHOLD = 3.0
DEFAULT_TRIALS = 20
SPECTRUM_COLUMN = {"bilevel": "genbilvl", "uniform": "genunif", "single": "gensingle"}


# -- metrics -----------------------------------------------------------------


def e_gen_metric(w, w_star, rx_diag):
    """``(w - w*)^T R_x (w - w*)`` for diagonal ``R_x``."""
    delta = np.asarray(w, dtype=float) - np.asarray(w_star, dtype=float)
    rx = np.asarray(rx_diag, dtype=float)
    if delta.shape != rx.shape:
        raise DomainError("w and R_x diagonal shapes differ")
    return float(np.dot(rx * delta, delta))


def class_error_metric(w, mu1, mu2, sigma1, sigma2):
    """Population error of ``sign(x^T w)`` on two Gaussian classes (+1 at mu1, -1 at mu2)."""
    w = np.asarray(w, dtype=float)
    v1 = float(np.dot(np.asarray(sigma1) * w, w))
    v2 = float(np.dot(np.asarray(sigma2) * w, w))
    if not (v1 > 0 and v2 > 0):
        raise DegenerateError("w^T Sigma_i w must be positive", guard="w^T Sigma_i w > 0")
    e1 = q_tail(float(np.dot(mu1, w)) / math.sqrt(v1))
    e2 = q_tail(-float(np.dot(mu2, w)) / math.sqrt(v2))
    return 0.5 * e1 + 0.5 * e2


def class_error_monte_carlo(w, mu1, mu2, sigma1, sigma2, entry=EntryDistribution.GAUSSIAN,
                            test_size=20000, seed=0, batch=2000):
    """Test-set estimate of the same error, drawing ``test_size`` points per class."""
    rng = np.random.default_rng(seed)
    w = np.asarray(w, dtype=float)
    r1, r2 = np.sqrt(sigma1), np.sqrt(sigma2)
    wrong = 0
    done = 0
    while done < test_size:
        m = min(batch, test_size - done)
        g = entry.sample(rng, (m, w.size))
        wrong += int(np.count_nonzero((mu1 + g * r1) @ w <= 0))
        g = entry.sample(rng, (m, w.size))
        wrong += int(np.count_nonzero((mu2 + g * r2) @ w > 0))
        done += m
    return wrong / (2.0 * test_size)


# -- trials ------------------------------------------------------------------


@dataclass(frozen=True)
class TrialReport:
    seed: int
    entry: str
    metric: float
    init_metric: float
    residual: float
    solve_time: float
    failed: bool = False
    reason: Optional[str] = None


def _failed(spec, exc, started):
    return TrialReport(
        seed=spec.seed, entry=spec.entry.value, metric=math.nan, init_metric=math.nan,
        residual=math.nan, solve_time=time.perf_counter() - started, failed=True,
        reason=f"{type(exc).__name__}: {exc}",
    )


def run_regression_trial(spec: RegressionInstanceSpec) -> TrialReport:
    started = time.perf_counter()
    try:
        inst = sample_regression_instance(spec)
        w = min_norm_interpolate(inst.X, inst.y, inst.w0)
        metric = e_gen_metric(w, inst.w_star, inst.rx_diag)
        init = e_gen_metric(inst.w0, inst.w_star, inst.rx_diag)
        res = feasibility_residual(inst.X, inst.y, w)
    except (TransferLinError, np.linalg.LinAlgError) as exc:
        return _failed(spec, exc, started)
    return TrialReport(spec.seed, spec.entry.value, metric, init, res, time.perf_counter() - started)


def run_classification_trial(spec: ClassificationInstanceSpec) -> TrialReport:
    started = time.perf_counter()
    try:
        inst = sample_classification_instance(spec)
        s1, s2 = inst.sigma_diags
        _, start = renormalize_alpha(inst.X, inst.y, inst.w0)
        w = min_norm_interpolate(inst.X, inst.y, start)
        metric = class_error_metric(w, inst.mu1, inst.mu2, s1, s2)
        init = class_error_metric(inst.w0, inst.mu1, inst.mu2, s1, s2)
        res = feasibility_residual(inst.X, inst.y, w)
    except (TransferLinError, np.linalg.LinAlgError) as exc:
        return _failed(spec, exc, started)
    return TrialReport(spec.seed, spec.entry.value, metric, init, res, time.perf_counter() - started)


# -- sweep parameters ----------------------------------------------------------


@dataclass(frozen=True, eq=False)
class RegressionSetup:
    """Fixed parameters of a regression sweep; ``kappa`` or ``sigma`` may be swept."""

    d: int = 1000
    kappa: float = 2.0
    sigma: float = 0.15
    e_a: float = 1.0
    p: SpectralDensity = field(default_factory=lambda: SpectralDensity.single(1.0))
    spectrum_name: str = "single"
    noise: str = "gauss"

    mode = "reg"
    variables = ("kappa", "sigma")

    def at(self, variable, x):
        if variable not in self.variables:
            raise DomainError(f"regression sweeps vary kappa or sigma, not '{variable}'")
        return replace(self, **{variable: float(x)})

    @property
    def n(self):
        return int(round(self.d / self.kappa))

    def instance_spec(self, entry, seed):
        return RegressionInstanceSpec(
            n=self.n, d=self.d, p=self.p, sigma2=self.sigma ** 2, e_a=self.e_a,
            entry=entry, seed=seed, noise=self.noise,
        )

    def theory(self):
        """``(e_p, lower bound)`` at the realised ratio ``d / n``."""
        pred = predict_ep(RegressionEnsemble(self.d / self.n, self.sigma ** 2, self.e_a, self.p))
        return pred.e_p, pred.lower_bound


@dataclass(frozen=True, eq=False)
class ClassificationSetup:
    """Scalar-covariance classification sweep; ``kappa`` or ``rho`` may be swept.

    The pretrained start is set either by the norm ratio ``c`` between the
    noise and signal parts of ``w0`` or by a target initialization error
    ``e_a`` (which takes precedence when given).
    """

    d: int = 1000
    kappa: float = 2.0
    rho: float = 1.0
    r: float = 0.9
    c: float = 1.0
    e_a: Optional[float] = None

    mode = "class"
    variables = ("kappa", "rho")

    def at(self, variable, x):
        if variable not in self.variables:
            raise DomainError(f"classification sweeps vary kappa or rho, not '{variable}'")
        return replace(self, **{variable: float(x)})

    @property
    def n(self):
        return max(2, 2 * int(round(self.d / self.kappa / 2.0)))

    @property
    def sigma2(self):
        return self.n * (1.0 - self.r) / self.rho

    def ensemble(self):
        spectra = JointSpectralDensity.scalar(self.sigma2, self.d)
        if self.e_a is not None:
            t_eta = invert_w0_error(self.e_a, spectra, self.r)
        else:
            t_eta = t_eta_from_noise_ratio(self.c, spectra)
        return ClassificationEnsemble(self.n, self.d, self.r, 1.0, t_eta, spectra)

    def instance_spec(self, entry, seed):
        ens = self.ensemble()
        return ClassificationInstanceSpec(
            n=self.n, d=self.d, r=self.r, sigma2=self.sigma2, t_star=1.0,
            t_eta=ens.t_eta, entry=entry, seed=seed,
        )

    def theory(self):
        """``(predicted error, initialization error)``."""
        ens = self.ensemble()
        return predict_class_error(ens).error, w0_class_error(ens)

    def oracle(self):
        return oracle_class_error(JointSpectralDensity.scalar(self.sigma2, self.d), self.r)


# -- sweeps ------------------------------------------------------------------


@dataclass
class SweepRow:
    x: float
    means: Dict[str, float]
    stderrs: Dict[str, float]
    init_means: Dict[str, float]
    ok: Dict[str, int]
    failed: Dict[str, int]
    theory: float
    second: float
    reasons: List[str] = field(default_factory=list)


@dataclass
class SweepTable:
    mode: str
    variable: str
    distributions: List[str]
    rows: List[SweepRow]
    trials: int
    master_seed: int
    theory_name: str = "theory"
    second_name: str = "second"
    reports: Dict = field(default_factory=dict, repr=False)

    def failures(self):
        out = []
        for row in self.rows:
            for reason in row.reasons:
                out.append(f"{self.variable}={row.x!r}: {reason}")
        return out


def _trial_tag(mode, variable, x, entry):
    return f"{mode}:{variable}={float(x)!r}:{entry.value}"


def _run_task(task):
    setup, variable, x, entry, seed = task
    try:
        spec = setup.at(variable, x).instance_spec(entry, seed)
    except TransferLinError as exc:
        return TrialReport(seed, entry.value, math.nan, math.nan, math.nan, 0.0, True,
                           f"{type(exc).__name__}: {exc}")
    if setup.mode == "reg":
        return run_regression_trial(spec)
    return run_classification_trial(spec)


def _aggregate(values):
    vals = np.asarray(values, dtype=float)
    k = vals.size
    if k == 0:
        return math.nan, math.nan
    mean = float(np.mean(vals))
    se = float(np.std(vals, ddof=1) / math.sqrt(k)) if k > 1 else 0.0
    return mean, se


def run_sweep(setup, variable, grid, trials=DEFAULT_TRIALS, distributions=None,
              master_seed=0, workers=1, keep_reports=False):
    """Sweep ``variable`` over ``grid`` and aggregate the trials per entry law.

    ``workers > 1`` farms trials out to a process pool; results are reduced in
    task order so the table is identical for any worker count.
    """
    grid = sorted(float(g) for g in grid)
    if not grid:
        raise DomainError("grid must be nonempty")
    if trials < 1:
        raise DomainError("trials must be positive")
    if distributions is None:
        distributions = list(EntryDistribution)
    distributions = [EntryDistribution.parse(e) if not isinstance(e, EntryDistribution) else e
                     for e in distributions]
    setup.at(variable, grid[0])  # validates the variable name

    tasks = []
    for x in grid:
        for entry in distributions:
            tag = _trial_tag(setup.mode, variable, x, entry)
            for t in range(trials):
                tasks.append((setup, variable, x, entry, derive_trial_seed(master_seed, t, tag)))

    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            results = list(pool.map(_run_task, tasks, chunksize=max(1, len(tasks) // (8 * workers))))
    else:
        results = [_run_task(t) for t in tasks]

    tags = [e.value for e in distributions]
    rows = []
    reports = {}
    pos = 0
    for x in grid:
        row = SweepRow(x=x, means={}, stderrs={}, init_means={}, ok={}, failed={},
                       theory=math.nan, second=math.nan)
        for entry in distributions:
            chunk = results[pos:pos + trials]
            pos += trials
            if keep_reports:
                reports[(x, entry.value)] = chunk
            good = [r for r in chunk if not r.failed]
            bad = [r for r in chunk if r.failed]
            row.ok[entry.value] = len(good)
            row.failed[entry.value] = len(bad)
            if len(bad) > FAILURE_LIMIT * trials:
                row.means[entry.value] = row.stderrs[entry.value] = math.nan
                row.init_means[entry.value] = math.nan
                row.reasons.append(
                    f"{entry.value}: {len(bad)}/{trials} trials failed ({bad[0].reason})"
                )
                continue
            if bad:
                row.reasons.append(f"{entry.value}: {len(bad)}/{trials} trials failed ({bad[0].reason})")
            row.means[entry.value], row.stderrs[entry.value] = _aggregate([r.metric for r in good])
            row.init_means[entry.value] = _aggregate([r.init_metric for r in good])[0]
        try:
            row.theory, row.second = setup.at(variable, x).theory()
        except TransferLinError as exc:
            row.reasons.append(f"theory: {type(exc).__name__}: {exc}")
        rows.append(row)

    if setup.mode == "reg":
        names = (SPECTRUM_COLUMN.get(setup.spectrum_name, "genThm"), "genlwrbnd")
    else:
        names = ("epThm", "eaThm")
    return SweepTable(setup.mode, variable, tags, rows, trials, master_seed,
                      theory_name=names[0], second_name=names[1], reports=reports)


# -- universality --------------------------------------------------------------


def standardized_gap(m1, s1, m2, s2):
    num = abs(m1 - m2)
    den = math.sqrt(s1 * s1 + s2 * s2)
    if num == 0.0:
        return 0.0
    if den == 0.0:
        return math.inf
    return num / den


@dataclass
class UniversalityReport:
    variable: str
    pair_gaps: List[tuple]
    theory_gaps: List[tuple]
    threshold: float = GAP_THRESHOLD

    @property
    def flagged(self):
        pairs = [g for g in self.pair_gaps if not g[3] <= self.threshold]
        theory = [g for g in self.theory_gaps if not g[2] <= self.threshold]
        return pairs + theory

    @property
    def max_pair_gap(self):
        vals = [g[3] for g in self.pair_gaps if not math.isnan(g[3])]
        return max(vals) if vals else math.nan

    def format(self):
        lines = [f"universality over {self.variable}: max pairwise gap {self.max_pair_gap:.3f}"]
        for x, a, b, g in self.pair_gaps:
            mark = "  FLAG" if not g <= self.threshold else ""
            lines.append(f"  {self.variable}={x:<8g} {a:>5} vs {b:<5} gap {g:7.3f}{mark}")
        for x, a, g in self.theory_gaps:
            mark = "  FLAG" if not g <= self.threshold else ""
            lines.append(f"  {self.variable}={x:<8g} {a:>5} vs theory gap {g:7.3f}{mark}")
        return "\n".join(lines)


def universality_report(table: SweepTable, threshold=GAP_THRESHOLD) -> UniversalityReport:
    """Standardized gaps between entry laws, and from each law to the theory column."""
    if len(table.distributions) < 2:
        raise DomainError("universality needs at least two distributions")
    pairs, theory = [], []
    for row in table.rows:
        # positional pairs so a law listed twice still compares against itself
        keys = list(enumerate(table.distributions))
        for (i, a), (j, b) in combinations(keys, 2):
            g = standardized_gap(row.means[a], row.stderrs[a], row.means[b], row.stderrs[b])
            pairs.append((row.x, a, b, g))
        for a in dict.fromkeys(table.distributions):
            theory.append((row.x, a, standardized_gap(row.means[a], row.stderrs[a], row.theory, 0.0)))
    return UniversalityReport(table.variable, pairs, theory, threshold)


# -- output files --------------------------------------------------------------


def _fmt(v):
    return "nan" if v is None or (isinstance(v, float) and math.isnan(v)) else repr(float(v))


def dat_columns(table: SweepTable):
    tags = list(dict.fromkeys(table.distributions))
    col = {e.value: e.column_tag for e in EntryDistribution}
    if table.mode == "reg":
        return [table.variable] + [f"gen{col[t]}" for t in tags] + [table.theory_name, table.second_name]
    return ([table.variable, f"ea{col[tags[0]]}"] + [f"ep{col[t]}" for t in tags] + [table.theory_name])


def format_dat(table: SweepTable):
    tags = list(dict.fromkeys(table.distributions))
    lines = [" ".join(dat_columns(table))]
    for row in table.rows:
        if table.mode == "reg":
            vals = [row.x] + [row.means[t] for t in tags] + [row.theory, row.second]
        else:
            vals = [row.x, row.init_means[tags[0]]] + [row.means[t] for t in tags] + [row.theory]
        lines.append(" ".join(_fmt(v) for v in vals))
    return "\n".join(lines) + "\n"


def format_csv(table: SweepTable):
    tags = list(dict.fromkeys(table.distributions))
    head = [table.variable]
    for t in tags:
        head += [f"mean_{t}", f"stderr_{t}", f"init_{t}", f"ok_{t}", f"failed_{t}"]
    head += [table.theory_name, table.second_name, "status"]
    lines = [",".join(head)]
    for row in table.rows:
        vals = [_fmt(row.x)]
        for t in tags:
            vals += [_fmt(row.means[t]), _fmt(row.stderrs[t]), _fmt(row.init_means[t]),
                     str(row.ok[t]), str(row.failed[t])]
        status = "; ".join(row.reasons).replace(",", ";") if row.reasons else "ok"
        vals += [_fmt(row.theory), _fmt(row.second), status]
        lines.append(",".join(vals))
    return "\n".join(lines) + "\n"


def write_table(table: SweepTable, directory, stem):
    """Write ``stem.dat`` and ``stem.csv``; returns the two paths."""
    os.makedirs(directory, exist_ok=True)
    dat = os.path.join(directory, stem + ".dat")
    csv = os.path.join(directory, stem + ".csv")
    with open(dat, "w", newline="\n") as fh:
        fh.write(format_dat(table))
    with open(csv, "w", newline="\n") as fh:
        fh.write(format_csv(table))
    return dat, csv


def write_manifest(path, config_text, tables):
    """Echo the run configuration and every flagged failure next to the data."""
    lines = ["# run configuration", config_text.rstrip(), "", "# failures"]
    n_fail = 0
    for stem, table in tables:
        for f in table.failures():
            lines.append(f"{stem}: {f}")
            n_fail += 1
    if n_fail == 0:
        lines.append("none")
    with open(path, "w", newline="\n") as fh:
        fh.write("\n".join(lines) + "\n")
    return path


def write_gnuplot(table: SweepTable, dat_path, path):
    cols = dat_columns(table)
    name = os.path.basename(dat_path)
    empirical = {f"{pre}{e.column_tag}" for e in EntryDistribution for pre in ("gen", "ep")}
    plots = [
        f"'{name}' using 1:{i + 1} with {'points' if c in empirical else 'lines'} title '{c}'"
        for i, c in enumerate(cols) if i > 0
    ]
    text = "\n".join([
        "set key autotitle columnhead",
        f"set xlabel '{table.variable}'",
        "plot " + ", \\\n     ".join(plots),
    ])
    with open(path, "w", newline="\n") as fh:
        fh.write(text + "\n")
    return path


# -- figure recipes ------------------------------------------------------------

KAPPA_GRID = (1.25, 1.5, 2.0, 2.5, 3.0, 4.0, 5.0)
RHO_GRID = (0.01, 0.1, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0)
SIGMA_TAGS = ((0.01, "1e-2"), (0.15, "15e-2"), (2.0, "2"))


def figure_recipes(figure):
    """``[(stem, setup, variable, grid)]`` for a pinned figure configuration."""
    if figure in ("fig1", "fig2"):
        name, tag = ("bilevel", "bilevel") if figure == "fig1" else ("uniform", "unif")
        from .spectral import NAMED_DENSITIES
        p = NAMED_DENSITIES[name]()
        return [
            (f"regsig{stag}{tag}r0=1r1=5",
             RegressionSetup(d=1000, sigma=sig, e_a=1.0, p=p, spectrum_name=name),
             "kappa", KAPPA_GRID)
            for sig, stag in SIGMA_TAGS
        ]
    if figure == "fig3":
        return [
            ("class_kap_rho1", ClassificationSetup(d=1000, rho=1.0, r=0.9, c=4.0), "kappa", KAPPA_GRID),
            ("class_kap_rho2c0.5", ClassificationSetup(d=1000, rho=2.0, r=0.9, c=0.5), "kappa", KAPPA_GRID),
            ("class_rho_kap2c1", ClassificationSetup(d=1000, kappa=2.0, r=0.9, c=1.0), "rho", RHO_GRID),
        ]
    raise DomainError(f"unknown figure '{figure}' (expected fig1, fig2 or fig3)")
