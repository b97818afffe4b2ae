"""Synthetic Lasso benchmark: data generation, solver comparison, CSV traces.

Scenarios follow a 2 x 2 x 2 design: problem scale, column correlation
(low: i.i.d. N(0, 1/n) entries; high: AR(1) rows calibrated so the average
absolute column correlation is 8x the low-correlation baseline), and
regularization strength (low targets a support of 0.5 min(n, p) nonzeros,
high targets 0.01 min(n, p)). Targets are ``y = X w_true + noise`` with the
noise variance set to ``0.01 ||X w_true||^2 / n``.

Randomness is split deterministically: the scenario seed spawns three
substreams (design, true weights, noise), so a given spec always
regenerates bit-identical data within this build.
"""

import dataclasses
import functools
import json
import math
import os
from dataclasses import dataclass

import numpy as np

from .exceptions import SingularGram, TieDetected, UnknownSolver, ValidationError
from .homotopy import lasso_path, solve_homotopy
from .penalties import L1
from .problem import Problem, SQUARE
from .solvers import SOLVERS, SolverConfig

#: seeds used to calibrate the AR(1) correlation parameter, fixed per build
_CAL_SEEDS = (1_000_003, 1_000_033, 1_000_037)
#: number of repetitions per benchmark experiment
N_RUNS = 5

LOW, HIGH = "low", "high"


@dataclass(frozen=True)
class ScenarioSpec:
    n: int
    p: int
    correlation: str = LOW
    regularization: str = HIGH
    seed: int = 0
    noise_scale: float = 0.01

    def __post_init__(self):
        if self.n < 1 or self.p < 1:
            raise ValidationError("n and p must be >= 1")
        if self.correlation not in (LOW, HIGH):
            raise ValidationError("correlation must be 'low' or 'high'")
        if self.regularization not in (LOW, HIGH):
            raise ValidationError("regularization must be 'low' or 'high'")


def target_sparsity(spec):
    frac = 0.5 if spec.regularization == LOW else 0.01
    return max(1, int(round(frac * min(spec.n, spec.p))))


def mean_abs_correlation(X):
    """Average absolute off-diagonal correlation between columns."""
    C = np.corrcoef(X, rowvar=False)
    p = C.shape[0]
    mask = ~np.eye(p, dtype=bool)
    return float(np.abs(C[mask]).mean())


def _iid_design(rng, n, p):
    return rng.standard_normal((n, p)) / math.sqrt(n)


def _ar1_chol(p, rho):
    Sigma = rho ** np.abs(np.subtract.outer(np.arange(p), np.arange(p)))
    return np.linalg.cholesky(Sigma)


@functools.lru_cache(maxsize=32)
def calibrate_rho(n, p, ratio=8.0):
    """AR(1) parameter giving ``ratio`` times the i.i.d. mean |correlation|.

    Bisection on rho against the statistic measured on fixed calibration
    draws, reusing the same standard-normal matrices across evaluations so
    the objective is continuous in rho.
    """
    Zs = [
        np.random.default_rng(s).standard_normal((n, p)) for s in _CAL_SEEDS
    ]
    baseline = float(
        np.mean([mean_abs_correlation(Z / math.sqrt(n)) for Z in Zs])
    )
    target = ratio * baseline

    def stat(rho):
        L = _ar1_chol(p, rho)
        return float(
            np.mean(
                [mean_abs_correlation(Z @ L.T / math.sqrt(n)) for Z in Zs]
            )
        )

    lo, hi = 0.0, 0.9999
    if stat(hi) <= target:
        return hi
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if stat(mid) < target:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def generate_scenario(spec):
    """Synthetic data for one scenario: ``(X, y, w_true, lambda_suggested)``.

    ``lambda_suggested`` is tuned so the Lasso solution carries roughly the
    scenario's target number of nonzeros (within 10% where attainable),
    read off the homotopy path.
    """
    root = np.random.SeedSequence(spec.seed)
    ss_X, ss_w, ss_noise = root.spawn(3)
    rng_X = np.random.default_rng(ss_X)
    rng_w = np.random.default_rng(ss_w)
    rng_noise = np.random.default_rng(ss_noise)

    n, p = spec.n, spec.p
    if spec.correlation == LOW:
        X = _iid_design(rng_X, n, p)
    else:
        rho = calibrate_rho(n, p)
        L = _ar1_chol(p, rho)
        X = (rng_X.standard_normal((n, p)) @ L.T) / math.sqrt(n)

    s = target_sparsity(spec)
    w_true = np.zeros(p)
    sel = rng_w.choice(p, size=s, replace=False)
    vals = rng_w.uniform(-1.0, 1.0, size=s)
    while not np.any(vals):
        vals = rng_w.uniform(-1.0, 1.0, size=s)
    w_true[sel] = vals / np.linalg.norm(vals)

    signal = X @ w_true
    sigma = math.sqrt(spec.noise_scale * float(signal @ signal) / n)
    y = signal + rng_noise.normal(0.0, sigma, size=n)

    lam = suggest_lambda(X, y, s)
    return X, y, w_true, lam


def suggest_lambda(X, y, s):
    """Lambda whose Lasso support size is closest to ``s`` (within +-10%
    when the path exposes such a segment), taken at a segment midpoint."""
    n = X.shape[0]
    lam_max = float(np.abs(X.T @ y).max()) / n
    try:
        path = lasso_path(
            X, y, lambda_min=1e-4 * lam_max, max_kinks=4 * s + 100
        )
    except (SingularGram, TieDetected):
        return _bisect_lambda(X, y, s, lam_max)
    best, best_err = None, math.inf
    for seg in path.segments:
        nnz = len(seg.active)
        err = abs(nnz - s)
        if err < best_err:
            best_err = err
            best = 0.5 * (seg.lambda_high + seg.lambda_low)
            if err <= 0.1 * s:
                break
    return best if best is not None else 0.5 * lam_max


def _bisect_lambda(X, y, s, lam_max, iters=30):
    from .solvers import solve_cd

    lo, hi = 1e-4 * lam_max, lam_max
    cfg = SolverConfig(tol=1e-4, max_iter=2000)
    lam = 0.5 * lam_max
    for _ in range(iters):
        lam = math.sqrt(lo * hi)
        prob = Problem(SQUARE, X, y, lam, L1())
        nnz = int(np.count_nonzero(solve_cd(prob, cfg).final_w))
        if abs(nnz - s) <= max(1, 0.1 * s):
            break
        if nnz > s:
            lo = lam
        else:
            hi = lam
    return lam


def run_benchmark(scenario, solvers, tol=1e-6, budget_seconds=600.0, n_runs=N_RUNS):
    """Run each named solver on the same data over ``n_runs`` seeds.

    Returns one trace per (solver, run). Traces carry
    ``meta["rel_objective"]``, the per-record relative objective
    ``(F_t - F_best) / |F_best|`` against the best final objective over all
    solvers of the same run, plus ``meta["solver"]`` and ``meta["seed"]``.
    """
    for name in solvers:
        if name != "homotopy" and name not in SOLVERS:
            raise UnknownSolver(name)
    all_traces = []
    for k in range(n_runs):
        spec = dataclasses.replace(scenario, seed=scenario.seed + k)
        X, y, _w_true, lam = generate_scenario(spec)
        problem = Problem(SQUARE, X, y, lam, L1()).validate()
        config = SolverConfig(tol=tol, max_seconds=budget_seconds)
        run_traces = []
        for name in solvers:
            if name == "homotopy":
                trace = solve_homotopy(problem, config)
            elif name == "sg":
                cfg = dataclasses.replace(
                    config, **grid_search_sg_step(problem)
                )
                trace = SOLVERS[name](problem, cfg)
            else:
                trace = SOLVERS[name](problem, config)
            trace.meta["solver"] = name
            trace.meta["seed"] = spec.seed
            run_traces.append(trace)
        f_best = min(t.objectives[-1] for t in run_traces)
        denom = max(abs(f_best), np.finfo(float).tiny)
        for t in run_traces:
            t.meta["rel_objective"] = [
                (o - f_best) / denom for o in t.objectives
            ]
        all_traces.extend(run_traces)
    return all_traces


def grid_search_sg_step(problem, grid_iters=500):
    """Best subgradient stepsize ``a/(t+b)`` on a logarithmic grid, judged
    by the objective after a fixed number of iterations."""
    from .solvers import solve_subgradient

    best = None
    best_obj = math.inf
    for a in (1e-3, 1e-2, 1e-1, 1.0, 10.0):
        for b in (1e2, 1e3, 1e4):
            cfg = SolverConfig(
                tol=0.0, max_iter=grid_iters, max_seconds=60.0,
                sg_a=a, sg_b=b, sg_beta=1.0,
            )
            obj = solve_subgradient(problem, cfg).objectives[-1]
            if obj < best_obj:
                best_obj = obj
                best = {"sg_a": a, "sg_b": b, "sg_beta": 1.0}
    return best


def time_to_threshold(trace, threshold):
    """Earliest recorded time at which the relative objective is below the
    threshold; +inf when never reached."""
    rel = trace.meta.get("rel_objective")
    if rel is None:
        return math.inf
    for r, t in zip(rel, trace.times):
        if r <= threshold:
            return t
    return math.inf


def median_time_to_threshold(traces, solver, threshold):
    times = [
        time_to_threshold(t, threshold)
        for t in traces
        if t.meta.get("solver") == solver
    ]
    return float(np.median(times)) if times else math.inf


def _fmt(x):
    if x is None:
        return ""
    return format(float(x), ".17g")


def write_traces(traces, path, scenario=None, no_timing=False):
    """One CSV per trace plus a plain-text JSON manifest.

    CSV columns: ``iter,time_s,objective,rel_objective,duality_gap`` with
    floats at 17 significant digits (exact round-trip); absent gaps are
    empty fields. ``no_timing`` zeroes the time column so repeated runs
    are byte-identical.
    """
    os.makedirs(path, exist_ok=True)
    files = []
    for trace in traces:
        solver = trace.meta.get("solver", "solver")
        seed = trace.meta.get("seed", 0)
        name = "%s_seed%s.csv" % (solver, seed)
        rel = trace.meta.get("rel_objective")
        lines = ["iter,time_s,objective,rel_objective,duality_gap"]
        for i, rec in enumerate(trace.records):
            t = 0.0 if no_timing else rec.elapsed_seconds
            r = rel[i] if rel is not None else None
            lines.append(
                "%d,%s,%s,%s,%s"
                % (
                    rec.iteration,
                    _fmt(t),
                    _fmt(rec.objective),
                    _fmt(r),
                    _fmt(rec.duality_gap),
                )
            )
        fname = os.path.join(path, name)
        with open(fname, "w") as fh:
            fh.write("\n".join(lines) + "\n")
        files.append(name)
    manifest = {
        "files": sorted(files),
        "n_traces": len(traces),
        "seeds": sorted({t.meta.get("seed", 0) for t in traces}),
        "solvers": sorted({t.meta.get("solver", "") for t in traces}),
        "no_timing": bool(no_timing),
    }
    if scenario is not None:
        manifest["scenario"] = dataclasses.asdict(scenario)
    if not no_timing:
        medians = {}
        for solver in manifest["solvers"]:
            medians[solver] = {
                "median_time_to_1e-6": median_time_to_threshold(
                    traces, solver, 1e-6
                )
            }
        manifest["median_seconds"] = medians
    with open(os.path.join(path, "manifest.json"), "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True, default=str)
        fh.write("\n")


def read_trace_csv(fname):
    """Parse a trace CSV back into (iters, times, objectives, rels, gaps)."""
    iters, times, objs, rels, gaps = [], [], [], [], []
    with open(fname) as fh:
        header = fh.readline()
        assert header.strip() == "iter,time_s,objective,rel_objective,duality_gap"
        for line in fh:
            it, t, o, r, g = line.rstrip("\n").split(",")
            iters.append(int(it))
            times.append(float(t) if t else None)
            objs.append(float(o) if o else None)
            rels.append(float(r) if r else None)
            gaps.append(float(g) if g else None)
    return iters, times, objs, rels, gaps
