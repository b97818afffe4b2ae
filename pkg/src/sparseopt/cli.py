"""Command-line entry points: ``sparseopt-bench`` and ``sparseopt-solve``.

Exit codes: 0 on success, 2 on validation errors (bad arguments, malformed
input files, inconsistent problem data), 3 on solver failures.
"""

import argparse
import sys

import numpy as np

from . import bench
from .exceptions import SparseOptError, UnknownSolver, ValidationError
from .groups import Group, GroupStructure, PARTITION, TREE
from .penalties import (
    ElasticNet,
    GroupL1L2,
    GroupL1Linf,
    HierL1L2,
    HierL1Linf,
    L1,
)
from .problem import Problem
from .solvers import SolverConfig, get_solver

_SCALES = {"small": (200, 200), "medium": (2000, 10000)}


def main_bench(argv=None):
    parser = argparse.ArgumentParser(
        prog="sparseopt-bench",
        description="Synthetic Lasso speed benchmark with CSV trace output.",
    )
    parser.add_argument("--scenario", choices=sorted(_SCALES), default="small")
    parser.add_argument("--corr", choices=["low", "high"], default="low")
    parser.add_argument("--reg", choices=["low", "high"], default="high")
    parser.add_argument(
        "--solvers",
        default="fista,ista,cd,sg,rel2,homotopy",
        help="comma-separated solver names",
    )
    parser.add_argument("--tol", type=float, default=1e-6)
    parser.add_argument("--budget", type=float, default=600.0)
    parser.add_argument("--seed", type=int, default=0)
    parser.add_argument("--runs", type=int, default=bench.N_RUNS)
    parser.add_argument("--out", required=True)
    parser.add_argument(
        "--no-timing",
        action="store_true",
        help="zero the time column and ignore wall-clock budgets so "
        "repeated runs emit byte-identical CSVs",
    )
    args = parser.parse_args(argv)
    solvers = [s for s in args.solvers.split(",") if s]
    n, p = _SCALES[args.scenario]
    try:
        scenario = bench.ScenarioSpec(
            n=n, p=p, correlation=args.corr,
            regularization=args.reg, seed=args.seed,
        )
        budget = float("inf") if args.no_timing else args.budget
        traces = bench.run_benchmark(
            scenario, solvers, tol=args.tol,
            budget_seconds=budget, n_runs=args.runs,
        )
    except (ValidationError, UnknownSolver) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    except SparseOptError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    bench.write_traces(traces, args.out, scenario=scenario, no_timing=args.no_timing)
    print("wrote %d traces to %s" % (len(traces), args.out))
    return 0


def _load_csv_matrix(path):
    data = np.loadtxt(path, delimiter=",", ndmin=2)
    return np.asarray(data, dtype=float)


def parse_groups_file(path, p, kind):
    """Read ``weight: i1 i2 i3 ...`` lines into a GroupStructure."""
    groups = []
    with open(path) as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.strip()
            if not line or line.startswith("#"):
                continue
            try:
                weight_part, idx_part = line.split(":", 1)
                weight = float(weight_part)
                indices = tuple(sorted(int(t) for t in idx_part.split()))
            except ValueError as exc:
                raise ValidationError(
                    "%s:%d: malformed group line (%s)" % (path, lineno, exc)
                ) from None
            groups.append(Group(indices, weight))
    return GroupStructure(tuple(groups), kind, p)


def _build_penalty(args, p):
    name = args.penalty
    if name == "l1":
        return L1()
    if name == "en":
        return ElasticNet(args.gamma)
    if name in ("gl2", "glinf", "hier", "hierinf"):
        if not args.groups:
            raise ValidationError("--groups is required for group penalties")
        kind = PARTITION if name in ("gl2", "glinf") else TREE
        gs = parse_groups_file(args.groups, p, kind)
        cls = {
            "gl2": GroupL1L2,
            "glinf": GroupL1Linf,
            "hier": HierL1L2,
            "hierinf": HierL1Linf,
        }[name]
        return cls(gs)
    raise ValidationError("unknown penalty %r" % name)


def main_solve(argv=None):
    parser = argparse.ArgumentParser(
        prog="sparseopt-solve",
        description="Solve one penalized regression problem from CSV inputs.",
    )
    parser.add_argument("--x", required=True, help="design matrix CSV (n rows)")
    parser.add_argument("--y", required=True, help="response CSV (n values)")
    parser.add_argument("--loss", choices=["square", "logistic"], default="square")
    parser.add_argument(
        "--penalty", choices=["l1", "en", "gl2", "glinf", "hier", "hierinf"],
        default="l1",
    )
    parser.add_argument("--lambda", dest="lam", type=float, required=True)
    parser.add_argument("--gamma", type=float, default=1.0,
                        help="elastic net quadratic weight")
    parser.add_argument("--groups", help="one group per line: 'weight: i1 i2 ...'")
    parser.add_argument("--solver", default="fista")
    parser.add_argument("--tol", type=float, default=1e-6)
    parser.add_argument("--max-iter", type=int, default=100_000)
    parser.add_argument("--out", help="write coefficients here instead of stdout")
    args = parser.parse_args(argv)
    try:
        X = _load_csv_matrix(args.x)
        y = np.loadtxt(args.y, delimiter=",").ravel()
        penalty = _build_penalty(args, X.shape[1])
        problem = Problem(args.loss, X, y, args.lam, penalty).validate()
        if args.solver == "homotopy":
            from .homotopy import solve_homotopy as solver_fn
        else:
            solver_fn = get_solver(args.solver)
        config = SolverConfig(tol=args.tol, max_iter=args.max_iter)
    except (ValidationError, UnknownSolver, OSError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 2
    try:
        trace = solver_fn(problem, config)
    except SparseOptError as exc:
        print("solver failure: %s" % exc, file=sys.stderr)
        return 3
    lines = [format(v, ".17g") for v in trace.final_w]
    text = "\n".join(lines) + "\n"
    if args.out:
        with open(args.out, "w") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    last = trace.records[-1]
    gap = "" if last.duality_gap is None else format(last.duality_gap, ".3e")
    print(
        "objective=%.12g gap=%s converged=%s"
        % (last.objective, gap, trace.converged),
        file=sys.stderr,
    )
    return 0 if trace.converged else 3


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main_bench())
