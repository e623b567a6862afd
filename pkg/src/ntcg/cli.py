"""Benchmark command line: data ingestion, variant presets, reporting.

``ntcg solve`` runs one of five solver presets on an NLS dataset (LIBSVM
format) or a synthetic diagnostic, writes one CSV per repeat plus an
aggregate JSON (mean trajectory and 1-standard-deviation band keyed on
cumulative oracle calls), and exits nonzero only when a run ends in a
contract violation.

Presets:
  full              exact gradients, Hessians, and function values
  subh              exact gradient/function, Hessian batch 0.01 n
  inexact-full-eval gradient batch 0.05 n (adaptive, factor 1.2), Hessian
                    batch 0.01 n, exact line-search objective
  inexact-fixed     same batches, predefined steps (defaults 0.2 for
                    Newton-type steps, 0.04 for curvature steps)
  inexact-sub-eval  like full-eval but the line-search objective is
                    estimated on the gradient batch; heuristic, outside
                    the decrease guarantees, and usually the fastest

All presets skip the small-step oracle block by default (the practical
choice); pass --no-skip-small-step-block to run the faithful control flow.
Config files are flat ``key = value`` text; command-line flags win.

Repeats use consecutive seeds and run serially, one generator per repeat,
so outputs are reproducible byte for byte.
"""

import argparse
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import solver
from .exceptions import ContractViolation, LibSVMFormatError
from .libsvm import load_libsvm
from .problems import (
    SIGMOID,
    TANH,
    WELSCH,
    NLSProblem,
    QuadraticProblem,
    SaddleProblem,
    constants_for,
)
from .reporting import aggregate_runs, write_aggregate_json, write_run_csv
from .sampling import EXACT, SUB_BOTH, SUB_HESSIAN_ONLY, SamplingPolicy

PROBLEMS = ("nls-sigmoid", "nls-tanh", "nls-welsch", "quadratic", "saddle")
VARIANTS = ("full", "subh", "inexact-full-eval", "inexact-fixed", "inexact-sub-eval")

EXIT_OK = 0
EXIT_CONTRACT_VIOLATION = 2


@dataclass
class ExperimentSpec:
    problem: str
    variant: str
    data: str = None
    out: str = "."
    eps: float = 1e-3
    eps_h: float = None
    seed: int = 0
    repeats: int = 1
    audit: bool = False
    skip_small_step_block: bool = True
    dim: int = 10
    max_iters: int = 10_000
    welsch_alpha: float = 1.0
    alpha_sol: float = None
    alpha_nc: float = None
    sparse: bool = False
    overrides: dict = field(default_factory=dict)

    def __post_init__(self):
        if self.problem not in PROBLEMS:
            raise ValueError("unknown problem %r" % (self.problem,))
        if self.variant not in VARIANTS:
            raise ValueError("unknown variant %r" % (self.variant,))
        if self.repeats < 1:
            raise ValueError("repeats must be >= 1")
        if self.problem.startswith("nls-") and not self.data:
            raise ValueError("problem %r needs --data" % (self.problem,))


def build_problem(spec):
    """Returns (problem, constants, x0)."""
    if spec.problem.startswith("nls-"):
        link = {"nls-sigmoid": SIGMOID, "nls-tanh": TANH, "nls-welsch": WELSCH}[
            spec.problem
        ]
        A, b = load_libsvm(spec.data, sparse=spec.sparse)
        problem = NLSProblem(A, b, link=link, alpha=spec.welsch_alpha)
        return problem, constants_for(problem), np.zeros(problem.dim)
    if spec.problem == "quadratic":
        problem = QuadraticProblem(np.ones(spec.dim))
        return problem, problem.constants(), np.ones(spec.dim)
    problem = SaddleProblem(spec.dim)
    return problem, problem.constants(), np.zeros(spec.dim)


def build_policy(spec, n):
    """Sampling policy for the preset, sized against n components."""
    hess_batch = max(1, math.ceil(0.01 * n))
    grad_batch = max(1, math.ceil(0.05 * n))
    if spec.variant == "full":
        return SamplingPolicy(mode=EXACT)
    if spec.variant == "subh":
        return SamplingPolicy(mode=SUB_HESSIAN_ONLY, hess_batch=hess_batch)
    line_eval = "batch" if spec.variant == "inexact-sub-eval" else "full"
    return SamplingPolicy(
        mode=SUB_BOTH,
        grad_batch=grad_batch,
        hess_batch=hess_batch,
        adaptive=True,
        line_search_eval=line_eval,
    )


def build_config(spec, seed):
    variant_kind = (
        solver.FIXED_STEP if spec.variant == "inexact-fixed" else solver.LINE_SEARCH
    )
    kwargs = {
        "eps_g": spec.eps,
        "eps_H": spec.eps_h,
        "seed": seed,
        "max_outer_iters": spec.max_iters,
        "skip_small_step_block": spec.skip_small_step_block,
    }
    if spec.variant == "inexact-fixed":
        kwargs["alpha_sol_fixed"] = 0.2 if spec.alpha_sol is None else spec.alpha_sol
        kwargs["alpha_nc_fixed"] = 0.04 if spec.alpha_nc is None else spec.alpha_nc
    for key, val in spec.overrides.items():
        kwargs[key] = val
    return solver.SolverConfig(**kwargs), variant_kind


def run_experiment(spec):
    """Execute the spec; returns (reports, exit_code).

    Side effects: per-repeat CSVs ``run_seed<seed>.csv`` and
    ``aggregate.json`` under spec.out.
    """
    out_dir = Path(spec.out)
    out_dir.mkdir(parents=True, exist_ok=True)
    problem, constants, x0 = build_problem(spec)

    reports = []
    exit_code = EXIT_OK
    csv_paths = []
    for r in range(spec.repeats):
        seed = spec.seed + r
        problem.ledger.reset()
        problem.audit_ledger.reset()
        policy = build_policy(spec, problem.n)
        config, variant_kind = build_config(spec, seed)
        try:
            report = solver.run(
                problem,
                config,
                policy=policy,
                variant=variant_kind,
                constants=constants,
                x0=x0,
                audit=spec.audit,
            )
        except ContractViolation as exc:
            print("contract violation (seed %d): %s" % (seed, exc), file=sys.stderr)
            return reports, EXIT_CONTRACT_VIOLATION
        reports.append(report)
        path = out_dir / ("run_seed%d.csv" % seed)
        write_run_csv(path, report)
        csv_paths.append(str(path))
        if report.termination == solver.TERM_CONTRACT_VIOLATION:
            exit_code = EXIT_CONTRACT_VIOLATION

    agg = aggregate_runs([rep.records for rep in reports])
    write_aggregate_json(
        out_dir / "aggregate.json",
        agg,
        extra={
            "problem": spec.problem,
            "variant": spec.variant,
            "eps": spec.eps,
            "seeds": [spec.seed + r for r in range(spec.repeats)],
            "terminations": [rep.termination for rep in reports],
            "csv_files": [Path(p).name for p in csv_paths],
        },
    )
    return reports, exit_code


def load_config_file(path):
    """Flat ``key = value`` text; '#' starts a comment."""
    overrides = {}
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError("config line %d is not key = value" % lineno)
            key, val = (part.strip() for part in line.split("=", 1))
            overrides[key] = val
    return overrides


_CONFIG_TYPES = {
    "eps_g": float, "eps_H": float, "theta": float, "eta": float, "zeta": float,
    "delta": float, "theta_tilde": float, "U_H": float, "L_H": float,
    "max_outer_iters": int, "max_ls_trials": int,
    "skip_small_step_block": lambda s: s.lower() in ("1", "true", "yes"),
    "alpha_sol_fixed": float, "alpha_nc_fixed": float,
    "retry_condition_failure": lambda s: s.lower() in ("1", "true", "yes"),
}


def _typed_overrides(raw):
    out = {}
    for key, val in raw.items():
        if key not in _CONFIG_TYPES:
            raise ValueError("unknown config key %r" % key)
        out[key] = _CONFIG_TYPES[key](val)
    return out


def make_parser():
    parser = argparse.ArgumentParser(
        prog="ntcg", description="Newton-CG benchmark driver"
    )
    sub = parser.add_subparsers(dest="command", required=True)
    p = sub.add_parser("solve", help="run one solver preset, write CSV/JSON reports")
    p.add_argument("--problem", required=True, choices=PROBLEMS)
    p.add_argument("--data", help="LIBSVM file (required for nls-* problems)")
    p.add_argument("--variant", required=True, choices=VARIANTS)
    p.add_argument("--eps", type=float, default=1e-3, help="first-order tolerance")
    p.add_argument("--eps-h", type=float, default=None,
                   help="second-order tolerance; default sqrt(L_H * eps)")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--repeats", type=int, default=1)
    p.add_argument("--audit", action="store_true",
                   help="verify decrease floors and caps (ledger-exempt "
                        "exact recomputation); nonzero exit on violation")
    p.add_argument("--skip-small-step-block", dest="skip_block",
                   action="store_true", default=True,
                   help="skip the small-step oracle block (preset default)")
    p.add_argument("--no-skip-small-step-block", dest="skip_block",
                   action="store_false",
                   help="run the faithful small-step control flow")
    p.add_argument("--out", required=True, help="output directory")
    p.add_argument("--dim", type=int, default=10, help="synthetic problem dimension")
    p.add_argument("--max-iters", type=int, default=10_000)
    p.add_argument("--welsch-alpha", type=float, default=1.0)
    p.add_argument("--alpha-sol", type=float, default=None,
                   help="fixed step for Newton-type steps (inexact-fixed)")
    p.add_argument("--alpha-nc", type=float, default=None,
                   help="fixed step for curvature steps (inexact-fixed)")
    p.add_argument("--sparse", action="store_true", help="keep data sparse")
    p.add_argument("--config", help="flat key=value config file")
    return parser


def main(argv=None):
    args = make_parser().parse_args(argv)
    overrides = {}
    if args.config:
        overrides = _typed_overrides(load_config_file(args.config))
    try:
        spec = ExperimentSpec(
            problem=args.problem,
            variant=args.variant,
            data=args.data,
            out=args.out,
            eps=args.eps,
            eps_h=args.eps_h,
            seed=args.seed,
            repeats=args.repeats,
            audit=args.audit,
            skip_small_step_block=args.skip_block,
            dim=args.dim,
            max_iters=args.max_iters,
            welsch_alpha=args.welsch_alpha,
            alpha_sol=args.alpha_sol,
            alpha_nc=args.alpha_nc,
            sparse=args.sparse,
            overrides=overrides,
        )
    except ValueError as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    try:
        reports, code = run_experiment(spec)
    except (OSError, LibSVMFormatError, ValueError) as exc:
        print("error: %s" % exc, file=sys.stderr)
        return 1
    for rep in reports:
        print(
            json.dumps(
                {
                    "termination": rep.termination,
                    "iterations": rep.iterations,
                    "final_f": rep.final_f,
                    "final_grad_norm": rep.final_true_grad_norm,
                    "props": rep.ledger["props"],
                }
            )
        )
    return code


if __name__ == "__main__":
    sys.exit(main())
