"""Command-line front end.

Exit codes: 0 when every check passes, 1 when a check fails, 2 for
configuration errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field

from .config import ConfigError, build_profiles, domain_from, load_json, signal_from_descriptor, solver_config
from .experiments import (
    RUNNERS,
    ExperimentResult,
    _domain,
    _plain,
    run_experiment,
    run_linear_descriptor,
    run_picard_descriptor,
)
from .signals import PapSignal

__all__ = ["ExperimentSuite", "ACCEPTANCE_SUITE", "run_suite", "main"]

EXIT_PASS, EXIT_FAIL, EXIT_CONFIG = 0, 1, 2

ACCEPTANCE_SUITE = [
    {"kind": "semigroup"},
    {"kind": "heat-estimates"},
    {"kind": "resolvent-bound"},
    {"kind": "linear-solve"},
    {"kind": "pap-preservation"},
    {"kind": "fixed-point"},
    {"kind": "stability"},
    {"kind": "oracle"},
    {"kind": "hyperbolic", "params": {"delta": 1, "expected_sigma": "71/98"}},
]

PLOT_STUB = """# gnuplot script stub; every CSV has a header row
set datafile separator ','
set key autotitle columnhead
set logscale y
"""


@dataclass
class ExperimentSuite:
    """Named list of experiment specs run with one master seed."""

    name: str = "suite"
    experiments: list = field(default_factory=list)
    out: str | None = None
    seed: int = 0
    solver: dict = field(default_factory=dict)
    profiles: dict = field(default_factory=dict)
    base_dir: str = "."


def _experiment_params(spec, suite: ExperimentSuite):
    params = dict(spec.get("params", {}))
    solver = dict(suite.solver)
    solver.update(params.get("solver", {}))
    domain = solver.pop("domain", None)
    if domain is not None:
        d = domain_from(domain)
        if len(set(d.side_lengths)) != 1:
            raise ConfigError("experiments run on cubes; give dim, length and modes")
        params.setdefault("dim", d.dim)
        params.setdefault("length", d.side_lengths[0])
        params.setdefault("modes", d.modes)
    params["solver"] = solver
    return params


def _run_one(spec, suite: ExperimentSuite, jobs=1) -> ExperimentResult:
    kind = spec["kind"]
    name = spec.get("name", kind)
    params = _experiment_params(spec, suite)
    if "forcing" in spec and kind in ("solve-linear", "solve-pap"):
        profiles = build_profiles(suite.profiles, _domain(params), suite.base_dir)
        f = signal_from_descriptor(spec["forcing"], profiles)
        omega = signal_from_descriptor(spec.get("omega"), profiles) if spec.get("omega") else None
        if f.value_kind != "vector":
            raise ConfigError(f"{name}: forcing must use vector profiles")
        if kind == "solve-linear":
            return run_linear_descriptor(omega or PapSignal(), f, params, suite.seed, suite.out, name)
        return run_picard_descriptor(f, params, suite.seed, suite.out, name, omega)
    return run_experiment(kind, params, suite.seed, suite.out, name, jobs)


def _validate(suite: ExperimentSuite):
    solver = {k: v for k, v in suite.solver.items() if k != "domain"}
    solver_config(solver, domain_spec=suite.solver.get("domain"))
    names = set()
    for i, spec in enumerate(suite.experiments):
        if not isinstance(spec, dict) or "kind" not in spec:
            raise ConfigError(f"experiment #{i}: needs a 'kind'")
        kind = spec["kind"]
        if kind not in RUNNERS and kind not in ("solve-linear", "solve-pap"):
            raise ConfigError(f"experiment #{i}: unknown kind {kind!r}")
        if kind in ("solve-linear", "solve-pap") and "forcing" not in spec:
            raise ConfigError(f"experiment #{i}: {kind} needs a forcing descriptor")
        name = spec.get("name", kind)
        if name in names:
            raise ConfigError(f"experiment #{i}: duplicate name {name!r}")
        names.add(name)


def run_suite(suite: ExperimentSuite, jobs=1, echo=print):
    """Run all experiments; return ``(exit_code, results)`` and write the manifest."""
    _validate(suite)
    if suite.out:
        os.makedirs(suite.out, exist_ok=True)
    specs = suite.experiments
    if jobs > 1 and len(specs) > 1:
        with ProcessPoolExecutor(max_workers=jobs) as ex:
            results = list(ex.map(_run_one, specs, [suite] * len(specs)))
    else:
        results = [_run_one(spec, suite, jobs) for spec in specs]
    for r in results:
        for line in r.summary_lines():
            echo(line)
    if suite.out:
        manifest = {
            "suite": suite.name,
            "seed": suite.seed,
            "passed": all(r.passed for r in results),
            "experiments": [r.to_dict() for r in results],
        }
        with open(os.path.join(suite.out, "manifest.json"), "w") as fh:
            json.dump(_plain(manifest), fh, indent=2)
        csvs = [a for r in results for a in r.artifacts if a.endswith(".csv")]
        with open(os.path.join(suite.out, "plot.gp"), "w") as fh:
            fh.write(PLOT_STUB)
            for a in csvs:
                fh.write(f"# plot '{a}' using 1:2 with lines\n")
    return (EXIT_PASS if all(r.passed for r in results) else EXIT_FAIL), results


def _parser():
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", help="JSON config; its values override flags")
    common.add_argument("--seed", type=int, default=0, help="master seed")
    common.add_argument("--jobs", type=int, default=1, help="parallel workers")
    common.add_argument("--out", default=None, help="output directory")
    common.add_argument("--p", type=float, default=None, help="integrability exponent p_cfg")
    common.add_argument("--gamma", type=float, default=None, help="resolvent shift")
    common.add_argument("--dt", type=float, default=None, help="time step")
    common.add_argument("--t-end", type=float, default=None, dest="t_end", help="end of the output window")
    common.add_argument("--trials", type=int, default=None, help="Monte-Carlo trials per fit")

    parser = argparse.ArgumentParser(prog="kspap", description="Keller-Segel mild-solution spectral lab")
    sub = parser.add_subparsers(dest="command", required=True)
    c = sub.add_parser("constants", parents=[common], help="fit and print the constants ledger")
    c.add_argument("--delta", type=float, default=None, help="hyperbolic rate constant (no default)")
    sub.add_parser("verify-estimates", parents=[common], help="fit and validate the heat and resolvent constants")
    sub.add_parser("solve-linear", parents=[common], help="linear Duhamel solve and boundedness check")
    sub.add_parser("solve-pap", parents=[common], help="fixed-point solve and PAP preservation")
    sub.add_parser("stability", parents=[common], help="exponential stability experiments")
    sub.add_parser("suite", parents=[common], help="run an experiment suite (default: acceptance)")
    return parser


COMMAND_KINDS = {
    "constants": ["constants"],
    "verify-estimates": ["semigroup", "heat-estimates", "resolvent-bound"],
    "solve-linear": ["linear-solve"],
    "solve-pap": ["pap-preservation", "fixed-point"],
    "stability": ["stability"],
}


def _suite_from_args(args) -> ExperimentSuite:
    data = load_json(args.config) if args.config else {}
    base_dir = os.path.dirname(os.path.abspath(args.config)) if args.config else "."
    solver = {k: v for k, v in (("p_cfg", args.p), ("gamma", args.gamma), ("dt", args.dt), ("t_end", args.t_end))
              if v is not None}
    raw_solver = data.get("solver", {k: data[k] for k in data if k in ("domain", "p_cfg", "gamma", "dt", "t_hist",
                                                                    "t_end", "tol", "max_iter")})
    if not isinstance(raw_solver, dict):
        raise ConfigError("'solver' must be an object")
    solver.update(raw_solver)
    seed = int(data.get("seed", args.seed))
    out = data.get("out", args.out)
    extra = {}
    if args.trials is not None:
        extra["trials"] = args.trials
    if getattr(args, "delta", None) is not None:
        extra["delta"] = args.delta
    if args.command == "suite":
        experiments = data.get("experiments", ACCEPTANCE_SUITE if not args.config else [])
    elif "forcing" in data:
        kind = "solve-pap" if args.command == "solve-pap" else "solve-linear"
        experiments = [{"kind": kind, "forcing": data["forcing"], "omega": data.get("omega")}]
    else:
        experiments = [{"kind": k} for k in COMMAND_KINDS[args.command]]
    if not isinstance(experiments, list):
        raise ConfigError("'experiments' must be a list")
    experiments = [dict(e, params={**extra, **e.get("params", {})}) if isinstance(e, dict) else e
                   for e in experiments]
    return ExperimentSuite(
        name=data.get("name", args.command),
        experiments=experiments,
        out=out,
        seed=seed,
        solver=solver,
        profiles=data.get("profiles", {}),
        base_dir=base_dir,
    )


def main(argv=None) -> int:
    args = _parser().parse_args(argv)
    try:
        suite = _suite_from_args(args)
        code, results = run_suite(suite, jobs=max(1, args.jobs))
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    if args.command == "constants" and not suite.out:
        for r in results:
            print(json.dumps(_plain(r.details), indent=2))
    print("PASS" if code == EXIT_PASS else "FAIL")
    return code


if __name__ == "__main__":
    sys.exit(main())
