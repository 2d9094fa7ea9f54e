"""Command-line interface: ``spinalign <command> [options]``.

Exit status is 2 for malformed input (bad files or arguments), 1 when
``verify`` finds a state that is not anti-coherent, and 0 otherwise.  Every
run echoes its resolved configuration to stderr as one JSON line.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from fractions import Fraction
from pathlib import Path

import numpy as np

from . import catalog, formats, majorana, metrology, optimizer, simulation

SEED_ENV = "SPINALIGN_SEED"
EXIT_OK, EXIT_FAILED, EXIT_BAD_INPUT = 0, 1, 2


class InputError(Exception):
    pass


def _emit(obj) -> None:
    print(json.dumps(formats.jsonable(obj), indent=2))


def _write_or_print(text: str, out) -> None:
    if out:
        Path(out).write_text(text)
    else:
        sys.stdout.write(text)


def _default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise InputError(f"{SEED_ENV}={raw!r} is not an integer") from None


def _read_state(path):
    try:
        return formats.read_state(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except formats.FormatError as exc:
        raise InputError(f"{path}: {exc}") from None


def _read_points(path):
    try:
        return formats.read_points(path)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None
    except formats.FormatError as exc:
        raise InputError(f"{path}: {exc}") from None


# ------------------------------------------------------------- commands


def cmd_gen(args) -> int:
    try:
        if args.paper_literal:
            entry = catalog.paper_literal_state(args.solid_class, args.n)
        elif args.n % 2 and args.solid_class in ("cube", "icosahedron", "dodecahedron"):
            entry = catalog.odd_n_variant(args.solid_class, args.n, Fraction(args.central))
        else:
            entry = catalog.family_state(args.solid_class, args.n)
    except (catalog.InadmissibleError, catalog.InfeasibleSupportError, ValueError) as exc:
        raise InputError(str(exc)) from None
    _write_or_print(formats.dump_state(entry.state, entry.provenance) + "\n", args.out)
    return EXIT_OK


def cmd_vertices(args) -> int:
    _write_or_print(formats.dump_points(catalog.platonic_vertices(args.solid)), args.out)
    return EXIT_OK


def cmd_verify(args) -> int:
    state, _ = _read_state(args.state)
    report = metrology.anticoherence_check(state, args.tol)
    out = report.to_dict()
    out["variances"] = np.diag(report.covariance).tolist()
    _emit(out)
    return EXIT_OK if report.passed else EXIT_FAILED


def cmd_fisher(args) -> int:
    state, _ = _read_state(args.state)
    f = metrology.fisher_matrix_fd(state) if args.finite_difference else metrology.fisher_matrix(state)
    _emit({"format": 1, "n": state.n_qubits, "fisher": f.tolist()})
    return EXIT_OK


def cmd_cost(args) -> int:
    state, _ = _read_state(args.state)
    cost = metrology.alignment_cost(state)
    bound = metrology.lower_bound(state.n_qubits)
    _emit({"format": 1, "n": state.n_qubits, "cost": cost, "bound": bound, "gap": cost - bound})
    return EXIT_OK


def cmd_bound(args) -> int:
    print(repr(metrology.lower_bound(args.n)))
    return EXIT_OK


def cmd_majorana(args) -> int:
    if args.state:
        state, _ = _read_state(args.state)
        try:
            points = majorana.state_to_points(state)
        except majorana.RootFindingError as exc:
            raise InputError(str(exc)) from None
        _write_or_print(formats.dump_points(points), args.out)
    else:
        points = _read_points(args.points)
        state = majorana.points_to_state(points)
        text = formats.dump_state(state, {"source": "majorana", "points": str(args.points)})
        _write_or_print(text + "\n", args.out)
    return EXIT_OK


def cmd_optimize(args) -> int:
    config = optimizer.OptimizerConfig(
        restarts=args.restarts,
        max_iters=args.max_iters,
        seed=args.seed,
        workers=args.workers,
    )
    result = optimizer.minimize_cost(args.n, config)
    out = result.to_dict()
    if not result.infeasible:
        out["certificate"] = optimizer.certify(result).to_dict()
    out_path = args.out or f"optimum_n{args.n}.json"
    formats.write_state(out_path, result.best_state, {"source": "optimize", "seed": args.seed, "n": args.n})
    out["state_file"] = str(out_path)
    _emit(out)
    return EXIT_OK


def cmd_simulate(args) -> int:
    state, _ = _read_state(args.state)
    try:
        if args.mode == "single":
            if len(args.theta) != 1:
                raise InputError("single-axis mode takes one --theta value")
            params = {"m": args.pair_m, "phase": args.phase} if args.scheme == "superposition_pair" else {}
            scheme = simulation.make_scheme(args.scheme, state.n_qubits, **params)
            report = simulation.simulate_single_axis(
                state, args.axis, args.theta[0], args.shots, scheme, args.seed, n_trials=args.trials
            )
        else:
            if len(args.theta) != 3:
                raise InputError("cartesian mode takes three --theta values")
            report = simulation.simulate_cartesian(
                state, args.theta, args.shots, args.seed, n_trials=args.trials
            )
    except ValueError as exc:
        raise InputError(str(exc)) from None
    if args.trials_csv and report.trial_estimates is not None:
        report.write_trials_csv(args.trials_csv)
    _emit(report.to_dict())
    return EXIT_OK


# ------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spinalign", description="Spin-state tools for reference-frame alignment.")
    sub = parser.add_subparsers(dest="command", required=True)
    solids = [k.value for k in catalog.SolidKind]

    p = sub.add_parser("gen", help="write a catalog state as JSON")
    p.add_argument("--class", dest="solid_class", required=True, choices=solids)
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--paper-literal", action="store_true", help="the printed table entry, uncorrected")
    p.add_argument("--central", default="1/2", choices=["1/2", "-1/2"], help="central m for odd-N variants")
    p.add_argument("--out")
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("vertices", help="write Platonic-solid vertices as CSV")
    p.add_argument("--solid", required=True, choices=solids)
    p.add_argument("--out")
    p.set_defaults(func=cmd_vertices)

    p = sub.add_parser("verify", help="anti-coherence check; exit 1 on failure")
    p.add_argument("--state", required=True)
    p.add_argument("--tol", type=float, default=metrology.DEFAULT_TOL)
    p.set_defaults(func=cmd_verify)

    p = sub.add_parser("fisher", help="print the quantum Fisher matrix")
    p.add_argument("--state", required=True)
    p.add_argument("--finite-difference", action="store_true")
    p.set_defaults(func=cmd_fisher)

    p = sub.add_parser("cost", help="print Tr F^-1 and the lower bound")
    p.add_argument("--state", required=True)
    p.set_defaults(func=cmd_cost)

    p = sub.add_parser("bound", help="print 9/(N(N+2))")
    p.add_argument("--n", type=int, required=True)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("majorana", help="convert between state JSON and point CSV")
    group = p.add_mutually_exclusive_group(required=True)
    group.add_argument("--state", help="state JSON to convert to points")
    group.add_argument("--points", help="point CSV to convert to a state")
    p.add_argument("--out")
    p.set_defaults(func=cmd_majorana)

    p = sub.add_parser("optimize", help="multi-start minimization of Tr F^-1")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--restarts", type=int, default=20)
    p.add_argument("--max-iters", type=int, default=2000)
    p.add_argument("--workers", type=int, default=1)
    p.add_argument("--seed", type=int)
    p.add_argument("--out", help="best-state JSON (default optimum_n<N>.json)")
    p.set_defaults(func=cmd_optimize)

    p = sub.add_parser("simulate", help="Monte Carlo estimation run")
    p.add_argument("--state", required=True)
    p.add_argument("--mode", choices=["single", "cartesian"], default="single")
    p.add_argument("--axis", choices=["x", "y", "z"], default="z")
    p.add_argument("--theta", type=float, nargs="+", required=True)
    p.add_argument("--scheme", choices=["basis_z", "superposition_pair", "axis_dispatch"], default="superposition_pair")
    p.add_argument("--pair-m", type=float, default=1.0)
    p.add_argument("--phase", type=float, default=np.pi / 2)
    p.add_argument("--shots", type=int, default=100_000)
    p.add_argument("--trials", type=int, default=200)
    p.add_argument("--seed", type=int)
    p.add_argument("--trials-csv")
    p.set_defaults(func=cmd_simulate)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code) if isinstance(exc.code, int) else EXIT_BAD_INPUT
    try:
        if hasattr(args, "seed") and args.seed is None:
            args.seed = _default_seed()
        config = {k: v for k, v in vars(args).items() if k != "func"}
        print(json.dumps({"config": config}, default=str), file=sys.stderr)
        return args.func(args)
    except InputError as exc:
        print(f"spinalign: error: {exc}", file=sys.stderr)
        return EXIT_BAD_INPUT


if __name__ == "__main__":
    sys.exit(main())
