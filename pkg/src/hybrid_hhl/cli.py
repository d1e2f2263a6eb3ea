"""Command-line front end.

Every command prints one JSON record ``{command, parameters, seed, outputs,
wall_time}`` to stdout; the record shape is published in ``schema.json``.

Exit codes: 0 success, 2 usage, 3 domain or validation error, 4 numerical
failure (e.g. nothing survives post-selection).
"""
from __future__ import annotations

import argparse
import csv
import json
import os
import sys
import time
from fractions import Fraction
from importlib import resources
from pathlib import Path

import numpy as np

from . import eigeninfo as ei
from .circuit import count_gates, export_text
from .hhl import (
    DEFAULT_C,
    METHODS,
    LinearSystem,
    build_method,
    choose_distinguishing_set,
    exact_binary_matrix,
    paper_example_system,
    qpe_runner,
    reference_solution,
    resource_table,
    audit_resources,
    solve,
)
from .noise import NoiseModel, compare_methods
from .phase_estimation import (
    PunctureSpec,
    build_phase_estimation,
    estimate_from_bits,
    query_count_qpe,
    query_count_qspe,
    run_estimation,
)
from .providers import phase_provider
from .statevector import ImpossibleOutcome, SimulationError

SEED_ENV = "HYBRID_HHL_SEED"
EXIT_USAGE, EXIT_DOMAIN, EXIT_NUMERIC = 2, 3, 4

NAMED_PHASES = {"lambda1": Fraction(7, 16), "lambda2": Fraction(17, 64), "lambda3": Fraction(53, 64)}


def schema_path() -> Path:
    return Path(str(resources.files("hybrid_hhl") / "schema.json"))


def load_schema() -> dict:
    return json.loads(schema_path().read_text())


class UsageError(Exception):
    pass


def parse_fraction(text: str) -> Fraction:
    text = text.strip()
    if text in NAMED_PHASES:
        return NAMED_PHASES[text]
    try:
        return Fraction(text)
    except (ValueError, ZeroDivisionError):
        raise argparse.ArgumentTypeError(f"expected a rational p/q or one of {sorted(NAMED_PHASES)}, got {text!r}")


def parse_columns(text: str) -> tuple[int, ...]:
    try:
        return tuple(int(t) for t in text.split(",") if t.strip())
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated positions, got {text!r}")


def parse_puncture(text: str) -> PunctureSpec:
    try:
        return PunctureSpec.parse(text)
    except (ValueError, SimulationError) as exc:
        raise argparse.ArgumentTypeError(str(exc))


def default_seed() -> int:
    raw = os.environ.get(SEED_ENV)
    if raw is None:
        return 0
    try:
        return int(raw)
    except ValueError:
        raise UsageError(f"{SEED_ENV} must be an integer, got {raw!r}")


def load_system(spec: str) -> LinearSystem:
    if spec == "paper":
        return paper_example_system()
    path = Path(spec)
    try:
        doc = json.loads(path.read_text())
    except (OSError, json.JSONDecodeError) as exc:
        raise SimulationError(f"cannot read system file {spec}: {exc}")
    return LinearSystem.from_json(doc, name=path.stem)


def load_matrix(path: str) -> ei.BinaryMatrix:
    try:
        return ei.BinaryMatrix.from_text(Path(path).read_text())
    except OSError as exc:
        raise SimulationError(f"cannot read matrix file {path}: {exc}")


# -- commands ---------------------------------------------------------------


def _estimation(args, shift=0, puncture=None) -> dict:
    circuit = build_phase_estimation(args.n, phase_provider(args.phase), shift=shift, puncture=puncture)
    shots = None if args.exact else args.shots
    res = run_estimation(circuit, g_state=1, shots=shots, seed=args.seed if shots else None)
    positions = res.positions_measured
    top = res.top_outcome
    known = dict(puncture.known_bits) if puncture else {}
    full = {**known, **res.bits}
    out = {
        "histogram": dict(sorted(res.shots_histogram.items())),
        "top_outcome": top,
        "positions": positions,
        "bits": {str(p): b for p, b in sorted(full.items())},
        "gates": count_gates(circuit).as_dict(),
        "query_count": count_gates(circuit).controlled_u_queries,
    }
    if not shift:
        bits = "".join(str(full[p]) for p in range(1, args.n + 1))
        out["estimate"] = str(estimate_from_bits(bits))
    return out


def cmd_qpe(args) -> dict:
    out = _estimation(args)
    out["query_formula"] = query_count_qpe(args.n)
    return out


def cmd_qspe(args) -> dict:
    out = _estimation(args, shift=args.shift)
    out["query_formula"] = query_count_qspe(args.n, args.shift)
    return out


def cmd_qppe(args) -> dict:
    return _estimation(args, puncture=args.puncture)


def _collect(args, system: LinearSystem) -> ei.BinaryMatrix:
    if args.matrix:
        return load_matrix(args.matrix)
    runner = qpe_runner(system, args.n)
    return ei.collect_binary_matrix(runner, args.batch_shots, args.stall, args.seed)


def cmd_eigeninfo(args) -> dict:
    system = None if args.matrix else load_system(args.system)
    B = _collect(args, system)
    if args.solver == "exact":
        found = [ei.min_distinguishing_set_exact(B)]
    elif args.solver == "greedy":
        found = [ei.distinguishing_set_greedy(B)]
    else:
        found = ei.all_minimal_distinguishing_sets(B)
    if args.columns is not None:
        D = args.columns
    elif args.solver == "greedy":
        D = found[0]
    else:
        hint = system.distinguishing_hint if system else None
        D = choose_distinguishing_set(B, hint) if hint else found[0]
    cls = ei.classify(B, D)
    return {
        "rows": list(B.rows),
        "solver": args.solver,
        "solver_sets": [list(s) for s in found],
        "D": list(cls.distinguishing),
        "classification": cls.as_dict(),
        "plan": ei.step_plan(cls).as_dict(),
    }


def cmd_hhl(args) -> dict:
    system = load_system(args.system)
    if args.matrix:
        B = load_matrix(args.matrix)
    elif args.collect:
        B = ei.collect_binary_matrix(qpe_runner(system, args.n), args.batch_shots, args.stall, args.seed)
    else:
        B = exact_binary_matrix(system, args.n)
    smallest = min(ei.row_value(r) for r in B.rows)
    if not 0 < args.c <= smallest:
        raise SimulationError(f"c = {args.c} must lie in (0, {smallest}], the smallest eigenvalue estimate")
    hc = build_method(system, args.method, args.n, float(args.c), B=B, D=args.columns, controls=args.controls)
    shots = None if args.exact else args.shots
    outcome = solve(hc, shots=shots, seed=args.seed if shots else None)
    ref = reference_solution(system)
    out = outcome.to_json()
    out["reference"] = ref.probabilities
    out["reference_amplitudes"] = [[float(a.real), float(a.imag)] for a in ref.amplitudes]
    out["rows"] = list(B.rows)
    if args.emit_plot_data:
        write_plot_csv(args.emit_plot_data, ref.probabilities, outcome.g_distribution)
        out["plot_data"] = str(args.emit_plot_data)
    return out


def write_plot_csv(path, theoretical: dict, measured: dict) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh)
        w.writerow(["basis_state", "theoretical_probability", "measured_probability"])
        for k in sorted(set(theoretical) | set(measured)):
            w.writerow([k, repr(theoretical.get(k, 0.0)), repr(measured.get(k, 0.0))])


def cmd_audit(args) -> dict:
    table = resource_table(args.n, args.hA)
    out = {"n": args.n, "h_A": args.hA, "table": table}
    if not args.no_check:
        out["builder_check"] = audit_resources(args.n)
    return out


def cmd_noise_compare(args) -> dict:
    system = load_system(args.system)
    noise = NoiseModel(args.p1, args.p2, args.seed)
    reports = compare_methods(system, noise, args.trajectories, n=args.n, c=float(args.c),
                              resamples=args.resamples)
    r19, r25 = reports["hybrid19"], reports["hybrid25"]
    return {
        "reports": {m: r.to_json() for m, r in reports.items()},
        "hybrid25_lower": r25.tvd_to_ideal < r19.tvd_to_ideal,
        "intervals_disjoint": r25.ci_high < r19.ci_low or r19.ci_high < r25.ci_low,
    }


def cmd_export(args) -> dict:
    if args.method == "qpe":
        if args.phase is None:
            raise UsageError("export --method qpe needs --phase")
        circuit = build_phase_estimation(args.n, phase_provider(args.phase))
    else:
        system = load_system(args.system)
        circuit = build_method(system, args.method, args.n, float(args.c)).circuit
    text = export_text(circuit)
    if args.out:
        Path(args.out).write_text(text)
    return {"gates": len(circuit), "registers": [list(r) for r in circuit.registers],
            "path": args.out, "circuit_text": text}


# -- parser -----------------------------------------------------------------


def _positive(text: str) -> int:
    v = int(text)
    if v < 1:
        raise argparse.ArgumentTypeError("must be >= 1")
    return v


def _add_mode(p, shots_default=None):
    g = p.add_mutually_exclusive_group()
    g.add_argument("--exact", action="store_true", help="exact probabilities (default)")
    g.add_argument("--shots", type=_positive, default=shots_default, help="sample this many shots")
    p.add_argument("--seed", type=int, default=None, help=f"RNG seed (default ${SEED_ENV} or 0)")


def _add_collection(p):
    p.add_argument("--matrix", help="binary matrix file, one 0/1 row per line")
    p.add_argument("--batch-shots", type=_positive, default=1024)
    p.add_argument("--stall", type=_positive, default=3, help="stop after this many batches with no new row")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="hybrid-hhl", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    for name, helptext in (("qpe", "phase estimation"), ("qspe", "shifted phase estimation"),
                           ("qppe", "punctured phase estimation")):
        p = sub.add_parser(name, help=helptext)
        p.add_argument("--n", type=_positive, required=True)
        p.add_argument("--phase", type=parse_fraction, required=True, help="p/q or lambda1..lambda3")
        if name == "qspe":
            p.add_argument("--shift", type=int, required=True)
        if name == "qppe":
            p.add_argument("--puncture", type=parse_puncture, required=True, help='e.g. "2=0,4=1"')
        _add_mode(p)

    p = sub.add_parser("eigeninfo", help="binary matrix, distinguishing set, qubit plan")
    p.add_argument("--system", default="paper", help="'paper' or a JSON file {A, b}")
    p.add_argument("--n", type=_positive, default=6)
    p.add_argument("--solver", choices=("exact", "greedy", "all-minimal"), default="exact")
    p.add_argument("--columns", type=parse_columns, default=None, help="use this distinguishing set")
    p.add_argument("--seed", type=int, default=None)
    _add_collection(p)

    p = sub.add_parser("hhl", help="run an HHL variant")
    p.add_argument("--method", choices=METHODS, required=True)
    p.add_argument("--system", default="paper")
    p.add_argument("--n", type=_positive, default=6)
    p.add_argument("--c", type=parse_fraction, default=Fraction(DEFAULT_C).limit_denominator())
    p.add_argument("--columns", type=parse_columns, default=None, help="hybrid25 distinguishing set")
    p.add_argument("--controls", type=parse_columns, default=None, help="hybrid19 rotation controls")
    p.add_argument("--collect", action="store_true", help="sample the binary matrix instead of reading it off exactly")
    p.add_argument("--emit-plot-data", metavar="PATH", default=None)
    _add_collection(p)
    _add_mode(p)

    p = sub.add_parser("audit", help="closed-form resource table, checked against the builders")
    p.add_argument("--n", type=int, required=True)
    p.add_argument("--hA", type=_positive, default=1)
    p.add_argument("--no-check", action="store_true", help="skip the builder cross-check")
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("noise-compare", help="hybrid19 vs hybrid25 under depolarizing noise")
    p.add_argument("--system", default="paper")
    p.add_argument("--n", type=_positive, default=6)
    p.add_argument("--c", type=parse_fraction, default=Fraction(DEFAULT_C).limit_denominator())
    p.add_argument("--p1", type=float, default=0.001)
    p.add_argument("--p2", type=float, default=0.005)
    p.add_argument("--trajectories", type=_positive, default=20000)
    p.add_argument("--resamples", type=_positive, default=200)
    p.add_argument("--seed", type=int, default=None)

    p = sub.add_parser("export", help="circuit in the text interchange format")
    p.add_argument("--method", choices=METHODS + ("qpe",), required=True)
    p.add_argument("--system", default="paper")
    p.add_argument("--n", type=_positive, default=6)
    p.add_argument("--c", type=parse_fraction, default=Fraction(DEFAULT_C).limit_denominator())
    p.add_argument("--phase", type=parse_fraction, default=None)
    p.add_argument("--out", default=None)
    p.add_argument("--seed", type=int, default=None)
    return parser


COMMANDS = {
    "qpe": cmd_qpe,
    "qspe": cmd_qspe,
    "qppe": cmd_qppe,
    "eigeninfo": cmd_eigeninfo,
    "hhl": cmd_hhl,
    "audit": cmd_audit,
    "noise-compare": cmd_noise_compare,
    "export": cmd_export,
}


def _jsonable(obj):
    if isinstance(obj, Fraction):
        return str(obj)
    if isinstance(obj, PunctureSpec):
        return {str(k): v for k, v in sorted(obj.known_bits.items())}
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, tuple):
        return list(obj)
    return obj


def run_command(argv: list[str]) -> tuple[int, dict | None]:
    """Parse and run; returns (exit code, record)."""
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0), None
    try:
        if args.seed is None:
            args.seed = default_seed()
        start = time.perf_counter()
        outputs = COMMANDS[args.command](args)
        wall = time.perf_counter() - start
    except UsageError as exc:
        print(f"usage error: {exc}", file=sys.stderr)
        return EXIT_USAGE, None
    except (ImpossibleOutcome, FloatingPointError, np.linalg.LinAlgError) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERIC, None
    except (SimulationError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_DOMAIN, None
    params = {k: _jsonable(v) for k, v in sorted(vars(args).items()) if k not in ("command", "seed")}
    record = {"command": args.command, "parameters": params, "seed": args.seed,
              "outputs": outputs, "wall_time": wall}
    return 0, record


def main(argv: list[str] | None = None) -> int:
    code, record = run_command(sys.argv[1:] if argv is None else argv)
    if record is not None:
        json.dump(record, sys.stdout, indent=2, default=_jsonable)
        sys.stdout.write("\n")
    return code


if __name__ == "__main__":
    sys.exit(main())
