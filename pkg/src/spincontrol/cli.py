"""Command-line front end.

Exit codes: 0 success, 2 unreadable or malformed input (including bad
flags), 3 input outside the mathematical domain (non-unitary, wrong size),
4 a decomposition or synthesis residual check failed.  Diagnostics go to
stderr as one JSON object per line.
"""

from __future__ import annotations

import argparse
import json
import math
import os
import sys
import tempfile
from pathlib import Path

import numpy as np

from . import cartan, pulses, transfer
from .simulate import simulate as run_schedule
from .simulate import two_spin_system, verify_schedule
from .config import Tolerances, default_tolerances
from .errors import DecompositionError, DomainError
from .numerics import matrix_from_json, matrix_to_json

EXIT_OK = 0
EXIT_PARSE = 2
EXIT_DOMAIN = 3
EXIT_RESIDUAL = 4


class InputError(Exception):
    """Input could not be read or parsed."""


def _diag(level: str, **fields) -> None:
    sys.stderr.write(json.dumps({"level": level, **fields}, sort_keys=True) + "\n")


def _dump(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def write_atomic(path: str | os.PathLike, text: str) -> None:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _emit(text: str, out: str | None) -> None:
    if out:
        write_atomic(out, text)
    else:
        sys.stdout.write(text)


def _read_json(path: str):
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise InputError(f"{path} is not valid JSON: {exc}") from exc


def load_matrix(path: str) -> np.ndarray:
    obj = _read_json(path)
    try:
        return matrix_from_json(obj)
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from exc


def load_schedule(path: str) -> pulses.PulseSchedule:
    obj = _read_json(path)
    try:
        return pulses.PulseSchedule.from_json(obj)
    except DomainError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _positive(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v > 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be positive and finite: {text!r}")
    return v


def _nonneg(text: str) -> float:
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}")
    if not v >= 0 or not math.isfinite(v):
        raise argparse.ArgumentTypeError(f"must be nonnegative and finite: {text!r}")
    return v


def _seconds(args) -> float:
    """Resolve ``--t`` (seconds) or ``--tJ`` (dimensionless) to seconds."""
    if args.tJ is not None:
        return args.tJ / args.J
    return args.t


# ---------------------------------------------------------------- commands


def _decompose(u: np.ndarray, args, tol: Tolerances) -> dict:
    group = args.group
    if group == "su2":
        d = cartan.kak_su2(u, tol)
        q1 = d.sign * cartan._rot2(d.phi1, "x")
        q2 = cartan._rot2(d.phi2, "x")
        recon = q1 @ cartan._rot2(d.beta, "z") @ q2
        return {
            "group": "SU2",
            "alpha": [d.beta],
            "q1": matrix_to_json(q1),
            "q2": matrix_to_json(q2),
            "t_star": d.beta,
            "residual": float(np.linalg.norm(recon - u)),
        }
    if group == "so3":
        if np.linalg.norm(u.imag) > tol.unitary:
            raise DomainError("SO(3) input must be real")
        theta = u.real
        g1, beta, g2 = cartan.kak_so3(theta, tol)
        q1 = cartan.expm(g1 * cartan.OMEGA_X)
        q2 = cartan.expm(g2 * cartan.OMEGA_X)
        recon = q1 @ cartan.expm(beta * cartan.OMEGA_Z) @ q2
        return {
            "group": "SO3",
            "alpha": [beta],
            "q1": matrix_to_json(q1),
            "q2": matrix_to_json(q2),
            "t_star": beta,
            "residual": float(np.linalg.norm(recon - theta)),
        }
    k = cartan.kak_su4(u, args.J, strict=args.strict, tol=tol)
    p = k.params
    return {
        "group": "SU4",
        "alpha": list(p.alpha),
        "chirality": p.chirality,
        "J_hz": p.J,
        "phase": k.phase,
        "q1": matrix_to_json(k.q1),
        "q2": matrix_to_json(k.q2),
        "t_star": k.t_star,
        "residual": k.residual,
    }


def cmd_mintime(args, tol: Tolerances) -> int:
    res = _decompose(load_matrix(args.matrix), args, tol)
    out = {key: res[key] for key in ("group", "t_star", "alpha", "residual")}
    if "chirality" in res:
        out["chirality"] = res["chirality"]
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_decompose(args, tol: Tolerances) -> int:
    _emit(_dump(_decompose(load_matrix(args.matrix), args, tol)), args.out)
    return EXIT_OK


def cmd_bound(args, tol: Tolerances) -> int:
    t = _seconds(args)
    fn = transfer.optimal_inphase if args.transfer == "inphase" else transfer.optimal_antiphase
    out = {"transfer": args.transfer, "t_s": t, "J_hz": args.J, "tJ": t * args.J, "eta_optimal": fn(t, args.J)}
    if args.isotropic:
        prob = (transfer.inphase_problem if args.transfer == "inphase" else transfer.antiphase_problem)(args.J)
        out["eta_isotropic"] = transfer.isotropic_efficiency(t, args.J, prob)
    _emit(_dump(out), args.out)
    return EXIT_OK


def cmd_curves(args, tol: Tolerances) -> int:
    curve = transfer.emit_curves(args.transfer, args.points, args.t_max)
    _emit(curve.to_csv(), args.out)
    return EXIT_OK


def cmd_synth(args, tol: Tolerances) -> int:
    u = load_matrix(args.matrix)
    k = cartan.kak_su4(u, args.J, strict=args.strict, tol=tol)
    sched = pulses.synthesize_two_spin(k, tol)
    if args.amplitude is not None:
        sched = pulses.finite_amplitude_schedule(sched, args.amplitude)
    _emit(_dump(sched.to_json()), args.out)
    return EXIT_OK


def cmd_simulate(args, tol: Tolerances) -> int:
    sched = load_schedule(args.schedule)
    spec = two_spin_system(sched.J)
    amp = math.inf if args.amplitude is None else args.amplitude
    u = run_schedule(sched, spec, amp)
    _emit(_dump(matrix_to_json(u)), args.out)
    return EXIT_OK


def cmd_verify(args, tol: Tolerances) -> int:
    sched = load_schedule(args.schedule)
    target = load_matrix(args.matrix)
    amp = math.inf if args.amplitude is None else args.amplitude
    report = verify_schedule(sched, target, amplitude=amp, tol=tol)
    report.seed = args.seed
    report.samples = 0
    _emit(_dump(report.to_json()), args.out)
    return EXIT_OK if report.passed or args.amplitude is not None else EXIT_RESIDUAL


# ---------------------------------------------------------------- parser


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="spincontrol", description=__doc__.splitlines()[0])
    parser.add_argument("--seed", type=int, default=0, help="recorded in reports (default 0)")
    sub = parser.add_subparsers(dest="command", required=True)

    def out_flag(p):
        p.add_argument("--out", "-o", help="output file (default: stdout)")

    def matrix_flags(p, groups=True):
        p.add_argument("matrix", help="matrix JSON file {dim, re, im}")
        p.add_argument("--J", type=_positive, default=1.0, help="coupling in Hz (default 1)")
        p.add_argument("--strict", action="store_true", help="compare in SU(4), not up to phase")
        if groups:
            p.add_argument("--group", choices=("su4", "su2", "so3"), default="su4")
        out_flag(p)

    p = sub.add_parser("mintime", help="minimum control time of a target")
    matrix_flags(p)
    p.set_defaults(func=cmd_mintime)

    p = sub.add_parser("decompose", help="KAK factors of a target")
    matrix_flags(p)
    p.set_defaults(func=cmd_decompose)

    p = sub.add_parser("bound", help="optimal transfer efficiency at time t")
    p.add_argument("--transfer", choices=transfer.TRANSFERS, default="inphase")
    when = p.add_mutually_exclusive_group(required=True)
    when.add_argument("--t", type=_nonneg, help="time in seconds (uses --J)")
    when.add_argument("--tJ", type=_nonneg, help="dimensionless time t*J")
    p.add_argument("--J", type=_positive, default=1.0)
    p.add_argument("--isotropic", action="store_true", help="also report isotropic mixing")
    out_flag(p)
    p.set_defaults(func=cmd_bound)

    p = sub.add_parser("curves", help="tabulate efficiency curves as CSV")
    p.add_argument("--transfer", choices=transfer.TRANSFERS, default="inphase")
    p.add_argument("--points", type=int, default=256)
    p.add_argument("--t-max", type=_positive, default=2.0, help="grid end in units of 1/J")
    out_flag(p)
    p.set_defaults(func=cmd_curves)

    p = sub.add_parser("synth", help="pulse schedule for a two-spin target")
    matrix_flags(p, groups=False)
    p.add_argument("--amplitude", type=_positive, help="finite pulse amplitude in rad/s")
    p.set_defaults(func=cmd_synth)

    p = sub.add_parser("simulate", help="propagator of a schedule")
    p.add_argument("schedule")
    p.add_argument("--amplitude", type=_positive)
    out_flag(p)
    p.set_defaults(func=cmd_simulate)

    p = sub.add_parser("verify", help="distance between a schedule and a target")
    p.add_argument("schedule")
    p.add_argument("matrix")
    p.add_argument("--amplitude", type=_positive)
    out_flag(p)
    p.set_defaults(func=cmd_verify)
    return parser


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        tol = default_tolerances()
    except ValueError as exc:
        _diag("error", code=EXIT_PARSE, kind="config", message=str(exc))
        return EXIT_PARSE
    try:
        return args.func(args, tol)
    except InputError as exc:
        _diag("error", code=EXIT_PARSE, kind="parse", message=str(exc))
        return EXIT_PARSE
    except DomainError as exc:
        _diag("error", code=EXIT_DOMAIN, kind="domain", message=str(exc))
        return EXIT_DOMAIN
    except DecompositionError as exc:
        _diag("error", code=EXIT_RESIDUAL, kind="residual", message=str(exc), residual=exc.residual)
        return EXIT_RESIDUAL


if __name__ == "__main__":
    sys.exit(main())
