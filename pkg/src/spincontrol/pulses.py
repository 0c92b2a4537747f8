"""Pulse schedules: hard local rotations interleaved with coupling evolution.

A two-spin target ``Q1 A(alpha) Q2`` becomes, in chronological order,
pulses for ``Q2``, one conjugated drift leg per nonzero ``alpha_i``, then
pulses for ``Q1``.  Only the ``I_zS_z`` coupling is ever used as drift; the
``I_xS_x`` and ``I_yS_y`` legs are produced by 90-degree pulses around it.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass, replace

import numpy as np

from .cartan import KakFactorization, TwoSpinCanonicalParams
from .config import Tolerances, resolve
from .errors import DecompositionError, DomainError
from .numerics import as_matrix, expm_generator, proj_distance
from .spin_algebra import op, pauli

_ZERO = 1e-13


@dataclass(frozen=True)
class HardPulse:
    """Rotation ``exp(-i angle I_{spin, axis})``; ``duration`` 0 means ideal."""

    spin: int
    axis: str
    angle: float
    duration: float = 0.0

    def to_json(self) -> dict:
        out = {"kind": "pulse", "spin": self.spin, "axis": self.axis, "angle_rad": self.angle}
        if self.duration > 0:
            out["duration_s"] = self.duration
        return out


@dataclass(frozen=True)
class Drift:
    seconds: float

    def to_json(self) -> dict:
        return {"kind": "drift", "seconds": self.seconds}


@dataclass(frozen=True)
class PulseSchedule:
    segments: tuple
    J: float

    @property
    def total_drift(self) -> float:
        return float(sum(s.seconds for s in self.segments if isinstance(s, Drift)))

    @property
    def wall_time(self) -> float:
        return self.total_drift + float(
            sum(s.duration for s in self.segments if isinstance(s, HardPulse))
        )

    @property
    def pulses(self) -> list[HardPulse]:
        return [s for s in self.segments if isinstance(s, HardPulse)]

    def __add__(self, other: "PulseSchedule") -> "PulseSchedule":
        return PulseSchedule(self.segments + other.segments, self.J)

    def to_json(self) -> dict:
        return {
            "segments": [s.to_json() for s in self.segments],
            "J_hz": self.J,
            "total_drift_s": self.total_drift,
        }

    @classmethod
    def from_json(cls, obj: dict | str) -> "PulseSchedule":
        if isinstance(obj, str):
            obj = json.loads(obj)
        try:
            segs = []
            for s in obj["segments"]:
                if s["kind"] == "pulse":
                    if s["axis"] not in ("x", "y", "z"):
                        raise DomainError(f"bad pulse axis {s['axis']!r}")
                    segs.append(
                        HardPulse(int(s["spin"]), s["axis"], float(s["angle_rad"]), float(s.get("duration_s", 0.0)))
                    )
                elif s["kind"] == "drift":
                    if float(s["seconds"]) < 0:
                        raise DomainError("drift durations must be nonnegative")
                    segs.append(Drift(float(s["seconds"])))
                else:
                    raise DomainError(f"unknown segment kind {s['kind']!r}")
            return cls(tuple(segs), float(obj["J_hz"]))
        except (KeyError, TypeError, ValueError) as exc:
            if isinstance(exc, DomainError):
                raise
            raise DomainError(f"malformed schedule: {exc}") from exc


def _wrap(angle: float) -> float:
    """Angle in ``(-pi, pi]``; a full turn only contributes a global sign."""
    a = math.remainder(angle, 2 * math.pi)
    return math.pi if a <= -math.pi else a


def simplify(segments) -> tuple:
    """Merge same-spin same-axis pulse neighbours and drop null segments.

    Inside a run of hard pulses, pulses on different spins commute, so each
    run is reordered spin by spin before merging.
    """
    out = []
    run = []

    def flush():
        by_spin = {}
        for p in run:
            by_spin.setdefault(p.spin, []).append(p)
        for spin in sorted(by_spin):
            merged = []
            for p in by_spin[spin]:
                if merged and merged[-1].axis == p.axis and merged[-1].duration == 0 and p.duration == 0:
                    merged[-1] = replace(merged[-1], angle=merged[-1].angle + p.angle)
                else:
                    merged.append(p)
            changed = True
            while changed:
                changed = False
                kept = []
                for p in merged:
                    p = replace(p, angle=_wrap(p.angle)) if p.duration == 0 else p
                    if p.duration == 0 and abs(p.angle) < _ZERO:
                        changed = True
                        continue
                    if kept and kept[-1].axis == p.axis and kept[-1].duration == 0 and p.duration == 0:
                        kept[-1] = replace(kept[-1], angle=_wrap(kept[-1].angle + p.angle))
                        changed = True
                    else:
                        kept.append(p)
                merged = kept
            out.extend(merged)
        run.clear()

    for seg in segments:
        if isinstance(seg, HardPulse):
            run.append(seg)
            continue
        flush()
        if seg.seconds > _ZERO:
            if out and isinstance(out[-1], Drift):
                out[-1] = Drift(out[-1].seconds + seg.seconds)
            else:
                out.append(seg)
    flush()
    return tuple(out)


_W = expm_generator(pauli("y"), math.pi / 2, Tolerances())  # maps I_z onto I_x by conjugation


def local_euler_pulses(q, spin: int = 1, tol: Tolerances | None = None) -> list[HardPulse]:
    """Hard x-y-x pulses reproducing a 2x2 unitary up to global phase.

    ``q ~ Rx(a) Ry(b) Rx(c)`` is returned in time order ``x(c), y(b), x(a)``;
    zero-angle rotations are dropped.
    """
    tol = resolve(tol)
    q = as_matrix(q)
    if q.shape != (2, 2):
        raise DomainError(f"expected a 2x2 unitary, got {q.shape}")
    det = np.linalg.det(q)
    if abs(abs(det) - 1) > tol.euler:
        raise DomainError("local factor is not unitary")
    u = q / np.sqrt(det)
    v = _W.conj().T @ u @ _W  # Rz(a) Ry(b) Rz(c)
    b = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        plus = 2 * np.angle(v[1, 1])
        minus = 2 * np.angle(v[1, 0])
    elif abs(v[1, 0]) <= 1e-12:
        plus, minus = 2 * np.angle(v[1, 1]), 0.0
    else:
        plus, minus = 0.0, 2 * np.angle(v[1, 0])
    a = (plus + minus) / 2
    c = (plus - minus) / 2
    # Rz(a) Ry(b) Rz(c) = Rz(a + pi) Ry(-b) Rz(c - pi); keep the shorter train
    best = None
    for a_, b_, c_ in ((a, b, c), (a + math.pi, -b, c - math.pi)):
        cand = list(simplify([HardPulse(spin, "x", c_), HardPulse(spin, "y", b_), HardPulse(spin, "x", a_)]))
        key = (len(cand), sum(abs(p.angle) for p in cand))
        if best is None or key < best[0]:
            best = (key, cand)
    pulses = best[1]
    recon = np.eye(2, dtype=complex)
    for p in pulses:
        recon = expm_generator(pauli(p.axis), p.angle) @ recon
    err = proj_distance(recon, q)
    if err > tol.euler:
        raise DecompositionError(f"Euler factorization residual {err:.3e}", err)
    return pulses


_TERMS = ("xx", "yy", "zz")
# pulses k (time order) such that k^dag IzSz k = the requested term
_CONJ_PULSES = {
    "xx": ((1, "y", math.pi / 2), (2, "y", math.pi / 2)),
    "yy": ((1, "x", -math.pi / 2), (2, "x", -math.pi / 2)),
    "zz": (),
}
# pi pulse on spin 1 that reverses the sign of the term
_FLIP = {"xx": (1, "y", math.pi), "yy": (1, "x", math.pi), "zz": (1, "x", math.pi)}


def _as_unitary(pulses) -> np.ndarray:
    u = np.eye(4, dtype=complex)
    for spin, axis, angle in pulses:
        u = expm_generator(op(2, spin, axis), angle) @ u
    return u


def _leg_pulses(term: str, sign: int) -> list[tuple]:
    if term not in _TERMS:
        raise DomainError(f"term must be one of {_TERMS}, got {term!r}")
    pulses = list(_CONJ_PULSES[term])
    if sign < 0:
        pulses = [_FLIP[term]] + pulses
    return pulses


def conjugating_rotations(term: str, sign: int = 1) -> tuple[np.ndarray, np.ndarray]:
    """Local ``k`` with ``k^dag (I_zS_z) k = sign * term`` and its inverse."""
    k = _as_unitary(_leg_pulses(term, sign))
    return k, k.conj().T


def _axis_maps() -> list[tuple[np.ndarray, tuple[int, int, int]]]:
    """Single-spin rotations ``p`` that permute the coordinate axes.

    With ``P = p (x) p``, ``P (I_aS_a) P^dag = I_bS_b`` where ``b = perm[a]``;
    the squared signs of the rotation cancel, so chirality is untouched.
    """
    tol = Tolerances()
    s = [pauli(ax) for ax in "xyz"]
    diag = (s[0] + s[1] + s[2]) / math.sqrt(3)
    gens = [
        np.eye(2, dtype=complex),
        expm_generator(diag, 2 * math.pi / 3, tol),
        expm_generator(diag, 4 * math.pi / 3, tol),
        expm_generator((s[0] + s[1]) / math.sqrt(2), math.pi, tol),
        expm_generator((s[1] + s[2]) / math.sqrt(2), math.pi, tol),
        expm_generator((s[0] + s[2]) / math.sqrt(2), math.pi, tol),
    ]
    out = []
    for p in gens:
        r = np.array([[2 * np.trace(p @ s[a] @ p.conj().T @ s[b]).real for b in range(3)] for a in range(3)])
        out.append((p, tuple(int(i) for i in np.argmax(np.abs(r), axis=1))))
    return out


_AXIS_MAPS = _axis_maps()
_KLEIN = [np.eye(2, dtype=complex)] + [2j * pauli(ax) for ax in "xyz"]


def _to_schedule_pulses(triples) -> list[HardPulse]:
    return [HardPulse(s, a, ang) for s, a, ang in triples]


def synthesize_two_spin(kak: KakFactorization, tol: Tolerances | None = None) -> PulseSchedule:
    """Pulse–drift–pulse chain realizing ``kak`` at infinite pulse amplitude.

    Raises:
        DecompositionError: the factorization residual is too large, or the
            schedule does not reproduce the target when simulated.
    """
    from .simulate import simulate, two_spin_system

    tol = resolve(tol)
    if kak.group != "SU4" or not isinstance(kak.params, TwoSpinCanonicalParams):
        raise DomainError(f"expected a two-spin factorization, got group {kak.group}")
    if kak.residual > tol.reconstruction:
        raise DecompositionError(f"factorization residual {kak.residual:.3e} too large", kak.residual)
    params = kak.params
    signed = np.array(params.alpha, dtype=float) * np.array([1, 1, params.chirality])
    a1, b1 = kak.q1_factors
    a2, b2 = kak.q2_factors
    # relabelling the coupling axes moves alpha between legs; keep the shortest train
    best = None
    for (r, perm), d in itertools.product(_AXIS_MAPS, _KLEIN):
        p = d @ r  # (d (x) d) commutes with every coupling evolution
        vals = np.empty(3)
        vals[list(perm)] = signed
        pd = p.conj().T
        segments = local_euler_pulses(p @ a2, 1, tol) + local_euler_pulses(p @ b2, 2, tol)
        for term, val in zip(_TERMS, vals):
            if abs(val) <= _ZERO:
                continue
            k = _leg_pulses(term, 1 if val > 0 else -1)
            segments += _to_schedule_pulses(k)
            segments.append(Drift(float(abs(val))))
            segments += _to_schedule_pulses([(s, a, -ang) for s, a, ang in reversed(k)])
        segments += local_euler_pulses(a1 @ pd, 1, tol) + local_euler_pulses(b1 @ pd, 2, tol)
        segs = simplify(segments)
        key = (len(segs), sum(abs(s.angle) for s in segs if isinstance(s, HardPulse)))
        if best is None or key < best[0]:
            best = (key, segs)
    schedule = PulseSchedule(best[1], params.J)

    target = kak.reconstruct()
    u = simulate(schedule, two_spin_system(params.J))
    err = proj_distance(u, target)
    if err > tol.schedule:
        raise DecompositionError(f"synthesized schedule misses target by {err:.3e}", err)
    return schedule


def finite_amplitude_schedule(schedule: PulseSchedule, amplitude: float) -> PulseSchedule:
    """Give each hard pulse the duration ``|angle| / amplitude`` (rad/s)."""
    if not amplitude > 0 or not math.isfinite(amplitude):
        raise DomainError(f"amplitude must be positive and finite, got {amplitude}")
    segs = tuple(
        replace(s, duration=abs(s.angle) / amplitude) if isinstance(s, HardPulse) else s
        for s in schedule.segments
    )
    return PulseSchedule(segs, schedule.J)
