"""Coherence-transfer efficiency and the optimal two-spin transfer bounds."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.optimize import brentq

from .cartan import IXSX, IYSY, IZSZ, TwoSpinCanonicalParams
from .config import Tolerances, resolve
from .errors import DomainError
from .numerics import as_matrix, expm_generator
from .spin_algebra import two_spin_ops

_OPS = two_spin_ops()


@dataclass(frozen=True)
class TransferProblem:
    rho0: np.ndarray = field(repr=False)
    target: np.ndarray = field(repr=False)
    J: float = 1.0
    name: str = "custom"

    def __post_init__(self):
        if not self.J > 0:
            raise DomainError(f"coupling J must be positive, got {self.J}")

    def check(self, tol: Tolerances | None = None) -> None:
        tol = resolve(tol)
        for label, m in (("rho0", self.rho0), ("target", self.target)):
            m = as_matrix(m)
            norm = np.real(np.trace(m.conj().T @ m))
            if abs(norm - 1) > tol.normalization:
                raise DomainError(f"{label} is not normalized: tr(A^dag A) = {norm:.12f}")


def inphase_problem(J: float = 1.0) -> TransferProblem:
    """``(S_x - i S_y)/sqrt(2)  ->  (I_x - i I_y)/sqrt(2)``."""
    rho0 = (_OPS["Sx"] - 1j * _OPS["Sy"]) / np.sqrt(2)
    target = (_OPS["Ix"] - 1j * _OPS["Iy"]) / np.sqrt(2)
    return TransferProblem(rho0, target, J, "inphase")


def antiphase_problem(J: float = 1.0) -> TransferProblem:
    """``sqrt(2) I_z (S_x - i S_y)  ->  (I_x - i I_y)/sqrt(2)``."""
    rho0 = np.sqrt(2) * _OPS["Iz"] @ (_OPS["Sx"] - 1j * _OPS["Sy"])
    target = (_OPS["Ix"] - 1j * _OPS["Iy"]) / np.sqrt(2)
    return TransferProblem(rho0, target, J, "antiphase")


def efficiency(u, prob: TransferProblem, tol: Tolerances | None = None) -> float:
    """``|tr(F^dag U rho0 U^dag)|``."""
    prob.check(tol)
    u = as_matrix(u)
    if u.shape != prob.rho0.shape:
        raise DomainError(f"propagator shape {u.shape} does not match problem {prob.rho0.shape}")
    return float(abs(np.trace(prob.target.conj().T @ u @ prob.rho0 @ u.conj().T)))


def projection_sigma(params) -> np.ndarray:
    """Diagonal of the in-phase projection matrix for coupling durations ``alpha``.

    Accepts a ``TwoSpinCanonicalParams`` or a ``(alpha, J)`` pair.
    """
    if isinstance(params, TwoSpinCanonicalParams):
        alpha, J = params.signed, params.J
    else:
        alpha, J = params
    s1, s2, s3 = (math.sin(J * math.pi * a) for a in alpha)
    return np.diag([s2 * s3, s1 * s3, s1 * s2])


def bilinear_max(a) -> float:
    """Max of ``|p^dag U diag(a) V p|`` over rotations for ``p = [1, -i, 0]``.

    Equals the sum of the two largest entries; entries must be nonnegative.
    """
    a = np.asarray(a, dtype=float).ravel()
    if a.shape != (3,):
        raise DomainError(f"expected three diagonal entries, got {a.shape}")
    if np.any(a < 0):
        raise DomainError(
            f"entries must be nonnegative (got {a.tolist()}); reduce alpha so every sine is >= 0"
        )
    s = np.sort(a)
    return float(s[2] + s[1])


def _check_time(t: float, J: float) -> None:
    if not J > 0:
        raise DomainError(f"coupling J must be positive, got {J}")
    if not t >= 0 or not math.isfinite(t):
        raise DomainError(f"time must be finite and nonnegative, got {t}")


def solve_inphase_angles(t: float, J: float) -> tuple[float, float]:
    """Solve ``a + 2b = t`` with ``tan(J pi a) = 2 tan(J pi b)``, ``0 < t <= 3/(2J)``.

    The root is bracketed on the branch where both angles lie in ``[0, pi/2)``;
    there ``g(b) = tan(J pi (t - 2b)) - 2 tan(J pi b)`` is strictly decreasing.
    """
    _check_time(t, J)
    x = t * J
    if not 0 < x <= 1.5 + 1e-12:
        raise DomainError(f"t*J must lie in (0, 3/2], got {x}")
    if x >= 1.5 - 1e-15:
        return 0.5 / J, 0.5 / J

    def g(y):
        return math.tan(math.pi * (x - 2 * y)) - 2 * math.tan(math.pi * y)

    lo = max(0.0, (x - 0.5) / 2)
    hi = min(x / 2, 0.5)
    eps = 1e-15
    # endpoints: g(lo) > 0 (tan(pi x) > 0 or a pole), g(hi) < 0
    lo_e = lo + eps if lo > 0 else 0.0
    hi_e = hi - eps if hi >= 0.5 else hi
    if g(lo_e) <= 0:
        y = lo_e
    elif g(hi_e) >= 0:
        y = hi_e
    else:
        y = brentq(g, lo_e, hi_e, xtol=1e-16, rtol=4 * np.finfo(float).eps, maxiter=500)
    b = y / J
    return t - 2 * b, b


def optimal_inphase(t: float, J: float) -> float:
    """Best in-phase transfer reachable in time ``t``; saturates at ``3/(2J)``."""
    _check_time(t, J)
    if t == 0:
        return 0.0
    if t * J >= 1.5:
        return 1.0
    a, b = solve_inphase_angles(t, J)
    return math.sin(J * math.pi * a) * math.sin(J * math.pi * b)


def optimal_antiphase(t: float, J: float) -> float:
    _check_time(t, J)
    if t * J >= 1:
        return 1.0
    return math.sin(J * math.pi * t / 2)


def isotropic_propagator(t: float, J: float) -> np.ndarray:
    h = (2 * math.pi * J / 3) * (IZSZ + IXSX + IYSY)
    return expm_generator(h, t)


def isotropic_efficiency(t: float, J: float, prob: TransferProblem | None = None) -> float:
    _check_time(t, J)
    if prob is None:
        prob = inphase_problem(J)
    return efficiency(isotropic_propagator(t, J), prob)


@dataclass(frozen=True)
class EfficiencyCurve:
    transfer: str
    times: np.ndarray  # units of 1/J
    optimal: np.ndarray
    comparison: np.ndarray | None = None

    def rows(self) -> list[tuple]:
        if self.comparison is None:
            return list(zip(self.times, self.optimal))
        return list(zip(self.times, self.optimal, self.comparison))

    def header(self) -> tuple:
        if self.comparison is None:
            return ("t_over_J", "eta_optimal")
        return ("t_over_J", "eta_optimal", "eta_isotropic")

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(self.header())
        for row in self.rows():
            w.writerow([f"{v:.15g}" for v in row])
        return buf.getvalue()


TRANSFERS = ("inphase", "antiphase")


def emit_curves(transfer: str = "inphase", points: int = 256, t_max: float = 2.0) -> EfficiencyCurve:
    """Tabulate the optimal curve on ``points`` evenly spaced times in ``[0, t_max/J]``.

    Times are dimensionless (``t*J``); the in-phase table also carries the
    isotropic-mixing comparison.
    """
    if transfer not in TRANSFERS:
        raise DomainError(f"transfer must be one of {TRANSFERS}, got {transfer!r}")
    if points < 2:
        raise DomainError("need at least two grid points")
    if not 0 < t_max <= 2:
        raise DomainError(f"t_max must lie in (0, 2] (units of 1/J), got {t_max}")
    times = np.linspace(0.0, t_max, points)
    if transfer == "inphase":
        opt = np.array([optimal_inphase(x, 1.0) for x in times])
        prob = inphase_problem(1.0)
        iso = np.array([isotropic_efficiency(x, 1.0, prob) for x in times])
        return EfficiencyCurve(transfer, times, opt, iso)
    opt = np.array([optimal_antiphase(x, 1.0) for x in times])
    return EfficiencyCurve(transfer, times, opt)
