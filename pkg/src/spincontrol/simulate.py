"""Forward propagation of pulse schedules and brute-force reference oracles.

The oracles here deliberately avoid the Cartan machinery: the reachable-time
oracle searches coupling durations using Makhlin local invariants, and the
efficiency oracle samples local unitaries directly.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import asdict, dataclass, field

import numpy as np
from scipy.optimize import least_squares, minimize

from .config import Tolerances, resolve
from .errors import DomainError
from .numerics import as_matrix, expm_generator, proj_distance, require_unitary
from .pulses import Drift, HardPulse, PulseSchedule, finite_amplitude_schedule
from .spin_algebra import op
from .transfer import TransferProblem, efficiency


@dataclass(frozen=True)
class ControlSystemSpec:
    """``H = drift + sum_i u_i(t) * controls[i]``.

    ``channels`` maps ``(spin, axis)`` to the index of the control that
    drives that single-spin rotation; a rate ``w`` rad/s on that channel is
    the amplitude ``u = w / (2 pi)``.
    """

    drift: np.ndarray = field(repr=False)
    controls: tuple = field(repr=False)
    channels: dict
    n_spins: int = 2
    J: float = 1.0


def two_spin_system(J: float) -> ControlSystemSpec:
    """Weak-coupling heteronuclear pair: ``H_d = 2 pi J I_zS_z``, x/y controls on each spin."""
    if not J > 0:
        raise DomainError(f"coupling J must be positive, got {J}")
    drift = 2 * np.pi * J * op(2, 1, "z") @ op(2, 2, "z")
    keys = [(1, "x"), (1, "y"), (2, "x"), (2, "y")]
    controls = tuple(2 * np.pi * op(2, s, a) for s, a in keys)
    return ControlSystemSpec(drift, controls, {k: i for i, k in enumerate(keys)}, 2, J)


def _segment_unitary(seg, spec: ControlSystemSpec) -> np.ndarray:
    if isinstance(seg, Drift):
        if seg.seconds < 0:
            raise DomainError("negative drift duration")
        return expm_generator(spec.drift, seg.seconds)
    gen = op(spec.n_spins, seg.spin, seg.axis)
    if seg.duration <= 0:
        return expm_generator(gen, seg.angle)
    key = (seg.spin, seg.axis)
    if key not in spec.channels:
        raise DomainError(f"no control channel for spin {seg.spin} axis {seg.axis}")
    # finite pulse: drift keeps acting while the rotation is applied
    ctrl = spec.controls[spec.channels[key]]
    rate = seg.angle / seg.duration
    return expm_generator(spec.drift + rate / (2 * np.pi) * ctrl, seg.duration)


def simulate(
    schedule: PulseSchedule, spec: ControlSystemSpec, amplitude: float = math.inf
) -> np.ndarray:
    """Propagator of a schedule; later segments multiply from the left.

    With a finite ``amplitude`` (rad/s) every ideal pulse is stretched to
    ``|angle| / amplitude`` seconds, during which the coupling keeps acting.
    """
    if math.isfinite(amplitude):
        schedule = finite_amplitude_schedule(schedule, amplitude)
    elif not amplitude > 0:
        raise DomainError(f"amplitude must be positive, got {amplitude}")
    dim = 2**spec.n_spins
    for seg in schedule.segments:
        if isinstance(seg, HardPulse) and not 1 <= seg.spin <= spec.n_spins:
            raise DomainError(f"pulse on spin {seg.spin} but the system has {spec.n_spins} spins")
    u = np.eye(dim, dtype=complex)
    for seg in schedule.segments:
        u = _segment_unitary(seg, spec) @ u
    return u


def evolve_density(u, rho0) -> np.ndarray:
    """``U rho0 U^dag``."""
    u = as_matrix(u)
    rho0 = as_matrix(rho0)
    if u.shape != rho0.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {rho0.shape}")
    return u @ rho0 @ u.conj().T


@dataclass
class VerificationReport:
    distance: float
    wall_time_s: float
    drift_time_s: float
    target_dim: int
    passed: bool
    tolerance: float
    seed: int | None = None
    samples: int | None = None

    def to_json(self) -> dict:
        return asdict(self)


def verify_schedule(
    schedule: PulseSchedule,
    target,
    spec: ControlSystemSpec | None = None,
    amplitude: float = math.inf,
    tol: Tolerances | None = None,
) -> VerificationReport:
    tol = resolve(tol)
    target = require_unitary(target, tol, "target")
    spec = spec or two_spin_system(schedule.J)
    if target.shape[0] != 2**spec.n_spins:
        raise DomainError(f"target dimension {target.shape[0]} does not match the system")
    if math.isfinite(amplitude):
        schedule = finite_amplitude_schedule(schedule, amplitude)
    u = simulate(schedule, spec)
    d = proj_distance(u, target)
    return VerificationReport(
        distance=d,
        wall_time_s=schedule.wall_time,
        drift_time_s=schedule.total_drift,
        target_dim=target.shape[0],
        passed=d <= tol.schedule,
        tolerance=tol.schedule,
    )


# ---------------------------------------------------------------- oracles

# Makhlin's basis; invariants are computed from traces and determinants only
_B = np.array([[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]]) / np.sqrt(2)
_SS = [
    np.kron(p, p)
    for p in (
        np.array([[0, 1], [1, 0]], dtype=complex),
        np.array([[0, -1j], [1j, 0]]),
        np.array([[1, 0], [0, -1]], dtype=complex),
    )
]


def makhlin_invariants(u) -> np.ndarray:
    """``(G1, G2)`` local invariants of one or a batch of 4x4 unitaries."""
    u = np.asarray(u, dtype=complex)
    up = _B.conj().T @ u @ _B
    m = np.swapaxes(up, -1, -2) @ up
    det = np.linalg.det(u)
    tr = np.trace(m, axis1=-2, axis2=-1)
    tr2 = np.trace(m @ m, axis1=-2, axis2=-1)
    g1 = tr**2 / (16 * det)
    g2 = (tr**2 - tr2) / (4 * det)
    return np.stack([g1, g2], axis=-1)


def coupling_unitary(alpha, J: float) -> np.ndarray:
    """``exp(-i 2 pi J sum_k alpha_k I_kS_k)`` as a product of commuting factors.

    Accepts an ``(..., 3)`` array of durations.
    """
    alpha = np.asarray(alpha, dtype=float)
    theta = 0.5 * np.pi * J * alpha  # I_kS_k = sigma_k sigma_k / 4
    out = np.broadcast_to(np.eye(4, dtype=complex), alpha.shape[:-1] + (4, 4)).copy()
    for k in range(3):
        c = np.cos(theta[..., k])[..., None, None]
        s = np.sin(theta[..., k])[..., None, None]
        out = (c * np.eye(4) - 1j * s * _SS[k]) @ out
    return out


def _inv_residual(g, target_g) -> np.ndarray:
    d = g - target_g
    return np.concatenate([d.real.ravel(), d.imag.ravel()])


def reachable_min_time_oracle(
    target,
    J: float,
    resolution: float | None = None,
    coarse: float | None = None,
    window: float | None = None,
    match_tol: float = 1e-5,
) -> float:
    """Smallest grid multiple of ``resolution`` whose coupling class contains ``target``.

    Durations are scanned on a coarse grid over ``a1 >= a2 >= |a3|`` with
    ``sum <= window``; every cell whose invariants come close is refined with
    least squares, and the best exact match is rounded up to the grid.
    """
    if not J > 0:
        raise DomainError(f"coupling J must be positive, got {J}")
    resolution = 1e-3 / J if resolution is None else resolution
    if resolution < 1e-3 / J - 1e-15:
        raise DomainError("resolution finer than 1e-3/J is not supported")
    coarse = 0.02 / J if coarse is None else coarse
    window = 2.0 / J if window is None else window
    target = require_unitary(target, name="target")
    if target.shape != (4, 4):
        raise DomainError(f"expected a 4x4 target, got {target.shape}")
    tg = makhlin_invariants(target)

    steps = np.arange(0.0, window / 2 + coarse / 2, coarse)
    grid = np.array(
        [(a, b, c) for a, b in itertools.product(steps, steps) if b <= a for c in steps if c <= b]
    )
    grid = np.concatenate([grid, grid[grid[:, 2] > 0] * [1, 1, -1]])
    grid = grid[np.abs(grid).sum(axis=1) <= window + 1e-12]
    g = makhlin_invariants(coupling_unitary(grid, J))
    dist = np.abs(g - tg).sum(axis=1)
    order = np.argsort(dist)
    seeds = grid[order[:64]]
    # small-l1 seeds close to the target are also worth refining
    near = grid[dist < 0.5]
    if len(near):
        near = near[np.argsort(np.abs(near).sum(axis=1))][:64]
        seeds = np.concatenate([seeds, near])

    best = math.inf
    for s in seeds:
        res = least_squares(
            lambda a: _inv_residual(makhlin_invariants(coupling_unitary(a, J)), tg),
            s,
            xtol=1e-15,
            ftol=1e-15,
            gtol=1e-15,
        )
        if np.linalg.norm(res.fun) <= match_tol:
            best = min(best, float(np.abs(res.x).sum()))
    if not math.isfinite(best):
        raise DomainError("no coupling class within the search window matches the target")
    n = math.ceil(best / resolution - 1e-6)
    return n * resolution


def _su2_batch(angles) -> np.ndarray:
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    cb, sb = np.cos(b / 2), np.sin(b / 2)
    out = np.empty(angles.shape[:-1] + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * (a + c)) * cb
    out[..., 0, 1] = -np.exp(-0.5j * (a - c)) * sb
    out[..., 1, 0] = np.exp(0.5j * (a - c)) * sb
    out[..., 1, 1] = np.exp(0.5j * (a + c)) * cb
    return out


def _kron_batch(a, b) -> np.ndarray:
    return np.einsum("...ij,...kl->...ikjl", a, b).reshape(a.shape[:-2] + (4, 4))


def _efficiency_batch(params, prob: TransferProblem, t: float) -> np.ndarray:
    # params: (..., 14) = four z-y-z Euler triples and two simplex logits
    params = np.atleast_2d(params)
    locals_ = [_su2_batch(params[:, 3 * i : 3 * i + 3]) for i in range(4)]
    logits = np.concatenate([params[:, 12:14], np.zeros((len(params), 1))], axis=1)
    w = np.exp(logits - logits.max(axis=1, keepdims=True))
    w /= w.sum(axis=1, keepdims=True)
    u = _kron_batch(locals_[0], locals_[1]) @ coupling_unitary(t * w, prob.J) @ _kron_batch(
        locals_[2], locals_[3]
    )
    rho = u @ prob.rho0 @ np.swapaxes(u.conj(), -1, -2)
    return np.abs(np.einsum("ij,nij->n", prob.target.conj(), rho))


def efficiency_oracle(
    prob: TransferProblem,
    t: float,
    samples: int = 100_000,
    seed: int = 0,
    refine: int = 8,
) -> float:
    """Best efficiency found by sampling ``Q1 A(alpha) Q2`` with ``sum(alpha) = t``.

    Random local rotations and coupling splits are drawn from a seeded
    generator; the ``refine`` best draws are polished with Nelder-Mead.
    """
    if not 0 <= t * prob.J <= 1.5 + 1e-12:
        raise DomainError(f"t must lie in [0, 3/(2J)], got t*J = {t * prob.J}")
    prob.check()
    if t == 0:
        return efficiency(np.eye(prob.rho0.shape[0]), prob)
    rng = np.random.default_rng(seed)
    best = 0.0
    batch = 20_000
    pool = []
    for start in range(0, samples, batch):
        n = min(batch, samples - start)
        p = np.concatenate(
            [rng.uniform(-np.pi, np.pi, size=(n, 12)), rng.normal(scale=2.0, size=(n, 2))], axis=1
        )
        vals = _efficiency_batch(p, prob, t)
        idx = np.argsort(vals)[-refine:]
        pool.extend((vals[i], p[i]) for i in idx)
        best = max(best, float(vals.max()))
    pool.sort(key=lambda e: e[0], reverse=True)
    for _, p0 in pool[:refine]:
        res = minimize(
            lambda x: -_efficiency_batch(x, prob, t)[0],
            p0,
            method="Nelder-Mead",
            options={"maxiter": 20_000, "maxfev": 20_000, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True},
        )
        best = max(best, -float(res.fun))
    return best
