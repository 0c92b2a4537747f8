"""Cartan (KAK) decompositions and minimum control times.

Rank-one cases (SU(2), SO(3), SO(n)) reduce to reading a single angle off a
matrix entry.  The two-spin case works in the magic basis, where the local
group SU(2) x SU(2) becomes SO(4) and the coupling torus becomes diagonal.

Time units: for two spins, canonical parameters ``alpha`` are durations in
seconds of evolution under ``2*pi*J*I_aS_a``; internally they are handled as
dimensionless ``x = alpha * J`` with period 1 per coordinate.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from typing import NamedTuple

import numpy as np
from scipy.linalg import expm

from .config import Tolerances, resolve
from .errors import DecompositionError, DomainError
from .numerics import (
    as_matrix,
    proj_distance,
    require_unitary,
    symmetric_unitary_eig,
)
from .spin_algebra import pauli, two_spin_ops

_OPS = two_spin_ops()
IXSX, IYSY, IZSZ = _OPS["IxSx"], _OPS["IySy"], _OPS["IzSz"]
_SIGMA_SIGMA = (4 * IXSX, 4 * IYSY, 4 * IZSZ)  # XX, YY, ZZ

# Bell-type basis; columns are the basis vectors.
MAGIC = np.array(
    [[1, 0, 0, 1j], [0, 1j, 1, 0], [0, 1j, -1, 0], [1, 0, 0, -1j]], dtype=complex
) / np.sqrt(2)
MAGIC_DAG = MAGIC.conj().T

# diag(M^dag (c1 XX + c2 YY + c3 ZZ) M) = _TORUS_MAP @ c
_TORUS_MAP = np.real(
    np.stack([np.diag(MAGIC_DAG @ s @ MAGIC) for s in _SIGMA_SIGMA], axis=1)
).round()

# signed permutations with an even number of sign flips
WEYL_GROUP = tuple(
    (perm, signs)
    for perm in itertools.permutations(range(3))
    for signs in itertools.product((1, -1), repeat=3)
    if np.prod(signs) == 1
)

_LATTICE = np.array(list(itertools.product(range(-2, 3), repeat=3)))

GROUPS = ("SU2", "SO3", "SOn", "SU4")


# ---------------------------------------------------------------- rank one

OMEGA_X = np.array([[0, -1, 0], [1, 0, 0], [0, 0, 0]], dtype=float)
OMEGA_Z = np.array([[0, 0, 0], [0, 0, -1], [0, 1, 0]], dtype=float)


def _rot2(a: float, axis: str) -> np.ndarray:
    return expm(-1j * a * pauli(axis))


class SU2Decomposition(NamedTuple):
    phi1: float
    beta: float
    phi2: float
    sign: int


_HX = (2 * pauli("x") + 2 * pauli("z")) / np.sqrt(2)  # swaps I_x and I_z under conjugation


def kak_su2(u, tol: Tolerances | None = None) -> SU2Decomposition:
    """Write ``U = sign * exp(-i phi1 I_x) exp(-i beta I_z) exp(-i phi2 I_x)``.

    ``beta`` is the smallest angle over all such representations and lies in
    ``[0, pi]``: since ``-1 = exp(-2 pi i I_x)`` belongs to the x-rotation
    subgroup, ``beta`` and ``2 pi - beta`` name the same double coset.
    """
    tol = resolve(tol)
    u = require_unitary(u, tol, "U_F")
    if u.shape != (2, 2):
        raise DomainError(f"expected a 2x2 matrix, got {u.shape}")
    det = np.linalg.det(u)
    if abs(det - 1) > tol.unitary:
        raise DomainError(f"U_F is not special unitary: |det - 1| = {abs(det - 1):.3e}")
    v = _HX @ u @ _HX  # now v = Rz(phi1) Rx(beta) Rz(phi2)
    beta = 2 * math.atan2(abs(v[1, 0]), abs(v[0, 0]))
    if abs(v[0, 0]) > 1e-12 and abs(v[1, 0]) > 1e-12:
        plus = -2 * np.angle(v[0, 0])
        minus = 2 * np.angle(1j * v[1, 0])
    elif abs(v[1, 0]) <= 1e-12:
        plus, minus = -2 * np.angle(v[0, 0]), 0.0
    else:
        plus, minus = 0.0, 2 * np.angle(1j * v[1, 0])
    phi1 = float((plus + minus) / 2)
    phi2 = float((plus - minus) / 2)
    recon = _rot2(phi1, "x") @ _rot2(beta, "z") @ _rot2(phi2, "x")
    sign = 1 if np.linalg.norm(recon - u) <= np.linalg.norm(recon + u) else -1
    err = float(np.linalg.norm(sign * recon - u))
    if err > tol.euler:
        raise DecompositionError(f"SU(2) reconstruction residual {err:.3e}", err)
    return SU2Decomposition(phi1, float(beta), phi2, sign)


def min_time_su2(u, tol: Tolerances | None = None) -> float:
    return kak_su2(u, tol).beta


def _check_rotation(theta, n: int | None, tol: Tolerances) -> np.ndarray:
    theta = np.asarray(theta, dtype=float)
    if theta.ndim != 2 or theta.shape[0] != theta.shape[1]:
        raise DomainError(f"expected a square rotation matrix, got shape {theta.shape}")
    if n is not None and theta.shape != (n, n):
        raise DomainError(f"expected a {n}x{n} rotation, got {theta.shape}")
    err = float(np.linalg.norm(theta.T @ theta - np.eye(theta.shape[0])))
    if err > tol.unitary or abs(np.linalg.det(theta) - 1) > tol.unitary:
        raise DomainError(f"not a proper rotation (orthogonality error {err:.3e})")
    return theta


def kak_so3(theta, tol: Tolerances | None = None) -> tuple[float, float, float]:
    """Angles with ``exp(g1 Omega_x) exp(beta Omega_z) exp(g2 Omega_x) = theta``."""
    tol = resolve(tol)
    theta = _check_rotation(theta, 3, tol)
    # arccos(theta[2, 2]), evaluated without the loss of digits near +-1
    s = math.hypot(theta[0, 2], theta[1, 2])
    beta = math.atan2(s, theta[2, 2])
    if s > 1e-12:
        g1 = math.atan2(theta[0, 2], -theta[1, 2])
        g2 = math.atan2(theta[2, 0], theta[2, 1])
    else:
        # column/row 3 is +-e3: only g1 + g2 (or g1 - g2) is determined
        g2 = 0.0
        rest = theta @ expm(-beta * OMEGA_Z)
        g1 = math.atan2(rest[1, 0], rest[0, 0])
    recon = expm(g1 * OMEGA_X) @ expm(beta * OMEGA_Z) @ expm(g2 * OMEGA_X)
    err = float(np.linalg.norm(recon - theta))
    if err > tol.euler:
        raise DecompositionError(f"SO(3) reconstruction residual {err:.3e}", err)
    return g1, beta, g2


def rank_one_min_time_son(theta, omega_d, tol: Tolerances | None = None) -> float:
    """Minimum time on SO(n) with drift ``omega_d`` and fast SO(n-1) controls.

    The fast subgroup fixes ``e1``, and the drift must be supported on the
    first row and column with ``||omega_d e1|| = 1`` (period ``2 pi``).
    """
    tol = resolve(tol)
    theta = _check_rotation(theta, None, tol)
    n = theta.shape[0]
    omega = np.asarray(omega_d, dtype=float)
    if omega.shape != (n, n):
        raise DomainError(f"drift shape {omega.shape} does not match rotation {theta.shape}")
    if np.linalg.norm(omega + omega.T) > tol.unitary:
        raise DomainError("drift generator is not skew-symmetric")
    if np.linalg.norm(omega[1:, 1:]) > tol.unitary:
        raise DomainError("drift generator must vanish outside the first row and column")
    speed = float(np.linalg.norm(omega[:, 0]))
    if abs(speed - 1) > tol.unitary:
        raise DomainError(f"drift period normalization violated: ||omega_d e1|| = {speed:.12f}")
    # arccos of <e1, theta e1>, via atan2 for accuracy near 0 and pi
    return math.atan2(float(np.linalg.norm(theta[1:, 0])), float(theta[0, 0]))


# ---------------------------------------------------------------- two spins


def magic_transform(u) -> np.ndarray:
    return MAGIC_DAG @ as_matrix(u) @ MAGIC


def torus_unitary(alpha, J: float) -> np.ndarray:
    """``exp(-i 2 pi J (a1 IxSx + a2 IySy + a3 IzSz))`` for a signed triple."""
    # the three terms commute and are diagonal in the magic basis
    c = -0.5 * np.pi * J * np.asarray(alpha, dtype=float)
    diag = np.exp(1j * (_TORUS_MAP @ c))
    return MAGIC @ np.diag(diag) @ MAGIC_DAG


@dataclass(frozen=True)
class TwoSpinCanonicalParams:
    """Weyl-reduced coupling durations ``alpha1 >= alpha2 >= alpha3 >= 0``.

    ``chirality`` is the sign carried by the third term; classes with
    ``chirality = -1`` are mirror images that need a ``-I_zS_z`` leg.
    """

    alpha: tuple
    J: float
    chirality: int = 1

    @property
    def signed(self) -> tuple:
        a1, a2, a3 = self.alpha
        return (a1, a2, self.chirality * a3)

    @property
    def total(self) -> float:
        return float(sum(self.alpha))

    def unitary(self) -> np.ndarray:
        return torus_unitary(self.signed, self.J)


@dataclass(frozen=True)
class KakFactorization:
    """``target = exp(i phase) * q1 @ A(params) @ q2``."""

    group: str
    q1: np.ndarray = field(repr=False)
    params: object
    q2: np.ndarray = field(repr=False)
    phase: float = 0.0
    residual: float = 0.0
    q1_factors: tuple = field(default=(), repr=False)
    q2_factors: tuple = field(default=(), repr=False)

    @property
    def t_star(self) -> float:
        if isinstance(self.params, TwoSpinCanonicalParams):
            return self.params.total
        return float(self.params)

    def core(self) -> np.ndarray:
        if isinstance(self.params, TwoSpinCanonicalParams):
            return self.params.unitary()
        if self.group == "SU2":
            return _rot2(float(self.params), "z")
        raise ValueError(f"no core unitary for group {self.group}")

    def reconstruct(self) -> np.ndarray:
        return np.exp(1j * self.phase) * (self.q1 @ self.core() @ self.q2)


def kron_factor(q, tol: Tolerances | None = None) -> tuple[complex, np.ndarray, np.ndarray]:
    """Split a 4x4 local unitary into ``g * kron(a, b)`` with ``a, b`` in SU(2)."""
    tol = resolve(tol)
    q = as_matrix(q)
    # q[(i,j),(k,l)] = a[i,k] b[j,l]  ->  rank-one in the (i,k),(j,l) grouping
    r = q.reshape(2, 2, 2, 2).transpose(0, 2, 1, 3).reshape(4, 4)
    u, s, vh = np.linalg.svd(r)
    a = np.sqrt(s[0]) * u[:, 0].reshape(2, 2)
    b = np.sqrt(s[0]) * vh[0].reshape(2, 2)
    a = a / np.sqrt(np.linalg.det(a))
    b = b / np.sqrt(np.linalg.det(b))
    kab = np.kron(a, b)
    g = np.trace(kab.conj().T @ q) / 4
    err = float(np.linalg.norm(q - g * kab))
    if err > tol.local_factor:
        raise DecompositionError(f"matrix is not a local (product) unitary: residual {err:.3e}", err)
    return complex(g), a, b


class _RawKak(NamedTuple):
    o1: np.ndarray  # real SO(4), magic frame
    d: np.ndarray  # magic-frame torus phases, sum = 0 mod 2 pi
    p: np.ndarray  # real SO(4); right factor is p.T
    phase: float  # U = exp(i phase) * U4 with det U4 = 1


def _raw_kak(u: np.ndarray, tol: Tolerances) -> _RawKak:
    det = np.linalg.det(u)
    phase = float(np.angle(det) / 4)
    u4 = u * np.exp(-1j * phase)
    up = MAGIC_DAG @ u4 @ MAGIC
    m = up.T @ up
    m = 0.5 * (m + m.T)
    theta, p = symmetric_unitary_eig(m, tol)
    d = theta / 2
    if np.real(np.exp(-1j * d.sum())) < 0:
        d[3] += np.pi
    o1 = up @ p @ np.diag(np.exp(-1j * d))
    imag = float(np.linalg.norm(o1.imag))
    if imag > 1e-6:
        raise DecompositionError(f"left factor is not real in the magic frame (|Im| = {imag:.3e})", imag)
    return _RawKak(o1.real, d, p, phase)


def _weyl_canonical(x: np.ndarray) -> np.ndarray:
    """Lexicographically largest Weyl image: ``x1 >= x2 >= |x3|``."""
    best = None
    for perm, signs in WEYL_GROUP:
        y = np.array(signs) * x[list(perm)]
        key = tuple(np.round(y, 12))
        if best is None or key > best[0]:
            best = (key, y)
    return best[1]


def _minimal_representative(x0: np.ndarray, parity: int | None) -> tuple[np.ndarray, float]:
    """Smallest-l1 equivalent of ``x0`` over lattice shifts and Weyl images."""
    base = x0 - 2 * np.round(x0 / 2)  # even shifts keep the phase parity
    cands = base[None, :] + _LATTICE
    if parity is not None:
        ok = (_LATTICE.sum(axis=1) - parity) % 2 == 0
        cands = cands[ok]
    l1 = np.abs(cands).sum(axis=1)
    best_l1 = l1.min()
    ties = cands[l1 <= best_l1 + 1e-10]
    reps = [_weyl_canonical(c) for c in ties]
    rep = max(reps, key=lambda y: tuple(np.round(y, 12)))
    return rep, float(best_l1)


def _parity(total_phase: float) -> int:
    quarter = total_phase / (np.pi / 2)
    k = int(np.round(quarter))
    if abs(quarter - k) > 1e-6:
        raise DomainError("strict mode requires a special unitary target (det = 1)")
    return k % 2


def _check_two_spin_input(u, J: float, strict: bool, tol: Tolerances) -> np.ndarray:
    u = require_unitary(u, tol, "U_F")
    if u.shape != (4, 4):
        raise DomainError(f"expected a 4x4 unitary, got {u.shape}")
    if not J > 0:
        raise DomainError(f"coupling J must be positive, got {J}")
    if strict:
        det = np.linalg.det(u)
        if abs(det - 1) > tol.special:
            raise DomainError(f"strict mode requires det U_F = 1 (|det - 1| = {abs(det - 1):.3e})")
    return u


def _canonical_from_raw(raw: _RawKak, J: float, strict: bool) -> tuple[TwoSpinCanonicalParams, float]:
    c = _TORUS_MAP.T @ raw.d / 4
    c0 = float(raw.d.mean())
    x0 = -2 * c / np.pi  # x = alpha * J
    parity = _parity(raw.phase + c0) if strict else None
    rep, l1 = _minimal_representative(x0, parity)
    chir = -1 if rep[2] < -1e-12 else 1
    params = TwoSpinCanonicalParams(
        (float(rep[0]) / J, float(rep[1]) / J, float(abs(rep[2])) / J), float(J), chir
    )
    return params, l1 / J


def canonical_class_vector(
    u, J: float, strict: bool = False, tol: Tolerances | None = None
) -> TwoSpinCanonicalParams:
    """Weyl-reduced durations identifying the double coset ``K U K``.

    By default the target is compared modulo a global phase; ``strict``
    treats ``U`` as an element of SU(4), where only ``+-1`` are local.
    """
    tol = resolve(tol)
    u = _check_two_spin_input(u, J, strict, tol)
    params, _ = _canonical_from_raw(_raw_kak(u, tol), J, strict)
    return params


def _match(raw: _RawKak, params: TwoSpinCanonicalParams, u: np.ndarray, strict: bool):
    c_t = -0.5 * np.pi * params.J * np.asarray(params.signed)
    dt = np.exp(1j * (_TORUS_MAP @ c_t))
    ed = np.exp(1j * raw.d)
    best = None
    for sigma in itertools.permutations(range(4)):
        target = dt[list(sigma)]
        for signs in itertools.product((1, -1), repeat=3):
            s = np.array(signs + (int(np.prod(signs)),))
            r = ed / (s * target)
            psi = np.angle(r[0])
            spread = float(np.max(np.abs(r - r[0])))
            if strict:
                total = raw.phase + psi
                # global -1 is local; +-i is not
                if abs(np.sin(total)) > 1e-6:
                    continue
            if best is None or spread < best[0]:
                best = (spread, sigma, s, psi)
    if best is None:
        return None
    _, sigma, s, psi = best
    perm = np.zeros((4, 4))
    perm[np.arange(4), list(sigma)] = 1
    f = np.diag([np.linalg.det(perm), 1, 1, 1])
    ka = raw.o1 @ np.diag(s) @ perm @ f
    kb = f @ perm.T @ raw.p.T
    q1 = MAGIC @ ka @ MAGIC_DAG
    q2 = MAGIC @ kb @ MAGIC_DAG
    phase = raw.phase + psi
    if strict and np.cos(phase) < 0:
        q1, phase = -q1, phase - np.pi
    return q1, q2, float(np.angle(np.exp(1j * phase)))


def kak_su4(
    u, J: float, strict: bool = False, tol: Tolerances | None = None
) -> KakFactorization:
    """Factor a two-spin propagator as ``q1 @ A(alpha) @ q2`` with local ``q1, q2``.

    ``alpha`` is the canonical (minimal-time) class vector, so
    ``result.t_star`` is the infimizing control time.

    Raises:
        DomainError: non-unitary input or wrong dimension.
        DecompositionError: reconstruction residual above tolerance.
    """
    tol = resolve(tol)
    u = _check_two_spin_input(u, J, strict, tol)
    raw = _raw_kak(u, tol)
    params, _ = _canonical_from_raw(raw, J, strict)

    attempts = [params]
    if params.alpha[2] > 0:
        attempts.append(TwoSpinCanonicalParams(params.alpha, params.J, -params.chirality))
    best = None
    for cand in attempts:
        matched = _match(raw, cand, u, strict)
        if matched is None:
            continue
        q1, q2, phase = matched
        try:
            g1, a1, b1 = kron_factor(q1, tol)
            g2, a2, b2 = kron_factor(q2, tol)
        except DecompositionError:
            continue
        q1 = g1 * np.kron(a1, b1)
        q2 = g2 * np.kron(a2, b2)
        recon = np.exp(1j * phase) * (q1 @ cand.unitary() @ q2)
        if strict:
            residual = float(np.linalg.norm(recon - u))
        else:
            residual = proj_distance(recon, u)
        if best is None or residual < best[0]:
            best = (residual, cand, q1, q2, phase, (a1, b1), (a2, b2))
        if residual <= tol.reconstruction:
            break
    if best is None or best[0] > tol.reconstruction:
        res = None if best is None else best[0]
        raise DecompositionError(
            f"two-spin KAK failed verification (residual {res}); canonical alpha*J = "
            f"{tuple(a * J for a in params.alpha)}",
            res,
        )
    residual, cand, q1, q2, phase, f1, f2 = best
    return KakFactorization("SU4", q1, cand, q2, phase, residual, f1, f2)


def min_time_two_spin(u, J: float, strict: bool = False, tol: Tolerances | None = None) -> float:
    """Infimizing time: smallest ``sum(alpha)`` over all ``U = Q1 A(alpha) Q2``."""
    return kak_su4(u, J, strict, tol).t_star


# ---------------------------------------------------------------- Weyl orbit


@dataclass(frozen=True)
class WeylOrbitSet:
    elements: tuple = field(repr=False)
    labels: tuple
    hull_coords: np.ndarray = field(repr=False)


def weyl_orbit_two_spin() -> WeylOrbitSet:
    """``{+-IxSx, +-IySy, +-IzSz}``; coordinates are w.r.t. ``(IxSx, IySy, IzSz)``."""
    terms = (("IxSx", IXSX), ("IySy", IYSY), ("IzSz", IZSZ))
    elements, labels, coords = [], [], []
    for k, (name, mat) in enumerate(terms):
        for sgn in (1, -1):
            elements.append(sgn * mat)
            labels.append(("+" if sgn > 0 else "-") + name)
            v = np.zeros(3)
            v[k] = sgn
            coords.append(v)
    return WeylOrbitSet(tuple(elements), tuple(labels), np.array(coords))


def hull_membership(y) -> tuple[bool, np.ndarray]:
    """Test membership in the cross-polytope ``||y||_1 <= 1``.

    Returns the flag and sign-split weights on the vertices
    ``(+e1, -e1, +e2, -e2, +e3, -e3)``; the weights sum to ``||y||_1``.
    """
    y = np.asarray(y, dtype=float)
    weights = np.empty(6)
    weights[0::2] = np.maximum(y, 0)
    weights[1::2] = np.maximum(-y, 0)
    return bool(np.abs(y).sum() <= 1 + 1e-12), weights


def hull_coordinates(h) -> np.ndarray:
    """Coordinates of ``h`` in the ``(IxSx, IySy, IzSz)`` frame (orthogonal projection)."""
    h = as_matrix(h)
    return np.array([np.real(np.trace(t @ h)) / np.real(np.trace(t @ t)) for t in (IXSX, IYSY, IZSZ)])
