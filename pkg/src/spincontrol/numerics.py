"""Dense complex matrix kernels used by the Cartan and simulation layers.

Everything here works on plain ``numpy`` arrays of dtype ``complex128`` and
stays exact-unitary by construction: exponentials of Hermitian generators go
through a full Hermitian eigendecomposition rather than scaling-and-squaring.
"""

from __future__ import annotations

import json
from typing import Any

import numpy as np

from .config import Tolerances, resolve
from .errors import DomainError


def as_matrix(a: Any) -> np.ndarray:
    m = np.asarray(a, dtype=complex)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise DomainError(f"expected a square matrix, got shape {m.shape}")
    return m


def hermiticity_error(h: np.ndarray) -> float:
    return float(np.linalg.norm(h - h.conj().T))


def unitarity_error(u: np.ndarray) -> float:
    return float(np.linalg.norm(u.conj().T @ u - np.eye(u.shape[0])))


def is_hermitian(h: np.ndarray, tol: float = 1e-10) -> bool:
    return hermiticity_error(as_matrix(h)) <= tol


def is_unitary(u: np.ndarray, tol: float = 1e-9) -> bool:
    return unitarity_error(as_matrix(u)) <= tol


def require_unitary(u: Any, tol: Tolerances | None = None, name: str = "matrix") -> np.ndarray:
    tol = resolve(tol)
    m = as_matrix(u)
    err = unitarity_error(m)
    if err > tol.unitary:
        raise DomainError(
            f"{name} is not unitary: ||U^dag U - I||_F = {err:.3e} exceeds tolerance {tol.unitary:.1e}"
        )
    return m


def expm_generator(h: Any, t: float, tol: Tolerances | None = None) -> np.ndarray:
    """Return ``exp(-i h t)`` for Hermitian ``h``.

    Raises:
        DomainError: if ``h`` is not Hermitian within the configured tolerance.
    """
    tol = resolve(tol)
    h = as_matrix(h)
    err = hermiticity_error(h)
    if err > tol.hermitian:
        raise DomainError(
            f"generator is not Hermitian: ||H - H^dag||_F = {err:.3e} exceeds tolerance {tol.hermitian:.1e}"
        )
    h = 0.5 * (h + h.conj().T)
    w, v = np.linalg.eigh(h)
    return (v * np.exp(-1j * w * t)) @ v.conj().T


def proj_distance(u: Any, v: Any) -> float:
    """Phase-blind distance ``sqrt(1 - |tr(U^dag V)| / n)`` between unitaries.

    Evaluated as ``||U - exp(i phi) V||_F / sqrt(2n)`` with the optimal phase,
    which is the same quantity for unitaries but avoids the cancellation in
    ``1 - |tr|/n`` near zero.
    """
    u = as_matrix(u)
    v = as_matrix(v)
    if u.shape != v.shape:
        raise DomainError(f"dimension mismatch: {u.shape} vs {v.shape}")
    n = u.shape[0]
    tr = np.trace(u.conj().T @ v)
    phase = np.exp(-1j * np.angle(tr)) if abs(tr) > 0 else 1.0
    dist = np.linalg.norm(u - phase * v) / np.sqrt(2 * n)
    return float(min(1.0, dist))


def _real_symmetric_eigh(a: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    a = 0.5 * (a + a.T)
    return np.linalg.eigh(a)


def _clusters(values: np.ndarray, threshold: float) -> list[np.ndarray]:
    # values come sorted from eigh
    groups = [[0]]
    for i in range(1, len(values)):
        if values[i] - values[groups[-1][-1]] <= threshold:
            groups[-1].append(i)
        else:
            groups.append([i])
    return [np.array(g) for g in groups]


def _simultaneous_basis(re: np.ndarray, im: np.ndarray, threshold: float) -> np.ndarray:
    _, r = _real_symmetric_eigh(re)
    vals = np.diag(r.T @ re @ r)
    order = np.argsort(vals)
    r, vals = r[:, order], vals[order]
    basis = np.empty_like(r)
    for idx in _clusters(vals, threshold):
        block = r[:, idx]
        if len(idx) == 1:
            basis[:, idx] = block
            continue
        # re-diagonalize the imaginary part inside the degenerate subspace
        _, w = _real_symmetric_eigh(block.T @ im @ block)
        q, _ = np.linalg.qr(block @ w)
        basis[:, idx] = q
    return basis


def symmetric_unitary_eig(
    s: Any, tol: Tolerances | None = None
) -> tuple[np.ndarray, np.ndarray]:
    """Factor a complex symmetric unitary as ``R diag(exp(i*phases)) R^T``.

    ``R`` is real orthogonal and the phases lie in ``(-pi, pi]``.  The real and
    imaginary parts of ``S`` are commuting real symmetric matrices, so they
    share a real eigenbasis; degenerate clusters of the real part are split
    with the imaginary part.

    Raises:
        DomainError: if ``S`` is not symmetric or not unitary.
        DomainError: if no real eigenbasis reproduces ``S`` to tolerance.
    """
    tol = resolve(tol)
    s = as_matrix(s)
    sym_err = float(np.linalg.norm(s - s.T))
    if sym_err > tol.symmetric:
        raise DomainError(f"matrix is not symmetric: ||S - S^T||_F = {sym_err:.3e}")
    uerr = unitarity_error(s)
    if uerr > tol.symmetric:
        raise DomainError(f"matrix is not unitary: ||S^dag S - I||_F = {uerr:.3e}")

    candidates = [(s.real, s.imag)]
    rng = np.random.default_rng(20240611)
    # random real mixtures break accidental degeneracies the ordered pass misses
    for _ in range(16):
        a, b = rng.normal(size=2)
        mix = a * s.real + b * s.imag
        candidates.append((mix, s.real))

    best = None
    for re, im in candidates:
        r = _simultaneous_basis(re, im, tol.cluster)
        if np.linalg.det(r) < 0:
            r[:, 0] = -r[:, 0]
        diag = np.diag(r.T @ s @ r)
        phases = np.angle(diag)
        recon = (r * np.exp(1j * phases)) @ r.T
        err = float(np.linalg.norm(recon - s))
        if best is None or err < best[0]:
            best = (err, phases, r)
        if err <= tol.takagi:
            break
    err, phases, r = best
    if err > tol.takagi:
        raise DomainError(
            f"failed to find a real eigenbasis (residual {err:.3e}); degenerate cluster beyond tolerance"
        )
    phases = np.where(phases <= -np.pi, phases + 2 * np.pi, phases)
    return phases, r


def matrix_to_json(m: np.ndarray) -> dict:
    m = as_matrix(m)
    return {
        "dim": int(m.shape[0]),
        "re": [[float(x) for x in row] for row in m.real],
        "im": [[float(x) for x in row] for row in m.imag],
    }


def matrix_from_json(obj: dict | str) -> np.ndarray:
    if isinstance(obj, str):
        obj = json.loads(obj)
    try:
        dim = int(obj["dim"])
        re = np.asarray(obj["re"], dtype=float)
        im = np.asarray(obj.get("im", np.zeros((dim, dim))), dtype=float)
    except (KeyError, TypeError, ValueError) as exc:
        raise DomainError(f"malformed matrix object: {exc}") from exc
    if re.shape != (dim, dim) or im.shape != (dim, dim):
        raise DomainError(f"matrix entries do not match dim={dim}: re {re.shape}, im {im.shape}")
    return re + 1j * im
