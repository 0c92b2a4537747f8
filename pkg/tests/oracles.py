"""Brute-force reference computations for the test suite.

None of these go through the package's decomposition code: they search
parameter grids directly and polish the best cells with scipy.
"""

from __future__ import annotations

import numpy as np
from scipy.linalg import expm
from scipy.optimize import least_squares, minimize
from scipy.spatial.transform import Rotation
from scipy.stats import special_ortho_group, unitary_group

SX = np.array([[0, 1], [1, 0]], dtype=complex)
SY = np.array([[0, -1j], [1j, 0]])
SZ = np.array([[1, 0], [0, -1]], dtype=complex)


def haar_unitary(n, rng):
    return unitary_group.rvs(n, random_state=rng)


def haar_special(n, rng):
    u = haar_unitary(n, rng)
    return u / np.linalg.det(u) ** (1 / n)


def random_local(rng):
    return np.kron(haar_special(2, rng), haar_special(2, rng))


def random_rotation(n, rng):
    return special_ortho_group.rvs(n, random_state=rng)


def torus(alpha, J):
    """``exp(-i 2 pi J sum a_k I_kS_k)`` by direct exponentiation."""
    h = sum(a * np.kron(p, p) / 4 for a, p in zip(alpha, (SX, SY, SZ)))
    return expm(-2j * np.pi * J * h)


def chamber_alpha(rng, J, total_max=1.5):
    """Random point with ``a1 >= a2 >= a3 >= 0`` inside the fundamental alcove."""
    while True:
        a = np.sort(rng.uniform(0, 0.5, size=3))[::-1]
        # stay away from the alcove faces, where several classes coincide
        if a[0] + a[1] <= 0.98 and a[0] - a[1] > 1e-3 and a[1] - a[2] > 1e-3 and a[2] > 1e-3 and a.sum() <= total_max:
            return a / J


# ---------------------------------------------------------------- rank one


def _rx_batch(phi):
    c, s = np.cos(phi / 2), np.sin(phi / 2)
    out = np.empty(phi.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = c
    out[..., 1, 1] = c
    out[..., 0, 1] = -1j * s
    out[..., 1, 0] = -1j * s
    return out


def _rz_batch(beta):
    out = np.zeros(beta.shape + (2, 2), dtype=complex)
    out[..., 0, 0] = np.exp(-0.5j * beta)
    out[..., 1, 1] = np.exp(0.5j * beta)
    return out


def su2_beta_oracle(u, step=0.05):
    """Least ``beta`` with ``u = +-Rx(p1) Rz(beta) Rx(p2)``, by grid then refinement."""
    g = np.arange(0, 2 * np.pi, step)
    b = np.arange(0, 2 * np.pi + step / 2, step)
    p1, bb, p2 = np.meshgrid(g, b, g, indexing="ij")
    r = _rx_batch(p1) @ _rz_batch(bb) @ _rx_batch(p2)
    overlap = np.abs(np.einsum("ij,...ij->...", u.conj(), r)) / 2
    dist = 1 - overlap
    # candidate cells, smallest beta first
    idx = np.argwhere(dist < 0.02)
    idx = idx[np.argsort(bb[tuple(idx.T)])]

    def resid(x):
        m = _rx_batch(np.array(x[0])) @ _rz_batch(np.array(x[1])) @ _rx_batch(np.array(x[2]))
        ph = np.trace(m.conj().T @ u)
        m = m * ph / abs(ph)
        d = (m - u).ravel()
        return np.concatenate([d.real, d.imag])

    best = None
    for cell in idx[:400]:
        x0 = [p1[tuple(cell)], bb[tuple(cell)], p2[tuple(cell)]]
        res = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        if np.linalg.norm(res.fun) < 1e-9:
            # Rz(beta + 2 pi) = -Rz(beta); keep tiny negative drifts near 0
            beta = float(np.mod(res.x[1] + 1e-9, 2 * np.pi) - 1e-9)
            best = beta if best is None else min(best, beta)
    return best


def _rot_x(g):
    c, s = np.cos(g), np.sin(g)
    return np.array([[c, -s, 0], [s, c, 0], [0, 0, 1.0]])


def _rot_z(b):
    c, s = np.cos(b), np.sin(b)
    return np.array([[1.0, 0, 0], [0, c, -s], [0, s, c]])


def so3_beta_oracle(theta, step=0.05):
    """``beta in [0, pi]`` minimizing ``|| Kx(g1) Kz(beta) Kx(g2) - theta ||``."""
    g = np.arange(0, 2 * np.pi, step)
    b = np.arange(0, np.pi + step / 2, step)
    kx = np.array([_rot_x(x) for x in g])
    kz = np.array([_rot_z(x) for x in b])
    best = (np.inf, None)
    for j, z in enumerate(kz):
        m = np.einsum("aij,jk,bkl->abil", kx, z, kx)
        d = np.linalg.norm(m - theta, axis=(-2, -1))
        i1, i2 = np.unravel_index(np.argmin(d), d.shape)
        if d[i1, i2] < best[0]:
            best = (d[i1, i2], (g[i1], b[j], g[i2]))

    def resid(x):
        return (_rot_x(x[0]) @ _rot_z(x[1]) @ _rot_x(x[2]) - theta).ravel()

    res = least_squares(resid, best[1], xtol=1e-15, ftol=1e-15, gtol=1e-15)
    beta = float(np.mod(res.x[1], 2 * np.pi))
    return min(beta, 2 * np.pi - beta), float(np.linalg.norm(res.fun))


def son_beta_oracle(theta, omega, samples=100_000, seed=0, refine=12):
    """Sample ``Q1, Q2`` in the stabilizer of ``e1`` and ``beta``; polish the best."""
    n = theta.shape[0]
    rng = np.random.default_rng(seed)

    def embed(rotvec):
        q = np.eye(n)
        q[1:, 1:] = Rotation.from_rotvec(rotvec).as_matrix()
        return q

    r1 = Rotation.random(samples, random_state=rng).as_matrix()
    r2 = Rotation.random(samples, random_state=rng).as_matrix()
    betas = rng.uniform(0, np.pi, samples)
    e = np.array([expm(b * omega) for b in np.linspace(0, np.pi, 181)])
    bidx = np.clip(np.round(betas / np.pi * 180).astype(int), 0, 180)
    q1 = np.tile(np.eye(n), (samples, 1, 1))
    q2 = q1.copy()
    q1[:, 1:, 1:] = r1
    q2[:, 1:, 1:] = r2
    m = q1 @ e[bidx] @ q2
    d = np.linalg.norm(m - theta, axis=(-2, -1))
    order = np.argsort(d)[:refine]

    def resid(x):
        return (embed(x[:3]) @ expm(x[3] * omega) @ embed(x[4:7]) - theta).ravel()

    best = (np.inf, None)
    for i in order:
        x0 = np.concatenate(
            [Rotation.from_matrix(r1[i]).as_rotvec(), [bidx[i] * np.pi / 180], Rotation.from_matrix(r2[i]).as_rotvec()]
        )
        res = least_squares(resid, x0, xtol=1e-15, ftol=1e-15, gtol=1e-15)
        nrm = float(np.linalg.norm(res.fun))
        if nrm < best[0]:
            beta = float(np.mod(res.x[3], 2 * np.pi))
            best = (nrm, min(beta, 2 * np.pi - beta))
    return best[1], best[0]


# ---------------------------------------------------------------- transfer


def inphase_simplex_oracle(t, J, step=1e-3, refine=True):
    """Max of half the two largest Sigma entries over ``a1 + a2 + a3 = t``, ``a >= 0``."""
    n = max(2, int(round(t / step)))
    h = t / n
    s = np.sin(np.pi * J * h * np.arange(n + 1))
    best = (-np.inf, None)
    for i in range(n + 1):
        j = np.arange(n + 1 - i)
        k = n - i - j
        s1, s2, s3 = s[i], s[j], s[k]
        sig = np.stack([s2 * s3, s1 * s3 * np.ones_like(s2), s1 * s2])
        sig.sort(axis=0)
        val = (sig[2] + sig[1]) / 2
        m = int(np.argmax(val))
        if val[m] > best[0]:
            best = (float(val[m]), (i * h, j[m] * h))
    if not refine:
        return best[0]

    def f(x):
        a = np.array([x[0], x[1], t - x[0] - x[1]])
        if np.any(a < 0):
            return 1.0
        s1, s2, s3 = np.sin(np.pi * J * a)
        sig = np.sort([s2 * s3, s1 * s3, s1 * s2])
        return -(sig[2] + sig[1]) / 2

    res = minimize(f, best[1], method="Nelder-Mead", options={"xatol": 1e-13, "fatol": 1e-15, "maxiter": 5000})
    return max(best[0], -float(res.fun))


def bilinear_oracle(a, samples=1_000_000, seed=0):
    """``max |p^dag U diag(a) V p|`` over sampled rotation pairs plus refinement."""
    rng = np.random.default_rng(seed)
    p = np.array([1, -1j, 0])
    sig = np.diag(a)
    best = (-np.inf, None)
    chunk = 200_000
    for start in range(0, samples, chunk):
        u = Rotation.random(chunk, random_state=rng)
        v = Rotation.random(chunk, random_state=rng)
        um, vm = u.as_matrix(), v.as_matrix()
        # p^dag U = conj(p) @ U
        left = np.einsum("i,nij->nj", p.conj(), um)
        right = np.einsum("nij,j->ni", vm, p)
        val = np.abs(np.einsum("nj,j,nj->n", left, np.asarray(a, float), right))
        m = int(np.argmax(val))
        if val[m] > best[0]:
            best = (float(val[m]), np.concatenate([u[m].as_rotvec(), v[m].as_rotvec()]))

    def f(x):
        um = Rotation.from_rotvec(x[:3]).as_matrix()
        vm = Rotation.from_rotvec(x[3:]).as_matrix()
        return -abs(p.conj() @ um @ sig @ vm @ p)

    res = minimize(f, best[1], method="Nelder-Mead", options={"xatol": 1e-12, "fatol": 1e-14, "maxiter": 20_000})
    return max(best[0], -float(res.fun))
