"""Product-operator algebra for coupled spin-1/2 systems.

Spin 1 is the leftmost tensor factor.  Single-spin operators are the
half-normalized Pauli matrices, and the basis of su(2^n) is built from
products ``B = 2^(q-1) * I_{k1 a1} ... I_{kq aq}`` over ``q >= 1`` spins.
"""

from __future__ import annotations

import itertools
import re
from dataclasses import dataclass, field
from functools import lru_cache, reduce

import numpy as np

from .errors import DomainError
from .numerics import as_matrix

AXES = ("x", "y", "z")
MAX_SPINS = 4

_PAULI = {
    "x": 0.5 * np.array([[0, 1], [1, 0]], dtype=complex),
    "y": 0.5 * np.array([[0, -1j], [1j, 0]], dtype=complex),
    "z": 0.5 * np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli(axis: str) -> np.ndarray:
    if axis not in _PAULI:
        raise DomainError(f"axis must be one of x, y, z; got {axis!r}")
    return _PAULI[axis].copy()


@dataclass(frozen=True)
class ProductOperator:
    """A product operator on ``n`` spins.

    ``axes`` is a tuple of length ``n`` holding ``'x'``, ``'y'``, ``'z'`` or
    ``None`` (identity factor) for each spin.
    """

    n: int
    axes: tuple
    matrix: np.ndarray = field(repr=False, compare=False)

    @property
    def q(self) -> int:
        return sum(a is not None for a in self.axes)

    @property
    def label(self) -> str:
        tokens = [f"I{k + 1}{a}" for k, a in enumerate(self.axes) if a is not None]
        prefix = 2 ** (self.q - 1)
        return " ".join(([str(prefix)] if prefix > 1 else []) + tokens)

    def __str__(self) -> str:
        return self.label


def _check_n(n: int) -> None:
    if not 1 <= n <= MAX_SPINS:
        raise DomainError(f"spin count must be in 1..{MAX_SPINS}, got {n}")


def product_operator(axes: tuple) -> ProductOperator:
    n = len(axes)
    _check_n(n)
    for a in axes:
        if a is not None and a not in _PAULI:
            raise DomainError(f"axis must be x, y, z or None; got {a!r}")
    q = sum(a is not None for a in axes)
    if q == 0:
        raise DomainError("the identity (q = 0) is not part of the algebra")
    factors = [np.eye(2, dtype=complex) if a is None else _PAULI[a] for a in axes]
    matrix = 2 ** (q - 1) * reduce(np.kron, factors)
    matrix.setflags(write=False)
    return ProductOperator(n, tuple(axes), matrix)


def embed(n: int, k: int, axis: str) -> ProductOperator:
    """Single-spin operator ``I_{k axis}`` on an ``n``-spin register (``k`` is 1-based)."""
    _check_n(n)
    if not 1 <= k <= n:
        raise DomainError(f"spin index {k} out of range 1..{n}")
    axes = [None] * n
    axes[k - 1] = axis
    return product_operator(tuple(axes))


def op(n: int, k: int, axis: str) -> np.ndarray:
    return embed(n, k, axis).matrix


@lru_cache(maxsize=None)
def _basis(n: int) -> tuple:
    out = []
    for q in range(1, n + 1):
        for spins in itertools.combinations(range(n), q):
            for axes in itertools.product(AXES, repeat=q):
                assignment = [None] * n
                for k, a in zip(spins, axes):
                    assignment[k] = a
                out.append(product_operator(tuple(assignment)))
    return tuple(out)


def product_basis(n: int) -> list[ProductOperator]:
    """The ``4^n - 1`` operators ``B_s``, ordered by ``q`` then by (spin, axis)."""
    _check_n(n)
    return list(_basis(n))


def commutator(a, b) -> np.ndarray:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return a @ b - b @ a


def hs_inner(a, b) -> complex:
    a = as_matrix(a)
    b = as_matrix(b)
    if a.shape != b.shape:
        raise DomainError(f"dimension mismatch: {a.shape} vs {b.shape}")
    return complex(np.trace(a.conj().T @ b))


def expand(m, n: int) -> np.ndarray:
    """Coefficients ``c_s = tr(B_s m) / tr(B_s B_s)`` in the product basis."""
    m = as_matrix(m)
    basis = _basis(n)
    norm = 2.0 ** (n - 2)
    return np.array([np.trace(b.matrix @ m) / norm for b in basis])


_TOKEN = re.compile(r"I(\d+)([xyz])")


def parse_product_operator(text: str, n: int | None = None) -> ProductOperator:
    """Parse notation such as ``"2 I1z I2z"`` or ``"I1x"``.

    The optional integer prefix must equal ``2^(q-1)`` when present.
    """
    parts = text.split()
    if not parts:
        raise DomainError("empty product-operator string")
    prefix = None
    if parts[0].isdigit():
        prefix = int(parts[0])
        parts = parts[1:]
    spins = {}
    for tok in parts:
        m = _TOKEN.fullmatch(tok)
        if not m:
            raise DomainError(f"bad product-operator token {tok!r}")
        k = int(m.group(1))
        if k in spins:
            raise DomainError(f"spin {k} appears twice in {text!r}")
        spins[k] = m.group(2)
    if not spins:
        raise DomainError(f"no spin operators in {text!r}")
    q = len(spins)
    if prefix is not None and prefix != 2 ** (q - 1):
        raise DomainError(f"prefix {prefix} does not match 2^(q-1) = {2 ** (q - 1)}")
    if n is None:
        n = max(spins)
    if max(spins) > n or min(spins) < 1:
        raise DomainError(f"spin index out of range 1..{n} in {text!r}")
    return product_operator(tuple(spins.get(k + 1) for k in range(n)))


# two-spin shorthands: I acts on spin 1, S on spin 2
def two_spin_ops() -> dict[str, np.ndarray]:
    ops = {}
    for a in AXES:
        ops[f"I{a}"] = op(2, 1, a)
        ops[f"S{a}"] = op(2, 2, a)
    for a in AXES:
        ops[f"I{a}S{a}"] = ops[f"I{a}"] @ ops[f"S{a}"]
    return ops
