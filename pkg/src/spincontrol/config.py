"""Tolerance pack shared by every numerical routine.

Defaults can be overridden process-wide with the ``GP_TOL`` environment
variable, which holds a JSON object of field overrides, for example
``GP_TOL='{"reconstruction": 1e-6}'``.
"""

from __future__ import annotations

import json
import os
from dataclasses import dataclass, fields, replace
from functools import lru_cache


@dataclass(frozen=True)
class Tolerances:
    hermitian: float = 1e-10
    unitary: float = 1e-9
    symmetric: float = 1e-9
    special: float = 1e-8
    cluster: float = 1e-8
    takagi: float = 1e-8
    reconstruction: float = 1e-7
    local_factor: float = 1e-8
    euler: float = 1e-8
    schedule: float = 1e-7
    normalization: float = 1e-10

    def override(self, **kwargs: float) -> "Tolerances":
        return replace(self, **kwargs)


def _from_env() -> Tolerances:
    raw = os.environ.get("GP_TOL")
    if not raw:
        return Tolerances()
    try:
        values = json.loads(raw)
    except json.JSONDecodeError as exc:
        raise ValueError(f"GP_TOL is not valid JSON: {raw!r}") from exc
    if not isinstance(values, dict):
        raise ValueError("GP_TOL must be a JSON object of tolerance overrides")
    known = {f.name for f in fields(Tolerances)}
    unknown = set(values) - known
    if unknown:
        raise ValueError(f"GP_TOL has unknown tolerance fields: {sorted(unknown)}")
    try:
        parsed = {k: float(v) for k, v in values.items()}
    except (TypeError, ValueError) as exc:
        raise ValueError(f"GP_TOL values must be numbers: {raw!r}") from exc
    bad = sorted(k for k, v in parsed.items() if not v > 0)
    if bad:
        raise ValueError(f"GP_TOL tolerances must be positive: {bad}")
    return Tolerances(**parsed)


DEFAULT_TOL = Tolerances()


@lru_cache(maxsize=1)
def default_tolerances() -> Tolerances:
    """Stock defaults with ``GP_TOL`` applied; read once per process."""
    return _from_env()


def resolve(tol: Tolerances | None) -> Tolerances:
    return default_tolerances() if tol is None else tol
