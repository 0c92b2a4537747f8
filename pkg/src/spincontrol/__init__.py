"""Time-optimal control of coupled spin-1/2 systems via Cartan decompositions."""

from .cartan import (
    KakFactorization,
    TwoSpinCanonicalParams,
    canonical_class_vector,
    kak_so3,
    kak_su2,
    kak_su4,
    min_time_su2,
    min_time_two_spin,
    rank_one_min_time_son,
    torus_unitary,
)
from .config import DEFAULT_TOL, Tolerances
from .errors import DecompositionError, DomainError, SpinControlError
from .pulses import Drift, HardPulse, PulseSchedule, finite_amplitude_schedule, synthesize_two_spin
from .simulate import simulate, two_spin_system, verify_schedule
from .transfer import (
    antiphase_problem,
    efficiency,
    emit_curves,
    inphase_problem,
    isotropic_efficiency,
    optimal_antiphase,
    optimal_inphase,
)

__version__ = "0.1.0"

__all__ = [
    "DEFAULT_TOL",
    "DecompositionError",
    "DomainError",
    "Drift",
    "HardPulse",
    "KakFactorization",
    "PulseSchedule",
    "SpinControlError",
    "Tolerances",
    "TwoSpinCanonicalParams",
    "antiphase_problem",
    "canonical_class_vector",
    "efficiency",
    "emit_curves",
    "finite_amplitude_schedule",
    "inphase_problem",
    "isotropic_efficiency",
    "kak_so3",
    "kak_su2",
    "kak_su4",
    "min_time_su2",
    "min_time_two_spin",
    "optimal_antiphase",
    "optimal_inphase",
    "rank_one_min_time_son",
    "simulate",
    "synthesize_two_spin",
    "torus_unitary",
    "two_spin_system",
    "verify_schedule",
]
