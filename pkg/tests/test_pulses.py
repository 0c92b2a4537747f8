import json
import math

import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from oracles import chamber_alpha, haar_special, haar_unitary, random_local, torus
from spincontrol.cartan import IXSX, IYSY, IZSZ, kak_su4, kron_factor
from spincontrol.errors import DecompositionError, DomainError
from spincontrol.numerics import expm_generator, proj_distance
from spincontrol.pulses import (
    Drift,
    HardPulse,
    PulseSchedule,
    conjugating_rotations,
    finite_amplitude_schedule,
    local_euler_pulses,
    simplify,
    synthesize_two_spin,
)
from spincontrol.simulate import simulate, two_spin_system
from spincontrol.spin_algebra import op, pauli, two_spin_ops

OPS = two_spin_ops()
J = 100.0
SPEC = two_spin_system(J)


def apply_2x2(pulses):
    u = np.eye(2, dtype=complex)
    for p in pulses:
        u = expm_generator(pauli(p.axis), p.angle) @ u
    return u


# ---------------------------------------------------------------- conjugation


def test_zz_needs_no_rotation():
    k, kinv = conjugating_rotations("zz")
    np.testing.assert_allclose(k, np.eye(4), atol=1e-15)


def test_xx_rotation():
    k, kinv = conjugating_rotations("xx")
    want = expm_generator(OPS["Iy"] + OPS["Sy"], np.pi / 2)
    assert proj_distance(k, want) <= 1e-12
    assert np.linalg.norm(kinv @ IZSZ @ k - IXSX) <= 1e-10


def test_yy_rotation():
    k, kinv = conjugating_rotations("yy")
    want = expm_generator(OPS["Ix"] + OPS["Sx"], -np.pi / 2)
    assert proj_distance(k, want) <= 1e-12
    assert np.linalg.norm(kinv @ IZSZ @ k - IYSY) <= 1e-10


@pytest.mark.parametrize("term,mat", [("xx", IXSX), ("yy", IYSY), ("zz", IZSZ)])
@pytest.mark.parametrize("sign", [1, -1])
def test_conjugation_is_local_and_exact(term, mat, sign):
    k, kinv = conjugating_rotations(term, sign)
    kron_factor(k)
    np.testing.assert_allclose(kinv @ k, np.eye(4), atol=1e-14)
    assert np.linalg.norm(kinv @ IZSZ @ k - sign * mat) <= 1e-10


def test_conjugation_rejects_unknown_term():
    with pytest.raises(DomainError):
        conjugating_rotations("xy")


# ---------------------------------------------------------------- Euler pulses


def test_euler_identity_is_empty():
    assert local_euler_pulses(np.eye(2)) == []


def test_euler_single_x_pulse():
    pulses = local_euler_pulses(expm_generator(pauli("x"), np.pi / 2))
    assert len(pulses) == 1
    assert pulses[0].axis == "x" and pulses[0].angle == pytest.approx(np.pi / 2, abs=1e-12)


def test_euler_single_y_pulse():
    pulses = local_euler_pulses(expm_generator(pauli("y"), -0.4), spin=2)
    assert [(p.spin, p.axis) for p in pulses] == [(2, "y")]
    assert pulses[0].angle == pytest.approx(-0.4, abs=1e-12)


@given(st.integers(0, 2**32 - 1))
def test_euler_round_trip(seed):
    q = haar_unitary(2, np.random.default_rng(seed))
    pulses = local_euler_pulses(q)
    assert proj_distance(apply_2x2(pulses), q) <= 1e-8
    assert all(-np.pi < p.angle <= np.pi for p in pulses)
    assert all(p.axis in ("x", "y") for p in pulses)
    assert len(pulses) <= 3


def test_euler_rejects_bad_input():
    with pytest.raises(DomainError):
        local_euler_pulses(2 * np.eye(2))
    with pytest.raises(DomainError):
        local_euler_pulses(np.eye(4))


# ---------------------------------------------------------------- synthesis


def test_identity_gives_empty_schedule():
    s = synthesize_two_spin(kak_su4(np.eye(4), J))
    assert s.segments == ()
    assert s.total_drift == 0


def test_pure_coupling_is_one_drift():
    tau = 0.3 / J
    u = expm_generator(2 * np.pi * J * IZSZ, tau)
    s = synthesize_two_spin(kak_su4(u, J))
    assert len(s.segments) == 1
    assert isinstance(s.segments[0], Drift)
    assert s.segments[0].seconds == pytest.approx(tau, abs=1e-12)


def test_random_targets_round_trip(rng):
    for _ in range(20):
        u = haar_unitary(4, rng)
        k = kak_su4(u, J)
        s = synthesize_two_spin(k)
        assert proj_distance(simulate(s, SPEC), u) <= 1e-7
        assert s.total_drift == pytest.approx(k.t_star, abs=1e-15)


@given(st.integers(0, 2**32 - 1))
def test_canonical_inputs_take_exactly_sum_alpha(seed):
    rng = np.random.default_rng(seed)
    a = chamber_alpha(rng, J)
    u = random_local(rng) @ torus(a, J) @ random_local(rng)
    s = synthesize_two_spin(kak_su4(u, J))
    assert s.total_drift == pytest.approx(a.sum(), abs=1e-7 / J)
    assert proj_distance(simulate(s, SPEC), u) <= 1e-7


def test_mirror_class_uses_negative_leg(rng):
    u = random_local(rng) @ torus((0.3 / J, 0.2 / J, -0.1 / J), J) @ random_local(rng)
    k = kak_su4(u, J)
    assert k.params.chirality == -1
    s = synthesize_two_spin(k)
    assert proj_distance(simulate(s, SPEC), u) <= 1e-7
    assert s.total_drift == pytest.approx(0.6 / J, abs=1e-9 / J)


@pytest.mark.parametrize(
    "gate",
    [np.eye(4)[[0, 2, 1, 3]], np.eye(4)[[0, 1, 3, 2]], np.diag([1, 1, 1, -1])],
    ids=["swap", "cnot", "cz"],
)
def test_degenerate_gates(gate):
    s = synthesize_two_spin(kak_su4(gate, J))
    assert proj_distance(simulate(s, SPEC), gate) <= 1e-7


def test_schedule_pulses_are_normalized(rng):
    s = synthesize_two_spin(kak_su4(haar_unitary(4, rng), J))
    for seg in s.pulses:
        assert -np.pi < seg.angle <= np.pi
        assert abs(seg.angle) > 0
    # no two adjacent pulses on the same spin and axis inside a pulse run
    for a, b in zip(s.segments, s.segments[1:]):
        if isinstance(a, HardPulse) and isinstance(b, HardPulse):
            assert (a.spin, a.axis) != (b.spin, b.axis)


def test_synthesis_rejects_bad_factorization(rng):
    k = kak_su4(haar_unitary(4, rng), J)
    bad = k.__class__(k.group, k.q1, k.params, k.q2, k.phase, 1e-3, k.q1_factors, k.q2_factors)
    with pytest.raises(DecompositionError):
        synthesize_two_spin(bad)


# ---------------------------------------------------------------- elision


segment = st.one_of(
    st.builds(
        HardPulse,
        st.sampled_from([1, 2]),
        st.sampled_from(["x", "y", "z"]),
        st.one_of(st.just(0.0), st.just(2 * np.pi), st.floats(-7, 7)),
    ),
    st.builds(Drift, st.one_of(st.just(0.0), st.floats(0, 0.02))),
)


@given(st.lists(segment, max_size=12))
def test_elision_preserves_propagator(segs):
    before = simulate(PulseSchedule(tuple(segs), J), SPEC)
    after = simulate(PulseSchedule(simplify(segs), J), SPEC)
    assert proj_distance(before, after) <= 1e-10
    for s in simplify(segs):
        if isinstance(s, HardPulse):
            assert abs(s.angle) > 0 and -np.pi < s.angle <= np.pi
        else:
            assert s.seconds > 0


# ---------------------------------------------------------------- finite amplitude


def test_finite_empty():
    s = finite_amplitude_schedule(PulseSchedule((), J), 1e4)
    assert s.segments == ()


def test_finite_pulse_duration():
    s = PulseSchedule((HardPulse(1, "x", np.pi / 2),), J)
    f = finite_amplitude_schedule(s, 2 * np.pi * 1e4)
    assert f.segments[0].duration == pytest.approx(2.5e-5, rel=1e-12)


def test_finite_wall_time(rng):
    s = synthesize_two_spin(kak_su4(haar_unitary(4, rng), J))
    amp = 2 * np.pi * 5e3
    f = finite_amplitude_schedule(s, amp)
    want = s.total_drift + sum(abs(p.angle) for p in s.pulses) / amp
    assert f.wall_time == pytest.approx(want, rel=1e-12)
    assert all(p.duration > 0 for p in f.pulses)
    assert f.total_drift == s.total_drift


def test_finite_error_shrinks_with_amplitude(rng):
    amp = 2 * np.pi * 1e3
    for _ in range(5):
        u = haar_unitary(4, rng)
        s = synthesize_two_spin(kak_su4(u, J))
        errs = [proj_distance(simulate(s, SPEC, amp * m), u) for m in (1, 10, 100, 1000)]
        assert all(b < a for a, b in zip(errs, errs[1:]))


@pytest.mark.parametrize("amp", [0.0, -1.0, math.inf])
def test_finite_rejects_bad_amplitude(amp):
    with pytest.raises(DomainError):
        finite_amplitude_schedule(PulseSchedule((), J), amp)


# ---------------------------------------------------------------- JSON


def test_schedule_json_round_trip(rng):
    s = synthesize_two_spin(kak_su4(haar_unitary(4, rng), J))
    obj = json.loads(json.dumps(s.to_json()))
    assert set(obj) == {"segments", "J_hz", "total_drift_s"}
    assert obj["total_drift_s"] == s.total_drift
    assert PulseSchedule.from_json(obj) == s
    f = finite_amplitude_schedule(s, 1e5)
    assert PulseSchedule.from_json(json.dumps(f.to_json())) == f


@pytest.mark.parametrize(
    "obj",
    [
        {"segments": [{"kind": "wait", "seconds": 1}], "J_hz": 1},
        {"segments": [{"kind": "drift", "seconds": -1}], "J_hz": 1},
        {"segments": [{"kind": "pulse", "spin": 1, "axis": "q", "angle_rad": 1}], "J_hz": 1},
        {"segments": []},
    ],
)
def test_schedule_json_malformed(obj):
    with pytest.raises(DomainError):
        PulseSchedule.from_json(obj)


def test_spin_two_pulses_act_on_second_factor():
    s = PulseSchedule((HardPulse(2, "x", 0.8),), J)
    np.testing.assert_allclose(simulate(s, SPEC), expm_generator(op(2, 2, "x"), 0.8), atol=1e-14)


def test_special_unitary_targets(rng):
    u = haar_special(4, rng)
    s = synthesize_two_spin(kak_su4(u, J, strict=True))
    assert proj_distance(simulate(s, SPEC), u) <= 1e-7
