import pytest

from asyncplan.sim import IdmParams, idm_accel
from asyncplan.sim.idm import B_MAX_EMERGENCY

P = IdmParams(v0=10.0, T=1.5, s0=2.0, a_max=1.5, b=2.0, delta=4.0)


def test_free_flow_equilibrium():
    assert idm_accel(10.0, None, None, P) == 0.0


def test_standstill_free_road():
    assert idm_accel(0.0, None, None, P) == P.a_max


def test_hand_evaluated_formula():
    # s* = 2 + 5*1.5 + 0 = 9.5; a = 1.5*(1 - 0.5^4 - (9.5/20)^2)
    a = idm_accel(5.0, 5.0, 20.0, P)
    assert a == pytest.approx(1.5 * (1 - 0.0625 - 0.225625))
    assert a == pytest.approx(1.068, abs=1e-3)


def test_emergency_sentinel_on_nonpositive_gap():
    assert idm_accel(5.0, 0.0, 0.0, P) == -B_MAX_EMERGENCY
    assert idm_accel(5.0, 0.0, -1.0, P) == -B_MAX_EMERGENCY


def test_clamped_to_emergency_brake():
    # tiny gap at speed -> huge braking demand, clamped
    assert idm_accel(10.0, 0.0, 0.5, P) == -B_MAX_EMERGENCY


def test_invalid_params_rejected():
    with pytest.raises(ValueError):
        IdmParams(v0=-1.0)
    with pytest.raises(ValueError):
        idm_accel(-0.1, None, None, P)
