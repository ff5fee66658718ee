import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrquench.errors import DomainError
from lrquench.model import (
    ChainSpec,
    FieldProfile,
    ProtocolWindow,
    coupling_strength,
    default_margin,
    field_at,
    fields,
    linearized_epsilon,
)


def zeta_euler_maclaurin(s, M=30, terms=6):
    """Independent zeta(s): partial sum plus Euler-Maclaurin tail corrections."""
    bern = [1 / 6, -1 / 30, 1 / 42, -1 / 30, 5 / 66, -691 / 2730]
    total = sum(n ** -s for n in range(1, M))
    total += M ** (1 - s) / (s - 1) + 0.5 * M ** -s
    rising = s
    for k in range(1, terms + 1):
        total += bern[k - 1] / math.factorial(2 * k) * rising * M ** (-s - 2 * k + 1)
        rising *= (s + 2 * k - 1) * (s + 2 * k)
    return total


def test_zeta_oracle_closed_forms():
    assert zeta_euler_maclaurin(2.0) == pytest.approx(math.pi**2 / 6, rel=1e-14)
    assert zeta_euler_maclaurin(4.0) == pytest.approx(math.pi**4 / 90, rel=1e-14)


def test_coupling_examples():
    assert coupling_strength(ChainSpec(5, 2.0, normalized=False), 3) == pytest.approx(1 / 9, rel=1e-15)
    assert coupling_strength(ChainSpec(5, 2.0), 1) == pytest.approx(6 / math.pi**2, rel=1e-12)
    J = coupling_strength(ChainSpec(5, 1.5), 1)
    assert J == pytest.approx(1 / zeta_euler_maclaurin(1.5), rel=1e-12)
    assert J == pytest.approx(0.38279, abs=5e-6)


@given(st.floats(1.05, 8.0))
def test_normalization_matches_independent_zeta(alpha):
    assert ChainSpec(3, alpha).normalization == pytest.approx(1 / zeta_euler_maclaurin(alpha), rel=1e-12)


@given(st.integers(2, 60), st.floats(1.01, 6.0), st.booleans())
def test_couplings_positive_and_decreasing(N, alpha, normalized):
    J = ChainSpec(N, alpha, normalized).couplings()
    assert J.shape == (N - 1,)
    assert np.all(J > 0)
    assert np.all(np.diff(J) < 0)
    assert J[0] == coupling_strength(ChainSpec(N, alpha, normalized), 1)


def test_coupling_errors():
    spec = ChainSpec(4, 2.0)
    for r in (0, 4, 1.5):
        with pytest.raises(DomainError):
            coupling_strength(spec, r)
    with pytest.raises(DomainError):
        ChainSpec(4, 1.0, normalized=True)
    with pytest.raises(DomainError):
        ChainSpec(1, 2.0)
    ChainSpec(4, 0.8, normalized=False)


def test_truncated_couplings():
    spec = ChainSpec(6, 2.0, r_max=1)
    assert coupling_strength(spec, 2) == 0.0
    assert np.count_nonzero(spec.couplings()) == 1


def test_field_examples():
    mf = FieldProfile.moving_front(theta=0.3, v=2.0)
    assert field_at(mf, 6, 3.0) == pytest.approx(1.0, abs=1e-15)
    assert field_at(FieldProfile.homogeneous(5.0), 3, 0.0) == pytest.approx(1.0, abs=1e-15)
    sf = FieldProfile.static_front(theta=0.1, n_c=10.0)
    assert field_at(sf, 15, 0.0) == pytest.approx(1 + math.tanh(0.5), rel=1e-14)
    assert field_at(sf, 15, 0.0) == pytest.approx(1.4621, abs=5e-5)


def test_homogeneous_independent_of_site():
    prof = FieldProfile.homogeneous(2.0, h_c=1.3)
    h = fields(prof, 7, t=0.8)
    assert np.all(h == h[0])
    assert h[0] == pytest.approx(1.3 - 1.3 * math.tanh(0.8 / (1.3 * 2.0)), rel=1e-14)


def test_linearized_epsilon_examples():
    mf = FieldProfile.moving_front(theta=1 / 8, v=2.0)
    assert linearized_epsilon(mf, 6, 3.0) == 0.0
    assert linearized_epsilon(mf, 16, 0.0) == -2.0
    assert linearized_epsilon(FieldProfile.homogeneous(4.0), 1, 4.0) == 1.0


profiles = st.one_of(
    st.builds(FieldProfile.homogeneous, st.floats(0.1, 50.0), h_c=st.floats(0.2, 3.0)),
    st.builds(FieldProfile.static_front, st.floats(1e-3, 2.0), st.floats(-5, 40), h_c=st.floats(0.2, 3.0)),
    st.builds(FieldProfile.moving_front, st.floats(1e-3, 2.0), st.floats(0.05, 5.0), h_c=st.floats(0.2, 3.0)),
)


@given(profiles, st.integers(1, 32), st.floats(0.0, 1.0))
def test_fields_inside_open_interval(prof, n, frac):
    # times inside the protocol window (static fronts use t in [0, 10])
    if prof.is_static:
        t = 10 * frac
    else:
        w = ProtocolWindow.for_profile(prof, 32)
        t = w.t_i + frac * w.duration
    h = field_at(prof, n, t)
    assert abs(h - prof.h_c) <= prof.h_c
    # tanh saturates to +-1 in floating point beyond |x| ~ 18
    if prof.is_static:
        x = (n - prof.n_c) * prof.theta / prof.h_c
    elif prof.tau_Q is not None:
        x = t / (prof.h_c * prof.tau_Q)
    else:
        x = prof.theta * (n - prof.v * t) / prof.h_c
    if abs(x) < 15:
        assert 0 < h < 2 * prof.h_c


@given(st.floats(1e-3, 1.0), st.floats(-10, 10), st.floats(0.3, 3.0))
def test_static_front_slope_at_center(theta, n_c, h_c):
    prof = FieldProfile.static_front(theta, n_c, h_c=h_c)
    eps = 1e-4
    d = (field_at(prof, n_c + eps, 0) - field_at(prof, n_c - eps, 0)) / (2 * eps)
    assert d == pytest.approx(theta, rel=1e-6)


@settings(max_examples=50)
@given(st.floats(0.01, 1.0), st.floats(0.1, 4.0), st.integers(1, 64), st.floats(-50, 150))
def test_moving_front_is_shifted_homogeneous_ramp(theta, v, n, t):
    front = FieldProfile.moving_front(theta, v)
    ramp = FieldProfile.homogeneous(1.0 / (v * theta))
    assert field_at(front, n, t) == pytest.approx(field_at(ramp, 1, t - n / v), abs=1e-12)


def test_protocol_windows():
    w = ProtocolWindow.for_profile(FieldProfile.homogeneous(4.0, h_c=1.0, C=3.0), 10)
    assert (w.t_i, w.t_f) == (-12.0, 12.0)
    w = ProtocolWindow.for_profile(FieldProfile.moving_front(0.25, 2.0, C=3.0), 64)
    assert w.t_i == pytest.approx(-6.0)
    assert w.t_f == pytest.approx(32.0 + 6.0)
    with pytest.raises(DomainError):
        ProtocolWindow.for_profile(FieldProfile.static_front(0.1, 3.0), 10)
    with pytest.raises(DomainError):
        ProtocolWindow(1.0, 1.0)


def test_profile_validation():
    with pytest.raises(DomainError):
        FieldProfile.homogeneous(-1.0)
    with pytest.raises(DomainError):
        FieldProfile.moving_front(0.1, 0.0)
    with pytest.raises(DomainError):
        FieldProfile.static_front(0.0, 3.0)
    with pytest.raises(DomainError):
        FieldProfile("homogeneous")


def test_default_margins():
    assert default_margin("extended") == 3.0
    assert default_margin("lri") == 4.0


def test_moving_front_local_quench_time():
    assert FieldProfile.moving_front(0.25, 2.0).local_tau_Q == 2.0
    assert FieldProfile.homogeneous(7.0).local_tau_Q == 7.0
