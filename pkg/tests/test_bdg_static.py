import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from lrquench.bdg_static import (
    ModeSet,
    bdg_hamiltonian,
    build_matrices,
    diagonalize,
    fwhm,
    gap,
    ground_energy,
    many_body_energies,
    mode_density,
    static_record,
    vacuum_parity,
)
from lrquench.ed_oracle import build_hamiltonian, spectrum
from lrquench.errors import DomainError, UnsupportedModelError
from lrquench.model import ChainSpec, FieldProfile, fields


def test_decoupled_matrices():
    m = build_matrices(ChainSpec(3, 2.0, r_max=0), 1.0)
    assert np.array_equal(m.A, 2 * np.eye(3))
    assert np.array_equal(m.B, np.zeros((3, 3)))


def test_two_site_matrices():
    m = build_matrices(ChainSpec(2, 2.0, normalized=False), 1.0)
    assert np.array_equal(m.A, [[2.0, -1.0], [-1.0, 2.0]])
    assert np.array_equal(m.B, [[0.0, 1.0], [-1.0, 0.0]])


def test_long_range_entry():
    spec = ChainSpec(4, 1.5)
    m = build_matrices(spec, 1.0)
    assert m.A[0, 2] == pytest.approx(-spec.normalization / 2**1.5, rel=1e-15)
    assert m.B[0, 2] == -m.B[2, 0] == pytest.approx(spec.normalization / 2**1.5, rel=1e-15)


def test_diagonal_is_twice_the_field():
    spec = ChainSpec(9, 1.5)
    prof = FieldProfile.moving_front(0.3, 1.0)
    m = build_matrices(spec, prof, t=2.0)
    assert np.array_equal(np.diag(m.A), 2 * fields(prof, 9, 2.0))
    assert np.array_equal(m.A, m.A.T) and np.array_equal(m.B, -m.B.T)


def test_lri_has_no_free_fermion_form():
    with pytest.raises(UnsupportedModelError):
        build_matrices(ChainSpec(4, 2.0, normalized=False, model_kind="lri"), 1.0)


def test_decoupled_modes():
    modes = diagonalize(build_matrices(ChainSpec(5, 2.0, r_max=0), 0.7))
    assert np.allclose(modes.omega, 1.4, atol=1e-15)
    assert np.allclose(modes.V, 0, atol=1e-15)
    # a permutation matrix, entries positive by the sign convention
    assert set(np.round(modes.U, 14).ravel()) == {0.0, 1.0}
    assert np.array_equal(modes.U @ modes.U.T, np.eye(5))
    assert gap(modes) == pytest.approx(2.8)
    d = mode_density(modes, 2)
    assert sorted(d) == pytest.approx([0, 0, 0, 0, 1])


chains = st.builds(
    lambda N, a, norm, seed: (ChainSpec(N, a, norm), np.random.default_rng(seed).uniform(0.02, 2.0, N)),
    st.integers(2, 14), st.floats(1.1, 5.0), st.booleans(), st.integers(0, 2**31),
)


@settings(max_examples=60, deadline=None)
@given(chains)
def test_mode_invariants(case):
    spec, h = case
    m = build_matrices(spec, h)
    modes = diagonalize(m)
    assert np.all(np.diff(modes.omega) >= 0) and modes.omega[0] >= 0
    assert modes.orthonormality_error() <= 1e-10
    assert np.all(modes.residuals(m) <= 1e-9)
    full = np.linalg.eigvalsh(bdg_hamiltonian(m))
    assert np.allclose(full, np.sort(np.concatenate([-modes.omega, modes.omega])), atol=1e-10)
    # negative partners solve the same equations with -omega
    Un, Vn = modes.negative
    assert np.allclose(m.A @ Un + m.B @ Vn, -Un * modes.omega, atol=1e-9)
    for k in range(spec.N):
        assert mode_density(modes, k).sum() == pytest.approx(1.0, abs=1e-10)


def test_sign_convention_is_deterministic():
    m = build_matrices(ChainSpec(12, 1.5), FieldProfile.static_front(0.2, 6.5))
    a, b = diagonalize(m), diagonalize(m)
    assert np.array_equal(a.U, b.U) and np.array_equal(a.V, b.V)
    W = np.vstack([a.U, a.V])
    first = W[np.argmax(np.abs(W) > 1e-10 * np.abs(W).max(axis=0), axis=0), np.arange(12)]
    assert np.all(first > 0)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.floats(1.1, 4.0), st.integers(0, 2**31))
def test_spectrum_matches_exact_diagonalization(N, alpha, seed):
    spec = ChainSpec(N, alpha)
    h = np.random.default_rng(seed).uniform(0.05, 2.0, N)
    modes = diagonalize(build_matrices(spec, h))
    E_ed = spectrum(build_hamiltonian(spec, h))
    assert np.allclose(many_body_energies(modes), E_ed, atol=1e-10)
    assert ground_energy(modes) == pytest.approx(E_ed[0], abs=1e-10)


@settings(max_examples=30, deadline=None)
@given(st.integers(2, 6), st.floats(1.1, 4.0), st.integers(0, 2**31))
def test_gap_is_lowest_even_excitation(N, alpha, seed):
    spec = ChainSpec(N, alpha)
    h = np.random.default_rng(seed).uniform(0.3, 2.0, N)
    m = build_matrices(spec, h)
    modes = diagonalize(m)
    par = vacuum_parity(m)
    E_even = spectrum(build_hamiltonian(spec, h, sector="even"))
    E_odd = spectrum(build_hamiltonian(spec, h, sector="odd"))
    own = E_even if par == 1 else E_odd
    assert own[0] == pytest.approx(ground_energy(modes), abs=1e-10)
    assert own[1] - own[0] == pytest.approx(gap(modes), abs=1e-10)
    assert np.allclose(many_body_energies(modes, par, "even"), E_even, atol=1e-10)


def test_ground_energy_examples():
    modes = diagonalize(build_matrices(ChainSpec(3, 2.0, r_max=0), 1.0))
    assert ground_energy(modes) == -3.0
    two = diagonalize(build_matrices(ChainSpec(2, 2.0, normalized=False), 1.0))
    assert two.omega == pytest.approx([math.sqrt(5) - 1, math.sqrt(5) + 1], abs=1e-14)
    assert ground_energy(two) == pytest.approx(-math.sqrt(5), abs=1e-14)
    assert spectrum(build_hamiltonian(ChainSpec(2, 2.0, normalized=False), 1.0))[0] == pytest.approx(
        -math.sqrt(5), abs=1e-14)


def test_ordered_phase_zero_mode_gives_even_vacuum():
    # deep in the ordered phase the edge pair is degenerate to machine precision
    spec = ChainSpec(64, 1.5)
    m = build_matrices(spec, 0.01)
    modes = diagonalize(m)
    assert modes.omega[0] < 1e-12
    assert vacuum_parity(m) == 1
    assert modes.orthonormality_error() < 1e-10
    assert np.all(modes.residuals(m) < 1e-9)


def test_fwhm_conventions():
    spike = np.zeros(11)
    spike[5] = 1.0
    assert fwhm(spike) == 1.0
    for w in (2, 3, 7):
        k = np.arange(41)
        tri = np.maximum(0.0, 1 - np.abs(k - 20) / w)
        assert fwhm(tri) == pytest.approx(w, abs=1e-12)
    with pytest.raises(DomainError):
        fwhm(np.array([3.0, 2.0, 1.0, 0.5]))
    with pytest.raises(DomainError):
        fwhm(np.array([0.0, -1.0, 0.0]))


def test_mode_density_range():
    modes = diagonalize(build_matrices(ChainSpec(4, 2.0), 1.0))
    for bad in (-1, 4, 1.5):
        with pytest.raises(DomainError):
            mode_density(modes, bad)


def test_gap_needs_two_modes():
    with pytest.raises(DomainError):
        gap(ModeSet(np.array([1.0]), np.eye(1), np.zeros((1, 1))))


def test_static_gap_regimes_small():
    # flat regime: for very shallow fronts the gap no longer depends on theta
    spec = ChainSpec(201, 1.5)
    g = [static_record(spec, FieldProfile.static_front(th, 101.0))["gap"] for th in (2.0**-22, 2.0**-20)]
    assert g[1] == pytest.approx(g[0], rel=0.01)
    # step regime: for very steep fronts the gap no longer depends on N
    steep = [static_record(ChainSpec(N, 1.5), FieldProfile.static_front(8.0, (N + 1) / 2))["gap"]
             for N in (201, 401)]
    assert steep[1] == pytest.approx(steep[0], rel=0.01)


def test_gap_increases_with_slope_in_central_regime():
    spec = ChainSpec(201, 1.5)
    thetas = 2.0 ** np.arange(-8, -5.4, 0.5)  # xi_tilde from ~40 down to ~13
    g = [static_record(spec, FieldProfile.static_front(th, 101.0))["gap"] for th in thetas]
    assert np.all(np.diff(g) > 0)


def test_first_mode_localized_near_front():
    N = 401
    spec = ChainSpec(N, 1.5)
    for th in (2.0**-8, 2.0**-7):
        modes = diagonalize(build_matrices(spec, FieldProfile.static_front(th, (N + 1) / 2)))
        d = mode_density(modes, 1)
        peak = np.argmax(d) + 1
        assert abs(peak - (N + 1) / 2) <= fwhm(d)
