"""State container, inner products, Schmidt spectra, and the site kernels."""

import numpy as np
import pytest

import dense_reference as ref
from spintherm.hilbert import (
    StateVector,
    apply_single_site,
    apply_two_site,
    basis_state,
    inner,
    normalize,
    schmidt_spectrum,
)


def random_state(L, seed, normalized=True):
    rng = np.random.default_rng(seed)
    amps = rng.standard_normal(2**L) + 1j * rng.standard_normal(2**L)
    if normalized:
        amps /= np.linalg.norm(amps)
    return StateVector(amps, 0.0, L)


def test_normalize_scales_into_offset():
    state = StateVector(np.array([2.0, 0.0, 0.0, 0.0]), 0.0, 2)
    out = normalize(state)
    assert np.allclose(out.amplitudes, [1.0, 0.0, 0.0, 0.0])
    assert out.log_norm_offset == pytest.approx(np.log(2.0), abs=1e-15)


def test_normalize_unit_vector_is_idempotent():
    state = basis_state(3, down_sites=(2,))
    out = normalize(state)
    assert np.array_equal(out.amplitudes, state.amplitudes)
    assert abs(out.log_norm_offset) <= 1e-15


def test_normalize_bookkeeping_random_states():
    # exp(2 * offset) of the unit output must recover the input squared norm
    for seed in range(12):
        L = 2 + seed % 5
        state = random_state(L, seed, normalized=False)
        sq_before = np.linalg.norm(state.amplitudes) ** 2
        out = normalize(state)
        assert np.linalg.norm(out.amplitudes) == pytest.approx(1.0, abs=1e-12)
        assert np.exp(2.0 * out.log_norm_offset) == pytest.approx(sq_before, rel=1e-12)


def test_normalize_zero_state_raises():
    state = StateVector(np.zeros(4), 0.0, 2)
    with pytest.raises(ValueError, match="degenerate"):
        normalize(state)


def test_inner_on_basis_states():
    up = basis_state(3)
    flipped = basis_state(3, down_sites=(2,))
    assert inner(up, up) == pytest.approx(1.0)
    assert inner(up, flipped) == pytest.approx(0.0)


def test_inner_matches_explicit_sum():
    a = random_state(5, 11)
    b = random_state(5, 12)
    expected = sum(np.conj(x) * y for x, y in zip(a.amplitudes, b.amplitudes))
    assert inner(a, b) == pytest.approx(expected, abs=1e-13)
    # <a|a> is the squared norm and real
    assert inner(a, a) == pytest.approx(np.linalg.norm(a.amplitudes) ** 2, abs=1e-13)
    assert abs(inner(a, a).imag) <= 1e-14


def test_inner_size_mismatch_raises():
    with pytest.raises(ValueError, match="mismatch"):
        inner(random_state(3, 0), random_state(4, 0))


def test_schmidt_product_state_is_pure():
    state = basis_state(4, down_sites=(1, 3))
    for cut in range(1, 4):
        lam = schmidt_spectrum(state, cut)
        assert lam[0] == pytest.approx(1.0, abs=1e-14)
        assert np.all(lam[1:] <= 1e-14)


def test_schmidt_bell_pair():
    amps = np.zeros(4, dtype=complex)
    amps[0] = amps[3] = 1.0 / np.sqrt(2.0)  # (|up,up> + |down,down>)/sqrt(2)
    lam = schmidt_spectrum(StateVector(amps, 0.0, 2), 1)
    assert np.allclose(lam, [0.5, 0.5], atol=1e-14)


def test_schmidt_matches_reduced_density_matrix():
    state = random_state(8, 21)
    for cut in range(1, 8):
        lam = schmidt_spectrum(state, cut)
        expected = ref.reduced_density_eigs(state.amplitudes, cut, 8)
        n = min(len(lam), len(expected))
        assert np.allclose(np.sort(lam)[::-1][:n], expected[:n], atol=1e-10)
        assert lam.sum() == pytest.approx(1.0, abs=1e-12)
        assert np.all(lam >= -1e-14)


def test_schmidt_cut_out_of_range_raises():
    state = random_state(4, 3)
    for cut in (0, 4, 5):
        with pytest.raises(ValueError, match="cut_after"):
            schmidt_spectrum(state, cut)


def test_state_vector_validation():
    with pytest.raises(ValueError, match="num_sites"):
        StateVector(np.zeros(2), 0.0, 1)
    with pytest.raises(ValueError, match="does not match"):
        StateVector(np.zeros(5), 0.0, 2)
    with pytest.raises(ValueError, match="finite"):
        StateVector(np.zeros(4), np.inf, 2)


def test_basis_state_bit_convention():
    # site i occupies bit i-1: flipping site 3 of 4 lands on index 4
    state = basis_state(4, down_sites=(3,))
    assert state.amplitudes[4] == 1.0
    with pytest.raises(ValueError, match="outside"):
        basis_state(3, down_sites=(4,))


def test_apply_single_site_targets_expected_bit():
    flip = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
    for L in (2, 3, 5):
        for site in range(1, L + 1):
            up = np.zeros(2**L, dtype=complex)
            up[0] = 1.0
            out = apply_single_site(up, flip, site, L)
            expected = np.zeros(2**L, dtype=complex)
            expected[1 << (site - 1)] = 1.0
            assert np.array_equal(out, expected)


def test_apply_single_site_matches_embedding():
    rng = np.random.default_rng(5)
    mat = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    amps = rng.standard_normal(2**6) + 1j * rng.standard_normal(2**6)
    for site in range(1, 7):
        expected = ref.embed_site(mat, site, 6) @ amps
        assert np.allclose(apply_single_site(amps, mat, site, 6), expected, atol=1e-13)


def test_apply_two_site_left_major_convention():
    # |up,up> -> |down,up> on the bond: only the left site flips
    mat = np.zeros((4, 4), dtype=complex)
    mat[2, 0] = 1.0  # row index 2*s_i + s_i+1 = 2 means s_i flips down
    for L, site in ((3, 1), (3, 2), (4, 3)):
        up = np.zeros(2**L, dtype=complex)
        up[0] = 1.0
        out = apply_two_site(up, mat, site, L)
        expected = np.zeros(2**L, dtype=complex)
        expected[1 << (site - 1)] = 1.0
        assert np.array_equal(out, expected)


def test_apply_two_site_matches_embedding():
    rng = np.random.default_rng(6)
    amps = rng.standard_normal(2**6) + 1j * rng.standard_normal(2**6)
    for site in range(1, 6):
        mat = rng.standard_normal((4, 4)) + 1j * rng.standard_normal((4, 4))
        expected = ref.embed_pair_matrix(mat, site, 6) @ amps
        assert np.allclose(apply_two_site(amps, mat, site, 6), expected, atol=1e-12)


def test_apply_kernels_reject_bad_sites():
    amps = np.zeros(8, dtype=complex)
    with pytest.raises(ValueError):
        apply_single_site(amps, np.eye(2), 4, 3)
    with pytest.raises(ValueError):
        apply_two_site(amps, np.eye(4), 3, 3)
