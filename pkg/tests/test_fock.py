import numpy as np
import pytest
from scipy.linalg import expm

from vibtomo import fock
from vibtomo.errors import InvalidDimensionError, TruncationUnsafeError


class TestLadder:
    def test_two_level_matrix(self):
        np.testing.assert_array_equal(fock.annihilation(2), [[0, 1], [0, 0]])

    def test_ladder_element(self):
        a = fock.annihilation(8)
        assert a[2, 3] == pytest.approx(np.sqrt(3), abs=1e-15)

    def test_number_spectrum(self):
        a = fock.annihilation(12)
        eigs = np.sort(np.linalg.eigvalsh(a.conj().T @ a))
        np.testing.assert_allclose(eigs, np.arange(12), atol=1e-12)

    def test_dimension_check(self):
        with pytest.raises(InvalidDimensionError):
            fock.annihilation(1)


class TestCoherent:
    def test_vacuum(self):
        vec = fock.coherent_state(0.0, 16)
        np.testing.assert_array_equal(vec, fock.fock_state(0, 16))

    def test_vacuum_overlap(self):
        # |<0|gamma>| = exp(-|gamma|^2/2)
        vec = fock.coherent_state(2.0, 64)
        assert vec[0] == pytest.approx(np.exp(-2.0), abs=1e-12)

    def test_opposite_overlap(self):
        # <beta|-beta> = exp(-2|beta|^2)
        plus = fock.coherent_state(2.0, 64)
        minus = fock.coherent_state(-2.0, 64)
        assert np.vdot(plus, minus) == pytest.approx(np.exp(-8.0), abs=1e-12)

    @pytest.mark.parametrize("gamma", [0.5, 2.0, 1.5 + 1.2j, -3.2j])
    def test_norm(self, gamma):
        vec = fock.coherent_state(gamma, 64)
        assert np.linalg.norm(vec) ** 2 >= 1.0 - 1e-12
        assert np.linalg.norm(vec) ** 2 <= 1.0 + 1e-12

    def test_guard_band(self):
        with pytest.raises(TruncationUnsafeError):
            fock.coherent_state(6.0, 64)
        fock.coherent_state(6.0, 64, strict=False)  # explicit opt-out works

    def test_matches_displaced_vacuum(self):
        gamma = 1.3 - 0.8j
        via_disp = fock.displacement_operator(gamma, 64) @ fock.fock_state(0, 64)
        np.testing.assert_allclose(fock.coherent_state(gamma, 64), via_disp, atol=1e-10)


class TestDisplacement:
    def test_identity_at_zero(self):
        np.testing.assert_array_equal(fock.displacement_operator(0.0, 8), np.eye(8))

    def test_group_inverse(self):
        d = fock.displacement_operator(1.7 + 0.4j, 64)
        dinv = fock.displacement_operator(-1.7 - 0.4j, 64)
        np.testing.assert_allclose(d @ dinv, np.eye(64), atol=1e-12)

    @pytest.mark.parametrize("n_max", [64, 96])
    @pytest.mark.parametrize("alpha", [0.5, 2.0 + 1.0j, -3.9j, 4.0, -2.8 + 2.8j])
    def test_unitarity(self, n_max, alpha):
        d = fock.displacement_operator(alpha, n_max, strict=False)
        err = np.abs(d.conj().T @ d - np.eye(n_max)).max()
        assert err <= 1e-12

    def test_matches_scaling_and_squaring(self):
        # spectral construction equals the Pade/squaring exponential of the
        # same truncated generator
        for alpha in (0.9, -1.2 + 2.2j):
            a = fock.annihilation(48)
            ref = expm(alpha * a.conj().T - np.conj(alpha) * a)
            np.testing.assert_allclose(
                fock.displacement_operator(alpha, 48), ref, atol=1e-12)

    @pytest.mark.parametrize("alpha", [1.0, 3.0, 1.5 - 2.5j])
    def test_leading_block_matches_analytic(self, alpha):
        # entries of the truncated operator on the leading block agree with
        # the infinite-dimensional closed form; blocks past ~n_max/2 start
        # to feel the truncation at |alpha| = 3
        n_max = 64
        d = fock.displacement_operator(alpha, n_max)
        worst = max(
            abs(d[m, n] - fock.displacement_matrix_element(m, n, alpha))
            for m in range(0, 29, 2)
            for n in range(0, 29, 2)
        )
        assert worst <= 1e-10

    def test_guard_band(self):
        with pytest.raises(TruncationUnsafeError):
            fock.displacement_operator(5.2, 64)


class TestAnalyticElements:
    def test_column_zero_is_coherent(self):
        alpha = 1.1 + 0.6j
        coh = fock.coherent_state(alpha, 32)
        col = [fock.displacement_matrix_element(m, 0, alpha) for m in range(32)]
        np.testing.assert_allclose(col, coh, atol=1e-13)

    def test_adjoint_symmetry(self):
        alpha = 0.8 - 1.4j
        left = fock.displacement_matrix_element(5, 9, alpha)
        right = np.conj(fock.displacement_matrix_element(9, 5, -alpha))
        assert left == pytest.approx(right, abs=1e-14)

    def test_large_index_stability(self):
        # log-space evaluation stays finite far beyond factorial overflow
        val = fock.displacement_matrix_element(260, 240, 2.0)
        assert np.isfinite(val)


class TestParity:
    def test_number_states(self):
        p = fock.parity_operator(8)
        np.testing.assert_array_equal(p @ fock.fock_state(0, 8), fock.fock_state(0, 8))
        np.testing.assert_array_equal(p @ fock.fock_state(1, 8), -fock.fock_state(1, 8))

    def test_flips_coherent(self):
        gamma = 1.2 + 0.9j
        flipped = fock.parity_operator(64) @ fock.coherent_state(gamma, 64)
        np.testing.assert_allclose(flipped, fock.coherent_state(-gamma, 64), atol=1e-10)


class TestDisplacedParity:
    def test_reduces_to_parity(self):
        np.testing.assert_array_equal(fock.displaced_parity(0.0, 16),
                                      fock.parity_operator(16))

    @pytest.mark.parametrize("alpha", [0.7, 1.9 - 1.1j, 3.7j])
    def test_hermitian_involution(self, alpha):
        k = fock.displaced_parity(alpha, 64)
        assert np.abs(k - k.conj().T).max() <= 1e-12
        np.testing.assert_allclose(k @ k, np.eye(64), atol=1e-12)

    def test_coherent_action(self):
        # K(alpha)|gamma> = exp(-2i Im(alpha conj(gamma))) |2 alpha - gamma>
        alpha, gamma = 0.8 + 0.5j, -0.4 + 0.9j
        n_max = 96
        moved = fock.displaced_parity(alpha, n_max) @ fock.coherent_state(gamma, n_max)
        phase = np.exp(-2j * (alpha * np.conj(gamma)).imag)
        expected = phase * fock.coherent_state(2 * alpha - gamma, n_max)
        np.testing.assert_allclose(moved, expected, atol=1e-10)


def test_guard_helpers():
    assert fock.alpha_guard(64) == pytest.approx(5.0)
    assert fock.required_dim(2.0) == 25
    assert fock.required_dim(0.0) == 9
