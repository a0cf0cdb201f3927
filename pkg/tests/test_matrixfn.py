import math

import numpy as np
import pytest

from gbslab import (
    GuardError,
    UnphysicalStateError,
    brute_force_hafnian,
    brute_force_permanent,
    brute_force_torontonian,
    hafnian,
    permanent,
    torontonian,
)
from gbslab.gaussian import (
    EfficiencySpec,
    SingleModeSqueezerSpec,
    SqueezerSpec,
    apply_interferometer,
    apply_loss,
    apply_single_mode_squeezer,
    apply_two_mode_squeezer,
    random_unitary,
    threshold_kernel,
    vacuum,
)

from conftest import random_symmetric_complex


def random_physical_kernel(num_modes: int, rng: np.random.Generator) -> np.ndarray:
    """Threshold kernel of a random squeezed-and-lossy state."""
    st = vacuum(num_modes)
    st = apply_two_mode_squeezer(st, SqueezerSpec(0, 1, float(rng.uniform(0.1, 0.5))))
    for mode in range(2, num_modes):
        st = apply_single_mode_squeezer(st, SingleModeSqueezerSpec(mode, float(rng.uniform(0, 0.4))))
    st = apply_interferometer(st, random_unitary(num_modes, int(rng.integers(1 << 31))))
    st = apply_loss(st, EfficiencySpec(rng.uniform(0.5, 1.0, size=num_modes)))
    return threshold_kernel(st)


class TestHafnian:
    def test_empty_matrix_is_one(self):
        assert hafnian(np.zeros((0, 0))) == 1.0

    def test_two_by_two_single_matching(self):
        a = np.array([[0.0, 2.5 - 1.0j], [2.5 - 1.0j, 0.0]])
        assert hafnian(a) == pytest.approx(2.5 - 1.0j)

    def test_complete_graph_on_four_vertices_has_three_matchings(self):
        assert hafnian(np.ones((4, 4))) == pytest.approx(3.0)

    def test_odd_dimension_is_zero(self):
        rng = np.random.default_rng(0)
        assert hafnian(random_symmetric_complex(5, rng)) == 0.0

    def test_rejects_non_symmetric(self):
        with pytest.raises(ValueError, match="symmetric"):
            hafnian(np.array([[0.0, 1.0], [2.0, 0.0]]))

    @pytest.mark.parametrize("n", [2, 4, 6, 8, 10])
    def test_matches_matching_enumeration(self, n):
        rng = np.random.default_rng(n)
        for _ in range(10):
            a = random_symmetric_complex(n, rng)
            fast = hafnian(a)
            slow = brute_force_hafnian(a)
            assert fast == pytest.approx(slow, rel=1e-10)

    def test_permutation_invariance(self):
        rng = np.random.default_rng(3)
        a = random_symmetric_complex(8, rng)
        perm = rng.permutation(8)
        assert hafnian(a[np.ix_(perm, perm)]) == pytest.approx(hafnian(a), rel=1e-10)

    def test_scalar_scaling(self):
        rng = np.random.default_rng(4)
        a = random_symmetric_complex(6, rng)
        c = 0.7 - 0.3j
        assert hafnian(c * a) == pytest.approx(c**3 * hafnian(a), rel=1e-10)

    def test_block_diagonal_factorizes(self):
        rng = np.random.default_rng(5)
        a = random_symmetric_complex(4, rng)
        b = random_symmetric_complex(6, rng)
        block = np.zeros((10, 10), dtype=complex)
        block[:4, :4] = a
        block[4:, 4:] = b
        assert hafnian(block) == pytest.approx(hafnian(a) * hafnian(b), rel=1e-10)

    def test_brute_force_guard(self):
        with pytest.raises(GuardError):
            brute_force_hafnian(np.zeros((14, 14)))


class TestPermanent:
    def test_identity(self):
        assert permanent(np.eye(6)) == pytest.approx(1.0)

    def test_two_by_two_closed_form(self):
        m = np.array([[1.0 + 1j, 2.0], [3.0, 4.0 - 2j]])
        assert permanent(m) == pytest.approx((1 + 1j) * (4 - 2j) + 2.0 * 3.0)

    @pytest.mark.parametrize("n", [2, 3, 5, 7])
    def test_matches_factorial_enumeration(self, n):
        rng = np.random.default_rng(10 + n)
        for _ in range(5):
            m = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
            assert permanent(m) == pytest.approx(brute_force_permanent(m), rel=1e-10)

    def test_row_column_permutation_invariance(self):
        rng = np.random.default_rng(11)
        m = rng.normal(size=(6, 6)) + 1j * rng.normal(size=(6, 6))
        p = rng.permutation(6)
        q = rng.permutation(6)
        assert permanent(m[p][:, q]) == pytest.approx(permanent(m), rel=1e-10)

    def test_brute_force_guard(self):
        with pytest.raises(GuardError):
            brute_force_permanent(np.zeros((11, 11)))


class TestTorontonian:
    def test_zero_matrix_vanishes(self):
        for n in (1, 2, 4):
            assert torontonian(np.zeros((2 * n, 2 * n))) == pytest.approx(0.0, abs=1e-12)

    def test_single_mode_thermal_closed_form(self):
        # thermal occupation nbar gives O = nbar/(nbar+1) I and Tor(O) = nbar
        r = 0.31
        nbar = math.sinh(r) ** 2
        o = (nbar / (nbar + 1.0)) * np.eye(2)
        assert torontonian(o) == pytest.approx(nbar, rel=1e-12)

    def test_single_mode_squeezed_pair_marginal_click_probability(self):
        # click probability of one arm of a squeezed pair is 1 - 1/cosh^2 r
        r = 0.31
        st = apply_two_mode_squeezer(vacuum(2), SqueezerSpec(0, 1, r))
        marg = st.marginal([0])
        tor = torontonian(threshold_kernel(marg))
        p_click = tor / math.sqrt(np.linalg.det(marg.husimi_covariance()))
        assert p_click == pytest.approx(1.0 - 1.0 / math.cosh(r) ** 2, rel=1e-12)

    @pytest.mark.parametrize("num_modes", [2, 3])
    def test_matches_brute_force_on_physical_kernels(self, num_modes):
        rng = np.random.default_rng(20 + num_modes)
        for _ in range(25):
            o = random_physical_kernel(num_modes, rng)
            assert torontonian(o) == pytest.approx(brute_force_torontonian(o), rel=1e-9)

    def test_mode_operator_basis_gives_same_value(self):
        from gbslab.gaussian import husimi_mode_covariance

        rng = np.random.default_rng(33)
        st = vacuum(3)
        st = apply_two_mode_squeezer(st, SqueezerSpec(0, 1, 0.4))
        st = apply_interferometer(st, random_unitary(3, 8))
        st = apply_loss(st, EfficiencySpec(rng.uniform(0.6, 1.0, size=3)))
        o_quad = threshold_kernel(st)
        o_mode = np.eye(6) - np.linalg.inv(husimi_mode_covariance(st))
        assert torontonian(o_mode) == pytest.approx(torontonian(o_quad), rel=1e-10)

    def test_unphysical_input_raises(self):
        with pytest.raises(UnphysicalStateError):
            torontonian(2.0 * np.eye(4))

    def test_probability_normalization_in_unit_interval(self):
        rng = np.random.default_rng(55)
        for num_modes in (2, 3):
            o = random_physical_kernel(num_modes, rng)
            value = torontonian(o)
            assert 0.0 <= value <= 1.0 + 1e-12

    def test_brute_force_guard(self):
        with pytest.raises(GuardError):
            brute_force_torontonian(np.zeros((26, 26)))

    def test_odd_dimension_rejected(self):
        with pytest.raises(ValueError, match="even"):
            torontonian(np.zeros((3, 3)))


class TestKernelAgreement:
    """Fast kernels against definition-level oracles on batched instances."""

    def test_hafnian_oracle_batch(self):
        rng = np.random.default_rng(0xBEEF)
        for _ in range(60):
            n = 2 * int(rng.integers(1, 6))
            a = random_symmetric_complex(n, rng)
            assert hafnian(a) == pytest.approx(brute_force_hafnian(a), rel=1e-9)

    def test_torontonian_oracle_batch(self):
        rng = np.random.default_rng(0xF00D)
        for _ in range(40):
            n = int(rng.integers(1, 4))
            o = random_physical_kernel(max(n, 2), rng)
            assert torontonian(o) == pytest.approx(brute_force_torontonian(o), rel=1e-9)
