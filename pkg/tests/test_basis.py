"""Tests for the modal spatial basis and element-local matrices."""

import math

import numpy as np
import pytest

from spectral_transport.basis import (
    BasisSet,
    Element,
    basis_deriv,
    basis_eval,
    basis_matrix,
    bhat_matrix,
    load_vector,
    weighted_mass_matrix,
)

REF = BasisSet(6, Element(-1.0, 1.0))


class TestElement:
    def test_affine_map(self):
        el = Element(0.0, 2.0)
        assert el.jacobian == 1.0
        assert el.from_reference(-1.0) == 0.0
        assert el.from_reference(1.0) == 2.0
        assert el.to_reference(1.0) == 0.0

    def test_degenerate_rejected(self):
        with pytest.raises(ValueError):
            Element(1.0, 1.0)
        with pytest.raises(ValueError):
            Element(2.0, 0.0)

    def test_degree_zero_rejected(self):
        with pytest.raises(ValueError):
            BasisSet(0, Element(0.0, 1.0))


class TestBasisEval:
    def test_boundary_hats(self):
        el = Element(0.25, 1.75)
        bset = BasisSet(5, el)
        assert basis_eval(bset, 0, el.a) == 1.0
        assert basis_eval(bset, 0, el.b) == 0.0
        assert basis_eval(bset, 5, el.a) == 0.0
        assert basis_eval(bset, 5, el.b) == 1.0

    def test_even_interior_mode_vanishes_at_midpoint(self):
        # L_1 and L_3 are odd, so phi_2 vanishes at xi = 0
        assert basis_eval(REF, 2, 0.0) == pytest.approx(0.0, abs=1e-15)

    def test_phi1_at_reference_origin(self):
        # (L_0(0) - L_2(0))/sqrt(6) = (1 + 1/2)/sqrt(6)
        assert basis_eval(REF, 1, 0.0) == pytest.approx(1.5 / math.sqrt(6), abs=1e-14)

    @pytest.mark.parametrize("n_deg", [2, 9, 33, 64])
    def test_partition_of_boundary(self, n_deg):
        bset = BasisSet(n_deg, Element(-0.5, 2.5))
        for n in range(1, n_deg):
            assert abs(basis_eval(bset, n, -0.5)) <= 1e-14
            assert abs(basis_eval(bset, n, 2.5)) <= 1e-14

    def test_index_out_of_range(self):
        with pytest.raises(ValueError):
            basis_eval(REF, 7, 0.0)
        with pytest.raises(ValueError):
            basis_deriv(REF, -1, 0.0)


class TestBasisDeriv:
    def test_left_hat_slope(self):
        for x in (-0.9, 0.0, 0.8):
            assert basis_deriv(REF, 0, x) == -0.5

    def test_right_hat_slope_on_unit_element(self):
        bset = BasisSet(4, Element(0.0, 1.0))
        assert basis_deriv(bset, 4, 0.3) == 1.0

    def test_phi1_slope_at_right_end(self):
        # -(2*1+1) L_1(1) / sqrt(6)
        assert basis_deriv(REF, 1, 1.0) == pytest.approx(-3.0 / math.sqrt(6), abs=1e-14)

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(5)
        bset = BasisSet(16, Element(0.0, 2.0))
        h = 1e-6
        for x in rng.uniform(0.1, 1.9, size=20):
            for n in range(17):
                fd = (basis_eval(bset, n, x + h) - basis_eval(bset, n, x - h)) / (2 * h)
                d = basis_deriv(bset, n, x)
                assert d == pytest.approx(fd, rel=1e-6, abs=1e-6)

    def test_basis_matrix_shapes_and_agreement(self):
        xs = np.linspace(-1, 1, 7)
        v = basis_matrix(REF, xs)
        d = basis_matrix(REF, xs, deriv=True)
        assert v.shape == d.shape == (7, 7)
        for j, x in enumerate(xs):
            for n in range(7):
                assert v[j, n] == basis_eval(REF, n, x)
                assert d[j, n] == basis_deriv(REF, n, x)


class TestBhatMatrix:
    def test_corner_entry(self):
        # integral of phi_0' phi_0 = integral of (-1/2)(1-x)/2 over (-1,1)
        assert bhat_matrix(REF)[0, 0] == pytest.approx(-0.5, abs=1e-14)

    def test_interior_entry(self):
        # (phi_1', phi_2) = -3/sqrt(60) * gamma_1
        assert bhat_matrix(REF)[2, 1] == pytest.approx(-2.0 / math.sqrt(60), abs=1e-14)

    @pytest.mark.parametrize("n_deg,a,b", [(3, -1.0, 1.0), (12, 0.0, 1.0), (32, 0.5, 2.0)])
    def test_skew_structure(self, n_deg, a, b):
        """B + B^T equals the diagonal boundary matrix diag(-1, 0, ..., 0, 1)."""
        bh = bhat_matrix(BasisSet(n_deg, Element(a, b)))
        expected = np.zeros((n_deg + 1, n_deg + 1))
        expected[0, 0] = -1.0
        expected[n_deg, n_deg] = 1.0
        assert np.max(np.abs(bh + bh.T - expected)) <= 1e-13

    def test_jacobian_invariance(self):
        # first-derivative inner products are invariant under the affine map
        a = bhat_matrix(BasisSet(5, Element(-1.0, 1.0)))
        b = bhat_matrix(BasisSet(5, Element(3.0, 3.5)))
        assert np.max(np.abs(a - b)) <= 1e-13


class TestMassMatrix:
    def test_hand_entries_unit_weight(self):
        m = weighted_mass_matrix(REF, lambda x: 1.0)
        assert m[0, 0] == pytest.approx(2.0 / 3.0, abs=1e-14)
        assert m[1, 1] == pytest.approx(0.4, abs=1e-14)
        assert m[1, 3] == pytest.approx(-2.0 / 5.0 / math.sqrt(6 * 14), abs=1e-14)

    def test_symmetric_by_construction(self):
        m = weighted_mass_matrix(REF, lambda x: 2.0 + np.sin(x))
        assert np.array_equal(m, m.T)

    def test_two_band_sparsity(self):
        """With unit weight, interior couplings vanish outside |i-j| in {0, 2}."""
        n_deg = 10
        m = weighted_mass_matrix(BasisSet(n_deg, Element(0.0, 1.0)), lambda x: 1.0)
        for i in range(1, n_deg):
            for j in range(1, n_deg):
                if abs(i - j) not in (0, 2):
                    assert abs(m[i, j]) <= 1e-13

    def test_composite_quadrature_handles_kinks(self):
        """A kinked weight is integrated exactly once its breakpoint is declared."""
        bset = BasisSet(3, Element(0.0, 2.0))
        g = lambda x: x if x <= 1.0 else 2.0 - x
        split = weighted_mass_matrix(bset, g, breakpoints=(1.0,))
        oracle = weighted_mass_matrix(bset, g, n_quad=200, breakpoints=(1.0,))
        assert np.max(np.abs(split - oracle)) <= 1e-13
        # a single rule across the kink is visibly worse
        single = weighted_mass_matrix(bset, g, n_quad=12)
        assert np.max(np.abs(single - oracle)) > 1e-6

    def test_quadrature_count_validated(self):
        with pytest.raises(ValueError):
            weighted_mass_matrix(REF, lambda x: 1.0, n_quad=3)

    def test_evaluation_failure_propagates(self):
        with pytest.raises(ZeroDivisionError):
            weighted_mass_matrix(REF, lambda x: 1.0 / 0.0)


class TestLoadVector:
    def test_zero_source(self):
        assert np.array_equal(load_vector(REF, lambda x: 0.0), np.zeros(7))

    def test_constant_source_boundary_entry(self):
        f = load_vector(REF, lambda x: 2.0)
        assert f[0] == pytest.approx(1.0, abs=1e-14)
        assert f[6] == pytest.approx(1.0, abs=1e-14)

    def test_constant_source_interior_entries(self):
        # phi_1 carries an L_0 component, so its entry is (1/2)*2*2/sqrt(6);
        # the higher interior modes are orthogonal to constants and vanish
        f = load_vector(REF, lambda x: 2.0)
        assert f[1] == pytest.approx(2.0 / math.sqrt(6), abs=1e-14)
        assert np.max(np.abs(f[2:6])) <= 1e-14

    def test_half_factor(self):
        # entry 0 is (1/2) * integral of f * phi_0
        f = load_vector(BasisSet(2, Element(0.0, 1.0)), lambda x: 1.0)
        assert f[0] == pytest.approx(0.25, abs=1e-14)
