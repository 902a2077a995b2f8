"""Tests for error norms, convergence studies and order fitting."""

import numpy as np
import pytest

from spectral_transport.analysis import (
    AnalysisError,
    ConvergenceTable,
    SweepRow,
    angular_l2_error,
    boundary_error,
    convergence_study,
    fit_order,
    flux_l2_error,
    load_solution_fixture,
    save_solution_fixture,
)
from spectral_transport.assembly import Mesh, assemble
from spectral_transport.orthopoly import interpolate_at_nodes
from spectral_transport.problem import catalog
from spectral_transport.solve import (
    angular_flux_values,
    scalar_flux_values,
    solve_direct,
)


def solved(name, n_deg, m_deg, elements=None):
    spec = catalog(name)
    if elements is None:
        elements = spec.operator_breakpoints()
    mesh = Mesh.from_breakpoints(spec.domain, list(elements), n_deg)
    return spec, solve_direct(assemble(spec, mesh, m_deg))


def own_angular_interpolant(sol):
    """The solution's own (x, mu) interpolant, barycentric across directions."""
    def reference(x, mu):
        values = [angular_flux_values(sol, [x], m)[0] for m in range(sol.m_deg + 1)]
        return interpolate_at_nodes(values, sol.rule, mu)
    return reference


class TestFluxL2Error:
    def test_self_reference_zero(self):
        _, sol = solved("ex1", 6, 1)
        err = flux_l2_error(sol, lambda x: scalar_flux_values(sol, np.atleast_1d(x)))
        assert err <= 1e-14

    def test_ex1_machine_precision(self):
        spec, sol = solved("ex1", 6, 1)
        assert flux_l2_error(sol, lambda x: spec.exact_flux(x=x)) <= 1e-12

    def test_ex7_within_first_order_envelope(self):
        """The N=64 error stays within a factor 3 of C/N calibrated at N=16."""
        spec = catalog("ex7")
        errs = {}
        for n_deg in (16, 64):
            _, sol = solved("ex7", n_deg, 29, elements=[])
            errs[n_deg] = flux_l2_error(sol, lambda x: spec.exact_flux(x=x),
                                        ref_breakpoints=(1.0,))
        c = errs[16] * 16
        assert errs[64] <= 3.0 * c / 64
        assert errs[64] >= c / 64 / 3.0

    def test_norm_homogeneity(self):
        _, sol = solved("ex1", 6, 1)
        g = lambda x: np.sin(np.pi * np.asarray(x))
        own = lambda x: scalar_flux_values(sol, np.atleast_1d(x))
        e1 = flux_l2_error(sol, lambda x: own(x) + g(x))
        lam = 3.7
        elam = flux_l2_error(sol, lambda x: own(x) + lam * g(x))
        assert elam == pytest.approx(lam * e1, rel=1e-12)

    def test_quadrature_sufficiency(self):
        """Doubling the error-quadrature density moves the error < 0.1%."""
        spec, sol = solved("ex7", 16, 29, elements=[])
        ref = lambda x: spec.exact_flux(x=x)
        e1 = flux_l2_error(sol, ref, ref_breakpoints=(1.0,))
        e2 = flux_l2_error(sol, ref, ref_breakpoints=(1.0,), density=2)
        assert abs(e2 - e1) / e1 < 1e-3


class TestAngularL2Error:
    def test_own_interpolant_zero(self):
        _, sol = solved("ex1", 5, 3)
        assert angular_l2_error(sol, own_angular_interpolant(sol)) <= 1e-13

    def test_ex2_machine_precision(self):
        spec, sol = solved("ex2", 25, 2)
        err = angular_l2_error(sol, lambda x, mu: spec.exact_solution(x=x, mu=mu))
        assert err <= 1e-9

    def test_ex5_machine_precision(self):
        spec, sol = solved("ex5", 6, 1)
        err = angular_l2_error(sol, lambda x, mu: spec.exact_solution(x=x, mu=mu))
        assert err <= 1e-10


class TestBoundaryError:
    def test_matching_reference_zero(self):
        _, sol = solved("ex1", 5, 3)
        ref = own_angular_interpolant(sol)
        assert boundary_error(sol, ref) <= 1e-13

    def test_ex1_machine_precision(self):
        spec, sol = solved("ex1", 6, 1)
        err = boundary_error(sol, lambda x, mu: spec.exact_solution(x=x, mu=mu))
        assert err <= 1e-12

    def test_mu_zero_node_has_no_weight(self):
        # M = 2 has a mu = 0 node; a reference wrong only along mu = 0
        # contributes nothing to the weighted outflow sum
        spec, sol = solved("ex1", 6, 2)
        exact = lambda x, mu: spec.exact_solution(x=x, mu=mu)
        wrong_at_zero = lambda x, mu: exact(x, mu) + (100.0 if mu == 0.0 else 0.0)
        assert boundary_error(sol, wrong_at_zero) == boundary_error(sol, exact)


class TestFitOrder:
    @staticmethod
    def synthetic_table(order, c=2.5, ns=(8, 16, 32)):
        rows = [SweepRow(param=n, n_deg=n, m_deg=3, n_elems=1, dof=0,
                         flux_l2_error=c * n ** order, boundary_error=None,
                         wall_time_ms=0.0) for n in ns]
        return ConvergenceTable(sweep_param="N", rows=rows)

    def test_second_order(self):
        assert fit_order(self.synthetic_table(-2.0)) == pytest.approx(-2.0, abs=1e-10)

    def test_fractional_order(self):
        assert fit_order(self.synthetic_table(-5.5)) == pytest.approx(-5.5, abs=1e-10)

    def test_angular_sweep_uses_m_plus_one(self):
        rows = [SweepRow(param=m, n_deg=10, m_deg=m, n_elems=1, dof=0,
                         flux_l2_error=4.0 * (m + 1) ** -3.0, boundary_error=None,
                         wall_time_ms=0.0) for m in (3, 7, 15)]
        table = ConvergenceTable(sweep_param="M", rows=rows)
        assert fit_order(table) == pytest.approx(-3.0, abs=1e-10)

    def test_insufficient_rows(self):
        with pytest.raises(AnalysisError):
            fit_order(self.synthetic_table(-2.0, ns=(8, 16)))

    def test_noise_floor_rows_dropped(self):
        with pytest.raises(AnalysisError):
            fit_order(self.synthetic_table(-2.0, c=1e-16))


class TestConvergenceStudy:
    def test_ex1_monotone_to_machine_epsilon(self):
        # the exact flux is symmetric about the midpoint, which makes odd
        # degrees barely better than their even predecessors; the even-degree
        # sequence decreases strictly down to the floor
        spec = catalog("ex1")
        table = convergence_study(spec, "N", [2, 4, 6], m_deg=11,
                                  reference=lambda x: spec.exact_flux(x=x))
        errs = [r.flux_l2_error for r in table.rows]
        assert all(a > b for a, b in zip(errs, errs[1:]))
        assert errs[-1] <= 1e-12

    def test_spectral_flag(self):
        spec = catalog("ex1")
        table = convergence_study(spec, "N", [2, 4, 6, 8], m_deg=3,
                                  reference=lambda x: spec.exact_flux(x=x))
        assert table.spectral_flag  # exact from N = 6, before the sweep ends

    def test_ex5_monotone(self):
        spec = catalog("ex5")
        table = convergence_study(spec, "N", [2, 4, 6], m_deg=3,
                                  elements=[1.0],
                                  reference=lambda x: spec.exact_flux(x=x))
        errs = [r.flux_l2_error for r in table.rows]
        floor_hit = False
        for a, b in zip(errs, errs[1:]):
            if a <= 1e-12:
                floor_hit = True
            if not floor_hit:
                assert b <= a

    def test_failed_row_recorded_not_fatal(self):
        spec = catalog("ex5")
        # single-domain ex5 triggers a configuration error in every row
        table = convergence_study(spec, "N", [4, 5, 6], m_deg=1, elements=[],
                                  reference=lambda x: spec.exact_flux(x=x))
        assert all(r.failed for r in table.rows)
        assert table.fitted_order is None

    def test_invalid_sweep_param(self):
        spec = catalog("ex1")
        with pytest.raises(AnalysisError):
            convergence_study(spec, "K", [2, 4], m_deg=1,
                              reference=lambda x: spec.exact_flux(x=x))

    def test_reference_required(self):
        with pytest.raises(AnalysisError):
            convergence_study(catalog("ex1"), "N", [2, 4], m_deg=1)

    def test_m_sweep(self):
        spec = catalog("ex2")
        table = convergence_study(spec, "M", [1, 2, 3], n_deg=25,
                                  reference=lambda x: spec.exact_flux(x=x))
        assert [r.m_deg for r in table.rows] == [1, 2, 3]
        assert table.rows[-1].flux_l2_error <= 1e-9

    def test_csv_shape(self):
        spec = catalog("ex1")
        table = convergence_study(spec, "N", [2, 4, 6], m_deg=3,
                                  reference=lambda x: spec.exact_flux(x=x))
        lines = table.to_csv().strip().splitlines()
        assert lines[0] == "param,N,M,E,dof,flux_l2_error,boundary_error,wall_time_ms"
        assert len(lines) == 4

    def test_json_fields(self):
        spec = catalog("ex1")
        table = convergence_study(spec, "N", [2, 3, 4, 5], m_deg=3,
                                  reference=lambda x: spec.exact_flux(x=x))
        doc = table.to_json_dict()
        assert doc["sweep_param"] == "N"
        assert "fitted_order" in doc
        assert len(doc["rows"]) == 4
        assert {"param", "N", "M", "E", "dof"} <= set(doc["rows"][0])


class TestSolutionFixtures:
    def test_round_trip(self, tmp_path):
        _, sol = solved("ex5", 6, 3)
        path = tmp_path / "ref.csv"
        save_solution_fixture(sol, path, problem_name="ex5")
        loaded = load_solution_fixture(path)
        assert np.array_equal(loaded.coeffs, sol.coeffs)
        assert loaded.mesh.n_deg == 6
        assert loaded.mesh.n_elems == 2
        xs = np.linspace(0.0, 2.0, 11)
        assert scalar_flux_values(loaded, xs) == pytest.approx(
            scalar_flux_values(sol, xs), abs=1e-14)

    def test_checksum_detects_corruption(self, tmp_path):
        _, sol = solved("ex1", 4, 1)
        path = tmp_path / "ref.csv"
        save_solution_fixture(sol, path, problem_name="ex1")
        text = path.read_text()
        lines = text.splitlines()
        lines[-1] = lines[-1].rsplit(",", 1)[0] + ",0.123"
        path.write_text("\n".join(lines) + "\n")
        with pytest.raises(AnalysisError):
            load_solution_fixture(path)

    def test_packaged_ex3_reference(self):
        from importlib import resources

        path = resources.files("spectral_transport") / "fixtures" / "ex3_ref_n200_m11.csv"
        ref = load_solution_fixture(str(path))
        assert ref.mesh.n_deg == 200
        assert ref.m_deg == 11
