"""Linear solution strategies and the evaluable flux solution object.

Two routes produce the same coefficients: a direct dense LU solve of the
reduced coupled system, and a scattering-source iteration that only ever
factors the per-direction transport blocks. The iteration contracts at
roughly the scattering ratio, so high-scattering problems belong to the
direct solver.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .assembly import lift_vector, reduce_system
from .basis import basis_matrix

_PIVOT_FLOOR = 1e-300
_RESIDUAL_LIMIT = 1e-10


class SingularMatrixError(np.linalg.LinAlgError):
    def __init__(self, column, detail=""):
        msg = f"singular matrix: negligible pivot in column {column}"
        super().__init__(msg + (f" ({detail})" if detail else ""))
        self.column = column


class LinearSolveError(np.linalg.LinAlgError):
    pass


class IterationFailureError(RuntimeError):
    def __init__(self, iterations, last_update):
        super().__init__(
            f"source iteration did not converge in {iterations} iterations "
            f"(last update {last_update:.3e})")
        self.iterations = iterations
        self.last_update = last_update


def lu_solve(a, b):
    """Solve a x = b by LU with partial pivoting; validates the residual."""
    a = np.asarray(a, dtype=float)
    b = np.asarray(b, dtype=float)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", scipy.linalg.LinAlgWarning)
        factor, piv = scipy.linalg.lu_factor(a, check_finite=False)
    diag = np.abs(np.diag(factor))
    small = np.flatnonzero(diag < _PIVOT_FLOOR)
    if small.size:
        raise SingularMatrixError(int(small[0]))
    x = scipy.linalg.lu_solve((factor, piv), b, check_finite=False)
    denom = (np.abs(a).sum(axis=1).max() * np.abs(x).max() + np.abs(b).max())
    if denom > 0:
        rel = np.abs(a @ x - b).max() / denom
        if rel > _RESIDUAL_LIMIT:
            raise LinearSolveError(f"relative residual {rel:.3e} exceeds {_RESIDUAL_LIMIT}")
    return x


@dataclass(frozen=True)
class Solution:
    """Modal coefficients per angular node, evaluable as angular and scalar flux."""

    coeffs: np.ndarray  # shape (M+1, E*N+1)
    mesh: object
    rule: object
    spec: object

    @property
    def m_deg(self):
        return len(self.coeffs) - 1

    def angular_flux(self, x, m):
        return eval_angular_flux(self, x, m)

    def flux(self, x):
        return scalar_flux(self, x)


def _scatter(system, reduced):
    full = lift_vector(system)
    full[system.idx_io] = reduced
    return full


def solve_direct(system):
    """Reduced dense LU solve; boundary coefficients installed exactly."""
    a_io, rhs_io = reduce_system(system)
    try:
        x = lu_solve(a_io, rhs_io)
    except SingularMatrixError as err:
        g = int(system.idx_io[err.column])
        m, n = divmod(g, system.n_sp)
        raise SingularMatrixError(
            err.column,
            detail=f"angular node m={m} (mu={system.rule.nodes[m]:+.6f}), spatial dof n={n}; "
            f"the angular resolution M may be too small") from err
    full = _scatter(system, x)
    return _solution_from_vector(system, full)


def _solution_from_vector(system, full):
    coeffs = full.reshape(system.m_deg + 1, system.n_sp).copy()
    return Solution(coeffs=coeffs, mesh=system.mesh, rule=system.rule, spec=None)


def _pinned_index(system, m):
    mu = system.rule.nodes[m]
    if mu < 0:
        return system.n_sp - 1
    if mu > 0:
        return 0
    return None


def solve_source_iteration(system, tol=1e-13, max_iter=200):
    """Lagged-scattering fixed point: (B+T) u_new = f + bc-lift + S u_old.

    Each sweep solves one factored block per direction. Returns the solution
    and the number of sweeps; raises IterationFailureError if max_iter sweeps
    do not bring the coefficient update below tol.
    """
    if tol <= 0:
        raise ValueError(f"tol must be positive, got {tol}")
    n_sp = system.n_sp
    n_dir = system.m_deg + 1
    mu = system.rule.nodes

    blocks, factors, frees, pins = [], [], [], []
    for m in range(n_dir):
        k_m = mu[m] * system.bhat + system.t_blocks[m]
        p = _pinned_index(system, m)
        free = np.array([i for i in range(n_sp) if i != p])
        factors.append(scipy.linalg.lu_factor(k_m[np.ix_(free, free)], check_finite=False))
        blocks.append(k_m)
        frees.append(free)
        pins.append(p)

    lift = lift_vector(system).reshape(n_dir, n_sp)

    # recover S = (B + T) - A once; for a pure absorber this is exactly the
    # zero matrix, letting the stop rule detect one-sweep convergence
    s_full = -system.matrix_a.copy()
    for m in range(n_dir):
        s_full[m * n_sp:(m + 1) * n_sp, m * n_sp:(m + 1) * n_sp] += blocks[m]

    def scattering(u):
        return (s_full @ u.ravel()).reshape(n_dir, n_sp)

    u = lift.copy()
    f = system.rhs.reshape(n_dir, n_sp)
    for iteration in range(1, max_iter + 1):
        scat = scattering(u)
        u_new = lift.copy()
        for m in range(n_dir):
            rhs_m = (f[m] + scat[m])[frees[m]]
            if pins[m] is not None:
                rhs_m = rhs_m - blocks[m][np.ix_(frees[m], [pins[m]])].ravel() * lift[m, pins[m]]
            u_new[m, frees[m]] = scipy.linalg.lu_solve(factors[m], rhs_m, check_finite=False)
        du = u_new - u
        delta = np.abs(du).max()
        u = u_new
        if delta <= tol or np.abs(scattering(du)).max() == 0.0:
            sol = Solution(coeffs=u.copy(), mesh=system.mesh, rule=system.rule, spec=None)
            return sol, iteration
    raise IterationFailureError(max_iter, delta)


def _local_values(sol, x, m):
    mesh = sol.mesh
    k = mesh.locate(x)
    bset = mesh.basis_sets()[k]
    phi = basis_matrix(bset, np.atleast_1d(x))
    local = sol.coeffs[m, mesh.local_slice(k)]
    return phi @ local


def eval_angular_flux(sol, x, m):
    """Angular flux at position x for angular node index m."""
    if not 0 <= m <= sol.m_deg:
        raise ValueError(f"angular index {m} out of range [0, {sol.m_deg}]")
    v = _local_values(sol, x, m)
    return float(v[0])


def angular_flux_values(sol, xs, m):
    """Vectorized angular flux over an array of positions."""
    xs = np.asarray(xs, dtype=float)
    mesh = sol.mesh
    out = np.empty_like(xs)
    sets = mesh.basis_sets()
    ks = np.array([mesh.locate(x) for x in xs])
    for k in np.unique(ks):
        sel = ks == k
        phi = basis_matrix(sets[k], xs[sel])
        out[sel] = phi @ sol.coeffs[m, mesh.local_slice(k)]
    return out


def scalar_flux(sol, x):
    """Direction-integrated flux at x via the rule's Christoffel numbers."""
    return float(sum(w * eval_angular_flux(sol, x, m)
                     for m, w in enumerate(sol.rule.weights)))


def scalar_flux_values(sol, xs):
    """Vectorized scalar flux over an array of positions."""
    xs = np.asarray(xs, dtype=float)
    out = np.zeros_like(xs)
    for m, w in enumerate(sol.rule.weights):
        out += w * angular_flux_values(sol, xs, m)
    return out
