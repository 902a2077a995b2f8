"""Modal spatial basis on a mapped interval and its element-local matrices.

The basis spans P_N on the element: two boundary hats (indices 0 and N)
plus interior differences of Legendre polynomials that vanish at both
endpoints,

    phi_n(xi) = (L_{n-1}(xi) - L_{n+1}(xi)) / sqrt(4n+2),   0 < n < N.

All computations run in reference coordinates xi in [-1,1] with a single
jacobian factor (b-a)/2.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .orthopoly import gauss_rule, legendre_pair

# extra Gauss points per smooth piece when integrating a coefficient
COEFF_QUAD_MARGIN = 9


@dataclass(frozen=True)
class Element:
    """Interval [a, b] with the affine map x(xi) = (a+b)/2 + (b-a)/2 * xi."""

    a: float
    b: float

    def __post_init__(self):
        if not self.a < self.b:
            raise ValueError(f"element endpoints must satisfy a < b, got ({self.a}, {self.b})")

    @property
    def jacobian(self):
        return 0.5 * (self.b - self.a)

    def to_reference(self, x):
        return (2.0 * np.asarray(x, dtype=float) - (self.a + self.b)) / (self.b - self.a)

    def from_reference(self, xi):
        return 0.5 * (self.a + self.b) + self.jacobian * np.asarray(xi, dtype=float)


@dataclass(frozen=True)
class BasisSet:
    """Degree-N modal basis on an element; N >= 1."""

    n_deg: int
    element: Element

    def __post_init__(self):
        if self.n_deg < 1:
            raise ValueError(f"spatial degree must be >= 1, got {self.n_deg}")


def _eval_ref(n, n_deg, xi, deriv=False):
    """phi_n (or d phi_n / d xi) at reference points xi."""
    xi = np.asarray(xi, dtype=float)
    if n == 0:
        return np.full_like(xi, -0.5) if deriv else 0.5 * (1.0 - xi)
    if n == n_deg:
        return np.full_like(xi, 0.5) if deriv else 0.5 * (1.0 + xi)
    scale = 1.0 / np.sqrt(4.0 * n + 2.0)
    if deriv:
        # (L'_{n-1} - L'_{n+1}) = -(2n+1) L_n by the derivative relation
        pn, _ = legendre_pair(n, xi)
        return -(2.0 * n + 1.0) * scale * pn
    lo, _ = legendre_pair(n - 1, xi)
    hi, _ = legendre_pair(n + 1, xi)
    return scale * (lo - hi)


def _check_index(bset, n):
    if not 0 <= n <= bset.n_deg:
        raise ValueError(f"basis index {n} out of range [0, {bset.n_deg}]")


def basis_eval(bset, n, x):
    """phi_n at physical coordinate x."""
    _check_index(bset, n)
    v = _eval_ref(n, bset.n_deg, bset.element.to_reference(x))
    return v if np.ndim(x) else float(v)


def basis_deriv(bset, n, x):
    """d phi_n / dx at physical coordinate x."""
    _check_index(bset, n)
    v = _eval_ref(n, bset.n_deg, bset.element.to_reference(x), deriv=True) / bset.element.jacobian
    return v if np.ndim(x) else float(v)


def basis_matrix(bset, x, deriv=False):
    """(len(x), N+1) matrix of phi_n (or phi_n') values at physical points x."""
    xi = bset.element.to_reference(np.atleast_1d(x))
    cols = [_eval_ref(n, bset.n_deg, xi, deriv=deriv) for n in range(bset.n_deg + 1)]
    out = np.column_stack(cols)
    return out / bset.element.jacobian if deriv else out


def _piece_bounds(a, b, breakpoints):
    """Sub-intervals of [a, b] delimited by the breakpoints strictly inside it."""
    cuts = [a] + [t for t in sorted(breakpoints) if a < t < b] + [b]
    return list(zip(cuts[:-1], cuts[1:]))


def _quad_points(bset, n_quad, breakpoints=()):
    """Composite physical Gauss points and weights over the element."""
    ref = gauss_rule(n_quad)
    xs, ws = [], []
    for lo, hi in _piece_bounds(bset.element.a, bset.element.b, breakpoints):
        half = 0.5 * (hi - lo)
        xs.append(0.5 * (lo + hi) + half * ref.nodes)
        ws.append(half * ref.weights)
    return np.concatenate(xs), np.concatenate(ws)


def bhat_matrix(bset):
    """Transport stiffness entries (i,j) = integral of phi_j' phi_i over the element."""
    x, w = _quad_points(bset, bset.n_deg + 2)
    v = basis_matrix(bset, x)
    d = basis_matrix(bset, x, deriv=True)
    return (v * w[:, None]).T @ d


def weighted_mass_matrix(bset, g, n_quad=None, breakpoints=()):
    """Entries (i,j) = integral of g(x) phi_j(x) phi_i(x), composite Gauss.

    g is a callable of x; breakpoints mark where g is only piecewise smooth.
    """
    if n_quad is None:
        n_quad = bset.n_deg + COEFF_QUAD_MARGIN
    if n_quad < bset.n_deg + 1:
        raise ValueError(f"n_quad must be >= N+1 = {bset.n_deg + 1}, got {n_quad}")
    x, w = _quad_points(bset, n_quad, breakpoints)
    gv = np.array([g(xx) for xx in x], dtype=float)
    v = basis_matrix(bset, x)
    m = (v * (w * gv)[:, None]).T @ v
    return 0.5 * (m + m.T)


def load_vector(bset, f, n_quad=None, breakpoints=()):
    """Entries i = (1/2) integral of f(x) phi_i(x), composite Gauss."""
    if n_quad is None:
        n_quad = bset.n_deg + COEFF_QUAD_MARGIN
    x, w = _quad_points(bset, n_quad, breakpoints)
    fv = np.array([f(xx) for xx in x], dtype=float)
    v = basis_matrix(bset, x)
    return 0.5 * v.T @ (w * fv)
