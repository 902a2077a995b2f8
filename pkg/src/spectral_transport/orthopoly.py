"""Legendre polynomials, Gauss-Legendre quadrature and barycentric interpolation.

Nodes are found by Newton iteration on the Legendre recurrence; the rule
construction enforces symmetry about zero so that the node/weight symmetry
invariants hold bit-for-bit.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

_NEWTON_TOL = 1e-15
_NEWTON_MAX_ITER = 100


def legendre_pair(n, x):
    """Evaluate (L_n(x), L_n'(x)) in one recurrence pass.

    x may be a scalar or an ndarray; returns a pair with matching shape.
    """
    x = np.asarray(x, dtype=float)
    if n == 0:
        return np.ones_like(x), np.zeros_like(x)
    # L_{k+1} = ((2k+1) x L_k - k L_{k-1}) / (k+1), same recurrence for L'
    # via L'_{k+1} = L'_{k-1} + (2k+1) L_k
    p_prev, p = np.ones_like(x), x.copy()
    d_prev, d = np.zeros_like(x), np.ones_like(x)
    for k in range(1, n):
        p_next = ((2 * k + 1) * x * p - k * p_prev) / (k + 1)
        d_next = d_prev + (2 * k + 1) * p
        p_prev, p = p, p_next
        d_prev, d = d, d_next
    return p, d


def legendre_eval(n, x):
    """L_n(x) by the three-term recurrence."""
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    p, _ = legendre_pair(n, x)
    return p if np.ndim(x) else float(p)


def legendre_deriv(n, x):
    """L_n'(x) by the derivative recurrence."""
    if n < 0:
        raise ValueError(f"degree must be nonnegative, got {n}")
    _, d = legendre_pair(n, x)
    return d if np.ndim(x) else float(d)


@dataclass(frozen=True)
class QuadratureRule:
    """Gauss-Legendre nodes (strictly ascending in (-1,1)) and positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    @property
    def n_pts(self):
        return len(self.nodes)


def gauss_rule(n_pts):
    """Gauss-Legendre rule with n_pts points, exact for degree <= 2*n_pts - 1."""
    if n_pts < 1:
        raise ValueError(f"n_pts must be >= 1, got {n_pts}")
    if n_pts == 1:
        return QuadratureRule(np.array([0.0]), np.array([2.0]))

    # Chebyshev-like initial guess, then Newton on L_{n_pts}
    i = np.arange(n_pts)
    x = np.cos(np.pi * (4 * i + 3) / (4 * n_pts + 2))
    for _ in range(_NEWTON_MAX_ITER):
        p, d = legendre_pair(n_pts, x)
        dx = p / d
        x = x - dx
        if np.max(np.abs(dx)) <= _NEWTON_TOL:
            break

    x = np.sort(x)
    # enforce exact symmetry: average mirrored pairs, pin the middle node to 0
    x = 0.5 * (x - x[::-1])
    if n_pts % 2 == 1:
        x[n_pts // 2] = 0.0

    _, d = legendre_pair(n_pts, x)
    w = 2.0 / ((1.0 - x**2) * d**2)
    w = 0.5 * (w + w[::-1])
    return QuadratureRule(x, w)


def quad_integrate(f, rule):
    """Apply the rule to a callable: sum_i w_i f(x_i)."""
    return float(sum(w * f(x) for x, w in zip(rule.nodes, rule.weights)))


def barycentric_weights(rule):
    """Barycentric weights for the Gauss nodes, stable for large rules.

    For Gauss-Legendre points b_j = (-1)^j sqrt((1 - x_j^2) w_j) up to a
    common factor, which cancels in the barycentric quotient.
    """
    b = np.sqrt((1.0 - rule.nodes**2) * rule.weights)
    b[1::2] *= -1.0
    return b


def interpolate_at_nodes(values, rule, x):
    """Evaluate the interpolating polynomial through (node_i, values_i) at x."""
    values = np.asarray(values, dtype=float)
    if len(values) != rule.n_pts:
        raise ValueError(f"expected {rule.n_pts} values, got {len(values)}")
    diff = x - rule.nodes
    hit = np.argmin(np.abs(diff))
    if diff[hit] == 0.0:
        return float(values[hit])
    b = barycentric_weights(rule)
    q = b / diff
    return float(np.dot(q, values) / np.sum(q))
