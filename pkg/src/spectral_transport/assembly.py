"""Global system assembly for single- and multi-element meshes.

Unknowns are ordered direction-major: the spatial coefficient n of
direction m sits at global index m*(E*N+1) + n. Trial functions are C0
across element interfaces; per direction with nonzero angle exactly one
global boundary coefficient (the inflow one) is prescribed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .basis import BasisSet, Element, bhat_matrix, load_vector, weighted_mass_matrix
from .orthopoly import gauss_rule
from .problem import inflow_values

_BREAKPOINT_TOL = 1e-12


class ConfigurationError(ValueError):
    """Mesh/problem mismatch, e.g. a cross-section jump inside an element."""


@dataclass(frozen=True)
class Mesh:
    """Contiguous elements sharing a spatial degree N."""

    elements: tuple
    n_deg: int

    def __post_init__(self):
        if len(self.elements) < 1:
            raise ConfigurationError("mesh needs at least one element")
        for left, right in zip(self.elements[:-1], self.elements[1:]):
            if left.b != right.a:
                raise ConfigurationError(
                    f"elements are not contiguous: {left.b} != {right.a}")

    @classmethod
    def from_breakpoints(cls, domain, interior, n_deg):
        cuts = [domain[0]] + sorted(t for t in interior if domain[0] < t < domain[1]) + [domain[1]]
        return cls(tuple(Element(a, b) for a, b in zip(cuts[:-1], cuts[1:])), n_deg)

    @property
    def n_elems(self):
        return len(self.elements)

    @property
    def n_sp(self):
        """Global C0 spatial dimension E*N + 1."""
        return self.n_elems * self.n_deg + 1

    @property
    def domain(self):
        return (self.elements[0].a, self.elements[-1].b)

    def basis_sets(self):
        return [BasisSet(self.n_deg, el) for el in self.elements]

    def local_slice(self, k):
        """Global spatial indices of element k's local coefficients 0..N."""
        return slice(k * self.n_deg, k * self.n_deg + self.n_deg + 1)

    def locate(self, x):
        """Element index containing x (interfaces resolve to the left element)."""
        a, b = self.domain
        if not a <= x <= b:
            raise ValueError(f"x={x} outside domain [{a}, {b}]")
        for k, el in enumerate(self.elements):
            if x <= el.b:
                return k
        return self.n_elems - 1


def global_bhat(mesh):
    out = np.zeros((mesh.n_sp, mesh.n_sp))
    for k, bset in enumerate(mesh.basis_sets()):
        sl = mesh.local_slice(k)
        out[sl, sl] += bhat_matrix(bset)
    return out


def global_mass(mesh, g, breakpoints=()):
    out = np.zeros((mesh.n_sp, mesh.n_sp))
    for k, bset in enumerate(mesh.basis_sets()):
        sl = mesh.local_slice(k)
        out[sl, sl] += weighted_mass_matrix(bset, g, breakpoints=breakpoints)
    return out


def global_load(mesh, f, breakpoints=()):
    out = np.zeros(mesh.n_sp)
    for k, bset in enumerate(mesh.basis_sets()):
        out[mesh.local_slice(k)] += load_vector(bset, f, breakpoints=breakpoints)
    return out


def mask_indices(n_deg, m_deg, mesh):
    """(interior/outflow indices, inflow indices), both sorted, 0-based.

    Directions below the angular midpoint travel leftward (inflow at the
    right boundary), those above travel rightward (inflow at the left);
    a mu=0 node keeps both boundary coefficients as unknowns.
    """
    n_sp = mesh.n_elems * n_deg + 1
    idx_bc = []
    for m in range(m_deg + 1):
        if m <= (m_deg - 1) // 2:
            idx_bc.append(m * n_sp + (n_sp - 1))
        elif m >= (m_deg + 2) // 2:
            idx_bc.append(m * n_sp)
    bc = set(idx_bc)
    idx_io = [i for i in range(n_sp * (m_deg + 1)) if i not in bc]
    return idx_io, sorted(idx_bc)


@dataclass(frozen=True)
class GlobalSystem:
    """Assembled dense system A = B + T - S with mask index sets.

    bhat and t_blocks are kept alongside A so the source-iteration solver
    can form the per-direction transport blocks without re-assembly.
    """

    matrix_a: np.ndarray
    rhs: np.ndarray
    idx_io: np.ndarray
    idx_bc: np.ndarray
    bc_values: np.ndarray
    mesh: Mesh
    m_deg: int
    rule: object
    bhat: np.ndarray
    t_blocks: list

    @property
    def n_deg(self):
        return self.mesh.n_deg

    @property
    def n_sp(self):
        return self.mesh.n_sp

    @property
    def n_total(self):
        return self.n_sp * (self.m_deg + 1)

    @property
    def dof(self):
        return len(self.idx_io)

    def block(self, m, n):
        """View of the (direction m, direction n) block of A."""
        sp = self.n_sp
        return self.matrix_a[m * sp:(m + 1) * sp, n * sp:(n + 1) * sp]


def _check_mesh_covers(spec, mesh):
    boundaries = {el.a for el in mesh.elements} | {el.b for el in mesh.elements}
    for t in spec.operator_breakpoints():
        if not any(abs(t - b) <= _BREAKPOINT_TOL for b in boundaries):
            raise ConfigurationError(
                f"cross-section breakpoint x={t} is not an element boundary; "
                f"boundaries are {sorted(boundaries)}")


def assemble(spec, mesh, m_deg):
    """Assemble the full system for spec on mesh with M+1 angular nodes."""
    if m_deg < 1:
        raise ConfigurationError(f"angular degree must be >= 1, got {m_deg}")
    _check_mesh_covers(spec, mesh)
    rule = gauss_rule(m_deg + 1)
    mu = rule.nodes
    omega = rule.weights
    n_sp = mesh.n_sp
    n_dir = m_deg + 1

    bhat = global_bhat(mesh)
    b_full = np.kron(np.diag(mu), bhat)

    st_breaks = spec.sigma_t.breakpoints
    if "mu" not in spec.sigma_t.variables:
        t_shared = global_mass(mesh, lambda x: spec.sigma_t(x=x), st_breaks)
        t_blocks = [t_shared] * n_dir
        t_full = np.kron(np.eye(n_dir), t_shared)
    else:
        t_blocks = [global_mass(mesh, lambda x, m=m: spec.sigma_t(x=x, mu=mu[m]), st_breaks)
                    for m in range(n_dir)]
        t_full = np.zeros((n_sp * n_dir, n_sp * n_dir))
        for m in range(n_dir):
            t_full[m * n_sp:(m + 1) * n_sp, m * n_sp:(m + 1) * n_sp] = t_blocks[m]

    ss_breaks = spec.sigma_s.breakpoints
    ss_vars = spec.sigma_s.variables
    if "mu" not in ss_vars and "nu" not in ss_vars:
        ms = global_mass(mesh, lambda x: spec.sigma_s(x=x), ss_breaks)
        s_full = np.kron(0.5 * np.tile(omega, (n_dir, 1)), ms)
    else:
        s_full = np.zeros((n_sp * n_dir, n_sp * n_dir))
        for m in range(n_dir):
            for n in range(n_dir):
                g = lambda x, m=m, n=n: spec.sigma_s(x=x, mu=mu[m], nu=mu[n])
                block = 0.5 * omega[n] * global_mass(mesh, g, ss_breaks)
                s_full[m * n_sp:(m + 1) * n_sp, n * n_sp:(n + 1) * n_sp] = block

    # The load vector uses one Gauss rule per element even when the source
    # has a kink inside it: the load error at the kink is part of the
    # discretization whose finite-regularity convergence rate the method
    # exhibits, and splitting there would change that rate. Cross-section
    # kinks never arise inside an element (checked above).
    rhs = np.zeros(n_sp * n_dir)
    if "mu" not in spec.source.variables:
        f_shared = global_load(mesh, lambda x: spec.source(x=x))
        for m in range(n_dir):
            rhs[m * n_sp:(m + 1) * n_sp] = f_shared
    else:
        for m in range(n_dir):
            rhs[m * n_sp:(m + 1) * n_sp] = global_load(
                mesh, lambda x, m=m: spec.source(x=x, mu=mu[m]))

    idx_io, idx_bc = mask_indices(mesh.n_deg, m_deg, mesh)
    return GlobalSystem(
        matrix_a=b_full + t_full - s_full,
        rhs=rhs,
        idx_io=np.array(idx_io), idx_bc=np.array(idx_bc),
        bc_values=inflow_values(spec, rule),
        mesh=mesh, m_deg=m_deg, rule=rule,
        bhat=bhat, t_blocks=t_blocks,
    )


def lift_vector(system):
    """Full-length vector with the prescribed values at the inflow positions."""
    lift = np.zeros(system.n_total)
    lift[system.idx_bc] = system.bc_values
    return lift


def reduce_system(system):
    """Restrict to the unknown positions, folding boundary data into the rhs."""
    a_io = system.matrix_a[np.ix_(system.idx_io, system.idx_io)]
    rhs_io = (system.rhs - system.matrix_a @ lift_vector(system))[system.idx_io]
    return a_io, rhs_io
