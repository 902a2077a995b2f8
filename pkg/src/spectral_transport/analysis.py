"""Error norms, convergence sweeps and algebraic-order fitting."""

from __future__ import annotations

import hashlib
import io
import json
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np

from .assembly import Mesh, assemble
from .basis import basis_matrix
from .orthopoly import barycentric_weights, gauss_rule
from .solve import angular_flux_values, scalar_flux_values, solve_direct

ERROR_QUAD_EXTRA = 16  # error quadrature uses 2N+16 points per smooth piece
NOISE_FLOOR = 1e-13
SPECTRAL_FLOOR = 1e-11


class AnalysisError(ValueError):
    pass


def _error_points(mesh, per_elem_pts, breakpoints=()):
    """Composite physical Gauss points/weights over the mesh, split at breakpoints."""
    ref = gauss_rule(per_elem_pts)
    xs, ws = [], []
    for el in mesh.elements:
        cuts = [el.a] + [t for t in sorted(breakpoints) if el.a < t < el.b] + [el.b]
        for lo, hi in zip(cuts[:-1], cuts[1:]):
            half = 0.5 * (hi - lo)
            xs.append(0.5 * (lo + hi) + half * ref.nodes)
            ws.append(half * ref.weights)
    return np.concatenate(xs), np.concatenate(ws)


def _reference_values(reference, xs):
    """Evaluate a reference callable over an array, vectorized when possible."""
    try:
        vals = np.asarray(reference(xs), dtype=float)
        if vals.shape == xs.shape:
            return vals
    except Exception:
        pass
    return np.array([float(np.ravel(reference(x))[0]) for x in xs])


def flux_l2_error(sol, reference, ref_breakpoints=(), density=1):
    """L2 distance between the solution's scalar flux and a reference flux."""
    n_pts = density * (2 * sol.mesh.n_deg + ERROR_QUAD_EXTRA)
    xs, ws = _error_points(sol.mesh, n_pts, ref_breakpoints)
    diff = scalar_flux_values(sol, xs) - _reference_values(reference, xs)
    return float(np.sqrt(np.sum(ws * diff**2)))


def _coeffs_at_mu(sol, mu):
    """Spatial coefficient vector of the direction-interpolated flux at angle mu."""
    nodes = sol.rule.nodes
    diff = mu - nodes
    hit = np.flatnonzero(diff == 0.0)
    if hit.size:
        return sol.coeffs[hit[0]]
    q = barycentric_weights(sol.rule) / diff
    return (q @ sol.coeffs) / q.sum()


def angular_l2_error(sol, reference, ref_breakpoints=(), density=1):
    """Tensor-quadrature L2(angle; L2(space)) distance from reference(x, mu)."""
    n_sp_pts = density * (2 * sol.mesh.n_deg + ERROR_QUAD_EXTRA)
    xs, ws = _error_points(sol.mesh, n_sp_pts, ref_breakpoints)
    ang = gauss_rule(density * (2 * (sol.m_deg + 1) + ERROR_QUAD_EXTRA))
    mesh = sol.mesh
    sets = mesh.basis_sets()
    ks = np.array([mesh.locate(x) for x in xs])
    total = 0.0
    for mu, wmu in zip(ang.nodes, ang.weights):
        cmu = _coeffs_at_mu(sol, mu)
        vals = np.empty_like(xs)
        for k in np.unique(ks):
            sel = ks == k
            vals[sel] = basis_matrix(sets[k], xs[sel]) @ cmu[mesh.local_slice(k)]
        diff = vals - _reference_values(lambda xx: reference(xx, mu), xs)
        total += wmu * np.sum(ws * diff**2)
    return float(np.sqrt(total))


def boundary_error(sol, reference):
    """Weighted outflow-trace error: sqrt(sum_i w_i |mu_i| err(outflow_i, mu_i)^2)."""
    a, b = sol.mesh.domain
    total = 0.0
    for m, (mu, w) in enumerate(zip(sol.rule.nodes, sol.rule.weights)):
        if mu == 0.0:
            continue
        x_out = b if mu > 0 else a
        err = float(angular_flux_values(sol, [x_out], m)[0]) - reference(x_out, mu)
        total += w * abs(mu) * err**2
    return float(np.sqrt(total))


# --- convergence studies ---------------------------------------------------

@dataclass(frozen=True)
class SweepRow:
    param: float
    n_deg: int
    m_deg: int
    n_elems: int
    dof: int
    flux_l2_error: float | None
    boundary_error: float | None
    wall_time_ms: float
    failed: str = ""


@dataclass
class ConvergenceTable:
    sweep_param: str  # "N" or "M"
    rows: list = field(default_factory=list)
    fitted_order: float | None = None
    spectral_flag: bool = False

    def ok_rows(self):
        return [r for r in self.rows if not r.failed and r.flux_l2_error is not None]

    def to_csv(self, include_time=True):
        out = io.StringIO()
        out.write("param,N,M,E,dof,flux_l2_error,boundary_error,wall_time_ms\n")
        for r in self.rows:
            berr = "" if r.boundary_error is None else repr(r.boundary_error)
            ferr = "" if r.flux_l2_error is None else repr(r.flux_l2_error)
            wt = repr(round(r.wall_time_ms, 3)) if include_time else ""
            out.write(f"{r.param},{r.n_deg},{r.m_deg},{r.n_elems},{r.dof},{ferr},{berr},{wt}\n")
        return out.getvalue()

    def to_json_dict(self):
        return {
            "sweep_param": self.sweep_param,
            "fitted_order": self.fitted_order,
            "spectral_flag": self.spectral_flag,
            "rows": [
                {"param": r.param, "N": r.n_deg, "M": r.m_deg, "E": r.n_elems,
                 "dof": r.dof, "flux_l2_error": r.flux_l2_error,
                 "boundary_error": r.boundary_error, "wall_time_ms": r.wall_time_ms,
                 **({"failed": r.failed} if r.failed else {})}
                for r in self.rows
            ],
        }

    def to_json(self):
        return json.dumps(self.to_json_dict(), indent=2)


def fit_order(table):
    """Least-squares slope of log(error) against log(N) or log(M+1)."""
    rows = [r for r in table.ok_rows() if r.flux_l2_error > NOISE_FLOOR]
    if len(rows) < 3:
        raise AnalysisError(f"order fit needs >= 3 rows above the noise floor, have {len(rows)}")
    if table.sweep_param == "M":
        xs = np.log([r.m_deg + 1 for r in rows])
    else:
        xs = np.log([r.n_deg for r in rows])
    ys = np.log([r.flux_l2_error for r in rows])
    slope, _ = np.polyfit(xs, ys, 1)
    return float(slope)


def convergence_study(spec, sweep_param, sweep_values, n_deg=None, m_deg=None,
                      elements=(), reference=None, ref_breakpoints=(),
                      with_boundary=False, reference_angular=None, threads=0):
    """One direct solve per swept value; failed rows are recorded, not fatal.

    sweep_param is "N" or "M"; the fixed counterpart comes from n_deg/m_deg.
    elements lists interior element boundaries. reference is a scalar-flux
    callable; reference_angular (x, mu) enables the boundary-error column.
    """
    if sweep_param not in ("N", "M"):
        raise AnalysisError(f"sweep_param must be 'N' or 'M', got {sweep_param!r}")
    if len(sweep_values) < 2:
        raise AnalysisError("sweep needs at least 2 values")
    if reference is None:
        raise AnalysisError("a reference flux is required")

    def run_one(value):
        nn = value if sweep_param == "N" else n_deg
        mm = value if sweep_param == "M" else m_deg
        t0 = time.perf_counter()
        try:
            mesh = Mesh.from_breakpoints(spec.domain, elements, nn)
            sol = solve_direct(assemble(spec, mesh, mm))
            err = flux_l2_error(sol, reference, ref_breakpoints)
            berr = boundary_error(sol, reference_angular) if reference_angular else None
            failed = ""
        except Exception as exc:  # row failure must not abort the sweep
            err, berr, failed = None, None, f"{type(exc).__name__}: {exc}"
            mesh = None
        ms = 1e3 * (time.perf_counter() - t0)
        dof = 0 if mesh is None else (mesh.n_elems * nn + 1) * (mm + 1) - 2 * ((mm + 1) // 2)
        e = 1 if mesh is None else mesh.n_elems
        return SweepRow(param=value, n_deg=nn, m_deg=mm, n_elems=e, dof=dof,
                        flux_l2_error=err, boundary_error=berr,
                        wall_time_ms=ms, failed=failed)

    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            rows = list(pool.map(run_one, sweep_values))
    else:
        rows = [run_one(v) for v in sweep_values]

    table = ConvergenceTable(sweep_param=sweep_param, rows=rows)
    table.spectral_flag = any(
        r.flux_l2_error is not None and r.flux_l2_error < SPECTRAL_FLOOR
        for r in rows[:-1])
    good = [r for r in table.ok_rows() if r.flux_l2_error > NOISE_FLOOR]
    if len(good) >= 3:
        table.fitted_order = fit_order(table)
    return table


# --- reference-solution fixtures -------------------------------------------

def _fixture_checksum(lines):
    return hashlib.sha256("\n".join(lines).encode()).hexdigest()[:16]


def save_solution_fixture(sol, path, problem_name=""):
    """Persist modal coefficients as a versioned CSV fixture."""
    boundaries = [sol.mesh.elements[0].a] + [el.b for el in sol.mesh.elements]
    lines = [f"{m},{n},{float(sol.coeffs[m, n])!r}"
             for m in range(sol.m_deg + 1) for n in range(sol.mesh.n_sp)]
    header = [
        "# spectral-transport reference fixture v1",
        f"# problem={problem_name}",
        f"# n_ref={sol.mesh.n_deg}",
        f"# m_ref={sol.m_deg}",
        f"# boundaries={','.join(repr(b) for b in boundaries)}",
        f"# error_quad_extra={ERROR_QUAD_EXTRA}",
        f"# checksum={_fixture_checksum(lines)}",
        "m,n,coeff",
    ]
    with open(path, "w") as fh:
        fh.write("\n".join(header + lines) + "\n")


def load_solution_fixture(path):
    """Rebuild a Solution from a fixture; verifies the embedded checksum."""
    from .solve import Solution

    meta = {}
    lines = []
    with open(path) as fh:
        for raw in fh:
            line = raw.strip()
            if not line or line == "m,n,coeff":
                continue
            if line.startswith("#"):
                if "=" in line:
                    key, _, val = line[1:].strip().partition("=")
                    meta[key.strip()] = val.strip()
                continue
            lines.append(line)
    if meta.get("checksum") and meta["checksum"] != _fixture_checksum(lines):
        raise AnalysisError(f"fixture checksum mismatch in {path}")
    n_ref = int(meta["n_ref"])
    m_ref = int(meta["m_ref"])
    boundaries = [float(t) for t in meta["boundaries"].split(",")]
    mesh = Mesh.from_breakpoints((boundaries[0], boundaries[-1]), boundaries[1:-1], n_ref)
    coeffs = np.zeros((m_ref + 1, mesh.n_sp))
    for line in lines:
        m, n, val = line.split(",")
        coeffs[int(m), int(n)] = float(val)
    return Solution(coeffs=coeffs, mesh=mesh, rule=gauss_rule(m_ref + 1), spec=None)
