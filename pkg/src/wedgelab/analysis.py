"""Empirical regularity diagnostics for solved fields.

Fits the corner decay exponent from log-log regression of the angular sup,
measures conormal-flux jumps across the interface, forms the measured
left/right-hand sides of the interior, corner, and global a-priori
estimates as ratios, and runs the barrier comparison check.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
from scipy.spatial import cKDTree

from .exact_solutions import Barrier, barrier_eval_xy
from .fem import FemSolution, ProblemSpec, solution_field
from .norms import NormParams, SampledField, plain_norm, weighted_norm

DEGENERATE_RHS = 1e-13


class FitError(ValueError):
    """Exponent regression is ill-posed for the given samples."""


class BoundaryHypothesisError(ValueError):
    """|v| <= w fails on the boundary samples: the comparison check is vacuous."""


@dataclass
class ExponentFit:
    beta: float
    intercept: float
    r_squared: float
    radii_range: tuple[float, float]
    per_ray: dict[float, float]
    sup_values: np.ndarray  # (n_radii,) angular sup of |u - u(corner)|
    radii: np.ndarray

    def __post_init__(self):
        if not self.radii_range[0] < self.radii_range[1]:
            raise FitError("invalid radii range")


@dataclass
class EstimateRatio:
    lhs: float
    rhs: float
    kind: str
    descriptor: str = ""
    status: str = "ok"  # "ok" or "degenerate"

    @property
    def ratio(self) -> float | None:
        if self.status != "ok":
            return None
        return self.lhs / self.rhs


@dataclass
class FluxJumpReport:
    max_jump: float
    mean_jump: float
    n_edges: int


@dataclass
class ComparisonReport:
    passed: bool
    worst_boundary_ratio: float
    worst_interior_ratio: float
    n_boundary: int
    n_interior: int


def _triangle_neighbors(triangles: np.ndarray) -> np.ndarray:
    """(nt, 3) neighbor indices; entry i is across the edge opposite vertex i."""
    nt = triangles.shape[0]
    nbrs = -np.ones((nt, 3), dtype=np.int64)
    owner: dict[tuple[int, int], tuple[int, int]] = {}
    for t, (a, b, c) in enumerate(triangles):
        for i, (u, v) in enumerate(((b, c), (c, a), (a, b))):
            key = (u, v) if u < v else (v, u)
            if key in owner:
                t2, i2 = owner.pop(key)
                nbrs[t, i] = t2
                nbrs[t2, i2] = t
            else:
                owner[key] = (t, i)
    return nbrs


class P1Evaluator:
    """Point evaluation of a P1 finite-element field.

    Locates the containing element by walking from the nearest barycenter
    across shared edges toward the query point (robust on strongly graded
    meshes where KD-tree candidates alone miss the containing element).
    """

    def __init__(self, fs: FemSolution):
        from .fem import element_basis_gradients

        self.mesh = fs.mesh
        self.values = fs.values
        _, self.basis_grads = element_basis_gradients(
            fs.mesh.vertices, fs.mesh.triangles
        )
        self.bary = fs.mesh.barycenters()
        self.tree = cKDTree(self.bary)
        self.neighbors = _triangle_neighbors(fs.mesh.triangles)
        self.corner_value = self._corner_value()

    def _corner_value(self) -> float:
        i = int(np.argmin(np.hypot(self.mesh.vertices[:, 0], self.mesh.vertices[:, 1])))
        return float(self.values[i])

    def _lam(self, t: int, p: np.ndarray) -> np.ndarray:
        # lambda_i(p) = 1/3 + grad(lambda_i) . (p - barycenter)
        return 1.0 / 3.0 + self.basis_grads[t] @ (p - self.bary[t])

    def _locate(self, p: np.ndarray) -> tuple[int, np.ndarray]:
        t = int(self.tree.query(p)[1])
        visited = set()
        best_t, best_min = t, -math.inf
        for _ in range(4 * int(math.sqrt(self.mesh.n_triangles)) + 64):
            lam = self._lam(t, p)
            mn = float(lam.min())
            if mn >= -1e-12:
                return t, lam
            if mn > best_min:
                best_t, best_min = t, mn
            visited.add(t)
            moved = False
            for i in np.argsort(lam):
                nb = int(self.neighbors[t, i])
                if nb >= 0 and nb not in visited and lam[i] < 0.0:
                    t = nb
                    moved = True
                    break
            if not moved:
                break
        # accept marginal exterior points (roundoff near edges), else fail
        if best_min > -1e-6:
            return best_t, self._lam(best_t, p)
        raise FitError(f"query point {p.tolist()} lies outside the mesh")

    def __call__(self, x, y):
        x = np.atleast_1d(np.asarray(x, dtype=float))
        y = np.atleast_1d(np.asarray(y, dtype=float))
        pts = np.column_stack([x, y])
        out = np.empty(pts.shape[0])
        for q, p in enumerate(pts):
            t, lam = self._locate(p)
            lam = np.clip(lam, 0.0, 1.0)
            lam /= lam.sum()
            out[q] = float(self.values[self.mesh.triangles[t]] @ lam)
        return out


def _field_evaluator(field):
    if isinstance(field, FemSolution):
        ev = P1Evaluator(field)
        return ev, ev.corner_value
    if isinstance(field, SampledField):
        from scipy.interpolate import LinearNDInterpolator, NearestNDInterpolator

        lin = LinearNDInterpolator(field.points, field.values)
        near = NearestNDInterpolator(field.points, field.values)

        def ev(x, y):
            out = lin(np.column_stack([np.atleast_1d(x), np.atleast_1d(y)]))
            mask = np.isnan(out)
            if np.any(mask):
                out[mask] = near(
                    np.column_stack([np.atleast_1d(x)[mask], np.atleast_1d(y)[mask]])
                )
            return out

        i = int(np.argmin(np.hypot(field.points[:, 0], field.points[:, 1])))
        return ev, float(field.values[i])
    if callable(field):
        def ev(x, y):
            return np.asarray(field(np.atleast_1d(x), np.atleast_1d(y)), dtype=float)

        return ev, float(ev(np.array([0.0]), np.array([0.0]))[0])
    raise TypeError("field must be a FemSolution, SampledField, or callable")


def default_fit_radii(h: float, radius: float, count: int = 9) -> np.ndarray:
    """Geometric radii between 4h (FEM pollution floor) and R/4."""
    lo, hi = 4.0 * h, radius / 4.0
    if not lo < hi:
        raise FitError(f"no admissible fit window: 4h = {lo:.3g} >= R/4 = {hi:.3g}")
    return np.geomspace(lo, hi, count)


def default_rays(wedge, n: int = 32, inset: float = 0.02) -> np.ndarray:
    """Interior ray angles, inset from the walls by a fixed angular fraction."""
    lo = wedge.theta_minus + inset * wedge.opening
    hi = wedge.theta_plus - inset * wedge.opening
    return np.linspace(lo, hi, n)


def fit_corner_exponent(
    field,
    rays,
    radii,
    corner_value: float | None = None,
) -> ExponentFit:
    """Least-squares slope of log sup_theta |u(r, theta) - u(corner)| vs log r.

    Requires at least 4 radii spanning a decade; a field with no variation
    over the window is an error, not an exponent.
    """
    radii = np.asarray(sorted(float(r) for r in radii))
    rays = np.asarray(list(rays), dtype=float)
    if radii.size < 4:
        raise FitError(f"need at least 4 radii, got {radii.size}")
    if radii[-1] < 10.0 * radii[0]:
        raise FitError(
            f"radii must span at least one decade, got {radii[-1] / radii[0]:.3g}x"
        )
    if rays.size < 1:
        raise FitError("need at least one ray")
    ev, auto_corner = _field_evaluator(field)
    u0 = auto_corner if corner_value is None else float(corner_value)

    rr, tt = np.meshgrid(radii, rays, indexing="ij")
    vals = ev((rr * np.cos(tt)).ravel(), (rr * np.sin(tt)).ravel()).reshape(rr.shape)
    dev = np.abs(vals - u0)
    sup = dev.max(axis=1)
    if np.any(sup <= 0.0):
        raise FitError("zero variation at some radius: exponent undefined")

    logr = np.log(radii)
    logs = np.log(sup)
    slope, intercept = np.polyfit(logr, logs, 1)
    pred = slope * logr + intercept
    ss_res = float(((logs - pred) ** 2).sum())
    ss_tot = float(((logs - logs.mean()) ** 2).sum())
    r2 = 1.0 - ss_res / ss_tot if ss_tot > 0.0 else 0.0

    per_ray: dict[float, float] = {}
    for j, th in enumerate(rays):
        col = dev[:, j]
        if np.all(col > 0.0):
            s, _ = np.polyfit(logr, np.log(col), 1)
            per_ray[float(th)] = float(s)
    return ExponentFit(
        beta=float(slope),
        intercept=float(intercept),
        r_squared=float(r2),
        radii_range=(float(radii[0]), float(radii[-1])),
        per_ray=per_ray,
        sup_values=sup,
        radii=radii,
    )


def interface_flux_jump(
    fs: FemSolution,
    coeff,
    weighting: str = "conormal",
) -> FluxJumpReport:
    """Max and mean of |a+ grad(u+) . n - a- grad(u-) . n| over interface edges.

    Each interface edge is paired with its two adjacent elements; n is the
    interface normal (0, 1).  The mean is weighted by edge length, i.e. it
    is the arclength average of the jump along the interface (a plain pair
    average would be dominated by the short corner edges of graded meshes).
    ``weighting="minus-both"`` applies the lower branch on both sides, a
    deliberate mispairing used as a negative control.
    """
    mesh = fs.mesh
    if mesh.interface_edges.shape[0] == 0:
        return FluxJumpReport(0.0, 0.0, 0)
    edge_tris: dict[tuple[int, int], list[int]] = {}
    for t, (a, b, c) in enumerate(mesh.triangles):
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            edge_tris.setdefault(key, []).append(t)
    normal = np.array([0.0, 1.0])
    bary = mesh.barycenters()
    jumps, lengths = [], []
    for u, v in mesh.interface_edges:
        key = (int(u), int(v)) if u < v else (int(v), int(u))
        tris = edge_tris.get(key, [])
        if len(tris) != 2:
            continue
        t_up = next((t for t in tris if mesh.region[t] > 0), None)
        t_dn = next((t for t in tris if mesh.region[t] < 0), None)
        if t_up is None or t_dn is None:
            continue
        side_up = -1 if weighting == "minus-both" else 1
        a_up = coeff.evaluate(bary[t_up : t_up + 1, 0], bary[t_up : t_up + 1, 1], np.array([side_up]))[0]
        a_dn = coeff.evaluate(bary[t_dn : t_dn + 1, 0], bary[t_dn : t_dn + 1, 1], np.array([-1]))[0]
        flux_up = normal @ (a_up @ fs.element_gradients[t_up])
        flux_dn = normal @ (a_dn @ fs.element_gradients[t_dn])
        jumps.append(abs(flux_up - flux_dn))
        lengths.append(float(np.linalg.norm(mesh.vertices[key[0]] - mesh.vertices[key[1]])))
    if not jumps:
        return FluxJumpReport(0.0, 0.0, 0)
    arr = np.asarray(jumps)
    wts = np.asarray(lengths)
    return FluxJumpReport(float(arr.max()), float((arr * wts).sum() / wts.sum()), arr.size)


def _data_norm_fields(spec: ProblemSpec, points: np.ndarray, sides: np.ndarray):
    """Per-side scalar fields of each component of g on the given samples."""
    out = []
    gvals = spec.g_at(points[:, 0], points[:, 1], sides)
    for side in (1, -1):
        mask = sides == side
        if mask.sum() < 2:
            continue
        for comp in (0, 1):
            out.append(
                SampledField(points[mask], gvals[mask, comp], None, None)
            )
    return out


def _holder0_norm(field: SampledField, alpha: float, seed: int = 0, pair_budget=None) -> float:
    return plain_norm(field, k=0, alpha=alpha, seed=seed, pair_budget=pair_budget)


def estimate_ratio_interior(
    fs: FemSolution,
    spec: ProblemSpec,
    center: tuple[float, float],
    r_inner: float,
    alpha: float,
    seed: int = 0,
    pair_budget: int | None = None,
) -> EstimateRatio:
    """Measured interior-estimate ratio on the ball pair B(c, r) in B(c, 2r).

    lhs: max over sides of the unweighted ||u||_{1,alpha} estimate on the
    inner ball; rhs: sup|u| on the outer ball + sup|h| + the per-component
    Holder norms of g.  The solve must cover the outer ball.
    """
    fld = solution_field(fs)
    d = np.hypot(fld.points[:, 0] - center[0], fld.points[:, 1] - center[1])
    inner = fld.restrict(d <= r_inner)
    outer = fld.restrict(d <= 2.0 * r_inner)
    if inner.n < 4 or outer.n < 4:
        raise FitError("too few samples in the ball pair; refine the mesh")

    lhs = 0.0
    for side in (1, -1):
        sub = inner.restrict(inner.regions == side)
        if sub.n >= 2:
            lhs = max(lhs, plain_norm(sub, k=1, alpha=alpha, seed=seed, pair_budget=pair_budget))

    sup_u = float(np.abs(outer.values).max())
    sup_h = float(
        np.abs(spec.h_at(outer.points[:, 0], outer.points[:, 1])).max()
    )
    g_norm = 0.0
    for gf in _data_norm_fields(spec, outer.points, outer.regions):
        g_norm = max(g_norm, _holder0_norm(gf, alpha, seed))
    rhs = sup_u + sup_h + g_norm
    desc = f"interior ball r={r_inner:.3g} at ({center[0]:.3g},{center[1]:.3g})"
    if rhs <= DEGENERATE_RHS:
        return EstimateRatio(lhs, rhs, "interior", desc, status="degenerate")
    return EstimateRatio(lhs, rhs, "interior", desc)


def _wall_trace_field(spec: ProblemSpec, theta: float, n: int = 60) -> SampledField:
    """Boundary-trace samples along a wall ray with tangential derivative data."""
    R = spec.domain.radius
    r = np.linspace(R / n, R, n)
    x, y = r * math.cos(theta), r * math.sin(theta)
    vals = spec.phi_at(x, y)
    tau = np.array([math.cos(theta), math.sin(theta)])
    if spec.phi_grad is not None:
        g = np.asarray(spec.phi_grad(x, y), dtype=float)
        dtang = g[..., 0] * tau[0] + g[..., 1] * tau[1]
    else:
        dtang = np.gradient(vals, r)
    grads = np.column_stack([dtang, np.zeros_like(dtang)])
    return SampledField(np.column_stack([x, y]), vals, grads, None)


def _arc_trace_field(spec: ProblemSpec, n: int = 120) -> list[SampledField]:
    R = spec.domain.radius
    w = spec.domain.wedge
    out = []
    for lo, hi in ((0.0, w.theta_plus), (w.theta_minus, 0.0)):
        th = np.linspace(lo + 1e-9, hi - 1e-9, n)
        x, y = R * np.cos(th), R * np.sin(th)
        vals = spec.phi_at(x, y)
        dtang = np.gradient(vals, R * th)
        grads = np.column_stack([dtang, np.zeros_like(dtang)])
        out.append(SampledField(np.column_stack([x, y]), vals, grads, None))
    return out


def _trace_norm(field: SampledField, alpha: float, seed: int = 0) -> float:
    return plain_norm(field, k=1, alpha=alpha, seed=seed)


def estimate_ratio_corner(
    fs: FemSolution,
    spec: ProblemSpec,
    beta: float,
    alpha: float,
    inner_fraction: float = 0.5,
    seed: int = 0,
    pair_budget: int | None = None,
) -> EstimateRatio:
    """Measured corner-estimate ratio on nested sectors W_(fR) in W_R.

    lhs: max over sides of the edge-weighted ||u||_{1,alpha} with weight
    exponent tau = -beta on the inner sector; rhs: sup|u| + the wall trace
    norms of phi + sup|h| + the Holder norms of g over the full sector.
    """
    fld = solution_field(fs)
    R = spec.domain.radius
    rho = np.hypot(fld.points[:, 0], fld.points[:, 1])
    inner = fld.restrict(rho <= inner_fraction * R)
    if inner.n < 4:
        raise FitError("too few samples in the inner sector; refine the mesh")
    params = NormParams(k=1, alpha=alpha, tau=-beta)
    lhs = 0.0
    for side in (1, -1):
        sub = inner.restrict(inner.regions == side)
        if sub.n >= 2:
            lhs = max(lhs, weighted_norm(sub, params, pair_budget=pair_budget, seed=seed).total)

    sup_u = float(np.abs(fld.values).max())
    sup_h = float(np.abs(spec.h_at(fld.points[:, 0], fld.points[:, 1])).max())
    phi_norm = max(
        _trace_norm(_wall_trace_field(spec, spec.domain.wedge.theta_plus), alpha, seed),
        _trace_norm(_wall_trace_field(spec, spec.domain.wedge.theta_minus), alpha, seed),
    )
    g_norm = 0.0
    for gf in _data_norm_fields(spec, fld.points, fld.regions):
        g_norm = max(g_norm, _holder0_norm(gf, alpha, seed))
    rhs = sup_u + phi_norm + sup_h + g_norm
    desc = f"corner sectors {inner_fraction:.2g}R in R, beta={beta:.3g}"
    if rhs <= DEGENERATE_RHS:
        return EstimateRatio(lhs, rhs, "corner", desc, status="degenerate")
    return EstimateRatio(lhs, rhs, "corner", desc)


def estimate_ratio_global(
    fs: FemSolution,
    spec: ProblemSpec,
    beta: float,
    alpha: float,
    seed: int = 0,
    pair_budget: int | None = None,
) -> EstimateRatio:
    """Global-estimate ratio: weighted norm over the whole sector against
    the data-only aggregate (trace, h, and g norms; no solution term)."""
    fld = solution_field(fs)
    params = NormParams(k=1, alpha=alpha, tau=-beta)
    lhs = 0.0
    for side in (1, -1):
        sub = fld.restrict(fld.regions == side)
        if sub.n >= 2:
            lhs = max(lhs, weighted_norm(sub, params, pair_budget=pair_budget, seed=seed).total)
    sup_h = float(np.abs(spec.h_at(fld.points[:, 0], fld.points[:, 1])).max())
    phi_norm = max(
        [_trace_norm(_wall_trace_field(spec, spec.domain.wedge.theta_plus), alpha, seed)]
        + [_trace_norm(_wall_trace_field(spec, spec.domain.wedge.theta_minus), alpha, seed)]
        + [_trace_norm(f, alpha, seed) for f in _arc_trace_field(spec)]
    )
    g_norm = 0.0
    for gf in _data_norm_fields(spec, fld.points, fld.regions):
        g_norm = max(g_norm, _holder0_norm(gf, alpha, seed))
    rhs = phi_norm + sup_h + g_norm
    if rhs <= DEGENERATE_RHS:
        return EstimateRatio(lhs, rhs, "global", "full sector", status="degenerate")
    return EstimateRatio(lhs, rhs, "global", "full sector")


def write_ratio_csv(path, rows) -> None:
    """Ratio table: columns instance,h,lhs,rhs,ratio.

    ``rows`` holds (instance, h, EstimateRatio) triples; degenerate ratios
    are written as the status word, never as a number.
    """
    import csv

    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["instance", "h", "lhs", "rhs", "ratio"])
        for instance, h, ratio in rows:
            writer.writerow(
                [
                    instance,
                    f"{h:.17g}",
                    f"{ratio.lhs:.17g}",
                    f"{ratio.rhs:.17g}",
                    f"{ratio.ratio:.17g}" if ratio.status == "ok" else ratio.status,
                ]
            )


def calibrate_barrier(
    v,
    alpha: float,
    tau0: float,
    wedge,
    boundary_points: np.ndarray,
) -> Barrier:
    """Barrier whose amplitude is the max of |v| / w_unit over boundary samples."""
    unit = Barrier(amplitude=1.0, alpha=alpha, tau0=tau0, wedge=wedge)
    pts = np.asarray(boundary_points, dtype=float)
    w_unit = barrier_eval_xy(unit, pts[:, 0], pts[:, 1])
    if np.any(w_unit <= 0.0):
        raise BoundaryHypothesisError("unit barrier vanishes at a boundary sample")
    ratio = np.abs(np.asarray(v(pts[:, 0], pts[:, 1]), dtype=float)) / w_unit
    amp = max(float(ratio.max()), 1e-300)
    return Barrier(amplitude=amp, alpha=alpha, tau0=tau0, wedge=wedge)


def comparison_check(
    v,
    barrier: Barrier,
    boundary_points: np.ndarray,
    interior_points: np.ndarray,
    interior_slack: float = 1e-8,
    boundary_slack: float = 1e-12,
) -> ComparisonReport:
    """Verify |v| <= w on the boundary, then check it on interior samples.

    A boundary violation raises ``BoundaryHypothesisError`` (the interior
    conclusion would be vacuous); the interior check passes when
    |v| <= w * (1 + interior_slack) everywhere, and the worst ratios are
    reported either way.
    """
    bpts = np.asarray(boundary_points, dtype=float)
    ipts = np.asarray(interior_points, dtype=float)
    wb = barrier_eval_xy(barrier, bpts[:, 0], bpts[:, 1])
    vb = np.abs(np.asarray(v(bpts[:, 0], bpts[:, 1]), dtype=float))
    if np.any(wb <= 0.0):
        raise BoundaryHypothesisError("barrier not positive at a boundary sample")
    rb = vb / wb
    worst_b = float(rb.max())
    if worst_b > 1.0 + boundary_slack:
        raise BoundaryHypothesisError(
            f"|v| <= w fails on the boundary: worst ratio {worst_b:.6g}"
        )
    wi = barrier_eval_xy(barrier, ipts[:, 0], ipts[:, 1])
    vi = np.abs(np.asarray(v(ipts[:, 0], ipts[:, 1]), dtype=float))
    if np.any(wi <= 0.0):
        raise BoundaryHypothesisError("barrier not positive at an interior sample")
    ri = vi / wi
    worst_i = float(ri.max())
    return ComparisonReport(
        passed=bool(worst_i <= 1.0 + interior_slack),
        worst_boundary_ratio=worst_b,
        worst_interior_ratio=worst_i,
        n_boundary=bpts.shape[0],
        n_interior=ipts.shape[0],
    )
