"""Planar sector domains split by a straight interface ray.

The domain is the sector ``theta_minus < theta < theta_plus`` of radius R
about a corner at the origin.  The ray ``theta = 0`` divides it into an
upper subdomain (tagged ``+1``) and a lower one (tagged ``-1``); the corner
is the single edge point where interface and boundary meet.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

_TWO_PI = 2.0 * math.pi


class GeometryError(ValueError):
    """Malformed wedge, sector, or meshing request."""


@dataclass(frozen=True)
class Wedge:
    """Open sector ``theta_minus < theta < theta_plus`` about the origin."""

    theta_minus: float
    theta_plus: float

    def __post_init__(self):
        if not (self.theta_minus < 0.0 < self.theta_plus):
            raise GeometryError(
                "wedge requires theta_minus < 0 < theta_plus, got "
                f"({self.theta_minus}, {self.theta_plus})"
            )
        if not (self.theta_plus - self.theta_minus < _TWO_PI):
            raise GeometryError("wedge opening must be strictly less than 2*pi")

    @property
    def opening(self) -> float:
        return self.theta_plus - self.theta_minus


def make_wedge(theta_minus: float, theta_plus: float) -> Wedge:
    """Validated wedge constructor."""
    return Wedge(float(theta_minus), float(theta_plus))


@dataclass(frozen=True)
class DomainSpec:
    """Bounded sector: wedge cut to radius ``radius``, corner at the origin."""

    wedge: Wedge
    radius: float = 1.0

    def __post_init__(self):
        if not self.radius > 0.0:
            raise GeometryError(f"sector radius must be positive, got {self.radius}")

    @property
    def edge_point(self) -> tuple[float, float]:
        return (0.0, 0.0)


def sector(theta_minus: float, theta_plus: float, radius: float = 1.0) -> DomainSpec:
    return DomainSpec(make_wedge(theta_minus, theta_plus), float(radius))


@dataclass(frozen=True)
class PolarPoint:
    r: float
    theta: float

    def __post_init__(self):
        if self.r < 0.0:
            raise GeometryError(f"polar radius must be nonnegative, got {self.r}")


class Region(str, enum.Enum):
    OMEGA_PLUS = "omega_plus"
    OMEGA_MINUS = "omega_minus"
    INTERFACE = "interface"
    WALL = "wall"
    EDGE = "edge"
    OUTSIDE = "outside"


def to_polar(p) -> PolarPoint:
    """Cartesian -> polar; at the origin the angle is 0 by convention."""
    x, y = float(p[0]), float(p[1])
    r = math.hypot(x, y)
    theta = 0.0 if r == 0.0 else math.atan2(y, x)
    return PolarPoint(r, theta)


def from_polar(pp: PolarPoint) -> tuple[float, float]:
    return (pp.r * math.cos(pp.theta), pp.r * math.sin(pp.theta))


def wedge_angle(w: Wedge, x: float, y: float) -> float:
    """Angle of (x, y) mapped into the branch closest to [theta_minus, theta_plus].

    atan2 returns values in (-pi, pi]; wedges may extend beyond pi, so shift
    by 2*pi when that lands the angle inside (or closer to) the wedge range.
    """
    theta = math.atan2(y, x) if (x != 0.0 or y != 0.0) else 0.0
    best = theta
    for cand in (theta - _TWO_PI, theta + _TWO_PI):
        if _interval_dist(cand, w.theta_minus, w.theta_plus) < _interval_dist(
            best, w.theta_minus, w.theta_plus
        ):
            best = cand
    return best


def _interval_dist(t: float, lo: float, hi: float) -> float:
    if t < lo:
        return lo - t
    if t > hi:
        return t - hi
    return 0.0


def _ray_segment_dist(x: float, y: float, angle: float, length: float) -> float:
    """Distance from (x, y) to the segment {t*(cos a, sin a): 0 <= t <= length}."""
    c, s = math.cos(angle), math.sin(angle)
    t = min(max(x * c + y * s, 0.0), length)
    return math.hypot(x - t * c, y - t * s)


def classify_point(d: DomainSpec, p, tol: float | None = None) -> Region:
    """Classify a point against the sector: subdomains, interface, wall, edge.

    ``tol`` is a length; points within ``tol`` of the corner are Edge, within
    ``tol`` of the interface segment (0 < r < R on theta = 0) are Interface,
    within ``tol`` of a wall ray or the outer arc are Wall.
    """
    R = d.radius
    tol = 1e-12 * R if tol is None else float(tol)
    if tol < 0.0:
        raise GeometryError("classification tolerance must be nonnegative")
    x, y = float(p[0]), float(p[1])
    r = math.hypot(x, y)
    if r <= tol:
        return Region.EDGE
    w = d.wedge
    theta = wedge_angle(w, x, y)
    inside_ang = w.theta_minus <= theta <= w.theta_plus

    d_wall_plus = _ray_segment_dist(x, y, w.theta_plus, R)
    d_wall_minus = _ray_segment_dist(x, y, w.theta_minus, R)
    on_arc = abs(r - R) <= tol and inside_ang
    if d_wall_plus <= tol or d_wall_minus <= tol or on_arc:
        return Region.WALL
    if _ray_segment_dist(x, y, 0.0, R) <= tol and r < R:
        return Region.INTERFACE
    if not inside_ang or r > R:
        return Region.OUTSIDE
    return Region.OMEGA_PLUS if theta > 0.0 else Region.OMEGA_MINUS


def delta_dist(p, edge_point=(0.0, 0.0)) -> float:
    """Distance to the edge point, capped at 1."""
    return min(math.hypot(p[0] - edge_point[0], p[1] - edge_point[1]), 1.0)


def delta_dist_arr(points: np.ndarray, edge_point=(0.0, 0.0)) -> np.ndarray:
    """Vectorized ``delta_dist`` over an (n, 2) array."""
    pts = np.asarray(points, dtype=float)
    d = np.hypot(pts[:, 0] - edge_point[0], pts[:, 1] - edge_point[1])
    return np.minimum(d, 1.0)


# ---------------------------------------------------------------------------
# meshes


@dataclass
class Mesh:
    """Conforming triangulation of the sector, fitted to the interface ray.

    ``region`` is +1 for triangles in the upper subdomain, -1 below;
    ``interface_edges`` lists vertex pairs of mesh edges on theta = 0;
    ``boundary`` flags vertices on the domain boundary.
    """

    vertices: np.ndarray  # (nv, 2) float64
    triangles: np.ndarray  # (nt, 3) int, positively oriented
    region: np.ndarray  # (nt,) int8, +1 / -1
    interface_edges: np.ndarray  # (ne, 2) int
    boundary: np.ndarray  # (nv,) bool
    grading_mu: float = 1.0

    @property
    def n_vertices(self) -> int:
        return self.vertices.shape[0]

    @property
    def n_triangles(self) -> int:
        return self.triangles.shape[0]

    def areas(self) -> np.ndarray:
        return triangle_areas(self.vertices, self.triangles)

    def barycenters(self) -> np.ndarray:
        return self.vertices[self.triangles].mean(axis=1)


def triangle_areas(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    pts = vertices[triangles]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    return 0.5 * (e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0])


def _edge_counts(triangles: np.ndarray) -> dict[tuple[int, int], int]:
    counts: dict[tuple[int, int], int] = {}
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            key = (u, v) if u < v else (v, u)
            counts[key] = counts.get(key, 0) + 1
    return counts


def boundary_edges(mesh: Mesh) -> list[tuple[int, int]]:
    return [e for e, n in _edge_counts(mesh.triangles).items() if n == 1]


def validate_mesh(mesh: Mesh, domain: DomainSpec | None = None) -> None:
    """Check orientation, conformity, interface fit, and tag consistency."""
    areas = mesh.areas()
    if not np.all(areas > 0.0):
        raise GeometryError("mesh contains non-positively-oriented or degenerate triangles")

    counts = _edge_counts(mesh.triangles)
    bad = [e for e, n in counts.items() if n > 2]
    if bad:
        raise GeometryError(f"non-conforming mesh: edges shared by >2 triangles: {bad[:5]}")
    for (u, v), n in counts.items():
        if n == 1 and not (mesh.boundary[u] and mesh.boundary[v]):
            raise GeometryError(f"boundary edge ({u},{v}) has unflagged endpoint")

    # interface fit: no triangle straddles theta = 0 (the positive x-axis)
    scale = float(np.max(np.abs(mesh.vertices))) or 1.0
    eps = 1e-12 * scale
    y = mesh.vertices[:, 1][mesh.triangles]
    x = mesh.vertices[:, 0][mesh.triangles]
    crosses_axis = np.any(y > eps, axis=1) & np.any(y < -eps, axis=1)
    straddles = crosses_axis & np.any(x > eps, axis=1)
    if np.any(straddles):
        raise GeometryError(f"{int(straddles.sum())} triangles straddle the interface")

    bary = mesh.barycenters()
    sign = np.where(bary[:, 1] >= 0.0, 1, -1)
    # reflex wedges put part of the upper subdomain below the x-axis; compare
    # by angle instead of raw y-sign when a domain is supplied
    if domain is not None:
        ang = np.array(
            [wedge_angle(domain.wedge, bx, by) for bx, by in bary], dtype=float
        )
        sign = np.where(ang >= 0.0, 1, -1)
    if not np.array_equal(sign.astype(np.int8), mesh.region):
        raise GeometryError("region tags disagree with barycenter side")


def max_interior_angle(mesh: Mesh) -> float:
    """Largest interior angle over all triangles, in radians."""
    pts = mesh.vertices[mesh.triangles]
    worst = 0.0
    for i in range(3):
        a = pts[:, i]
        b = pts[:, (i + 1) % 3]
        c = pts[:, (i + 2) % 3]
        u = b - a
        v = c - a
        cosang = (u * v).sum(axis=1) / (
            np.linalg.norm(u, axis=1) * np.linalg.norm(v, axis=1)
        )
        worst = max(worst, float(np.arccos(np.clip(cosang, -1.0, 1.0)).max()))
    return worst


def generate_mesh(domain: DomainSpec, h: float, mu: float = 1.0) -> Mesh:
    """Polar tensor mesh with radial grading toward the corner.

    Radial node layers sit at ``r_i = R * (i/N)^(1/mu)`` (mu = 1 is
    quasi-uniform); the rays theta = theta_minus, 0, theta_plus are mesh
    lines, so no triangle straddles the interface.  The outer arc is
    approximated by chords of length <= h.
    """
    R = domain.radius
    w = domain.wedge
    if not (0.0 < h < R):
        raise GeometryError(f"target edge length must satisfy 0 < h < R, got {h}")
    if not (0.0 < mu <= 1.0):
        raise GeometryError(f"grading exponent must lie in (0, 1], got {mu}")
    n_layers = math.ceil(R / h)
    if n_layers < 2:
        raise GeometryError("h too coarse to resolve the sector (fewer than 2 layers)")
    n_minus = max(1, math.ceil(-w.theta_minus * R / h))
    n_plus = max(1, math.ceil(w.theta_plus * R / h))
    thetas = np.concatenate(
        [
            np.linspace(w.theta_minus, 0.0, n_minus + 1)[:-1],
            np.linspace(0.0, w.theta_plus, n_plus + 1),
        ]
    )
    iface_col = n_minus
    n_rays = thetas.size

    layers = R * (np.arange(1, n_layers + 1) / n_layers) ** (1.0 / mu)
    rr = np.repeat(layers, n_rays)
    tt = np.tile(thetas, n_layers)
    ring = np.column_stack([rr * np.cos(tt), rr * np.sin(tt)])
    vertices = np.vstack([[0.0, 0.0], ring])

    def vid(i: int, j: int) -> int:  # layer i >= 1, ray j
        return 1 + (i - 1) * n_rays + j

    tris: list[tuple[int, int, int]] = []
    tags: list[int] = []
    for j in range(n_rays - 1):
        tris.append((0, vid(1, j), vid(1, j + 1)))
        tags.append(1 if j >= iface_col else -1)
    for i in range(1, n_layers):
        for j in range(n_rays - 1):
            a, b = vid(i, j), vid(i, j + 1)
            c, dd = vid(i + 1, j), vid(i + 1, j + 1)
            tris.append((a, c, dd))
            tris.append((a, dd, b))
            tag = 1 if j >= iface_col else -1
            tags.extend((tag, tag))

    boundary = np.zeros(vertices.shape[0], dtype=bool)
    boundary[0] = True
    for i in range(1, n_layers + 1):
        boundary[vid(i, 0)] = True
        boundary[vid(i, n_rays - 1)] = True
    for j in range(n_rays):
        boundary[vid(n_layers, j)] = True

    iface = [(0, vid(1, iface_col))]
    iface.extend(
        (vid(i, iface_col), vid(i + 1, iface_col)) for i in range(1, n_layers)
    )

    mesh = Mesh(
        vertices=vertices,
        triangles=np.asarray(tris, dtype=np.int64),
        region=np.asarray(tags, dtype=np.int8),
        interface_edges=np.asarray(iface, dtype=np.int64),
        boundary=boundary,
        grading_mu=float(mu),
    )
    validate_mesh(mesh, domain)
    return mesh


def _interface_edges_from_scratch(vertices: np.ndarray, triangles: np.ndarray) -> np.ndarray:
    scale = float(np.max(np.abs(vertices))) or 1.0
    eps = 1e-12 * scale
    on_ray = (np.abs(vertices[:, 1]) <= eps) & (vertices[:, 0] >= -eps)
    edges = set()
    for a, b, c in triangles:
        for u, v in ((a, b), (b, c), (c, a)):
            if on_ray[u] and on_ray[v]:
                edges.add((u, v) if u < v else (v, u))
    if not edges:
        return np.zeros((0, 2), dtype=np.int64)
    arr = np.asarray(sorted(edges), dtype=np.int64)
    return arr


def refine_regular(mesh: Mesh) -> Mesh:
    """Split every triangle into four congruent children via edge midpoints."""
    verts = [mesh.vertices]
    midpoint: dict[tuple[int, int], int] = {}
    next_id = mesh.n_vertices
    new_pts: list[np.ndarray] = []

    def mid(u: int, v: int) -> int:
        nonlocal next_id
        key = (u, v) if u < v else (v, u)
        idx = midpoint.get(key)
        if idx is None:
            idx = next_id
            midpoint[key] = idx
            new_pts.append(0.5 * (mesh.vertices[u] + mesh.vertices[v]))
            next_id += 1
        return idx

    tris: list[tuple[int, int, int]] = []
    tags: list[int] = []
    for (a, b, c), tag in zip(mesh.triangles, mesh.region):
        mab, mbc, mca = mid(a, b), mid(b, c), mid(c, a)
        tris.extend([(a, mab, mca), (mab, b, mbc), (mca, mbc, c), (mab, mbc, mca)])
        tags.extend([tag] * 4)

    vertices = np.vstack([mesh.vertices] + new_pts) if new_pts else mesh.vertices
    boundary = np.zeros(vertices.shape[0], dtype=bool)
    boundary[: mesh.n_vertices] = mesh.boundary
    bedges = set(boundary_edges(mesh))
    for (u, v), idx in midpoint.items():
        if (u, v) in bedges:
            boundary[idx] = True

    triangles = np.asarray(tris, dtype=np.int64)
    return Mesh(
        vertices=vertices,
        triangles=triangles,
        region=np.asarray(tags, dtype=np.int8),
        interface_edges=_interface_edges_from_scratch(vertices, triangles),
        boundary=boundary,
        grading_mu=mesh.grading_mu,
    )


def generate_nonobtuse_mesh(domain: DomainSpec, levels: int = 3) -> Mesh:
    """Quasi-uniform mesh with no obtuse interior angle.

    Start from a fan of at-most-right-angled sectors about the corner and
    refine regularly; children are congruent to their parents, so the
    non-obtuseness of the coarse fan is preserved exactly.  The boundary is
    the coarse polygon (chords are not re-projected onto the arc).
    """
    if levels < 0:
        raise GeometryError("refinement level count must be nonnegative")
    R = domain.radius
    w = domain.wedge
    n_minus = max(1, math.ceil(-w.theta_minus / (0.5 * math.pi)))
    n_plus = max(1, math.ceil(w.theta_plus / (0.5 * math.pi)))
    thetas = np.concatenate(
        [
            np.linspace(w.theta_minus, 0.0, n_minus + 1)[:-1],
            np.linspace(0.0, w.theta_plus, n_plus + 1),
        ]
    )
    vertices = np.vstack(
        [[0.0, 0.0], np.column_stack([R * np.cos(thetas), R * np.sin(thetas)])]
    )
    tris = [(0, j + 1, j + 2) for j in range(thetas.size - 1)]
    tags = [1 if j >= n_minus else -1 for j in range(thetas.size - 1)]
    boundary = np.ones(vertices.shape[0], dtype=bool)
    triangles = np.asarray(tris, dtype=np.int64)
    mesh = Mesh(
        vertices=vertices,
        triangles=triangles,
        region=np.asarray(tags, dtype=np.int8),
        interface_edges=_interface_edges_from_scratch(vertices, triangles),
        boundary=boundary,
        grading_mu=1.0,
    )
    for _ in range(levels):
        mesh = refine_regular(mesh)
    validate_mesh(mesh, domain)
    return mesh


def export_mesh(mesh: Mesh, path) -> None:
    """Plain-text node/element export.

    Format: header ``vertices N``, then N lines ``x y flag``; header
    ``triangles M``, then M lines ``i j k tag`` with 0-based indices and
    tag in {+, -}.
    """
    lines = [f"vertices {mesh.n_vertices}"]
    for (x, y), flag in zip(mesh.vertices, mesh.boundary):
        lines.append(f"{x:.17g} {y:.17g} {int(flag)}")
    lines.append(f"triangles {mesh.n_triangles}")
    for (a, b, c), tag in zip(mesh.triangles, mesh.region):
        sym = "+" if tag > 0 else "-"
        lines.append(f"{a} {b} {c} {sym}")
    with open(path, "w", encoding="utf-8") as fh:
        fh.write("\n".join(lines) + "\n")
