"""Interface-fitted P1 finite elements for  div(a grad u) = h + div g.

The weak form against test functions vanishing on the boundary is

    integral a grad(u) . grad(v) dx = - integral h v dx + integral g . grad(v) dx,

discretized with conforming linear elements.  The coefficient is sampled at
element barycenters, so on an interface-fitted mesh each element sees only
its own side of the jump; loads use 3-point edge-midpoint quadrature.
Dirichlet data is imposed by node elimination (known columns moved to the
right-hand side), which keeps the reduced system symmetric positive
definite for the Jacobi-preconditioned conjugate-gradient solve.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .geometry import DomainSpec, Mesh, generate_mesh
from .norms import SampledField

DEGENERATE_AREA = 1e-14


class AssemblyError(ValueError):
    """Mesh or data unusable for assembly."""


class EllipticityError(ValueError):
    """Sampled coefficient violates the prescribed ellipticity bounds."""


class SolverError(RuntimeError):
    """Conjugate-gradient iteration failed (non-convergence or indefiniteness)."""

    def __init__(self, message, history=None):
        super().__init__(message)
        self.history = history if history is not None else []


def _as_matrix_fn(a):
    """Wrap a scalar, 2x2 array, or callable into pts -> (m, 2, 2)."""
    if callable(a):

        def fn(x, y):
            out = np.asarray(a(x, y), dtype=float)
            x = np.asarray(x, dtype=float)
            if out.shape == x.shape:  # scalar field -> isotropic matrix
                eye = np.eye(2)
                return out[..., None, None] * eye
            return out

        return fn
    arr = np.asarray(a, dtype=float)
    if arr.ndim == 0:
        mat = float(arr) * np.eye(2)
    elif arr.shape == (2, 2):
        mat = arr
    else:
        raise AssemblyError("coefficient must be a scalar, a 2x2 matrix, or a callable")

    def const_fn(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(mat, x.shape + (2, 2))

    return const_fn


def _as_vector_fn(g):
    if g is None:
        def zero(x, y):
            x = np.asarray(x, dtype=float)
            return np.zeros(x.shape + (2,))

        return zero
    if callable(g):
        def fn(x, y):
            return np.asarray(g(x, y), dtype=float)

        return fn
    arr = np.asarray(g, dtype=float).reshape(2)

    def const_fn(x, y):
        x = np.asarray(x, dtype=float)
        return np.broadcast_to(arr, x.shape + (2,))

    return const_fn


def _as_scalar_fn(h):
    if h is None:
        def zero(x, y):
            return np.zeros_like(np.asarray(x, dtype=float))

        return zero
    if callable(h):
        def fn(x, y):
            return np.asarray(h(x, y), dtype=float)

        return fn
    val = float(h)

    def const_fn(x, y):
        return np.full_like(np.asarray(x, dtype=float), val)

    return const_fn


@dataclass
class PiecewiseCoefficient:
    """Symmetric 2x2 coefficient field, one branch per side of theta = 0."""

    a_plus: object
    a_minus: object
    lam: float = 0.0
    Lam: float = math.inf

    def __post_init__(self):
        self._fn_plus = _as_matrix_fn(self.a_plus)
        self._fn_minus = _as_matrix_fn(self.a_minus)

    def evaluate(self, x, y, side):
        """Coefficient matrices at points, side = +1/-1 per point."""
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        side = np.broadcast_to(np.asarray(side), x.shape)
        out = np.empty(x.shape + (2, 2))
        up = side > 0
        if np.any(up):
            out[up] = self._fn_plus(x[up], y[up])
        if np.any(~up):
            out[~up] = self._fn_minus(x[~up], y[~up])
        return out


def coefficient_jump(a0: float, lam: float | None = None, Lam: float | None = None) -> PiecewiseCoefficient:
    """Piecewise-constant isotropic coefficient: a0 above the interface, 1 below."""
    if not a0 > 0.0:
        raise EllipticityError(f"jump value must be positive, got {a0}")
    return PiecewiseCoefficient(
        a_plus=a0,
        a_minus=1.0,
        lam=min(a0, 1.0) if lam is None else lam,
        Lam=max(a0, 1.0) if Lam is None else Lam,
    )


def validate_ellipticity(coeff: PiecewiseCoefficient, x, y, side, slack: float = 1e-10) -> None:
    """Check lam |xi|^2 <= xi . a xi <= Lam |xi|^2 on sample points and directions."""
    mats = coeff.evaluate(x, y, side)
    if not np.allclose(mats, np.swapaxes(mats, -1, -2), atol=1e-12):
        raise EllipticityError("coefficient matrices must be symmetric")
    angles = np.linspace(0.0, math.pi, 8, endpoint=False)
    xi = np.column_stack([np.cos(angles), np.sin(angles)])
    quad = np.einsum("id,mde,ie->mi", xi, mats, xi)
    if coeff.lam > 0.0 and np.any(quad < coeff.lam - slack):
        raise EllipticityError(
            f"coefficient dips below lambda = {coeff.lam}: min quad {quad.min():.6g}"
        )
    if math.isfinite(coeff.Lam) and np.any(quad > coeff.Lam + slack):
        raise EllipticityError(
            f"coefficient exceeds Lambda = {coeff.Lam}: max quad {quad.max():.6g}"
        )


@dataclass
class ProblemSpec:
    """Dirichlet problem data on a sector domain.

    ``g_plus``/``g_minus`` are the vector field branches per side, ``h`` the
    scalar right-hand side, ``phi`` the boundary data (continuous on the
    closed boundary).  ``phi_grad`` is optional and only used by norm
    estimators that need tangential derivatives of the trace.
    """

    domain: DomainSpec
    coeff: PiecewiseCoefficient
    phi: object
    g_plus: object = None
    g_minus: object = None
    h: object = None
    phi_grad: object = None

    def __post_init__(self):
        self._phi = _as_scalar_fn(self.phi)
        self._g_plus = _as_vector_fn(self.g_plus)
        self._g_minus = _as_vector_fn(self.g_minus)
        self._h = _as_scalar_fn(self.h)

    def phi_at(self, x, y):
        return self._phi(x, y)

    def h_at(self, x, y):
        return self._h(x, y)

    def g_at(self, x, y, side):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        side = np.broadcast_to(np.asarray(side), x.shape)
        out = np.empty(x.shape + (2,))
        up = side > 0
        if np.any(up):
            out[up] = self._g_plus(x[up], y[up])
        if np.any(~up):
            out[~up] = self._g_minus(x[~up], y[~up])
        return out


@dataclass
class SparseSystem:
    """Assembled symmetric system with Dirichlet constraints attached."""

    matrix: sp.csr_matrix
    rhs: np.ndarray
    constrained: np.ndarray  # vertex indices
    values: np.ndarray  # prescribed values at constrained vertices

    @property
    def n(self) -> int:
        return self.rhs.shape[0]

    @property
    def n_free(self) -> int:
        return self.n - self.constrained.shape[0]


@dataclass
class CgDiagnostics:
    iterations: int
    final_residual: float
    history: np.ndarray
    n_unknowns: int
    converged: bool


@dataclass
class FemSolution:
    mesh: Mesh
    values: np.ndarray  # (nv,)
    element_gradients: np.ndarray  # (nt, 2)
    diagnostics: CgDiagnostics


def element_basis_gradients(vertices: np.ndarray, triangles: np.ndarray):
    """Per-element constant gradients of the three barycentric basis functions.

    Returns (areas, grads) with grads of shape (m, 3, 2).
    """
    pts = vertices[triangles]
    e1 = pts[:, 1] - pts[:, 0]
    e2 = pts[:, 2] - pts[:, 0]
    det = e1[:, 0] * e2[:, 1] - e1[:, 1] * e2[:, 0]  # 2 * signed area
    g0 = np.stack([pts[:, 1, 1] - pts[:, 2, 1], pts[:, 2, 0] - pts[:, 1, 0]], axis=1)
    g1 = np.stack([pts[:, 2, 1] - pts[:, 0, 1], pts[:, 0, 0] - pts[:, 2, 0]], axis=1)
    g2 = np.stack([pts[:, 0, 1] - pts[:, 1, 1], pts[:, 1, 0] - pts[:, 0, 0]], axis=1)
    grads = np.stack([g0, g1, g2], axis=1) / det[:, None, None]
    return 0.5 * det, grads


def assemble(mesh: Mesh, spec: ProblemSpec) -> SparseSystem:
    """Element-wise stiffness and load assembly.

    The coefficient and the vector load g use the element's own side of the
    interface (no cross-interface averaging); h and g are integrated with
    3-point edge-midpoint quadrature, exact for quadratics.
    """
    areas, grads = element_basis_gradients(mesh.vertices, mesh.triangles)
    if np.any(areas <= DEGENERATE_AREA):
        raise AssemblyError(
            f"degenerate element: min area {areas.min():.3g} <= {DEGENERATE_AREA}"
        )
    bary = mesh.barycenters()
    side = mesh.region.astype(int)
    validate_ellipticity(spec.coeff, bary[:, 0], bary[:, 1], side)
    amat = spec.coeff.evaluate(bary[:, 0], bary[:, 1], side)

    ke = np.einsum("mid,mde,mje,m->mij", grads, amat, grads, areas)

    tri = mesh.triangles
    rows = np.repeat(tri, 3, axis=1).ravel()
    cols = np.tile(tri, (1, 3)).ravel()
    matrix = sp.coo_matrix(
        (ke.ravel(), (rows, cols)), shape=(mesh.n_vertices, mesh.n_vertices)
    ).tocsr()

    # midpoints of edges (01, 12, 20); basis i is 1/2 on its two adjacent midpoints
    pts = mesh.vertices[tri]
    mids = 0.5 * (pts + pts[:, [1, 2, 0]])
    hx = spec.h_at(mids[..., 0], mids[..., 1])  # (m, 3)
    # vertex 0 touches midpoints 01 and 20 (indices 0 and 2), etc.
    adj = np.array([[0, 2], [1, 0], [2, 1]])
    load_h = -(areas[:, None] / 3.0) * 0.5 * (hx[:, adj[:, 0]] + hx[:, adj[:, 1]])

    gx = spec.g_at(
        mids[..., 0].ravel(), mids[..., 1].ravel(), np.repeat(side, 3)
    ).reshape(mids.shape)
    gbar = gx.mean(axis=1)  # (m, 2)
    load_g = areas[:, None] * np.einsum("mid,md->mi", grads, gbar)

    rhs = np.zeros(mesh.n_vertices)
    np.add.at(rhs, tri.ravel(), (load_h + load_g).ravel())

    constrained = np.flatnonzero(mesh.boundary)
    values = spec.phi_at(
        mesh.vertices[constrained, 0], mesh.vertices[constrained, 1]
    )
    return SparseSystem(matrix=matrix, rhs=rhs, constrained=constrained, values=values)


def solve_cg(
    system: SparseSystem,
    tol: float = 1e-10,
    max_iter: int | None = None,
    callback=None,
) -> tuple[np.ndarray, CgDiagnostics]:
    """Jacobi-preconditioned conjugate gradients on the constrained system.

    Eliminates Dirichlet nodes symmetrically, iterates until the relative
    residual drops below ``tol``, and records the residual history.  Raises
    ``SolverError`` on stagnation past ``max_iter`` (default 20 sqrt(n)) or
    on loss of positive definiteness.
    """
    if not (0.0 < tol < 1.0):
        raise ValueError(f"relative tolerance must lie in (0, 1), got {tol}")
    n = system.n
    free = np.ones(n, dtype=bool)
    free[system.constrained] = False
    free_idx = np.flatnonzero(free)
    A = system.matrix
    Aff = A[free_idx][:, free_idx].tocsr()
    bf = system.rhs[free_idx]
    if system.constrained.size:
        bf = bf - A[free_idx][:, system.constrained] @ system.values

    m = free_idx.size
    if max_iter is None:
        max_iter = max(64, int(20.0 * math.sqrt(max(m, 1))))

    x = np.zeros(m)
    bnorm = float(np.linalg.norm(bf))
    history: list[float] = []
    if bnorm == 0.0:
        diag = CgDiagnostics(0, 0.0, np.zeros(0), m, True)
        return _expand(system, x, free_idx), diag

    diag_entries = Aff.diagonal()
    if np.any(diag_entries <= 0.0):
        raise SolverError("reduced matrix has nonpositive diagonal entries")
    minv = 1.0 / diag_entries

    r = bf.copy()
    z = minv * r
    p = z.copy()
    rz = float(r @ z)
    converged = False
    it = 0
    while it < max_iter:
        it += 1
        Ap = Aff @ p
        pAp = float(p @ Ap)
        if pAp <= 0.0:
            raise SolverError(
                f"direction of nonpositive curvature at iteration {it}", history
            )
        step = rz / pAp
        x += step * p
        r -= step * Ap
        res = float(np.linalg.norm(r)) / bnorm
        history.append(res)
        if callback is not None:
            callback(x.copy())
        if res <= tol:
            converged = True
            break
        z = minv * r
        rz_new = float(r @ z)
        p = z + (rz_new / rz) * p
        rz = rz_new
    if not converged:
        raise SolverError(
            f"CG did not reach tol {tol} in {max_iter} iterations "
            f"(residual {history[-1]:.3g})",
            history,
        )
    diagn = CgDiagnostics(it, history[-1], np.asarray(history), m, True)
    return _expand(system, x, free_idx), diagn


def _expand(system: SparseSystem, x_free: np.ndarray, free_idx: np.ndarray) -> np.ndarray:
    u = np.zeros(system.n)
    u[free_idx] = x_free
    u[system.constrained] = system.values
    return u


def element_gradients(mesh: Mesh, values: np.ndarray) -> np.ndarray:
    _, grads = element_basis_gradients(mesh.vertices, mesh.triangles)
    return np.einsum("mid,mi->md", grads, values[mesh.triangles])


def solve_on_mesh(
    spec: ProblemSpec,
    mesh: Mesh,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> FemSolution:
    system = assemble(mesh, spec)
    u, diag = solve_cg(system, tol=tol, max_iter=max_iter)
    return FemSolution(
        mesh=mesh,
        values=u,
        element_gradients=element_gradients(mesh, u),
        diagnostics=diag,
    )


def solve_problem(
    spec: ProblemSpec,
    h: float,
    mu: float = 1.0,
    tol: float = 1e-10,
    max_iter: int | None = None,
) -> FemSolution:
    """generate_mesh -> assemble -> Dirichlet elimination -> CG -> gradients."""
    mesh = generate_mesh(spec.domain, h, mu)
    return solve_on_mesh(spec, mesh, tol=tol, max_iter=max_iter)


def solution_field(fs: FemSolution) -> SampledField:
    """Barycenter samples with per-element gradients, tagged by side."""
    bary = fs.mesh.barycenters()
    vals = fs.values[fs.mesh.triangles].mean(axis=1)
    return SampledField(
        points=bary,
        values=vals,
        gradients=fs.element_gradients,
        regions=fs.mesh.region.astype(np.int8),
    )


@dataclass
class ErrorReport:
    l2: float
    broken_h1: float | None
    linf: float


def error_report(fs: FemSolution, exact, exact_grad=None) -> ErrorReport:
    """Quadrature errors against a reference solution.

    ``exact(x, y)`` is evaluated at edge midpoints and vertices (never at
    element interiors, so a corner singularity is touched only at r = 0
    where the value itself is finite); ``exact_grad(x, y, side)`` uses the
    element's side of the interface, making the H1 error a broken norm.
    """
    mesh = fs.mesh
    tri = mesh.triangles
    pts = mesh.vertices[tri]
    mids = 0.5 * (pts + pts[:, [1, 2, 0]])
    areas = mesh.areas()

    uh_v = fs.values[tri]
    uh_mid = 0.5 * (uh_v + uh_v[:, [1, 2, 0]])
    ue_mid = exact(mids[..., 0].ravel(), mids[..., 1].ravel()).reshape(uh_mid.shape)
    diff2 = (uh_mid - ue_mid) ** 2
    l2 = math.sqrt(float((areas / 3.0 * diff2.sum(axis=1)).sum()))

    broken = None
    if exact_grad is not None:
        side = np.repeat(mesh.region.astype(int), 3)
        gx, gy = exact_grad(mids[..., 0].ravel(), mids[..., 1].ravel(), side)
        ge = np.stack([gx, gy], axis=-1).reshape(mids.shape)
        gh = fs.element_gradients[:, None, :]
        gd2 = ((gh - ge) ** 2).sum(axis=2)
        broken = math.sqrt(float((areas / 3.0 * gd2.sum(axis=1)).sum()))

    ue_vert = exact(mesh.vertices[:, 0], mesh.vertices[:, 1])
    linf = float(
        max(np.abs(fs.values - ue_vert).max(), np.abs(uh_mid - ue_mid).max())
    )
    return ErrorReport(l2=l2, broken_h1=broken, linf=linf)


def fit_rate(hs, errs) -> float:
    """Least-squares slope of log(err) against log(h)."""
    hs = np.asarray(hs, dtype=float)
    errs = np.asarray(errs, dtype=float)
    if np.any(errs <= 0.0) or np.any(hs <= 0.0):
        raise ValueError("rates require positive mesh sizes and errors")
    slope, _ = np.polyfit(np.log(hs), np.log(errs), 1)
    return float(slope)
