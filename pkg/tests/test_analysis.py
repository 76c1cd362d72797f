import math

import numpy as np
import pytest

from wedgelab.analysis import (
    BoundaryHypothesisError,
    FitError,
    P1Evaluator,
    calibrate_barrier,
    comparison_check,
    default_fit_radii,
    default_rays,
    estimate_ratio_corner,
    estimate_ratio_global,
    estimate_ratio_interior,
    fit_corner_exponent,
    interface_flux_jump,
)
from wedgelab.exact_solutions import (
    Barrier,
    barrier_eval_xy,
    build_dirichlet_example,
    corrector_solve,
    eval_separable_xy,
    singular_exponent,
)
from wedgelab.fem import (
    CgDiagnostics,
    FemSolution,
    PiecewiseCoefficient,
    ProblemSpec,
    coefficient_jump,
    element_gradients,
    solve_problem,
)
from wedgelab.geometry import generate_mesh, make_wedge, sector

PI = math.pi
STRAIGHT = make_wedge(-PI / 4, 3 * PI / 4)
DOM = sector(-PI / 4, 3 * PI / 4, 1.0)


def interpolant_solution(mesh, fn):
    values = fn(mesh.vertices[:, 0], mesh.vertices[:, 1])
    return FemSolution(
        mesh=mesh,
        values=values,
        element_gradients=element_gradients(mesh, values),
        diagnostics=CgDiagnostics(0, 0.0, np.zeros(0), 0, True),
    )


class TestFitCornerExponent:
    @pytest.mark.parametrize("s", [0.5, 0.8, 1.0, 1.3])
    def test_pure_powers_recovered(self, s):
        def field(x, y):
            return np.hypot(np.asarray(x), np.asarray(y)) ** s

        radii = [2.0**-k for k in range(3, 11)]
        fit = fit_corner_exponent(field, default_rays(STRAIGHT, 16), radii, corner_value=0.0)
        assert fit.beta == pytest.approx(s, abs=1e-6)
        assert fit.r_squared > 0.999999

    def test_linear_field(self):
        def field(x, y):
            return np.asarray(x, dtype=float)

        radii = [2.0**-k for k in range(3, 11)]
        fit = fit_corner_exponent(field, default_rays(STRAIGHT, 16), radii, corner_value=0.0)
        assert fit.beta == pytest.approx(1.0, abs=1e-3)

    def test_separable_example_exact_samples(self):
        sol, _ = build_dirichlet_example(0.8, STRAIGHT)

        def field(x, y):
            return eval_separable_xy(sol, x, y)

        radii = [2.0**-k for k in range(3, 11)]
        fit = fit_corner_exponent(field, default_rays(STRAIGHT, 24), radii, corner_value=0.0)
        assert fit.beta == pytest.approx(0.8, abs=1e-3)
        assert fit.r_squared > 0.9999
        # per-ray slopes agree away from the walls
        for theta, slope in fit.per_ray.items():
            assert slope == pytest.approx(0.8, abs=5e-3)

    def test_fem_solution_small(self):
        sol, jump = build_dirichlet_example(0.8, STRAIGHT)
        spec = ProblemSpec(
            domain=DOM,
            coeff=coefficient_jump(jump.a0),
            phi=lambda x, y: eval_separable_xy(sol, x, y),
        )
        h = 1 / 64
        fs = solve_problem(spec, h, 0.8)
        radii = np.geomspace(4 * h, 0.7, 8)  # widen past R/4 to span a decade
        fit = fit_corner_exponent(fs, default_rays(STRAIGHT, 24), radii)
        assert fit.beta == pytest.approx(0.8, abs=0.05)

    def test_fem_solution_reflex_wedge(self):
        # reentrant corner: the exponent comes out of the transcendental
        # root, well below the straight-wall value
        dom = sector(-0.25 * PI, 1.2 * PI, 1.0)
        gamma = singular_exponent(3.0, dom.wedge)
        assert gamma < 0.7
        sol, jump = build_dirichlet_example(gamma, dom.wedge)
        spec = ProblemSpec(
            domain=dom,
            coeff=coefficient_jump(jump.a0),
            phi=lambda x, y: eval_separable_xy(sol, x, y),
        )
        h = 1 / 64
        fs = solve_problem(spec, h, 0.7)
        radii = np.geomspace(4 * h, 0.7, 8)
        fit = fit_corner_exponent(fs, default_rays(dom.wedge, 40), radii)
        assert fit.beta == pytest.approx(gamma, abs=0.05)

    def test_too_few_radii(self):
        with pytest.raises(FitError):
            fit_corner_exponent(lambda x, y: np.hypot(x, y), [0.1], [0.1, 0.2, 0.4])

    def test_decade_span_required(self):
        with pytest.raises(FitError):
            fit_corner_exponent(
                lambda x, y: np.hypot(x, y), [0.1], [0.1, 0.2, 0.4, 0.8], corner_value=0.0
            )

    def test_zero_variation_is_error(self):
        with pytest.raises(FitError):
            fit_corner_exponent(
                lambda x, y: np.ones_like(np.asarray(x)),
                [0.1, 0.3],
                [0.01, 0.05, 0.1, 0.2],
                corner_value=1.0,
            )

    def test_default_fit_radii_window(self):
        radii = default_fit_radii(1 / 200.0, 1.0)
        assert radii[0] == pytest.approx(4 / 200.0)
        assert radii[-1] == pytest.approx(0.25)
        with pytest.raises(FitError):
            default_fit_radii(0.2, 1.0)


class TestP1Evaluator:
    def test_reproduces_linear_interpolant(self):
        mesh = generate_mesh(DOM, 0.2, 0.7)
        fs = interpolant_solution(mesh, lambda x, y: 3.0 * x - y)
        ev = P1Evaluator(fs)
        rng = np.random.default_rng(31)
        r = rng.uniform(0.05, 0.9, 60)
        th = rng.uniform(-PI / 4 + 0.05, 3 * PI / 4 - 0.05, 60)
        x, y = r * np.cos(th), r * np.sin(th)
        assert np.allclose(ev(x, y), 3.0 * x - y, atol=1e-10)

    def test_outside_query_rejected(self):
        mesh = generate_mesh(DOM, 0.3)
        fs = interpolant_solution(mesh, lambda x, y: x)
        ev = P1Evaluator(fs)
        with pytest.raises(FitError):
            ev(np.array([1.4]), np.array([1.4]))


class TestInterfaceFluxJump:
    def test_interpolant_jump_decreases(self):
        # per-element gradients of the exact interpolant: conormal mismatch
        # shrinks with the mesh
        sol, jump = build_dirichlet_example(0.8, STRAIGHT)
        coeff = coefficient_jump(jump.a0)
        means = []
        for h in (0.2, 0.1, 0.05):
            mesh = generate_mesh(DOM, h, 1.0)
            fs = interpolant_solution(mesh, lambda x, y: eval_separable_xy(sol, x, y))
            means.append(interface_flux_jump(fs, coeff).mean_jump)
        assert means[2] < means[1] < means[0]

    def test_smooth_case_first_order(self):
        coeff = PiecewiseCoefficient(1.0, 1.0, lam=1.0, Lam=1.0)
        means = []
        hs = (0.2, 0.1, 0.05)
        for h in hs:
            mesh = generate_mesh(DOM, h, 1.0)
            fs = interpolant_solution(
                mesh, lambda x, y: np.sin(np.asarray(x)) * np.cos(np.asarray(y))
            )
            means.append(interface_flux_jump(fs, coeff).mean_jump)
        from wedgelab.fem import fit_rate

        assert 0.7 <= fit_rate(hs, means) <= 1.6

    def test_negative_control_bounded_away_from_zero(self):
        sol, jump = build_dirichlet_example(0.8, STRAIGHT)
        coeff = coefficient_jump(jump.a0)
        spec = ProblemSpec(
            domain=DOM, coeff=coeff, phi=lambda x, y: eval_separable_xy(sol, x, y)
        )
        fs = solve_problem(spec, 0.05, 0.8)
        correct = interface_flux_jump(fs, coeff)
        wrong = interface_flux_jump(fs, coeff, weighting="minus-both")
        assert wrong.mean_jump > 10.0 * correct.mean_jump
        assert wrong.mean_jump > 0.3

    def test_empty_interface(self):
        # a mesh strictly above the axis has no interface edges
        from wedgelab.geometry import Mesh

        mesh = Mesh(
            vertices=np.array([[0.0, 0.1], [1.0, 0.1], [0.0, 1.0]]),
            triangles=np.array([[0, 1, 2]]),
            region=np.array([1], dtype=np.int8),
            interface_edges=np.zeros((0, 2), dtype=np.int64),
            boundary=np.ones(3, dtype=bool),
        )
        fs = interpolant_solution(mesh, lambda x, y: np.asarray(x))
        rep = interface_flux_jump(fs, coefficient_jump(2.0))
        assert rep.max_jump == 0.0 and rep.n_edges == 0


@pytest.fixture(scope="module")
def singular_solve():
    sol, jump = build_dirichlet_example(0.8, STRAIGHT)
    spec = ProblemSpec(
        domain=DOM,
        coeff=coefficient_jump(jump.a0),
        phi=lambda x, y: eval_separable_xy(sol, x, y),
    )
    return spec, solve_problem(spec, 0.05, 0.8)


class TestEstimateRatios:

    def test_interior_ratio_recorded(self, singular_solve):
        spec, fs = singular_solve
        r = estimate_ratio_interior(fs, spec, center=(0.55, 0.0), r_inner=0.15, alpha=0.5)
        assert r.status == "ok"
        assert math.isfinite(r.ratio) and r.ratio > 0

    def test_linear_compatible_data_small_ratio(self):
        spec = ProblemSpec(domain=DOM, coeff=coefficient_jump(3.0), phi=lambda x, y: x)
        fs = solve_problem(spec, 0.08, 1.0)
        r = estimate_ratio_interior(fs, spec, center=(0.55, 0.0), r_inner=0.15, alpha=0.5)
        assert r.status == "ok"
        assert r.ratio < 10.0

    def test_corner_ratio_weight_sharpness(self, singular_solve):
        # beta matching the true exponent keeps the weighted norm stable;
        # overshooting beta (0.95 > 0.8) makes it grow under refinement
        spec, _ = singular_solve
        lhs = {0.8: [], 0.95: []}
        for h in (0.1, 0.05, 0.025):
            fs = solve_problem(spec, h, 0.8)
            for beta in lhs:
                r = estimate_ratio_corner(fs, spec, beta=beta, alpha=0.5)
                lhs[beta].append(r.lhs)
        stable = lhs[0.8]
        growing = lhs[0.95]
        assert stable[-1] / stable[0] < 2.0
        assert growing[-1] / growing[0] > stable[-1] / stable[0]
        assert growing[-1] > growing[0]

    def test_global_ratio_finite(self, singular_solve):
        spec, fs = singular_solve
        r = estimate_ratio_global(fs, spec, beta=0.8, alpha=0.5)
        assert r.status == "ok" and math.isfinite(r.ratio)

    def test_zero_data_degenerate(self):
        spec = ProblemSpec(domain=DOM, coeff=coefficient_jump(2.0), phi=0.0)
        fs = solve_problem(spec, 0.1, 1.0)
        r = estimate_ratio_corner(fs, spec, beta=0.5, alpha=0.5)
        assert r.status == "degenerate"
        assert r.ratio is None

    def test_ratio_csv_marks_degenerate(self, tmp_path, singular_solve):
        from wedgelab.analysis import write_ratio_csv

        spec, fs = singular_solve
        ok = estimate_ratio_corner(fs, spec, beta=0.8, alpha=0.5)
        spec0 = ProblemSpec(domain=DOM, coeff=coefficient_jump(2.0), phi=0.0)
        fs0 = solve_problem(spec0, 0.1, 1.0)
        deg = estimate_ratio_corner(fs0, spec0, beta=0.5, alpha=0.5)
        path = tmp_path / "ratios.csv"
        write_ratio_csv(path, [("case-a", 0.05, ok), ("case-b", 0.1, deg)])
        lines = path.read_text().splitlines()
        assert lines[0] == "instance,h,lhs,rhs,ratio"
        assert lines[1].split(",")[-1] == f"{ok.ratio:.17g}"
        assert lines[2].split(",")[-1] == "degenerate"


class TestComparisonCheck:
    @pytest.fixture
    def quarter_case(self):
        # gamma > 1 example in the acute range with its calibrated barrier
        w = make_wedge(-PI / 4, PI / 3)
        gamma = singular_exponent(2.0, w)
        sol, jump = build_dirichlet_example(gamma, w)

        def v(x, y):
            return eval_separable_xy(sol, x, y)

        th = np.linspace(w.theta_minus, w.theta_plus, 181)
        arc = np.column_stack([np.cos(th), np.sin(th)])
        rr = np.linspace(0.01, 1.0, 90)
        walls = np.vstack(
            [
                np.column_stack(
                    [rr * math.cos(w.theta_plus), rr * math.sin(w.theta_plus)]
                ),
                np.column_stack(
                    [rr * math.cos(w.theta_minus), rr * math.sin(w.theta_minus)]
                ),
            ]
        )
        boundary = np.vstack([arc, walls])
        r_i = np.linspace(0.05, 0.95, 30)
        t_i = np.linspace(w.theta_minus + 1e-3, w.theta_plus - 1e-3, 61)
        R, T = np.meshgrid(r_i, t_i, indexing="ij")
        interior = np.column_stack([(R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()])
        return w, gamma, v, boundary, interior

    def test_pipeline_passes(self, quarter_case):
        w, gamma, v, boundary, interior = quarter_case
        alpha = min(0.3, 0.8 * (gamma - 1.0))
        barrier = calibrate_barrier(v, alpha, 0.1, w, boundary)
        rep = comparison_check(v, barrier, boundary, interior)
        assert rep.passed
        assert rep.worst_boundary_ratio <= 1.0 + 1e-12

    def test_barrier_itself_has_unit_margin(self, quarter_case):
        w, _, _, boundary, interior = quarter_case
        barrier = Barrier(1.3, 0.3, 0.1, w)

        def v(x, y):
            return barrier_eval_xy(barrier, x, y)

        rep = comparison_check(v, barrier, boundary, interior)
        assert rep.passed
        assert rep.worst_interior_ratio == pytest.approx(1.0, abs=1e-12)

    def test_doubled_barrier_fails_on_boundary(self, quarter_case):
        w, _, _, boundary, interior = quarter_case
        barrier = Barrier(0.7, 0.3, 0.1, w)

        def v(x, y):
            return 2.0 * barrier_eval_xy(barrier, x, y)

        with pytest.raises(BoundaryHypothesisError):
            comparison_check(v, barrier, boundary, interior)

    def test_corrector_recovery_in_pipeline(self):
        # separable-plus-plane field: the corrector rebuilt from tangential
        # derivatives at the corner must match the plane that was added
        w = make_wedge(-PI / 4, PI / 3)
        gamma = singular_exponent(2.0, w)
        sol, jump = build_dirichlet_example(gamma, w)
        plane = corrector_solve(0.9, -0.2, jump.a0, w)
        c_plus = math.cos(w.theta_plus) * plane.a_star + math.sin(w.theta_plus) * plane.b_plus
        c_minus = math.cos(w.theta_minus) * plane.a_star + math.sin(w.theta_minus) * plane.b_minus
        rec = corrector_solve(c_plus, c_minus, jump.a0, w)
        assert rec.a_star == pytest.approx(plane.a_star, abs=1e-12)
        assert rec.b_plus == pytest.approx(plane.b_plus, abs=1e-12)
        assert rec.b_minus == pytest.approx(plane.b_minus, abs=1e-12)
