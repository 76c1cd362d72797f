"""Command-line pipelines: exact / gamma / solve / convergence / fit / norms / verify.

Case configuration is flat ``key = value`` text under ``[section]`` headers
(parsed with the stdlib parser, unknown keys are hard errors).  Every
command writes CSV artifacts with a single header row and 17-significant-
digit floats, plus a JSON run manifest listing the produced files; nothing
is overwritten without ``--force``.  Exit codes: 0 success, 1 verification
failure, 2 usage/config error, 3 numerical failure.
"""

from __future__ import annotations

import argparse
import configparser
import csv
import hashlib
import json
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .analysis import (
    FitError,
    default_fit_radii,
    default_rays,
    fit_corner_exponent,
    interface_flux_jump,
)
from .exact_solutions import (
    DegenerateAngleError,
    NoSignChangeError,
    RootConvergenceError,
    SingularSystemError,
    TransmissionSignError,
    build_dirichlet_example,
    corrector_solve,
    eval_separable_xy,
    grad_separable_xy,
    singular_exponent,
    singular_exponents,
    transmission_coeffs,
)
from .fem import (
    ProblemSpec,
    SolverError,
    coefficient_jump,
    error_report,
    fit_rate,
    solution_field,
    solve_problem,
)
from .geometry import GeometryError, make_wedge, sector
from .norms import (
    NormEstimateError,
    NormParams,
    SampledField,
    read_sampled_field_csv,
    weighted_norm,
    write_sampled_field_csv,
)

EXIT_OK = 0
EXIT_VERIFY_FAIL = 1
EXIT_USAGE = 2
EXIT_NUMERICAL = 3


class ConfigError(ValueError):
    """Unusable case configuration."""


_KNOWN_KEYS = {
    "geometry": {"theta_plus", "theta_minus", "radius", "h", "mu"},
    "coefficient": {"a0", "gamma", "lambda", "Lambda"},
    "data": {"phi", "g", "h"},
    "analysis": {"beta", "alpha", "n_rays", "n_radii"},
    "output": {"directory", "formats"},
}


@dataclass
class CaseConfig:
    theta_plus: float
    theta_minus: float
    radius: float = 1.0
    h: float = 0.1
    mu: float = 1.0
    a0: float | None = None
    gamma: float | None = None
    lam: float | None = None
    Lam: float | None = None
    phi: str = "exact_trace"
    g: str = "zero"
    h_data: str = "zero"
    beta: float | None = None
    alpha: float = 0.5
    n_rays: int = 32
    n_radii: int = 9
    directory: str = "out"
    formats: tuple[str, ...] = ("csv",)
    source_text: str = ""

    @property
    def config_hash(self) -> str:
        return hashlib.sha256(self.source_text.encode("utf-8")).hexdigest()


def load_case_config(path) -> CaseConfig:
    text = Path(path).read_text(encoding="utf-8")
    parser = configparser.ConfigParser(inline_comment_prefixes=("#",))
    parser.optionxform = str  # lambda and Lambda are distinct keys
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError(f"cannot parse config {path}: {exc}") from exc
    for section in parser.sections():
        if section not in _KNOWN_KEYS:
            raise ConfigError(f"unknown config section [{section}]")
        for key in parser[section]:
            if key not in _KNOWN_KEYS[section]:
                raise ConfigError(f"unknown key {key!r} in section [{section}]")
    if "geometry" not in parser:
        raise ConfigError("config must contain a [geometry] section")

    def getf(section, key, default=None):
        if section in parser and key in parser[section]:
            raw = parser[section][key]
            try:
                return float(raw)
            except ValueError as exc:
                raise ConfigError(f"[{section}] {key} = {raw!r} is not a number") from exc
        return default

    def gets(section, key, default=None):
        if section in parser and key in parser[section]:
            return parser[section][key].strip()
        return default

    tp = getf("geometry", "theta_plus")
    tm = getf("geometry", "theta_minus")
    if tp is None or tm is None:
        raise ConfigError("[geometry] needs theta_plus and theta_minus")
    cfg = CaseConfig(
        theta_plus=tp,
        theta_minus=tm,
        radius=getf("geometry", "radius", 1.0),
        h=getf("geometry", "h", 0.1),
        mu=getf("geometry", "mu", 1.0),
        a0=getf("coefficient", "a0"),
        gamma=getf("coefficient", "gamma"),
        lam=getf("coefficient", "lambda"),
        Lam=getf("coefficient", "Lambda"),
        phi=gets("data", "phi", "exact_trace"),
        g=gets("data", "g", "zero"),
        h_data=gets("data", "h", "zero"),
        beta=getf("analysis", "beta"),
        alpha=getf("analysis", "alpha", 0.5),
        n_rays=int(getf("analysis", "n_rays", 32)),
        n_radii=int(getf("analysis", "n_radii", 9)),
        directory=gets("output", "directory", "out"),
        formats=tuple(
            t.strip() for t in gets("output", "formats", "csv").split(",") if t.strip()
        ),
        source_text=text,
    )
    return cfg


@dataclass
class CaseSetup:
    config: CaseConfig
    domain: object
    coeff: object
    problem: ProblemSpec
    exact: object | None  # callable (x, y) -> values, when known
    exact_grad: object | None
    gamma: float | None


def _poly_field(expr: str):
    # "poly: c0 cx cy cxx cxy cyy" -> quadratic polynomial
    coeffs = [float(tok) for tok in expr.split(":", 1)[1].replace(",", " ").split()]
    coeffs += [0.0] * (6 - len(coeffs))
    c0, cx, cy, cxx, cxy, cyy = coeffs[:6]

    def f(x, y):
        x = np.asarray(x, dtype=float)
        y = np.asarray(y, dtype=float)
        return c0 + cx * x + cy * y + cxx * x * x + cxy * x * y + cyy * y * y

    return f


def build_case(cfg: CaseConfig) -> CaseSetup:
    domain = sector(cfg.theta_minus, cfg.theta_plus, cfg.radius)
    wedge = domain.wedge
    gamma = cfg.gamma
    a0 = cfg.a0
    exact = None
    exact_grad = None
    if gamma is None and a0 is not None:
        gamma = singular_exponent(a0, wedge)
    if gamma is not None and a0 is None:
        a0 = transmission_coeffs(gamma, wedge).a0
    if a0 is None:
        a0 = 1.0
        gamma = None if cfg.phi != "exact_trace" else singular_exponent(1.0, wedge)
    coeff = coefficient_jump(a0, lam=cfg.lam, Lam=cfg.Lam)

    if cfg.phi == "exact_trace":
        if gamma is None:
            gamma = singular_exponent(a0, wedge)
        sol, _ = build_dirichlet_example(gamma, wedge)

        def exact(x, y):
            return eval_separable_xy(sol, x, y)

        def exact_grad(x, y, side):
            return grad_separable_xy(sol, x, y, side)

        phi = exact
    elif cfg.phi == "zero":
        phi = 0.0
    elif cfg.phi == "sin":
        def phi(x, y):
            return np.sin(np.asarray(x)) * np.cos(np.asarray(y))
    elif cfg.phi.startswith("poly:"):
        phi = _poly_field(cfg.phi)
    else:
        raise ConfigError(f"unknown phi selector {cfg.phi!r}")

    if cfg.h_data == "zero":
        h_fn = None
    elif cfg.h_data == "manufactured_sin":
        # matches phi = sin with identity coefficient
        def h_fn(x, y):
            return -2.0 * np.sin(np.asarray(x)) * np.cos(np.asarray(y))
    elif cfg.h_data.startswith("poly:"):
        h_fn = _poly_field(cfg.h_data)
    else:
        raise ConfigError(f"unknown h selector {cfg.h_data!r}")

    if cfg.g == "zero":
        g_plus = g_minus = None
    elif cfg.g.startswith("poly:"):
        comp = _poly_field(cfg.g)

        def g_plus(x, y):
            v = comp(x, y)
            return np.stack([v, np.zeros_like(v)], axis=-1)

        g_minus = g_plus
    else:
        raise ConfigError(f"unknown g selector {cfg.g!r}")

    if cfg.phi == "sin" and cfg.h_data == "manufactured_sin":
        def exact(x, y):
            return np.sin(np.asarray(x)) * np.cos(np.asarray(y))

        def exact_grad(x, y, side):
            x = np.asarray(x, dtype=float)
            y = np.asarray(y, dtype=float)
            return np.cos(x) * np.cos(y), -np.sin(x) * np.sin(y)

    problem = ProblemSpec(
        domain=domain, coeff=coeff, phi=phi, g_plus=g_plus, g_minus=g_minus, h=h_fn
    )
    return CaseSetup(cfg, domain, coeff, problem, exact, exact_grad, gamma)


# ---------------------------------------------------------------------------
# output plumbing


def _fmt(x: float) -> str:
    return f"{x:.17g}"


class OutputGuard:
    def __init__(self, directory: Path, force: bool):
        self.directory = directory
        self.force = force
        self.files: list[str] = []

    def path(self, name: str) -> Path:
        self.directory.mkdir(parents=True, exist_ok=True)
        p = self.directory / name
        if p.exists() and not self.force:
            raise ConfigError(f"refusing to overwrite {p} (pass --force)")
        self.files.append(name)
        return p


@dataclass
class RunManifest:
    """Provenance record: hash of the config, tool version, step statuses,
    and every produced file.  Carries no timestamps so identical configs
    yield identical manifests."""

    config_hash: str
    tool_version: str
    steps: list[tuple[str, str]]
    files: list[str]

    def to_json(self) -> str:
        payload = {
            "tool_version": self.tool_version,
            "config_hash": self.config_hash,
            "steps": [{"name": n, "status": s} for n, s in self.steps],
            "files": sorted(self.files),
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


def write_manifest(guard: OutputGuard, config_hash: str, steps: list[tuple[str, str]]):
    manifest = RunManifest(
        config_hash=config_hash,
        tool_version=__version__,
        steps=steps,
        files=list(guard.files),
    )
    (guard.directory / "manifest.json").write_text(manifest.to_json(), encoding="utf-8")


def write_csv(path: Path, header: list[str], rows: list[list]) -> None:
    with open(path, "w", newline="", encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        for row in rows:
            writer.writerow([_fmt(v) if isinstance(v, float) else v for v in row])


def write_loglog_svg(path: Path, xs, series: dict[str, list[float]], xlabel: str, ylabel: str, title: str) -> None:
    """Minimal hand-rolled log-log polyline plot (no plotting dependency)."""
    width, height, margin = 640, 480, 60
    xs = [float(v) for v in xs]
    all_y = [v for ys in series.values() for v in ys if v > 0.0]
    if not all_y or not xs:
        raise ValueError("nothing to plot")
    lx = [math.log10(v) for v in xs]
    ly_min = math.log10(min(all_y))
    ly_max = math.log10(max(all_y))
    lx_min, lx_max = min(lx), max(lx)
    if lx_max == lx_min:
        lx_max += 1.0
    if ly_max == ly_min:
        ly_max += 1.0

    def px(v):
        return margin + (math.log10(v) - lx_min) / (lx_max - lx_min) * (width - 2 * margin)

    def py(v):
        return height - margin - (math.log10(v) - ly_min) / (ly_max - ly_min) * (height - 2 * margin)

    colors = ["#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"]
    parts = [
        f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">',
        f'<rect width="{width}" height="{height}" fill="white"/>',
        f'<text x="{width/2:.0f}" y="24" text-anchor="middle" font-size="15">{title}</text>',
        f'<text x="{width/2:.0f}" y="{height-12}" text-anchor="middle" font-size="13">{xlabel}</text>',
        f'<text x="16" y="{height/2:.0f}" text-anchor="middle" font-size="13" '
        f'transform="rotate(-90 16 {height/2:.0f})">{ylabel}</text>',
        f'<rect x="{margin}" y="{margin}" width="{width-2*margin}" height="{height-2*margin}" '
        f'fill="none" stroke="#444"/>',
    ]
    for d in range(math.floor(lx_min), math.ceil(lx_max) + 1):
        v = 10.0**d
        if lx_min <= d <= lx_max:
            parts.append(
                f'<line x1="{px(v):.1f}" y1="{margin}" x2="{px(v):.1f}" y2="{height-margin}" '
                f'stroke="#ccc" stroke-dasharray="3,3"/>'
            )
            parts.append(
                f'<text x="{px(v):.1f}" y="{height-margin+18}" text-anchor="middle" '
                f'font-size="11">1e{d}</text>'
            )
    for d in range(math.floor(ly_min), math.ceil(ly_max) + 1):
        v = 10.0**d
        if ly_min <= d <= ly_max:
            parts.append(
                f'<line x1="{margin}" y1="{py(v):.1f}" x2="{width-margin}" y2="{py(v):.1f}" '
                f'stroke="#ccc" stroke-dasharray="3,3"/>'
            )
            parts.append(
                f'<text x="{margin-6}" y="{py(v):.1f}" text-anchor="end" font-size="11">1e{d}</text>'
            )
    for idx, (label, ys) in enumerate(series.items()):
        color = colors[idx % len(colors)]
        pts = " ".join(
            f"{px(x):.1f},{py(y):.1f}" for x, y in zip(xs, ys) if y > 0.0
        )
        parts.append(f'<polyline points="{pts}" fill="none" stroke="{color}" stroke-width="1.8"/>')
        for x, y in zip(xs, ys):
            if y > 0.0:
                parts.append(f'<circle cx="{px(x):.1f}" cy="{py(y):.1f}" r="3" fill="{color}"/>')
        parts.append(
            f'<text x="{width-margin-6}" y="{margin+16+14*idx}" text-anchor="end" '
            f'font-size="12" fill="{color}">{label}</text>'
        )
    parts.append("</svg>")
    path.write_text("\n".join(parts) + "\n", encoding="utf-8")


# ---------------------------------------------------------------------------
# commands


def cmd_exact(args) -> int:
    wedge = make_wedge(args.theta_minus, args.theta_plus)
    tc = transmission_coeffs(args.gamma, wedge)
    print(f"A = {_fmt(tc.A)}")
    print(f"a0 = {_fmt(tc.a0)}")
    print(f"C = {_fmt(tc.C)}")
    if args.field_csv:
        sol, _ = build_dirichlet_example(args.gamma, wedge)
        rr = np.linspace(0.05, 1.0, 24)
        tt = default_rays(wedge, 33)
        R, T = np.meshgrid(rr, tt, indexing="ij")
        x, y = (R * np.cos(T)).ravel(), (R * np.sin(T)).ravel()
        gx, gy = grad_separable_xy(sol, x, y)
        field = SampledField(
            np.column_stack([x, y]),
            eval_separable_xy(sol, x, y),
            np.column_stack([gx, gy]),
            np.where(y >= 0, 1, -1).astype(np.int8),
        )
        write_sampled_field_csv(field, args.field_csv)
        print(f"field_csv = {args.field_csv}")
    return EXIT_OK


def cmd_gamma(args) -> int:
    wedge = make_wedge(args.theta_minus, args.theta_plus)
    bracket = (args.bracket_lo, args.bracket_hi) if args.bracket_lo else None
    roots = singular_exponents(args.a0, wedge, bracket=bracket)
    if not roots:
        raise NoSignChangeError("no root in bracket")
    print(f"gamma = {_fmt(roots[0])}")
    print("roots = " + " ".join(_fmt(r) for r in roots))
    return EXIT_OK


def cmd_corrector(args) -> int:
    wedge = make_wedge(args.theta_minus, args.theta_plus)
    c = corrector_solve(args.c_plus, args.c_minus, args.a0, wedge)
    print(f"a_star = {_fmt(c.a_star)}")
    print(f"b_plus = {_fmt(c.b_plus)}")
    print(f"b_minus = {_fmt(c.b_minus)}")
    return EXIT_OK


def cmd_solve(args) -> int:
    cfg = load_case_config(args.config)
    case = build_case(cfg)
    guard = OutputGuard(Path(cfg.directory), args.force)
    out = guard.path("solution.csv")
    fs = solve_problem(case.problem, cfg.h, cfg.mu)
    write_sampled_field_csv(solution_field(fs), out, value_column="u")
    steps = [("mesh", "ok"), ("assemble", "ok"), ("solve", f"iters={fs.diagnostics.iterations}")]
    if args.residual_csv:
        res = guard.path(args.residual_csv)
        write_csv(
            res,
            ["iteration", "relative_residual"],
            [[i + 1, float(r)] for i, r in enumerate(fs.diagnostics.history)],
        )
        steps.append(("residual_history", "ok"))
    if case.exact is not None:
        rep = error_report(fs, case.exact, case.exact_grad)
        steps.append(("error", f"linf={rep.linf:.3e}"))
        print(f"L2 = {_fmt(rep.l2)}")
        print(f"brokenH1 = {_fmt(rep.broken_h1 if rep.broken_h1 is not None else float('nan'))}")
        print(f"Linf = {_fmt(rep.linf)}")
    write_manifest(guard, cfg.config_hash, steps)
    print(f"ndof = {fs.mesh.n_vertices}")
    print(f"iterations = {fs.diagnostics.iterations}")
    print(f"solution_csv = {out}")
    return EXIT_OK


def _convergence_level(case: CaseSetup, h: float):
    fs = solve_problem(case.problem, h, case.config.mu)
    flux = interface_flux_jump(fs, case.coeff)
    if case.exact is not None:
        rep = error_report(fs, case.exact, case.exact_grad)
        l2, bh1, linf = rep.l2, rep.broken_h1 or float("nan"), rep.linf
    else:
        l2 = bh1 = linf = float("nan")
    return [h, fs.mesh.n_vertices, l2, bh1, linf, flux.mean_jump]


def _convergence_rows(case: CaseSetup, levels: int, jobs: int = 1):
    hs = [case.config.h * 0.5**k for k in range(levels)]
    if jobs <= 1:
        return [_convergence_level(case, h) for h in hs]
    from concurrent.futures import ThreadPoolExecutor

    with ThreadPoolExecutor(max_workers=jobs) as pool:
        return list(pool.map(lambda h: _convergence_level(case, h), hs))


def cmd_convergence(args) -> int:
    cfg = load_case_config(args.config)
    case = build_case(cfg)
    guard = OutputGuard(Path(cfg.directory), args.force)
    rows = _convergence_rows(case, args.levels, args.jobs)
    out = guard.path("convergence.csv")
    write_csv(out, ["h", "ndof", "L2", "brokenH1", "Linf", "flux_jump"], rows)
    steps = [("convergence", f"levels={args.levels}")]
    if "svg" in cfg.formats:
        hs = [r[0] for r in rows]
        series = {}
        for name, j in (("L2", 2), ("brokenH1", 3), ("Linf", 4), ("flux_jump", 5)):
            vals = [r[j] for r in rows]
            if all(math.isfinite(v) and v > 0 for v in vals):
                series[name] = vals
        if series:
            svg = guard.path("convergence.svg")
            write_loglog_svg(svg, hs, series, "h", "error", "convergence")
            steps.append(("svg", "ok"))
    write_manifest(guard, cfg.config_hash, steps)
    if case.exact is not None and len(rows) >= 2:
        hs = [r[0] for r in rows]
        print(f"L2_rate = {_fmt(fit_rate(hs, [r[2] for r in rows]))}")
        print(f"H1_rate = {_fmt(fit_rate(hs, [r[3] for r in rows]))}")
    print(f"convergence_csv = {out}")
    return EXIT_OK


def cmd_fit(args) -> int:
    cfg = load_case_config(args.config)
    case = build_case(cfg)
    guard = OutputGuard(Path(cfg.directory), args.force)
    fs = solve_problem(case.problem, cfg.h, cfg.mu)
    radii = default_fit_radii(cfg.h, cfg.radius, cfg.n_radii)
    rays = default_rays(case.domain.wedge, cfg.n_rays)
    fit = fit_corner_exponent(fs, rays, radii)
    curve = guard.path("fit.csv")
    write_csv(
        curve,
        ["r", "sup_abs_v"],
        [[float(r), float(s)] for r, s in zip(fit.radii, fit.sup_values)],
    )
    summary = guard.path("fit_summary.csv")
    write_csv(summary, ["beta", "intercept", "r2"], [[fit.beta, fit.intercept, fit.r_squared]])
    write_manifest(guard, cfg.config_hash, [("fit", f"beta={fit.beta:.6g}")])
    print(f"beta = {_fmt(fit.beta)}")
    print(f"r2 = {_fmt(fit.r_squared)}")
    print(f"fit_csv = {curve}")
    return EXIT_OK


def cmd_norms(args) -> int:
    field = read_sampled_field_csv(args.solution_csv)
    params = NormParams(k=args.k, alpha=args.alpha, tau=args.tau)
    report = weighted_norm(field, params)
    for line in report.as_lines():
        print(line)
    if args.output:
        out = Path(args.output)
        if out.exists() and not args.force:
            raise ConfigError(f"refusing to overwrite {out} (pass --force)")
        write_csv(
            out,
            ["k", "alpha", "tau", *(f"seminorm_{i}_0" for i in range(args.k + 1)),
             "seminorm_k_alpha", "total"],
            [[args.k, args.alpha, args.tau, *report.seminorms_k0,
              report.seminorm_kalpha, report.total]],
        )
        print(f"norms_csv = {out}")
    return EXIT_OK


def cmd_verify(args) -> int:
    from .acceptance import run_acceptance

    results = run_acceptance(filter_substr=args.filter, verbose=True)
    n_fail = sum(1 for r in results if not r.passed)
    print(f"{len(results) - n_fail}/{len(results)} criteria passed")
    return EXIT_OK if n_fail == 0 else EXIT_VERIFY_FAIL


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="wedgelab",
        description="Elliptic interface problems on wedge domains: exact solutions, "
        "FEM solves, and regularity diagnostics.",
    )
    parser.add_argument("--version", action="version", version=f"wedgelab {__version__}")
    sub = parser.add_subparsers(dest="command", required=True)

    def add_angles(p):
        p.add_argument("--theta-plus", type=float, required=True, help="upper wall angle (radians)")
        p.add_argument("--theta-minus", type=float, required=True, help="lower wall angle (radians)")
        p.add_argument("--degrees", action="store_true", help="interpret angles in degrees")

    p = sub.add_parser("exact", help="transmission coefficients of the wall-vanishing solution")
    p.add_argument("--gamma", type=float, required=True)
    add_angles(p)
    p.add_argument("--field-csv", help="also write a sampled-field CSV of the solution")
    p.set_defaults(fn=cmd_exact)

    p = sub.add_parser("gamma", help="smallest singular exponent for a coefficient jump")
    p.add_argument("--a0", type=float, required=True)
    add_angles(p)
    p.add_argument("--bracket-lo", type=float, default=None)
    p.add_argument("--bracket-hi", type=float, default=None)
    p.set_defaults(fn=cmd_gamma)

    p = sub.add_parser(
        "corrector", help="piecewise-linear plane matching tangential wall derivatives"
    )
    p.add_argument("--c-plus", type=float, required=True)
    p.add_argument("--c-minus", type=float, required=True)
    p.add_argument("--a0", type=float, required=True)
    add_angles(p)
    p.set_defaults(fn=cmd_corrector)

    p = sub.add_parser("solve", help="FEM solve from a case config")
    p.add_argument("config")
    p.add_argument("--force", action="store_true")
    p.add_argument("--residual-csv", default=None, metavar="NAME",
                   help="also write the CG residual history under this name")
    p.set_defaults(fn=cmd_solve)

    p = sub.add_parser("convergence", help="refinement sweep with CSV/SVG artifacts")
    p.add_argument("config")
    p.add_argument("--levels", type=int, default=3)
    p.add_argument("--jobs", type=int, default=1, help="solve levels concurrently")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_convergence)

    p = sub.add_parser("fit", help="corner-exponent fit of a solved case")
    p.add_argument("config")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_fit)

    p = sub.add_parser("norms", help="weighted-norm estimate of a solution CSV")
    p.add_argument("solution_csv")
    p.add_argument("--k", type=int, default=1)
    p.add_argument("--alpha", type=float, default=0.5)
    p.add_argument("--tau", type=float, default=0.0)
    p.add_argument("--output", help="write the report as a CSV row")
    p.add_argument("--force", action="store_true")
    p.set_defaults(fn=cmd_norms)

    p = sub.add_parser("verify", help="run the acceptance battery")
    p.add_argument("--filter", default=None, help="run only criteria containing this substring")
    p.set_defaults(fn=cmd_verify)
    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:  # argparse uses 2 for usage errors already
        return int(exc.code or 0)
    if getattr(args, "degrees", False):
        args.theta_plus = math.radians(args.theta_plus)
        args.theta_minus = math.radians(args.theta_minus)
    try:
        return args.fn(args)
    except (ConfigError, NormEstimateError, FileNotFoundError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except (
        GeometryError,
        DegenerateAngleError,
        TransmissionSignError,
        NoSignChangeError,
        RootConvergenceError,
        SingularSystemError,
        SolverError,
        FitError,
        ValueError,
    ) as exc:
        print(f"numerical failure: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL


if __name__ == "__main__":  # pragma: no cover
    sys.exit(main())
