"""Batch experiment runner.

Subcommands:
  run    convergence study over a refinement family, CSV/markdown output
  patch  single polynomial-reproduction test
  mesh   generate a mesh file

Configuration is a line-oriented ``key=value`` file; command-line flags
override file values.  ``PEFEM_THREADS=0`` (the default) requests
single-threaded deterministic execution, which is also how every
computation here actually runs.
"""

import argparse
import os
import sys

import numpy as np

from .analysis import ConvergenceReport, LevelResult, error_norms, solve
from .errors import ConfigurationError, PefemError
from .fem import FeSpace
from .forms import (
    DEFAULT_C_THETA,
    assemble_pefem_dirichlet,
    assemble_pefem_dirichlet_strong,
    assemble_pefem_neumann,
    assemble_standard_dirichlet,
)
from .geometry import disk_geometry, geometric_gap, square_hole_geometry
from .mesh import generate_disk_mesh, generate_square_hole_mesh, validate, write_mesh
from .problems import Poly2D, polynomial_problem, preset_problem

PATCH_TOL = 1e-8

METHODS = (
    "pefem-dirichlet-weak",
    "pefem-dirichlet-strong",
    "pefem-neumann",
    "standard",
)
DOMAINS = ("disk", "square_hole")
PROBLEMS = ("convex-cos", "nonconvex-rational", "patch-k")

CONFIG_KEYS = {
    "domain",
    "method",
    "k",
    "levels",
    "c_theta",
    "problem",
    "out",
    "seed",
    "deterministic",
}


class ExperimentConfig:
    """Validated settings for one convergence study."""

    def __init__(
        self,
        domain="disk",
        method="pefem-dirichlet-weak",
        k=2,
        levels=4,
        c_theta=DEFAULT_C_THETA,
        problem=None,
        out=None,
        seed=0,
        deterministic=False,
    ):
        if domain not in DOMAINS:
            raise ConfigurationError(f"unknown domain {domain!r}")
        if method not in METHODS:
            raise ConfigurationError(f"unknown method {method!r}")
        k = int(k)
        if not 1 <= k <= 4:
            raise ConfigurationError(f"degree k must be in 1..4, got {k}")
        levels = int(levels)
        if levels < 2:
            raise ConfigurationError(f"need at least 2 levels, got {levels}")
        if problem is None:
            problem = "convex-cos" if domain == "disk" else "nonconvex-rational"
        if problem not in PROBLEMS:
            raise ConfigurationError(f"unknown problem preset {problem!r}")
        self.domain = domain
        self.method = method
        self.k = k
        self.levels = levels
        self.c_theta = float(c_theta)
        self.problem = problem
        self.out = out
        self.seed = int(seed)
        self.deterministic = bool(deterministic)

    @property
    def bc_kind(self):
        return "neumann" if self.method == "pefem-neumann" else "dirichlet"


def thread_cap():
    """Worker-count cap from PEFEM_THREADS; 0 means single-threaded."""
    raw = os.environ.get("PEFEM_THREADS", "0")
    try:
        cap = int(raw)
    except ValueError:
        raise ConfigurationError(f"PEFEM_THREADS must be an integer, got {raw!r}")
    if cap < 0:
        raise ConfigurationError(f"PEFEM_THREADS must be >= 0, got {cap}")
    return cap


def parse_config_file(path):
    """Read a ``key=value`` file with ``#`` comments into a dict."""
    values = {}
    with open(path, encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ConfigurationError(f"{path}:{lineno}: expected key=value, got {line!r}")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise ConfigurationError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = value
    return values


def _parse_bool(value):
    if isinstance(value, bool):
        return value
    lowered = str(value).strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ConfigurationError(f"expected a boolean, got {value!r}")


def build_config(file_values, overrides):
    merged = dict(file_values)
    for key, value in overrides.items():
        if value is not None and value is not False:
            merged[key] = value
    if "deterministic" in merged:
        merged["deterministic"] = _parse_bool(merged["deterministic"])
    return ExperimentConfig(**merged)


def _domain_tools(domain):
    if domain == "disk":
        return (lambda level: generate_disk_mesh(16 * 2**level)), disk_geometry()
    return generate_square_hole_mesh, square_hole_geometry()


def _assembler(config):
    if config.method == "pefem-dirichlet-weak":
        return lambda s, p, g: assemble_pefem_dirichlet(s, p, g, c_theta=config.c_theta)
    if config.method == "pefem-dirichlet-strong":
        return assemble_pefem_dirichlet_strong
    if config.method == "pefem-neumann":
        return assemble_pefem_neumann
    return assemble_standard_dirichlet


def random_polynomial(degree, rng):
    """Random coefficients in [-1, 1] for total degree <= `degree`."""
    coeffs = rng.uniform(-1.0, 1.0, size=(degree + 1, degree + 1))
    for i in range(degree + 1):
        for j in range(degree + 1):
            if i + j > degree:
                coeffs[i, j] = 0.0
    return Poly2D(coeffs)


def run_study(config):
    """Solve the configured problem on every refinement level.

    Returns a ConvergenceReport; raises PefemError subclasses (annotated
    with the failing level) on any assembly or solver failure.
    """
    mesh_for_level, geometry = _domain_tools(config.domain)
    assemble = _assembler(config)
    rng = np.random.default_rng(config.seed)
    report = ConvergenceReport(method=config.method, degree=config.k)
    for level in range(config.levels):
        try:
            mesh = mesh_for_level(level)
            space = FeSpace(mesh, config.k)
            if config.problem == "patch-k":
                problem = polynomial_problem(random_polynomial(config.k, rng), config.bc_kind)
            else:
                problem = preset_problem(config.problem, config.bc_kind)
            u_h = solve(assemble(space, problem, geometry))
            l2, h1 = error_norms(space, u_h, problem.exact_u, problem.exact_grad)
            delta = geometric_gap(mesh, geometry)
        except PefemError as exc:
            raise type(exc)(f"level {level}: {exc}") from exc
        report.add(
            LevelResult(
                level=level,
                h=mesh.h,
                delta_h=delta,
                dofs=space.n_dofs,
                l2_error=l2,
                h1_error=h1,
            )
        )
    return report


def gates_pass(config, report):
    """Per-config acceptance gates on the fitted convergence rates."""
    if config.problem == "patch-k":
        return all(lv.h1_error <= PATCH_TOL for lv in report.levels)
    last = min(3, len(report.levels))
    l2 = report.l2_slope(last=last)
    h1 = report.h1_slope(last=last)
    if config.method == "standard":
        if config.k == 1:
            return 1.7 <= l2 <= 2.4
        return l2 <= 2.5 and h1 <= 1.9
    return l2 >= config.k + 0.75 and h1 >= config.k - 0.25


def _fmt(x):
    return f"{x:.12e}"


def render_csv(report):
    lines = ["level,h,delta_h,dofs,l2_error,h1_error,l2_rate_pairwise,h1_rate_pairwise"]
    for lv, (r2, r1) in zip(report.levels, report.pairwise_rates()):
        rate2 = "" if r2 is None else f"{r2:.4f}"
        rate1 = "" if r1 is None else f"{r1:.4f}"
        lines.append(
            f"{lv.level},{_fmt(lv.h)},{_fmt(lv.delta_h)},{lv.dofs},"
            f"{_fmt(lv.l2_error)},{_fmt(lv.h1_error)},{rate2},{rate1}"
        )
    return "\n".join(lines) + "\n"


def render_markdown(config, report):
    lines = [
        f"# {config.method}, degree {config.k}, {config.domain}, {config.problem}",
        "",
        "| h | L2 error | Rate | H1 error | Rate |",
        "| --- | --- | --- | --- | --- |",
    ]
    for lv, (r2, r1) in zip(report.levels, report.pairwise_rates()):
        rate2 = "--" if r2 is None else f"{r2:.4f}"
        rate1 = "--" if r1 is None else f"{r1:.4f}"
        lines.append(
            f"| {lv.h:.6f} | {lv.l2_error:.5e} | {rate2} | {lv.h1_error:.5e} | {rate1} |"
        )
    last = min(3, len(report.levels))
    lines += [
        "",
        f"Fitted slopes over the finest {last} levels: "
        f"L2 {report.l2_slope(last=last):.4f}, H1 {report.h1_slope(last=last):.4f}.",
        "",
    ]
    return "\n".join(lines)


def emit_outputs(config, report, out_dir):
    """Write results.csv, results.md, and log-log data files."""
    if not report.levels:
        raise ConfigurationError("refusing to write outputs for an empty report")
    os.makedirs(out_dir, exist_ok=True)
    paths = {
        "csv": os.path.join(out_dir, "results.csv"),
        "markdown": os.path.join(out_dir, "results.md"),
        "loglog_l2": os.path.join(out_dir, "loglog_l2.dat"),
        "loglog_h1": os.path.join(out_dir, "loglog_h1.dat"),
    }
    with open(paths["csv"], "w", encoding="utf-8") as fh:
        fh.write(render_csv(report))
    with open(paths["markdown"], "w", encoding="utf-8") as fh:
        fh.write(render_markdown(config, report))
    with open(paths["loglog_l2"], "w", encoding="utf-8") as fh:
        for lv in report.levels:
            fh.write(f"{_fmt(lv.h)} {_fmt(lv.l2_error)}\n")
    with open(paths["loglog_h1"], "w", encoding="utf-8") as fh:
        for lv in report.levels:
            fh.write(f"{_fmt(lv.h)} {_fmt(lv.h1_error)}\n")
    return paths


def cmd_run(args):
    file_values = parse_config_file(args.config) if args.config else {}
    overrides = {
        "k": args.k,
        "levels": args.levels,
        "method": args.method,
        "domain": args.domain,
        "out": args.out,
        "problem": args.problem,
        "deterministic": args.deterministic,
        "seed": args.seed,
        "c_theta": args.c_theta,
    }
    config = build_config(file_values, overrides)
    thread_cap()
    report = run_study(config)
    print(render_markdown(config, report))
    if config.out:
        paths = emit_outputs(config, report, config.out)
        print(f"wrote {paths['csv']}")
        print(f"wrote {paths['markdown']}")
    ok = gates_pass(config, report)
    print("rate gates:", "PASS" if ok else "FAIL")
    return 0 if ok else 1


def cmd_patch(args):
    config = ExperimentConfig(
        domain=args.domain,
        method=args.method,
        k=args.k,
        levels=2,
        problem="patch-k",
        seed=args.seed,
    )
    mesh_for_level, geometry = _domain_tools(config.domain)
    mesh = mesh_for_level(1)
    space = FeSpace(mesh, config.k)
    rng = np.random.default_rng(config.seed)
    poly = random_polynomial(config.k, rng)
    problem = polynomial_problem(poly, config.bc_kind)
    u_h = solve(_assembler(config)(space, problem, geometry))
    _, h1 = error_norms(space, u_h, problem.exact_u, problem.exact_grad)
    scale = max(1.0, np.abs(poly.coeffs).sum())
    ok = h1 <= PATCH_TOL * scale
    print(
        f"patch test: method={config.method} domain={config.domain} k={config.k} "
        f"seed={config.seed} h1_error={h1:.3e} -> {'PASS' if ok else 'FAIL'}"
    )
    return 0 if ok else 1


def cmd_mesh(args):
    mesh_for_level, geometry = _domain_tools(args.domain)
    mesh = mesh_for_level(args.level)
    result = validate(mesh, geometry)
    if not result.ok:
        for violation in result.violations:
            print("violation:", violation, file=sys.stderr)
        return 1
    with open(args.out, "w", encoding="utf-8") as fh:
        fh.write(write_mesh(mesh))
    print(f"wrote {args.out}: {len(mesh.vertices)} vertices, {len(mesh.triangles)} triangles")
    return 0


def build_parser():
    parser = argparse.ArgumentParser(prog="pefem", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)

    run = sub.add_parser("run", help="run a convergence study")
    run.add_argument("--config", help="key=value configuration file")
    run.add_argument("--k", type=int, help="polynomial degree 1..4")
    run.add_argument("--levels", type=int, help="number of refinement levels")
    run.add_argument("--method", choices=METHODS)
    run.add_argument("--domain", choices=DOMAINS)
    run.add_argument("--out", help="output directory for CSV/markdown")
    run.add_argument("--deterministic", action="store_true")
    run.add_argument("--problem", choices=PROBLEMS, help="problem preset")
    run.add_argument("--seed", type=int, help="rng seed for patch-k studies")
    run.add_argument("--c-theta", dest="c_theta", type=float, help="constraint scaling constant")
    run.set_defaults(func=cmd_run)

    patch = sub.add_parser("patch", help="run a single patch test")
    patch.add_argument("--k", type=int, required=True)
    patch.add_argument("--method", choices=METHODS, required=True)
    patch.add_argument("--domain", choices=DOMAINS, required=True)
    patch.add_argument("--seed", type=int, default=0)
    patch.set_defaults(func=cmd_patch)

    mesh = sub.add_parser("mesh", help="generate a mesh file")
    mesh.add_argument("--domain", choices=DOMAINS, required=True)
    mesh.add_argument("--level", type=int, required=True)
    mesh.add_argument("--out", required=True)
    mesh.set_defaults(func=cmd_mesh)
    return parser


def main(argv=None):
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except PefemError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
