"""Experiment driver: single solves, h-refinement studies, 1D demonstrations.

Configuration comes from an optional line-based ``key = value`` file plus
command-line flags, flags winning. Reports are machine readable: the
convergence study emits a fixed-column CSV, single solves print key=value
lines, and both can render matplotlib figures next to the delimited
output when a plot directory is given.
"""
from __future__ import annotations

import argparse
import math
import sys
from dataclasses import dataclass, fields, replace

import numpy as np

from . import cutgeom, oned, scheme
from .grid import CartesianGrid
from .levelset import (Affine1D, LevelSetField, ShrinkingCircle,
                       TranslatingCircle, VelocityMode, interpolate)

# Computational window for the circle cases.
CIRCLE_BOX_ORIGIN = (-1.5, -1.5)
CIRCLE_BOX_EXTENT = (3.5, 3.0)

QUAD_ORDER = 2

DEFAULT_RESOLUTIONS = [10, 20, 40, 80, 160, 320]
DEEP_RESOLUTION = 640

CASES = ("shrinking_circle", "translating_circle", "oned_aligned", "oned_extended")

CSV_COLUMNS = "ncells,h,dofs,mass,l1,eoc1,l2,eoc2,linf,eocinf"


@dataclass
class RunConfig:
    case: str = "shrinking_circle"
    ncells: int = 40
    t_star: float = 0.5
    tau: float = 0.5
    k: int = 0
    velocity: VelocityMode = VelocityMode.ANALYTIC_NORMAL
    eps_reg: float = 0.0
    u_old: tuple = ("const", 1.0)
    out: str | None = None
    dump_geometry: str | None = None
    dump_fields: str | None = None
    dump_matrix: str | None = None
    plot_dir: str | None = None
    deep: bool = False

    def validate(self) -> "RunConfig":
        if self.case not in CASES:
            raise ValueError(f"unknown case '{self.case}'")
        if self.ncells < 1:
            raise ValueError("ncells must be >= 1")
        if self.tau <= 0.0:
            raise ValueError("tau must be positive")
        if self.t_star - self.tau < 0.0:
            raise ValueError(
                f"time step reaches before t=0 (t_star={self.t_star}, tau={self.tau})")
        if self.case == "shrinking_circle" and self.t_star >= 1.0:
            raise ValueError("shrinking circle vanishes at t=1; need t_star < 1")
        if self.k < 0:
            raise ValueError("polynomial degree must be >= 0")
        if self.eps_reg < 0.0:
            raise ValueError("eps_reg must be >= 0")
        return self


@dataclass
class ConvergenceRecord:
    ncells: int
    h: float
    dofs: int
    mass: float
    l1: float
    eoc1: float | None
    l2: float
    eoc2: float | None
    linf: float
    eocinf: float | None


@dataclass
class RunSummary:
    config: RunConfig
    h: float
    dofs: int
    gamma: float
    mass_old: float
    mass_new: float
    errors: tuple[float, float, float] | None
    report: object
    domain: object
    space: object
    solution: np.ndarray


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

_CONFIG_KEYS = {f.name for f in fields(RunConfig)}


def parse_u_old(text: str) -> tuple:
    parts = text.split(":")
    if parts[0] == "const" and len(parts) == 2:
        return ("const", float(parts[1]))
    if parts[0] == "binary" and len(parts) == 4:
        lo, hi, val = (float(p) for p in parts[1:])
        if not lo < hi:
            raise ValueError(f"binary profile needs lo < hi, got {text!r}")
        return ("binary", lo, hi, val)
    raise ValueError(f"cannot parse u_old value {text!r}; "
                     "expected const:<v> or binary:<lo>:<hi>:<v>")


def _coerce(key: str, raw: str):
    if key in ("ncells", "k"):
        return int(raw)
    if key in ("t_star", "tau", "eps_reg"):
        return float(raw)
    if key == "velocity":
        try:
            return VelocityMode(raw)
        except ValueError:
            raise ValueError(f"unknown velocity mode {raw!r}; use analytic or lsdiff")
    if key == "u_old":
        return parse_u_old(raw)
    if key == "deep":
        if raw.lower() in ("1", "true", "yes"):
            return True
        if raw.lower() in ("0", "false", "no"):
            return False
        raise ValueError(f"cannot parse boolean {raw!r}")
    return raw


def read_config_file(path: str) -> dict:
    values = {}
    with open(path) as fh:
        for lineno, line in enumerate(fh, start=1):
            body = line.split("#", 1)[0].strip()
            if not body:
                continue
            if "=" not in body:
                raise ValueError(f"{path}:{lineno}: expected 'key = value'")
            key, raw = (s.strip() for s in body.split("=", 1))
            if key not in _CONFIG_KEYS:
                raise ValueError(f"{path}:{lineno}: unknown key {key!r}")
            values[key] = _coerce(key, raw)
    return values


def parse_config(flag_values: dict, config_file: str | None = None) -> RunConfig:
    """Merge file entries and flag values (flags win) into a validated RunConfig."""
    merged = read_config_file(config_file) if config_file else {}
    for key, val in flag_values.items():
        if key not in _CONFIG_KEYS:
            raise ValueError(f"unknown config key {key!r}")
        if val is not None and val is not False:
            merged[key] = val
    return replace(RunConfig(), **merged).validate()


# ---------------------------------------------------------------------------
# problem setup helpers
# ---------------------------------------------------------------------------

def make_field(config: RunConfig) -> LevelSetField:
    if config.case == "shrinking_circle":
        return ShrinkingCircle()
    if config.case == "translating_circle":
        return TranslatingCircle()
    return Affine1D()


def make_grid(config: RunConfig) -> CartesianGrid:
    return CartesianGrid(CIRCLE_BOX_ORIGIN, CIRCLE_BOX_EXTENT,
                         config.ncells, config.ncells)


def _angle(x, center) -> float:
    return math.atan2(x[1] - center[1], x[0] - center[0]) % (2.0 * math.pi)


def make_u_old(config: RunConfig, field: LevelSetField):
    """Callable on the old interface realizing the configured profile."""
    if config.u_old[0] == "const":
        value = config.u_old[1]
        return lambda x: value
    _, lo, hi, value = config.u_old
    if isinstance(field, TranslatingCircle):
        center = field.center(config.t_star - config.tau)
    else:
        center = field.center
    return lambda x: value if lo < _angle(x, center) < hi else 0.0


def make_exact(config: RunConfig, field: LevelSetField):
    """Known solution on the new interface, or None.

    Only the shrinking circle has one: radial motion preserves angles, so a
    profile simply rescales by the radius ratio. A translating circle under
    the no-tangential-velocity convention redistributes material toward the
    rear of the circle, so no closed form is claimed for it.
    """
    if isinstance(field, ShrinkingCircle):
        r_old = field.radius(config.t_star - config.tau)
        r_new = field.radius(config.t_star)
        factor = r_old / r_new
        if config.u_old[0] == "const":
            value = config.u_old[1] * factor
            return lambda x: value
        _, lo, hi, value = config.u_old
        center = field.center
        return lambda x: factor * value if lo < _angle(x, center) < hi else 0.0
    return None


# ---------------------------------------------------------------------------
# pipeline
# ---------------------------------------------------------------------------

def _stage(name, fn, *args, **kwargs):
    try:
        return fn(*args, **kwargs)
    except Exception as exc:
        raise RuntimeError(f"stage '{name}' failed: {exc}") from exc


def run_single(config: RunConfig) -> RunSummary:
    """Level set -> geometry -> assembly -> solve, with optional dumps."""
    config.validate()
    if config.case.startswith("oned"):
        raise ValueError("run_single drives the 2D pipeline; "
                         "use run_oned_* for the 1D cases")
    field = make_field(config)
    grid = make_grid(config)
    dls = _stage("levelset", interpolate, field, grid,
                 config.t_star, config.t_star - config.tau)
    domain = _stage("cutgeom", cutgeom.build_domain, dls, grid, field,
                    QUAD_ORDER)
    space = scheme.DGSpace(domain, config.k)
    params = scheme.SchemeParams(tau=config.tau, gamma=domain.gamma,
                                 eps_reg=config.eps_reg,
                                 velocity_mode=config.velocity,
                                 quad_order=QUAD_ORDER)
    u_old = make_u_old(config, field)
    solution, report = _stage("scheme", scheme.solve_step,
                              domain, space, params, u_old)
    mass_old = scheme.old_data_mass(domain, u_old)
    mass_new = scheme.interface_mass(domain, space, solution, "new")
    exact = make_exact(config, field)
    errors = scheme.error_norms(domain, space, solution, exact) if exact else None

    if config.dump_geometry:
        cutgeom.write_geometry_dump(domain, config.dump_geometry)
    if config.dump_fields:
        export_fields(domain, space, solution, config.dump_fields)
    if config.dump_matrix:
        system = scheme.assemble(domain, space, params, u_old)
        system.matrix.write_coordinate_dump(config.dump_matrix)

    return RunSummary(config=config, h=grid.h, dofs=space.ndofs,
                      gamma=domain.gamma, mass_old=mass_old, mass_new=mass_new,
                      errors=errors, report=report, domain=domain, space=space,
                      solution=solution)


def default_resolutions(deep: bool) -> list[int]:
    return list(DEFAULT_RESOLUTIONS) + ([DEEP_RESOLUTION] if deep else [])


def run_convergence(config: RunConfig, resolutions=None,
                    out: str | None = None) -> list[ConvergenceRecord]:
    """h-refinement sweep; CSV is flushed row by row so failures keep partials."""
    if resolutions is None:
        resolutions = default_resolutions(config.deep)
    resolutions = list(resolutions)
    if len(resolutions) < 2 or any(b <= a for a, b in zip(resolutions, resolutions[1:])):
        raise ValueError("need at least two strictly increasing resolutions")
    if make_exact(config, make_field(config)) is None:
        raise ValueError(f"case '{config.case}' has no known exact solution "
                         "to measure convergence against")

    out = out if out is not None else config.out
    records: list[ConvergenceRecord] = []
    fh = open(out, "w") if out else None
    try:
        if fh:
            fh.write(CSV_COLUMNS + "\n")
            fh.flush()
        prev = None
        for n in resolutions:
            summary = run_single(replace(config, ncells=n, out=None,
                                         dump_geometry=None, dump_fields=None,
                                         plot_dir=None))
            l1, l2, linf = summary.errors
            rec = ConvergenceRecord(
                ncells=n, h=summary.h, dofs=summary.dofs, mass=summary.mass_new,
                l1=l1, eoc1=_eoc(prev, "l1", l1, summary.h),
                l2=l2, eoc2=_eoc(prev, "l2", l2, summary.h),
                linf=linf, eocinf=_eoc(prev, "linf", linf, summary.h))
            records.append(rec)
            prev = rec
            if fh:
                fh.write(format_csv_row(rec) + "\n")
                fh.flush()
    finally:
        if fh:
            fh.close()
    return records


def _eoc(prev: ConvergenceRecord | None, key: str, err: float, h: float):
    if prev is None:
        return None
    e_prev = getattr(prev, key)
    if err <= 0.0 or e_prev <= 0.0:
        return None
    return math.log(e_prev / err) / math.log(prev.h / h)


def run_oned(config: RunConfig) -> tuple[np.ndarray, np.ndarray]:
    """Solve the 1D model matching a RunConfig; returns (solution, reference)."""
    w = 1.0
    extended = config.case == "oned_extended"
    eps = config.eps_reg if config.eps_reg > 0.0 else (1e-10 if extended else 0.0)
    cfg = oned.OneDConfig(n=config.ncells, w=w, tau=config.tau,
                          gamma=config.tau * w,
                          u_old=config.u_old[1] if config.u_old[0] == "const" else 1.0,
                          eps=eps)
    if extended:
        return oned.solve_extended(cfg), oned.extended_limit(cfg)
    return oned.solve_aligned(cfg), oned.aligned_closed_form(cfg)


# ---------------------------------------------------------------------------
# output
# ---------------------------------------------------------------------------

def _fmt(value) -> str:
    if value is None:
        return ""
    return f"{value:.17g}"


def format_csv_row(rec: ConvergenceRecord) -> str:
    return ",".join([str(rec.ncells), _fmt(rec.h), str(rec.dofs), _fmt(rec.mass),
                     _fmt(rec.l1), _fmt(rec.eoc1), _fmt(rec.l2), _fmt(rec.eoc2),
                     _fmt(rec.linf), _fmt(rec.eocinf)])


def write_convergence_csv(records, path: str) -> None:
    with open(path, "w") as fh:
        fh.write(CSV_COLUMNS + "\n")
        for rec in records:
            fh.write(format_csv_row(rec) + "\n")


def read_convergence_csv(path: str) -> list[ConvergenceRecord]:
    records = []
    with open(path) as fh:
        header = fh.readline().strip()
        if header != CSV_COLUMNS:
            raise ValueError(f"unexpected CSV header in {path}: {header!r}")
        for line in fh:
            if not line.strip():
                continue
            f = line.rstrip("\n").split(",")
            records.append(ConvergenceRecord(
                ncells=int(f[0]), h=float(f[1]), dofs=int(f[2]), mass=float(f[3]),
                l1=float(f[4]), eoc1=float(f[5]) if f[5] else None,
                l2=float(f[6]), eoc2=float(f[7]) if f[7] else None,
                linf=float(f[8]), eocinf=float(f[9]) if f[9] else None))
    return records


def export_fields(domain, space, solution: np.ndarray, path: str) -> None:
    """Cell polygons with dof values plus interface traces, one line each.

    Cut cells are unions of triangles, so each cell record lists its
    triangle vertices back to back (nverts = 3 * ntriangles), followed by
    the cell's dof coefficients.
    """
    with open(path, "w") as fh:
        fh.write("# udg-field v1\n")
        for (i, j), cc in domain.cut_cells.items():
            coords = []
            for p0, p1, p2, _ in cc.triangles:
                coords.extend((p0[0], p0[1], p1[0], p1[1], p2[0], p2[1]))
            lo = space.block((i, j))
            dofs = solution[lo:lo + space.dofs_per_cell]
            fh.write(f"cell {i} {j} {space.degree} {3 * len(cc.triangles)} "
                     + " ".join(f"{c:.17g}" for c in coords) + " "
                     + " ".join(f"{u:.17g}" for u in dofs) + "\n")
        for seg in domain.gamma_new + domain.gamma_old:
            mid = (0.5 * (seg.a[0] + seg.b[0]), 0.5 * (seg.a[1] + seg.b[1]))
            trace = space.evaluate(solution, seg.owner, mid)
            fh.write(f"iface {seg.which} {seg.a[0]:.17g} {seg.a[1]:.17g} "
                     f"{seg.b[0]:.17g} {seg.b[1]:.17g} {trace:.17g}\n")


def print_summary(summary: RunSummary, stream=None) -> None:
    stream = stream if stream is not None else sys.stdout
    cfg = summary.config
    rows = [
        ("case", cfg.case),
        ("ncells", cfg.ncells),
        ("h", _fmt(summary.h)),
        ("dofs", summary.dofs),
        ("gamma", _fmt(summary.gamma)),
        ("mass_old", _fmt(summary.mass_old)),
        ("mass_new", _fmt(summary.mass_new)),
        ("mass_defect", _fmt(abs(summary.mass_new - summary.mass_old))),
    ]
    if summary.errors is not None:
        for name, val in zip(("l1", "l2", "linf"), summary.errors):
            rows.append((name, _fmt(val)))
    rep = summary.report
    rows.append(("solver", f"{rep.method} iterations={rep.iterations} "
                           f"residual={rep.residual:.3e}"))
    for key, val in rows:
        print(f"{key} = {val}", file=stream)


# ---------------------------------------------------------------------------
# entry point
# ---------------------------------------------------------------------------

def _add_common_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("--config", help="key = value configuration file")
    p.add_argument("--case", choices=CASES)
    p.add_argument("--ncells", type=int, help="cells per axis")
    p.add_argument("--t-star", dest="t_star", type=float)
    p.add_argument("--tau", type=float)
    p.add_argument("--k", type=int, help="polynomial degree")
    p.add_argument("--velocity", choices=[m.value for m in VelocityMode])
    p.add_argument("--eps-reg", dest="eps_reg", type=float)
    p.add_argument("--u-old", dest="u_old",
                   help="const:<v> or binary:<lo>:<hi>:<v> (angles in radians)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--dump-geometry", dest="dump_geometry")
    p.add_argument("--dump-fields", dest="dump_fields")
    p.add_argument("--dump-matrix", dest="dump_matrix",
                   help="debug dump of the assembled matrix (row col value)")
    p.add_argument("--plot-dir", dest="plot_dir",
                   help="directory for rendered figures")
    p.add_argument("--deep", action="store_true",
                   help="include the 640^2 resolution in convergence studies")


def _flags_to_dict(args: argparse.Namespace) -> dict:
    out = {}
    for key in _CONFIG_KEYS:
        val = getattr(args, key, None)
        if key == "velocity" and val is not None:
            val = VelocityMode(val)
        if key == "u_old" and isinstance(val, str):
            val = parse_u_old(val)
        out[key] = val
    return out


def _cmd_solve(args) -> int:
    config = parse_config(_flags_to_dict(args), args.config)
    if config.case.startswith("oned"):
        return _print_oned(config)
    summary = run_single(config)
    print_summary(summary)
    if config.plot_dir:
        from . import plots
        path = plots.solution_figure(summary, config.plot_dir)
        print(f"figure = {path}")
    return 0


def _cmd_converge(args) -> int:
    config = parse_config(_flags_to_dict(args), args.config)
    records = run_convergence(config)
    if not config.out:
        print(CSV_COLUMNS)
        for rec in records:
            print(format_csv_row(rec))
    else:
        print(f"csv = {config.out}")
    if config.plot_dir:
        from . import plots
        path = plots.convergence_figure(records, config.plot_dir, config.case)
        print(f"figure = {path}")
    return 0


def _print_oned(config: RunConfig) -> int:
    solution, reference = run_oned(config)
    print("cell solution reference")
    for j, (u, r) in enumerate(zip(solution, reference), start=1):
        print(f"{j} {u:.17g} {r:.17g}")
    return 0


def _cmd_oned(args, case: str) -> int:
    cfg = oned.OneDConfig(n=args.n, w=args.w, tau=args.tau, gamma=args.gamma,
                          u_old=args.u_old_value, eps=args.eps)
    if case == "oned_extended":
        solution = oned.solve_extended(cfg)
        reference = oned.extended_limit(cfg)
    else:
        solution = oned.solve_aligned(cfg)
        reference = oned.aligned_closed_form(cfg)
    print("cell solution reference")
    for j, (u, r) in enumerate(zip(solution, reference), start=1):
        print(f"{j} {u:.17g} {r:.17g}")
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="cutadvect",
        description="Unfitted DG advection step on an evolving level-set curve")
    sub = parser.add_subparsers(dest="command", required=True)

    p_solve = sub.add_parser("solve", help="run a single step")
    _add_common_flags(p_solve)

    p_conv = sub.add_parser("converge", help="h-refinement convergence study")
    _add_common_flags(p_conv)

    for name, case in (("oned-aligned", "oned_aligned"),
                       ("oned-extended", "oned_extended")):
        p = sub.add_parser(name, help=f"1D {case.split('_')[1]}-domain system")
        p.add_argument("--n", type=int, default=10, help="number of cells")
        p.add_argument("--w", type=float, default=1.0, help="speed")
        p.add_argument("--tau", type=float, default=0.5)
        p.add_argument("--gamma", type=float, default=0.5)
        p.add_argument("--u-old-value", dest="u_old_value", type=float, default=1.0)
        p.add_argument("--eps", type=float,
                       default=1e-10 if case == "oned_extended" else 0.0)
        p.set_defaults(oned_case=case)

    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        if args.command == "solve":
            return _cmd_solve(args)
        if args.command == "converge":
            return _cmd_converge(args)
        return _cmd_oned(args, args.oned_case)
    except (ValueError, RuntimeError, OSError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())
