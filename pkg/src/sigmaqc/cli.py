"""Command line runner: ``run``, ``cases`` and ``export``.

Configuration is an INI file::

    [case]
    name = laminate
    a1 = 2
    a2 = 0.5
    ; sigma_table = sigma.csv   (optional per-cell coefficient table)

    [grid]
    sizes = 32, 64, 128

    [analysis]
    p = 2
    max_level = 4
    ; delta = 0.5
    ; subregion = 0.25, 0.75, 0.25, 0.75

    [checks]
    d_sigma_const = 0.02

    [output]
    dir = out
    fields = d_sigma, w1

Each check compares a measured deviation against its tolerance and passes
when measured <= tolerance on every grid size.
"""

from __future__ import annotations

import argparse
import configparser
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import tables
from .analysis import default_delta, global_checks
from .cases import CASES, CaseBundle, make_case
from .coeff import EllipticityError, SigmaField, make_sigma_field
from .conjugate import beltrami_coefficients, beltrami_residual, stream_function
from .dilatation import dilatation_fields, drift_constant, map_differential, w_fields
from .mesh import Grid
from .solve import SolverError, dual_residual, weak_residual

log = logging.getLogger(__name__)

CHECKS = ("d_sigma_const", "d_sigma_oracle", "w_oracle", "det_oracle", "decomposition",
          "drift_bound", "area_identity", "energy_bound", "harnack", "solve_residual",
          "beltrami_residual", "ellipticity_bound", "drift_residual")
FIELDS = ("u1", "u2", "u_tilde", "det", "d", "d_sigma", "w1", "w2", "B1", "B2", "sigma", "mu_nu")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    case: str
    params: dict
    sizes: list
    p: float = 2.0
    delta: float | None = None
    max_level: int = 4
    subregion: tuple | None = None
    checks: dict = field(default_factory=dict)
    out_dir: Path | None = None
    fields: list = field(default_factory=list)
    sigma_table: Path | None = None


def _floats(text: str) -> list[float]:
    return [float(t) for t in text.replace(",", " ").split()]


def load_config(path) -> RunConfig:
    path = Path(path)
    cp = configparser.ConfigParser(inline_comment_prefixes=(";", "#"))
    try:
        with path.open() as fh:
            cp.read_file(fh)
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    except configparser.Error as exc:
        raise ConfigError(f"malformed config {path}: {exc}") from exc
    try:
        if "case" not in cp or "name" not in cp["case"]:
            raise ConfigError("missing [case] name")
        params = dict(cp["case"])
        name = params.pop("name").strip()
        table = params.pop("sigma_table", None)
        if name not in CASES:
            raise ConfigError(f"unknown case {name!r}; known: {', '.join(CASES)}")
        params = {k: (v.strip() if k == "topology" else float(v)) for k, v in params.items()}

        sizes = [int(float(s)) for s in _floats(cp.get("grid", "sizes", fallback="64"))]
        if not sizes or any(b <= a for a, b in zip(sizes, sizes[1:])):
            raise ConfigError("grid sizes must be strictly increasing")

        an = cp["analysis"] if "analysis" in cp else {}
        sub = an.get("subregion")
        subregion = tuple(_floats(sub)) if sub else None
        if subregion is not None and len(subregion) != 4:
            raise ConfigError("subregion needs four numbers x0, x1, y0, y1")
        delta = an.get("delta")

        checks = {}
        for k, v in (cp["checks"].items() if "checks" in cp else []):
            if k not in CHECKS:
                raise ConfigError(f"unknown check {k!r}; known: {', '.join(CHECKS)}")
            tol = float(v)
            if not tol >= 0:
                raise ConfigError(f"tolerance of {k} must be non-negative")
            checks[k] = tol

        out = cp["output"] if "output" in cp else {}
        fields = [f.strip() for f in out.get("fields", "").replace(",", " ").split()]
        bad = [f for f in fields if f not in FIELDS]
        if bad:
            raise ConfigError(f"unknown field(s) {', '.join(bad)}; known: {', '.join(FIELDS)}")
        out_dir = out.get("dir")
        return RunConfig(
            case=name, params=params, sizes=sizes,
            p=float(an.get("p", 2.0)), delta=float(delta) if delta else None,
            max_level=int(an.get("max_level", 4)), subregion=subregion, checks=checks,
            out_dir=(path.parent / out_dir) if out_dir else None, fields=fields,
            sigma_table=(path.parent / table.strip()) if table else None)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(f"bad value in {path}: {exc}") from exc


@dataclass
class GridResult:
    n: int
    grid: Grid
    values: dict            # flat key -> number, report order
    measured: dict          # check name -> measured deviation (nan if not applicable)
    fields: dict            # export name -> (kind, payload)


def _sigma(case: CaseBundle, grid, cfg: RunConfig) -> SigmaField:
    if cfg.sigma_table is None:
        return case.sigma_field(grid)
    return make_sigma_field(tables.read_sigma_table(cfg.sigma_table, grid))


def _rel(a, b) -> float:
    scale = float(np.max(np.abs(b)))
    return float(np.max(np.abs(a - b)) / scale) if scale > 0 else float(np.max(np.abs(a - b)))


def evaluate(case: CaseBundle, n: int, cfg: RunConfig) -> GridResult:
    """case -> solve -> conjugate -> dilatation -> analysis on one n x n grid."""
    grid = case.grid(n)
    sigma = _sigma(case, grid, cfg)
    if cfg.sigma_table is not None and case.analytic:
        raise ConfigError("a coefficient table cannot be combined with an analytic case")
    U = case.map_field(grid, sigma)
    rep = dilatation_fields(U, sigma, cfg.subregion)
    ana = global_checks(U, sigma, p=cfg.p, delta=cfg.delta, max_level=cfg.max_level,
                        subregion=cfg.subregion)
    belt = beltrami_coefficients(sigma)
    pair = stream_function(sigma, U.u1) if not case.analytic else None
    diff = map_differential(U)
    ok = rep.valid
    cx, cy = grid.cell_centers()

    v = {"n": n, "alpha": sigma.alpha, "beta": sigma.beta, "K": sigma.K, "E": sigma.E}
    v.update({f"dilatation.{k}": x for k, x in rep.summary().items()})
    ds = rep.d_sigma.values[ok]
    v["dilatation.mean_d_sigma"] = float(ds.mean())
    v.update({f"analysis.{k}": x for k, x in ana.summary().items()})
    v["beltrami.k_ess"] = belt.k_ess
    v["beltrami.K_belt"] = belt.K_belt

    m = {c: math.nan for c in CHECKS}
    m["d_sigma_const"] = float((ds.max() - ds.min()) / ds.min())
    m["decomposition"] = rep.identity_residual
    bound = drift_constant(sigma.alpha, sigma.beta) * sigma.E
    bmax = max(float(rep.B1.norm().max()), float(rep.B2.norm().max()))
    v["drift.max_B"], v["drift.bound"] = bmax, bound
    m["drift_bound"] = max(bmax - bound, 0.0)
    m["harnack"] = ana.harnack_H - 1.0
    m["ellipticity_bound"] = max(belt.k_ess - (sigma.K - 1) / (sigma.K + 1), 0.0)
    if grid.periodic:
        m["area_identity"] = abs(ana.area_integral - 1.0)
        m["energy_bound"] = max(ana.energy_sigma - ana.trace_integral, 0.0)
    if not case.analytic:
        m["solve_residual"] = max(weak_residual(sigma, U.u1), weak_residual(sigma, U.u2))
        m["beltrami_residual"] = beltrami_residual(pair, belt)
        v["conjugate.mismatch"] = pair.mismatch
    weak, dual = [], []
    for w, B in ((rep.w1, rep.B1), (rep.w2, rep.B2)):
        wn = w.to_nodes()
        weak.append(weak_residual(sigma, wn, B))
        dual.append(dual_residual(sigma, wn, B))
    m["drift_residual"] = max(weak)
    v["drift_equation.weak_residual"], v["drift_equation.dual_residual"] = max(weak), max(dual)

    if case.exact_du_fn is not None and cfg.sigma_table is None:
        du_ex = np.broadcast_to(case.exact_du_fn(cx, cy), (*grid.cell_shape, 2, 2))
        s = sigma.values
        det_ex = du_ex[..., 0, 0] * du_ex[..., 1, 1] - du_ex[..., 0, 1] * du_ex[..., 1, 0]
        m["det_oracle"] = _rel(diff.det[ok], det_ex[ok])
        w1e, w2e = w_fields(du_ex, s)
        m["w_oracle"] = max(_rel(rep.w1.values[ok], w1e[ok]), _rel(rep.w2.values[ok], w2e[ok]))
        if case.d_sigma_fn is not None:
            m["d_sigma_oracle"] = _rel(ds, case.d_sigma_fn(cx, cy)[ok])
    for key in ("d_sigma", "w1", "w2", "energy", "area", "ap_p2"):
        if key in case.oracle and cfg.sigma_table is None:
            exp = case.oracle[key]
            got = {"d_sigma": v["dilatation.mean_d_sigma"],
                   "w1": float(rep.w1.values[ok].mean()), "w2": float(rep.w2.values[ok].mean()),
                   "energy": ana.energy_sigma, "area": ana.area_integral,
                   "ap_p2": ana.ap_scan.get(2.0, math.nan)}[key]
            v[f"oracle.{key}.expected"] = exp
            v[f"oracle.{key}.measured"] = got
            v[f"oracle.{key}.rel_error"] = abs(got - exp) / abs(exp) if exp else abs(got)
    for c, x in m.items():
        v[f"measured.{c}"] = x

    mu, nu = belt.mu, belt.nu
    flds = {
        "u1": ("node", U.u1), "u2": ("node", U.u2),
        "det": ("cell", {"det": diff.det}), "d": ("cell", {"d": rep.d.values}),
        "d_sigma": ("cell", {"d_sigma": rep.d_sigma.values}),
        "w1": ("cell", {"w1": rep.w1.values}), "w2": ("cell", {"w2": rep.w2.values}),
        "B1": ("cell", {"bx": rep.B1.values[..., 0], "by": rep.B1.values[..., 1]}),
        "B2": ("cell", {"bx": rep.B2.values[..., 0], "by": rep.B2.values[..., 1]}),
        "sigma": ("cell", {"s11": sigma.values[..., 0, 0], "s12": sigma.values[..., 0, 1],
                           "s21": sigma.values[..., 1, 0], "s22": sigma.values[..., 1, 1]}),
        "mu_nu": ("cell", {"mu_re": mu.real, "mu_im": mu.imag, "nu_re": nu.real, "nu_im": nu.imag}),
    }
    if pair is not None:
        flds["u_tilde"] = ("node", pair.u_tilde)
    return GridResult(n, grid, v, m, flds)


def _num(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "true" if x else "false"
    if isinstance(x, str):
        return x
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    return format(float(x), ".12g")


def write_field(result: GridResult, name: str, out_dir: Path) -> Path:
    if name not in result.fields:
        raise ConfigError(f"field {name!r} is not available for this case")
    kind, payload = result.fields[name]
    path = out_dir / f"{name}_{result.n}.csv"
    if kind == "node":
        tables.node_table(payload, path)
    else:
        tables.cell_table(result.grid, payload, path)
    return path


def run(cfg: RunConfig, out_dir: Path) -> tuple[str, list]:
    """Execute the pipeline and return (report text, failed checks)."""
    case = make_case(cfg.case, cfg.params)
    results = [evaluate(case, n, cfg) for n in cfg.sizes]

    lines = ["[run]", f"case = {cfg.case}",
             "params = " + ", ".join(f"{k}={_num(v)}" for k, v in sorted(case.params.items())),
             "sizes = " + ", ".join(str(n) for n in cfg.sizes),
             f"topology = {case.topology}", f"p = {_num(cfg.p)}",
             f"delta = {_num(cfg.delta if cfg.delta is not None else default_delta(cfg.p))}",
             f"max_level = {cfg.max_level}"]
    for r in results:
        lines += ["", f"[grid {r.n}]"] + [f"{k} = {_num(x)}" for k, x in r.values.items()]

    failed, na = [], []
    lines += ["", "[checks]"]
    for c, tol in cfg.checks.items():
        vals = [r.measured[c] for r in results]
        if all(math.isnan(x) for x in vals):
            na.append(c)
            lines.append(f"{c} = n/a (tol {_num(tol)})")
            continue
        worst = max(x for x in vals if not math.isnan(x))
        ok = worst <= tol
        if not ok:
            failed.append((c, worst, tol))
        lines.append(f"{c} = {'pass' if ok else 'fail'} (measured {_num(worst)}, tol {_num(tol)})")
    if na:
        failed += [(c, math.nan, cfg.checks[c]) for c in na]
    lines += ["", "[status]", f"result = {'fail' if failed else 'pass'}"]
    report = "\n".join(lines) + "\n"

    out_dir.mkdir(parents=True, exist_ok=True)
    (out_dir / "report.txt").write_text(report)
    for r in results:
        for f in cfg.fields:
            write_field(r, f, out_dir)
    return report, failed


def _cmd_run(args) -> int:
    cfg = load_config(args.config)
    out = Path(args.out) if args.out else (cfg.out_dir or Path("out"))
    report, failed = run(cfg, out)
    print(f"report written to {out / 'report.txt'}")
    if failed:
        for c, x, tol in failed:
            why = "not applicable to this case" if math.isnan(x) else f"measured {_num(x)} > tol {_num(tol)}"
            print(f"FAILED {c}: {why}")
        return 1
    print("all checks passed")
    return 0


def _cmd_cases(args) -> int:
    for name in CASES:
        c = make_case(name)
        params = ", ".join(f"{k}={_num(v)}" for k, v in sorted(c.params.items()))
        print(f"{name}: {c.description} [{params}]")
    return 0


def _cmd_export(args) -> int:
    cfg = load_config(args.config)
    if args.field not in FIELDS:
        raise ConfigError(f"unknown field {args.field!r}; known: {', '.join(FIELDS)}")
    out = Path(args.out) if args.out else (cfg.out_dir or Path("out"))
    out.mkdir(parents=True, exist_ok=True)
    case = make_case(cfg.case, cfg.params)
    for n in cfg.sizes:
        print(write_field(evaluate(case, n, cfg), args.field, out))
    return 0


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="sigmaqc", description="sigma-harmonic map experiments")
    sub = ap.add_subparsers(dest="command", required=True)
    r = sub.add_parser("run", help="run the pipeline and enforce checks")
    r.add_argument("--config", required=True)
    r.add_argument("--out")
    r.set_defaults(func=_cmd_run)
    c = sub.add_parser("cases", help="list built-in cases")
    c.set_defaults(func=_cmd_cases)
    e = sub.add_parser("export", help="write one field table per grid size")
    e.add_argument("--config", required=True)
    e.add_argument("--field", required=True)
    e.add_argument("--out")
    e.set_defaults(func=_cmd_export)
    return ap


def main(argv=None) -> int:
    logging.basicConfig(level=logging.WARNING, format="%(levelname)s %(name)s: %(message)s")
    args = build_parser().parse_args(argv)
    try:
        return args.func(args)
    except (ConfigError, EllipticityError, SolverError, OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())
