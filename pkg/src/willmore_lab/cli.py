"""Command-line frontend: ``willmore-lab {analyze,invert,flatness,ends}``.

Every command writes UTF-8 files into ``--out`` and prints their paths.
Independent sub-computations run on a thread pool capped by ``--threads``;
results are gathered in submission order, so the files do not depend on
the worker count.

Exit codes: 0 success, 2 numerical non-convergence, 3 invalid input.
"""
from __future__ import annotations

import argparse
import math
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from pathlib import Path
from typing import Optional

import numpy as np

from . import catalog
from .catalog import CatalogEntry, as_charts
from .errors import CompactSource, InputError, NumericalError
from .flatness import PointSample, flatness_at, reports_to_csv, reports_to_json
from .inversion import (antisymmetry_check, density_formula_check, density_identity_check, fit_sphere,
                        invert)
from .measure import (DensityProfile, default_radii, density_ratio, extrapolate_density,
                      monotonicity_check, willmore_energy)
from .mesh import TriMesh, load_mesh
from .report import clean, to_csv, to_json
from .topology import count_ends, euler_genus, finite_topology_verdict

EXIT_OK, EXIT_NUMERICAL, EXIT_INPUT = 0, 2, 3
THREADS_ENV = "WILLMORE_LAB_THREADS"

# catalog parameters accepted as flags, with their builder keyword
_SURFACE_FLAGS = {
    "offset": "offset", "radius": "radius", "R": "R", "a": "a", "vmax": "vmax", "vmin": "vmin",
    "rmax": "rmax", "theta": "theta", "half_width": "half_width", "periods": "periods",
    "tube": "r", "ambient_dim": "ambient_dim",
}
_INT_PARAMS = {"periods", "ambient_dim"}


# ---------------------------------------------------------------- config handling


def read_config(path) -> dict:
    """Parse a flat ``key = value`` file; ``#`` starts a comment, keys may use dashes."""
    out = {}
    for lineno, raw in enumerate(Path(path).read_text(encoding="utf-8").splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise InputError(f"{path}:{lineno}: expected key=value, got {raw!r}")
        k, v = (s.strip() for s in line.split("=", 1))
        out[k.replace("-", "_")] = v
    return out


def _floats(text: str) -> list:
    try:
        return [float(t) for t in str(text).replace(";", ",").split(",") if t.strip()]
    except ValueError:
        raise InputError(f"expected comma-separated numbers, got {text!r}") from None


def _threads(value) -> int:
    if value is None:
        value = os.environ.get(THREADS_ENV, "1")
    try:
        n = int(value)
    except ValueError:
        raise InputError(f"thread count must be an integer, got {value!r}") from None
    if n < 1:
        raise InputError("thread count must be >= 1")
    return n


def _pmap(fn, items, threads: int) -> list:
    items = list(items)
    if threads <= 1 or len(items) <= 1:
        return [fn(x) for x in items]
    with ThreadPoolExecutor(max_workers=min(threads, len(items))) as ex:
        return list(ex.map(fn, items))


# ---------------------------------------------------------------- surfaces


def load_surface(args):
    """Catalog entry or :class:`TriMesh` selected by ``--surface``/``--mesh``."""
    if args.mesh:
        return load_mesh(args.mesh)
    if not args.surface:
        raise InputError("one of --surface or --mesh is required")
    params = {}
    for flag, key in _SURFACE_FLAGS.items():
        val = getattr(args, flag, None)
        if val is not None:
            params[key] = int(val) if key in _INT_PARAMS else float(val)
    for item in args.param or []:
        if "=" not in item:
            raise InputError(f"--param expects key=value, got {item!r}")
        k, v = item.split("=", 1)
        try:
            params[k.strip()] = int(v) if k.strip() in _INT_PARAMS else float(v)
        except ValueError:
            params[k.strip()] = v.strip()
    try:
        return catalog.get_surface(args.surface, **params)
    except (TypeError, ValueError) as exc:
        raise InputError(str(exc)) from None


def _point(text, n: int, surface=None) -> np.ndarray:
    if text is None:
        return np.zeros(n)
    if str(text) == "pole":
        if isinstance(surface, CatalogEntry) and surface.name == "sphere":
            c = np.asarray(surface.params.get("center", (0.0, 0.0, 0.0)), dtype=float)
            return c + np.array([0.0, 0.0, surface.params.get("R", 1.0)])
        raise InputError("'pole' is only defined for the sphere")
    x = np.asarray(_floats(text))
    if x.shape != (n,):
        raise InputError(f"expected {n} coordinates, got {text!r}")
    return x


def _ambient(surface) -> int:
    return surface.ambient_dim


# ---------------------------------------------------------------- output


class Output:
    def __init__(self, directory, fmt: str):
        self.dir = Path(directory)
        self.fmt = fmt
        self.written = []

    def write(self, stem: str, csv_text: Optional[str], obj) -> Path:
        """Write ``stem.csv`` or ``stem.json`` depending on the chosen format."""
        self.dir.mkdir(parents=True, exist_ok=True)
        if self.fmt == "csv" and csv_text is not None:
            path, text = self.dir / f"{stem}.csv", csv_text
        else:
            path, text = self.dir / f"{stem}.json", to_json(obj)
        path.write_text(text, encoding="utf-8")
        self.written.append(path)
        return path


_ERR_SUFFIXES = ("_err", "_error", "_uncertainty")


def quantity_rows(d: dict, prefix: str = "") -> list:
    """Flatten a report dict to ``(quantity, value, error)`` rows.

    The error of ``x`` is taken from a sibling ``x_err``/``x_error``/
    ``x_uncertainty``, from ``error``/``uncertainty`` for a lone value, and
    otherwise left empty (exact or discrete quantities).
    """
    d = clean(d)
    rows = []
    for k, v in d.items():
        if any(k.endswith(s) for s in _ERR_SUFFIXES) or k in ("error", "uncertainty"):
            continue
        name = f"{prefix}{k}"
        if isinstance(v, dict):
            rows += quantity_rows(v, name + ".")
            continue
        err = next((d[k + s] for s in _ERR_SUFFIXES if k + s in d), "")
        if err == "" and k in ("value", "theta"):
            err = d.get("error", d.get("uncertainty", ""))
        if isinstance(v, list):
            if v and all(isinstance(x, dict) for x in v):
                for i, x in enumerate(v):
                    rows += quantity_rows(x, f"{name}[{i}].")
                continue
            v = " ".join(str(x) for x in v)
        rows.append((name, v, err))
    return rows


def quantities_csv(d: dict) -> str:
    return to_csv(["quantity", "value", "error"], quantity_rows(d))


# ---------------------------------------------------------------- commands


def _radii(args, surface) -> np.ndarray:
    if args.radii:
        return np.asarray(_floats(args.radii))
    r_max = args.r_max
    if r_max is None:
        if surface.cutoff is None:
            raise InputError("--r-max is required for this surface")
        r_max = surface.cutoff / 4.0
    return default_radii(float(r_max), n=int(args.n_radii))


def _analyze_mesh(mesh: TriMesh, out: Output):
    w, werr = mesh.willmore_with_error()
    top = euler_genus(mesh)
    rows = [("willmore", w, werr), ("willmore_over_16pi", w / (16 * math.pi), werr / (16 * math.pi)),
            ("area", mesh.area(), 0.0), ("euler_characteristic", top["chi"], 0),
            ("genus", top["genus"], 0), ("boundary_loops", top["boundary_loops"], 0)]
    obj = {"rows": [{"quantity": q, "value": v, "error": e} for q, v, e in rows]}
    out.write("willmore", to_csv(["quantity", "value", "error"], rows), obj)


def cmd_analyze(args) -> int:
    surface = load_surface(args)
    out = Output(args.out, args.format or "csv")
    if isinstance(surface, TriMesh):
        _analyze_mesh(surface, out)
        return EXIT_OK
    n = _ambient(surface)
    x = _point(args.center, n, surface)
    radii = _radii(args, surface)
    if len(radii) < 2 or np.any(np.diff(radii) <= 0):
        raise InputError("radii must be increasing")
    rtol = float(args.rtol)
    threads = _threads(args.threads)
    if args.pairs:
        pairs = [tuple(_floats(p.replace(":", ","))) for p in str(args.pairs).split("/")]
    else:
        k = len(radii) // 2
        pairs = [(radii[0], radii[k]), (radii[k], radii[-1])]
    for p in pairs:
        if len(p) != 2:
            raise InputError("--pairs expects sigma:rho items separated by '/'")

    def task(t):
        kind, arg = t
        if kind == "ratio":
            return density_ratio(surface, x, float(arg), rtol=rtol, allow_truncation=True)
        if kind == "willmore":
            return willmore_energy(surface, rtol=rtol, allow_truncation=True)
        return monotonicity_check(surface, x, float(arg[0]), float(arg[1]), rtol=rtol, allow_truncation=True)

    tasks = [("ratio", r) for r in radii] + [("willmore", None)] + [("mono", p) for p in pairs]
    res = _pmap(task, tasks, threads)
    m = len(radii)
    th = np.array([float(r.value) for r in res[:m]])
    er = np.array([float(r.error_estimate) for r in res[:m]])
    ex = extrapolate_density(radii, th, er) if m >= 3 else {
        "theta_infinity": th[-1], "uncertainty": er[-1], "theta_star_lower": th.min(), "theta_star_upper": th.max()}
    prof = DensityProfile(tuple(map(float, x)), radii, th, er, float(ex["theta_infinity"]),
                          float(ex["uncertainty"]), float(ex["theta_star_lower"]), float(ex["theta_star_upper"]),
                          {k: v for k, v in ex.items() if np.isscalar(v)}, surface=surface.name,
                          cutoff=surface.cutoff)
    out.write("density_profile", prof.to_csv(), prof.to_dict())
    W = res[m]
    wrows = [("willmore", float(W.value), float(W.error_estimate)),
             ("theta_infinity", prof.theta_infinity, prof.theta_infinity_err)]
    out.write("willmore", to_csv(["quantity", "value", "error"], wrows),
              {"rows": [{"quantity": q, "value": v, "error": e} for q, v, e in wrows]})
    ledgers = res[m + 1:]
    mrows = [(lg.sigma, lg.rho, t, v, e) for lg in ledgers for t, v, e in lg.rows()]
    out.write("monotonicity", to_csv(["sigma", "rho", "term", "value", "error"], mrows),
              [lg.to_dict() for lg in ledgers])
    return EXIT_OK


def cmd_invert(args) -> int:
    surface = load_surface(args)
    if isinstance(surface, TriMesh):
        raise InputError("invert needs an analytic surface (--surface)")
    out = Output(args.out, args.format or "json")
    n = _ambient(surface)
    x0 = _point(args.base, n, surface)
    threads = _threads(args.threads)
    # raises BasePointOnSurface before any work is scheduled
    inv = invert(surface, x0)
    chart0 = as_charts(surface)[0]

    def task(kind):
        if kind == "antisymmetry":
            return antisymmetry_check(chart0, x0, n=int(args.samples), seed=int(args.seed))
        if kind == "formula":
            return density_formula_check(surface, x0)
        if kind == "identity":
            try:
                return density_identity_check(surface, x0, sigma0=float(args.sigma0))
            except CompactSource as exc:
                return {"skipped": str(exc)}
        if kind == "sphere":
            ich = as_charts(inv)[0]
            (a0, a1), (b0, b1) = ich.domain
            # radial parameter on a log scale so the whole image is represented
            U, V = np.meshgrid(a0 + (a1 - a0) * np.geomspace(1e-4, 0.95, 24),
                               b0 + (b1 - b0) * np.linspace(0.02, 0.98, 24), indexing="ij")
            c, r, resid = fit_sphere(ich.evaluate(U.ravel(), V.ravel()))
            return {"center": c, "radius": r, "residual": resid, "residual_error": 0.0}

    kinds = ["antisymmetry", "formula", "identity"] + (["sphere"] if surface.name == "plane" else [])
    res = dict(zip(kinds, _pmap(task, kinds, threads)))
    anti = res["antisymmetry"]
    out.write("antisymmetry", anti.to_csv(),
              {"max_relative": anti.max_relative, "mean_relative": anti.mean_relative,
               "rows": [dict(zip(["u", "v", "L", "R", "residual", "relative_residual"], r))
                        for r in zip(anti.u, anti.v, anti.L, anti.R, anti.residual, anti.relative_residual)]})
    fd = res["formula"].to_dict()
    out.write("density_formula", quantities_csv(fd), fd)
    ident = res["identity"]
    idd = ident if isinstance(ident, dict) else ident.to_dict()
    out.write("density_identity", quantities_csv(idd), idd)
    if "sphere" in res:
        out.write("sphere_fit", quantities_csv(res["sphere"]), res["sphere"])
    return EXIT_OK


def cmd_flatness(args) -> int:
    surface = load_surface(args)
    out = Output(args.out, args.format or "csv")
    n = _ambient(surface)
    centers = [_point(c, n, surface) for c in (args.xi or "0," * (n - 1) + "0").split("/")]
    scales = _floats(args.scales)
    if not scales or min(scales) <= 0:
        raise InputError("--scales must be positive numbers")
    ratio = float(args.spacing_ratio)
    threads = _threads(args.threads)
    if isinstance(surface, TriMesh):
        sample = PointSample(surface.vertices, surface.cotan_laplacian()[1])

        def task(cs):
            return flatness_at(sample, cs[0], cs[1])
    else:
        def task(cs):
            c, s = cs
            smp = PointSample.from_surface(surface, center=c, radius=1.25 * s, spacing=ratio * s)
            return flatness_at(smp, c, s)

    reports = _pmap(task, [(c, s) for c in centers for s in scales], threads)
    out.write("flatness", reports_to_csv(reports), [r.to_dict() for r in reports])
    return EXIT_OK


def cmd_ends(args) -> int:
    surface = load_surface(args)
    out = Output(args.out, args.format or "json")
    n = _ambient(surface)
    c = _point(args.center, n, surface)
    radii = np.asarray(_floats(args.radii)) if args.radii else None
    if isinstance(surface, TriMesh):
        top = euler_genus(surface)
        mesh = TriMesh(surface.vertices, surface.faces, cutoff_flags=surface.boundary_flags)
        if np.any(mesh.cutoff_flags):
            dec = count_ends(mesh, radii, c, per_end_density=False)
            obj = {"e": dec.ends, "counts": dec.to_dict(), "topology": top}
        else:
            obj = {"e": 0, "topology": top}
        out.write("ends", quantities_csv(obj), obj)
        return EXIT_OK
    v = finite_topology_verdict(surface, c, radii=radii, ilmanen=not args.no_ilmanen)
    d = v.to_dict()
    flat = dict(d)
    flat["theta_inf_uncertainty"] = flat.pop("theta_uncertainty")
    if (args.format or "json") == "csv":
        rows = [(i, p["theta"], p["uncertainty"]) for i, p in enumerate(v.per_end)]
        out.write("ends_per_end", to_csv(["end", "theta", "theta_err"], rows), None)
    out.write("verdict", quantities_csv(flat), d)
    return EXIT_OK


# ---------------------------------------------------------------- parser


def _common(p: argparse.ArgumentParser, analytic_only=False):
    g = p.add_argument_group("run")
    g.add_argument("--config", help="flat key=value file; command-line flags take precedence")
    g.add_argument("--threads", default=None, help=f"worker cap (fallback: ${THREADS_ENV}, then 1)")
    g.add_argument("--seed", default=0, type=int, help="seed for randomized sampling")
    g.add_argument("--format", choices=("csv", "json"), default=None)
    g.add_argument("--out", default=".", help="output directory")
    g.add_argument("--rtol", default=1e-8, type=float)
    s = p.add_argument_group("surface")
    s.add_argument("--surface", help="catalog name: plane, sphere, catenoid, enneper, scherk, torus")
    if not analytic_only:
        s.add_argument("--mesh", help="OBJ/OFF mesh file")
    for flag in _SURFACE_FLAGS:
        s.add_argument("--" + flag.replace("_", "-"), dest=flag, default=None)
    s.add_argument("--param", action="append", help="extra catalog parameter key=value")


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="willmore-lab", description=__doc__.splitlines()[0])
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("analyze", help="density profile, Willmore energy, monotonicity ledger")
    _common(p)
    p.add_argument("--center", default=None, help="comma-separated coordinates (default origin)")
    p.add_argument("--r-max", dest="r_max", type=float, default=None)
    p.add_argument("--n-radii", dest="n_radii", type=int, default=7)
    p.add_argument("--radii", default=None, help="explicit comma-separated radii")
    p.add_argument("--pairs", default=None, help="monotonicity pairs sigma:rho separated by '/'")
    p.set_defaults(func=cmd_analyze)

    p = sub.add_parser("invert", help="inversion reports about a base point")
    _common(p, analytic_only=True)
    p.set_defaults(mesh=None)
    p.add_argument("--base", default=None, help="comma-separated base point (default origin)")
    p.add_argument("--samples", type=int, default=100)
    p.add_argument("--sigma0", type=float, default=0.02)
    p.set_defaults(func=cmd_invert)

    p = sub.add_parser("flatness", help="Reifenberg flatness table")
    _common(p)
    p.add_argument("--xi", default=None, help="centre(s) as x,y,z separated by '/', or 'pole'")
    p.add_argument("--scales", default="0.05,0.1,0.2")
    p.add_argument("--spacing-ratio", dest="spacing_ratio", type=float, default=0.02)
    p.set_defaults(func=cmd_flatness)

    p = sub.add_parser("ends", help="end count and finite-topology verdict")
    _common(p)
    p.add_argument("--center", default=None)
    p.add_argument("--radii", default=None)
    p.add_argument("--no-ilmanen", dest="no_ilmanen", action="store_true")
    p.set_defaults(func=cmd_ends)
    return ap


def parse_args(argv=None):
    ap = build_parser()
    args = ap.parse_args(argv)
    if args.config:
        cfg = read_config(args.config)
        sp = ap._subparsers._group_actions[0].choices[args.command]
        known = {a.dest for a in sp._actions}
        unknown = sorted(set(cfg) - known)
        if unknown:
            raise InputError(f"unknown config keys: {', '.join(unknown)}")
        for a in sp._actions:
            if a.dest in cfg and a.const is not None and a.nargs == 0:
                cfg[a.dest] = cfg[a.dest].lower() in ("1", "true", "yes", "on")
        sp.set_defaults(**cfg)
        args = ap.parse_args(argv)
    return args


def main(argv=None) -> int:
    try:
        args = parse_args(argv)
        out_dir = Path(args.out)
        before = set(out_dir.glob("*")) if out_dir.exists() else set()
        code = args.func(args)
        for path in sorted(set(out_dir.glob("*")) - before):
            print(path)
    except InputError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_INPUT
    except NumericalError as exc:
        print(f"error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_NUMERICAL
    except (OSError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INPUT
    return code


if __name__ == "__main__":
    sys.exit(main())
