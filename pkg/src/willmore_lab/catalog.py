"""Catalog of immersed surfaces with exact derivatives.

Every entry is built from sympy expressions; the first and second
derivatives are differentiated symbolically and compiled to numpy, so the
charts carry an exact 2-jet.  Non-compact surfaces are truncated by a
parameter cutoff that is recorded on the chart (``cutoff_edges``) and in
:attr:`CatalogEntry.cutoff`.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
import sympy as sp

from .chart import SurfaceChart
from .quadrature import Band

u_, v_ = sp.symbols("u v", real=True)


_MODULES = [{"asinh": np.arcsinh, "acosh": np.arccosh, "asin": np.arcsin}, "numpy"]


def _compile(exprs):
    """Compile a flat list of expressions into ``call(u, v) -> (..., len(exprs))``."""
    n = len(exprs)
    fn = sp.lambdify((u_, v_), exprs, modules=_MODULES, cse=True)

    def call(u, v):
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        shape = np.broadcast(u, v).shape
        out = np.empty(shape + (n,))
        for i, c in enumerate(fn(u, v)):
            out[..., i] = c
        return out

    return call


def symbolic_chart(exprs, domain, name="chart", **kw) -> SurfaceChart:
    """Build a chart from sympy expressions in the symbols ``u`` and ``v``."""
    exprs = [sp.sympify(e) for e in exprs]
    n = len(exprs)
    fu = [sp.diff(e, u_) for e in exprs]
    fv = [sp.diff(e, v_) for e in exprs]
    fuu = [sp.diff(e, u_, 2) for e in exprs]
    fuv = [sp.diff(e, u_, v_) for e in exprs]
    fvv = [sp.diff(e, v_, 2) for e in exprs]
    f_c = _compile(exprs)
    all_c = _compile(exprs + fu + fv + fuu + fuv + fvv)

    def jet(u, v):
        J = all_c(u, v)
        return tuple(J[..., k * n:(k + 1) * n] for k in range(6))

    return SurfaceChart(func=f_c, domain=domain, jet_func=jet, name=name, **kw)


@dataclass(frozen=True)
class CatalogEntry:
    """A catalog surface: one or more charts plus analytically known values."""

    name: str
    charts: tuple
    params: dict = field(default_factory=dict)
    known_values: dict = field(default_factory=dict)
    cutoff: Optional[float] = None

    @property
    def ambient_dim(self) -> int:
        return self.charts[0].ambient_dim

    def __iter__(self):
        return iter(self.charts)

    def __len__(self):
        return len(self.charts)


def _pad(exprs, ambient_dim):
    exprs = list(exprs)
    if ambient_dim < len(exprs):
        raise ValueError("ambient dimension too small for this surface")
    return exprs + [sp.Integer(0)] * (ambient_dim - len(exprs))


def plane(offset: float = 0.0, radius: float = 1.0e4, ambient_dim: int = 3) -> CatalogEntry:
    """The plane ``{x3 = offset}`` as a polar disk of the given radius."""
    d = sp.Float(offset)
    exprs = _pad([u_ * sp.cos(v_), u_ * sp.sin(v_), d], ambient_dim)
    ch = symbolic_chart(exprs, ((0.0, radius), (0.0, 2 * math.pi)), name="plane",
                        periodic=(False, True), cutoff_edges=("u1",))
    return CatalogEntry("plane", (ch,), {"offset": offset, "radius": radius},
                        {"theta_infinity": 1.0, "ends": 1, "willmore": 0.0, "total_curvature": 0.0,
                         "genus": 0}, cutoff=radius)


def plane_patch(bounds=((0.0, 1.0), (0.0, 1.0)), ambient_dim: int = 3) -> CatalogEntry:
    """A rectangular piece of the coordinate plane, ``f(u, v) = (u, v, 0)``."""
    ch = symbolic_chart(_pad([u_, v_, sp.Integer(0)], ambient_dim), bounds, name="plane_patch")
    return CatalogEntry("plane_patch", (ch,), {"bounds": bounds})


def sphere(R: float = 1.0, center=(0.0, 0.0, 0.0)) -> CatalogEntry:
    """Round sphere; ``u`` is the polar angle and ``v`` the azimuth."""
    c = [sp.Float(a) for a in center]
    Rs = sp.Float(R)
    exprs = [c[0] + Rs * sp.sin(u_) * sp.cos(v_), c[1] + Rs * sp.sin(u_) * sp.sin(v_),
             c[2] + Rs * sp.cos(u_)] + c[3:]
    ch = symbolic_chart(exprs, ((0.0, math.pi), (0.0, 2 * math.pi)), name="sphere",
                        periodic=(False, True))
    return CatalogEntry("sphere", (ch,), {"R": R, "center": tuple(center)},
                        {"theta_infinity": 0.0, "willmore": 16 * math.pi, "area": 4 * math.pi * R * R,
                         "total_curvature": 8 * math.pi, "genus": 0, "ends": 0})


def catenoid(a: float = 1.0, vmax: float = 9.0, vmin: Optional[float] = None,
             ambient_dim: int = 3) -> CatalogEntry:
    """Catenoid ``x1^2 + x2^2 = a^2 cosh^2(x3/a)``, ``v`` in ``[vmin, vmax]``.

    ``vmin`` defaults to ``-vmax``; pass e.g. ``vmin=1`` for a single end.
    """
    if vmin is None:
        vmin = -vmax
    A = sp.Float(a)
    exprs = _pad([A * sp.cosh(v_ / A) * sp.cos(u_), A * sp.cosh(v_ / A) * sp.sin(u_), v_], ambient_dim)
    cut = ("v1",) if vmin >= 0 else ("v0", "v1")
    ch = symbolic_chart(exprs, ((0.0, 2 * math.pi), (vmin, vmax)), name="catenoid",
                        periodic=(True, False), cutoff_edges=cut)
    two_ends = vmin < 0
    known = {"theta_infinity": 2.0 if two_ends else 1.0, "ends": 2 if two_ends else 1,
             "willmore": 0.0, "genus": 0}
    if two_ends:
        known["total_curvature"] = 8 * math.pi
    return CatalogEntry("catenoid", (ch,), {"a": a, "vmax": vmax, "vmin": vmin}, known,
                        cutoff=a * math.cosh(vmax / a))


def enneper(rmax: float = 20.0) -> CatalogEntry:
    """Enneper's surface on the polar disk ``r <= rmax`` of its parameter plane."""
    x = u_ * sp.cos(v_)
    y = u_ * sp.sin(v_)
    exprs = [x - x**3 / 3 + x * y**2, -y + y**3 / 3 - x**2 * y, x**2 - y**2]
    exprs = [sp.expand(e) for e in exprs]
    ch = symbolic_chart(exprs, ((0.0, rmax), (0.0, 2 * math.pi)), name="enneper",
                        periodic=(False, True), cutoff_edges=("u1",))
    # |f| grows like r^3/3 along the cutoff circle
    cut = rmax * (1 + rmax**2 / 3) * 0.999
    return CatalogEntry("enneper", (ch,), {"rmax": rmax},
                        {"theta_infinity": 3.0, "ends": 1, "willmore": 0.0,
                         "total_curvature": 8 * math.pi, "genus": 0}, cutoff=cut)


SCHERK_CORE = 0.8  # sinh(c)^2 < 1 keeps the core sheets graphical


def scherk(theta: float = math.pi / 2, half_width: float = 40.0, periods: int = 6) -> CatalogEntry:
    """Scherk's singly periodic surface ``sin z = sinh x sinh y``.

    The box ``|x|, |y| <= half_width``, ``|z| <= pi/2 + 2 pi periods`` is
    split into four wing graphs (over the ``xz`` and ``yz`` planes) and a
    stack of graphical core sheets over ``|x|, |y| < c``.
    """
    if abs(theta - math.pi / 2) > 1e-12:
        raise ValueError("only the symmetric member theta = pi/2 of Karcher's family is available")
    c = SCHERK_CORE
    L = float(half_width)
    Z = math.pi / 2 + 2 * math.pi * periods
    charts = []
    wing_x = sp.asinh(sp.sin(v_) / sp.sinh(u_))
    charts.append(symbolic_chart([u_, wing_x, v_], ((c, L), (-Z, Z)), name="scherk_x+",
                                 cutoff_edges=("u1", "v0", "v1")))
    charts.append(symbolic_chart([u_, wing_x, v_], ((-L, -c), (-Z, Z)), name="scherk_x-",
                                 cutoff_edges=("u0", "v0", "v1")))
    keep_core_out = (Band(point=(0.0, 0.0, 0.0), directions=((1.0, 0.0, 0.0),), halfwidth=c),)
    charts.append(symbolic_chart([wing_x, u_, v_], ((c, L), (-Z, Z)), name="scherk_y+",
                                 cutoff_edges=("u1", "v0", "v1"), constraints=keep_core_out))
    charts.append(symbolic_chart([wing_x, u_, v_], ((-L, -c), (-Z, Z)), name="scherk_y-",
                                 cutoff_edges=("u0", "v0", "v1"), constraints=keep_core_out))
    s = sp.sinh(u_) * sp.sinh(v_)
    for k in range(-periods, periods + 1):
        charts.append(symbolic_chart([u_, v_, sp.asin(s) + 2 * sp.pi * k], ((-c, c), (-c, c)),
                                     name=f"scherk_core_a{k}"))
    for k in range(-periods, periods):
        charts.append(symbolic_chart([u_, v_, sp.pi - sp.asin(s) + 2 * sp.pi * k], ((-c, c), (-c, c)),
                                     name=f"scherk_core_b{k}"))
    return CatalogEntry("scherk", tuple(charts), {"theta": theta, "half_width": L, "periods": periods},
                        {"theta_infinity": 2.0, "ends": 1, "willmore": 0.0}, cutoff=min(L, Z))


def graph(phi, domain=((-1.0, 1.0), (-1.0, 1.0)), polar: bool = False, name: str = "graph",
          cutoff_edges=()) -> CatalogEntry:
    """Graph of a height function ``phi(x, y)`` given as a sympy expression or callable.

    With ``polar=True`` the domain is ``(r, angle)`` and ``phi`` is still a
    function of the Cartesian ``x, y``.
    """
    x, y = sp.symbols("x y", real=True)
    expr = phi(x, y) if callable(phi) else sp.sympify(phi, locals={"x": x, "y": y})
    if polar:
        X, Y = u_ * sp.cos(v_), u_ * sp.sin(v_)
        periodic = (False, True)
    else:
        X, Y = u_, v_
        periodic = (False, False)
    z = expr.subs({x: X, y: Y}, simultaneous=True)
    ch = symbolic_chart([X, Y, z], domain, name=name, periodic=periodic, cutoff_edges=tuple(cutoff_edges))
    return CatalogEntry(name, (ch,), {"phi": str(expr), "polar": polar})


def torus(R: float = 2.0, r: float = 1.0, ambient_dim: int = 4) -> CatalogEntry:
    """Torus of revolution in R^3, or the product of circles ``S^1(R) x S^1(r)`` in R^4."""
    Rs, rs = sp.Float(R), sp.Float(r)
    if ambient_dim == 4:
        exprs = [Rs * sp.cos(u_), Rs * sp.sin(u_), rs * sp.cos(v_), rs * sp.sin(v_)]
        known = {"willmore": 4 * math.pi**2 * R * r * (1 / R**2 + 1 / r**2), "genus": 1,
                 "area": 4 * math.pi**2 * R * r}
    elif ambient_dim == 3:
        exprs = [(Rs + rs * sp.cos(v_)) * sp.cos(u_), (Rs + rs * sp.cos(v_)) * sp.sin(u_), rs * sp.sin(v_)]
        known = {"area": 4 * math.pi**2 * R * r, "genus": 1}
    else:
        raise ValueError("torus is available in R^3 and R^4")
    ch = symbolic_chart(exprs, ((0.0, 2 * math.pi), (0.0, 2 * math.pi)), name="torus", periodic=(True, True))
    return CatalogEntry("torus", (ch,), {"R": R, "r": r, "ambient_dim": ambient_dim}, known)


_BUILDERS = {
    "plane": plane,
    "plane_patch": plane_patch,
    "sphere": sphere,
    "catenoid": catenoid,
    "enneper": enneper,
    "scherk": scherk,
    "torus": torus,
}


def get_surface(name: str, **params) -> CatalogEntry:
    """Look up a catalog surface by name (``graph`` needs ``phi``)."""
    if name == "graph":
        return graph(**params)
    try:
        builder = _BUILDERS[name]
    except KeyError:
        raise ValueError(f"unknown surface {name!r}; choose from {sorted(_BUILDERS) + ['graph']}") from None
    return builder(**params)


def as_charts(surface) -> tuple:
    """Normalise a chart, a list of charts or a :class:`CatalogEntry` to a tuple of charts."""
    if isinstance(surface, SurfaceChart):
        return (surface,)
    if isinstance(surface, CatalogEntry):
        return surface.charts
    return tuple(surface)
