"""Adaptive integration of pointwise quantities over (pieces of) immersed surfaces.

The parameter rectangle of every chart is split into cells.  Each cell is
classified against the region constraints from a bounding ball of its image:

* cells entirely outside are dropped;
* cells entirely inside are integrated with a tensor 2x2 Gauss rule and
  refined until the rule agrees with the same rule on the four children;
* cells straddling a region boundary are split until their image diameter is
  below ``edge_tol`` times the constraint scale, then integrated by iterated
  Gauss rules along parameter lines whose inside interval is located by
  root-finding.

Cells are processed level by level in a fixed order, so results do not
depend on scheduling.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import NonConvergent, TruncationUnsound

EPS = np.finfo(float).eps
ROUNDOFF = 1e-13



def _gauss01(n):
    x, w = np.polynomial.legendre.leggauss(n)
    return 0.5 * (x + 1.0), 0.5 * w


@dataclass(frozen=True)
class Ball:
    """Closed ball ``|x - center| <= radius`` (or its complement if ``inside=False``)."""

    center: tuple
    radius: float
    inside: bool = True

    def __post_init__(self):
        if not self.radius > 0:
            raise ValueError("ball radius must be positive")
        object.__setattr__(self, "center", tuple(float(c) for c in np.ravel(self.center)))

    @property
    def scale(self) -> float:
        return self.radius

    def value(self, x: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(x - np.asarray(self.center), axis=-1)
        return self.radius - d if self.inside else d - self.radius

    def classify(self, mid: np.ndarray, rad: np.ndarray) -> np.ndarray:
        d = np.linalg.norm(mid - np.asarray(self.center), axis=-1)
        lo, hi = d - rad, d + rad
        if self.inside:
            return np.where(hi < self.radius, 1, np.where(lo > self.radius, -1, 0))
        return np.where(lo > self.radius, 1, np.where(hi < self.radius, -1, 0))


@dataclass(frozen=True)
class Band:
    """Slab ``|Q (x - point)| < halfwidth`` where ``Q`` has orthonormal rows ``directions``."""

    point: tuple
    directions: tuple
    halfwidth: float

    def __post_init__(self):
        object.__setattr__(self, "point", tuple(float(c) for c in np.ravel(self.point)))
        object.__setattr__(self, "directions", tuple(tuple(float(c) for c in row) for row in self.directions))

    @property
    def scale(self) -> float:
        return self.halfwidth

    def _dist(self, x):
        Q = np.asarray(self.directions)
        return np.linalg.norm((x - np.asarray(self.point)) @ Q.T, axis=-1)

    def value(self, x: np.ndarray) -> np.ndarray:
        return self.halfwidth - self._dist(x)

    def classify(self, mid, rad):
        d = self._dist(mid)
        return np.where(d + rad < self.halfwidth, 1, np.where(d - rad > self.halfwidth, -1, 0))


def annulus(center, inner: float, outer: float) -> tuple:
    """``{inner <= |x - center| <= outer}`` as a constraint tuple."""
    return (Ball(center, outer), Ball(center, inner, inside=False))


@dataclass
class QuadratureResult:
    """Integral value (scalar or vector), a conservative error estimate and the cell count."""

    value: object
    error_estimate: object
    cells_used: int

    def __iter__(self):
        return iter((self.value, self.error_estimate))


def _as_region(region) -> tuple:
    if region is None:
        return ()
    if isinstance(region, (Ball, Band)):
        return (region,)
    return tuple(region)


def check_truncation(chart, region, n: int = 1025) -> None:
    """Raise :class:`TruncationUnsound` if a cutoff edge enters a bounding ball of ``region``."""
    for c in _as_region(region):
        if not (isinstance(c, Ball) and c.inside):
            continue
        for edge in chart.cutoff_edges:
            u, v = chart.edge_points(edge, n)
            x = chart.evaluate(u, v)
            if chart.constraints:
                ok = np.all([k.value(x) >= 0 for k in chart.constraints], axis=0)
                x = x[ok]
                if len(x) == 0:
                    continue
            d = np.linalg.norm(x - np.asarray(c.center), axis=1)
            if np.min(d) < c.radius:
                raise TruncationUnsound(
                    f"cutoff edge {edge} of chart {chart.name!r} reaches distance "
                    f"{np.min(d):.6g} < radius {c.radius:.6g} from {c.center}; "
                    "enlarge the cutoff or pass allow_truncation=True"
                )


def _cell_samples(chart, cells):
    """Positions at the 3x3 corner/mid/center grid of each cell, (M, 9, n)."""
    u0, u1, v0, v1 = cells.T
    t = np.array([0.0, 0.5, 1.0])
    U = u0[:, None, None] + (u1 - u0)[:, None, None] * t[None, :, None]
    V = v0[:, None, None] + (v1 - v0)[:, None, None] * t[None, None, :]
    U, V = np.broadcast_arrays(U, V)
    X = chart.evaluate(U.reshape(-1), V.reshape(-1))
    return X.reshape(len(cells), 9, -1)


def classify_cells(chart, cells, constraints):
    """Return (status, diameter, samples, s_values) for each cell.

    ``status`` is +1 inside, -1 outside, 0 straddling.
    """
    X = _cell_samples(chart, cells)
    mid = X[:, 4]
    r = np.max(np.linalg.norm(X - mid[:, None, :], axis=2), axis=1)
    diam = 2.0 * r
    rad = 1.5 * r + 1e-12 * (1.0 + np.linalg.norm(mid, axis=1))
    status = np.ones(len(cells), dtype=int)
    straddle_mask = np.zeros((len(cells), len(constraints)), dtype=bool)
    for k, c in enumerate(constraints):
        s = c.classify(mid, rad)
        straddle_mask[:, k] = s == 0
        status = np.where((status == -1) | (s == -1), -1, np.minimum(status, s))
    return status, diam, X, straddle_mask


def _split_modes(X):
    """0: split both directions, 1: only u, 2: only v, chosen from image extents."""
    ext_u = np.max(np.linalg.norm(X[:, 6:9] - X[:, 0:3], axis=2), axis=1)
    ext_v = np.max(np.linalg.norm(X[:, 2::3] - X[:, 0::3], axis=2), axis=1)
    return np.where(ext_u > 2.0 * ext_v, 1, np.where(ext_v > 2.0 * ext_u, 2, 0))


def _split(cells, modes=None):
    """Children of each cell, ordered by parent; returns (children, parent index)."""
    if modes is None:
        modes = np.zeros(len(cells), dtype=int)
    u0, u1, v0, v1 = cells.T
    um, vm = 0.5 * (u0 + u1), 0.5 * (v0 + v1)
    quad = np.stack([
        np.stack([u0, um, v0, vm], 1),
        np.stack([um, u1, v0, vm], 1),
        np.stack([u0, um, vm, v1], 1),
        np.stack([um, u1, vm, v1], 1),
    ], 1)
    halves_u = np.stack([np.stack([u0, um, v0, v1], 1), np.stack([um, u1, v0, v1], 1)], 1)
    halves_v = np.stack([np.stack([u0, u1, v0, vm], 1), np.stack([u0, u1, vm, v1], 1)], 1)
    counts = np.where(modes == 0, 4, 2)
    parent = np.repeat(np.arange(len(cells)), counts)
    out = np.empty((int(counts.sum()), 4))
    start = np.concatenate([[0], np.cumsum(counts)[:-1]])
    for mode, block, n in ((0, quad, 4), (1, halves_u, 2), (2, halves_v, 2)):
        idx = np.flatnonzero(modes == mode)
        if len(idx):
            rows = (start[idx][:, None] + np.arange(n)[None, :]).ravel()
            out[rows] = block[idx].reshape(-1, 4)
    return out, parent


CHUNK = 1 << 15


def _eval_integrand(chart, integrand, u, v):
    if len(u) == 0:
        return np.zeros((0, 1)), np.zeros(0)
    Fs, Js = [], []
    for i in range(0, len(u), CHUNK):
        geo = chart.geometry(u[i:i + CHUNK], v[i:i + CHUNK])
        # clip nodes may land on a polar centre; those carry no measure
        with np.errstate(divide="ignore", invalid="ignore"):
            F = np.asarray(integrand(geo), dtype=float)
        if F.ndim == 1:
            F = F[:, None]
        Fs.append(np.where(np.isfinite(F), F, 0.0))
        Js.append(geo.jacobian)
    return np.concatenate(Fs), np.concatenate(Js)


def _tensor_rule(cells, nodes, weights):
    u0, u1, v0, v1 = cells.T
    du, dv = u1 - u0, v1 - v0
    U = u0[:, None, None] + du[:, None, None] * nodes[None, :, None]
    V = v0[:, None, None] + dv[:, None, None] * nodes[None, None, :]
    U, V = np.broadcast_arrays(U, V)
    W = (du * dv)[:, None, None] * weights[None, :, None] * weights[None, None, :]
    W = np.broadcast_to(W, U.shape)
    return U.reshape(len(cells), -1), V.reshape(len(cells), -1), W.reshape(len(cells), -1)


def _smooth_pass(chart, integrand, cells, modes, order=2):
    """Parent tensor Gauss rule versus the same rule on the children of every cell."""
    M = len(cells)
    nodes, weights = _gauss01(order)
    k = order * order
    Up, Vp, Wp = _tensor_rule(cells, nodes, weights)
    kids, parent = _split(cells, modes)
    Uc, Vc, Wc = _tensor_rule(kids, nodes, weights)
    u = np.concatenate([Up.ravel(), Uc.ravel()])
    v = np.concatenate([Vp.ravel(), Vc.ravel()])
    F, J = _eval_integrand(chart, integrand, u, v)
    m = F.shape[1]
    FJ = F * J[:, None]
    npar = Up.size
    Qp = np.einsum("mk,mkc->mc", Wp, FJ[:npar].reshape(M, k, m))
    FJc = FJ[npar:].reshape(len(kids), k, m)
    qc = np.einsum("mk,mkc->mc", Wc, FJc)
    qa = np.einsum("mk,mkc->mc", Wc, np.abs(FJc))
    Qc = np.zeros((M, m))
    Qabs = np.zeros((M, m))
    np.add.at(Qc, parent, qc)
    np.add.at(Qabs, parent, qa)
    return Qp, Qc, Qabs, kids, parent


def _roots(fun, lo, hi, flo, fhi, n_bisect=12, n_false=6):
    """Vectorised bracketed root finding (bisection then Illinois steps)."""
    a, b, fa, fb = lo.copy(), hi.copy(), flo.copy(), fhi.copy()
    for _ in range(n_bisect):
        m = 0.5 * (a + b)
        fm = fun(m)
        left = np.sign(fm) == np.sign(fa)
        a = np.where(left, m, a)
        fa = np.where(left, fm, fa)
        b = np.where(left, b, m)
        fb = np.where(left, fb, fm)
    side = np.zeros(len(a), dtype=int)
    for _ in range(n_false):
        denom = fb - fa
        with np.errstate(divide="ignore", invalid="ignore"):
            c = np.where(denom != 0, (a * fb - b * fa) / denom, 0.5 * (a + b))
        c = np.clip(c, np.minimum(a, b), np.maximum(a, b))
        fc = fun(c)
        left = np.sign(fc) == np.sign(fa)
        a_new = np.where(left, c, a)
        b_new = np.where(left, b, c)
        fa_new = np.where(left, fc, fa)
        fb_new = np.where(left, fb, fc)
        # Illinois modification: halve the stale endpoint value
        fb_new = np.where(left & (side == 1), 0.5 * fb_new, fb_new)
        fa_new = np.where(~left & (side == -1), 0.5 * fa_new, fa_new)
        side = np.where(left, 1, -1)
        a, b, fa, fb = a_new, b_new, fa_new, fb_new
    denom = fb - fa
    with np.errstate(divide="ignore", invalid="ignore"):
        c = np.where(denom != 0, (a * fb - b * fa) / denom, 0.5 * (a + b))
    return np.clip(c, np.minimum(a, b), np.maximum(a, b))


def _clip_pass(chart, integrand, cells, constraints, X, n):
    """Iterated n-point Gauss integral over the inside part of each straddling leaf.

    Lines run along the parameter direction in which the constraints vary
    most.  The outer interval is cut where a constraint boundary crosses one
    of the two cell edges parallel to it, so the inside interval of every
    line depends smoothly on the outer coordinate within each piece.
    """
    M = len(cells)
    u0, u1, v0, v1 = cells.T
    var_u = np.zeros(M)
    var_v = np.zeros(M)
    for c in constraints:
        s = c.value(X)
        var_u = np.maximum(var_u, np.abs(s[:, 7] - s[:, 1]))
        var_v = np.maximum(var_v, np.abs(s[:, 5] - s[:, 3]))
    along_v = var_v >= var_u
    o_lo = np.where(along_v, u0, v0)
    o_hi = np.where(along_v, u1, v1)
    i_lo = np.where(along_v, v0, u0)
    i_hi = np.where(along_v, v1, u1)

    def to_uv(o, s, dv):
        return np.where(dv, o, s), np.where(dv, s, o)

    def value_on(c, o, s, dv):
        uu, vv = to_uv(o, s, dv)
        return c.value(chart.evaluate(uu, vv))

    # kinks of the inside interval: boundary crossings of the edges inner = i_lo, i_hi
    breaks = [o_lo[:, None], o_hi[:, None]]
    for c in constraints:
        for edge in (i_lo, i_hi):
            s0 = value_on(c, o_lo, edge, along_v)
            s1 = value_on(c, o_hi, edge, along_v)
            bp = np.full(M, np.nan)
            cross = (s0 >= 0) != (s1 >= 0)
            if np.any(cross):
                idx = np.flatnonzero(cross)
                e_i, d_i = edge[idx], along_v[idx]

                def fun(tt, e_i=e_i, d_i=d_i, c=c):
                    return value_on(c, tt, e_i, d_i)

                bp[idx] = _roots(fun, o_lo[idx], o_hi[idx], s0[idx], s1[idx])
            breaks.append(bp[:, None])
    B = np.sort(np.concatenate(breaks, 1), axis=1)  # NaN sorts last
    pa, pb = B[:, :-1], B[:, 1:]
    valid = np.isfinite(pa) & np.isfinite(pb) & (pb - pa > 0)
    leaf, piece = np.nonzero(valid)
    pa, pb = pa[leaf, piece], pb[leaf, piece]
    P = len(leaf)

    t, w = _gauss01(n)
    outer = (pa[:, None] + (pb - pa)[:, None] * t[None, :]).ravel()
    dirv = np.repeat(along_v[leaf], n)
    lo = np.repeat(i_lo[leaf], n)
    hi = np.repeat(i_hi[leaf], n)
    a = lo.copy()
    b = hi.copy()
    ulo, vlo = to_uv(outer, lo, dirv)
    uhi, vhi = to_uv(outer, hi, dirv)
    xlo = chart.evaluate(ulo, vlo)
    xhi = chart.evaluate(uhi, vhi)
    for c in constraints:
        slo, shi = c.value(xlo), c.value(xhi)
        in_lo, in_hi = slo >= 0, shi >= 0
        empty = ~in_lo & ~in_hi
        cross = in_lo != in_hi
        a = np.where(empty, hi, a)
        b = np.where(empty, lo, b)
        if np.any(cross):
            idx = np.flatnonzero(cross)
            o_i, d_i = outer[idx], dirv[idx]

            def fun(tt, o_i=o_i, d_i=d_i, c=c):
                return value_on(c, o_i, tt, d_i)

            r = _roots(fun, lo[idx], hi[idx], slo[idx], shi[idx])
            up = in_lo[idx]  # inside at the low end: interval [lo, r]
            b[idx] = np.where(up, np.minimum(b[idx], r), b[idx])
            a[idx] = np.where(up, a[idx], np.maximum(a[idx], r))
    length = np.maximum(b - a, 0.0)
    S_in = a[:, None] + length[:, None] * t[None, :]
    uu, vv = to_uv(np.repeat(outer, n), S_in.ravel(), np.repeat(dirv, n))
    F, J = _eval_integrand(chart, integrand, uu, vv)
    m = F.shape[1]
    FJ = (F * J[:, None]).reshape(P * n, n, m)
    inner = length[:, None] * np.einsum("k,lkc->lc", w, FJ)
    inner_abs = length[:, None] * np.einsum("k,lkc->lc", w, np.abs(FJ))
    width = (pb - pa)[:, None]
    q = width * np.einsum("k,mkc->mc", w, inner.reshape(P, n, m))
    qa = width * np.einsum("k,mkc->mc", w, inner_abs.reshape(P, n, m))
    Q = np.zeros((M, m))
    Qabs = np.zeros((M, m))
    np.add.at(Q, leaf, q)
    np.add.at(Qabs, leaf, qa)
    return Q, Qabs


def integrate(surface, integrand: Callable, region=None, *, rtol: float = 1e-8, atol: float = 1e-12,
              edge_tol: float = 0.03, base: Sequence[int] = (16, 16), min_level: int = 1,
              max_level: int = 22, allow_truncation: bool = False, initial_cells=None, order: int = 4,
              max_cells: int = 5_000_000,
              ) -> QuadratureResult:
    """Integrate ``integrand(geometry)`` against the area measure over ``region``.

    Parameters
    ----------
    surface : chart, sequence of charts or catalog entry
    integrand : callable
        Maps a :class:`~willmore_lab.chart.LocalGeometry` batch to values of
        shape (N,) or (N, m).
    region : Ball, Band or sequence of them, optional
        Intersection of constraints; ``None`` integrates over the whole charts.
    initial_cells : list of arrays, optional
        Per chart, an (M, 4) array of ``(u0, u1, v0, v1)`` cells to start from
        instead of the ``base`` grid.

    Returns
    -------
    QuadratureResult
        ``value`` and ``error_estimate`` are floats for scalar integrands and
        arrays for vector integrands.
    """
    from .catalog import as_charts

    charts = as_charts(surface)
    region = _as_region(region)
    total = None
    total_err = None
    ncells = 0
    vector = None
    for ci, chart in enumerate(charts):
        if not allow_truncation:
            check_truncation(chart, region)
        constraints = region + tuple(chart.constraints)
        scales = np.array([c.scale for c in constraints]) if constraints else np.zeros(0)
        if initial_cells is not None:
            cells = np.asarray(initial_cells[ci], dtype=float).reshape(-1, 4)
        else:
            (a1, b1), (a2, b2) = chart.domain
            eu = np.linspace(a1, b1, base[0] + 1)
            ev = np.linspace(a2, b2, base[1] + 1)
            EU0, EV0 = np.meshgrid(eu[:-1], ev[:-1], indexing="ij")
            EU1, EV1 = np.meshgrid(eu[1:], ev[1:], indexing="ij")
            cells = np.stack([EU0.ravel(), EU1.ravel(), EV0.ravel(), EV1.ravel()], 1)
        chart_area = chart.parameter_area
        vals, errs = [], []
        level = 0
        while len(cells):
            ncells += len(cells)
            if ncells > max_cells:
                raise NonConvergent(f"adaptive quadrature exceeded {max_cells} cells on chart {chart.name!r}")
            status, diam, X, strad = classify_cells(chart, cells, constraints)
            modes = _split_modes(X)
            inside = status == 1
            nxt = []
            if np.any(inside):
                cin = cells[inside]
                Qp, Qc, Qabs, kids, parent = _smooth_pass(chart, integrand, cin, modes[inside], order)
                err = np.abs(Qc - Qp)
                area = (cin[:, 1] - cin[:, 0]) * (cin[:, 3] - cin[:, 2])
                tol = rtol * Qabs + atol * (area / chart_area)[:, None]
                ok = np.all(err <= tol, axis=1) & (level >= min_level)
                if level >= max_level:
                    ok[:] = True
                vals.append(Qc[ok])
                errs.append(err[ok] + 64 * EPS * Qabs[ok])
                if np.any(~ok):
                    nxt.append(kids[~ok[parent]])
            strd = status == 0
            if np.any(strd):
                cs = cells[strd]
                small = np.all(~strad[strd] | (diam[strd][:, None] <= edge_tol * scales[None, :]), axis=1)
                if level >= max_level:
                    small[:] = True
                if np.any(small):
                    leaf = cs[small]
                    Xl = X[strd][small]
                    Q3, _ = _clip_pass(chart, integrand, leaf, constraints, Xl, 3)
                    Q5, Qabs5 = _clip_pass(chart, integrand, leaf, constraints, Xl, 5)
                    vals.append(Q5)
                    errs.append(np.abs(Q5 - Q3) + 1e-12 * Qabs5)
                if np.any(~small):
                    nxt.append(_split(cs[~small], modes[strd][~small])[0])
            cells = np.concatenate(nxt) if nxt else np.zeros((0, 4))
            level += 1
        if vals:
            allv = np.concatenate(vals)
            v = np.sum(allv, axis=0)
            # summation roundoff floor
            e = np.sum(np.concatenate(errs), axis=0) + ROUNDOFF * np.sum(np.abs(allv), axis=0)
        else:
            v = e = None
        if v is not None:
            vector = v.shape[0] > 1 if vector is None else vector
            total = v if total is None else total + v
            total_err = e if total_err is None else total_err + e
    if total is None:
        m = 1
        try:
            probe = charts[0].geometry(*charts[0].center)
            m = np.atleast_2d(np.asarray(integrand(probe))).shape[-1] if np.ndim(integrand(probe)) > 1 else 1
        except Exception:
            pass
        total = np.zeros(m)
        total_err = np.zeros(m)
        vector = m > 1
    if not vector:
        return QuadratureResult(float(total[0]), float(total_err[0]), ncells)
    return QuadratureResult(total, total_err, ncells)


def subdivide(surface, region=None, target_diameter: float = 0.01, base=(16, 16), max_level: int = 24):
    """Split charts until every non-outside cell image has diameter <= target.

    Returns a list (one per chart) of arrays of cells ``(u0, u1, v0, v1)``
    that are inside or straddle the region.
    """
    from .catalog import as_charts

    charts = as_charts(surface)
    region = _as_region(region)
    out = []
    for chart in charts:
        constraints = region + tuple(chart.constraints)
        (a1, b1), (a2, b2) = chart.domain
        eu = np.linspace(a1, b1, base[0] + 1)
        ev = np.linspace(a2, b2, base[1] + 1)
        EU0, EV0 = np.meshgrid(eu[:-1], ev[:-1], indexing="ij")
        EU1, EV1 = np.meshgrid(eu[1:], ev[1:], indexing="ij")
        cells = np.stack([EU0.ravel(), EU1.ravel(), EV0.ravel(), EV1.ravel()], 1)
        keep = []
        level = 0
        while len(cells):
            status, diam, X, _ = classify_cells(chart, cells, constraints)
            alive = status >= 0
            done = alive & ((diam <= target_diameter) | (level >= max_level))
            keep.append(cells[done])
            go = alive & ~done
            cells = _split(cells[go], _split_modes(X[go]))[0]
            level += 1
        out.append(np.concatenate(keep) if keep else np.zeros((0, 4)))
    return out
