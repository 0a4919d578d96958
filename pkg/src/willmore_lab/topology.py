"""Ends, genus, total curvature and the finite-topology criterion.

A component of the surface outside a ball is counted as an end when it
reaches the truncation boundary (a chart cutoff edge, or a flagged mesh
vertex); this is the finite-cutoff stand-in for non-compactness.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import connected_components
from scipy.spatial import cKDTree

from .catalog import CatalogEntry, as_charts
from .errors import InputError, NonManifold, Unstable
from .flatness import SlackReport
from .measure import density_at_infinity, density_ratio, extrapolate_density
from .mesh import TriMesh, sample_mesh
from .quadrature import Ball, integrate
from .report import to_json

STABLE_WINDOW = 3
HYPOTHESIS_REL_TOL = 0.02


def _cutoff(surface) -> Optional[float]:
    return getattr(surface, "cutoff", None)


def default_end_radii(cutoff: float, n: int = 7) -> np.ndarray:
    """Radii from ``cutoff/400`` to ``cutoff/4``."""
    return np.geomspace(cutoff / 400.0, cutoff / 4.0, n)


def _resolution(chart, target: int = 20000):
    (a1, b1), (a2, b2) = chart.domain
    ratio = (b2 - a2) / (b1 - a1)
    nu = int(max(16, round(math.sqrt(target / ratio))))
    nv = int(max(16, round(target / nu)))
    return nu, nv


def _image_diameter(chart, n: int = 9) -> float:
    (a1, b1), (a2, b2) = chart.domain
    U, V = np.meshgrid(np.linspace(a1, b1, n), np.linspace(a2, b2, n), indexing="ij")
    X = chart.evaluate(U.ravel(), V.ravel())
    return float(np.linalg.norm(np.ptp(X, axis=0)))


def _chart_meshes(surface, resolution=None, target: int = 20000):
    charts = as_charts(surface)
    diam = [_image_diameter(c) for c in charts]
    dmax = max(diam)
    out = []
    for ch, d in zip(charts, diam):
        res = resolution if resolution is not None else _resolution(ch, max(400, int(target * (d / dmax) ** 2)))
        out.append(sample_mesh(ch, res))
    return charts, out


def _merge_cells(cells: np.ndarray, max_rounds: int = 12) -> np.ndarray:
    """Replace complete aligned 2x2 blocks of grid cells by their union, repeatedly."""
    if not len(cells):
        return cells
    us = np.unique(np.concatenate([cells[:, 0], cells[:, 1]]))
    vs = np.unique(np.concatenate([cells[:, 2], cells[:, 3]]))
    idx = np.stack([np.searchsorted(us, cells[:, 0]), np.searchsorted(us, cells[:, 1]),
                    np.searchsorted(vs, cells[:, 2]), np.searchsorted(vs, cells[:, 3])], 1)
    size = 1
    for _ in range(max_rounds):
        unit = (idx[:, 1] - idx[:, 0] == size) & (idx[:, 3] - idx[:, 2] == size)
        aligned = unit & (idx[:, 0] % (2 * size) == 0) & (idx[:, 2] % (2 * size) == 0)
        key = {(int(i0), int(j0)) for i0, _, j0, _ in idx[unit]}
        merged, drop = [], set()
        for i0, i1, j0, j1 in idx[aligned]:
            quad = [(i0, j0), (i0 + size, j0), (i0, j0 + size), (i0 + size, j0 + size)]
            if i0 + 2 * size < len(us) and j0 + 2 * size < len(vs) and all(q in key for q in quad):
                merged.append((i0, i0 + 2 * size, j0, j0 + 2 * size))
                drop.update(quad)
        if not merged:
            break
        keep = np.array([not (u and (int(a), int(c)) in drop) for (a, _, c, _), u in zip(idx, unit)], dtype=bool)
        idx = np.concatenate([idx[keep], np.array(merged, dtype=idx.dtype)])
        size *= 2
    return np.stack([us[idx[:, 0]], us[idx[:, 1]], vs[idx[:, 2]], vs[idx[:, 3]]], 1)


def _edge_lengths_at_vertices(mesh: TriMesh) -> np.ndarray:
    e = mesh.edges
    L = np.linalg.norm(mesh.vertices[e[:, 0]] - mesh.vertices[e[:, 1]], axis=1)
    out = np.zeros(mesh.n_vertices)
    np.maximum.at(out, e[:, 0], L)
    np.maximum.at(out, e[:, 1], L)
    return out


def _components_outside(meshes: Sequence[TriMesh], center, r: float, glue: float = 2.0):
    """Components of the faces lying outside ``B_r(center)``, glued across charts.

    Returns ``(labels per mesh, noncompact flag per label)``; labels are
    consecutive integers ordered by first appearance.
    """
    locals_, offsets, total = [], [], 0
    for m in meshes:
        d = np.linalg.norm(m.vertices - center, axis=1)
        active = np.all(d[m.faces] > r, axis=1)
        n, lab = m.face_components(active)
        locals_.append((active, lab))
        offsets.append(total)
        total += n
    if total == 0:
        return [np.full(m.n_faces, -1) for m in meshes], np.zeros(0, dtype=bool)
    rows, cols = [], []
    if len(meshes) > 1:
        # gluing candidates: boundary vertices of active faces in every chart mesh
        P, owner, reach = [], [], []
        for k, (m, (active, lab)) in enumerate(zip(meshes, locals_)):
            vlab = np.full(m.n_vertices, -1)
            vlab[m.faces[active].ravel()] = np.repeat(lab[active], 3) + offsets[k]
            cand = np.flatnonzero((vlab >= 0) & m.boundary_flags & ~m.cutoff_flags)
            P.append(m.vertices[cand])
            owner.append(np.stack([np.full(len(cand), k), vlab[cand]], 1))
            reach.append(glue * _edge_lengths_at_vertices(m)[cand])
        P, owner, reach = np.concatenate(P), np.concatenate(owner), np.concatenate(reach)
        if len(P):
            tree = cKDTree(P)
            for i, nb in enumerate(tree.query_ball_point(P, reach)):
                for j in nb:
                    if owner[j, 0] != owner[i, 0]:
                        rows.append(owner[i, 1])
                        cols.append(owner[j, 1])
    g = coo_matrix((np.ones(len(rows)), (rows, cols)), shape=(total, total))
    _, glob = connected_components(g, directed=False)
    _, first, inv = np.unique(glob, return_index=True, return_inverse=True)
    rank = np.argsort(np.argsort(first))[inv]
    labels = []
    nonc = np.zeros(rank.max() + 1, dtype=bool)
    for k, (m, (active, lab)) in enumerate(zip(meshes, locals_)):
        L = np.full(m.n_faces, -1)
        L[active] = rank[lab[active] + offsets[k]]
        labels.append(L)
        touch = np.zeros(m.n_faces, dtype=bool)
        touch[active] = np.any(m.cutoff_flags[m.faces[active]], axis=1)
        np.logical_or.at(nonc, L[touch], True)
    return labels, nonc


@dataclass
class EndDecomposition:
    """End counts over a radius schedule with per-end densities at infinity."""

    center: tuple
    radii: list
    counts: list
    ends: int
    per_end: list = field(default_factory=list)
    cutoff: Optional[float] = None

    def to_dict(self) -> dict:
        return {"center": list(self.center), "radii": self.radii, "counts": self.counts, "e": self.ends,
                "per_end": self.per_end, "cutoff": self.cutoff}


def _end_density_charts(charts, labels, meshes, end_label, center, r_end, r_max, rtol):
    cells = []
    for m, L in zip(meshes, labels):
        sel = L == end_label
        c = m.face_cells[sel] if np.any(sel) else np.zeros((0, 4))
        cells.append(_merge_cells(np.unique(c, axis=0)) if len(c) else c)
    radii = np.geomspace(max(2 * r_end, r_max / 10), r_max, 7)
    th, er = [], []
    for R in radii:
        res = integrate(charts, lambda g: np.ones(len(g)), Ball(center, R), initial_cells=cells, rtol=rtol)
        th.append(res.value / (math.pi * R * R))
        er.append(res.error_estimate / (math.pi * R * R))
    ex = extrapolate_density(radii, np.array(th), np.array(er))
    return {"theta": ex["theta_infinity"], "uncertainty": ex["uncertainty"], "radii": radii.tolist(),
            "profile": [float(t) for t in th]}


def _end_density_mesh(mesh, labels, end_label, center, r_end, r_max):
    sel = labels == end_label
    c = mesh.vertices[mesh.faces[sel]].mean(axis=1)
    a = mesh.face_areas()[sel]
    d = np.linalg.norm(c - center, axis=1)
    radii = np.geomspace(max(2 * r_end, r_max / 10), r_max, 7)
    th = np.array([np.sum(a[d <= R]) / (math.pi * R * R) for R in radii])
    ex = extrapolate_density(radii, th, np.zeros_like(th), rel_floor=0.05)
    return {"theta": ex["theta_infinity"], "uncertainty": ex["uncertainty"], "radii": radii.tolist(),
            "profile": th.tolist()}


def count_ends(surface, radii=None, center=None, *, resolution=None, per_end_density: bool = True,
               rtol: float = 1e-7) -> EndDecomposition:
    """Count the components outside ``B_r(center)`` that reach the truncation boundary.

    ``surface`` is a :class:`TriMesh` (cutoff vertices from its flags) or
    anything accepted by :func:`as_charts`.  The end count is the value on
    the last three radii, which must agree.

    Raises
    ------
    Unstable
        If the counts on the last three radii differ.
    """
    is_mesh = isinstance(surface, TriMesh)
    if is_mesh:
        meshes, charts = [surface], None
        n = surface.ambient_dim
        cutoff = float(np.max(np.linalg.norm(surface.vertices[surface.cutoff_flags], axis=1))) \
            if np.any(surface.cutoff_flags) else None
    else:
        charts, meshes = _chart_meshes(surface, resolution)
        n = charts[0].ambient_dim
        cutoff = _cutoff(surface)
        if cutoff is None:
            cutoff = min(float(np.min(np.linalg.norm(m.vertices[m.cutoff_flags], axis=1)))
                         for m in meshes if np.any(m.cutoff_flags)) if any(np.any(m.cutoff_flags) for m in meshes) else None
    center = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    if radii is None:
        if cutoff is None:
            raise InputError("surface has no truncation boundary; pass radii explicitly")
        radii = default_end_radii(cutoff)
    radii = [float(r) for r in np.sort(np.atleast_1d(radii))]
    counts, last = [], None
    for r in radii:
        labels, nonc = _components_outside(meshes, center, r)
        counts.append(int(np.count_nonzero(nonc)))
        last = (r, labels, nonc)
    window = counts[-STABLE_WINDOW:]
    if len(set(window)) != 1:
        raise Unstable(f"end counts {counts} over radii {['%.4g' % r for r in radii]} do not stabilise")
    e = window[0]
    per_end = []
    if per_end_density and e:
        # identify ends at the smallest radius from which the count stays at e
        k = len(counts) - 1
        while k > 0 and counts[k - 1] == e:
            k -= 1
        r_end = radii[k]
        labels, nonc = _components_outside(meshes, center, r_end)
        r_max = (cutoff / 4.0) if cutoff is not None else 4 * radii[-1]
        for lab in np.flatnonzero(nonc):
            if is_mesh:
                d = _end_density_mesh(meshes[0], labels[0], lab, center, r_end, r_max)
            else:
                d = _end_density_charts(charts, labels, meshes, lab, center, r_end, r_max, rtol)
            d["identified_at_radius"] = r_end
            per_end.append(d)
    return EndDecomposition(tuple(center.tolist()), radii, counts, e, per_end, cutoff)


def euler_genus(mesh: TriMesh, cap_boundaries: bool = True) -> dict:
    """Euler characteristic, boundary loops and (capped) genus of a mesh.

    Capping fills each boundary loop with a fan to its centroid; the genus
    is summed over connected components.
    """
    chi = mesh.euler_characteristic()
    loops = mesh.boundary_loops()
    out = {"chi": chi, "boundary_loops": len(loops)}
    m = mesh.capped() if (cap_boundaries and loops) else mesh
    ncomp, _ = m.face_components()
    chi_c = m.euler_characteristic()
    if cap_boundaries or not loops:
        g2 = 2 * ncomp - chi_c
        if g2 < 0 or g2 % 2:
            raise NonManifold(f"capped mesh has chi = {chi_c} with {ncomp} components; not a closed orientable surface")
        out.update({"chi_capped": chi_c, "genus": g2 // 2, "components": ncomp})
    return out


def total_curvature(surface, region=None, *, rtol: float = 1e-8, trim: float = 0.02, **kw) -> dict:
    """``int |A|^2`` with quadrature error and, for truncated surfaces, a cutoff sensitivity.

    The cutoff sensitivity is the change of the integral when every cutoff
    edge is moved inwards by ``trim`` of its parameter range.
    """
    charts = as_charts(surface)
    res = integrate(charts, lambda g: g.A2, region, rtol=rtol, allow_truncation=True, **kw)
    trunc = 0.0
    if any(c.cutoff_edges for c in charts):
        res2 = integrate(tuple(c.trimmed(trim) for c in charts), lambda g: g.A2, region, rtol=rtol,
                         allow_truncation=True, **kw)
        trunc = abs(res.value - res2.value)
    return {"value": float(res.value), "error": float(res.error_estimate) + trunc,
            "quadrature_error": float(res.error_estimate), "truncation_error": trunc}


def _local_genus(surface, center, s, resolution=None):
    charts = as_charts(surface)
    if len(charts) != 1:
        return None
    m = sample_mesh(charts[0], resolution or _resolution(charts[0]))
    d = np.linalg.norm(m.vertices - center, axis=1)
    inside = np.all(d[m.faces] <= s, axis=1)
    if not np.any(inside):
        return 0
    try:
        return euler_genus(m.submesh(inside))["genus"]
    except NonManifold:
        return None


def ilmanen_inequality_check(surface, r: float, s: float, *, eps: float = 0.5, center=None,
                             genus: Optional[int] = None, global_genus: Optional[int] = None,
                             theta_infinity: Optional[float] = None, rtol: float = 1e-8) -> dict:
    """Local and global Gauss-Bonnet type bounds on the total curvature.

    Local: ``(1 - eps) int_{B_r} |A|^2 <= int_{B_s} |H|^2 + 8 pi g(B_s)
    + 24 pi D' s^2 / (eps (s - r)^2)`` with ``D'`` the largest area ratio
    measured on ``[r, s]``.  Global: ``int |A|^2 <= 2 int |H|^2 + 16 pi g
    + 96 pi Theta(inf)``.  Genus values default to a mesh count of the
    capped piece (single-chart surfaces) or the catalog value.
    """
    if not (0 < eps < 1):
        raise InputError("eps must lie in (0, 1)")
    if not (0 < r < s):
        raise InputError("need 0 < r < s")
    charts = as_charts(surface)
    n = charts[0].ambient_dim
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    known = surface.known_values if isinstance(surface, CatalogEntry) else {}
    g_src = "given"
    if genus is None:
        genus = _local_genus(surface, c, s)
        g_src = "mesh"
        if genus is None:
            genus = known.get("genus")
            g_src = "catalog"
    if genus is None:
        raise InputError("genus of the surface piece is unknown; pass genus=")
    A_r = integrate(charts, lambda g: g.A2, Ball(c, r), rtol=rtol, allow_truncation=True)
    H_s = integrate(charts, lambda g: g.H2, Ball(c, s), rtol=rtol, allow_truncation=True)
    ratios = [density_ratio(charts, c, float(t), rtol=rtol, allow_truncation=True).value
              for t in np.geomspace(r, s, 6)]
    D = float(max(ratios))
    t_curv = 24 * math.pi * D * s * s / (eps * (s - r) ** 2)
    local = SlackReport("ilmanen_local", (1 - eps) * float(A_r.value),
                        float(H_s.value) + 8 * math.pi * genus + t_curv,
                        {"A2_r": float(A_r.value), "H2_s": float(H_s.value), "genus": genus,
                         "genus_source": g_src, "D_prime": D, "area_term": t_curv},
                        (1 - eps) * float(A_r.error_estimate) + float(H_s.error_estimate),
                        {"r": r, "s": s, "eps": eps, "center": c.tolist()})
    out = {"local": local}
    gg = global_genus if global_genus is not None else known.get("genus")
    if gg is not None:
        tc = total_curvature(surface, rtol=rtol)
        W = integrate(charts, lambda g: g.H2, None, rtol=rtol, allow_truncation=True)
        if theta_infinity is None:
            if any(ch.cutoff_edges for ch in charts):
                theta_infinity = density_at_infinity(surface, c).theta_infinity
            else:
                theta_infinity = 0.0
        rhs = 2 * float(W.value) + 16 * math.pi * gg + 96 * math.pi * theta_infinity
        out["global"] = SlackReport("ilmanen_global", tc["value"], rhs,
                                    {"A2": tc["value"], "willmore": float(W.value), "genus": gg,
                                     "theta_infinity": theta_infinity},
                                    tc["error"] + 2 * float(W.error_estimate), {"center": c.tolist()})
    return out


@dataclass
class TopologyVerdict:
    """Evaluation of the finite-topology criterion at cutoff scale."""

    ends: int
    theta_infinity: float
    theta_uncertainty: float
    hypothesis_holds: bool
    verdict: str
    per_end: list
    conclusions: dict
    ilmanen: dict
    caveat: str

    def to_dict(self) -> dict:
        return {"e": self.ends, "theta_inf": self.theta_infinity, "theta_uncertainty": self.theta_uncertainty,
                "hypothesis_holds": self.hypothesis_holds, "verdict": self.verdict, "per_end": self.per_end,
                "conclusions": self.conclusions,
                "ilmanen": {k: v.to_dict() for k, v in self.ilmanen.items()}, "caveat": self.caveat}

    def to_json(self) -> str:
        return to_json(self.to_dict())


def finite_topology_verdict(surface, center=None, *, radii=None, rel_tol: float = HYPOTHESIS_REL_TOL,
                            ilmanen: bool = True, profile_kw: Optional[dict] = None) -> TopologyVerdict:
    """Check ``e > Theta - 1`` and, when it holds, the conclusions ``Theta = e`` and unit end densities.

    The hypothesis counts as satisfied only when ``e - (Theta - 1)`` exceeds
    the tolerance ``max(uncertainty, rel_tol * Theta)``; borderline cases
    (such as an equality) are reported as not satisfied and no conclusion
    is asserted.
    """
    charts = as_charts(surface)
    n = charts[0].ambient_dim
    c = np.zeros(n) if center is None else np.asarray(center, dtype=float)
    ends = count_ends(surface, radii, c)
    prof = density_at_infinity(surface, c, **(profile_kw or {}))
    theta, unc = prof.theta_infinity, prof.theta_infinity_err
    tol = max(unc, rel_tol * abs(theta))
    margin = ends.ends - (theta - 1)
    holds = margin > tol
    conclusions = {}
    if holds:
        conclusions["theta_equals_e"] = abs(theta - ends.ends) <= tol
        conclusions["end_densities_one"] = all(
            abs(p["theta"] - 1) <= max(p["uncertainty"], rel_tol) for p in ends.per_end)
        ok = conclusions["theta_equals_e"] and conclusions["end_densities_one"]
        verdict = "conclusions confirmed" if ok else "conclusions violated"
    else:
        verdict = "inconclusive: hypothesis e > Theta - 1 not satisfied"
    il = {}
    if ilmanen and ends.cutoff is not None:
        r, s = ends.cutoff / 40.0, ends.cutoff / 10.0
        known = surface.known_values if isinstance(surface, CatalogEntry) else {}
        g = 0 if known.get("genus") == 0 else None
        try:
            il = ilmanen_inequality_check(surface, r, s, center=c, genus=g,
                                          theta_infinity=theta if known.get("genus") is not None else None)
        except InputError:
            il = {}
    return TopologyVerdict(ends.ends, theta, unc, bool(holds), verdict, ends.per_end, conclusions, il,
                           "ends and densities are measured at finite cutoff; the criterion concerns limits")
