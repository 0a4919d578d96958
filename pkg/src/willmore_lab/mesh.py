"""Triangle meshes: validation, topology counts, I/O and discrete curvature.

Readers accept ASCII OBJ and OFF.  Higher-codimension meshes use an OFF-like
format whose first line is ``NDIM d``, followed by ``V F E`` counts, ``V``
lines of ``d`` coordinates and ``F`` face lines ``3 i j k``.
"""
from __future__ import annotations

import os
from dataclasses import dataclass, field
from typing import Optional

import numpy as np
from scipy.sparse import coo_matrix
from scipy.sparse.csgraph import breadth_first_order, connected_components
from scipy.spatial import cKDTree

from .errors import NonManifold, ParseError


def _edge_table(faces: np.ndarray):
    """Unique undirected edges and, per face corner, the index of the opposite edge."""
    e = np.concatenate([faces[:, [1, 2]], faces[:, [2, 0]], faces[:, [0, 1]]])
    s = np.sort(e, axis=1)
    uniq, inv, counts = np.unique(s, axis=0, return_inverse=True, return_counts=True)
    return uniq, inv.reshape(3, -1).T, counts, e


@dataclass(eq=False)
class TriMesh:
    """Triangulated surface in R^n.

    Parameters
    ----------
    vertices : (V, n) array
    faces : (F, 3) int array
    cutoff_flags : (V,) bool array, optional
        Vertices lying on an artificial truncation of a non-compact surface.
        Defaults to the boundary vertices.
    face_cells : (F, 4) array, optional
        Parameter cell ``(u0, u1, v0, v1)`` each face was cut from.
    validate : bool
        Check index range, degenerate faces, edge manifoldness and
        orientability.
    """

    vertices: np.ndarray
    faces: np.ndarray
    cutoff_flags: Optional[np.ndarray] = None
    face_cells: Optional[np.ndarray] = None
    validate: bool = field(default=True, repr=False)

    def __post_init__(self):
        self.vertices = np.atleast_2d(np.asarray(self.vertices, dtype=float))
        self.faces = np.asarray(self.faces, dtype=np.int64).reshape(-1, 3)
        V = len(self.vertices)
        if len(self.faces) and (self.faces.min() < 0 or self.faces.max() >= V):
            raise NonManifold("face index out of range")
        self._edges, self._face_edges, self._edge_count, _ = _edge_table(self.faces)
        if self.validate:
            self._check()
        if self.cutoff_flags is None:
            self.cutoff_flags = self.boundary_flags.copy()
        self.cutoff_flags = np.asarray(self.cutoff_flags, dtype=bool)

    def _check(self):
        f = self.faces
        if np.any((f[:, 0] == f[:, 1]) | (f[:, 1] == f[:, 2]) | (f[:, 0] == f[:, 2])):
            raise NonManifold("face with repeated vertex")
        if np.any(self._edge_count > 2):
            k = int(np.flatnonzero(self._edge_count > 2)[0])
            raise NonManifold(f"edge {tuple(self._edges[k])} is shared by {self._edge_count[k]} faces")
        if not self.orientable:
            raise NonManifold("mesh is not orientable")

    @property
    def n_vertices(self) -> int:
        return len(self.vertices)

    @property
    def n_faces(self) -> int:
        return len(self.faces)

    @property
    def n_edges(self) -> int:
        return len(self._edges)

    @property
    def ambient_dim(self) -> int:
        return self.vertices.shape[1]

    @property
    def edges(self) -> np.ndarray:
        return self._edges

    @property
    def boundary_edges(self) -> np.ndarray:
        return self._edges[self._edge_count == 1]

    @property
    def boundary_flags(self) -> np.ndarray:
        flags = np.zeros(self.n_vertices, dtype=bool)
        flags[self.boundary_edges.ravel()] = True
        return flags

    def face_areas(self) -> np.ndarray:
        p = self.vertices[self.faces]
        a = p[:, 1] - p[:, 0]
        b = p[:, 2] - p[:, 0]
        aa = np.einsum("ij,ij->i", a, a)
        bb = np.einsum("ij,ij->i", b, b)
        ab = np.einsum("ij,ij->i", a, b)
        return 0.5 * np.sqrt(np.maximum(aa * bb - ab * ab, 0.0))

    def area(self) -> float:
        return float(np.sum(self.face_areas()))

    def euler_characteristic(self) -> int:
        used = np.unique(self.faces)
        return int(len(used) - self.n_edges + self.n_faces)

    def _face_adjacency(self):
        """Pairs of faces sharing an edge."""
        fe = self._face_edges.ravel()
        fid = np.repeat(np.arange(self.n_faces), 3)
        order = np.argsort(fe, kind="stable")
        fe, fid = fe[order], fid[order]
        same = fe[1:] == fe[:-1]
        return fid[:-1][same], fid[1:][same], fe[:-1][same]

    def face_components(self, mask: Optional[np.ndarray] = None):
        """Edge-connected components of the faces (restricted to ``mask``)."""
        F = self.n_faces
        a, b, _ = self._face_adjacency()
        if mask is not None:
            keep = mask[a] & mask[b]
            a, b = a[keep], b[keep]
        g = coo_matrix((np.ones(len(a)), (a, b)), shape=(F, F))
        n, labels = connected_components(g, directed=False)
        if mask is None:
            return n, labels
        # relabel only masked faces, in order of first appearance
        out = np.full(F, -1)
        lab = labels[mask]
        _, first, inv = np.unique(lab, return_index=True, return_inverse=True)
        rank = np.argsort(np.argsort(first))
        out[mask] = rank[inv]
        return int(len(first)), out

    @property
    def orientable(self) -> bool:
        a, b, e = self._face_adjacency()
        if not len(a):
            return True
        # the shared edge must appear with opposite direction in consistently oriented faces
        f = self.faces

        def direction(face, edge):
            u, v = self._edges[edge, 0], self._edges[edge, 1]
            ff = f[face]
            pos_u = np.argmax(ff == u[:, None], axis=1)
            pos_v = np.argmax(ff == v[:, None], axis=1)
            return np.where((pos_u + 1) % 3 == pos_v, 1, -1)

        # +1 edge weight: faces need opposite orientations (flip) iff directions agree
        flip = (direction(a, e) == direction(b, e)).astype(np.int8)
        F = self.n_faces
        adj = coo_matrix((np.concatenate([flip + 1, flip + 1]), (np.concatenate([a, b]), np.concatenate([b, a]))),
                         shape=(F, F)).tocsr()
        sign = np.zeros(F, dtype=np.int8)
        for root in range(F):
            if sign[root]:
                continue
            order, pred = breadth_first_order(adj, root, directed=False, return_predecessors=True)
            sign[root] = 1
            kids = order[1:]
            par = pred[kids]
            rel = np.where(np.asarray(adj[par, kids]).ravel() == 2, -1, 1).tolist()
            sg = {int(root): 1}
            for node, p, r in zip(kids.tolist(), par.tolist(), rel):
                sg[node] = sg[p] * r
            sign[np.array(list(sg))] = np.array(list(sg.values()), dtype=np.int8)
        s = sign[a] * sign[b]
        # after orientation fix, shared edges must be traversed oppositely
        return bool(np.all(np.where(flip == 1, s == -1, s == 1)))

    def boundary_loops(self) -> list:
        """Boundary edges chained into closed vertex loops."""
        be = self.boundary_edges
        if not len(be):
            return []
        nxt = {}
        for u, v in be:
            nxt.setdefault(int(u), []).append(int(v))
            nxt.setdefault(int(v), []).append(int(u))
        if any(len(n) != 2 for n in nxt.values()):
            raise NonManifold("boundary is not a disjoint union of simple loops")
        seen = set()
        loops = []
        for start in sorted(nxt):
            if start in seen:
                continue
            loop = [start]
            seen.add(start)
            prev, cur = None, start
            while True:
                a, b = nxt[cur]
                step = a if a != prev else b
                if step == start:
                    break
                loop.append(step)
                seen.add(step)
                prev, cur = cur, step
            loops.append(loop)
        return loops

    def capped(self) -> "TriMesh":
        """Fill every boundary loop with a fan to its centroid."""
        V = [self.vertices]
        F = [self.faces]
        n = self.n_vertices
        for loop in self.boundary_loops():
            c = self.vertices[loop].mean(axis=0)
            V.append(c[None])
            ring = np.array(loop)
            F.append(np.stack([ring, np.roll(ring, -1), np.full(len(ring), n)], 1))
            n += 1
        return TriMesh(np.concatenate(V), np.concatenate(F), validate=False)

    def submesh(self, face_mask: np.ndarray) -> "TriMesh":
        faces = self.faces[face_mask]
        used, inv = np.unique(faces, return_inverse=True)
        cells = None if self.face_cells is None else self.face_cells[face_mask]
        sub = TriMesh(self.vertices[used], inv.reshape(-1, 3), face_cells=cells, validate=False)
        sub.cutoff_flags = self.cutoff_flags[used]
        return sub

    # ------------------------------------------------------------ curvature

    def cotan_laplacian(self):
        """Cotangent weights ``w_ij`` (sparse, symmetric) and barycentric vertex areas."""
        P = self.vertices[self.faces]
        V = self.n_vertices
        rows, cols, vals = [], [], []
        for k in range(3):
            i, j, o = (k + 1) % 3, (k + 2) % 3, k
            a = P[:, i] - P[:, o]
            b = P[:, j] - P[:, o]
            dot = np.einsum("ij,ij->i", a, b)
            cross = np.sqrt(np.maximum(np.einsum("ij,ij->i", a, a) * np.einsum("ij,ij->i", b, b) - dot**2, 1e-300))
            cot = dot / cross
            rows += [self.faces[:, i], self.faces[:, j]]
            cols += [self.faces[:, j], self.faces[:, i]]
            vals += [0.5 * cot, 0.5 * cot]
        W = coo_matrix((np.concatenate(vals), (np.concatenate(rows), np.concatenate(cols))), shape=(V, V)).tocsr()
        area = np.zeros(V)
        np.add.at(area, self.faces.ravel(), np.repeat(self.face_areas() / 3.0, 3))
        return W, area

    def mixed_areas(self) -> np.ndarray:
        """Mixed Voronoi vertex areas (circumcentric cells, midpoint rule on obtuse faces)."""
        P = self.vertices[self.faces]
        fa = self.face_areas()
        out = np.zeros((len(self.faces), 3))
        e2 = np.empty((len(self.faces), 3))
        cot = np.empty((len(self.faces), 3))
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            a, b = P[:, i] - P[:, k], P[:, j] - P[:, k]
            e = P[:, j] - P[:, i]
            e2[:, k] = np.einsum("ij,ij->i", e, e)
            cot[:, k] = np.einsum("ij,ij->i", a, b) / np.maximum(2 * fa, 1e-300)
        obtuse = cot < 0
        for k in range(3):
            i, j = (k + 1) % 3, (k + 2) % 3
            # Voronoi share of vertex k: edges k-i (opposite j) and k-j (opposite i)
            out[:, k] = (e2[:, j] * cot[:, j] + e2[:, i] * cot[:, i]) / 8.0
        bad = obtuse.any(axis=1)
        out[bad] = np.where(obtuse[bad], fa[bad, None] / 2, fa[bad, None] / 4)
        area = np.zeros(self.n_vertices)
        np.add.at(area, self.faces.ravel(), out.ravel())
        return area

    def _laplace_x(self):
        W, area = self.cotan_laplacian()
        X = self.vertices
        deg = np.asarray(W.sum(axis=1)).ravel()
        return W @ X - deg[:, None] * X, area

    def mean_curvature_vectors(self) -> np.ndarray:
        """Discrete ``H = Laplace(x)`` at vertices (full-trace convention)."""
        LX, area = self._laplace_x()
        with np.errstate(divide="ignore", invalid="ignore"):
            return np.where(area[:, None] > 0, LX / area[:, None], 0.0)

    def willmore_energy(self, include_boundary: bool = False, areas: str = "barycentric") -> float:
        """Cotangent-Laplacian estimate of ``int |H|^2`` (interior vertices by default).

        ``areas`` picks the vertex area: ``"barycentric"`` or ``"mixed"`` (Voronoi).
        """
        LX, area = self._laplace_x()
        if areas == "mixed":
            area = self.mixed_areas()
        elif areas != "barycentric":
            raise ValueError(f"unknown vertex area {areas!r}")
        keep = ~self.boundary_flags if not include_boundary else np.ones(self.n_vertices, dtype=bool)
        keep &= area > 0
        return float(np.sum(np.einsum("ij,ij->i", LX[keep], LX[keep]) / area[keep]))

    def willmore_with_error(self, include_boundary: bool = False):
        """Barycentric estimate and an error indicator.

        The indicator adds the spread against the mixed-area estimate to a
        second-order resolution term ``sum A |H|^2 (h |H|)^2 / 16`` with ``h``
        the longest edge at each vertex.
        """
        wb = self.willmore_energy(include_boundary)
        wm = self.willmore_energy(include_boundary, areas="mixed")
        LX, area = self._laplace_x()
        keep = (~self.boundary_flags if not include_boundary else np.ones(self.n_vertices, dtype=bool)) & (area > 0)
        E = self.edges
        L = np.linalg.norm(self.vertices[E[:, 0]] - self.vertices[E[:, 1]], axis=1)
        h = np.zeros(self.n_vertices)
        np.maximum.at(h, E[:, 0], L)
        np.maximum.at(h, E[:, 1], L)
        H2 = np.einsum("ij,ij->i", LX, LX) / np.where(area > 0, area, 1.0) ** 2
        res = float(np.sum((area * H2 * (h * h * H2) / 16.0)[keep]))
        return wb, abs(wb - wm) + res


# ---------------------------------------------------------------- sampling charts


def sample_mesh(chart, resolution=(32, 32), merge_tol: float = 1e-10) -> TriMesh:
    """Regular grid triangulation of one chart with ``n_u x n_v`` vertices.

    Coincident vertices (periodic seams, collapsed poles) are merged within
    ``merge_tol`` times the mesh size and the faces they make degenerate are
    dropped.  Faces whose centroid violates a chart constraint are removed.
    Vertices on cutoff edges are flagged.
    """
    from .catalog import as_charts

    chart = as_charts(chart)[0]
    nu, nv = int(resolution[0]), int(resolution[1])
    if nu < 2 or nv < 2:
        raise ValueError("resolution must be at least (2, 2)")
    (a1, b1), (a2, b2) = chart.domain
    us, vs = np.linspace(a1, b1, nu), np.linspace(a2, b2, nv)
    U, Vg = np.meshgrid(us, vs, indexing="ij")
    X = chart.evaluate(U.ravel(), Vg.ravel())
    idx = np.arange(nu * nv).reshape(nu, nv)
    q00, q10, q01, q11 = idx[:-1, :-1].ravel(), idx[1:, :-1].ravel(), idx[:-1, 1:].ravel(), idx[1:, 1:].ravel()
    faces = np.concatenate([np.stack([q00, q10, q11], 1), np.stack([q00, q11, q01], 1)])
    I, J = np.meshgrid(np.arange(nu - 1), np.arange(nv - 1), indexing="ij")
    cells = np.stack([us[I.ravel()], us[I.ravel() + 1], vs[J.ravel()], vs[J.ravel() + 1]], 1)
    cells = np.concatenate([cells, cells])
    flags = np.zeros(nu * nv, dtype=bool)
    for e in chart.cutoff_edges:
        sel = {"u0": idx[0, :], "u1": idx[-1, :], "v0": idx[:, 0], "v1": idx[:, -1]}[e]
        flags[sel] = True
    # merge coincident vertices
    scale = max(float(np.max(np.ptp(X, axis=0))), 1e-300)
    tree = cKDTree(X)
    pairs = tree.query_pairs(merge_tol * scale, output_type="ndarray")
    rep = np.arange(len(X))
    if len(pairs):
        g = coo_matrix((np.ones(len(pairs)), (pairs[:, 0], pairs[:, 1])), shape=(len(X), len(X)))
        _, lab = connected_components(g, directed=False)
        first = np.full(lab.max() + 1, len(X))
        np.minimum.at(first, lab, np.arange(len(X)))
        rep = first[lab]
    faces = rep[faces]
    ok = (faces[:, 0] != faces[:, 1]) & (faces[:, 1] != faces[:, 2]) & (faces[:, 0] != faces[:, 2])
    if chart.constraints:
        c = X[faces].mean(axis=1)
        for con in chart.constraints:
            ok &= con.value(c) >= 0
    faces, cells = faces[ok], cells[ok]
    used, inv = np.unique(faces, return_inverse=True)
    f = np.zeros(len(X), dtype=bool)
    np.logical_or.at(f, rep, flags)
    return TriMesh(X[used], inv.reshape(-1, 3), cutoff_flags=f[used], face_cells=cells)


# ---------------------------------------------------------------- I/O


def _tokens(path):
    with open(path, "r", encoding="utf-8") as fh:
        for lineno, line in enumerate(fh, 1):
            line = line.split("#", 1)[0].strip()
            if line:
                yield lineno, line.split()


def _read_obj(path):
    verts, faces = [], []
    for lineno, tok in _tokens(path):
        if tok[0] == "v":
            try:
                verts.append([float(t) for t in tok[1:]])
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad vertex {' '.join(tok)!r}") from exc
        elif tok[0] == "f":
            try:
                ids = [int(t.split("/")[0]) for t in tok[1:]]
            except ValueError as exc:
                raise ParseError(f"{path}:{lineno}: bad face {' '.join(tok)!r}") from exc
            if len(ids) < 3:
                raise ParseError(f"{path}:{lineno}: face with fewer than 3 vertices")
            ids = [i - 1 if i > 0 else len(verts) + i for i in ids]
            faces += [[ids[0], ids[k], ids[k + 1]] for k in range(1, len(ids) - 1)]
    if not verts:
        raise ParseError(f"{path}: no vertices")
    if len({len(v) for v in verts}) != 1 or len(verts[0]) < 3:
        raise ParseError(f"{path}: inconsistent vertex dimensions")
    return np.array(verts), np.array(faces, dtype=np.int64).reshape(-1, 3)


def _read_off(path):
    stream = _tokens(path)
    try:
        lineno, tok = next(stream)
        dim = 3
        if tok[0] == "NDIM":
            dim = int(tok[1])
            lineno, tok = next(stream)
            if tok[0] == "OFF":
                lineno, tok = next(stream)
        elif tok[0] == "OFF":
            if len(tok) > 1:
                tok = tok[1:]
            else:
                lineno, tok = next(stream)
        else:
            raise ParseError(f"{path}:{lineno}: missing OFF header")
        nv, nf = int(tok[0]), int(tok[1])
        verts = []
        for _ in range(nv):
            lineno, tok = next(stream)
            if len(tok) < dim:
                raise ParseError(f"{path}:{lineno}: expected {dim} coordinates")
            verts.append([float(t) for t in tok[:dim]])
        faces = []
        for _ in range(nf):
            lineno, tok = next(stream)
            k = int(tok[0])
            ids = [int(t) for t in tok[1:1 + k]]
            if k < 3 or len(ids) != k:
                raise ParseError(f"{path}:{lineno}: malformed face")
            faces += [[ids[0], ids[j], ids[j + 1]] for j in range(1, k - 1)]
    except StopIteration:
        raise ParseError(f"{path}: unexpected end of file") from None
    except (ValueError, IndexError) as exc:
        raise ParseError(f"{path}: {exc}") from exc
    return np.array(verts, dtype=float).reshape(-1, dim), np.array(faces, dtype=np.int64).reshape(-1, 3)


def load_mesh(path, format: Optional[str] = None) -> TriMesh:
    """Read an OBJ, OFF or NDIM-OFF file.

    Raises
    ------
    ParseError
        Malformed input.
    NonManifold
        Face indices out of range, an edge shared by more than two faces, or
        a non-orientable surface.
    """
    fmt = (format or os.path.splitext(str(path))[1].lstrip(".")).lower()
    if fmt == "obj":
        V, F = _read_obj(path)
    elif fmt in ("off", "ndim", "noff"):
        V, F = _read_off(path)
    else:
        raise ParseError(f"unknown mesh format {fmt!r}")
    if not len(F):
        raise ParseError(f"{path}: no faces")
    mesh = TriMesh(V, F)
    if not mesh.area() > 0:
        raise ParseError(f"{path}: mesh has zero area")
    return mesh


def save_off(mesh: TriMesh, path) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        if mesh.ambient_dim != 3:
            fh.write(f"NDIM {mesh.ambient_dim}\n")
        else:
            fh.write("OFF\n")
        fh.write(f"{mesh.n_vertices} {mesh.n_faces} {mesh.n_edges}\n")
        for v in mesh.vertices:
            fh.write(" ".join(repr(float(c)) for c in v) + "\n")
        for f in mesh.faces:
            fh.write(f"3 {f[0]} {f[1]} {f[2]}\n")
