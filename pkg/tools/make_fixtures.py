"""Regenerate the mesh fixtures in ``fixtures/``.

The double torus is extracted with scikit-image's marching cubes, which is
only needed here and is not a dependency of the package.
"""
import math
import pathlib

import numpy as np

from willmore_lab import catalog
from willmore_lab.mesh import TriMesh, sample_mesh, save_off

OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def icosphere(levels=2):
    t = (1 + math.sqrt(5)) / 2
    V = [(-1, t, 0), (1, t, 0), (-1, -t, 0), (1, -t, 0), (0, -1, t), (0, 1, t), (0, -1, -t), (0, 1, -t),
         (t, 0, -1), (t, 0, 1), (-t, 0, -1), (-t, 0, 1)]
    F = [(0, 11, 5), (0, 5, 1), (0, 1, 7), (0, 7, 10), (0, 10, 11), (1, 5, 9), (5, 11, 4), (11, 10, 2),
         (10, 7, 6), (7, 1, 8), (3, 9, 4), (3, 4, 2), (3, 2, 6), (3, 6, 8), (3, 8, 9), (4, 9, 5),
         (2, 4, 11), (6, 2, 10), (8, 6, 7), (9, 8, 1)]
    V = [np.array(v, float) / np.linalg.norm(v) for v in V]
    for _ in range(levels):
        mid = {}

        def m(a, b):
            key = (min(a, b), max(a, b))
            if key not in mid:
                p = V[a] + V[b]
                V.append(p / np.linalg.norm(p))
                mid[key] = len(V) - 1
            return mid[key]

        F = [g for a, b, c in F for g in ((a, m(a, b), m(c, a)), (b, m(b, c), m(a, b)),
                                           (c, m(c, a), m(b, c)), (m(a, b), m(b, c), m(c, a)))]
    return TriMesh(np.array(V), np.array(F))


def double_torus(n=72):
    from skimage.measure import marching_cubes

    g = np.linspace(-1.4, 1.4, n)
    X, Y, Z = np.meshgrid(g, g, g, indexing="ij")
    # boundary of a thickened figure-eight (lemniscate) curve
    F = ((X**2 + Y**2) ** 2 - X**2 + Y**2) ** 2 + Z**2 - 0.02
    verts, faces, _, _ = marching_cubes(F, 0.0, spacing=(g[1] - g[0],) * 3)
    return TriMesh(verts + g[0], faces)


def main():
    OUT.mkdir(exist_ok=True)
    meshes = {
        "icosphere.off": icosphere(2),
        "torus.off": sample_mesh(catalog.torus(2.0, 0.7, ambient_dim=3), (48, 24)),
        "double_torus.off": double_torus(),
    }
    for name, mesh in meshes.items():
        save_off(mesh, OUT / name)
        chi = mesh.euler_characteristic()
        print(f"{name}: V={mesh.n_vertices} F={mesh.n_faces} chi={chi} genus={(2 - chi) // 2}")


if __name__ == "__main__":
    main()
