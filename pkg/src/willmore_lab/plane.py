"""Affine 2-planes in R^n with their tangent and normal projections."""
from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import null_space, subspace_angles


@dataclass(frozen=True, eq=False)
class Plane2:
    """The affine plane ``base + span(frame)``.

    ``frame`` (2, n) and ``coframe`` (n - 2, n) have orthonormal rows that
    together form an orthonormal basis of R^n.
    """

    base: np.ndarray
    frame: np.ndarray
    coframe: np.ndarray

    @classmethod
    def from_vectors(cls, base, vectors) -> "Plane2":
        """Plane through ``base`` spanned by two (not necessarily orthonormal) vectors."""
        base = np.asarray(base, dtype=float).ravel()
        V = np.atleast_2d(np.asarray(vectors, dtype=float))
        if V.shape != (2, base.shape[0]):
            raise ValueError(f"need two vectors in R^{base.shape[0]}, got shape {V.shape}")
        q, r = np.linalg.qr(V.T)
        if abs(r[1, 1]) <= 1e-12 * abs(r[0, 0]):
            raise ValueError("spanning vectors are linearly dependent")
        frame = q.T
        coframe = null_space(frame).T
        return cls(base, frame, coframe)

    @classmethod
    def coordinate(cls, n: int, base=None) -> "Plane2":
        """``R^2 x {0}`` in R^n (optionally translated)."""
        I = np.eye(n)
        b = np.zeros(n) if base is None else np.asarray(base, dtype=float)
        return cls(b, I[:2], I[2:])

    @property
    def ambient_dim(self) -> int:
        return self.base.shape[0]

    @property
    def tangent_projector(self) -> np.ndarray:
        return self.frame.T @ self.frame

    @property
    def normal_projector(self) -> np.ndarray:
        return self.coframe.T @ self.coframe

    def through(self, point) -> "Plane2":
        return Plane2(np.asarray(point, dtype=float).ravel(), self.frame, self.coframe)

    def coords(self, x) -> np.ndarray:
        """In-plane coordinates of ``x`` relative to ``base``."""
        return (np.asarray(x) - self.base) @ self.frame.T

    def heights(self, x) -> np.ndarray:
        """Normal coordinates of ``x`` relative to ``base`` (shape (..., n - 2))."""
        return (np.asarray(x) - self.base) @ self.coframe.T

    def distance(self, x) -> np.ndarray:
        return np.linalg.norm(self.heights(x), axis=-1)

    def project(self, x) -> np.ndarray:
        return self.base + self.coords(x) @ self.frame

    def projector_distance2(self, other) -> float:
        """Squared Frobenius norm ``|p_T - p_S|^2`` (lies in [0, 4])."""
        P2 = other.tangent_projector if isinstance(other, Plane2) else np.asarray(other)
        D = self.tangent_projector - P2
        return float(np.sum(D * D))

    def principal_angles(self, other: "Plane2") -> np.ndarray:
        return np.sort(subspace_angles(self.frame.T, other.frame.T))

    def gram_error(self) -> float:
        B = np.vstack([self.frame, self.coframe])
        return float(np.max(np.abs(B @ B.T - np.eye(B.shape[0]))))

    def to_dict(self) -> dict:
        return {"base": self.base.tolist(), "frame": self.frame.tolist(), "coframe": self.coframe.tolist()}


def projector_distance2(P, Q) -> np.ndarray:
    """Batched ``|P - Q|_F^2`` for projector stacks of shape (..., n, n)."""
    D = np.asarray(P) - np.asarray(Q)
    return np.sum(D * D, axis=(-2, -1))
