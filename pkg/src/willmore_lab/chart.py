"""Parametric surface patches and their pointwise differential geometry.

A :class:`SurfaceChart` is a map ``f: [a1, b1] x [a2, b2] -> R^n`` (``n >= 3``)
evaluated on numpy arrays of parameters.  Exact first and second derivatives
can be supplied; otherwise central finite differences are used.

:class:`LocalGeometry` bundles the 2-jet of ``f`` at a batch of points and
derives the induced metric, tangent/normal projections, second fundamental
form, mean curvature vector and ``|A|^2``.

Conventions: ``H`` is the full trace ``g^{ij} (f_ij)^perp`` so that the round
sphere of radius ``R`` has ``|H| = 2/R`` (some texts use half of this).
"""
from __future__ import annotations

from dataclasses import dataclass, field, replace
from functools import cached_property
from typing import Callable, Optional, Sequence

import numpy as np

from .errors import DegenerateImmersion

TOL_G = 1e-14
ROUNDOFF_TRACE = 64 * np.finfo(float).eps

EDGES = ("u0", "u1", "v0", "v1")


def _dot(a, b):
    return np.einsum("ij,ij->i", a, b)


class LocalGeometry:
    """Differential quantities of an immersion at a batch of ``N`` points.

    Parameters
    ----------
    x, fu, fv : ndarray, shape (N, n)
        Position and first derivatives.
    fuu, fuv, fvv : ndarray, shape (N, n), optional
        Second derivatives.  Required for curvature quantities.
    """

    def __init__(self, x, fu, fv, fuu=None, fuv=None, fvv=None, u=None, v=None):
        self.x = x
        self.fu = fu
        self.fv = fv
        self.fuu = fuu
        self.fuv = fuv
        self.fvv = fvv
        self.u = u
        self.v = v

    def __len__(self):
        return self.x.shape[0]

    @property
    def ambient_dim(self) -> int:
        return self.x.shape[1]

    @cached_property
    def metric(self) -> np.ndarray:
        E = np.einsum("ij,ij->i", self.fu, self.fu)
        F = np.einsum("ij,ij->i", self.fu, self.fv)
        G = np.einsum("ij,ij->i", self.fv, self.fv)
        return np.stack([np.stack([E, F], -1), np.stack([F, G], -1)], -2)

    @cached_property
    def det_g(self) -> np.ndarray:
        g = self.metric
        return g[:, 0, 0] * g[:, 1, 1] - g[:, 0, 1] ** 2

    @cached_property
    def jacobian(self) -> np.ndarray:
        """Area density ``sqrt(det g)`` with respect to ``du dv``."""
        return np.sqrt(np.maximum(self.det_g, 0.0))

    @cached_property
    def inverse_metric(self) -> np.ndarray:
        g = self.metric
        det = self.det_g
        with np.errstate(divide="ignore", invalid="ignore"):
            inv = np.empty_like(g)
            inv[:, 0, 0] = g[:, 1, 1] / det
            inv[:, 1, 1] = g[:, 0, 0] / det
            inv[:, 0, 1] = inv[:, 1, 0] = -g[:, 0, 1] / det
        return inv

    def check_immersion(self, tol_g: float = TOL_G) -> None:
        bad = ~(self.det_g > tol_g)
        if np.any(bad):
            i = int(np.flatnonzero(bad)[0])
            where = ""
            if self.u is not None:
                where = f" at (u, v) = ({self.u[i]:.6g}, {self.v[i]:.6g})"
            raise DegenerateImmersion(
                f"det(g) = {self.det_g[i]:.3e} <= {tol_g:g}{where}"
            )

    @cached_property
    def _gs(self):
        # Gram-Schmidt: e1 = c11 fu, e2 = c21 fu + c22 fv
        nu = np.sqrt(_dot(self.fu, self.fu))
        e1 = self.fu / nu[:, None]
        w = self.fv - _dot(self.fv, e1)[:, None] * e1
        nw = np.sqrt(_dot(w, w))
        e2 = w / nw[:, None]
        c11 = 1.0 / nu
        c21 = -_dot(self.fv, self.fu) / (nu * nu * nw)
        c22 = 1.0 / nw
        return e1, e2, c11, c21, c22

    @property
    def _e(self):
        return self._gs[:2]

    @property
    def frame(self) -> np.ndarray:
        """Orthonormal tangent frame, shape (N, n, 2) (Gram-Schmidt on fu, fv)."""
        return np.stack(self._e, axis=-1)

    @cached_property
    def tangent_projector(self) -> np.ndarray:
        """Orthogonal projection matrices onto the tangent planes, (N, n, n)."""
        e1, e2 = self._e
        return e1[:, :, None] * e1[:, None, :] + e2[:, :, None] * e2[:, None, :]

    def tangent_part(self, w: np.ndarray) -> np.ndarray:
        e1, e2 = self._e
        return _dot(w, e1)[:, None] * e1 + _dot(w, e2)[:, None] * e2

    def normal_part(self, w: np.ndarray) -> np.ndarray:
        return w - self.tangent_part(w)

    def _require_second(self):
        if self.fuu is None:
            raise ValueError("second derivatives are not available for this geometry")

    @cached_property
    def _A_frame(self):
        """``A(e_a, e_b)`` in the orthonormal frame: (A11, A12, A22)."""
        self._require_second()
        _, _, c11, c21, c22 = self._gs
        a11 = self.normal_part(self.fuu)
        a12 = self.normal_part(self.fuv)
        a22 = self.normal_part(self.fvv)
        b11 = (c11 * c11)[:, None] * a11
        b12 = (c11 * c21)[:, None] * a11 + (c11 * c22)[:, None] * a12
        b22 = (c21 * c21)[:, None] * a11 + (2 * c21 * c22)[:, None] * a12 + (c22 * c22)[:, None] * a22
        return b11, b12, b22

    @cached_property
    def second_fundamental_form(self) -> np.ndarray:
        """Normal-valued ``A_ij = (f_ij)^perp`` in parameter coordinates, shape (N, 2, 2, n)."""
        self._require_second()
        a11 = self.normal_part(self.fuu)
        a12 = self.normal_part(self.fuv)
        a22 = self.normal_part(self.fvv)
        return np.stack([np.stack([a11, a12], 1), np.stack([a12, a22], 1)], 1)

    @cached_property
    def mean_curvature(self) -> np.ndarray:
        """Mean curvature vector ``g^{ij} A_ij``, shape (N, n)."""
        b11, _, b22 = self._A_frame
        H = b11 + b22
        # Snap to zero what cannot be told apart from roundoff in the trace.
        # Without this, minimal surfaces feed pure noise to relative error
        # control and adaptive quadrature refines without end.
        _, _, c11, c21, c22 = self._gs
        nrm = lambda a: np.sqrt(_dot(a, a))
        scale = (c11 * c11 + c21 * c21) * nrm(self.fuu) + 2 * np.abs(c21 * c22) * nrm(self.fuv) \
            + c22 * c22 * nrm(self.fvv)
        noise = nrm(H) <= ROUNDOFF_TRACE * scale
        return np.where(noise[:, None], 0.0, H)

    @cached_property
    def A2(self) -> np.ndarray:
        """``|A|^2 = g^{ik} g^{jl} <A_ij, A_kl>``."""
        b11, b12, b22 = self._A_frame
        return _dot(b11, b11) + 2 * _dot(b12, b12) + _dot(b22, b22)

    @cached_property
    def H2(self) -> np.ndarray:
        H = self.mean_curvature
        return _dot(H, H)

    @cached_property
    def gauss_curvature(self) -> np.ndarray:
        """Intrinsic curvature from the Gauss equation ``K = (|H|^2 - |A|^2) / 2``."""
        return 0.5 * (self.H2 - self.A2)

    def radial_normal(self, center) -> np.ndarray:
        """``nabla^perp r`` for ``r = |x - center|``: normal part of ``(x - c)/r``."""
        d = self.x - np.asarray(center, dtype=float)
        r = np.linalg.norm(d, axis=1)
        with np.errstate(divide="ignore", invalid="ignore"):
            unit = np.where(r[:, None] > 0, d / r[:, None], 0.0)
        return self.normal_part(unit)


@dataclass(frozen=True)
class SurfaceChart:
    """An immersed patch ``f: [u0,u1] x [v0,v1] -> R^n``.

    Parameters
    ----------
    func : callable
        ``func(u, v)`` returning an array of shape ``u.shape + (n,)``.
    domain : ((u0, u1), (v0, v1))
    jet_func : callable, optional
        ``jet_func(u, v)`` returning ``(f, fu, fv)`` or
        ``(f, fu, fv, fuu, fuv, fvv)``.  Missing orders are filled in with
        central differences of step ``h_fd``.
    periodic : (bool, bool)
        Whether the ``u`` / ``v`` edges are glued (seams, not boundaries).
    cutoff_edges : tuple of str
        Domain edges (``"u0"``, ``"u1"``, ``"v0"``, ``"v1"``) that are
        artificial truncations of a non-compact surface.
    constraints : tuple
        Regions (see :mod:`willmore_lab.quadrature`) that restrict the chart
        to a non-rectangular piece of its parameter rectangle.
    """

    func: Callable
    domain: tuple
    jet_func: Optional[Callable] = None
    h_fd: Optional[float] = None
    periodic: tuple = (False, False)
    cutoff_edges: tuple = ()
    constraints: tuple = ()
    name: str = "chart"
    ambient_dim: int = field(default=0)
    derivative_order: int = field(default=-1)

    def __post_init__(self):
        (a1, b1), (a2, b2) = self.domain
        if not (b1 > a1 and b2 > a2):
            raise ValueError(f"empty parameter domain {self.domain}")
        object.__setattr__(self, "domain", ((float(a1), float(b1)), (float(a2), float(b2))))
        if self.derivative_order < 0:
            order = 0
            if self.jet_func is not None:
                uc, vc = self.center
                order = 2 if len(self.jet_func(np.array([uc]), np.array([vc]))) == 6 else 1
            object.__setattr__(self, "derivative_order", order)
        if self.h_fd is None and self.derivative_order < 2:
            object.__setattr__(self, "h_fd", 1e-5 * self.domain_diameter)
        if not self.ambient_dim:
            uc, vc = self.center
            n = np.asarray(self.func(np.array([uc]), np.array([vc]))).shape[-1]
            object.__setattr__(self, "ambient_dim", int(n))
        for e in self.cutoff_edges:
            if e not in EDGES:
                raise ValueError(f"unknown edge {e!r}")

    @property
    def domain_diameter(self) -> float:
        (a1, b1), (a2, b2) = self.domain
        return float(np.hypot(b1 - a1, b2 - a2))

    @property
    def center(self):
        (a1, b1), (a2, b2) = self.domain
        return 0.5 * (a1 + b1), 0.5 * (a2 + b2)

    @property
    def parameter_area(self) -> float:
        (a1, b1), (a2, b2) = self.domain
        return (b1 - a1) * (b2 - a2)

    def evaluate(self, u, v) -> np.ndarray:
        u = np.asarray(u, dtype=float)
        v = np.asarray(v, dtype=float)
        u, v = np.broadcast_arrays(u, v)
        return np.asarray(self.func(u, v), dtype=float)

    def jet(self, u, v):
        """Return ``(f, fu, fv, fuu, fuv, fvv)`` as arrays of shape (N, n)."""
        u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
        u, v = np.broadcast_arrays(u, v)
        if self.jet_func is not None:
            out = [np.asarray(a, dtype=float) for a in self.jet_func(u, v)]
            if len(out) == 6:
                return tuple(out)
            f, fu, fv = out
        else:
            f = self.evaluate(u, v)
            fu, fv = self._fd_first(u, v)
        fuu, fuv, fvv = self._fd_second(u, v, f)
        return f, fu, fv, fuu, fuv, fvv

    def _fd_first(self, u, v):
        h = self.h_fd
        fu = (self.evaluate(u + h, v) - self.evaluate(u - h, v)) / (2 * h)
        fv = (self.evaluate(u, v + h) - self.evaluate(u, v - h)) / (2 * h)
        return fu, fv

    def _fd_second(self, u, v, f):
        # Second differences lose ~eps/h^2; a 10x coarser step balances roundoff.
        h = 10.0 * self.h_fd
        e = self.evaluate
        fuu = (e(u + h, v) - 2 * f + e(u - h, v)) / h**2
        fvv = (e(u, v + h) - 2 * f + e(u, v - h)) / h**2
        fuv = (e(u + h, v + h) - e(u + h, v - h) - e(u - h, v + h) + e(u - h, v - h)) / (4 * h * h)
        return fuu, fuv, fvv

    def geometry(self, u, v, check: bool = False) -> LocalGeometry:
        u = np.atleast_1d(np.asarray(u, dtype=float)).ravel()
        v = np.atleast_1d(np.asarray(v, dtype=float)).ravel()
        u, v = np.broadcast_arrays(u, v)
        geo = LocalGeometry(*self.jet(u, v), u=u, v=v)
        if check:
            geo.check_immersion()
        return geo

    def edge_points(self, edge: str, n: int = 257):
        """Parameter samples along one domain edge."""
        (a1, b1), (a2, b2) = self.domain
        t = np.linspace(0.0, 1.0, n)
        if edge == "u0":
            return np.full(n, a1), a2 + (b2 - a2) * t
        if edge == "u1":
            return np.full(n, b1), a2 + (b2 - a2) * t
        if edge == "v0":
            return a1 + (b1 - a1) * t, np.full(n, a2)
        if edge == "v1":
            return a1 + (b1 - a1) * t, np.full(n, b2)
        raise ValueError(edge)

    def with_domain(self, domain, cutoff_edges: Optional[Sequence[str]] = None) -> "SurfaceChart":
        kw = {"domain": domain}
        if cutoff_edges is not None:
            kw["cutoff_edges"] = tuple(cutoff_edges)
        return replace(self, **kw)

    def trimmed(self, fraction: float) -> "SurfaceChart":
        """Move every cutoff edge inwards by ``fraction`` of the domain length.

        Used to estimate how much an integral still depends on the cutoff.
        """
        (a1, b1), (a2, b2) = self.domain
        du, dv = (b1 - a1) * fraction, (b2 - a2) * fraction
        edges = set(self.cutoff_edges)
        a1 += du if "u0" in edges else 0.0
        b1 -= du if "u1" in edges else 0.0
        a2 += dv if "v0" in edges else 0.0
        b2 -= dv if "v1" in edges else 0.0
        return replace(self, domain=((a1, b1), (a2, b2)))


def chart_from_function(func, domain, *, h_fd=None, **kw) -> SurfaceChart:
    """Wrap a user function; all derivatives by central finite differences."""
    if h_fd is None:
        (a1, b1), (a2, b2) = domain
        h_fd = 1e-5 * float(np.hypot(b1 - a1, b2 - a2))
    return SurfaceChart(func=func, domain=domain, h_fd=h_fd, **kw)


def first_fundamental_form(chart: SurfaceChart, uv) -> np.ndarray:
    """Induced metric ``g_ij = <f_i, f_j>`` at one or many parameter points."""
    u, v, single = _split_uv(uv)
    geo = chart.geometry(u, v, check=True)
    return geo.metric[0] if single else geo.metric


def mean_curvature_vector(chart: SurfaceChart, uv) -> np.ndarray:
    u, v, single = _split_uv(uv)
    geo = chart.geometry(u, v, check=True)
    return geo.mean_curvature[0] if single else geo.mean_curvature


def second_fundamental_form_norm2(chart: SurfaceChart, uv):
    u, v, single = _split_uv(uv)
    geo = chart.geometry(u, v, check=True)
    return float(geo.A2[0]) if single else geo.A2


def _split_uv(uv):
    arr = np.asarray(uv, dtype=float)
    if arr.ndim == 1:
        return arr[:1], arr[1:2], True
    return arr[:, 0], arr[:, 1], False
