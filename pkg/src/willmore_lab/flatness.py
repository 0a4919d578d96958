"""Best-fit planes, tilt-excess, Reifenberg flatness and Lipschitz graph decompositions.

Point-based operations act on a :class:`PointSample` (positions with area
weights, optionally tangent frames).  Operations whose statement is an
integral inequality take the surface itself and use adaptive quadrature.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np
from scipy.spatial import cKDTree

from .catalog import as_charts
from .errors import DegenerateCloud, EmptyBall, InputError, MissingTangents, SamplingTooCoarse
from .measure import point_density
from .plane import Plane2
from .quadrature import Ball, Band, classify_cells, integrate, subdivide
from .report import to_csv, to_json

DEGENERATE_RATIO = 1e-12
AMBIGUOUS_RATIO = 1e-6


@dataclass(eq=False)
class PointSample:
    """Weighted points on a surface.

    Parameters
    ----------
    points : (N, n) array
    weights : (N,) array of positive area weights
    frames : (N, n, 2) orthonormal tangent frames, optional
    reach : (N,) array, optional
        Radius of the surface piece each point stands for; used for the
        Hausdorff sampling bound.  Defaults to nearest-neighbour distances.
    """

    points: np.ndarray
    weights: np.ndarray
    frames: Optional[np.ndarray] = None
    reach: Optional[np.ndarray] = None

    def __post_init__(self):
        self.points = np.atleast_2d(np.asarray(self.points, dtype=float))
        n = len(self.points)
        self.weights = np.asarray(self.weights, dtype=float).ravel()
        if self.weights.shape != (n,):
            raise InputError(f"expected {n} weights, got {self.weights.shape}")
        if np.any(~(self.weights > 0)):
            raise InputError("sample weights must be positive")
        if self.frames is not None:
            self.frames = np.asarray(self.frames, dtype=float)
        if self.reach is None:
            if n > 1:
                d, _ = cKDTree(self.points).query(self.points, k=2)
                self.reach = d[:, 1]
            else:
                self.reach = np.zeros(n)
        self.reach = np.asarray(self.reach, dtype=float)
        self._tree = None

    def __len__(self):
        return len(self.points)

    @property
    def tree(self) -> cKDTree:
        if self._tree is None:
            self._tree = cKDTree(self.points)
        return self._tree

    @property
    def projectors(self) -> np.ndarray:
        if self.frames is None:
            raise MissingTangents("this sample carries no tangent planes")
        F = self.frames
        return np.einsum("nia,nja->nij", F, F)

    def ball_indices(self, center, radius: float) -> np.ndarray:
        idx = self.tree.query_ball_point(np.asarray(center, dtype=float), radius)
        return np.array(sorted(idx), dtype=int)

    def total_weight(self) -> float:
        return float(np.sum(self.weights))

    @classmethod
    def from_surface(cls, surface, center=None, radius: Optional[float] = None,
                     spacing: float = 0.01, base=(16, 16)) -> "PointSample":
        """Sample cell midpoints of an adaptive subdivision with cell-area weights.

        With ``center`` and ``radius`` only cells meeting that ball are kept.
        ``spacing`` bounds the image diameter of every cell.
        """
        region = None if center is None else Ball(center, radius)
        leaves = subdivide(surface, region, target_diameter=spacing, base=base)
        pts, w, fr, rc = [], [], [], []
        for chart, cells in zip(as_charts(surface), leaves):
            if not len(cells):
                continue
            um = 0.5 * (cells[:, 0] + cells[:, 1])
            vm = 0.5 * (cells[:, 2] + cells[:, 3])
            geo = chart.geometry(um, vm)
            area = geo.jacobian * (cells[:, 1] - cells[:, 0]) * (cells[:, 3] - cells[:, 2])
            _, diam, _, _ = classify_cells(chart, cells, ())
            ok = area > 0
            pts.append(geo.x[ok])
            w.append(area[ok])
            fr.append(geo.frame[ok])
            rc.append(0.5 * diam[ok])
        if not pts:
            raise EmptyBall("no part of the surface meets the sampling ball")
        return cls(np.concatenate(pts), np.concatenate(w), np.concatenate(fr), np.concatenate(rc))


# ---------------------------------------------------------------- planes


@dataclass(frozen=True, eq=False)
class PlaneFit:
    """Result of :func:`best_fit_plane`: the plane plus eigen-diagnostics."""

    plane: Plane2
    eigenvalues: np.ndarray
    ambiguous: bool
    alternative: Optional[Plane2] = None

    def __getattr__(self, name):
        # behave like the plane itself for attribute access
        if name.startswith("__") or name == "plane":
            raise AttributeError(name)
        return getattr(self.plane, name)


def best_fit_plane(sample: PointSample, xi, sigma: float) -> PlaneFit:
    """Weighted least-squares plane through ``xi`` for the sample points in ``B_sigma(xi)``.

    The frame is spanned by the two leading eigenvectors of the weighted
    second-moment matrix about ``xi``, which makes the plane optimal among
    planes through ``xi``.  When the second and third eigenvalues tie (ratio
    below ``1 + 1e-6``) the fit is flagged ambiguous; the tie is broken by
    the covariance about the weighted centroid and the other candidate is
    returned as ``alternative``.

    Raises
    ------
    EmptyBall
        Fewer than three points in the ball.
    DegenerateCloud
        ``lambda_2 <= 1e-12 lambda_1``.
    """
    xi = np.asarray(xi, dtype=float)
    idx = sample.ball_indices(xi, sigma)
    if len(idx) < 3:
        raise EmptyBall(f"only {len(idx)} sample points in B_{sigma:g}({tuple(map(float, xi))})")
    X = sample.points[idx] - xi
    w = sample.weights[idx] / np.sum(sample.weights[idx])
    M = (X * w[:, None]).T @ X
    lam, vec = np.linalg.eigh(M)
    lam, vec = lam[::-1], vec[:, ::-1]
    if lam[1] <= DEGENERATE_RATIO * lam[0]:
        raise DegenerateCloud(f"points in the ball are nearly collinear (lambda2/lambda1 = {lam[1] / lam[0]:.2e})")
    n = X.shape[1]
    ambiguous = n > 2 and lam[2] > 0 and lam[1] / lam[2] < 1 + AMBIGUOUS_RATIO
    alternative = None
    if ambiguous:
        tied = np.abs(lam - lam[1]) <= AMBIGUOUS_RATIO * lam[1]
        tied[0] = False
        S = vec[:, tied]
        c = w @ X
        C = (X * w[:, None]).T @ X - np.outer(c, c)
        mu, rot = np.linalg.eigh(S.T @ C @ S)
        S = S @ rot[:, ::-1]
        e1 = vec[:, 0]
        plane = Plane2.from_vectors(xi, [e1, S[:, 0]])
        alternative = Plane2.from_vectors(xi, [e1, S[:, 1]])
    else:
        plane = Plane2.from_vectors(xi, vec[:, :2].T)
    return PlaneFit(plane, lam, bool(ambiguous), alternative)


def weighted_plane_residual(sample: PointSample, xi, sigma: float, plane: Plane2) -> float:
    """``sum w d(x, T)^2`` over the ball; the quantity :func:`best_fit_plane` minimises."""
    idx = sample.ball_indices(xi, sigma)
    return float(np.sum(sample.weights[idx] * plane.distance(sample.points[idx]) ** 2))


# ---------------------------------------------------------------- tilt-excess


def _as_plane(T) -> Plane2:
    return T.plane if isinstance(T, PlaneFit) else T


def tilt_excess(source, xi, rho: float, T, **kw) -> float:
    """``E(xi, rho, T) = rho^-2 int_{B_rho(xi)} |p_{T_x Sigma} - p_T|^2 dmu``.

    ``source`` is either a :class:`PointSample` with tangent frames (weighted
    sum) or a surface (adaptive quadrature, keyword arguments are passed to
    :func:`integrate`).
    """
    P = _as_plane(T).tangent_projector
    if isinstance(source, PointSample):
        idx = source.ball_indices(xi, rho)
        if source.frames is None:
            raise MissingTangents("tilt-excess needs tangent planes")
        if not len(idx):
            return 0.0
        F = source.frames[idx]
        Px = np.einsum("nia,nja->nij", F, F)
        D = Px - P
        return float(np.sum(source.weights[idx] * np.sum(D * D, axis=(1, 2))) / rho**2)
    res = integrate(source, lambda g: np.sum((g.tangent_projector - P) ** 2, axis=(1, 2)),
                    Ball(xi, rho), **kw)
    return float(res.value) / rho**2


def gradient_identity_check(frames, T) -> np.ndarray:
    """Pointwise ``1/2 |p_x - p_T|^2 - sum_j |grad^Sigma x^{2+j}|^2`` for tangent frames (N, n, 2).

    The coordinate functions ``x^{2+j}`` are the normal coordinates of ``T``;
    their tangential gradients are ``p_x nu_j``.
    """
    T = _as_plane(T)
    F = np.asarray(frames, dtype=float)
    if F.ndim == 2:
        F = F[None]
    Px = np.einsum("nia,nja->nij", F, F)
    D = Px - T.tangent_projector
    lhs = 0.5 * np.sum(D * D, axis=(1, 2))
    grads = np.einsum("nij,kj->nki", Px, T.coframe)
    rhs = np.sum(grads * grads, axis=(1, 2))
    return lhs - rhs


@dataclass
class SlackReport:
    """An inequality ``lhs <= rhs`` with its terms and numerical error."""

    name: str
    lhs: float
    rhs: float
    terms: dict
    error: float
    params: dict = field(default_factory=dict)

    @property
    def slack(self) -> float:
        return self.rhs - self.lhs

    @property
    def holds(self) -> bool:
        return self.slack >= -self.error

    def to_dict(self) -> dict:
        return {"name": self.name, "lhs": self.lhs, "rhs": self.rhs, "slack": self.slack,
                "error": self.error, "holds": self.holds, "terms": self.terms, "params": self.params}


def integral_gradient_estimate_check(surface, xi, rho: float, T, rtol: float = 1e-8, **kw) -> SlackReport:
    """``E(xi, rho/2, T) <= 4 int_{B_rho} |H|^2 + 592 rho^-2 int_{B_rho} (d(x,T)/rho)^2``."""
    T = _as_plane(T)
    xi = np.asarray(xi, dtype=float)
    P = T.tangent_projector

    def outer(g):
        return np.stack([g.H2, (T.distance(g.x) / rho) ** 2], 1)

    big = integrate(surface, outer, Ball(xi, rho), rtol=rtol, **kw)
    small = integrate(surface, lambda g: np.sum((g.tangent_projector - P) ** 2, axis=(1, 2)),
                      Ball(xi, rho / 2), rtol=rtol, **kw)
    E = float(small.value) / (rho / 2) ** 2
    will, dist = map(float, big.value)
    rhs = 4 * will + 592 * dist / rho**2
    err = float(small.error_estimate) / (rho / 2) ** 2 + 4 * float(big.error_estimate[0]) \
        + 592 * float(big.error_estimate[1]) / rho**2
    return SlackReport("integral_gradient_estimate", E, rhs,
                       {"tilt_excess_half": E, "willmore": will, "distance_l2": dist},
                       err, {"xi": xi.tolist(), "rho": rho})


def band_lemma_check(surface, xi, R: float, y, l: float, beta: float, reference: Optional[Plane2] = None,
                     sigma0: Optional[float] = None, rtol: float = 1e-8, **kw) -> SlackReport:
    """Weighted monotonicity bound concentrating mass near a reference plane.

    ``pi Theta(y) <= (1 + 24 beta) mu(band cap B_R(xi)) / R^2
    + 6/(l beta)^5 R^-2 int_{B_R(xi)} |p_x - p_0|^2 + 2/(l beta)^3 int_{B_R(xi)} |H|^2``
    where the band is ``|q_0(x - y)| < 2 l beta R`` and ``p_0, q_0`` belong
    to ``reference`` (default ``R^2 x {0}``).  ``Theta(y)`` is extrapolated
    from small balls.
    """
    xi = np.asarray(xi, dtype=float)
    y = np.asarray(y, dtype=float)
    if not (0 < l < 1):
        raise InputError("l must lie in (0, 1)")
    if not (0 < beta < 0.25):
        raise InputError("beta must lie in (0, 1/4)")
    if np.linalg.norm(y - xi) >= beta * R:
        raise InputError("y must lie in B_{beta R}(xi)")
    ref = reference if reference is not None else Plane2.coordinate(len(xi))
    P0 = ref.tangent_projector
    lb = l * beta
    band = Band(tuple(y), tuple(map(tuple, ref.coframe)), 2 * lb * R)
    ball = Ball(xi, R)
    mass = integrate(surface, lambda g: np.ones(len(g)), (ball, band), rtol=rtol, **kw)
    rest = integrate(surface, lambda g: np.stack(
        [np.sum((g.tangent_projector - P0) ** 2, axis=(1, 2)), g.H2], 1), ball, rtol=rtol, **kw)
    dens = point_density(surface, y, sigma0=sigma0 or 0.05 * R, rtol=rtol, **kw)
    lhs = math.pi * dens["theta"]
    t_band = (1 + 24 * beta) * float(mass.value) / R**2
    t_tilt = 6 / lb**5 * float(rest.value[0]) / R**2
    t_will = 2 / lb**3 * float(rest.value[1])
    err = (math.pi * dens["uncertainty"] + (1 + 24 * beta) * float(mass.error_estimate) / R**2
           + 6 / lb**5 * float(rest.error_estimate[0]) / R**2 + 2 / lb**3 * float(rest.error_estimate[1]))
    return SlackReport("band_mass", lhs, t_band + t_tilt + t_will,
                       {"density": dens["theta"], "band": t_band, "tilt": t_tilt, "willmore": t_will},
                       err, {"xi": xi.tolist(), "R": R, "y": y.tolist(), "l": l, "beta": beta})


# ---------------------------------------------------------------- Reifenberg flatness


@dataclass(eq=False)
class FlatnessReport:
    """Flatness numbers of the sample in ``B_sigma(xi)`` relative to its best plane.

    ``semi_reifenberg`` is ``sigma^-1 sup d(x, T)`` over sample points,
    ``reifenberg_two_sided`` the normalised Hausdorff distance between the
    sample and the plane disk, ``hausdorff_error_bound`` the normalised
    sampling resolution in the ball.
    """

    xi: np.ndarray
    sigma: float
    plane: Plane2
    tilt_excess: float
    semi_reifenberg: float
    reifenberg_two_sided: float
    hausdorff_error_bound: float
    ambiguous: bool
    alternative: Optional[Plane2] = None

    def row(self):
        return [self.xi.tolist(), self.sigma, self.tilt_excess, self.semi_reifenberg,
                self.reifenberg_two_sided, self.hausdorff_error_bound, self.ambiguous]

    def to_dict(self) -> dict:
        d = {"xi": self.xi.tolist(), "sigma": self.sigma, "plane": self.plane.to_dict(),
             "E": self.tilt_excess, "semi_eps": self.semi_reifenberg, "eps": self.reifenberg_two_sided,
             "err_bound": self.hausdorff_error_bound, "ambiguous_flag": self.ambiguous}
        if self.alternative is not None:
            d["alternative_plane"] = self.alternative.to_dict()
        return d


FLATNESS_COLUMNS = ["xi", "sigma", "E", "semi_eps", "eps", "err_bound", "ambiguous_flag"]


def reports_to_csv(reports: Sequence[FlatnessReport]) -> str:
    return to_csv(FLATNESS_COLUMNS, (r.row() for r in reports))


def reports_to_json(reports: Sequence[FlatnessReport]) -> str:
    return to_json([r.to_dict() for r in reports])


def _disk_grid(plane: Plane2, sigma: float, h: float) -> np.ndarray:
    m = max(int(math.ceil(sigma / h)), 2)
    t = np.linspace(-sigma, sigma, 2 * m + 1)
    A, B = np.meshgrid(t, t, indexing="ij")
    keep = A**2 + B**2 <= sigma**2
    c = np.stack([A[keep], B[keep]], 1)
    return plane.base + c @ plane.frame


def _distance_to_sample(sample: PointSample, idx: np.ndarray, Y: np.ndarray, k: int = 8) -> np.ndarray:
    """Distance from ``Y`` to the sample in the ball.

    With tangent frames each point stands for its tangent disk of radius
    ``reach``; otherwise plain nearest-point distances are used.
    """
    pts = sample.points[idx]
    tree = cKDTree(pts)
    k = min(k, len(pts))
    d, j = tree.query(Y, k=k)
    d, j = d.reshape(len(Y), k), j.reshape(len(Y), k)
    if sample.frames is None:
        return d[:, 0]
    F = sample.frames[idx][j]
    diff = Y[:, None, :] - pts[j]
    tc = np.einsum("mki,mkia->mka", diff, F)
    tn = np.linalg.norm(tc, axis=2)
    nn2 = np.maximum(np.sum(diff * diff, axis=2) - tn**2, 0.0)
    r = sample.reach[idx][j]
    dd = np.sqrt(nn2 + np.maximum(tn - r, 0.0) ** 2)
    return np.min(dd, axis=1)


def flatness_at(sample: PointSample, xi, sigma: float, max_spacing_ratio: float = 0.05) -> FlatnessReport:
    """:class:`FlatnessReport` for one centre and scale."""
    xi = np.asarray(xi, dtype=float)
    idx = sample.ball_indices(xi, sigma)
    if not len(idx):
        raise EmptyBall(f"no sample points in B_{sigma:g}({tuple(map(float, xi))})")
    spacing = 2 * float(np.max(sample.reach[idx]))
    if spacing > max_spacing_ratio * sigma:
        raise SamplingTooCoarse(f"sample spacing {spacing:.3g} exceeds {max_spacing_ratio:g} * sigma = "
                                f"{max_spacing_ratio * sigma:.3g}")
    fit = best_fit_plane(sample, xi, sigma)
    T = fit.plane
    semi = float(np.max(T.distance(sample.points[idx]))) / sigma
    grid = _disk_grid(T, sigma, spacing / 2)
    back = float(np.max(_distance_to_sample(sample, idx, grid))) / sigma
    two = max(semi, back)
    E = tilt_excess(sample, xi, sigma, T) if sample.frames is not None else float("nan")
    return FlatnessReport(xi, float(sigma), T, E, semi, two, spacing / sigma, fit.ambiguous, fit.alternative)


def reifenberg_scan(sample: PointSample, centers, scales, max_spacing_ratio: float = 0.05) -> list:
    """Flatness reports over a grid of centres and scales (centre-major order)."""
    centers = np.atleast_2d(np.asarray(centers, dtype=float))
    scales = [float(s) for s in np.atleast_1d(scales)]
    if min(scales) <= 0:
        raise InputError("scales must be positive")
    return [flatness_at(sample, c, s, max_spacing_ratio) for c in centers for s in scales]


# ---------------------------------------------------------------- Lipschitz decomposition


@dataclass(eq=False)
class LipschitzDecomposition:
    """Greedy split of the sample in ``B_sigma(xi)`` into a cone-compatible good set and the rest."""

    xi: np.ndarray
    sigma: float
    plane: Plane2
    lip_parameter: float
    good: np.ndarray
    bad: np.ndarray
    coords: np.ndarray
    heights: np.ndarray
    measured_lipschitz: float
    bad_measure: float
    uncovered_area: float
    ball_measure: float

    @property
    def symmetric_difference(self) -> float:
        return self.bad_measure + self.uncovered_area

    def to_dict(self) -> dict:
        return {"xi": self.xi.tolist(), "sigma": self.sigma, "plane": self.plane.to_dict(),
                "l": self.lip_parameter, "n_good": int(len(self.good)), "n_bad": int(len(self.bad)),
                "measured_lipschitz": self.measured_lipschitz,
                "lipschitz_bound": self.lip_parameter / math.sqrt(1 - self.lip_parameter**2),
                "bad_measure": self.bad_measure, "uncovered_area": self.uncovered_area,
                "symmetric_difference": self.symmetric_difference, "ball_measure": self.ball_measure}


def _pair_sq(A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """Squared distances between rows of ``A`` and ``B``, accumulated per coordinate."""
    out = np.zeros((len(A), len(B)))
    for j in range(A.shape[1]):
        d = A[:, j, None] - B[None, :, j]
        out += d * d
    return out


def cone_violations(points: np.ndarray, T: Plane2, l: float, block: int = 1024) -> int:
    """Exhaustive count of pairs with ``|q(y - z)| > l |y - z|``."""
    P = np.asarray(points, dtype=float)
    H = T.heights(P)
    bad = 0
    for s in range(0, len(P), block):
        # pairs (i, j) with j >= s cover every unordered pair once or twice
        q2 = _pair_sq(H[s:s + block], H[s:])
        d2 = _pair_sq(P[s:s + block], P[s:])
        viol = q2 > l * l * d2 * (1 + 1e-12)
        bad += int(np.count_nonzero(np.triu(viol, 1)))
    return bad


def _max_slope(xy: np.ndarray, z: np.ndarray, block: int = 1024) -> float:
    best = 0.0
    for s in range(0, len(xy), block):
        dxy = _pair_sq(xy[s:s + block], xy[s:])
        dz = _pair_sq(z[s:s + block], z[s:])
        with np.errstate(divide="ignore", invalid="ignore"):
            r = np.where(dxy > 0, dz / dxy, 0.0)
        best = max(best, float(np.max(r)))
    return math.sqrt(best)


def lipschitz_decompose(sample: PointSample, xi, sigma: float, T, l: float,
                        coverage_radius: Optional[float] = None) -> LipschitzDecomposition:
    """Greedy maximal set of sample points in ``B_sigma(xi)`` satisfying the ``l``-cone condition.

    Points are visited by increasing distance from ``xi`` (ties by index);
    each is kept if ``|q(y - z)| <= l |y - z|`` holds against every point kept
    so far.  The symmetric-difference estimate adds the weight of rejected
    points to the area of the plane disk not covered (within
    ``coverage_radius``, default twice the local sample reach) by
    projections of kept points.
    """
    if not (0 < l < 1):
        raise InputError("l must lie in (0, 1)")
    T = _as_plane(T)
    xi = np.asarray(xi, dtype=float)
    T = T.through(xi)
    idx = sample.ball_indices(xi, sigma)
    if not len(idx):
        raise EmptyBall(f"no sample points in B_{sigma:g}({tuple(map(float, xi))})")
    P = sample.points[idx]
    d = np.linalg.norm(P - xi, axis=1)
    order = np.lexsort((idx, d))
    Q = T.coframe
    kept = np.zeros(len(idx), dtype=bool)
    Hs = (P - xi) @ Q.T
    G = np.empty_like(P)
    GH = np.empty_like(Hs)
    m = 0
    for i in order:
        if m:
            D = P[i] - G[:m]
            E = Hs[i] - GH[:m]
            if np.any(np.einsum("ij,ij->i", E, E) > l * l * np.einsum("ij,ij->i", D, D)):
                continue
        kept[i] = True
        G[m], GH[m] = P[i], Hs[i]
        m += 1
    good, bad = idx[kept], idx[~kept]
    coords = T.coords(sample.points[good])
    heights = T.heights(sample.points[good])
    lip = _max_slope(coords, heights) if len(good) > 1 else 0.0
    bad_measure = float(np.sum(sample.weights[bad]))
    cov = coverage_radius if coverage_radius is not None else 2 * float(np.max(sample.reach[idx]))
    grid = _disk_grid(T, sigma, cov / 2)
    cell = (2 * sigma / (2 * max(int(math.ceil(sigma / (cov / 2))), 2))) ** 2
    if len(good):
        dist, _ = cKDTree(coords).query(T.coords(grid))
        uncovered = float(np.count_nonzero(dist > cov) * cell)
    else:
        uncovered = math.pi * sigma**2
    return LipschitzDecomposition(xi, float(sigma), T, float(l), good, bad, coords, heights, lip,
                                  bad_measure, uncovered, float(np.sum(sample.weights[idx])))


# ---------------------------------------------------------------- constants


def proof_constants() -> dict:
    """Proof constants for annotating reports.  Values are base-2 logarithms or formulas.

    They are far too conservative to serve as runtime thresholds.
    """
    return {
        "lipschitz_delta6": {"formula": "2^-1688 * k^-40", "log2_at_k1": -1688.0},
        "lipschitz_constant": {"formula": "delta^(1/40)"},
        "lipschitz_measure_bound": {"formula": "2^83 * delta^(1/16)", "log2_prefactor": 83.0},
        "semi_reifenberg": {"formula": "2^13 * delta^(1/16)", "log2_prefactor": 13.0,
                            "requires": "delta <= 2^-4"},
        "tilt_excess": {"formula": "2^25 * delta^(1/4)", "log2_prefactor": 25.0},
        "holder_flatness": {"formula": "2^44 * delta^(1/80)", "log2_prefactor": 44.0},
        "graph_condition_beta1": {"formula": "alpha / (48 (2 - alpha))"},
        "graph_condition_delta": {"formula": "alpha^3 / 2^23"},
        "integral_gradient": {"willmore_factor": 4.0, "distance_factor": 592.0},
        "band": {"band_factor": "1 + 24 beta", "tilt_factor": "6 / (l beta)^5", "willmore_factor": "2 / (l beta)^3"},
        "density_bound": {"theta_star_factor": 9.0, "willmore_factor": "59 / (16 pi)"},
        "inverted_willmore": {"factor": 320.0},
        "default_flag_delta": 1e-2,
    }


def constants_json() -> str:
    return to_json(proof_constants())
