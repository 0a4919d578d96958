"""Ball-restricted integrals, area densities and the monotonicity identity.

Conventions: ``r = |y - x|`` for a centre ``x``; ``grad_perp_r`` is the normal
part of ``(y - x) / r``; ``H`` is the full trace of the second fundamental
form, so ``|H| = 2/R`` on a round sphere of radius ``R``.
"""
from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional, Sequence

import numpy as np

from .catalog import as_charts
from .errors import InputError, NonConvergent
from .quadrature import Ball, QuadratureResult, annulus, integrate
from .report import to_csv, to_json

__all__ = [
    "BallRegion", "DensityProfile", "MonotonicityLedger", "RadialDeviation",
    "integrate_over_ball", "density_ratio", "density_at_infinity", "extrapolate_density",
    "point_density", "willmore_energy", "monotonicity_check", "radial_deviation_energy",
    "default_radii",
]


def BallRegion(center, radius: float) -> Ball:
    """Closed ball ``B_radius(center)``."""
    return Ball(center, radius)


def _ones(geo):
    return np.ones(len(geo))


def _radial(geo, x):
    d = geo.x - np.asarray(x, dtype=float)
    r = np.linalg.norm(d, axis=1)
    return r, geo.radial_normal(x)


def integrate_over_ball(surface, ball: Ball, integrand, *, allow_truncation: bool = False,
                        **kw) -> QuadratureResult:
    """Integrate ``integrand(geometry)`` over ``surface`` restricted to ``ball``."""
    return integrate(surface, integrand, ball, allow_truncation=allow_truncation, **kw)


def density_ratio(surface, x, r: float, **kw) -> QuadratureResult:
    """``Theta(x, r) = area(B_r(x)) / (pi r^2)`` with its error estimate."""
    res = integrate(surface, _ones, Ball(x, r), **kw)
    s = math.pi * r * r
    return QuadratureResult(res.value / s, res.error_estimate / s, res.cells_used)


def willmore_energy(surface, region=None, **kw) -> QuadratureResult:
    """``int |H|^2`` over the surface, or over ``region`` (a Ball or constraint tuple)."""
    return integrate(surface, lambda g: g.H2, region, **kw)


def default_radii(r_max: float, n: int = 7, decades: float = 2.0) -> np.ndarray:
    """Geometric schedule of ``n`` radii ending at ``r_max`` and spanning ``decades``."""
    return r_max * np.logspace(-decades, 0.0, n)


def _lstsq_intercept(A, y, w):
    Aw = A * w[:, None]
    yw = y * w
    coef, *_ = np.linalg.lstsq(Aw, yw, rcond=None)
    resid = yw - Aw @ coef
    dof = len(y) - A.shape[1]
    if dof > 0:
        s2 = float(resid @ resid) / dof
        cov = s2 * np.linalg.pinv(Aw.T @ Aw)
        se = math.sqrt(max(cov[0, 0], 0.0))
    else:
        se = 0.0
    return float(coef[0]), se, coef


def extrapolate_density(radii, theta, theta_err=None, *, rel_floor: float = 0.01) -> dict:
    """Extrapolate ``Theta(x, r)`` to ``r -> infinity`` from the last decade of radii.

    Two models are fitted by least squares: ``a + b/r`` and
    ``a + b/r + c log(r)/r^2``.  The reported limit is the mean of the two
    intercepts; its uncertainty is the larger of the model spread, the fit
    standard errors and the propagated quadrature errors.

    Raises
    ------
    NonConvergent
        If the intercepts differ by more than five times the statistical
        uncertainty and by more than ``rel_floor`` relative to the limit.
    """
    radii = np.asarray(radii, dtype=float)
    theta = np.asarray(theta, dtype=float)
    if theta_err is None:
        theta_err = np.zeros_like(theta)
    theta_err = np.asarray(theta_err, dtype=float)
    if len(radii) < 3 or np.any(np.diff(radii) <= 0):
        raise InputError("need at least 3 strictly increasing radii")
    last = radii >= radii[-1] / 10.0 * (1 - 1e-12)
    if last.sum() < 3:
        last = np.zeros_like(last)
        last[-3:] = True
    r, t, e = radii[last], theta[last], theta_err[last]
    w = np.ones_like(r)
    A1 = np.stack([np.ones_like(r), 1.0 / r], 1)
    a1, se1, c1 = _lstsq_intercept(A1, t, w)
    A2 = np.stack([np.ones_like(r), 1.0 / r, np.log(r) / r**2], 1)
    a2, se2, c2 = _lstsq_intercept(A2, t, w)
    quad = float(np.max(e)) * 2.0
    stat = max(se1, se2, quad, 1e-15)
    spread = abs(a1 - a2)
    limit = 0.5 * (a1 + a2)
    if spread > 5.0 * stat and spread > rel_floor * max(abs(limit), 1.0):
        raise NonConvergent(
            f"density extrapolation models disagree: a+b/r -> {a1:.6g}, "
            f"a+b/r+c log r/r^2 -> {a2:.6g} (statistical uncertainty {stat:.3g})"
        )
    return {
        "theta_infinity": limit,
        "uncertainty": max(spread, stat),
        "model_inverse_r": {"limit": a1, "stderr": se1, "coefficients": c1.tolist()},
        "model_log": {"limit": a2, "stderr": se2, "coefficients": c2.tolist()},
        "spread": spread,
        "radii_used": r.tolist(),
        "theta_star_lower": float(np.min(t)),
        "theta_star_upper": float(np.max(t)),
    }


@dataclass
class DensityProfile:
    """Density ratios ``Theta(x, r)`` on a radius schedule plus the extrapolated limit.

    ``theta_star_lower``/``theta_star_upper`` are the running inf/sup over
    the last decade of radii: cutoff surrogates for the lower and upper
    densities at infinity.
    """

    center: tuple
    radii: np.ndarray
    theta: np.ndarray
    theta_err: np.ndarray
    theta_infinity: float
    theta_infinity_err: float
    theta_star_lower: float
    theta_star_upper: float
    extrapolation: dict = field(default_factory=dict)
    surface: str = ""
    cutoff: Optional[float] = None

    def rows(self):
        return [(float(r), float(t), float(e)) for r, t, e in zip(self.radii, self.theta, self.theta_err)]

    def to_csv(self) -> str:
        return to_csv(["r", "theta", "theta_err"], self.rows())

    def to_dict(self) -> dict:
        return {
            "surface": self.surface,
            "center": list(self.center),
            "cutoff": self.cutoff,
            "rows": [{"r": r, "theta": t, "theta_err": e} for r, t, e in self.rows()],
            "extrapolation": {
                "theta_infinity": self.theta_infinity,
                "theta_infinity_err": self.theta_infinity_err,
                "theta_star_lower": self.theta_star_lower,
                "theta_star_upper": self.theta_star_upper,
                "cutoff_surrogate": True,
                **{k: v for k, v in self.extrapolation.items()
                   if k not in ("theta_infinity", "uncertainty", "theta_star_lower", "theta_star_upper")},
            },
        }

    def to_json(self) -> str:
        return to_json(self.to_dict())


def _surface_name(surface) -> str:
    return getattr(surface, "name", None) or "+".join(c.name for c in as_charts(surface))


def _cutoff(surface):
    return getattr(surface, "cutoff", None)


def density_at_infinity(surface, x=None, radii: Optional[Sequence[float]] = None, *,
                        r_max: Optional[float] = None, rtol: float = 1e-8, check: bool = True,
                        **kw) -> DensityProfile:
    """Density profile of ``surface`` about ``x`` and its extrapolated limit at infinity.

    Parameters
    ----------
    radii : sequence of float, optional
        At least 6 increasing radii spanning two decades.  Defaults to
        ``default_radii(r_max)``; ``r_max`` defaults to a quarter of the
        catalog cutoff.
    check : bool
        Enforce the schedule requirements.
    """
    charts = as_charts(surface)
    n = charts[0].ambient_dim
    x = tuple(np.zeros(n)) if x is None else tuple(float(c) for c in np.ravel(x))
    if radii is None:
        if r_max is None:
            cut = _cutoff(surface)
            if cut is None:
                raise InputError("r_max is required for surfaces without a recorded cutoff")
            r_max = cut / 4.0
        radii = default_radii(r_max)
    radii = np.asarray(radii, dtype=float)
    if check:
        if len(radii) < 6 or radii[-1] / radii[0] < 100 * (1 - 1e-9):
            raise InputError("density_at_infinity needs >= 6 radii spanning >= 2 decades")
    if np.any(np.diff(radii) <= 0):
        raise InputError("radii must be strictly increasing")
    th, er = [], []
    for r in radii:
        res = density_ratio(surface, x, float(r), rtol=rtol, **kw)
        th.append(res.value)
        er.append(res.error_estimate)
    th, er = np.array(th), np.array(er)
    ex = extrapolate_density(radii, th, er)
    return DensityProfile(x, radii, th, er, ex["theta_infinity"], ex["uncertainty"],
                          ex["theta_star_lower"], ex["theta_star_upper"], ex,
                          surface=_surface_name(surface), cutoff=_cutoff(surface))


def point_density(surface, x, sigma0: float = 0.05, **kw) -> dict:
    """Extrapolate ``Theta(x, sigma)`` to ``sigma -> 0`` from ``sigma0, sigma0/2, sigma0/4``.

    Fits ``a + b sigma``; the uncertainty combines the fit residual, the
    quadrature errors and the change of the intercept when the largest
    radius is dropped.
    """
    sig = np.array([sigma0 / 4, sigma0 / 2, sigma0])
    vals, errs = [], []
    for s in sig:
        res = density_ratio(surface, x, float(s), **kw)
        vals.append(res.value)
        errs.append(res.error_estimate)
    vals, errs = np.array(vals), np.array(errs)
    A = np.stack([np.ones(3), sig], 1)
    coef, *_ = np.linalg.lstsq(A, vals, rcond=None)
    resid = vals - A @ coef
    two = vals[0] - (vals[1] - vals[0])  # linear through the two smallest radii
    unc = float(np.max(np.abs(resid)) + abs(two - coef[0]) + 2 * np.max(errs))
    return {"theta": float(coef[0]), "uncertainty": unc, "sigma": sig.tolist(), "values": vals.tolist(),
            "errors": errs.tolist()}


@dataclass
class MonotonicityLedger:
    """All terms of the monotonicity identity for ``sigma < rho`` about ``center``."""

    center: tuple
    sigma: float
    rho: float
    lhs: float
    terms: dict
    term_errors: dict
    residual: float
    combined_error: float
    inequality_slack: dict
    inequality_error: float

    @property
    def closes(self) -> bool:
        return abs(self.residual) <= 3.0 * self.combined_error

    def rows(self):
        out = [("lhs", self.lhs, self.term_errors["lhs"])]
        out += [(k, v, self.term_errors[k]) for k, v in self.terms.items()]
        out.append(("residual", self.residual, self.combined_error))
        out += [(f"slack_delta_{d}", s, self.inequality_error) for d, s in self.inequality_slack.items()]
        return out

    def to_csv(self) -> str:
        return to_csv(["term", "value", "error"], self.rows())

    def to_dict(self) -> dict:
        return {"center": list(self.center), "sigma": self.sigma, "rho": self.rho,
                "rows": [{"term": t, "value": v, "error": e} for t, v, e in self.rows()],
                "closes": self.closes}


def monotonicity_check(surface, x, sigma: float, rho: float, *, deltas=(0.1, 0.5, 1.0),
                       rtol: float = 1e-10, **kw) -> MonotonicityLedger:
    """Evaluate every term of the monotonicity identity and the derived inequality.

    ``lhs = mu(B_sigma)/sigma^2`` must equal the sum of ``terms``; the
    inequality slack for each ``delta`` is
    ``(1 + delta) mu(B_rho)/rho^2 + (1/(2 delta)) int_{B_rho} |H|^2 - lhs``.
    """
    if not 0 < sigma < rho:
        raise InputError("need 0 < sigma < rho")
    x = tuple(float(c) for c in np.ravel(x))

    def ball_terms(geo):
        r, nr = _radial(geo, x)
        H = geo.mean_curvature
        return np.stack([np.ones(len(geo)), r * np.einsum("ij,ij->i", nr, H), geo.H2], 1)

    def ann_terms(geo):
        r, nr = _radial(geo, x)
        H = geo.mean_curvature
        w = nr / r[:, None] + H / 4.0
        return np.stack([geo.H2, np.einsum("ij,ij->i", w, w)], 1)

    opts = dict(rtol=rtol, **kw)
    bs = integrate(surface, ball_terms, Ball(x, sigma), **opts)
    br = integrate(surface, ball_terms, Ball(x, rho), **opts)
    an = integrate(surface, ann_terms, annulus(x, sigma, rho), **opts)
    lhs = bs.value[0] / sigma**2
    terms = {
        "mass_rho": br.value[0] / rho**2,
        "willmore_annulus": an.value[0] / 16.0,
        "radial_deviation_annulus": -an.value[1],
        "boundary_rho": br.value[1] / (2 * rho**2),
        "boundary_sigma": -bs.value[1] / (2 * sigma**2),
    }
    errors = {
        "lhs": bs.error_estimate[0] / sigma**2,
        "mass_rho": br.error_estimate[0] / rho**2,
        "willmore_annulus": an.error_estimate[0] / 16.0,
        "radial_deviation_annulus": an.error_estimate[1],
        "boundary_rho": br.error_estimate[1] / (2 * rho**2),
        "boundary_sigma": bs.error_estimate[1] / (2 * sigma**2),
    }
    total = sum(terms.values())
    residual = lhs - total
    scale = abs(lhs) + sum(abs(v) for v in terms.values())
    combined = sum(errors.values()) + 64 * np.finfo(float).eps * scale
    willmore_rho = br.value[2]
    slack = {}
    for d in deltas:
        slack[float(d)] = (1 + d) * terms["mass_rho"] + willmore_rho / (2 * d) - lhs
    ineq_err = errors["lhs"] + 2 * errors["mass_rho"] + br.error_estimate[2] / (2 * min(deltas))
    return MonotonicityLedger(x, float(sigma), float(rho), float(lhs), {k: float(v) for k, v in terms.items()},
                              {k: float(v) for k, v in errors.items()}, float(residual), float(combined),
                              {k: float(v) for k, v in slack.items()}, float(ineq_err))


@dataclass
class RadialDeviation:
    """``int |grad_perp r / r|^2`` over a region, and the density bound slack."""

    integral: float
    error: float
    density: float
    density_err: float
    theta_star_lower: float
    willmore: float
    willmore_err: float
    slack: float
    slack_err: float

    def to_dict(self) -> dict:
        return dict(self.__dict__)


def radial_deviation_energy(surface, x, region=None, *, rho: Optional[float] = None,
                            theta_star_lower: Optional[float] = None, compact: Optional[bool] = None,
                            **kw) -> RadialDeviation:
    """Radial deviation energy about ``x`` and the slack of the density bound.

    The slack is ``9 Theta_* + (59 / 16 pi) int |H|^2 - mu(B_rho(x)) / (pi rho^2)``,
    with ``int |H|^2`` over the whole (cutoff) surface.  ``Theta_*`` is the
    lower density at infinity: zero for compact surfaces, otherwise the
    running infimum of a density profile about ``x`` unless given.

    Parameters
    ----------
    region : Ball or constraint tuple, optional
        Domain of the radial deviation integral (default: whole surface).
    rho : float, optional
        Radius for the density ratio; defaults to the region radius or 1.
    """
    x = tuple(float(c) for c in np.ravel(x))
    charts = as_charts(surface)
    if compact is None:
        compact = not any(c.cutoff_edges for c in charts)
    allow = kw.pop("allow_truncation", region is None)

    def rad(geo):
        r, nr = _radial(geo, x)
        return np.einsum("ij,ij->i", nr, nr) / r**2

    res = integrate(surface, rad, region, allow_truncation=allow, **kw)
    if rho is None:
        rho = region.radius if isinstance(region, Ball) else 1.0
    dens = density_ratio(surface, x, rho, allow_truncation=allow, **kw)
    will = integrate(surface, lambda g: g.H2, None, allow_truncation=True, **kw)
    if theta_star_lower is None:
        theta_star_lower = 0.0 if compact else density_at_infinity(surface, x, **kw).theta_star_lower
    slack = 9 * theta_star_lower + 59 / (16 * math.pi) * will.value - dens.value
    slack_err = dens.error_estimate + 59 / (16 * math.pi) * will.error_estimate
    return RadialDeviation(float(res.value), float(res.error_estimate), float(dens.value),
                           float(dens.error_estimate), float(theta_star_lower), float(will.value),
                           float(will.error_estimate), float(slack), float(slack_err))
