import logging
import math
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Any, Dict, List, Optional, Protocol, Sequence, Union

import numpy as np
from scipy.interpolate import barycentric_interpolate

from pavg.enums.constants import DEFAULT_TOL, SCHEME_GEOMETRIES
from pavg.services.paverage import WeightedSample, p_average
from pavg.services.polytopes import DirectionSet

logger = logging.getLogger("pavg.operators")

# cap on the polynomial degree in eps^2 used to extrapolate d(eps) to zero
MAX_EXTRAPOLATION_DEGREE = 6


class LocalProbe(Protocol):
    """A smooth function anchored at a base point with known first and second derivatives."""

    base_point: np.ndarray

    @property
    def base_value(self) -> float: ...

    @property
    def gradient(self) -> np.ndarray: ...

    @property
    def hessian(self) -> np.ndarray: ...

    def increment(self, offsets: np.ndarray) -> np.ndarray: ...


@dataclass(frozen=True, eq=False)
class QuadraticProbe:
    """phi(y) = phi(x) + <a, y-x> + 1/2 <A(y-x), y-x>."""

    base_point: np.ndarray
    base_value: float
    gradient: np.ndarray
    hessian: np.ndarray

    def __post_init__(self) -> None:
        x = np.asarray(self.base_point, dtype=float).reshape(-1)
        a = np.asarray(self.gradient, dtype=float).reshape(-1)
        hess = np.asarray(self.hessian, dtype=float)
        if a.size != x.size or hess.shape != (x.size, x.size):
            raise ValueError("probe base_point, gradient and hessian dimensions disagree")
        if not np.linalg.norm(a) > 0:
            raise ValueError("probe gradient must be nonzero")
        if not np.allclose(hess, hess.T, rtol=0, atol=1e-12):
            raise ValueError("probe hessian must be symmetric")
        object.__setattr__(self, "base_point", x)
        object.__setattr__(self, "base_value", float(self.base_value))
        object.__setattr__(self, "gradient", a)
        object.__setattr__(self, "hessian", 0.5 * (hess + hess.T))

    def increment(self, offsets: np.ndarray) -> np.ndarray:
        h = np.atleast_2d(offsets)
        return h @ self.gradient + 0.5 * np.einsum("ti,ij,tj->t", h, self.hessian, h)


@dataclass(frozen=True)
class LaplacianDecomposition:
    delta2: float
    delta1: float
    delta_inf: float
    recombined: float

    def to_dict(self) -> Dict[str, float]:
        return {
            "delta2G": self.delta2,
            "delta1G": self.delta1,
            "deltaInfG": self.delta_inf,
            "recombined": self.recombined,
        }


@dataclass(frozen=True)
class AmvpReport:
    epsilons: List[float]
    estimates: List[float]
    extrapolated_limit: float
    reference: Optional[float]
    max_abs_error_at_smallest_eps: Optional[float]
    odd_coefficient: float
    extrapolation_error: Optional[float] = None
    mirrored: List[float] = field(default_factory=list, repr=False)
    linear_fit_limit: Optional[float] = None
    linear_fit_slope: Optional[float] = None

    def to_dict(self) -> Dict[str, Any]:
        return {
            "epsilons": self.epsilons,
            "estimates": self.estimates,
            "extrapolated_limit": self.extrapolated_limit,
            "reference": self.reference,
            "max_abs_error_at_smallest_eps": self.max_abs_error_at_smallest_eps,
            "odd_coefficient": self.odd_coefficient,
            "extrapolation_error": self.extrapolation_error,
            "extrapolation": "eps^2 interpolation",
            "linear_fit_limit": self.linear_fit_limit,
            "linear_fit_slope": self.linear_fit_slope,
        }


def _gradient_and_hessian(gradient: Sequence[float], hessian: Sequence[Sequence[float]]):
    xi = np.asarray(gradient, dtype=float).reshape(-1)
    a = np.asarray(hessian, dtype=float)
    if a.shape != (xi.size, xi.size):
        raise ValueError("hessian must be n x n for an n-dimensional gradient")
    norm_sq = float(xi @ xi)
    if norm_sq == 0:
        raise ValueError("zero gradient: the game p-Laplacian is undefined")
    return xi, a, norm_sq


def _check_exponent(p: float) -> float:
    p = float(p)
    if not p > 1:
        raise ValueError(f"p must lie in (1, inf], got {p}")
    return p


def game_p_laplacian(gradient: Sequence[float], hessian: Sequence[Sequence[float]], p: float) -> float:
    """(1/p) tr(A) + ((p-2)/p) <A xi, xi>/|xi|^2; the Rayleigh quotient alone for p = inf."""
    p = _check_exponent(p)
    xi, a, norm_sq = _gradient_and_hessian(gradient, hessian)
    rayleigh = float(xi @ a @ xi) / norm_sq
    if math.isinf(p):
        return rayleigh
    return float(np.trace(a)) / p + (p - 2.0) / p * rayleigh


def game_operator_matrix_form(gradient: Sequence[float], hessian: Sequence[Sequence[float]], p: float) -> float:
    """tr[M(xi) A] with M(xi) = I/p + (1 - 2/p) xi xi^T / |xi|^2."""
    p = _check_exponent(p)
    xi, a, norm_sq = _gradient_and_hessian(gradient, hessian)
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    m = inv_p * np.eye(xi.size) + (1.0 - 2.0 * inv_p) * np.outer(xi, xi) / norm_sq
    return float(np.trace(m @ a))


def laplacian_decomposition(
    gradient: Sequence[float], hessian: Sequence[Sequence[float]], p: float
) -> LaplacianDecomposition:
    p = _check_exponent(p)
    xi, a, norm_sq = _gradient_and_hessian(gradient, hessian)
    delta2 = 0.5 * float(np.trace(a))
    delta_inf = float(xi @ a @ xi) / norm_sq
    delta1 = 2.0 * delta2 - delta_inf
    inv_p = 0.0 if math.isinf(p) else 1.0 / p
    recombined = inv_p * delta1 + (1.0 - inv_p) * delta_inf
    return LaplacianDecomposition(delta2, delta1, delta_inf, recombined)


def probe_eval(probe: QuadraticProbe, y: Sequence[float]) -> float:
    h = np.asarray(y, dtype=float) - probe.base_point
    return probe.base_value + float(h @ probe.gradient) + 0.5 * float(h @ probe.hessian @ h)


def discrete_amvp_estimate(
    probe: LocalProbe,
    directions: DirectionSet,
    epsilon: float,
    p: Optional[float] = None,
    tol: float = DEFAULT_TOL,
) -> float:
    """d(eps) = (A_eps - phi(x)) / (eps^2/2) over the stencil x + eps*eta.

    Computed as A_p of the increments (phi(x + eps*eta) - phi(x)) / (eps^2/2),
    which equals the quotient above by affine invariance.
    """
    if epsilon == 0 or not math.isfinite(epsilon):
        raise ValueError("epsilon must be a nonzero finite number")
    if np.asarray(probe.base_point).size != directions.dimension:
        raise ValueError("probe dimension does not match the direction set")
    p = directions.exponent if p is None else p
    scale = 0.5 * epsilon**2
    sample = WeightedSample(probe.increment(epsilon * directions.vectors) / scale, directions.weights)
    return p_average(sample, p, tol).value


def amvp_sweep(
    probe: LocalProbe,
    directions: DirectionSet,
    eps_list: Sequence[float],
    p: Optional[float] = None,
    tol: float = DEFAULT_TOL,
) -> AmvpReport:
    """d(eps) on a decreasing eps ladder, extrapolated to eps = 0 in powers of eps^2.

    On negation-closed sets d(eps) = d(-eps) exactly, so the fit uses t = eps^2;
    `odd_coefficient` reports how far the measured values are from that symmetry.
    """
    eps = [float(e) for e in eps_list]
    if len(eps) < 2:
        raise ValueError("amvp_sweep needs at least 2 epsilons")
    if any(e <= 0 for e in eps) or any(b >= a for a, b in zip(eps, eps[1:])):
        raise ValueError("epsilons must be positive and strictly decreasing")
    p = directions.exponent if p is None else p

    estimates = [discrete_amvp_estimate(probe, directions, e, p, tol) for e in eps]
    mirrored = [discrete_amvp_estimate(probe, directions, -e, p, tol) for e in eps]
    odd = max(abs(a - b) / (2.0 * e) for a, b, e in zip(estimates, mirrored, eps))

    # interpolate in t = eps^2 through the smallest epsilons and evaluate at t = 0
    used = min(len(eps), MAX_EXTRAPOLATION_DEGREE + 1)
    t = np.asarray(eps[-used:]) ** 2
    limit = float(barycentric_interpolate(t, np.asarray(estimates[-used:]), 0.0))
    # least-squares d(eps) = d0 + c1 eps over the whole ladder, reported alongside
    d0, c1 = np.polynomial.polynomial.polyfit(np.asarray(eps), np.asarray(estimates), 1)

    reference = None
    if directions.expected_d is not None and p == directions.exponent:
        reference = directions.expected_d * game_p_laplacian(probe.gradient, probe.hessian, p)
    report = AmvpReport(
        epsilons=eps,
        estimates=estimates,
        extrapolated_limit=limit,
        reference=reference,
        max_abs_error_at_smallest_eps=None if reference is None else abs(estimates[-1] - reference),
        odd_coefficient=odd,
        extrapolation_error=None if reference is None else abs(limit - reference),
        mirrored=mirrored,
        linear_fit_limit=float(d0),
        linear_fit_slope=float(c1),
    )
    logger.info(
        "amvp %s p=%s limit=%.12g reference=%s", directions.label, p, limit,
        "n/a" if reference is None else f"{reference:.12g}",
    )
    return report


def scheme_constant(p: Union[int, float, Fraction], n: int, geometry: str = "sphere") -> Fraction:
    """c_{p,n}: p/(2(n+p)) for the ball, p/(2(n+p-2)) for the sphere; 1/2 at p = inf."""
    if geometry not in SCHEME_GEOMETRIES:
        raise ValueError(f"geometry must be one of {', '.join(SCHEME_GEOMETRIES)}, got '{geometry}'")
    if n < 2:
        raise ValueError("n must be at least 2")
    if isinstance(p, float) and math.isinf(p):
        return Fraction(1, 2)
    exact = Fraction(p) if not isinstance(p, float) else Fraction(p).limit_denominator(10**9)
    if exact <= 1:
        raise ValueError(f"p must exceed 1, got {p}")
    if geometry == "ball":
        return exact / (2 * (n + exact))
    return exact / (2 * (n + exact - 2))
