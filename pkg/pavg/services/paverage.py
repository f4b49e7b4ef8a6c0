import logging
import math
from dataclasses import dataclass
from typing import Callable, Dict, List, Optional, Sequence, Tuple

import numpy as np
from scipy.optimize import bisect
from scipy.special import gamma as gamma_fn

from pavg.enums.constants import DEFAULT_TOL, MAX_ROOT_ITERATIONS
from pavg.services.helpers.artifacts import read_value_weight_csv

logger = logging.getLogger("pavg.paverage")

_EPS = np.finfo(float).eps


@dataclass(frozen=True)
class WeightedSample:
    """Finite measured dataset: values phi(y_i) with positive weights nu_i."""

    values: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        values = np.asarray(self.values, dtype=float).reshape(-1)
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if values.size == 0:
            raise ValueError("sample needs at least one value")
        if values.size != weights.size:
            raise ValueError(f"sample has {values.size} values but {weights.size} weights")
        if not np.all(np.isfinite(values)):
            raise ValueError("sample values must be finite")
        if not np.all(np.isfinite(weights)) or np.any(weights <= 0):
            raise ValueError("sample weights must be finite and strictly positive")
        object.__setattr__(self, "values", values)
        object.__setattr__(self, "weights", weights)

    @classmethod
    def of(cls, values: Sequence[float], weights: Optional[Sequence[float]] = None) -> "WeightedSample":
        if weights is None:
            weights = np.ones(len(values))
        return cls(np.asarray(values, dtype=float), np.asarray(weights, dtype=float))

    @property
    def normalized_weights(self) -> np.ndarray:
        return self.weights / self.weights.sum()

    @property
    def is_constant(self) -> bool:
        return bool(self.values.max() == self.values.min())


@dataclass(frozen=True)
class PAverageResult:
    value: float
    dispersion: float
    residual: float
    iterations: int
    newton_step: float = 0.0

    def to_dict(self) -> Dict[str, float]:
        return {
            "value": self.value,
            "dispersion": self.dispersion,
            "residual": self.residual,
            "newton_step": self.newton_step,
            "iterations": self.iterations,
        }


@dataclass(frozen=True)
class QuadratureRule:
    """Nodes in the closed unit ball with positive weights."""

    nodes: np.ndarray
    weights: np.ndarray

    def __post_init__(self) -> None:
        nodes = np.atleast_2d(np.asarray(self.nodes, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        if nodes.shape[0] != weights.size:
            raise ValueError("quadrature needs one weight per node")
        if np.any(np.linalg.norm(nodes, axis=1) > 1.0 + 1e-12):
            raise ValueError("quadrature nodes must lie in the closed unit ball")
        if np.any(weights <= 0):
            raise ValueError("quadrature weights must be positive")
        object.__setattr__(self, "nodes", nodes)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.nodes.shape[1]


def _check_p(p: float) -> float:
    p = float(p)
    if math.isnan(p) or p <= 1:
        raise ValueError(f"p must lie in (1, inf], got {p}")
    return p


def characterization_residual(sample: WeightedSample, lam: float, p: float) -> float:
    """F(lam) = sum nu_i |y_i - lam|^(p-2) (y_i - lam); strictly decreasing in lam."""
    p = _check_p(p)
    if math.isinf(p):
        raise ValueError("the characterization equation needs a finite p")
    diff = sample.values - lam
    mask = diff != 0
    # exact ties contribute nothing in the limit for p > 1
    d = diff[mask]
    return float(np.sum(sample.weights[mask] * np.abs(d) ** (p - 2.0) * d))


def _four_average_rows(values: np.ndarray, weights: np.ndarray) -> np.ndarray:
    w = weights / weights.sum()
    mean = values @ w
    dev = values - mean[:, None]
    var = (dev**2) @ w
    third = (dev**3) @ w
    out = mean.copy()
    spread = var > 0
    if np.any(spread):
        sigma = np.sqrt(var[spread])
        kappa = third[spread] / sigma**3
        root = np.sqrt(kappa**2 + 4.0)
        # kappa +- root with the cancelling branch rewritten as -4 / (other branch)
        upper = np.where(kappa >= 0, kappa + root, -4.0 / (kappa - root))
        lower = np.where(kappa >= 0, -4.0 / (kappa + root), kappa - root)
        shift = sigma / np.cbrt(2.0) * (np.cbrt(upper) + np.cbrt(lower))
        out[spread] = mean[spread] + shift
    return out


def _newton_rows(
    values: np.ndarray, weights: np.ndarray, p: float, tol: float
) -> Tuple[np.ndarray, np.ndarray, np.ndarray]:
    """Safeguarded Newton on F inside [min, max] per row, bisection when Newton misbehaves."""
    w = weights / weights.sum()
    rows = values.shape[0]
    lo = values.min(axis=1)
    hi = values.max(axis=1)
    lam = np.clip(values @ w, lo, hi)
    scale = np.maximum(np.abs(lo), np.abs(hi))
    tol_eff = np.maximum(tol, 4.0 * _EPS * scale)
    step_old = hi - lo
    iterations = np.zeros(rows, dtype=int)
    active = (hi - lo) > tol_eff

    for _ in range(MAX_ROOT_ITERATIONS):
        if not np.any(active):
            break
        idx = np.flatnonzero(active)
        diff = values[idx] - lam[idx, None]
        mag = np.abs(diff)
        with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
            pw = np.where(mag > 0, mag ** (p - 2.0), 0.0)
        f = (pw * diff) @ w
        slope = (p - 1.0) * (pw @ w)
        iterations[idx] += 1

        hit = f == 0
        lo[idx] = np.where(f > 0, lam[idx], lo[idx])
        hi[idx] = np.where(f < 0, lam[idx], hi[idx])

        with np.errstate(divide="ignore", invalid="ignore"):
            step = f / slope
        cand = lam[idx] + step
        newton_ok = (
            np.isfinite(cand)
            & (cand > lo[idx])
            & (cand < hi[idx])
            & (np.abs(step) <= 0.5 * np.abs(step_old[idx]))
        )
        mid = 0.5 * (lo[idx] + hi[idx])
        new_lam = np.where(newton_ok, cand, mid)
        step_old[idx] = np.where(newton_ok, step, hi[idx] - lo[idx])
        done = hit | (np.abs(new_lam - lam[idx]) <= tol_eff[idx]) | ((hi[idx] - lo[idx]) <= tol_eff[idx])
        lam[idx] = np.where(hit, lam[idx], new_lam)
        active[idx[done]] = False
    else:
        if np.any(active):
            raise ValueError(f"p-average root solver did not converge for p={p} in {MAX_ROOT_ITERATIONS} steps")

    diff = values - lam[:, None]
    mag = np.abs(diff)
    with np.errstate(divide="ignore", invalid="ignore", over="ignore"):
        pw = np.where(mag > 0, mag ** (p - 2.0), 0.0)
        slope = (p - 1.0) * (pw @ w)
        correction = np.where(slope > 0, ((pw * diff) @ w) / slope, 0.0)
    return lam, correction, iterations


def p_average_rows(
    values: np.ndarray,
    weights: np.ndarray,
    p: float,
    tol: float = DEFAULT_TOL,
    closed_form_p4: bool = True,
) -> np.ndarray:
    """p-averages of every row of `values`, all rows sharing one weight vector."""
    p = _check_p(p)
    values = np.atleast_2d(np.asarray(values, dtype=float))
    weights = np.asarray(weights, dtype=float)
    if values.shape[1] != weights.size:
        raise ValueError("one weight per column is required")
    if math.isinf(p):
        return 0.5 * (values.min(axis=1) + values.max(axis=1))
    if p == 2.0:
        return values @ (weights / weights.sum())
    if p == 4.0 and closed_form_p4:
        return _four_average_rows(values, weights)
    lam, _, _ = _newton_rows(values, weights, p, tol)
    return lam


def _dispersion(sample: WeightedSample, lam: float, p: float) -> float:
    mag = np.abs(sample.values - lam)
    if math.isinf(p):
        return float(mag.max())
    return float((sample.normalized_weights @ mag**p) ** (1.0 / p))


def p_average(sample: WeightedSample, p: float = 2.0, tol: float = DEFAULT_TOL) -> PAverageResult:
    """Variational p-average A_p with its dispersion sigma_p.

    p = 2 is the weighted mean, p = inf the midrange; any other finite p is the
    bracketed root of `characterization_residual`. `residual` is F at the returned
    value; `newton_step` is the last correction F / |F'|, measured in the units of
    the data and below `tol` on success.
    """
    p = _check_p(p)
    if tol <= 0:
        raise ValueError("tol must be positive")

    if sample.is_constant:
        return PAverageResult(float(sample.values[0]), 0.0, 0.0, 0)
    if math.isinf(p):
        value = 0.5 * float(sample.values.min() + sample.values.max())
        return PAverageResult(value, _dispersion(sample, value, p), 0.0, 0)
    if p == 2.0:
        w = sample.normalized_weights
        value = float(sample.values @ w)
        residual = characterization_residual(sample, value, p)
        return PAverageResult(value, _dispersion(sample, value, p), residual, 0)

    lam, step, iterations = _newton_rows(sample.values[None, :], sample.weights, p, tol)
    value = float(lam[0])
    return PAverageResult(
        value,
        _dispersion(sample, value, p),
        characterization_residual(sample, value, p),
        int(iterations[0]),
        newton_step=float(step[0]),
    )


def four_average_closed_form(sample: WeightedSample) -> float:
    """4-average from the weighted mean, standard deviation and skewness (normalized measure)."""
    return float(_four_average_rows(sample.values[None, :], sample.weights)[0])


def _check_even_sorted(values: Sequence[float]) -> np.ndarray:
    data = np.asarray(values, dtype=float).reshape(-1)
    if data.size == 0 or data.size % 2:
        raise ValueError("gamma-median needs an even, nonzero number of values")
    if not np.all(np.isfinite(data)):
        raise ValueError("values must be finite")
    if np.any(np.diff(data) <= 0):
        raise ValueError("values must be strictly increasing (sorted, no duplicates)")
    return data


def gamma_median(values: Sequence[float]) -> float:
    """Root in (x_k, x_{k+1}) of prod_{i<=k}(c - x_i) - prod_{i>k}(x_i - c)."""
    data = _check_even_sorted(values)
    k = data.size // 2
    left, right = data[:k], data[k:]

    def product_gap(c: float) -> float:
        return float(np.prod(c - left) - np.prod(right - c))

    return float(bisect(product_gap, data[k - 1], data[k], xtol=1e-15, maxiter=200))


def p_limit_to_gamma_median(
    values: Sequence[float], p_sequence: Sequence[float], tol: float = DEFAULT_TOL
) -> List[float]:
    data = _check_even_sorted(values)
    ps = [float(p) for p in p_sequence]
    if not ps:
        raise ValueError("p_sequence is empty")
    if any(not (1.0 < p <= 2.0) for p in ps):
        raise ValueError("every p in the sequence must lie in (1, 2]")
    if any(b >= a for a, b in zip(ps, ps[1:])):
        raise ValueError("p_sequence must be strictly decreasing")
    sample = WeightedSample.of(data)
    return [p_average(sample, p, tol).value for p in ps]


def ball_quadrature(dimension: int = 2, radial: int = 8, angular: int = 16) -> QuadratureRule:
    """Centrally symmetric product rule on the unit ball (polar in 2D, spherical in 3D)."""
    if angular < 2 or angular % 2:
        raise ValueError("angular resolution must be an even integer >= 2")
    if radial < 1:
        raise ValueError("radial resolution must be positive")
    x, wx = np.polynomial.legendre.leggauss(radial)
    r = 0.5 * (x + 1.0)
    wr = 0.5 * wx * r ** (dimension - 1)

    if dimension == 2:
        theta = 2.0 * np.pi * (np.arange(angular) + 0.5) / angular
        dirs = np.column_stack([np.cos(theta), np.sin(theta)])
        wdir = np.full(angular, 2.0 * np.pi / angular)
    elif dimension == 3:
        c, wc = np.polynomial.legendre.leggauss(max(angular // 2, 1))
        phi = 2.0 * np.pi * (np.arange(angular) + 0.5) / angular
        cc, pp = np.meshgrid(c, phi, indexing="ij")
        wcc, _ = np.meshgrid(wc, phi, indexing="ij")
        s = np.sqrt(1.0 - cc**2)
        dirs = np.column_stack([(s * np.cos(pp)).ravel(), (s * np.sin(pp)).ravel(), cc.ravel()])
        wdir = (wcc * (2.0 * np.pi / angular)).ravel()
    else:
        raise ValueError(f"ball quadrature is available for dimension 2 or 3, got {dimension}")

    nodes = (r[:, None, None] * dirs[None, :, :]).reshape(-1, dimension)
    weights = (wr[:, None] * wdir[None, :]).ravel()
    return QuadratureRule(nodes, weights)


def ball_paverage(
    field: Callable[[np.ndarray], float],
    center: Sequence[float],
    radius: float,
    p: float,
    quadrature: Optional[QuadratureRule] = None,
    tol: float = DEFAULT_TOL,
) -> float:
    if radius <= 0:
        raise ValueError("radius must be positive")
    center_arr = np.asarray(center, dtype=float)
    rule = quadrature or ball_quadrature(center_arr.size)
    if rule.dimension != center_arr.size:
        raise ValueError("quadrature dimension does not match the center")
    points = center_arr + radius * rule.nodes
    values = np.array([float(field(point)) for point in points])
    if not np.all(np.isfinite(values)):
        raise ValueError("field returned non-finite values on the ball")
    return p_average(WeightedSample(values, rule.weights), p, tol).value


def holder_constant(p: float, dimension: int, radius: float) -> float:
    """C with |A(x1) - A(x2)| <= C ||u||_inf |x1 - x2|^(1/(p-1)) for full balls inside the domain."""
    if p <= 2:
        raise ValueError("the Holder estimate is stated for p > 2")
    if radius <= 0:
        raise ValueError("radius must be positive")

    def unit_ball_volume(k: int) -> float:
        return math.pi ** (k / 2.0) / float(gamma_fn(k / 2.0 + 1.0))

    ratio = 2.0 / radius * unit_ball_volume(dimension - 1) / unit_ball_volume(dimension)
    return 2.0 ** ((p - 2.0) / (p - 1.0)) * ratio ** (1.0 / (p - 1.0))


def read_sample_csv(path: str) -> WeightedSample:
    values, weights = read_value_weight_csv(path)
    if not values:
        raise ValueError(f"{path}: no values found")
    return WeightedSample.of(values, weights)
