import cmath
import logging
import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Any, Dict, Iterable, List, Optional, Sequence, Tuple, Union

import numpy as np

from pavg.enums.constants import DEFAULT_SEED
from pavg.enums.fixtures import (
    DEPRESSED_QUINTIC,
    DEPRESSED_QUINTIC_SHIFT,
    P20_DUPLICATED_COEFFICIENT_NOTE,
    RESOLVENT_SEXTIC_P20,
    SIX_AVERAGE_DATA,
)

logger = logging.getLogger("pavg.algebra")

Number = Union[int, Fraction]


@dataclass(frozen=True)
class ComplexPolynomial:
    """Complex coefficients in ascending degree."""

    coefficients: Tuple[complex, ...]

    def __post_init__(self) -> None:
        coeffs = [complex(c) for c in self.coefficients]
        while len(coeffs) > 1 and coeffs[-1] == 0:
            coeffs.pop()
        object.__setattr__(self, "coefficients", tuple(coeffs or [0j]))

    @property
    def degree(self) -> int:
        if len(self.coefficients) == 1 and self.coefficients[0] == 0:
            return 0
        return len(self.coefficients) - 1

    def __call__(self, z: complex) -> complex:
        return complex(np.polynomial.polynomial.polyval(z, self.coefficients))

    def scale_at(self, z: complex, r: float) -> float:
        """Sum of |c_i| (|z| + r)^i, the natural size of values on the circle."""
        radius = abs(z) + r
        return float(sum(abs(c) * radius**i for i, c in enumerate(self.coefficients)))


class RationalPolynomial:
    """Exact univariate polynomial, Fraction coefficients in ascending degree."""

    __slots__ = ("coefficients",)

    def __init__(self, coefficients: Iterable[Number]) -> None:
        coeffs = [Fraction(c) for c in coefficients]
        while coeffs and coeffs[-1] == 0:
            coeffs.pop()
        self.coefficients: Tuple[Fraction, ...] = tuple(coeffs)

    @staticmethod
    def build(coefficients: Iterable[Number]) -> "RationalPolynomial":
        coeffs = [Fraction(c) for c in coefficients]
        if all(c.denominator == 1 for c in coeffs):
            return IntPolynomial(coeffs)
        return RationalPolynomial(coeffs)

    @classmethod
    def monomial(cls, degree: int, coefficient: Number = 1) -> "RationalPolynomial":
        return cls.build([0] * degree + [coefficient])

    @property
    def degree(self) -> int:
        return len(self.coefficients) - 1 if self.coefficients else -1

    @property
    def leading(self) -> Fraction:
        return self.coefficients[-1] if self.coefficients else Fraction(0)

    def is_zero(self) -> bool:
        return not self.coefficients

    def coefficient(self, power: int) -> Fraction:
        return self.coefficients[power] if 0 <= power < len(self.coefficients) else Fraction(0)

    def __add__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        size = max(len(self.coefficients), len(other.coefficients))
        return RationalPolynomial.build(self.coefficient(i) + other.coefficient(i) for i in range(size))

    def __neg__(self) -> "RationalPolynomial":
        return RationalPolynomial.build(-c for c in self.coefficients)

    def __sub__(self, other: "RationalPolynomial") -> "RationalPolynomial":
        return self + (-other)

    def __mul__(self, other: Union["RationalPolynomial", Number]) -> "RationalPolynomial":
        if not isinstance(other, RationalPolynomial):
            return RationalPolynomial.build(c * Fraction(other) for c in self.coefficients)
        if self.is_zero() or other.is_zero():
            return RationalPolynomial.build([])
        out = [Fraction(0)] * (len(self.coefficients) + len(other.coefficients) - 1)
        for i, a in enumerate(self.coefficients):
            for j, b in enumerate(other.coefficients):
                out[i + j] += a * b
        return RationalPolynomial.build(out)

    __rmul__ = __mul__

    def __pow__(self, exponent: int) -> "RationalPolynomial":
        if exponent < 0:
            raise ValueError("negative polynomial powers are not polynomials")
        result: RationalPolynomial = RationalPolynomial.build([1])
        base: RationalPolynomial = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __call__(self, x: Number) -> Fraction:
        acc = Fraction(0)
        for c in reversed(self.coefficients):
            acc = acc * x + c
        return acc

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RationalPolynomial):
            return NotImplemented
        return self.coefficients == other.coefficients

    def __hash__(self) -> int:
        return hash(self.coefficients)

    def derivative(self) -> "RationalPolynomial":
        return RationalPolynomial.build(i * c for i, c in enumerate(self.coefficients) if i > 0)

    def monic(self) -> "RationalPolynomial":
        if self.is_zero():
            raise ValueError("the zero polynomial has no monic form")
        lead = self.leading
        return RationalPolynomial.build(c / lead for c in self.coefficients)

    def shift(self, s: Number) -> "RationalPolynomial":
        """Return q(t) = self(t + s), exactly."""
        linear = RationalPolynomial.build([s, 1])
        result: RationalPolynomial = RationalPolynomial.build([])
        for c in reversed(self.coefficients):
            result = result * linear + RationalPolynomial.build([c])
        return result

    def to_float_array(self) -> np.ndarray:
        return np.array([float(c) for c in self.coefficients])

    def format(self, var: str = "x") -> str:
        if self.is_zero():
            return "0"
        parts: List[str] = []
        for power in range(self.degree, -1, -1):
            c = self.coefficients[power]
            if c == 0:
                continue
            sign = "-" if c < 0 else "+"
            mag = abs(c)
            if power == 0:
                body = f"{mag}"
            else:
                head = "" if mag == 1 else f"{mag}"
                body = f"{head}{var}" + (f"^{power}" if power > 1 else "")
            parts.append(f"{sign} {body}")
        text = " ".join(parts)
        return text[2:] if text.startswith("+ ") else "-" + text[2:]

    def __repr__(self) -> str:
        return f"{type(self).__name__}({self.format()})"


class IntPolynomial(RationalPolynomial):
    """Integer-coefficient specialization; arithmetic stays exact."""

    __slots__ = ()

    def __init__(self, coefficients: Iterable[Number]) -> None:
        super().__init__(coefficients)
        if any(c.denominator != 1 for c in self.coefficients):
            raise ValueError("IntPolynomial coefficients must be integers")

    @property
    def int_coefficients(self) -> Tuple[int, ...]:
        return tuple(int(c) for c in self.coefficients)


@dataclass(frozen=True)
class Depression:
    depressed: RationalPolynomial
    shift: Fraction


@dataclass(frozen=True)
class CosPowerSum:
    numeric: float
    closed_form: Fraction


def polygon_mean(poly: ComplexPolynomial, z: complex, r: float, theta: float, n: int) -> complex:
    """Mean of poly over the 2n vertices z + r e^{i theta} e^{i pi j / n}.

    Equals poly(z) whenever n >= degree; smaller n is allowed so callers can
    watch the identity fail.
    """
    if n < 1:
        raise ValueError("n must be at least 1")
    if r <= 0:
        raise ValueError("r must be positive")
    rotation = cmath.exp(1j * theta)
    vertices = z + r * rotation * np.exp(1j * np.pi * np.arange(2 * n) / n)
    values = np.polynomial.polynomial.polyval(vertices, poly.coefficients)
    return complex(np.mean(values))


def direct_cos_power_sum(k: int, r: int, a: float) -> float:
    m = 2 * k + 2
    angles = a + 2.0 * np.pi * np.arange(m) / m
    return float(np.sum(np.cos(angles) ** (2 * r)))


def cos_power_sum(k: int, r: int, a: float) -> CosPowerSum:
    if k < 1:
        raise ValueError("k must be at least 1")
    if not 1 <= r <= k:
        raise ValueError(f"r={r} outside 1..k={k}; the power-sum identity needs r <= k")
    closed = Fraction((2 * k + 2) * math.comb(2 * r, r), 4**r)
    return CosPowerSum(direct_cos_power_sum(k, r, a), closed)


def cos_arith_progression_sum(alpha: float, d: float, n: int) -> float:
    if n < 1:
        raise ValueError("n must be at least 1")
    half = math.sin(d / 2.0)
    if abs(half) < 1e-15:
        return n * math.cos(alpha)
    return math.sin(n * d / 2.0) / half * math.cos(alpha + (n - 1) * d / 2.0)


def depress(poly: RationalPolynomial) -> Depression:
    """Substitute x = t + shift so the monic polynomial loses its t^(d-1) term."""
    if poly.degree not in (3, 5):
        raise ValueError(f"depress handles degree 3 or 5, got degree {poly.degree}")
    monic = poly.monic()
    shift = -monic.coefficient(monic.degree - 1) / monic.degree
    return Depression(monic.shift(shift), shift)


def p_average_equation(values: Sequence[Number], p: int) -> RationalPolynomial:
    """Characterization sum_i (x - x_i)^(p-1) for even p, undivided."""
    if not values:
        raise ValueError("values must be non-empty")
    if p < 2 or p % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    total: RationalPolynomial = RationalPolynomial.build([])
    for v in values:
        total = total + RationalPolynomial.build([-Fraction(v), 1]) ** (p - 1)
    return total


def six_average_equation(values: Sequence[int]) -> RationalPolynomial:
    if any(isinstance(v, float) and not float(v).is_integer() for v in values):
        raise ValueError("six_average_equation takes integer values")
    return p_average_equation([int(v) for v in values], 6)


def four_average_cubic(values: Sequence[float], weights: Optional[Sequence[float]] = None) -> RationalPolynomial:
    """Monic sum_i nu_i (x - y_i)^3 under the normalized measure, in exact rationals."""
    if not values:
        raise ValueError("values must be non-empty")
    weights = weights if weights is not None else [1] * len(values)
    if len(weights) != len(values):
        raise ValueError("one weight per value is required")
    fw = [Fraction(w) for w in weights]
    if any(w <= 0 for w in fw):
        raise ValueError("weights must be positive")
    total_weight = sum(fw)
    cubic: RationalPolynomial = RationalPolynomial.build([])
    for y, w in zip(values, fw):
        cubic = cubic + RationalPolynomial.build([-Fraction(y), 1]) ** 3 * (w / total_weight)
    return cubic


def cardano_real_root(p: float, q: float) -> float:
    """Real root of t^3 + p t + q when the discriminant test 4p^3 + 27q^2 > 0 holds."""
    if 4.0 * p**3 + 27.0 * q**2 <= 0:
        raise ValueError("cardano_real_root needs 4p^3 + 27q^2 > 0 (one real root)")
    root = math.sqrt(q * q / 4.0 + p**3 / 27.0)
    # pick the branch without cancellation, recover the other from u*v = -p/3
    u = float(np.cbrt(-q / 2.0 - math.copysign(root, q)))
    if u == 0.0:
        return 0.0
    return u - p / (3.0 * u)


def integer_root_test(poly: RationalPolynomial) -> List[int]:
    """Exact integer roots, found near numerically isolated roots.

    For monic integer input an empty list certifies there is no rational root.
    """
    if poly.is_zero():
        raise ValueError("the zero polynomial has every number as a root")
    if any(c.denominator != 1 for c in poly.coefficients):
        raise ValueError("integer_root_test needs integer coefficients")

    roots: List[int] = []
    work = poly
    while work.degree > 0 and work.coefficient(0) == 0:
        work = RationalPolynomial.build(work.coefficients[1:])
        if 0 not in roots:
            roots.append(0)
    if work.degree <= 0:
        return sorted(roots)

    numeric = np.roots(work.to_float_array()[::-1])
    candidates = set()
    for z in numeric:
        size = max(1.0, abs(z))
        if abs(z.imag) > max(1.0, 1e-3 * size):
            continue
        window = 2 + int(1e-6 * size)
        centre = int(round(z.real))
        candidates.update(range(centre - window, centre + window + 1))
    for c in sorted(candidates):
        if c != 0 and work(c) == 0 and c not in roots:
            roots.append(c)
    return sorted(roots)


def verify_walsh(degree: int, trials: int, seed: int = DEFAULT_SEED, tol: float = 1e-10) -> Dict[str, Any]:
    """Random polygon mean-value checks with n >= degree, plus one n < degree control."""
    if degree < 0 or trials < 1:
        raise ValueError("degree must be >= 0 and trials >= 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    for _ in range(trials):
        deg = int(rng.integers(0, degree + 1))
        coeffs = rng.normal(size=deg + 1) + 1j * rng.normal(size=deg + 1)
        poly = ComplexPolynomial(tuple(coeffs))
        z = complex(rng.normal(), rng.normal())
        r = float(rng.uniform(0.1, 2.0))
        theta = float(rng.uniform(0.0, 2.0 * np.pi))
        n = max(1, poly.degree) + int(rng.integers(0, 3))
        err = abs(polygon_mean(poly, z, r, theta, n) - poly(z)) / max(1.0, poly.scale_at(z, r))
        worst = max(worst, err)

    # z^2 on a 2-gon averages to z^2 + (r e^{i theta})^2
    square = ComplexPolynomial((0, 0, 1))
    control = abs(polygon_mean(square, 0.5 + 0.25j, 1.0, 0.0, 1) - square(0.5 + 0.25j))
    passed = worst <= tol and control > tol
    logger.info("Walsh check degree<=%s trials=%s max_rel_error=%.3e pass=%s", degree, trials, worst, passed)
    return {
        "degree": degree,
        "trials": trials,
        "seed": seed,
        "max_relative_error": worst,
        "negative_control_error": control,
        "pass": passed,
    }


def verify_trig(kmax: int, samples: int = 20, seed: int = DEFAULT_SEED) -> Dict[str, Any]:
    if kmax < 1:
        raise ValueError("kmax must be at least 1")
    rng = np.random.default_rng(seed)
    worst = 0.0
    checked = 0
    for k in range(1, kmax + 1):
        for r in range(1, k + 1):
            for a in rng.uniform(0.0, 2.0 * np.pi, size=samples):
                result = cos_power_sum(k, r, float(a))
                worst = max(worst, abs(result.numeric - float(result.closed_form)) / (2 * k + 2))
                checked += 1
    hexagon_fourth = cos_power_sum(2, 2, 0.0).closed_form
    # the identity needs r <= k; r = k + 1 must break it
    control = abs(direct_cos_power_sum(1, 2, 0.0) - 4 * math.comb(4, 2) / 16)
    passed = worst <= 1e-12 and hexagon_fourth == Fraction(18, 8) and control > 1e-6
    logger.info("cosine power sums kmax=%s cases=%s max_error=%.3e pass=%s", kmax, checked, worst, passed)
    return {
        "kmax": kmax,
        "cases": checked,
        "max_scaled_error": worst,
        "hexagon_cos4_sum": str(hexagon_fourth),
        "negative_control_error": control,
        "pass": passed,
    }


def quintic_check(values: Sequence[int] = SIX_AVERAGE_DATA) -> Dict[str, Any]:
    """Six-average quintic, its depression and the integer-root test of the stored sextic."""
    equation = six_average_equation(values)
    depression = depress(equation)
    expected = IntPolynomial(DEPRESSED_QUINTIC)
    matches = tuple(values) == SIX_AVERAGE_DATA and depression.depressed == expected
    sextic = IntPolynomial(RESOLVENT_SEXTIC_P20)
    logger.warning("resolvent sextic fixture: %s", P20_DUPLICATED_COEFFICIENT_NOTE)
    sextic_roots = integer_root_test(sextic)
    if tuple(values) == SIX_AVERAGE_DATA:
        matches = matches and depression.shift == DEPRESSED_QUINTIC_SHIFT
    passed = not sextic_roots and (matches or tuple(values) != SIX_AVERAGE_DATA)
    return {
        "values": list(values),
        "equation": equation.format("x"),
        "shift": str(depression.shift),
        "depressed": depression.depressed.format("t"),
        "depressed_matches_fixture": matches,
        "resolvent_sextic": sextic.format("x"),
        "resolvent_integer_roots": sextic_roots,
        "resolvent_note": P20_DUPLICATED_COEFFICIENT_NOTE,
        "pass": passed,
    }
