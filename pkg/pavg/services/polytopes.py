import itertools
import logging
import math
import re
from dataclasses import dataclass, field, replace
from fractions import Fraction
from typing import Any, Dict, Iterable, Optional, Sequence, Set, Tuple

import numpy as np
from scipy.spatial import cKDTree

from pavg.enums.constants import (
    D_ESTIMATE_THRESHOLD,
    DEFAULT_SEED,
    DEFAULT_TRIALS,
    DEFAULT_VERIFY_TOL,
    NAMED_POLYTOPES,
)
from pavg.services.helpers.artifacts import write_csv_atomic
from pavg.services.helpers.golden import (
    PHI,
    PHI_INV,
    PHI_INV_SQ,
    PHI_SQ,
    ROOT5,
    ZERO,
    GoldenNumber,
)

logger = logging.getLogger("pavg.polytopes")

ExactVector = Tuple[GoldenNumber, ...]


@dataclass(frozen=True, eq=False)
class DirectionSet:
    """Finite negation-closed set of weighted vectors with its averaging exponent."""

    label: str
    vectors: np.ndarray
    weights: np.ndarray
    exponent: int
    expected_d: Optional[float] = None
    exact_vectors: Optional[Tuple[ExactVector, ...]] = field(default=None, repr=False)
    exact_weights: Optional[Tuple[Fraction, ...]] = field(default=None, repr=False)
    expected_d_exact: Optional[GoldenNumber] = None
    # exact_vectors times sqrt(exact_scale_sq) are the float vectors
    exact_scale_sq: GoldenNumber = GoldenNumber(1)

    def __post_init__(self) -> None:
        vectors = np.atleast_2d(np.asarray(self.vectors, dtype=float))
        weights = np.asarray(self.weights, dtype=float).reshape(-1)
        m, n = vectors.shape
        if n < 2:
            raise ValueError("direction sets live in dimension >= 2")
        if weights.size != m:
            raise ValueError(f"{self.label}: {m} vectors but {weights.size} weights")
        if np.any(weights <= 0):
            raise ValueError(f"{self.label}: weights must be positive")
        if np.any(np.linalg.norm(vectors, axis=1) == 0):
            raise ValueError(f"{self.label}: zero vector in set")
        if np.linalg.matrix_rank(vectors) < n:
            raise ValueError(f"{self.label}: vectors do not span R^{n}")
        if self.exponent < 2 or self.exponent % 2:
            raise ValueError(f"{self.label}: exponent must be an even integer >= 2")
        dist, idx = cKDTree(vectors).query(-vectors)
        if np.any(dist > 1e-9) or not np.allclose(weights[idx], weights, rtol=1e-12, atol=0):
            raise ValueError(f"{self.label}: set is not closed under negation with equal weights")
        object.__setattr__(self, "vectors", vectors)
        object.__setattr__(self, "weights", weights)

    @property
    def dimension(self) -> int:
        return self.vectors.shape[1]

    @property
    def size(self) -> int:
        return self.vectors.shape[0]

    @property
    def expected_coefficients(self) -> Optional[Tuple[float, float]]:
        """(trace coefficient, <Au,u> coefficient) = (d/p, d(p-2)/p)."""
        if self.expected_d is None:
            return None
        p = self.exponent
        return self.expected_d / p, self.expected_d * (p - 2) / p

    @property
    def common_norm(self) -> Optional[float]:
        norms = np.linalg.norm(self.vectors, axis=1)
        if np.allclose(norms, norms[0], rtol=1e-12, atol=0):
            return float(norms[0])
        return None

    def scaled(self, s: float) -> "DirectionSet":
        if s <= 0:
            raise ValueError("scale must be positive")
        exact = None
        expected_exact = None
        if isinstance(s, (int, Fraction)) and self.exact_vectors is not None:
            exact = tuple(tuple(c * Fraction(s) for c in v) for v in self.exact_vectors)
            if self.expected_d_exact is not None:
                expected_exact = self.expected_d_exact * Fraction(s) ** 2
        return replace(
            self,
            label=f"{self.label}*{s}",
            vectors=self.vectors * float(s),
            expected_d=None if self.expected_d is None else self.expected_d * float(s) ** 2,
            exact_vectors=exact,
            exact_weights=self.exact_weights if exact is not None else None,
            expected_d_exact=expected_exact,
        )

    def normalized(self) -> "DirectionSet":
        norm = self.common_norm
        if norm is None:
            raise ValueError(f"{self.label}: vectors do not share one norm")
        exact_updates: Dict[str, Any] = {}
        if self.exact_vectors is not None:
            (norm_sq,) = exact_squared_norms(self)
            exact_updates = {
                "exact_scale_sq": self.exact_scale_sq / norm_sq,
                "expected_d_exact": None if self.expected_d_exact is None else self.expected_d_exact / norm_sq,
            }
        return replace(
            self,
            label=f"{self.label}:unit",
            vectors=self.vectors / norm,
            expected_d=None if self.expected_d is None else self.expected_d / norm**2,
            **exact_updates,
        )

    def summary(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "dimension": self.dimension,
            "size": self.size,
            "exponent": self.exponent,
            "expected_d": self.expected_d,
            "common_norm": self.common_norm,
        }


@dataclass(frozen=True, eq=False)
class SymmetricProbe:
    matrix: np.ndarray
    direction: np.ndarray

    def __post_init__(self) -> None:
        matrix = np.asarray(self.matrix, dtype=float)
        direction = np.asarray(self.direction, dtype=float).reshape(-1)
        if matrix.shape != (direction.size, direction.size):
            raise ValueError("probe matrix must be n x n for an n-vector direction")
        if not np.allclose(matrix, matrix.T, rtol=0, atol=1e-12):
            raise ValueError("probe matrix must be symmetric")
        matrix = 0.5 * (matrix + matrix.T)
        if abs(np.linalg.norm(direction) - 1.0) > 1e-14:
            raise ValueError("probe direction must be a unit vector")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "direction", direction)

    def target(self, p: float) -> float:
        """tr(A)/p + ((p-2)/p) <Au,u>."""
        rayleigh = self.direction @ self.matrix @ self.direction
        return float(np.trace(self.matrix) / p + (p - 2.0) / p * rayleigh)


def _random_symmetric(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    upper = rng.uniform(-1.0, 1.0, size=(count, n, n))
    tri = np.triu(upper)
    return tri + np.transpose(np.triu(upper, 1), (0, 2, 1))


def _random_unit(rng: np.random.Generator, count: int, n: int) -> np.ndarray:
    g = rng.normal(size=(count, n))
    return g / np.linalg.norm(g, axis=1, keepdims=True)


def random_probe(n: int, rng: np.random.Generator) -> SymmetricProbe:
    return SymmetricProbe(_random_symmetric(rng, 1, n)[0], _random_unit(rng, 1, n)[0])


def _signed(entries: Sequence[GoldenNumber]) -> Set[ExactVector]:
    """Every sign choice on the nonzero entries."""
    slots = [i for i, c in enumerate(entries) if not c.is_zero()]
    out: Set[ExactVector] = set()
    for signs in itertools.product((1, -1), repeat=len(slots)):
        vec = list(entries)
        for i, s in zip(slots, signs):
            vec[i] = vec[i] * s
        out.add(tuple(vec))
    return out


def _parity(perm: Sequence[int]) -> int:
    inversions = sum(1 for i in range(len(perm)) for j in range(i + 1, len(perm)) if perm[i] > perm[j])
    return inversions % 2


def _permuted(entries: Sequence[GoldenNumber], even_only: bool = False) -> Set[ExactVector]:
    out: Set[ExactVector] = set()
    for perm in itertools.permutations(range(len(entries))):
        if even_only and _parity(perm):
            continue
        out.add(tuple(entries[i] for i in perm))
    return out


def _cyclic(entries: Sequence[GoldenNumber]) -> Set[ExactVector]:
    n = len(entries)
    return {tuple(entries[(i + s) % n] for i in range(n)) for s in range(n)}


def _orbit(entries: Sequence, mode: str) -> Set[ExactVector]:
    base = [GoldenNumber.coerce(c) for c in entries]
    if mode == "cyclic":
        shapes = _cyclic(base)
    elif mode == "even":
        shapes = _permuted(base, even_only=True)
    else:
        shapes = _permuted(base)
    out: Set[ExactVector] = set()
    for shape in shapes:
        out |= _signed(shape)
    return out


def _to_float(vectors: Iterable[ExactVector]) -> Tuple[Tuple[ExactVector, ...], np.ndarray]:
    ordered = sorted(vectors, key=lambda v: tuple(float(c) for c in v))
    return tuple(ordered), np.array([[float(c) for c in v] for v in ordered])


def _exact_set(label: str, vectors: Set[ExactVector], expected: GoldenNumber, count: int) -> DirectionSet:
    if len(vectors) != count:
        raise ValueError(f"{label}: generated {len(vectors)} vertices, expected {count}")
    exact, floats = _to_float(vectors)
    return DirectionSet(
        label=label,
        vectors=floats,
        weights=np.ones(len(exact)),
        exponent=4,
        expected_d=float(expected),
        exact_vectors=exact,
        exact_weights=tuple(Fraction(1) for _ in exact),
        expected_d_exact=expected,
    )


def polygon_set(k: int, rotation: float = 0.0) -> DirectionSet:
    """The 2k+2 unit vectors of the regular polygon; p = 2k, d = 1."""
    if k < 1:
        raise ValueError("k must be at least 1")
    m = 2 * k + 2
    angles = rotation + 2.0 * np.pi * np.arange(m) / m
    label = f"polygon:k={k}" + (f",rot={rotation:g}" if rotation else "")
    return DirectionSet(
        label=label,
        vectors=np.column_stack([np.cos(angles), np.sin(angles)]),
        weights=np.ones(m),
        exponent=2 * k,
        expected_d=1.0,
    )


def named_polytope(name: str) -> DirectionSet:
    """Vertex sets of the exceptional polytopes, all with p = 4."""
    if name == "icosahedron":
        vertices = _orbit((0, 1, PHI), "cyclic")
        return _exact_set(name, vertices, (PHI_SQ + 1) * Fraction(4, 5), 12)
    if name == "dodecahedron":
        vertices = _orbit((0, PHI_INV, PHI), "cyclic") | _orbit((1, 1, 1), "all")
        return _exact_set(name, vertices, GoldenNumber(Fraction(12, 5)), 20)
    if name == "cell24":
        return _exact_set(name, _orbit((1, 1, 0, 0), "all"), GoldenNumber(Fraction(8, 6)), 24)
    if name == "cell600":
        vertices = (
            _orbit((1, 1, 1, 1), "all")
            | _orbit((2, 0, 0, 0), "all")
            | _orbit((PHI, 1, PHI_INV, 0), "even")
        )
        return _exact_set(name, vertices, GoldenNumber(Fraction(8, 3)), 120)
    if name == "cell120":
        vertices = (
            _orbit((2, 2, 0, 0), "all")
            | _orbit((ROOT5, 1, 1, 1), "all")
            | _orbit((PHI, PHI, PHI, PHI_INV_SQ), "all")
            | _orbit((PHI_SQ, PHI_INV, PHI_INV, PHI_INV), "all")
            | _orbit((PHI_SQ, PHI_INV_SQ, 1, 0), "even")
            | _orbit((ROOT5, PHI_INV, PHI, 0), "even")
            | _orbit((2, 1, PHI, PHI_INV), "even")
        )
        return _exact_set(name, vertices, GoldenNumber(Fraction(16, 3)), 600)
    raise ValueError(f"unknown polytope '{name}', expected one of {', '.join(NAMED_POLYTOPES)}")


def weighted_cross_cube(n: int) -> DirectionSet:
    """Half-cube vertices weighted 16/2^n plus the signed unit axes weighted 1."""
    if not 2 <= n <= 6:
        raise ValueError(f"cross-cube dimension must lie in 2..6, got {n}")
    half = Fraction(1, 2)
    cube = sorted(itertools.product((half, -half), repeat=n), reverse=True)
    axes = [tuple(Fraction(s) if i == j else Fraction(0) for j in range(n)) for i in range(n) for s in (1, -1)]
    exact = tuple(tuple(GoldenNumber(c) for c in v) for v in cube + axes)
    cube_weight = Fraction(16, 2**n)
    exact_weights = tuple([cube_weight] * len(cube) + [Fraction(1)] * len(axes))
    return DirectionSet(
        label=f"cross-cube:n={n}",
        vectors=np.array([[float(c) for c in v] for v in cube + axes]),
        weights=np.array([float(w) for w in exact_weights]),
        exponent=4,
        expected_d=4.0 / 6.0,
        exact_vectors=exact,
        exact_weights=exact_weights,
        expected_d_exact=GoldenNumber(Fraction(4, 6)),
    )


def hexagon_p6_set() -> DirectionSet:
    """(+-1/sqrt2, +-1/sqrt2), (+-1, 0), (0, +-1) with p = 6.

    The recorded ratio is (tr(A) + 4<Au,u>)/6, i.e. coefficients (1/6, 4/6),
    which is d = 1 in the normalized form.
    """
    r = 1.0 / math.sqrt(2.0)
    vectors = np.array(
        [[1, 0], [r, r], [0, 1], [-r, r], [-1, 0], [-r, -r], [0, -1], [r, -r]],
        dtype=float,
    )
    return DirectionSet(label="p6-2d", vectors=vectors, weights=np.ones(8), exponent=6, expected_d=1.0)


def _ratio_terms(directions: DirectionSet, matrices: np.ndarray, units: np.ndarray, p: float) -> np.ndarray:
    proj = units @ directions.vectors.T
    pw = proj ** (p - 2) * directions.weights
    quad = np.einsum("mi,tij,mj->tm", directions.vectors, matrices, directions.vectors)
    den = pw.sum(axis=1)
    if np.any(den <= 1e-300):
        raise ValueError(f"{directions.label}: degenerate denominator in the averaging ratio")
    return (pw * quad).sum(axis=1) / den


def averaging_ratio(directions: DirectionSet, probe: SymmetricProbe, p: Optional[float] = None) -> float:
    """sum <u,eta>^(p-2) <A eta,eta> w / sum <u,eta>^(p-2) w."""
    if probe.direction.size != directions.dimension:
        raise ValueError("probe dimension does not match the direction set")
    p = directions.exponent if p is None else p
    return float(_ratio_terms(directions, probe.matrix[None], probe.direction[None], p)[0])


def _even_exponent(directions: DirectionSet, p: Optional[float]) -> int:
    if p is None:
        return directions.exponent
    if not float(p).is_integer() or p < 2 or int(p) % 2:
        raise ValueError(f"p must be an even integer >= 2, got {p}")
    return int(p)


def verify_averaging_set(
    directions: DirectionSet,
    p: Optional[float] = None,
    trials: int = DEFAULT_TRIALS,
    tol: float = DEFAULT_VERIFY_TOL,
    seed: int = DEFAULT_SEED,
) -> Dict[str, Any]:
    """Random symmetric probes against d (tr(A)/p + ((p-2)/p) <Au,u>)."""
    if trials < 2:
        raise ValueError("at least two trials are needed")
    p = _even_exponent(directions, p)
    n = directions.dimension
    rng = np.random.default_rng(seed)

    matrices = _random_symmetric(rng, trials, n)
    units = _random_unit(rng, trials, n)
    ratios = _ratio_terms(directions, matrices, units, p)
    targets = np.trace(matrices, axis1=1, axis2=2) / p + (p - 2) / p * np.einsum("ti,tij,tj->t", units, matrices, units)

    usable = np.flatnonzero(np.abs(targets) > D_ESTIMATE_THRESHOLD)
    retries = 0
    while usable.size < 2:
        retries += 1
        if retries > 100:
            raise ValueError("could not draw probes with a usable denominator")
        extra_a = _random_symmetric(rng, 1, n)
        extra_u = _random_unit(rng, 1, n)
        matrices = np.concatenate([matrices, extra_a])
        units = np.concatenate([units, extra_u])
        ratios = np.concatenate([ratios, _ratio_terms(directions, extra_a, extra_u, p)])
        extra_t = np.trace(extra_a[0]) / p + (p - 2) / p * extra_u[0] @ extra_a[0] @ extra_u[0]
        targets = np.append(targets, extra_t)
        usable = np.flatnonzero(np.abs(targets) > D_ESTIMATE_THRESHOLD)

    first, second = usable[:2]
    d_estimate = float(ratios[first] / targets[first])
    d_second = float(ratios[second] / targets[second])
    residuals = np.abs(ratios - d_estimate * targets)
    max_residual = float(residuals.max())

    expected = directions.expected_d if p == directions.exponent else None
    d_error = None if expected is None else abs(d_estimate - expected)
    passed = max_residual <= tol and (d_error is None or d_error <= tol)
    logger.info(
        "verify %s p=%s trials=%s d=%.12g residual=%.3e pass=%s",
        directions.label, p, trials, d_estimate, max_residual, passed,
    )
    return {
        "set": directions.label,
        "p": p,
        "trials": trials,
        "seed": seed,
        "tol": tol,
        "d_estimate": d_estimate,
        "d_probe_spread": abs(d_estimate - d_second),
        "expected_d": expected,
        "d_error": d_error,
        "max_residual": max_residual,
        "pass": passed,
    }


def _random_fraction(rng: np.random.Generator) -> Fraction:
    return Fraction(int(rng.integers(-9, 10)), int(rng.integers(1, 6)))


def verify_averaging_set_exact(
    directions: DirectionSet,
    p: Optional[float] = None,
    trials: int = 5,
    seed: int = DEFAULT_SEED,
) -> Dict[str, Any]:
    """Check |u|^2 N == d (tr |u|^2 / p + ((p-2)/p) <Au,u>) D exactly in Q[sqrt 5].

    A and u are random rationals, so the identity is tested without unit
    normalization.
    """
    if directions.exact_vectors is None or directions.expected_d_exact is None:
        raise ValueError(f"{directions.label}: no exact coordinates available")
    p = _even_exponent(directions, p)
    rng = np.random.default_rng(seed)
    n = directions.dimension
    d = directions.expected_d_exact
    weights = directions.exact_weights or tuple(Fraction(1) for _ in directions.exact_vectors)
    failures = 0
    for _ in range(trials):
        a = [[Fraction(0)] * n for _ in range(n)]
        for i in range(n):
            for j in range(i, n):
                a[i][j] = a[j][i] = _random_fraction(rng)
        u = [_random_fraction(rng) for _ in range(n)]
        if all(c == 0 for c in u):
            u[0] = Fraction(1)

        num, den = ZERO, ZERO
        for eta, w in zip(directions.exact_vectors, weights):
            proj = sum((eta[i] * u[i] for i in range(n)), ZERO) ** (p - 2) * w
            quad = sum((eta[i] * a[i][j] * eta[j] for i in range(n) for j in range(n)), ZERO)
            num = num + proj * quad * directions.exact_scale_sq
            den = den + proj
        u_sq = sum(c * c for c in u)
        trace = sum(a[i][i] for i in range(n))
        au_u = sum(u[i] * a[i][j] * u[j] for i in range(n) for j in range(n))
        rhs = d * (Fraction(trace * u_sq, p) + Fraction((p - 2) * au_u, p)) * den
        if not (num * u_sq - rhs).is_zero():
            failures += 1
    passed = failures == 0
    logger.info("exact verify %s p=%s trials=%s pass=%s", directions.label, p, trials, passed)
    return {"set": directions.label, "p": p, "trials": trials, "failures": failures, "pass": passed}


def exact_squared_norms(directions: DirectionSet) -> Set[GoldenNumber]:
    if directions.exact_vectors is None:
        raise ValueError(f"{directions.label}: no exact coordinates available")
    return {sum((c * c for c in v), ZERO) * directions.exact_scale_sq for v in directions.exact_vectors}


_POLYGON_SPEC = re.compile(r"^polygon:k=(\d+)(?:,rot=([-+0-9.eE]+))?$")
_CROSS_SPEC = re.compile(r"^cross-cube:n=(\d+)$")


def parse_set_spec(text: str) -> DirectionSet:
    """<name|polygon:k=K[,rot=R]|cross-cube:n=N|p6-2d>"""
    spec = text.strip()
    if spec in NAMED_POLYTOPES:
        return named_polytope(spec)
    if spec == "p6-2d":
        return hexagon_p6_set()
    match = _POLYGON_SPEC.match(spec)
    if match:
        rotation = float(match.group(2)) if match.group(2) else 0.0
        return polygon_set(int(match.group(1)), rotation)
    match = _CROSS_SPEC.match(spec)
    if match:
        return weighted_cross_cube(int(match.group(1)))
    raise ValueError(f"unknown set '{text}', expected <name|polygon:k=K[,rot=R]|cross-cube:n=N|p6-2d>")


def export_vectors_csv(directions: DirectionSet, path: str) -> None:
    header = [f"x{i + 1}" for i in range(directions.dimension)] + ["weight"]
    rows = [list(map(float, v)) + [float(w)] for v, w in zip(directions.vectors, directions.weights)]
    write_csv_atomic(path, header, rows)
