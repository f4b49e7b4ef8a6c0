import itertools
import logging
from dataclasses import dataclass, field
from typing import Any, Callable, Dict, List, Literal, Optional, Sequence, Tuple, Union

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.spatial import cKDTree

from pavg.enums.constants import DEFAULT_MAX_ITERS, DEFAULT_SOLVER_TOL, DEFAULT_TOL, SWEEPS
from pavg.services.helpers.artifacts import write_csv_atomic
from pavg.services.operators import scheme_constant
from pavg.services.paverage import WeightedSample, p_average, p_average_rows
from pavg.services.polytopes import DirectionSet, named_polytope, polygon_set

logger = logging.getLogger("pavg.solver")

BoundaryFn = Callable[[np.ndarray], np.ndarray]

INTERIOR = "interior"
BOUNDARY_STRIP = "boundary_strip"
_CONTAINS_SLACK = 1e-12
# strip values may drift this far outside [min g, max g] before the comparison flag drops
_COMPARISON_SLACK = 1e-12
_HEXAGON_OFFSETS = ((1, 0), (1, 1), (0, 1), (-1, 0), (-1, -1), (0, -1))


class BoxRegion(BaseModel):
    kind: Literal["box"] = "box"
    lower: List[float]
    upper: List[float]

    @model_validator(mode="after")
    def _check_corners(self) -> "BoxRegion":
        if len(self.lower) != len(self.upper) or not self.lower:
            raise ValueError("box lower and upper corners need the same nonzero dimension")
        if any(lo >= hi for lo, hi in zip(self.lower, self.upper)):
            raise ValueError("box lower corner must lie strictly below the upper corner")
        return self

    @property
    def dimension(self) -> int:
        return len(self.lower)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        return np.asarray(self.lower, dtype=float), np.asarray(self.upper, dtype=float)

    def contains(self, points: np.ndarray) -> np.ndarray:
        lo, hi = self.bounds()
        return np.all((points >= lo - _CONTAINS_SLACK) & (points <= hi + _CONTAINS_SLACK), axis=-1)


class BallRegion(BaseModel):
    kind: Literal["ball"] = "ball"
    center: List[float]
    radius: float = Field(gt=0)

    @property
    def dimension(self) -> int:
        return len(self.center)

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        c = np.asarray(self.center, dtype=float)
        return c - self.radius, c + self.radius

    def contains(self, points: np.ndarray) -> np.ndarray:
        c = np.asarray(self.center, dtype=float)
        return np.linalg.norm(points - c, axis=-1) <= self.radius + _CONTAINS_SLACK


Region = Union[BoxRegion, BallRegion]


class Domain(BaseModel):
    """Union of closed boxes and balls."""

    regions: List[Region] = Field(min_length=1)

    @model_validator(mode="after")
    def _same_dimension(self) -> "Domain":
        dims = {r.dimension for r in self.regions}
        if len(dims) != 1:
            raise ValueError(f"domain regions disagree on dimension: {sorted(dims)}")
        return self

    @property
    def dimension(self) -> int:
        return self.regions[0].dimension

    def contains(self, points: np.ndarray) -> np.ndarray:
        inside = np.zeros(points.shape[0], dtype=bool)
        for region in self.regions:
            inside |= region.contains(points)
        return inside

    def bounds(self) -> Tuple[np.ndarray, np.ndarray]:
        lows, highs = zip(*(r.bounds() for r in self.regions))
        return np.min(lows, axis=0), np.max(highs, axis=0)

    @classmethod
    def ball(cls, center: Sequence[float], radius: float) -> "Domain":
        return cls(regions=[BallRegion(center=list(center), radius=radius)])

    @classmethod
    def box(cls, lower: Sequence[float], upper: Sequence[float]) -> "Domain":
        return cls(regions=[BoxRegion(lower=list(lower), upper=list(upper))])


@dataclass(frozen=True, eq=False)
class Lattice:
    """Interior nodes of the domain plus the strip of outside nodes their stencils reach."""

    label: str
    dimension: int
    spacing: float
    nodes: np.ndarray
    interior: np.ndarray
    stencil: DirectionSet
    adjacency: np.ndarray
    colors: np.ndarray

    @property
    def interior_index(self) -> np.ndarray:
        return np.flatnonzero(self.interior)

    @property
    def strip_index(self) -> np.ndarray:
        return np.flatnonzero(~self.interior)

    @property
    def node_class(self) -> List[str]:
        return [INTERIOR if flag else BOUNDARY_STRIP for flag in self.interior]

    @property
    def neighbor_offsets(self) -> np.ndarray:
        return self.spacing * self.stencil.vectors

    @property
    def neighbor_distance(self) -> float:
        """Common stencil length; the scheme's epsilon."""
        return self.spacing * float(self.stencil.common_norm)

    def summary(self) -> Dict[str, Any]:
        return {
            "label": self.label,
            "dimension": self.dimension,
            "spacing": self.spacing,
            "neighbor_distance": self.neighbor_distance,
            "interior_nodes": int(self.interior.sum()),
            "strip_nodes": int((~self.interior).sum()),
            "stencil": self.stencil.label,
            "colors": int(self.colors.max()) + 1,
        }


@dataclass(frozen=True)
class ErrorReport:
    sup_error: float
    l2_error: float

    def to_dict(self) -> Dict[str, float]:
        return {"sup_error": self.sup_error, "l2_error": self.l2_error}


@dataclass
class SolveReport:
    iterations: int
    final_update_norm: float
    solution: np.ndarray
    converged: bool
    comparison_held: bool
    sweep: str
    p: float
    sup_error_vs_reference: Optional[float] = None
    l2_error_vs_reference: Optional[float] = None
    history: List[float] = field(default_factory=list, repr=False)

    def to_dict(self) -> Dict[str, Any]:
        return {
            "iterations": self.iterations,
            "final_update_norm": self.final_update_norm,
            "converged": self.converged,
            "comparison_held": self.comparison_held,
            "sweep": self.sweep,
            "p": self.p,
            "sup_error_vs_reference": self.sup_error_vs_reference,
            "l2_error_vs_reference": self.l2_error_vs_reference,
        }


class TabulatedBoundary:
    """Boundary data from a value table; each query takes the nearest tabulated point."""

    def __init__(self, points: Sequence[Sequence[float]], values: Sequence[float]) -> None:
        pts = np.atleast_2d(np.asarray(points, dtype=float))
        vals = np.asarray(values, dtype=float).reshape(-1)
        if pts.shape[0] != vals.size or vals.size == 0:
            raise ValueError("boundary table needs one value per point")
        self._tree = cKDTree(pts)
        self._values = vals

    def __call__(self, points: np.ndarray) -> np.ndarray:
        _, idx = self._tree.query(np.atleast_2d(points))
        return self._values[idx]


def _greedy_colors(adjacency: np.ndarray, interior_pos: Dict[int, int]) -> np.ndarray:
    """First-fit coloring of the interior stencil graph in node order."""
    colors = np.full(adjacency.shape[0], -1, dtype=int)
    for row, neighbors in enumerate(adjacency):
        taken = {colors[interior_pos[j]] for j in neighbors if j in interior_pos}
        color = 0
        while color in taken:
            color += 1
        colors[row] = color
    return colors


def _build_lattice(
    label: str,
    domain: Domain,
    epsilon: float,
    basis: np.ndarray,
    offsets: np.ndarray,
    stencil: DirectionSet,
    admissible: Callable[[np.ndarray], np.ndarray],
) -> Lattice:
    if epsilon <= 0:
        raise ValueError("epsilon must be positive")
    n = basis.shape[0]
    lo, hi = domain.bounds()
    extent = float(np.max(hi - lo))
    if extent < epsilon:
        raise ValueError(f"domain too small: extent {extent:g} is below epsilon={epsilon}")
    reach = epsilon * float(np.max(np.linalg.norm(offsets @ basis, axis=1)))
    corners = np.array(list(itertools.product(*zip(lo - reach, hi + reach))))
    coords = corners @ np.linalg.inv(basis) / epsilon
    ranges = [np.arange(np.floor(c.min()) - 1, np.ceil(c.max()) + 2, dtype=int) for c in coords.T]
    grid = np.stack(np.meshgrid(*ranges, indexing="ij"), axis=-1).reshape(-1, n)
    grid = grid[admissible(grid)]
    inside = domain.contains(epsilon * grid @ basis)
    if not np.any(inside):
        raise ValueError(f"domain too small: no {label} lattice node at epsilon={epsilon} lies inside")

    interior_keys = {tuple(k) for k in grid[inside].tolist()}
    strip_keys = set()
    for key in interior_keys:
        for off in offsets.tolist():
            nb = tuple(a + b for a, b in zip(key, off))
            if nb not in interior_keys:
                strip_keys.add(nb)

    keys = sorted(interior_keys | strip_keys)
    index = {k: i for i, k in enumerate(keys)}
    int_coords = np.array(keys, dtype=int)
    interior = np.array([k in interior_keys for k in keys])
    interior_rows = np.flatnonzero(interior)
    adjacency = np.array(
        [[index[tuple(a + b for a, b in zip(keys[i], off))] for off in offsets.tolist()] for i in interior_rows],
        dtype=int,
    )
    colors = _greedy_colors(adjacency, {int(i): r for r, i in enumerate(interior_rows)})
    lattice = Lattice(
        label=label,
        dimension=n,
        spacing=float(epsilon),
        nodes=epsilon * int_coords @ basis,
        interior=interior,
        stencil=stencil,
        adjacency=adjacency,
        colors=colors,
    )
    logger.info(
        "built %s lattice: %s interior, %s strip nodes, %s colors",
        label, len(interior_rows), len(keys) - len(interior_rows), int(colors.max()) + 1,
    )
    return lattice


def build_triangular_lattice(domain: Domain, epsilon: float, k: int = 2) -> Lattice:
    """Eisenstein lattice eps*(a + b*omega) with the hexagonal stencil."""
    if domain.dimension != 2:
        raise ValueError("the triangular lattice needs a 2D domain")
    if k != 2:
        raise ValueError(f"polygon stencil k={k} does not tessellate the plane; grid solving needs k=2")
    basis = np.array([[1.0, 0.0], [-0.5, np.sqrt(3.0) / 2.0]])
    offsets = np.array(_HEXAGON_OFFSETS, dtype=int)
    return _build_lattice(
        "triangular", domain, epsilon, basis, offsets, polygon_set(2), lambda g: np.ones(len(g), dtype=bool)
    )


def build_d4_lattice(domain: Domain, epsilon: float) -> Lattice:
    """eps * D4 (integer 4-vectors with even coordinate sum), stencil = 24-cell vertices."""
    if domain.dimension != 4:
        raise ValueError("the D4 lattice needs a 4D domain")
    stencil = named_polytope("cell24")
    offsets = np.rint(stencil.vectors).astype(int)
    return _build_lattice(
        "d4", domain, epsilon, np.eye(4), offsets, stencil, lambda g: g.sum(axis=1) % 2 == 0
    )


def _inner_tol(tol: float) -> float:
    return min(DEFAULT_TOL, 1e-2 * tol)


def _scheme_scale(lattice: Lattice, p: float) -> float:
    c = scheme_constant(p, lattice.dimension, "sphere")
    return float(c) * lattice.neighbor_distance**2


def scheme_residual(lattice: Lattice, u: np.ndarray, node_index: int, p: float, g: BoundaryFn) -> float:
    """(u - A[u]) / (c eps^2) at interior nodes, u - g at strip nodes."""
    if not lattice.interior[node_index]:
        return float(u[node_index] - g(lattice.nodes[node_index][None])[0])
    row = int(np.searchsorted(lattice.interior_index, node_index))
    sample = WeightedSample(u[lattice.adjacency[row]], lattice.stencil.weights)
    average = p_average(sample, p).value
    return float((u[node_index] - average) / _scheme_scale(lattice, p))


def jacobi_step(lattice: Lattice, u: np.ndarray, p: float, tol: float = DEFAULT_TOL) -> np.ndarray:
    """One simultaneous p-averaging update of every interior node."""
    new = np.array(u, dtype=float, copy=True)
    new[lattice.interior_index] = p_average_rows(u[lattice.adjacency], lattice.stencil.weights, p, tol)
    return new


def _boundary_values(lattice: Lattice, g: BoundaryFn) -> np.ndarray:
    values = np.asarray(g(lattice.nodes[lattice.strip_index]), dtype=float).reshape(-1)
    if values.size != lattice.strip_index.size or not np.all(np.isfinite(values)):
        raise ValueError("boundary data must be finite at every strip node")
    return values


def error_report(lattice: Lattice, solution: np.ndarray, reference: BoundaryFn) -> ErrorReport:
    """Sup and root-mean-square errors over interior nodes."""
    rows = lattice.interior_index
    diff = np.asarray(solution)[rows] - np.asarray(reference(lattice.nodes[rows]), dtype=float)
    return ErrorReport(float(np.max(np.abs(diff))), float(np.sqrt(np.mean(diff**2))))


def solve_dirichlet(
    lattice: Lattice,
    g: BoundaryFn,
    p: float,
    tol: float = DEFAULT_SOLVER_TOL,
    max_iters: int = DEFAULT_MAX_ITERS,
    sweep: str = "jacobi",
    reference: Optional[BoundaryFn] = None,
) -> SolveReport:
    """Iterate u <- A_eps^p[u] on interior nodes with u = g fixed on the strip.

    Stops once the sup-norm update is <= tol; running out of iterations is
    reported through `converged`, not raised.
    """
    if tol <= 0:
        raise ValueError("tol must be positive")
    if max_iters < 1:
        raise ValueError("max_iters must be at least 1")
    if sweep not in SWEEPS:
        raise ValueError(f"sweep must be one of {', '.join(SWEEPS)}, got '{sweep}'")

    interior = lattice.interior_index
    strip = lattice.strip_index
    weights = lattice.stencil.weights
    inner = _inner_tol(tol)

    u = np.zeros(lattice.nodes.shape[0])
    u[strip] = _boundary_values(lattice, g)
    g_min, g_max = float(u[strip].min()), float(u[strip].max())
    u[interior] = float(u[strip].mean())

    color_rows = [np.flatnonzero(lattice.colors == c) for c in range(int(lattice.colors.max()) + 1)]
    comparison_held = True
    converged = False
    update = float("inf")
    history: List[float] = []
    iterations = 0

    for iterations in range(1, max_iters + 1):
        if sweep == "jacobi":
            new = p_average_rows(u[lattice.adjacency], weights, p, inner)
            update = float(np.max(np.abs(new - u[interior])))
            u[interior] = new
        else:
            update = 0.0
            for rows in color_rows:
                nodes = interior[rows]
                new = p_average_rows(u[lattice.adjacency[rows]], weights, p, inner)
                update = max(update, float(np.max(np.abs(new - u[nodes]))))
                u[nodes] = new
        history.append(update)

        if comparison_held and (
            u[interior].min() < g_min - _COMPARISON_SLACK or u[interior].max() > g_max + _COMPARISON_SLACK
        ):
            comparison_held = False
            logger.warning("comparison principle violated at iteration %s", iterations)
        if iterations % 1000 == 0:
            logger.debug("iteration %s update %.3e", iterations, update)
        if update <= tol:
            converged = True
            break

    if converged:
        logger.info("%s sweep converged in %s iterations (update %.3e)", sweep, iterations, update)
    else:
        logger.warning("%s sweep stopped after %s iterations (update %.3e > tol %.1e)", sweep, iterations, update, tol)

    report = SolveReport(
        iterations=iterations,
        final_update_norm=update,
        solution=u,
        converged=converged,
        comparison_held=comparison_held,
        sweep=sweep,
        p=float(p),
        history=history,
    )
    if reference is not None:
        errors = error_report(lattice, u, reference)
        report.sup_error_vs_reference = errors.sup_error
        report.l2_error_vs_reference = errors.l2_error
    return report


def write_solution_csv(lattice: Lattice, report: SolveReport, path: str) -> None:
    header = [f"x{i + 1}" for i in range(lattice.dimension)] + ["value", "node_class"]
    rows = [
        [*map(float, point), float(value), cls]
        for point, value, cls in zip(lattice.nodes, report.solution, lattice.node_class)
    ]
    write_csv_atomic(path, header, rows)
