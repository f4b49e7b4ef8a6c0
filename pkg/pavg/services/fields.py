from dataclasses import dataclass
from typing import Callable, Dict

import numpy as np

# Named analytic fields used as boundary data, references and AMVP probes.
# Every callable takes points of shape (..., n).


@dataclass(frozen=True)
class AnalyticField:
    name: str
    value_fn: Callable[[np.ndarray], np.ndarray]
    gradient_fn: Callable[[np.ndarray], np.ndarray]
    hessian_fn: Callable[[np.ndarray], np.ndarray]

    def value(self, points: np.ndarray) -> np.ndarray:
        return self.value_fn(np.asarray(points, dtype=float))

    def __call__(self, point: np.ndarray) -> float:
        return float(self.value(point))

    def gradient(self, point: np.ndarray) -> np.ndarray:
        return self.gradient_fn(np.asarray(point, dtype=float))

    def hessian(self, point: np.ndarray) -> np.ndarray:
        return self.hessian_fn(np.asarray(point, dtype=float))


@dataclass(frozen=True, eq=False)
class FieldProbe:
    """An analytic field anchored at a base point."""

    field: AnalyticField
    base_point: np.ndarray

    @property
    def base_value(self) -> float:
        return float(self.field.value(self.base_point))

    def increment(self, offsets: np.ndarray) -> np.ndarray:
        return self.field.value(self.base_point + offsets) - self.base_value

    @property
    def gradient(self) -> np.ndarray:
        return self.field.gradient(self.base_point)

    @property
    def hessian(self) -> np.ndarray:
        return self.field.hessian(self.base_point)


def _axis(x: np.ndarray, i: int, scale: float = 1.0) -> np.ndarray:
    out = np.zeros(x.shape[-1])
    out[i] = scale
    return out


def _diag(x: np.ndarray, entries: Dict[int, float]) -> np.ndarray:
    out = np.zeros((x.shape[-1], x.shape[-1]))
    for i, v in entries.items():
        out[i, i] = v
    return out


def _sech_sq(t: np.ndarray) -> np.ndarray:
    return 1.0 / np.cosh(t) ** 2


STEP_SHARPNESS = 8.0

FIELDS: Dict[str, AnalyticField] = {
    "linear_x1": AnalyticField(
        "linear_x1",
        lambda x: x[..., 0],
        lambda x: _axis(x, 0),
        lambda x: _diag(x, {}),
    ),
    "re_z2": AnalyticField(
        "re_z2",
        lambda x: x[..., 0] ** 2 - x[..., 1] ** 2,
        lambda x: _axis(x, 0, 2 * x[0]) + _axis(x, 1, -2 * x[1]),
        lambda x: _diag(x, {0: 2.0, 1: -2.0}),
    ),
    "abs_sq": AnalyticField(
        "abs_sq",
        lambda x: np.sum(x**2, axis=-1),
        lambda x: 2.0 * x,
        lambda x: 2.0 * np.eye(x.shape[-1]),
    ),
    "sin_x1_plus_x2_sq": AnalyticField(
        "sin_x1_plus_x2_sq",
        lambda x: np.sin(x[..., 0]) + x[..., 1] ** 2,
        lambda x: _axis(x, 0, np.cos(x[0])) + _axis(x, 1, 2 * x[1]),
        lambda x: _diag(x, {0: -np.sin(x[0]), 1: 2.0}),
    ),
    "step_tanh": AnalyticField(
        "step_tanh",
        lambda x: np.tanh(STEP_SHARPNESS * x[..., 0]),
        lambda x: _axis(x, 0, STEP_SHARPNESS * _sech_sq(STEP_SHARPNESS * x[0])),
        lambda x: _diag(
            x,
            {0: -2.0 * STEP_SHARPNESS**2 * np.tanh(STEP_SHARPNESS * x[0]) * _sech_sq(STEP_SHARPNESS * x[0])},
        ),
    ),
}


def constant_field(value: float) -> AnalyticField:
    return AnalyticField(
        f"constant:{value:g}",
        lambda x: np.full(np.shape(x)[:-1], float(value)),
        lambda x: np.zeros(x.shape[-1]),
        lambda x: np.zeros((x.shape[-1], x.shape[-1])),
    )


def get_field(spec: str) -> AnalyticField:
    """Look up a named field; `constant:<v>` builds a constant one."""
    name = spec.strip()
    if name.startswith("constant:"):
        try:
            return constant_field(float(name.split(":", 1)[1]))
        except ValueError:
            raise ValueError(f"invalid constant field '{spec}'") from None
    if name not in FIELDS:
        raise ValueError(f"unknown field '{spec}', expected one of {', '.join(sorted(FIELDS))} or constant:<v>")
    return FIELDS[name]
