import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Union

SQRT5 = math.sqrt(5.0)

Rational = Union[int, Fraction]


@dataclass(frozen=True)
class GoldenNumber:
    """Exact element a + b*sqrt(5) of Q[sqrt(5)]."""

    a: Fraction = Fraction(0)
    b: Fraction = Fraction(0)

    def __post_init__(self) -> None:
        object.__setattr__(self, "a", Fraction(self.a))
        object.__setattr__(self, "b", Fraction(self.b))

    @classmethod
    def coerce(cls, value: Union["GoldenNumber", Rational]) -> "GoldenNumber":
        if isinstance(value, GoldenNumber):
            return value
        if isinstance(value, float):
            raise TypeError("floats are not exact; pass a Fraction")
        return cls(Fraction(value), Fraction(0))

    def __add__(self, other):
        other = GoldenNumber.coerce(other)
        return GoldenNumber(self.a + other.a, self.b + other.b)

    __radd__ = __add__

    def __sub__(self, other):
        other = GoldenNumber.coerce(other)
        return GoldenNumber(self.a - other.a, self.b - other.b)

    def __rsub__(self, other):
        return GoldenNumber.coerce(other) - self

    def __mul__(self, other):
        other = GoldenNumber.coerce(other)
        return GoldenNumber(
            self.a * other.a + 5 * self.b * other.b,
            self.a * other.b + self.b * other.a,
        )

    __rmul__ = __mul__

    def __neg__(self) -> "GoldenNumber":
        return GoldenNumber(-self.a, -self.b)

    def conj(self) -> "GoldenNumber":
        return GoldenNumber(self.a, -self.b)

    def norm(self) -> Fraction:
        return self.a * self.a - 5 * self.b * self.b

    def __truediv__(self, other):
        other = GoldenNumber.coerce(other)
        n = other.norm()
        if n == 0:
            raise ZeroDivisionError("division by zero in Q[sqrt(5)]")
        num = self * other.conj()
        return GoldenNumber(num.a / n, num.b / n)

    def __rtruediv__(self, other):
        return GoldenNumber.coerce(other) / self

    def __pow__(self, exponent: int) -> "GoldenNumber":
        if exponent < 0:
            return GoldenNumber(1) / (self ** (-exponent))
        result = GoldenNumber(1)
        base = self
        while exponent:
            if exponent & 1:
                result = result * base
            base = base * base
            exponent >>= 1
        return result

    def __eq__(self, other) -> bool:
        if isinstance(other, (int, Fraction)):
            other = GoldenNumber.coerce(other)
        if not isinstance(other, GoldenNumber):
            return NotImplemented
        return self.a == other.a and self.b == other.b

    def __hash__(self) -> int:
        return hash((self.a, self.b))

    def is_zero(self) -> bool:
        return self.a == 0 and self.b == 0

    def __float__(self) -> float:
        return float(self.a) + float(self.b) * SQRT5

    def __repr__(self) -> str:
        if self.b == 0:
            return f"{self.a}"
        sign = "+" if self.b > 0 else "-"
        return f"({self.a}{sign}{abs(self.b)}*r5)"


ZERO = GoldenNumber(0)
ROOT5 = GoldenNumber(0, 1)
# golden ratio c = (1 + sqrt 5)/2 and the powers the vertex lists use
PHI = GoldenNumber(Fraction(1, 2), Fraction(1, 2))
PHI_INV = PHI - 1
PHI_SQ = PHI + 1
PHI_INV_SQ = 2 - PHI
