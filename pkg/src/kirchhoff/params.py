"""Problem parameters for -(a*int|grad u|^2 + b) Lap u + u = f(x)|u|^{p-2}u in R^N."""

from __future__ import annotations

import math
from dataclasses import dataclass, replace
from typing import Optional


class DomainError(ValueError):
    """Input outside the admissible parameter domain."""


class PreconditionError(ValueError):
    """A documented precondition of an operation does not hold."""


class SolverError(RuntimeError):
    """A numerical solver failed; ``state`` carries the last accepted state."""

    def __init__(self, message, state=None):
        super().__init__(message)
        self.state = state


def critical_exponent(N: int) -> float:
    """Sobolev exponent 2* (infinite for N <= 2)."""
    if N <= 2:
        return math.inf
    return 2.0 * N / (N - 2)


def p_upper(N: int) -> float:
    return min(4.0, critical_exponent(N))


def check_exponent(N: int, p: float) -> None:
    if int(N) != N or N < 1:
        raise DomainError(f"dimension N must be a positive integer, got {N!r}")
    if not (2.0 < p < p_upper(N)):
        raise DomainError(
            f"exponent p={p} outside (2, min(4, 2*)) = (2, {p_upper(N):g}) for N={N}"
        )


@dataclass(frozen=True)
class ProblemParams:
    N: int
    p: float
    a: float = 0.0
    b: float = 1.0
    f_inf: float = 1.0
    f_min: Optional[float] = None
    f_max: Optional[float] = None

    def __post_init__(self):
        if self.f_min is None:
            object.__setattr__(self, "f_min", self.f_inf)
        if self.f_max is None:
            object.__setattr__(self, "f_max", self.f_inf)
        object.__setattr__(self, "N", int(self.N))
        check_exponent(self.N, self.p)
        if not self.b > 0:
            raise DomainError(f"b must be positive, got {self.b}")
        if not self.a >= 0:
            raise DomainError(f"a must be nonnegative, got {self.a}")
        if not (0 < self.f_min <= self.f_inf <= self.f_max):
            raise DomainError(
                f"need 0 < f_min <= f_inf <= f_max, got "
                f"({self.f_min}, {self.f_inf}, {self.f_max})"
            )
        for name in ("p", "a", "b", "f_inf", "f_min", "f_max"):
            if not math.isfinite(getattr(self, name)):
                raise DomainError(f"{name} must be finite")

    @property
    def two_star(self) -> float:
        return critical_exponent(self.N)

    @property
    def autonomous(self) -> bool:
        return self.f_min == self.f_inf == self.f_max

    def with_a(self, a: float) -> "ProblemParams":
        return replace(self, a=float(a))

    def coupling_scale(self) -> float:
        """Factor b^{(4-N)/2} mapping b=1 coupling thresholds to this b.

        The substitution u(x) = v(x/sqrt(b)) turns J_{a,b} into b^{N/2} J_{a',1}
        with a' = a b^{(N-4)/2}.
        """
        return self.b ** ((4.0 - self.N) / 2.0)

    def as_dict(self) -> dict:
        return {
            "N": self.N,
            "p": self.p,
            "a": self.a,
            "b": self.b,
            "f_inf": self.f_inf,
            "f_min": self.f_min,
            "f_max": self.f_max,
        }
