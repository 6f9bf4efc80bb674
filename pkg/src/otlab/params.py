"""Security parameters of the 1-out-of-2 protocol for a target bound epsilon.

The construction fixes the honest failure budget by splitting it as
``c exp(-beta^2/2) = 1/4`` and ``c exp(-N xi^2 2^(-x-2)) = 1/8``, then picks
``c`` from ``(8/9)^c <= eps`` and ``x`` as the largest root of

    c ln(8c) / eps * 2^(5/2 - x/2) = 1 / (4x)

after which ``xi = 1/(8x)`` and ``N = ln(8c) xi^-2 2^(x+2)``. The resulting
``N`` is far beyond anything simulable; these values are existence witnesses.
"""

from __future__ import annotations

import math
import sys
from dataclasses import dataclass, field

import mpmath
from scipy.optimize import bisect

from otlab.core import DEFAULT_ELL
from otlab.errors import InvalidParameterError, NoRootError, ParameterRangeError
from otlab.ot12 import alice_bound_value, bob_bound_value, failure_bound_value

X_BRACKET = (1.0, 200.0)
X_SCAN_STEP = 0.125
RESIDUAL_TOL = 1e-9
# pa/pb/pf comparisons sit exactly on equality points of the construction;
# this absorbs floating rounding there and nothing else.
BOUND_RTOL = 1e-12
_LN_8_9 = math.log(8 / 9)


def _check_epsilon(epsilon: float) -> None:
    if not 0.0 < epsilon < 1.0:
        raise InvalidParameterError(f"epsilon must lie in (0, 1), got {epsilon}")


def solve_c(epsilon: float) -> int:
    """Outer round count: ``ceil(ln eps / ln(8/9))``.

    Ratios within 1e-9 of an integer are treated as that integer, so exact
    powers of 8/9 are not pushed up a round by rounding noise.
    """
    _check_epsilon(epsilon)
    ratio = math.log(epsilon) / _LN_8_9
    nearest = round(ratio)
    if nearest >= 1 and abs(ratio - nearest) <= 1e-9 * nearest:
        return int(nearest)
    return max(1, math.ceil(ratio))


def solve_beta(c: int) -> float:
    """``sqrt(2) * sqrt(ln(4c))``, which makes ``c exp(-beta^2/2) = 1/4``."""
    if c < 1:
        raise InvalidParameterError("c must be >= 1")
    return math.sqrt(2.0) * math.sqrt(math.log(4 * c))


def x_equation_residual(x: float, epsilon: float, c: int) -> float:
    """Left minus right side of the implicit equation for ``x``."""
    return c * math.log(8 * c) / epsilon * 2.0 ** (2.5 - x / 2) - 1.0 / (4 * x)


def bracket_x(epsilon: float, c: int) -> tuple[float, float]:
    """Grid cell in ``[1, 200]`` holding the largest sign change of the residual."""
    lo, hi = X_BRACKET
    steps = int(round((hi - lo) / X_SCAN_STEP))
    right = hi
    f_right = x_equation_residual(right, epsilon, c)
    for i in range(steps - 1, -1, -1):
        left = lo + i * X_SCAN_STEP
        f_left = x_equation_residual(left, epsilon, c)
        if f_left == 0.0:
            return left, left
        if (f_left > 0) != (f_right > 0):
            return left, right
        right, f_right = left, f_left
    raise NoRootError(f"no sign change in [{lo}, {hi}] for epsilon={epsilon}, c={c}")


def solve_x(epsilon: float, c: int) -> float:
    """Largest root of the implicit ``x`` equation, by bisection."""
    _check_epsilon(epsilon)
    if c < 1:
        raise InvalidParameterError("c must be >= 1")
    a, b = bracket_x(epsilon, c)
    if a == b:
        return a
    f = lambda x: x_equation_residual(x, epsilon, c)  # noqa: E731
    x = bisect(f, a, b, xtol=1e-14, rtol=4 * 2.2205e-16, maxiter=200)
    res = abs(f(x))
    if res > RESIDUAL_TOL:
        raise NoRootError(f"bisection residual {res:g} exceeds {RESIDUAL_TOL}")
    return x


def solve_xi(x: float) -> float:
    """``1/(8x)``; always within ``xi <= 1/(2x)``."""
    if x < 1:
        raise InvalidParameterError("x must be >= 1")
    return 1.0 / (8.0 * x)


def solve_bigN(c: int, xi: float, x: float) -> int:
    """``ceil(ln(8c) xi^-2 2^(x+2))``, evaluated in 50-digit arithmetic.

    Doubles are spaced 256 apart near ``1e18``, so a float ceiling could land
    below the true value; the extra digits make the ceiling exact for the
    given ``xi`` and ``x``. Values past the float range raise, since the
    bound formulas evaluate ``bigN`` as a float.
    """
    if c < 1 or not 0.0 < xi < 0.5 or x < 1:
        raise InvalidParameterError("need c >= 1, 0 < xi < 1/2 and x >= 1")
    with mpmath.workdps(50):
        value = mpmath.log(8 * c) * mpmath.mpf(xi) ** -2 * mpmath.power(2, mpmath.mpf(x) + 2)
        if value > sys.float_info.max:
            raise ParameterRangeError("bigN exceeds the float range")
        return int(mpmath.ceil(value))


def bigN_from_x(c: int, x: float) -> float:
    """Closed form ``ln(8c) x^2 2^(x+8)`` once ``xi = 1/(8x)`` is substituted."""
    return math.log(8 * c) * x * x * 2.0 ** (x + 8)


def bigN_from_xi(c: int, xi: float, x: float) -> float:
    """Real-valued ``ln(8c) xi^-2 2^(x+2)`` (before the ceiling)."""
    return math.log(8 * c) * xi**-2 * 2.0 ** (x + 2)


@dataclass(frozen=True)
class ParameterSet:
    epsilon: float
    c: int
    x: float
    beta: float
    xi: float
    alpha: float
    bigN: int
    ell: int = DEFAULT_ELL

    def __post_init__(self):
        _check_epsilon(self.epsilon)
        if self.c < 1 or self.bigN < 1 or self.ell < 1:
            raise InvalidParameterError("c, bigN and ell must be positive")
        if self.x < 1 or self.beta <= 0:
            raise InvalidParameterError("need x >= 1 and beta > 0")
        if not 0.0 < self.xi < 0.5 or self.alpha + self.xi != 0.5:
            raise InvalidParameterError("need 0 < xi < 1/2 and alpha = 1/2 - xi")

    @classmethod
    def from_xi(cls, epsilon, c, x, beta, xi, bigN, ell=DEFAULT_ELL) -> "ParameterSet":
        return cls(epsilon, c, x, beta, xi, 0.5 - xi, bigN, ell)

    @property
    def rounds_x(self) -> int:
        """Integer round count a simulation would use."""
        return max(1, math.ceil(self.x - 1e-12))

    def alice_bound(self) -> float:
        return alice_bound_value(self.c, self.beta, self.bigN, self.x)

    def bob_bound(self) -> float:
        return bob_bound_value(self.c, self.xi, self.x)

    def failure_bound(self) -> float:
        return failure_bound_value(self.c, self.beta, self.bigN, self.xi, self.x)

    def as_dict(self) -> dict:
        return {
            "epsilon": self.epsilon,
            "c": self.c,
            "x": self.x,
            "beta": self.beta,
            "xi": self.xi,
            "alpha": self.alpha,
            "bigN": self.bigN,
            "ell": self.ell,
        }


@dataclass(frozen=True)
class Violation:
    condition: str
    lhs: float
    rhs: float


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = field(default=())

    @property
    def ok(self) -> bool:
        return not self.violations

    def names(self) -> set[str]:
        return {v.condition for v in self.violations}


def derive_parameter_set(epsilon: float, ell: int = DEFAULT_ELL) -> ParameterSet:
    c = solve_c(epsilon)
    beta = solve_beta(c)
    x = solve_x(epsilon, c)
    xi = solve_xi(x)
    bigN = solve_bigN(c, xi, x)
    return ParameterSet.from_xi(epsilon, c, x, beta, xi, bigN, ell)


def validate_parameter_set(ps: ParameterSet) -> ValidationReport:
    """Check the three side conditions and the three bound targets."""
    sqrtN = math.sqrt(ps.bigN)
    checks = [
        ("beta_bound1", ps.beta, sqrtN / 2, False),
        ("beta_bound2", ps.beta, sqrtN / 5, False),
        ("dzeta_bound", ps.xi, 1 / (2 * ps.x), False),
        ("pa", ps.alice_bound(), ps.epsilon, True),
        ("pb", ps.bob_bound(), ps.epsilon, True),
        ("pf", ps.failure_bound(), 0.5, True),
    ]
    violations = []
    for name, lhs, rhs, fuzzy in checks:
        limit = rhs * (1 + BOUND_RTOL) if fuzzy else rhs
        if not lhs <= limit:
            violations.append(Violation(name, lhs, rhs))
    return ValidationReport(tuple(violations))
