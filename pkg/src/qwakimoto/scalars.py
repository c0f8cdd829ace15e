"""Exact q-arithmetic at a specialized rational deformation point.

All structure constants of the construction are evaluated at a single point
``q = t**e`` with ``t`` rational, so every quantity is an exact rational number
(``gmpy2.mpq``).  Every exponent of ``q`` used anywhere must land on the lattice
``(1/e) Z``; :func:`qpow` enforces that.

A floating-point twin (:class:`FloatParams`) exposes the same surface with
``q`` an arbitrary real number; it is used only for the ``q -> 1`` limit
comparisons, where the lattice constraint cannot be met.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction
from functools import cached_property
from math import lcm

import gmpy2
from gmpy2 import mpq

__all__ = [
    "CriticalLevel",
    "DeformationParams",
    "FloatParams",
    "NonRepresentableExponent",
    "SingularCartan",
    "cartan_matrix",
    "mpq",
    "nu",
    "qint",
    "qpow",
    "to_fraction",
]


class NonRepresentableExponent(ValueError):
    """A power of q falls off the t-lattice for the chosen granularity."""


class SingularCartan(ValueError):
    """The finite Cartan matrix is singular (M == N)."""


class CriticalLevel(ValueError):
    """The level equals minus the dual Coxeter number."""


def to_fraction(x) -> Fraction:
    if isinstance(x, Fraction):
        return x
    if isinstance(x, int):
        return Fraction(x)
    if isinstance(x, str):
        return Fraction(x)
    if type(x) is type(mpq(0)):
        return Fraction(int(x.numerator), int(x.denominator))
    return Fraction(x)


def nu(i: int, M: int) -> int:
    """Grading sign: +1 for 1 <= i <= M, -1 above M, and -1 for i = 0."""
    if i == 0:
        return -1
    return 1 if i <= M else -1


def cartan_matrix(M: int, N: int) -> tuple[list[list[int]], list[int]]:
    """Finite Cartan matrix of sl(M|N) and the sign vector ``nu[0..M+N]``."""
    if M < 1 or N < 1:
        raise ValueError("M and N must be positive")
    signs = [nu(i, M) for i in range(M + N + 1)]
    r = M + N - 1
    A = [[0] * r for _ in range(r)]
    for i in range(1, r + 1):
        for j in range(1, r + 1):
            A[i - 1][j - 1] = (
                (signs[i] + signs[i + 1]) * (i == j)
                - signs[i] * (i == j + 1)
                - signs[i + 1] * (i + 1 == j)
            )
    return A, signs


@dataclass(frozen=True)
class DeformationParams:
    """Specialization point of the deformation: ``q = t**e`` and level ``k``."""

    M: int
    N: int
    k: Fraction = Fraction(1)
    t: Fraction = Fraction(1, 2)
    e: int | None = None
    _pow_cache: dict = field(default_factory=dict, compare=False, repr=False, hash=False)

    exact = True

    def __post_init__(self):
        object.__setattr__(self, "k", to_fraction(self.k))
        object.__setattr__(self, "t", to_fraction(self.t))
        if self.M < 1 or self.N < 1:
            raise ValueError("M and N must be positive")
        if not (0 < self.t < 1):
            raise ValueError("t must lie strictly between 0 and 1")
        if self.e is None:
            object.__setattr__(self, "e", 2 * self.k.denominator * lcm(1, 2))
        if self.e <= 0:
            raise ValueError("granularity e must be positive")
        if self.e % (2 * self.k.denominator):
            raise NonRepresentableExponent(
                f"granularity e={self.e} is not divisible by 2*denominator(k)={2 * self.k.denominator}"
            )

    @property
    def g(self) -> int:
        return self.M - self.N

    @property
    def rank(self) -> int:
        return self.M + self.N - 1

    @cached_property
    def cartan(self) -> list[list[int]]:
        return cartan_matrix(self.M, self.N)[0]

    @cached_property
    def signs(self) -> list[int]:
        return cartan_matrix(self.M, self.N)[1]

    def nu(self, i: int) -> int:
        return self.signs[i]

    def A(self, i: int, j: int) -> int:
        return self.cartan[i - 1][j - 1]

    @cached_property
    def q(self):
        return self.qpow(1)

    def scalar(self, x):
        """Convert an int/Fraction into the working scalar type."""
        if isinstance(x, Fraction):
            return mpq(x.numerator, x.denominator)
        return mpq(x)

    def zero(self):
        return mpq(0)

    def one(self):
        return mpq(1)

    def qpow(self, x):
        """Exact ``q**x``; ``x*e`` must be an integer."""
        x = to_fraction(x)
        n = x * self.e
        if n.denominator != 1:
            raise NonRepresentableExponent(f"q^{x} is not on the t-lattice with e={self.e}")
        n = int(n)
        try:
            return self._pow_cache[n]
        except KeyError:
            t = mpq(self.t.numerator, self.t.denominator)
            v = t**n if n >= 0 else 1 / t ** (-n)
            self._pow_cache[n] = v
            return v

    def qint(self, n):
        """``[n]_q = (q^n - q^-n)/(q - q^-1)``; ``n`` may be rational if on the lattice."""
        n = to_fraction(n)
        if n == 0:
            return mpq(0)
        return (self.qpow(n) - self.qpow(-n)) / (self.qpow(1) - self.qpow(-1))

    def is_zero(self, x) -> bool:
        return x == 0

    def check_noncritical(self):
        if self.k + self.g == 0:
            raise CriticalLevel(f"k = {self.k} equals -g = {-self.g}")

    def describe(self) -> dict:
        return {"M": self.M, "N": self.N, "k": str(self.k), "t": str(self.t), "e": self.e}


@dataclass(frozen=True)
class FloatParams:
    """Same surface as :class:`DeformationParams` with ``q`` a real float."""

    M: int
    N: int
    k: Fraction = Fraction(1)
    qval: float = 0.5

    exact = False

    def __post_init__(self):
        object.__setattr__(self, "k", to_fraction(self.k))

    g = DeformationParams.g
    rank = DeformationParams.rank
    cartan = DeformationParams.cartan
    signs = DeformationParams.signs
    nu = DeformationParams.nu
    A = DeformationParams.A
    check_noncritical = DeformationParams.check_noncritical

    @property
    def q(self):
        return self.qval

    def scalar(self, x):
        return float(x)

    def zero(self):
        return 0.0

    def one(self):
        return 1.0

    def qpow(self, x):
        return self.qval ** float(x)

    def qint(self, n):
        n = float(n)
        if n == 0:
            return 0.0
        q = self.qval
        return (q**n - q ** (-n)) / (q - 1 / q)

    def is_zero(self, x) -> bool:
        return abs(x) < 1e-300

    def describe(self) -> dict:
        return {"M": self.M, "N": self.N, "k": str(self.k), "q": self.qval}


def qint(n, params):
    return params.qint(n)


def qpow(x, params):
    return params.qpow(x)


gmpy2.get_context().precision = 200
