"""Exact moments of subsystem purity via Weingarten calculus.

For a fixed global spectrum Lambda conjugated by a Haar-random unitary, the
k-th moment of the purity of the reduced state on factor A is a double sum
over the symmetric group S_{2k}: one permutation carries the Weingarten
coefficient, the other counts index loops on the two tensor factors.  The sum
collapses to a polynomial in the power sums p_j = Tr Lambda^j with exact
rational coefficients, which this module builds and also provides in closed
form for the first two moments.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Mapping

from .symgroup import (
    Partition,
    Permutation,
    all_partitions,
    all_permutations,
    character,
    compose,
    cycle_count,
    cycle_type,
    nearby_pair_swap,
    schur_dimension,
    sn_dimension,
)


class DegenerateDimensionError(ValueError):
    """A vanishing unitary-group irrep dimension makes the coefficient undefined."""


class PoleError(ValueError):
    """A closed-form rational expression was evaluated at one of its poles."""


@dataclass(frozen=True, order=True)
class BipartitionDims:
    """Subsystem dimensions of an N = n_a * n_b bipartite system, n_a <= n_b."""

    n_a: int
    n_b: int

    def __post_init__(self) -> None:
        if self.n_a < 1 or self.n_b < 1:
            raise ValueError(f"dimensions must be positive: ({self.n_a}, {self.n_b})")
        if self.n_a > self.n_b:
            raise ValueError(f"expected n_a <= n_b, got {self.n_a} > {self.n_b}")

    @property
    def n(self) -> int:
        return self.n_a * self.n_b


def weingarten_coefficient(sigma_class: Partition, N: int) -> Fraction:
    """Unitary Weingarten coefficient for a conjugacy class of S_n at dimension N.

    Character sum over shapes Y of weight n:
    sum_Y dim(Y)^2 chi_Y(sigma) / (n!^2 s_Y(N)), with dim the S_n irrep
    dimension and s_Y(N) the U(N) one.  Shapes with s_Y(N) = 0 and a
    nonvanishing character make the coefficient undefined and raise
    DegenerateDimensionError (for n = 4 that happens whenever N <= 3).
    """
    n = sigma_class.weight
    if n < 1:
        raise ValueError("class must have positive weight")
    fact2 = math.factorial(n) ** 2
    total = Fraction(0)
    for shape in all_partitions(n):
        chi = character(shape, sigma_class)
        sdim = schur_dimension(shape, N)
        if sdim == 0:
            if chi != 0:
                raise DegenerateDimensionError(
                    f"U({N}) dimension of shape {shape.parts} vanishes with "
                    f"nonzero character; coefficient undefined for n={n}, N={N}"
                )
            continue
        total += Fraction(sn_dimension(shape) ** 2 * chi, fact2 * sdim)
    return total


@dataclass(frozen=True)
class WeingartenTable:
    """All Weingarten coefficients of S_n at a fixed dimension, keyed by class."""

    n: int
    dim: int
    coeffs: Mapping[Partition, Fraction]

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "dim": self.dim,
            "coeffs": [
                {"class": list(mu.parts), "num": c.numerator, "den": c.denominator}
                for mu, c in self.coeffs.items()
            ],
        }


def weingarten_table(n: int, N: int) -> WeingartenTable:
    """Coefficients for every conjugacy class of S_n, in reverse-lex class order."""
    coeffs = {mu: weingarten_coefficient(mu, N) for mu in all_partitions(n)}
    return WeingartenTable(n=n, dim=N, coeffs=coeffs)


def weingarten_closed_form(sigma_class: Partition, N: int) -> Fraction:
    """Tabulated closed-form coefficients for n = 2 and n = 4.

    These are kept separate from the character-sum evaluation on purpose: the
    selftest compares the two routes as exact rational identities.  Raises
    PoleError at the poles (n = 2: N = 1; n = 4: N <= 3).
    """
    parts = sigma_class.parts
    n = sigma_class.weight
    if n == 2:
        if N < 2:
            raise PoleError(f"n=2 closed forms have a pole at N={N}")
        if parts == (1, 1):
            return Fraction(1, (N - 1) * (N + 1))
        if parts == (2,):
            return Fraction(-1, (N - 1) * N * (N + 1))
    elif n == 4:
        if N < 4:
            raise PoleError(f"n=4 closed forms have a pole at N={N}")
        den = (N - 3) * (N - 2) * (N - 1) * N**2 * (N + 1) * (N + 2) * (N + 3)
        if parts == (1, 1, 1, 1):
            return Fraction(N**4 - 8 * N**2 + 6, den)
        if parts == (2, 1, 1):
            return Fraction(-1, (N - 3) * (N - 1) * N * (N + 1) * (N + 3))
        if parts == (2, 2):
            return Fraction(N**2 + 6, den)
        if parts == (3, 1):
            return Fraction(2 * N**2 - 3, den)
        if parts == (4,):
            return Fraction(-5 * N, den)
    raise ValueError(f"no closed form tabulated for class {parts}")


def f_count(tau: Permutation, dims: BipartitionDims) -> int:
    """Index-loop count n_a^cycles(tau) * n_b^cycles(tau o s).

    Equals the literal delta-constrained sum over 2k row indices below n_a and
    2k column indices below n_b, where s is the nearby-pair swap: row indices
    are constant on cycles of tau, column indices on cycles of tau o s.
    """
    deg = tau.degree
    if deg % 2:
        raise ValueError(f"degree must be even, got {deg}")
    s = nearby_pair_swap(deg // 2)
    return dims.n_a ** cycle_count(tau) * dims.n_b ** cycle_count(compose(tau, s))


@dataclass(frozen=True)
class PowerSumPolynomial:
    """Polynomial in the power sums p_j = Tr Lambda^j, exact rational coefficients.

    Monomials are partitions with all parts >= 2 (p_1 = 1 is substituted at
    construction); the empty partition keys the constant term.  `context`
    records the subsystem dimensions the coefficients belong to.
    """

    context: BipartitionDims
    terms: Mapping[Partition, Fraction]

    def __post_init__(self) -> None:
        clean = {}
        for mono, coeff in self.terms.items():
            if any(part < 2 for part in mono.parts):
                raise ValueError(f"monomial parts must be >= 2: {mono.parts}")
            coeff = Fraction(coeff)
            if coeff != 0:
                clean[mono] = coeff
        object.__setattr__(self, "terms", clean)

    def evaluate(self, power_sums: Mapping[int, object]):
        """Evaluate at a map j -> p_j.  Exact inputs give an exact result."""
        total = Fraction(0)
        for mono, coeff in self.terms.items():
            val = coeff
            for j in mono.parts:
                val = val * power_sums[j]
            total = total + val
        return total

    def evaluate_pure(self) -> Fraction:
        """Value at a rank-one spectrum, where every p_j = 1."""
        return sum(self.terms.values(), Fraction(0))

    def evaluate_maximally_mixed(self) -> Fraction:
        """Value at the flat spectrum, where p_j = N^(1-j)."""
        N = self.context.n
        return self.evaluate({j: Fraction(1, N ** (j - 1)) for j in self._indices()})

    def _indices(self) -> set[int]:
        return {j for mono in self.terms for j in mono.parts}

    def __add__(self, other: "PowerSumPolynomial") -> "PowerSumPolynomial":
        self._check_context(other)
        merged = dict(self.terms)
        for mono, coeff in other.terms.items():
            merged[mono] = merged.get(mono, Fraction(0)) + coeff
        return PowerSumPolynomial(context=self.context, terms=merged)

    def __neg__(self) -> "PowerSumPolynomial":
        return PowerSumPolynomial(
            context=self.context, terms={m: -c for m, c in self.terms.items()}
        )

    def __sub__(self, other: "PowerSumPolynomial") -> "PowerSumPolynomial":
        return self + (-other)

    def _check_context(self, other: "PowerSumPolynomial") -> None:
        if self.context != other.context:
            raise ValueError(
                f"context mismatch: {self.context} vs {other.context}"
            )

    def is_zero(self) -> bool:
        return not self.terms

    def as_json_dict(self) -> dict:
        ordered = sorted(self.terms, key=lambda m: (m.weight, tuple(-p for p in m.parts)))
        return {
            "context": {"NA": self.context.n_a, "NB": self.context.n_b},
            "terms": [
                {
                    "monomial": list(m.parts),
                    "num": self.terms[m].numerator,
                    "den": self.terms[m].denominator,
                }
                for m in ordered
            ],
        }

    @classmethod
    def from_json_dict(cls, data: dict) -> "PowerSumPolynomial":
        ctx = BipartitionDims(data["context"]["NA"], data["context"]["NB"])
        terms = {
            Partition(tuple(t["monomial"])): Fraction(t["num"], t["den"])
            for t in data["terms"]
        }
        return cls(context=ctx, terms=terms)


def moment_polynomial(k: int, dims: BipartitionDims) -> PowerSumPolynomial:
    """Exact k-th moment of subsystem purity over Haar conjugations.

    Sum over pairs (tau, sigma) in S_2k x S_2k of
    Wg(sigma) * f_count(tau) * p_[cycle type of tau o sigma o s], with s the
    nearby-pair swap.  Weingarten coefficients are resolved once per conjugacy
    class; the pair loop itself is explicit, (2k)!^2 terms.
    """
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    deg = 2 * k
    table = weingarten_table(deg, dims.n)
    s = nearby_pair_swap(k)
    perms = list(all_permutations(deg))
    f_of = [f_count(tau, dims) for tau in perms]
    terms: dict[Partition, Fraction] = {}
    for sigma in perms:
        coeff = table.coeffs[cycle_type(sigma)]
        sigma_s = compose(sigma, s)
        for tau, f_tau in zip(perms, f_of):
            mono = _power_sum_monomial(cycle_type(compose(tau, sigma_s)))
            terms[mono] = terms.get(mono, Fraction(0)) + coeff * f_tau
    return PowerSumPolynomial(context=dims, terms=terms)


def _power_sum_monomial(ct: Partition) -> Partition:
    # drop fixed points: p_1 = Tr Lambda = 1
    return Partition(tuple(p for p in ct.parts if p >= 2))


def _check_purity_range(N: int, x: Fraction) -> None:
    if not Fraction(1, N) <= x <= 1:
        raise ValueError(f"global purity must lie in [1/{N}, 1], got {x}")


def closed_m1_polynomial(dims: BipartitionDims) -> PowerSumPolynomial:
    """First moment in closed form: [n_a (n_b^2 - 1) + n_b (n_a^2 - 1) p_2] / (N^2 - 1)."""
    na, nb = dims.n_a, dims.n_b
    den = dims.n**2 - 1
    if den == 0:
        raise PoleError("first moment is undefined for a 1 x 1 system")
    return PowerSumPolynomial(
        context=dims,
        terms={
            Partition(()): Fraction(na * (nb**2 - 1), den),
            Partition((2,)): Fraction(nb * (na**2 - 1), den),
        },
    )


def closed_m1(dims: BipartitionDims, x) -> Fraction:
    """Mean subsystem purity at fixed global purity x, exact."""
    x = Fraction(x)
    _check_purity_range(dims.n, x)
    return closed_m1_polynomial(dims).evaluate({2: x})


def closed_m2_polynomial(dims: BipartitionDims) -> PowerSumPolynomial:
    """Second moment in closed form, as a polynomial in p_2, p_3, p_4.

    The shared rational prefactor 1 / (N^2 (N^2 - 7)^2 - 36) has poles at
    N = 1, 2, 3, hence the N >= 4 restriction.
    """
    na, nb = dims.n_a, dims.n_b
    N = dims.n
    den = N**2 * (N**2 - 7) ** 2 - 36
    if den == 0:
        raise PoleError(f"second-moment closed form has a pole at N={N}")
    a2, b2 = na**2, nb**2
    c = Fraction(1, den)
    return PowerSumPolynomial(
        context=dims,
        terms={
            Partition(()): c * (b2 - 1) * (na**4 * b2 * (b2 - 1) - 2 * a2 * (6 * b2 - 7) + 22),
            Partition((2,)): c * 2 * na * nb * (a2 - 1) * (b2 - 1) * (a2 * b2 - 14),
            Partition((2, 2)): c * (a2 - 1) * (a2**2 * b2**2 + a2 * b2**2 - 14 * a2 * b2 + 6 * b2 + 30),
            Partition((3,)): c * 40 * (a2 - 1) * (b2 - 1),
            Partition((4,)): c * (-10) * na * nb * (a2 - 1) * (b2 - 1),
        },
    )


def closed_m2_spectrum(dims: BipartitionDims, p2, p3, p4) -> Fraction:
    """Second moment of subsystem purity for a fixed global spectrum.

    Takes the spectrum through its power sums p2, p3, p4.  Exact for exact
    inputs; raises PoleError for N <= 3.
    """
    p2, p3, p4 = Fraction(p2), Fraction(p3), Fraction(p4)
    _check_purity_range(dims.n, p2)
    return closed_m2_polynomial(dims).evaluate({2: p2, 3: p3, 4: p4})


def cumulant2(dims: BipartitionDims, x, avg_p3, avg_p4) -> Fraction:
    """Variance of subsystem purity at fixed global purity x (unweighted ensemble).

    avg_p3 and avg_p4 are ensemble averages of Tr Lambda^3 and Tr Lambda^4 at
    that x; they are the only fluctuating inputs once p_2 is pinned to x, so
    the variance is affine in them.
    """
    x, avg_p3, avg_p4 = Fraction(x), Fraction(avg_p3), Fraction(avg_p4)
    _check_purity_range(dims.n, x)
    na, nb = dims.n_a, dims.n_b
    N2 = (na * nb) ** 2
    d1 = (N2 - 1) ** 2 * (N2**2 - 13 * N2 + 36)
    d2 = N2 * (N2 - 7) ** 2 - 36
    if d1 == 0 or d2 == 0:
        raise PoleError(f"second cumulant has a pole at N={na * nb}")
    pref = 2 * (na**2 - 1) * (nb**2 - 1)
    out = Fraction(pref * (N2 + 11), d1)
    out += x * Fraction(pref * (-2 * na * nb) * (N2 + 11), d1)
    out += x**2 * Fraction(pref * (N2**2 - 4 * N2 + 15), d1)
    out += avg_p3 * Fraction(40 * (na**2 - 1) * (nb**2 - 1), d2)
    out += avg_p4 * Fraction(-10 * na * nb * (na**2 - 1) * (nb**2 - 1), d2)
    return out


def m1_high_temperature(dims: BipartitionDims, x, beta, avg_p3, avg_p4) -> Fraction:
    """First-order small-beta expansion of the mean subsystem purity.

    M1(x, beta) ~ M1(x, 0) - beta * K2(x, 0); trust it only for |beta| well
    below :func:`beta_convergence_radius`.
    """
    return closed_m1(dims, x) - Fraction(beta) * cumulant2(dims, x, avg_p3, avg_p4)


def beta_convergence_radius(dims: BipartitionDims, x) -> float:
    """Heuristic |beta| scale where the first-order expansion degrades.

    Scales as N^(3/2) (1 + x) / (2 x^2).  Purely a diagnostic: no convergence
    guarantee on either side of it.
    """
    x = float(x)
    if not 0 < x <= 1:
        raise ValueError(f"global purity must lie in (0, 1], got {x}")
    return dims.n ** 1.5 * (1 + x) / (2 * x * x)


def m1_balanced_asymptotic(N: int, x) -> Fraction:
    """Leading balanced-cut first moment sqrt(N) (1 + x) / (N + 1).

    N must be a perfect square (balanced bipartition of an N-dimensional
    system into sqrt(N) x sqrt(N)).
    """
    r = math.isqrt(N)
    if r * r != N:
        raise ValueError(f"N must be a perfect square, got {N}")
    return Fraction(r) * (1 + Fraction(x)) / (N + 1)
