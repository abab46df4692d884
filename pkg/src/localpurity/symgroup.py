"""Symmetric group combinatorics: permutations, partitions, characters.

Everything in this module is exact integer arithmetic.  Character values come
from the Murnaghan-Nakayama rule, dimensions from hook length products; both
feed the unitary Weingarten coefficients in :mod:`localpurity.weingarten`.
"""

from __future__ import annotations

import itertools
import json
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import cache
from typing import Iterator


@dataclass(frozen=True, order=True)
class Partition:
    """Integer partition stored as a non-increasing tuple of positive parts.

    The empty partition is allowed; it shows up as the constant monomial in
    power-sum polynomials and as the base case of character recursions.
    """

    parts: tuple[int, ...] = ()

    def __post_init__(self) -> None:
        object.__setattr__(self, "parts", tuple(self.parts))
        if any(p < 1 for p in self.parts):
            raise ValueError(f"parts must be positive: {self.parts}")
        if any(a < b for a, b in zip(self.parts, self.parts[1:])):
            raise ValueError(f"parts must be non-increasing: {self.parts}")

    @property
    def weight(self) -> int:
        return sum(self.parts)

    def __len__(self) -> int:
        return len(self.parts)

    def __iter__(self) -> Iterator[int]:
        return iter(self.parts)

    def __getitem__(self, i: int) -> int:
        return self.parts[i]

    def conjugate(self) -> "Partition":
        if not self.parts:
            return Partition(())
        return Partition(
            tuple(sum(1 for p in self.parts if p > j) for j in range(self.parts[0]))
        )

    def multiplicities(self) -> dict[int, int]:
        """Map part value -> how often it occurs."""
        out: dict[int, int] = {}
        for p in self.parts:
            out[p] = out.get(p, 0) + 1
        return out


@dataclass(frozen=True)
class Permutation:
    """Permutation of {1, ..., n} stored as its tuple of images, 1-indexed."""

    images: tuple[int, ...]

    def __post_init__(self) -> None:
        object.__setattr__(self, "images", tuple(self.images))
        if sorted(self.images) != list(range(1, len(self.images) + 1)):
            raise ValueError(f"not a permutation of 1..{len(self.images)}: {self.images}")

    @classmethod
    def identity(cls, n: int) -> "Permutation":
        return cls(tuple(range(1, n + 1)))

    @property
    def degree(self) -> int:
        return len(self.images)

    def __call__(self, i: int) -> int:
        return self.images[i - 1]

    def __mul__(self, other: "Permutation") -> "Permutation":
        return compose(self, other)

    def inverse(self) -> "Permutation":
        inv = [0] * len(self.images)
        for i, img in enumerate(self.images, start=1):
            inv[img - 1] = i
        return Permutation(tuple(inv))


def compose(p: Permutation, q: Permutation) -> Permutation:
    """Composition (p o q)(i) = p(q(i)).  Degrees must match."""
    if p.degree != q.degree:
        raise ValueError(f"degree mismatch: {p.degree} != {q.degree}")
    return Permutation(tuple(p.images[j - 1] for j in q.images))


def cycle_type(p: Permutation) -> Partition:
    """Cycle lengths of p, fixed points included, as a partition of the degree."""
    seen = [False] * p.degree
    lengths = []
    for start in range(1, p.degree + 1):
        if seen[start - 1]:
            continue
        length = 0
        i = start
        while not seen[i - 1]:
            seen[i - 1] = True
            i = p.images[i - 1]
            length += 1
        lengths.append(length)
    lengths.sort(reverse=True)
    return Partition(tuple(lengths))


def cycle_count(p: Permutation) -> int:
    return len(cycle_type(p))


def all_permutations(n: int) -> Iterator[Permutation]:
    """All of S_n, in itertools.permutations order."""
    for images in itertools.permutations(range(1, n + 1)):
        yield Permutation(images)


def all_partitions(n: int) -> tuple[Partition, ...]:
    """Partitions of n in reverse-lexicographic order: [n] first, [1^n] last.

    The order is fixed so that serialized character tables and Weingarten
    tables are reproducible run to run.
    """
    if n < 1:
        raise ValueError(f"n must be positive, got {n}")
    return tuple(Partition(p) for p in _partition_tuples(n, n))


@cache
def _partition_tuples(n: int, maxpart: int) -> tuple[tuple[int, ...], ...]:
    if n == 0:
        return ((),)
    out = []
    for first in range(min(n, maxpart), 0, -1):
        for rest in _partition_tuples(n - first, first):
            out.append((first,) + rest)
    return tuple(out)


def hook_lengths(lam: Partition) -> list[list[int]]:
    conj = lam.conjugate().parts
    return [
        [lam[i] - j + conj[j] - i - 1 for j in range(lam[i])]
        for i in range(len(lam))
    ]


def sn_dimension(lam: Partition) -> int:
    """Dimension of the S_n irrep of shape lam, by the hook length formula."""
    denom = math.prod(h for row in hook_lengths(lam) for h in row)
    dim, rem = divmod(math.factorial(lam.weight), denom)
    assert rem == 0, lam
    return dim


def schur_dimension(lam: Partition, N: int) -> int:
    """Dimension of the U(N) irrep with highest weight lam.

    Product over cells of (N + column - row) divided by the hook product.
    Returns 0 when lam has more than N rows (the representation is absent).
    """
    if N < 1:
        raise ValueError(f"N must be positive, got {N}")
    if len(lam) > N:
        return 0
    num = 1
    for i, row_len in enumerate(lam.parts):
        for j in range(row_len):
            num *= N + j - i
    denom = math.prod(h for row in hook_lengths(lam) for h in row)
    dim = Fraction(num, denom)
    assert dim.denominator == 1, lam
    return int(dim)


def character(lam: Partition, mu: Partition) -> int:
    """Irreducible S_n character chi_lam on the conjugacy class of cycle type mu."""
    if lam.weight != mu.weight:
        raise ValueError(f"weight mismatch: |{lam.parts}| != |{mu.parts}|")
    return _mn_character(lam.parts, mu.parts)


@cache
def _mn_character(lam: tuple[int, ...], mu: tuple[int, ...]) -> int:
    # Murnaghan-Nakayama recursion, peeling the largest part of mu each step.
    # Working with first-column hook lengths (beta numbers) turns rim hook
    # removal into a single subtraction: remove a hook of size t by replacing
    # some beta value b with b - t, provided b - t is fresh and non-negative.
    # The sign is (-1)^(number of beta values jumped over).
    if not lam:
        return 1
    t, rest = mu[0], mu[1:]
    k = len(lam)
    beta = [lam[i] + k - 1 - i for i in range(k)]
    present = set(beta)
    total = 0
    for b in beta:
        nb = b - t
        if nb < 0 or nb in present:
            continue
        height = sum(1 for c in beta if nb < c < b)
        nbeta = sorted((nb if c == b else c for c in beta), reverse=True)
        parts = [nbeta[i] - (k - 1 - i) for i in range(k)]
        while parts and parts[-1] == 0:
            parts.pop()
        total += (-1) ** height * _mn_character(tuple(parts), rest)
    return total


def class_size(mu: Partition) -> int:
    """Number of permutations in S_n with cycle type mu: n! / prod_j j^m_j m_j!."""
    z = 1
    for part, m in mu.multiplicities().items():
        z *= part**m * math.factorial(m)
    size, rem = divmod(math.factorial(mu.weight), z)
    assert rem == 0, mu
    return size


@dataclass(frozen=True)
class CharacterTable:
    """Character table of S_n.

    Rows are irreps, columns conjugacy classes, both indexed by partitions of
    n in the same reverse-lexicographic order as :func:`all_partitions`.
    """

    n: int
    irreps: tuple[Partition, ...]
    classes: tuple[Partition, ...]
    values: tuple[tuple[int, ...], ...]

    @classmethod
    def build(cls, n: int) -> "CharacterTable":
        parts = all_partitions(n)
        values = tuple(
            tuple(character(lam, mu) for mu in parts) for lam in parts
        )
        return cls(n=n, irreps=parts, classes=parts, values=values)

    def value(self, lam: Partition, mu: Partition) -> int:
        return self.values[self.irreps.index(lam)][self.classes.index(mu)]

    def class_size(self, mu: Partition) -> int:
        return class_size(mu)

    def as_dict(self) -> dict:
        return {
            "n": self.n,
            "irreps": [list(p.parts) for p in self.irreps],
            "classes": [list(p.parts) for p in self.classes],
            "values": [list(row) for row in self.values],
        }

    def to_json(self, **kwargs) -> str:
        return json.dumps(self.as_dict(), **kwargs)


def nearby_pair_swap(k: int) -> Permutation:
    """The involution (1 2)(3 4)...(2k-1 2k) on 2k letters."""
    if k < 1:
        raise ValueError(f"k must be positive, got {k}")
    images: list[int] = []
    for m in range(1, k + 1):
        images += [2 * m, 2 * m - 1]
    return Permutation(tuple(images))
