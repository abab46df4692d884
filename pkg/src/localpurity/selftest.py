"""Cross-engine consistency checks, runnable from the CLI.

The same physical quantity is computed along independent routes (character
sums vs tabulated closed forms, the S_{2k} pair-sum engine vs the closed
first and second moments, the twirl decomposition vs both) and compared as
exact rational identities, followed by a short seeded Monte Carlo smoke
test.  Deterministic; total runtime is seconds, well inside the five-minute
budget the CLI promises.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from . import ensembles, twirl, weingarten
from .symgroup import CharacterTable, Partition, all_partitions, class_size, sn_dimension
from .weingarten import BipartitionDims


@dataclass(frozen=True)
class CheckResult:
    name: str
    passed: bool
    detail: str = ""


def _check(name, fn) -> CheckResult:
    try:
        problem = fn()
    except Exception as exc:  # a crashed check is a failed check
        return CheckResult(name, False, f"{type(exc).__name__}: {exc}")
    if problem:
        return CheckResult(name, False, problem)
    return CheckResult(name, True)


def run_selftest(seed: int = 20260823) -> list[CheckResult]:
    """Run all consistency checks; returns one result per check."""
    return [
        _check("s2-closed-forms", _s2_closed_forms),
        _check("s4-closed-forms", _s4_closed_forms),
        _check("character-orthogonality", _character_orthogonality),
        _check("first-moment-engine", _first_moment_engine),
        _check("second-moment-engine", _second_moment_engine),
        _check("mixed-point-moments", _mixed_point_moments),
        _check("twirl-vs-closed-form", _twirl_vs_closed_form),
        _check("cumulant-identity", _cumulant_identity),
        _check("mc-fixed-spectrum-smoke", lambda: _mc_fixed_spectrum_smoke(seed)),
        _check("mc-canonical-mixed-point", _mc_canonical_mixed_point),
    ]


def _s2_closed_forms():
    for N in range(2, 13):
        for mu in all_partitions(2):
            got = weingarten.weingarten_coefficient(mu, N)
            want = weingarten.weingarten_closed_form(mu, N)
            if got != want:
                return f"S2 coefficient mismatch at N={N}, class={mu.parts}: {got} != {want}"
    return None


def _s4_closed_forms():
    for N in range(4, 13):
        for mu in all_partitions(4):
            got = weingarten.weingarten_coefficient(mu, N)
            want = weingarten.weingarten_closed_form(mu, N)
            if got != want:
                return f"S4 coefficient mismatch at N={N}, class={mu.parts}: {got} != {want}"
    return None


def _character_orthogonality():
    import math

    for n in (4, 5):
        table = CharacterTable.build(n)
        sizes = [class_size(mu) for mu in table.classes]
        fact = math.factorial(n)
        for i, lam in enumerate(table.irreps):
            if table.values[i][table.classes.index(Partition((1,) * n))] != sn_dimension(lam):
                return f"identity-column value is not the dimension for {lam.parts}"
            for j in range(i, len(table.irreps)):
                dot = sum(
                    s * a * b for s, a, b in zip(sizes, table.values[i], table.values[j])
                )
                want = fact if i == j else 0
                if dot != want:
                    return f"row orthogonality fails for S_{n} rows {i},{j}"
    return None


def _dims_grid():
    return [
        BipartitionDims(na, nb) for na in range(2, 6) for nb in range(na, 6)
    ]


def _first_moment_engine():
    for dims in _dims_grid():
        diff = weingarten.moment_polynomial(1, dims) - weingarten.closed_m1_polynomial(dims)
        if not diff.is_zero():
            return f"first-moment polynomial mismatch at {dims}"
        na, nb = dims.n_a, dims.n_b
        if weingarten.closed_m1(dims, 1) != Fraction(na + nb, dims.n + 1):
            return f"pure-state first moment mismatch at {dims}"
    return None


def _second_moment_engine():
    for dims in _dims_grid():
        diff = weingarten.moment_polynomial(2, dims) - weingarten.closed_m2_polynomial(dims)
        if not diff.is_zero():
            return f"second-moment polynomial mismatch at {dims}"
    return None


def _mixed_point_moments():
    for dims in _dims_grid():
        for k in (1, 2):
            got = weingarten.moment_polynomial(k, dims).evaluate_maximally_mixed()
            if got != Fraction(1, dims.n_a**k):
                return f"flat-spectrum moment k={k} at {dims}: {got}"
    return None


def _twirl_vs_closed_form():
    for dims in _dims_grid():
        if twirl.m1_pure_via_twirl(dims) != weingarten.closed_m1(dims, 1):
            return f"twirl pure-state route mismatch at {dims}"
        for p2 in (Fraction(1, dims.n), Fraction(1, 2), Fraction(1)):
            if twirl.m1_mixed_via_twirl(dims, p2) != weingarten.closed_m1(dims, p2):
                return f"twirl mixed-state route mismatch at {dims}, p2={p2}"
    return None


def _cumulant_identity():
    for dims in _dims_grid():
        x = Fraction(1, 2)
        for p3 in (Fraction(1, 7), Fraction(2, 5)):
            for p4 in (Fraction(1, 11), Fraction(3, 8)):
                lhs = weingarten.cumulant2(dims, x, p3, p4)
                rhs = weingarten.closed_m2_spectrum(dims, x, p3, p4) - weingarten.closed_m1(dims, x) ** 2
                if lhs != rhs:
                    return f"cumulant identity fails at {dims}"
    return None


def _mc_fixed_spectrum_smoke(seed: int):
    dims = BipartitionDims(2, 2)
    spec = ensembles.Spectrum(np.array([0.4, 0.3, 0.2, 0.1]))
    est = ensembles.mc_moment_fixed_spectrum(
        spec, dims, 1, ensembles.McConfig(n_samples=20000), np.random.default_rng(seed)
    )
    exact = float(weingarten.closed_m1(dims, Fraction(3, 10)))
    if abs(est.mean - exact) > 4 * est.stderr:
        return f"fixed-spectrum mean {est.mean:.5f} vs exact {exact:.5f} beyond 4 stderr"
    return None


def _mc_canonical_mixed_point():
    dims = BipartitionDims(2, 3)
    cfg = ensembles.EnsembleConfig(dims=dims, x=1.0 / 6.0, beta=2.5, seed=7)
    est = ensembles.mc_moment_canonical(cfg, k=1)
    if est.mean != 0.5 or est.stderr != 0.0:
        return f"flat-spectrum canonical estimate should be exact, got {est}"
    return None
