"""Weingarten coefficients and exact purity moments against independent oracles."""

import itertools
import json
from fractions import Fraction

import pytest

from localpurity.symgroup import (
    Partition,
    Permutation,
    all_partitions,
    all_permutations,
    compose,
    cycle_type,
    nearby_pair_swap,
)
from localpurity.weingarten import (
    BipartitionDims,
    DegenerateDimensionError,
    PoleError,
    PowerSumPolynomial,
    beta_convergence_radius,
    closed_m1,
    closed_m1_polynomial,
    closed_m2_polynomial,
    closed_m2_spectrum,
    cumulant2,
    f_count,
    m1_balanced_asymptotic,
    m1_high_temperature,
    moment_polynomial,
    weingarten_closed_form,
    weingarten_coefficient,
    weingarten_table,
)

ALL_DIMS = [
    BipartitionDims(na, nb) for na in range(2, 7) for nb in range(na, 7)
]


class TestBipartitionDims:
    def test_total_dimension(self):
        assert BipartitionDims(2, 3).n == 6

    def test_ordering_constraint(self):
        with pytest.raises(ValueError):
            BipartitionDims(3, 2)
        with pytest.raises(ValueError):
            BipartitionDims(0, 2)


class TestWeingartenCoefficients:
    def test_pair_values_literal(self):
        assert weingarten_coefficient(Partition((1, 1)), 4) == Fraction(1, 15)
        assert weingarten_coefficient(Partition((2,)), 4) == Fraction(-1, 60)

    @pytest.mark.parametrize("N", range(2, 13))
    def test_pair_closed_form(self, N):
        for mu in all_partitions(2):
            assert weingarten_coefficient(mu, N) == weingarten_closed_form(mu, N)

    @pytest.mark.parametrize("N", range(4, 13))
    def test_quad_closed_form(self, N):
        for mu in all_partitions(4):
            assert weingarten_coefficient(mu, N) == weingarten_closed_form(mu, N)

    def test_degenerate_dimension_raises(self):
        for N in (2, 3):
            with pytest.raises(DegenerateDimensionError):
                weingarten_coefficient(Partition((1, 1, 1, 1)), N)
        with pytest.raises(DegenerateDimensionError):
            weingarten_coefficient(Partition((2,)), 1)

    def test_closed_form_poles(self):
        with pytest.raises(PoleError):
            weingarten_closed_form(Partition((2,)), 1)
        with pytest.raises(PoleError):
            weingarten_closed_form(Partition((2, 2)), 3)

    def test_error_types_are_value_errors(self):
        assert issubclass(DegenerateDimensionError, ValueError)
        assert issubclass(PoleError, ValueError)

    def test_table_and_serialization(self):
        table = weingarten_table(2, 5)
        assert table.n == 2 and table.dim == 5
        assert table.coeffs[Partition((1, 1))] == Fraction(1, 24)
        blob = table.as_dict()
        assert blob["n"] == 2 and blob["dim"] == 5
        assert {"class": [1, 1], "num": 1, "den": 24} in blob["coeffs"]
        json.dumps(blob)  # must be serializable as-is

    @pytest.mark.parametrize("n,n_min", [(2, 2), (4, 4)])
    def test_inverse_of_gram_matrix(self, n, n_min):
        # the coefficients invert the cycle-count Gram matrix, so contracting
        # a full row against N^cycles must give exactly 1
        for N in range(n_min, n_min + 5):
            total = sum(
                weingarten_coefficient(cycle_type(p), N) * N ** len(cycle_type(p))
                for p in all_permutations(n)
            )
            assert total == 1


class TestFCount:
    @pytest.mark.parametrize("k", [1, 2])
    def test_matches_literal_delta_sum(self, k):
        # brute force: count index assignments constant on the cycles of tau
        # (row side) and of tau o s (column side)
        n = 2 * k
        s = nearby_pair_swap(k)
        for na, nb in itertools.product((1, 2, 3), repeat=2):
            if na > nb:
                continue
            dims = BipartitionDims(na, nb)
            for tau in all_permutations(n):
                rows = sum(
                    all(a[tau(t) - 1] == a[t - 1] for t in range(1, n + 1))
                    for a in itertools.product(range(na), repeat=n)
                )
                ts = compose(tau, s)
                cols = sum(
                    all(b[ts(t) - 1] == b[t - 1] for t in range(1, n + 1))
                    for b in itertools.product(range(nb), repeat=n)
                )
                assert f_count(tau, dims) == rows * cols

    def test_odd_degree_rejected(self):
        with pytest.raises(ValueError):
            f_count(Permutation((2, 3, 1)), BipartitionDims(2, 2))


class TestMomentEngine:
    @pytest.mark.parametrize("dims", ALL_DIMS, ids=str)
    def test_first_moment_matches_closed_form(self, dims):
        assert (moment_polynomial(1, dims) - closed_m1_polynomial(dims)).is_zero()

    @pytest.mark.parametrize("dims", ALL_DIMS, ids=str)
    def test_second_moment_matches_closed_form(self, dims):
        assert (moment_polynomial(2, dims) - closed_m2_polynomial(dims)).is_zero()

    def test_invalid_order(self):
        with pytest.raises(ValueError):
            moment_polynomial(0, BipartitionDims(2, 2))

    def test_engine_requires_nondegenerate_dimension(self):
        # k = 2 needs S_4 coefficients, degenerate for total dimension <= 3
        with pytest.raises(DegenerateDimensionError):
            moment_polynomial(2, BipartitionDims(1, 3))

    def test_pure_state_first_moment(self):
        for dims in ALL_DIMS:
            want = Fraction(dims.n_a + dims.n_b, dims.n + 1)
            assert moment_polynomial(1, dims).evaluate_pure() == want

    def test_maximally_mixed_moments(self):
        for dims in ALL_DIMS:
            for k in (1, 2):
                got = moment_polynomial(k, dims).evaluate_maximally_mixed()
                assert got == Fraction(1, dims.n_a**k)

    def test_engine_value_against_hand_formula(self):
        # [n_a (n_b^2 - 1) + n_b (n_a^2 - 1) x] / (N^2 - 1), written out by hand
        dims = BipartitionDims(2, 3)
        poly = moment_polynomial(1, dims)
        x = Fraction(1, 2)
        num = dims.n_a * (dims.n_b**2 - 1) + dims.n_b * (dims.n_a**2 - 1) * x
        assert poly.evaluate({2: x}) == num / (dims.n**2 - 1)


class TestClosedForms:
    def test_m1_spot_values(self):
        assert closed_m1(BipartitionDims(2, 2), 1) == Fraction(4, 5)
        assert closed_m1(BipartitionDims(2, 2), Fraction(3, 5)) == Fraction(16, 25)
        assert closed_m1(BipartitionDims(2, 3), Fraction(1, 6)) == Fraction(1, 2)

    def test_m1_range_validation(self):
        with pytest.raises(ValueError):
            closed_m1(BipartitionDims(2, 2), Fraction(1, 8))
        with pytest.raises(ValueError):
            closed_m1(BipartitionDims(2, 2), 2)

    def test_m2_spot_value(self):
        # diag(.4, .3, .2, .1): p2 = 3/10, p3 = 1/10, p4 = 177/5000
        dims = BipartitionDims(2, 2)
        m2 = closed_m2_spectrum(
            dims, Fraction(3, 10), Fraction(1, 10), Fraction(177, 5000)
        )
        assert m2 == Fraction(1353, 5000)
        assert closed_m1(dims, Fraction(3, 10)) == Fraction(13, 25)

    def test_m2_pole(self):
        with pytest.raises(PoleError):
            closed_m2_polynomial(BipartitionDims(1, 3))

    def test_cumulant_is_m2_minus_m1_squared(self):
        points = [
            (Fraction(1, 2), Fraction(1, 5), Fraction(1, 9)),
            (Fraction(2, 3), Fraction(1, 2), Fraction(2, 5)),
            (Fraction(9, 10), Fraction(4, 5), Fraction(7, 10)),
        ]
        for dims in ALL_DIMS:
            for x, p3, p4 in points:
                lhs = cumulant2(dims, x, p3, p4)
                rhs = closed_m2_spectrum(dims, x, p3, p4) - closed_m1(dims, x) ** 2
                assert lhs == rhs

    def test_cumulant_vanishes_at_maximally_mixed(self):
        for dims in ALL_DIMS:
            N = dims.n
            k2 = cumulant2(
                dims, Fraction(1, N), Fraction(1, N**2), Fraction(1, N**3)
            )
            assert k2 == 0

    def test_high_temperature_expansion(self):
        dims = BipartitionDims(2, 2)
        x, p3, p4 = Fraction(3, 5), Fraction(2, 5), Fraction(7, 25)
        beta = Fraction(1, 10)
        want = closed_m1(dims, x) - beta * cumulant2(dims, x, p3, p4)
        assert m1_high_temperature(dims, x, beta, p3, p4) == want

    def test_convergence_radius_value(self):
        # N^(3/2) (1 + x) / (2 x^2) at N = 4, x = 3/5
        got = beta_convergence_radius(BipartitionDims(2, 2), 0.6)
        assert got == pytest.approx(8 * 1.6 / 0.72)

    def test_balanced_asymptote(self):
        assert m1_balanced_asymptotic(4, 1) == Fraction(4, 5)
        assert m1_balanced_asymptotic(16, Fraction(1, 2)) == Fraction(4 * 3, 2 * 17)
        with pytest.raises(ValueError):
            m1_balanced_asymptotic(10, 1)

    def test_asymptote_agrees_with_closed_form_at_square_pure(self):
        # for pure states the asymptote is exact at every N
        for N in (4, 9, 16, 25):
            r = int(N**0.5)
            assert m1_balanced_asymptotic(N, 1) == closed_m1(BipartitionDims(r, r), 1)


class TestPowerSumPolynomial:
    def test_monomial_validation(self):
        with pytest.raises(ValueError):
            PowerSumPolynomial(
                context=BipartitionDims(2, 2),
                terms={Partition((2, 1)): Fraction(1)},
            )

    def test_zero_pruning_and_is_zero(self):
        poly = PowerSumPolynomial(
            context=BipartitionDims(2, 2), terms={Partition((2,)): Fraction(0)}
        )
        assert poly.is_zero()

    def test_arithmetic_and_context_guard(self):
        a = closed_m1_polynomial(BipartitionDims(2, 2))
        assert (a - a).is_zero()
        with pytest.raises(ValueError):
            a + closed_m1_polynomial(BipartitionDims(2, 3))

    def test_json_round_trip(self):
        for dims in (BipartitionDims(2, 2), BipartitionDims(3, 5)):
            for k in (1, 2):
                poly = moment_polynomial(k, dims)
                blob = json.loads(json.dumps(poly.as_json_dict()))
                back = PowerSumPolynomial.from_json_dict(blob)
                assert back.context == poly.context
                assert back.terms == poly.terms

    def test_json_term_order_is_stable(self):
        blob = moment_polynomial(2, BipartitionDims(2, 3)).as_json_dict()
        monos = [tuple(t["monomial"]) for t in blob["terms"]]
        assert monos == sorted(monos, key=lambda m: (sum(m), tuple(-p for p in m)))
