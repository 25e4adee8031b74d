"""
Unit tests for rational.py
Run with: pytest test_rational.py -v
"""

import numpy as np
import pytest

import rational
from errors import DecompositionError, EmptyProjectionError, MultiplicityError, PolynomialError
from rational import (
    Polynomial,
    RationalSymbol,
    partial_fractions,
    poly_roots,
    project_negative,
    series_coefficients,
)


def term_at(terms, pole, tol=1e-10):
    matches = [term for term in terms if abs(term.pole - pole) < tol]
    assert len(matches) == 1, f"no unique term at {pole}: {terms}"
    return matches[0]


def random_symbol(rng, degree: int) -> RationalSymbol:
    """Strictly proper real symbol with poles of modulus <= 0.9"""
    poles = []
    while len(poles) < degree:
        radius = rng.uniform(0.05, 0.9)
        if degree - len(poles) >= 2 and rng.random() < 0.5:
            angle = rng.uniform(0.2, np.pi - 0.2)
            pole = radius * np.exp(1j * angle)
            poles += [pole, pole.conjugate()]
        else:
            poles.append(radius * rng.choice([-1.0, 1.0]))
    q = Polynomial.from_roots(poles)
    p = Polynomial(rng.normal(size=degree))
    return RationalSymbol(p, q)


class TestPolynomial:
    """Test polynomial arithmetic"""

    def test_strip(self):
        """Negligible trailing coefficients are dropped"""
        assert Polynomial([1.0, 2.0, 1e-20]).degree == 1
        assert Polynomial([0.0, 0.0]).is_zero
        assert Polynomial.zero().degree == -1

    def test_evaluate(self):
        """Ascending coefficients"""
        assert Polynomial([1.0, 2.0, 3.0])(2.0) == 17.0

    def test_arithmetic(self):
        """add, sub, mul, divmod"""
        a = Polynomial([1.0, 1.0])
        b = Polynomial([-1.0, 1.0])
        assert (a * b).to_list() == [-1.0, 0.0, 1.0]
        assert (a + b).to_list() == [0.0, 2.0]
        assert (a - b).to_list() == [2.0]
        quotient, remainder = divmod(Polynomial([0.0, 0.0, 1.0]), Polynomial([-2.0, 1.0]))
        np.testing.assert_allclose(quotient.coeffs, [2.0, 1.0])
        np.testing.assert_allclose(remainder.coeffs, [4.0])

    def test_monic(self):
        """Leading coefficient normalised to one"""
        assert Polynomial([1.0, 4.0]).monic().to_list() == [0.25, 1.0]
        with pytest.raises(PolynomialError):
            Polynomial.zero().monic()

    def test_non_finite(self):
        """Coefficients must be finite"""
        with pytest.raises(PolynomialError):
            Polynomial([1.0, np.inf])


class TestPolyRoots:
    """Test root finding"""

    def test_two_real_roots(self):
        """z^2 - 1/9 has roots +-1/3"""
        roots = poly_roots(Polynomial([-1.0 / 9.0, 0.0, 1.0]))
        values = sorted(r.value.real for r in roots)
        np.testing.assert_allclose(values, [-1.0 / 3.0, 1.0 / 3.0], atol=1e-14)
        assert all(r.multiplicity == 1 and r.value.imag == 0.0 for r in roots)

    def test_monomial(self):
        """z has the single root 0"""
        roots = poly_roots(Polynomial([0.0, 1.0]))
        assert len(roots) == 1
        assert roots[0].value == 0 and roots[0].multiplicity == 1

    def test_double_root(self):
        """(z - 0.5)^2 gives 0.5 with multiplicity 2"""
        roots = poly_roots(Polynomial([0.25, -1.0, 1.0]))
        assert len(roots) == 1
        assert roots[0].multiplicity == 2
        assert abs(roots[0].value - 0.5) < 1e-7

    def test_conjugate_pairs(self):
        """Complex roots come in exact conjugate pairs"""
        roots = poly_roots(Polynomial([0.5, -0.3, 0.8, 1.0]))
        complex_roots = [r.value for r in roots if r.value.imag != 0]
        assert len(complex_roots) == 2
        assert complex_roots[0] == complex_roots[1].conjugate()

    def test_multiplicities_sum_to_degree(self):
        """All roots are returned"""
        rng = np.random.default_rng(4)
        q = Polynomial(rng.normal(size=9))
        assert sum(r.multiplicity for r in poly_roots(q)) == q.degree

    def test_residuals(self):
        """Roots satisfy |q(root)| small relative to the coefficients"""
        q = Polynomial([0.3, -1.1, 0.2, 1.0])
        for root in poly_roots(q):
            assert abs(q(root.value)) <= 1e-8 * q.norm

    def test_zero_polynomial(self):
        """Zero polynomial has no finite root set"""
        with pytest.raises(PolynomialError):
            poly_roots(Polynomial.zero())


class TestPartialFractions:
    """Test partial fraction decomposition"""

    def test_two_simple_poles(self):
        """z / ((z - 1/3)(z - 3)) = (-1/8)/(z - 1/3) + (9/8)/(z - 3)"""
        b = Polynomial.from_roots([1.0 / 3.0, 3.0])
        polynomial_part, terms = partial_fractions(Polynomial([0.0, 1.0]), b)
        assert polynomial_part.is_zero
        assert term_at(terms, 1.0 / 3.0).residues[0] == pytest.approx(-1.0 / 8.0, abs=1e-12)
        assert term_at(terms, 3.0).residues[0] == pytest.approx(9.0 / 8.0, abs=1e-12)

    def test_single_term(self):
        """1 / z is already a partial fraction"""
        polynomial_part, terms = partial_fractions(Polynomial([1.0]), Polynomial([0.0, 1.0]))
        assert polynomial_part.is_zero
        assert len(terms) == 1
        assert terms[0].pole == 0
        assert terms[0].residues[0] == pytest.approx(1.0)

    def test_polynomial_part(self):
        """z^2 / (z - 2) = z + 2 + 4/(z - 2)"""
        polynomial_part, terms = partial_fractions(Polynomial([0.0, 0.0, 1.0]), Polynomial([-2.0, 1.0]))
        np.testing.assert_allclose(polynomial_part.coeffs, [2.0, 1.0], atol=1e-14)
        assert term_at(terms, 2.0).residues[0] == pytest.approx(4.0, abs=1e-12)

    def test_double_pole(self):
        """1 / (z - 0.5)^2 has only the second-order coefficient"""
        _, terms = partial_fractions(Polynomial([1.0]), Polynomial([0.25, -1.0, 1.0]))
        assert len(terms) == 1
        assert terms[0].multiplicity == 2
        assert abs(terms[0].residues[0]) < 1e-6
        assert terms[0].residues[1] == pytest.approx(1.0, abs=1e-6)

    def test_common_roots_cancel(self):
        """Shared roots of numerator and denominator are removed first"""
        a = Polynomial.from_roots([0.2, 0.7])
        b = Polynomial.from_roots([0.2, 0.5, 3.0])
        _, terms = partial_fractions(a, b)
        assert len(terms) == 2
        assert term_at(terms, 0.5, tol=1e-8).residues[0] == pytest.approx(0.08, abs=1e-9)

    def test_many_common_roots(self):
        """24 shared roots on |z| = 0.9 leave the residues of the reduced fraction"""
        ring = Polynomial([-0.9 ** 24] + [0.0] * 23 + [1.0])
        a_reduced = Polynomial.from_roots([2.0, -0.1])
        b_reduced = Polynomial.from_roots([0.5, -0.3, 0.2 + 0.4j, 0.2 - 0.4j])
        _, terms = partial_fractions(ring * a_reduced, ring * b_reduced)
        assert len(terms) == 4
        derivative = Polynomial(np.polynomial.polynomial.polyder(b_reduced.coeffs))
        for pole in (0.5, -0.3, 0.2 + 0.4j):
            expected = a_reduced(pole) / derivative(pole)
            assert abs(term_at(terms, pole, tol=1e-8).residues[0] - expected) < 1e-9

    def test_wrong_residues_detected(self, monkeypatch):
        """Terms that do not recombine to a / b are an error"""
        laurent = rational._laurent
        monkeypatch.setattr(rational, '_laurent',
                            lambda a, b, root: tuple(2.0 * c for c in laurent(a, b, root)))
        with pytest.raises(DecompositionError):
            partial_fractions(Polynomial([0.0, 1.0]), Polynomial.from_roots([1.0 / 3.0, 3.0]))

    def test_conjugate_residues(self):
        """Conjugate poles carry conjugate residues"""
        _, terms = partial_fractions(Polynomial([1.0, 2.0]), Polynomial([0.25, 0.0, 1.0]))
        assert len(terms) == 2
        first, second = terms
        assert first.pole == second.pole.conjugate()
        assert first.residues[0] == second.residues[0].conjugate()

    def test_random_recombination(self):
        """Decomposition of random fractions recombines (checked internally)"""
        rng = np.random.default_rng(8)
        for _ in range(20):
            a = Polynomial(rng.normal(size=5))
            b = Polynomial(rng.normal(size=4))
            polynomial_part, terms = partial_fractions(a, b)
            z = 2.0 * np.exp(1j * np.linspace(0.1, 6.0, 16))
            value = polynomial_part(z) + sum(term(z) for term in terms)
            reference = a(z) / b(z)
            assert np.max(np.abs(value - reference)) <= 1e-9 * np.max(np.abs(reference))

    def test_zero_numerator(self):
        """0 / b has no terms"""
        polynomial_part, terms = partial_fractions(Polynomial.zero(), Polynomial([1.0, 1.0]))
        assert polynomial_part.is_zero and terms == []

    def test_zero_denominator(self):
        """Division by zero is rejected"""
        with pytest.raises(PolynomialError):
            partial_fractions(Polynomial([1.0]), Polynomial.zero())

    def test_multiplicity_limit(self):
        """Poles of multiplicity above four are rejected"""
        with pytest.raises(MultiplicityError):
            partial_fractions(Polynomial([1.0]), Polynomial([0.0] * 5 + [1.0]))


class TestProjectNegative:
    """Test the projection onto poles inside the unit disc"""

    def test_keeps_inside_pole(self):
        """Only the pole at 1/3 survives"""
        symbol = project_negative(Polynomial([0.0, 1.0]), Polynomial.from_roots([1.0 / 3.0, 3.0]))
        np.testing.assert_allclose(symbol.q.coeffs, [-1.0 / 3.0, 1.0], atol=1e-12)
        np.testing.assert_allclose(symbol.p.coeffs, [-1.0 / 8.0], atol=1e-12)
        assert symbol.discarded_moduli == pytest.approx((3.0,))

    def test_outside_only(self):
        """No pole inside the disc"""
        with pytest.raises(EmptyProjectionError):
            project_negative(Polynomial([1.0]), Polynomial([-2.0, 1.0]))

    def test_both_poles_kept(self):
        """(8/9) z / (z^2 - 1/9) is its own projection"""
        symbol = project_negative(Polynomial([0.0, 8.0 / 9.0]), Polynomial([-1.0 / 9.0, 0.0, 1.0]))
        np.testing.assert_allclose(symbol.p.coeffs, [0.0, 8.0 / 9.0], atol=1e-12)
        np.testing.assert_allclose(symbol.q.coeffs, [-1.0 / 9.0, 0.0, 1.0], atol=1e-12)
        assert symbol.degree == 2

    def test_scaled_fraction(self):
        """8z / (9z^2 - 1) gives the same monic symbol"""
        symbol = project_negative(Polynomial([0.0, 8.0]), Polynomial([-1.0, 0.0, 9.0]))
        np.testing.assert_allclose(symbol.p.coeffs, [0.0, 8.0 / 9.0], atol=1e-12)
        np.testing.assert_allclose(symbol.q.coeffs, [-1.0 / 9.0, 0.0, 1.0], atol=1e-12)

    def test_complex_poles_real_result(self):
        """Conjugate inside poles recombine to real coefficients"""
        b = Polynomial([0.25, 0.0, 1.0]) * Polynomial([-4.0, 1.0])
        symbol = project_negative(Polynomial([1.0, 1.0]), b)
        assert symbol.degree == 2
        assert symbol.p.coeffs.dtype == float
        z = 2.0 + 0.5j
        _, terms = partial_fractions(Polynomial([1.0, 1.0]), b)
        inside = sum(term(z) for term in terms if abs(term.pole) < 1)
        assert abs(symbol.evaluate(z) - inside) < 1e-12

    def test_zero_numerator(self):
        """A zero numerator projects to nothing"""
        with pytest.raises(EmptyProjectionError):
            project_negative(Polynomial.zero(), Polynomial([0.5, 1.0]))

    def test_common_roots_match_reduced(self):
        """Shared roots inside the disc do not change the projection"""
        ring = Polynomial([-0.9 ** 24] + [0.0] * 23 + [1.0])
        a_reduced = Polynomial.from_roots([2.0, -0.1])
        b_reduced = Polynomial.from_roots([0.5, -0.3, 0.2 + 0.4j, 0.2 - 0.4j])
        symbol = project_negative(ring * a_reduced, ring * b_reduced)
        reference = project_negative(a_reduced, b_reduced)
        assert symbol.degree == 4
        np.testing.assert_allclose(symbol.q.coeffs, reference.q.coeffs, atol=1e-9)
        np.testing.assert_allclose(symbol.p.coeffs, reference.p.coeffs, atol=1e-9)

    def test_shared_root_at_zero(self):
        """z (z - 2) / (z (z - 0.5)) keeps 0.5 with residue -1.5"""
        symbol = project_negative(Polynomial.from_roots([0.0, 2.0]), Polynomial.from_roots([0.0, 0.5]))
        np.testing.assert_allclose(symbol.q.coeffs, [-0.5, 1.0], atol=1e-12)
        np.testing.assert_allclose(symbol.p.coeffs, [-1.5], atol=1e-12)

    def test_wrong_residues_detected(self, monkeypatch):
        """Kept terms are only returned when the full decomposition matches a / b"""
        laurent = rational._laurent
        monkeypatch.setattr(rational, '_laurent',
                            lambda a, b, root: tuple(2.0 * c for c in laurent(a, b, root)))
        with pytest.raises(DecompositionError):
            project_negative(Polynomial([0.0, 1.0]), Polynomial.from_roots([1.0 / 3.0, 3.0]))


class TestSeriesCoefficients:
    """Test Laurent coefficients of symbols"""

    def test_geometric(self):
        """1 / (z - 1/2) = sum 2^-n z^(-n-1)"""
        symbol = RationalSymbol(Polynomial([1.0]), Polynomial([-0.5, 1.0]))
        np.testing.assert_array_equal(series_coefficients(symbol, 4), [1.0, 0.5, 0.25, 0.125])

    def test_even_geometric(self):
        """Coefficients of (8/9) z / (z^2 - 1/9)"""
        symbol = RationalSymbol(Polynomial([0.0, 8.0 / 9.0]), Polynomial([-1.0 / 9.0, 0.0, 1.0]))
        np.testing.assert_allclose(series_coefficients(symbol, 5),
                                   [8 / 9, 0.0, 8 / 81, 0.0, 8 / 729], atol=1e-15)

    def test_zero_numerator(self):
        """p = 0 gives zeros"""
        symbol = RationalSymbol(Polynomial.zero(), Polynomial([-0.5, 1.0]))
        np.testing.assert_array_equal(series_coefficients(symbol, 3), np.zeros(3))

    def test_non_monic_rejected(self):
        """Symbols need a monic denominator"""
        with pytest.raises(PolynomialError):
            RationalSymbol(Polynomial([1.0]), Polynomial([1.0, 2.0]))

    def test_not_strictly_proper(self):
        """deg p < deg q is required"""
        with pytest.raises(PolynomialError):
            RationalSymbol(Polynomial([1.0, 1.0]), Polynomial([-0.5, 1.0]))

    def test_recurrence(self):
        """Coefficients past deg q follow the recurrence of q"""
        symbol = random_symbol(np.random.default_rng(1), 4)
        g = series_coefficients(symbol, 20)
        q = symbol.q.coeffs
        for m in range(4, 20):
            assert abs(np.dot(q, g[m - 4:m + 1])) < 1e-12 * max(1.0, np.max(np.abs(g)))

    def test_contour_integration(self):
        """Agreement with trapezoid-rule Laurent coefficients on |z| = 1"""
        rng = np.random.default_rng(2024)
        z = np.exp(2j * np.pi * np.arange(4096) / 4096)
        for _ in range(40):
            symbol = random_symbol(rng, int(rng.integers(1, 6)))
            values = symbol.evaluate(z)
            g = series_coefficients(symbol, 12)
            for n in range(12):
                reference = np.mean(values * z ** (n + 1)).real
                assert abs(g[n] - reference) <= 1e-8 * max(1.0, np.max(np.abs(g)))

    def test_evaluate_matches_series(self):
        """Partial sums of the series converge to r(z) at |z| = 2"""
        symbol = random_symbol(np.random.default_rng(3), 3)
        g = series_coefficients(symbol, 80)
        z = 2.0 * np.exp(0.7j)
        partial = np.sum(g * z ** -(np.arange(80) + 1.0))
        assert abs(partial - symbol.evaluate(z)) < 1e-12 * max(1.0, abs(symbol.evaluate(z)))


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
