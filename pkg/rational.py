"""
Rational functions for the approximation pipeline
Real polynomials, root finding with multiplicities, partial fractions,
projection onto the poles inside the unit disc and Laurent coefficients
"""

import logging
from dataclasses import dataclass, field
from typing import List, Optional, Sequence, Tuple

import numpy as np
from numpy.polynomial import polynomial as P
from scipy import linalg, signal, special

from errors import (
    DecompositionError,
    EmptyProjectionError,
    MultiplicityError,
    PolynomialError,
)
from tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

# Decomposition checks: sample points on a circle between the poles
CHECK_POINTS = 32
RECOMBINATION_TOL = 1e-9
PROJECTION_TOL = 1e-6
MAX_CHECK_RADIUS = 2.0

# Allowed deviation of a monic leading coefficient from 1
MONIC_TOL = 1e-12


def _strip(coeffs, tol: float) -> np.ndarray:
    coeffs = np.atleast_1d(np.array(coeffs, dtype=float))
    if coeffs.size == 0:
        return coeffs
    if not np.all(np.isfinite(coeffs)):
        raise PolynomialError("polynomial coefficients must be finite")
    scale = np.max(np.abs(coeffs))
    if scale == 0.0:
        return np.zeros(0)
    keep = np.nonzero(np.abs(coeffs) > tol * scale)[0]
    return coeffs[:keep[-1] + 1].copy()


@dataclass(frozen=True, eq=False)
class Polynomial:
    """
    Real polynomial, coefficients in ascending powers

    Trailing coefficients below strip_tol times the largest one are dropped;
    the zero polynomial has no coefficients and degree -1.
    """
    coeffs: np.ndarray
    strip_tol: float = DEFAULT_TOLERANCES.strip_tol

    def __post_init__(self):
        coeffs = _strip(self.coeffs, self.strip_tol)
        coeffs.setflags(write=False)
        object.__setattr__(self, 'coeffs', coeffs)

    @classmethod
    def zero(cls) -> 'Polynomial':
        return cls(np.zeros(0))

    @classmethod
    def from_roots(cls, roots: Sequence[complex], lead: float = 1.0) -> 'Polynomial':
        """
        Polynomial lead * prod (z - root)

        Args:
            roots: Roots, complex ones in conjugate pairs
            lead: Leading coefficient

        Returns:
            Real polynomial (imaginary rounding dropped)
        """
        if len(roots) == 0:
            return cls([lead])
        return cls(lead * np.real(P.polyfromroots(roots)))

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1

    @property
    def is_zero(self) -> bool:
        return len(self.coeffs) == 0

    @property
    def lead(self) -> float:
        return float(self.coeffs[-1]) if len(self.coeffs) else 0.0

    @property
    def norm(self) -> float:
        """Euclidean norm of the coefficient vector"""
        return float(np.linalg.norm(self.coeffs))

    def __call__(self, z):
        if self.is_zero:
            return np.zeros_like(np.asarray(z, dtype=complex)) if np.ndim(z) else 0.0
        return P.polyval(z, self.coeffs)

    def __add__(self, other: 'Polynomial') -> 'Polynomial':
        return Polynomial(P.polyadd(self._raw(), other._raw()))

    def __sub__(self, other: 'Polynomial') -> 'Polynomial':
        return Polynomial(P.polysub(self._raw(), other._raw()))

    def __mul__(self, other: 'Polynomial') -> 'Polynomial':
        if self.is_zero or other.is_zero:
            return Polynomial.zero()
        return Polynomial(P.polymul(self.coeffs, other.coeffs))

    def __divmod__(self, other: 'Polynomial') -> Tuple['Polynomial', 'Polynomial']:
        if other.is_zero:
            raise PolynomialError("division by the zero polynomial")
        if self.is_zero:
            return Polynomial.zero(), Polynomial.zero()
        if self.degree < other.degree:
            return Polynomial.zero(), self
        quotient, remainder = P.polydiv(self.coeffs, other.coeffs)
        return Polynomial(quotient), Polynomial(remainder)

    def monic(self) -> 'Polynomial':
        if self.is_zero:
            raise PolynomialError("the zero polynomial has no monic form")
        return Polynomial(self.coeffs / self.coeffs[-1])

    def _raw(self) -> np.ndarray:
        return self.coeffs if len(self.coeffs) else np.zeros(1)

    def to_list(self) -> List[float]:
        return self.coeffs.tolist()

    def __repr__(self):
        return f"Polynomial({self.to_list()})"


@dataclass(frozen=True)
class Root:
    """Root of a polynomial with its multiplicity"""
    value: complex
    multiplicity: int = 1

    @property
    def modulus(self) -> float:
        return abs(self.value)


@dataclass(frozen=True)
class PartialFractionTerm:
    """
    sum_{r=1}^{multiplicity} residues[r-1] / (z - pole)^r

    Attributes:
        pole: Pole location
        multiplicity: Order of the pole
        residues: One coefficient per power, residues[0] belongs to 1/(z - pole)
    """
    pole: complex
    multiplicity: int
    residues: Tuple[complex, ...]

    def __post_init__(self):
        if self.multiplicity < 1 or len(self.residues) != self.multiplicity:
            raise ValueError(f"term at {self.pole} needs {self.multiplicity} residues, "
                             f"got {len(self.residues)}")

    def __call__(self, z):
        z = np.asarray(z, dtype=complex)
        return sum(c / (z - self.pole) ** (r + 1) for r, c in enumerate(self.residues))

    @property
    def magnitude(self) -> float:
        return max(abs(c) for c in self.residues)


@dataclass(frozen=True, eq=False)
class RationalSymbol:
    """
    Strictly proper real rational function p(z) / q(z) with q monic

    Attributes:
        p: Numerator, degree below that of q
        q: Monic denominator
        poles: Roots of q
        discarded_moduli: Moduli of the poles a projection dropped
    """
    p: Polynomial
    q: Polynomial
    poles: Tuple[Root, ...] = ()
    discarded_moduli: Tuple[float, ...] = field(default=())

    def __post_init__(self):
        if self.q.is_zero:
            raise PolynomialError("denominator must be nonzero")
        if abs(self.q.lead - 1.0) > MONIC_TOL:
            raise PolynomialError(f"denominator must be monic (leading coefficient {self.q.lead!r})")
        if self.p.degree >= self.q.degree:
            raise PolynomialError(
                f"symbol must be strictly proper (deg p = {self.p.degree}, deg q = {self.q.degree})")

    @classmethod
    def from_fraction(cls, p: Polynomial, q: Polynomial,
                      tolerances: Tolerances = DEFAULT_TOLERANCES) -> 'RationalSymbol':
        """
        Normalise p / q to a monic denominator and compute its poles

        Args:
            p: Numerator
            q: Denominator (any leading coefficient)
            tolerances: Root finding settings

        Returns:
            RationalSymbol
        """
        if q.is_zero:
            raise PolynomialError("denominator must be nonzero")
        lead = q.lead
        p = Polynomial(p.coeffs / lead) if not p.is_zero else p
        q = q.monic()
        poles = tuple(poly_roots(q, tolerances)) if q.degree >= 1 else ()
        outside = [root.value for root in poles if root.modulus >= 1.0 - tolerances.pole_tol]
        if outside:
            raise ValueError(f"symbol poles must lie inside the unit disc, got {outside}")
        return cls(p, q, poles)

    @property
    def degree(self) -> int:
        """Degree of the denominator, the rank of the Hankel operator"""
        return self.q.degree

    def evaluate(self, z):
        return self.p(z) / self.q(z)

    def filter_taps(self) -> Tuple[np.ndarray, np.ndarray]:
        """
        Numerator and denominator in powers of 1/z for scipy.signal.lfilter

        The impulse response of the filter is g_0, g_1, ... with
        r(z) = sum g_n z^(-n-1).

        Returns:
            Tuple of (b, a), a[0] = 1
        """
        k = self.q.degree
        b = np.zeros(k)
        b[:len(self.p.coeffs)] = self.p.coeffs
        return b[::-1].copy(), self.q.coeffs[::-1].copy()

    def to_dict(self) -> dict:
        return {'p': self.p.to_list(), 'q': self.q.to_list()}

    def __repr__(self):
        return f"RationalSymbol(p={self.p.to_list()}, q={self.q.to_list()})"


def _is_real(value: complex, tol: float) -> bool:
    return abs(value.imag) <= tol * max(1.0, abs(value))


def _cluster(values: np.ndarray, tol: float) -> List[Root]:
    clusters: List[List[complex]] = []
    for value in sorted(values, key=lambda v: (v.real, v.imag)):
        for members in clusters:
            if abs(value - members[0]) <= tol * max(1.0, abs(members[0])):
                members.append(value)
                break
        else:
            clusters.append([value])
    return [Root(complex(np.mean(members)), len(members)) for members in clusters]


def poly_roots(q: Polynomial, tolerances: Tolerances = DEFAULT_TOLERANCES) -> List[Root]:
    """
    All roots of q with multiplicities

    Eigenvalues of the balanced companion matrix; roots closer than
    cluster_tol merge into one multiple root, near-real roots are snapped to
    the real axis and complex roots are returned in exact conjugate pairs.

    Args:
        q: Polynomial of degree >= 1
        tolerances: Clustering and residual settings

    Returns:
        Roots sorted by decreasing modulus, multiplicities summing to deg q
    """
    if q.is_zero:
        raise PolynomialError("the zero polynomial has no finite root set")
    if q.degree < 1:
        return []

    # Exact zero roots first, the companion matrix of the deflated polynomial is better balanced
    low = int(np.argmax(q.coeffs != 0.0))
    raw = np.zeros(low, dtype=complex)
    if q.degree > low:
        companion = P.polycompanion(q.coeffs[low:])
        raw = np.concatenate([raw, linalg.eigvals(companion)])

    roots = _cluster(raw, tolerances.cluster_tol)
    real = [Root(complex(r.value.real, 0.0), r.multiplicity)
            for r in roots if _is_real(r.value, tolerances.cluster_tol)]
    upper = [r for r in roots
             if not _is_real(r.value, tolerances.cluster_tol) and r.value.imag > 0]
    lower = [r for r in roots
             if not _is_real(r.value, tolerances.cluster_tol) and r.value.imag < 0]
    if sum(r.multiplicity for r in upper) != sum(r.multiplicity for r in lower):
        logger.warning(f"Unpaired complex roots of a degree-{q.degree} polynomial")
    paired = real + upper + [Root(r.value.conjugate(), r.multiplicity) for r in upper]

    scale = q.norm
    for root in paired:
        residual = abs(q(root.value))
        if residual > tolerances.root_residual_tol * scale * max(1.0, root.modulus) ** q.degree:
            logger.warning(f"Root {root.value:.6g} has residual {residual:.3g} "
                           f"above tolerance (|q| = {scale:.3g})")

    paired.sort(key=lambda r: (-r.modulus, r.value.real, r.value.imag))
    return paired


def _pole_orders(
    numerator_roots: List[Root],
    denominator_roots: List[Root],
    tol: float
) -> List[int]:
    """Order of each denominator root as a pole of the fraction once shared roots cancel"""
    available = [[r.value, r.multiplicity] for r in numerator_roots]
    orders = []
    for root in denominator_roots:
        order = root.multiplicity
        for entry in available:
            while order and entry[1] and \
                    abs(entry[0] - root.value) <= tol * max(1.0, abs(root.value)):
                entry[1] -= 1
                order -= 1
        orders.append(order)
    return orders


def _series_div(x: np.ndarray, y: np.ndarray, order: int) -> np.ndarray:
    out = np.zeros(order, dtype=complex)
    for i in range(order):
        out[i] = (x[i] - np.dot(out[:i], y[i:0:-1])) / y[0]
    return out


def _taylor(coeffs: np.ndarray, z0: complex, order: int, degree: Optional[int] = None) -> np.ndarray:
    """
    Taylor coefficients c^(l)(z0) / l!, l < order, of an ascending coefficient vector

    With degree given each coefficient is scaled by z0^(l - degree), which
    keeps high powers of a root outside the unit circle finite.
    """
    c = np.asarray(coeffs, dtype=complex)
    out = np.zeros(order, dtype=complex)
    if degree is None:
        for l in range(min(order, len(c))):
            out[l] = P.polyval(z0, c)
            c = P.polyder(c) / (l + 1)
        return out
    powers = np.arange(len(c))
    for l in range(min(order, len(c))):
        out[l] = np.sum(special.comb(powers[l:], l) * c[l:] * z0 ** (powers[l:] - degree))
    return out


def _laurent(a: Polynomial, b: Polynomial, root: Root) -> Tuple[complex, ...]:
    """
    Principal part of a / b at a root of b

    Works on the undeflated polynomials: with t = z - root and m the
    multiplicity, a / b = t^-m (alpha / gamma)(t) where alpha are the Taylor
    coefficients of a and gamma those of b from order m on. The lower Taylor
    coefficients of b vanish up to the spread of the root cluster.

    Returns:
        Coefficients of t^-1 .. t^-m
    """
    m = root.multiplicity
    z0 = root.value
    degree = b.degree if abs(z0) > 1.0 else None
    alpha = _taylor(a.coeffs, z0, m, degree)
    gamma = _taylor(b.coeffs, z0, 2 * m, degree)[m:]
    if gamma[0] == 0:
        raise DecompositionError(f"root {z0:.6g} has multiplicity above {m}")
    series = _series_div(alpha, gamma, m)
    if degree is not None:
        series = series * z0 ** (m - np.arange(m))
    return tuple(complex(c) for c in series[::-1])


def _pole_terms(
    a: Polynomial,
    b: Polynomial,
    tolerances: Tolerances
) -> Tuple[List[PartialFractionTerm], List[int]]:
    """
    Principal parts of a / b at every root of b, with the pole orders left after cancellation

    Roots shared with a (matched under gcd_tol) lower the order; a term whose
    order drops to zero is a removable singularity.
    """
    roots = poly_roots(b, tolerances)
    terms = [PartialFractionTerm(root.value, root.multiplicity, _laurent(a, b, root))
             for root in roots]
    if a.degree < 1:
        return terms, [root.multiplicity for root in roots]
    orders = _pole_orders(poly_roots(a, tolerances), roots, tolerances.gcd_tol)
    cancelled = sum(root.multiplicity for root in roots) - sum(orders)
    if cancelled:
        logger.debug(f"Cancelled {cancelled} common root(s) of numerator and denominator")
    return terms, orders


def _truncate(term: PartialFractionTerm, order: int) -> PartialFractionTerm:
    return PartialFractionTerm(term.pole, order, term.residues[:order])


def _check_multiplicity(roots: List[Root], tolerances: Tolerances) -> None:
    for root in roots:
        if root.multiplicity > tolerances.max_multiplicity:
            raise MultiplicityError(
                f"pole {root.value:.6g} has multiplicity {root.multiplicity} "
                f"> {tolerances.max_multiplicity}")


def _conjugate_residues(terms: List[PartialFractionTerm], tol: float) -> List[PartialFractionTerm]:
    """Residues of conjugate poles are set to exact conjugates, real poles get real residues"""
    result = []
    upper = {}
    for term in terms:
        if _is_real(term.pole, tol):
            residues = tuple(complex(c.real, 0.0) for c in term.residues)
            result.append(PartialFractionTerm(complex(term.pole.real, 0.0), term.multiplicity, residues))
        elif term.pole.imag > 0:
            upper[term.pole.conjugate()] = term
            result.append(term)
    for term in terms:
        if not _is_real(term.pole, tol) and term.pole.imag < 0:
            partner = upper.get(term.pole)
            if partner is None:
                result.append(term)
            else:
                residues = tuple(c.conjugate() for c in partner.residues)
                result.append(PartialFractionTerm(term.pole, term.multiplicity, residues))
    return result


def _terms_value(terms: Sequence[PartialFractionTerm], z: np.ndarray) -> np.ndarray:
    total = np.zeros_like(z, dtype=complex)
    for term in terms:
        total = total + term(z)
    return total


def _check_radius(moduli: Sequence[float]) -> float:
    """Middle of the widest gap between pole moduli that opens inside the unit disc"""
    # poles far outside would push the circle to where a / b overflows
    edges = sorted(min(modulus, MAX_CHECK_RADIUS) for modulus in moduli)
    edges = [0.0] + edges + [MAX_CHECK_RADIUS]
    _, lo, hi = max((hi - lo, lo, hi) for lo, hi in zip(edges, edges[1:]) if lo < 1.0)
    return 0.5 * (lo + hi)


def recombination_error(
    a: Polynomial,
    b: Polynomial,
    polynomial_part: Polynomial,
    terms: Sequence[PartialFractionTerm]
) -> float:
    """
    Relative mismatch between a / b and polynomial_part + sum of terms

    Sampled on a circle that keeps clear of every pole in terms.

    Returns:
        max |difference| / max |a / b| over the sample points
    """
    radius = _check_radius([abs(term.pole) for term in terms])
    z = radius * np.exp(2j * np.pi * (np.arange(CHECK_POINTS) + 0.5) / CHECK_POINTS)
    reference = a(z) / b(z)
    recombined = polynomial_part(z) + _terms_value(terms, z)
    return float(np.max(np.abs(recombined - reference)) / max(np.max(np.abs(reference)), 1e-300))


def partial_fractions(
    a: Polynomial,
    b: Polynomial,
    check: bool = True,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> Tuple[Polynomial, List[PartialFractionTerm]]:
    """
    Decompose a / b into a polynomial part and pole terms

    Residues come from a and b as given. Roots of b shared with a (root
    matching under gcd_tol) lower the pole order or drop the pole.

    Args:
        a: Numerator
        b: Nonzero denominator
        check: Verify the full decomposition against a / b on a circle between the poles
        tolerances: Root and residue settings

    Returns:
        Tuple of (polynomial_part, terms)
    """
    if b.is_zero:
        raise PolynomialError("denominator must be nonzero")
    if a.is_zero:
        return Polynomial.zero(), []

    polynomial_part, _ = divmod(a, b)
    if b.degree < 1:
        return polynomial_part, []

    full, orders = _pole_terms(a, b, tolerances)
    _check_multiplicity([Root(t.pole, order) for t, order in zip(full, orders)], tolerances)
    if check:
        error = recombination_error(a, b, polynomial_part, full)
        if error > RECOMBINATION_TOL:
            raise DecompositionError(
                f"partial fractions recombine with relative error {error:.3g} "
                f"(clustered or ill-conditioned poles)")
    terms = [_truncate(t, order) for t, order in zip(full, orders) if order]
    return polynomial_part, _conjugate_residues(terms, tolerances.cluster_tol)


def recombine(terms: Sequence[PartialFractionTerm],
              tolerances: Tolerances = DEFAULT_TOLERANCES) -> Tuple[Polynomial, Polynomial]:
    """
    Sum of pole terms over the common monic denominator

    Args:
        terms: Terms with conjugate-symmetric poles and residues
        tolerances: Strip settings

    Returns:
        Tuple of (p, q), q monic, deg p < deg q, both real
    """
    all_roots = [t.pole for t in terms for _ in range(t.multiplicity)]
    q = np.real(P.polyfromroots(all_roots)) if all_roots else np.ones(1)
    p = np.zeros(max(len(all_roots), 1), dtype=complex)
    for i, term in enumerate(terms):
        others = [u.pole for j, u in enumerate(terms) if j != i for _ in range(u.multiplicity)]
        for r, c in enumerate(term.residues):
            power = r + 1
            factor_roots = others + [term.pole] * (term.multiplicity - power)
            factor = P.polyfromroots(factor_roots) if factor_roots else np.ones(1)
            p[:len(factor)] += c * factor
    return (Polynomial(np.real(p), tolerances.strip_tol),
            Polynomial(q, tolerances.strip_tol))



def project_negative(
    a: Polynomial,
    b: Polynomial,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> RationalSymbol:
    """
    Keep the part of a / b with poles strictly inside the unit disc

    The polynomial part and every pole with |z| >= 1 - pole_tol are
    discarded. Residues are taken from the undeflated a and b; roots the two
    share only lower pole orders. Kept terms whose residues fall below
    residue_tol relative to the largest kept residue are numerically
    cancelled pole/zero pairs and are pruned as well.

    The full decomposition (kept, discarded and cancelled terms plus the
    polynomial part) must reproduce a / b to PROJECTION_TOL on a circle
    between the poles, otherwise the kept terms are not trusted.

    Args:
        a: Numerator
        b: Nonzero denominator
        tolerances: Root, pole and residue settings

    Returns:
        Strictly proper RationalSymbol with monic real denominator
    """
    if b.is_zero:
        raise PolynomialError("denominator must be nonzero")
    if a.is_zero or b.degree < 1:
        raise EmptyProjectionError("function has no pole strictly inside the unit disc")

    polynomial_part, _ = divmod(a, b)
    full, orders = _pole_terms(a, b, tolerances)
    error = recombination_error(a, b, polynomial_part, full)
    if error > PROJECTION_TOL:
        raise DecompositionError(
            f"pole terms of a degree-{b.degree} denominator reproduce a / b only to "
            f"relative error {error:.3g}")

    poles = [_truncate(t, order) for t, order in zip(full, orders) if order]
    for term in poles:
        if abs(abs(term.pole) - 1.0) <= tolerances.near_circle_band:
            logger.warning(f"Pole {term.pole:.6g} lies within {tolerances.near_circle_band:g} "
                           f"of the unit circle; singular values may be (nearly) multiple")

    terms = [t for t in poles if abs(t.pole) < 1.0 - tolerances.pole_tol]
    discarded = tuple(sorted(abs(t.pole) for t in poles if abs(t.pole) >= 1.0 - tolerances.pole_tol))
    if discarded:
        logger.debug(f"Discarded {len(discarded)} pole(s), moduli {min(discarded):.6g}..{max(discarded):.6g}")
    if not terms:
        raise EmptyProjectionError("function has no pole strictly inside the unit disc")

    _check_multiplicity([Root(t.pole, t.multiplicity) for t in terms], tolerances)
    terms = _conjugate_residues(terms, tolerances.cluster_tol)

    largest = max(term.magnitude for term in terms)
    if largest == 0.0:
        raise EmptyProjectionError("all residues inside the unit disc vanish")
    pruned = [term for term in terms if term.magnitude <= tolerances.residue_tol * largest]
    if pruned:
        logger.debug(f"Pruned {len(pruned)} inside pole(s) with negligible residues")
        terms = [term for term in terms if term.magnitude > tolerances.residue_tol * largest]

    p, q = recombine(terms, tolerances)
    poles = tuple(Root(term.pole, term.multiplicity) for term in terms)
    return RationalSymbol(p, q, poles, discarded + tuple(sorted(abs(t.pole) for t in pruned)))


def series_coefficients(r: RationalSymbol, m: int) -> np.ndarray:
    """
    Laurent coefficients g_0 .. g_{m-1} of r(z) = sum g_n z^(-n-1)

    The first deg q values solve the triangular system g_0 = p_{k-1},
    g_j = p_{k-1-j} - sum_{i<j} q_{k-1-i} g_{j-1-i}, the rest follow the
    recurrence of q. Both are the impulse response of the filter with
    taps r.filter_taps().

    Args:
        r: Strictly proper symbol with monic denominator
        m: Number of coefficients

    Returns:
        Array of m reals
    """
    if m < 0:
        raise ValueError(f"coefficient count must be non-negative (got {m})")
    if abs(r.q.lead - 1.0) > MONIC_TOL:
        raise PolynomialError("denominator must be monic; normalise first")
    if r.p.is_zero or m == 0:
        return np.zeros(m)
    b, a = r.filter_taps()
    impulse = np.zeros(m)
    impulse[0] = 1.0
    return signal.lfilter(b, a, impulse)
