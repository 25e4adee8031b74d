"""
AAK engine
Schmidt pairs of truncated Hankel blocks, symbol construction and the
rank-k approximation pipeline
"""

import logging
import math
from dataclasses import dataclass, field
from typing import Iterator, List, Optional, Tuple, Union

import numpy as np
from scipy import linalg, signal

from errors import ApproximantZeroError, EmptyProjectionError
from hankel import (
    CoefficientStream,
    HankelBlock,
    NoiseSpec,
    ToeplitzBlock,
    build_truncation,
    sample_noise,
    singular_values,
    toeplitz_from_hankel,
)
from oracle import SequenceOracle
from rational import Polynomial, RationalSymbol, project_negative
from tolerances import DEFAULT_TOLERANCES, Tolerances

logger = logging.getLogger(__name__)

# |lambda| values closer than this (relative to sigma_0) count as a tie
TIE_TOL = 1e-12

# Components below this (relative) are ignored when fixing the eigenvector sign
SIGN_TOL = 1e-12

# Coefficients produced per filter call in symbol_stream
SYMBOL_CHUNK = 256

TOEPLITZ_SOURCES = ('perturbed', 'clean')


@dataclass(frozen=True, eq=False)
class SchmidtPair:
    """
    Schmidt pair of a symmetric Hankel block: H xi = sigma eta, H eta = sigma xi

    Attributes:
        sigma: Singular value sigma_k^n = |lam|
        lam: Signed eigenvalue
        xi: Unit eigenvector, first significant component positive
        eta: sign(lam) * xi
        k: Position in the descending singular value order
        spectrum: All singular values, descending
        residual: ||H xi - sigma eta||
        warnings: Numerical diagnostics
        support: Leading block size when xi is a kernel vector (sigma numerically zero)
    """
    sigma: float
    lam: float
    xi: np.ndarray
    eta: np.ndarray
    k: int
    spectrum: np.ndarray
    residual: float = 0.0
    warnings: List[str] = field(default_factory=list)
    support: Optional[int] = None

    @property
    def gap(self) -> float:
        """sigma_{k-1} - sigma_k (inf for k = 0)"""
        if self.k == 0:
            return math.inf
        return float(self.spectrum[self.k - 1] - self.spectrum[self.k])

    @property
    def lower_gap(self) -> float:
        """sigma_k - sigma_{k+1} (inf for the last index)"""
        if self.k + 1 >= len(self.spectrum):
            return math.inf
        return float(self.spectrum[self.k] - self.spectrum[self.k + 1])

    def to_dict(self) -> dict:
        return {
            'sigma': self.sigma,
            'lambda': self.lam,
            'k': self.k,
            'xi': self.xi.tolist(),
            'residual': self.residual,
            'support': self.support,
        }


def _ordered_eigen(eigenvalues: np.ndarray) -> List[int]:
    """
    Eigen indices by descending |lambda|

    Near-equal |lambda| are ties: positive lambda first, then the lower index.
    """
    order = sorted(range(len(eigenvalues)), key=lambda i: -abs(eigenvalues[i]))
    scale = abs(eigenvalues[order[0]]) if len(order) else 0.0
    result: List[int] = []
    start = 0
    while start < len(order):
        stop = start + 1
        while stop < len(order) and \
                abs(eigenvalues[order[start]]) - abs(eigenvalues[order[stop]]) <= TIE_TOL * scale:
            stop += 1
        group = sorted(order[start:stop], key=lambda i: (eigenvalues[i] < 0, i))
        result.extend(group)
        start = stop
    return result


def _kernel_vector(matrix: np.ndarray, k: int, threshold: float) -> Tuple[np.ndarray, int]:
    """
    Null vector of the smallest leading block that has one, zero-padded

    Blocks of size k+1, k+2, ... are tried until the smallest singular value
    drops to threshold; the full matrix always qualifies when sigma_k does.

    Returns:
        Tuple of (unit vector of length n, size of the leading block)
    """
    n = matrix.shape[0]
    for m in range(k + 1, n + 1):
        _, s, vt = linalg.svd(matrix[:m, :m])
        if s[-1] <= threshold:
            break
    xi = np.zeros(n)
    xi[:m] = vt[-1]
    return xi, m


def compute_eigenpair(
    H: Union[HankelBlock, np.ndarray],
    k: int,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> SchmidtPair:
    """
    Schmidt pair for the (k+1)-th largest singular value of a symmetric block

    When sigma_k is numerically zero (<= rank_tol * sigma_0) the eigenspace
    is large and eigh returns an arbitrary member of it. The pair then uses
    the kernel vector of the smallest leading block instead, so that
    T xi / xi has exactly the poles of the exact-rank sequence.

    Args:
        H: Hankel block (or dense symmetric matrix)
        k: Index of the singular value, 0 <= k < n
        tolerances: gap_tol for the multiplicity warnings, rank_tol for the zero test

    Returns:
        SchmidtPair
    """
    matrix = H.matrix() if isinstance(H, HankelBlock) else np.asarray(H, dtype=float)
    n = matrix.shape[0]
    if not 0 <= k < n:
        raise ValueError(f"singular value index must satisfy 0 <= k < n (k={k}, n={n})")

    eigenvalues, vectors = linalg.eigh(matrix)
    order = _ordered_eigen(eigenvalues)
    spectrum = np.abs(eigenvalues[order])
    index = order[k]
    lam = float(eigenvalues[index])
    sigma = abs(lam)
    sigma_0 = float(spectrum[0])

    support = None
    if sigma_0 > 0.0 and sigma <= tolerances.rank_tol * sigma_0:
        xi, support = _kernel_vector(matrix, k, tolerances.rank_tol * sigma_0)
        logger.info(f"sigma_{k}^{n} = {sigma:.3g} is numerically zero; "
                    f"using the kernel vector of the leading {support}x{support} block")
    else:
        xi = vectors[:, index].copy()
    significant = np.nonzero(np.abs(xi) > SIGN_TOL * np.max(np.abs(xi)))[0]
    if xi[significant[0]] < 0:
        xi = -xi
    eta = xi if lam >= 0 else -xi

    warnings = []
    if k > 0 and spectrum[k - 1] - spectrum[k] < tolerances.gap_tol * sigma_0:
        message = (f"sigma_{k - 1} and sigma_{k} differ by {spectrum[k - 1] - spectrum[k]:.3g} "
                   f"(< gap_tol * sigma_0); the approximant may not be unique, "
                   f"consider enabling noise")
        logger.warning(message)
        warnings.append(message)
    if support is None and k + 1 < n and spectrum[k] - spectrum[k + 1] < tolerances.gap_tol * sigma_0:
        message = (f"sigma_{k} and sigma_{k + 1} differ by {spectrum[k] - spectrum[k + 1]:.3g} "
                   f"(< gap_tol * sigma_0); the Schmidt vector is not unique, "
                   f"consider enabling noise")
        logger.warning(message)
        warnings.append(message)

    residual = float(np.linalg.norm(matrix @ xi - sigma * eta))
    logger.debug(f"Eigenpair k={k}: sigma={sigma!r}, lambda={lam!r}, residual={residual:.3g}")
    return SchmidtPair(sigma, lam, xi, eta, k, spectrum, residual, warnings, support)


def build_symbol(T: ToeplitzBlock, pair: SchmidtPair):
    """
    Numerator and denominator of psi = (T xi)(z) / xi(z)

    Args:
        T: Toeplitz block of the truncated sequence
        pair: Schmidt pair of the matching Hankel block

    Returns:
        Tuple of (a, b) polynomials, ascending powers
    """
    if T.n != pair.xi.shape[0]:
        raise ValueError(f"Toeplitz size {T.n} does not match Schmidt vector size {pair.xi.shape[0]}")
    if not np.any(pair.xi != 0.0):
        raise ValueError("Schmidt vector is numerically zero")
    a = Polynomial(T.matrix() @ pair.xi)
    b = Polynomial(pair.xi)
    return a, b


def symbol_stream(symbol: RationalSymbol) -> CoefficientStream:
    """
    Lazy Laurent coefficients g_0, g_1, ... of a symbol

    Args:
        symbol: Strictly proper symbol

    Returns:
        CoefficientStream produced chunk by chunk with scipy.signal.lfilter
    """
    def generate() -> Iterator[float]:
        if symbol.p.is_zero:
            while True:
                yield 0.0
        b, a = symbol.filter_taps()
        state = np.zeros(max(len(a), len(b)) - 1)
        chunk = np.zeros(SYMBOL_CHUNK)
        chunk[0] = 1.0
        while True:
            values, state = signal.lfilter(b, a, chunk, zi=state)
            for value in values:
                yield float(value)
            chunk = np.zeros(SYMBOL_CHUNK)

    return CoefficientStream(generate, name=repr(symbol))


@dataclass(eq=False)
class AakResult:
    """
    Rank-k approximation of a truncated Hankel operator

    Attributes:
        symbol: Symbol of the approximant G_k^n
        schmidt: Schmidt pair used to build it
        sigma_k_n: sigma_k of the (perturbed) truncation
        kept_poles: Poles of the symbol, repeated by multiplicity
        k: Requested rank
        n: Truncation size
        truncation: Clean truncation H^n
        noise: Noise block N^n (zero when disabled)
        diagnostics: Gap, discarded pole moduli, rank mismatch and warnings
    """
    symbol: RationalSymbol
    schmidt: SchmidtPair
    sigma_k_n: float
    kept_poles: List[complex]
    k: int
    n: int
    truncation: HankelBlock
    noise: HankelBlock
    diagnostics: dict = field(default_factory=dict)

    @property
    def perturbed(self) -> HankelBlock:
        return self.truncation + self.noise

    @property
    def kept_pole_count(self) -> int:
        return len(self.kept_poles)

    @property
    def rank_mismatch(self) -> bool:
        return self.kept_pole_count != self.k

    @property
    def warnings(self) -> List[str]:
        return self.diagnostics.get('warnings', [])

    def approximant_stream(self) -> CoefficientStream:
        return symbol_stream(self.symbol)

    def to_dict(self) -> dict:
        return {
            'sigma_k_n': self.sigma_k_n,
            'symbol': self.symbol.to_dict(),
            'kept_poles': [[p.real, p.imag] for p in self.kept_poles],
            'diagnostics': self.diagnostics,
        }


def default_truncation(oracle: SequenceOracle, k: int,
                       tolerances: Tolerances = DEFAULT_TOLERANCES) -> int:
    """Truncation size default_n_factor * k, limited by the oracle horizon"""
    n = tolerances.default_n_factor * k
    if math.isfinite(oracle.horizon_hint):
        n = min(n, int(oracle.horizon_hint) + 1)
    return n


def aak_approximate(
    oracle: SequenceOracle,
    k: int,
    n: Optional[int] = None,
    noise: NoiseSpec = NoiseSpec(),
    toeplitz_from: str = 'perturbed',
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> AakResult:
    """
    Asymptotically optimal rank-k Hankel approximation of an oracle

    Truncate, perturb, take the k-th Schmidt pair, form psi = T xi / xi
    and keep its poles inside the unit disc.

    Args:
        oracle: Sequence oracle
        k: Target rank (number of states), k >= 1
        n: Truncation size, n > k (default: default_n_factor * k or the horizon)
        noise: Random Hankel perturbation
        toeplitz_from: Build T from the 'perturbed' or the 'clean' sequence
        tolerances: Numerical settings

    Returns:
        AakResult
    """
    if k < 1:
        raise ValueError(f"target rank must be at least 1 (got {k})")
    if toeplitz_from not in TOEPLITZ_SOURCES:
        raise ValueError(f"toeplitz_from must be one of {TOEPLITZ_SOURCES} (got {toeplitz_from!r})")
    if n is None:
        n = default_truncation(oracle, k, tolerances)
    if n <= k:
        raise ValueError(f"truncation size must exceed the target rank (n={n}, k={k})")

    truncation = build_truncation(oracle, n)
    noise_block = sample_noise(n, noise)
    perturbed = truncation + noise_block
    logger.info(f"Truncated {oracle!r} at n={n}"
                + (f" with noise p={noise.p}, seed={noise.seed}" if noise.enabled else ""))

    pair = compute_eigenpair(perturbed, k, tolerances)
    T = toeplitz_from_hankel(perturbed if toeplitz_from == 'perturbed' else truncation)
    a, b = build_symbol(T, pair)
    try:
        symbol = project_negative(a, b, tolerances)
    except EmptyProjectionError as e:
        raise ApproximantZeroError(f"rank-{k} approximant is zero at n={n}: {e}") from e

    kept = [root.value for root in symbol.poles for _ in range(root.multiplicity)]
    warnings = list(pair.warnings)
    if len(kept) != k:
        message = (f"kept {len(kept)} pole(s) inside the unit disc, expected {k}; "
                   f"retry with a larger n")
        logger.warning(message)
        warnings.append(message)
    else:
        logger.info(f"Symbol keeps {k} pole(s), sigma_{k}^{n} = {pair.sigma!r}")

    diagnostics = {
        'k': k,
        'n': n,
        'gap': pair.gap,
        'lower_gap': pair.lower_gap,
        'kernel_support': pair.support,
        'kept_pole_count': len(kept),
        'rank_mismatch': len(kept) != k,
        'discarded_pole_moduli': list(symbol.discarded_moduli),
        'kept_pole_moduli': [abs(p) for p in kept],
        'schmidt_residual': pair.residual,
        'noise': noise.to_dict(),
        'toeplitz_from': toeplitz_from,
        'warnings': warnings,
    }
    return AakResult(symbol, pair, pair.sigma, kept, k, n, truncation, noise_block, diagnostics)


def refine_truncation(
    oracle: SequenceOracle,
    k: int,
    n: Optional[int] = None,
    noise: NoiseSpec = NoiseSpec(),
    max_n: int = 1024,
    toeplitz_from: str = 'perturbed',
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> AakResult:
    """
    Run aak_approximate, doubling n while the kept-pole count differs from k

    Args:
        oracle: Sequence oracle
        k: Target rank
        n: First truncation size
        noise: Random Hankel perturbation
        max_n: Largest truncation size to try
        toeplitz_from: Toeplitz source
        tolerances: Numerical settings

    Returns:
        First result without rank mismatch, or the one at the largest n tried
    """
    if n is None:
        n = default_truncation(oracle, k, tolerances)
    limit = max_n
    if math.isfinite(oracle.horizon_hint):
        limit = min(limit, int(oracle.horizon_hint) + 1)

    while True:
        can_grow = 2 * n <= limit
        try:
            result = aak_approximate(oracle, k, n, noise, toeplitz_from, tolerances)
        except ApproximantZeroError:
            if not can_grow:
                raise
            logger.info(f"Approximant zero at n={n}, retrying with n={2 * n}")
            n *= 2
            continue
        if not result.rank_mismatch or not can_grow:
            return result
        logger.info(f"Rank mismatch at n={n}, retrying with n={2 * n}")
        n *= 2


def select_rank(H: Union[HankelBlock, np.ndarray], rho: float) -> int:
    """
    Smallest k with sigma_k^n < rho

    Args:
        H: Hankel block
        rho: Error tolerance, > 0

    Returns:
        Rank k (n when every singular value is at least rho)
    """
    if rho <= 0:
        raise ValueError(f"tolerance must be positive (got {rho})")
    sigmas = singular_values(H)
    below = np.nonzero(sigmas < rho)[0]
    return int(below[0]) if len(below) else len(sigmas)
