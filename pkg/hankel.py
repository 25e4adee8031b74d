"""
Hankel and Toeplitz blocks for the approximation pipeline
Truncations of a sequence oracle, random Hankel noise, tail masses and
spectral norms of Hankel differences
"""

import logging
import math
from dataclasses import dataclass
from itertools import islice
from typing import TYPE_CHECKING, Callable, Iterable, Iterator, Optional, Union

import numpy as np
from scipy import linalg

from errors import MassError, NoiseSpecError, UnsupportedBoundError
from tolerances import DEFAULT_TOLERANCES, Tolerances
from utils import PathLike, format_float, write_json

if TYPE_CHECKING:
    from oracle import SequenceOracle

logger = logging.getLogger(__name__)

# Tail masses in [-TAIL_CLAMP, 0) are rounding noise and clamp to zero
TAIL_CLAMP = 1e-12

# Smallest block the adaptive norm estimator starts from
NORM_START_SIZE = 32

# First chunk read from an oracle stream
STREAM_CHUNK = 64


def _readonly(values) -> np.ndarray:
    array = np.array(values, dtype=float)
    array.setflags(write=False)
    return array


@dataclass(frozen=True, eq=False)
class HankelBlock:
    """
    Finite n x n Hankel matrix, entry (i, j) = diag[i + j]

    Attributes:
        n: Block size
        diag: Anti-diagonal values nu_0 .. nu_{2n-2}
        support: Number of leading anti-diagonals that may be nonzero
    """
    n: int
    diag: np.ndarray
    support: int

    def __post_init__(self):
        if self.n < 1:
            raise ValueError(f"Hankel block size must be at least 1 (got {self.n})")
        diag = _readonly(self.diag)
        if diag.shape != (2 * self.n - 1,):
            raise ValueError(f"expected {2 * self.n - 1} anti-diagonals, got {diag.shape}")
        if not 0 <= self.support <= 2 * self.n - 1:
            raise ValueError(f"support {self.support} out of range for n={self.n}")
        if np.any(diag[self.support:] != 0.0):
            raise ValueError("anti-diagonals beyond the support must be zero")
        object.__setattr__(self, 'diag', diag)

    @classmethod
    def zeros(cls, n: int) -> 'HankelBlock':
        return cls(n, np.zeros(2 * n - 1), 0)

    def entry(self, i: int, j: int) -> float:
        return float(self.diag[i + j])

    def matrix(self) -> np.ndarray:
        """Dense symmetric n x n matrix"""
        return linalg.hankel(self.diag[:self.n], self.diag[self.n - 1:])

    def padded(self, n: int) -> 'HankelBlock':
        """
        Embed the block in a larger one, padding anti-diagonals with zeros

        Args:
            n: New block size (>= current size)

        Returns:
            HankelBlock whose leading self.n x self.n block is this block when
            the support fits inside it
        """
        if n < self.n:
            raise ValueError(f"cannot pad a block of size {self.n} down to {n}")
        diag = np.zeros(2 * n - 1)
        diag[:self.support] = self.diag[:self.support]
        return HankelBlock(n, diag, self.support)

    def __add__(self, other: 'HankelBlock') -> 'HankelBlock':
        if not isinstance(other, HankelBlock):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"block sizes differ: {self.n} vs {other.n}")
        return HankelBlock(self.n, self.diag + other.diag, max(self.support, other.support))

    def __sub__(self, other: 'HankelBlock') -> 'HankelBlock':
        if not isinstance(other, HankelBlock):
            return NotImplemented
        if other.n != self.n:
            raise ValueError(f"block sizes differ: {self.n} vs {other.n}")
        return HankelBlock(self.n, self.diag - other.diag, max(self.support, other.support))

    def to_dict(self) -> dict:
        return {'n': self.n, 'diag': self.diag.tolist()}

    def to_json(self, path: PathLike) -> None:
        write_json(path, self.to_dict())

    def to_csv(self, path: PathLike) -> None:
        """Row-major CSV with 17 significant digits"""
        np.savetxt(path, self.matrix(), fmt='%.17g', delimiter=',')

    def __repr__(self):
        return f"HankelBlock(n={self.n}, support={self.support})"


@dataclass(frozen=True, eq=False)
class ToeplitzBlock:
    """
    Strictly upper triangular n x n Toeplitz matrix, entry (i, j) = first_row[j - i] for j >= i

    Attributes:
        n: Block size
        first_row: First row, first_row[0] = 0
    """
    n: int
    first_row: np.ndarray

    def __post_init__(self):
        row = _readonly(self.first_row)
        if row.shape != (self.n,):
            raise ValueError(f"expected first row of length {self.n}, got {row.shape}")
        if row[0] != 0.0:
            raise ValueError("Toeplitz block must have a zero main diagonal")
        object.__setattr__(self, 'first_row', row)

    def matrix(self) -> np.ndarray:
        return linalg.toeplitz(np.zeros(self.n), self.first_row)

    def __repr__(self):
        return f"ToeplitzBlock(n={self.n})"


@dataclass(frozen=True)
class NoiseSpec:
    """
    Random Hankel perturbation

    Attributes:
        p: Decay exponent, anti-diagonal m is drawn from [-(m+2)^-p, (m+2)^-p]
        seed: Seed of the PCG64 generator
        enabled: False gives the zero perturbation
        full_block: Perturb all 2n-1 anti-diagonals (False keeps only the first n)
    """
    p: float = 2.0
    seed: int = 0
    enabled: bool = False
    full_block: bool = True

    def to_dict(self) -> dict:
        return {'p': self.p, 'seed': self.seed, 'enabled': self.enabled, 'full_block': self.full_block}


class CoefficientStream:
    """
    Re-iterable lazy sequence of Hankel coefficients g_0, g_1, ...

    Each iteration restarts from g_0, so a stream can be read several times
    (the adaptive norm estimator grows its block and re-reads).
    """

    def __init__(self, factory: Callable[[], Iterator[float]], name: str = "stream"):
        """
        Initialize stream

        Args:
            factory: Returns a fresh iterator over g_0, g_1, ...
            name: Label used in logs
        """
        self._factory = factory
        self.name = name

    def __iter__(self) -> Iterator[float]:
        return iter(self._factory())

    def take(self, count: int) -> np.ndarray:
        """First count coefficients"""
        return np.fromiter(islice(iter(self), count), dtype=float, count=count)

    def __repr__(self):
        return f"CoefficientStream({self.name})"


StreamLike = Union[CoefficientStream, Iterable[float]]


def _take(stream: StreamLike, count: int) -> np.ndarray:
    if isinstance(stream, CoefficientStream):
        return stream.take(count)
    values = np.fromiter(islice(iter(stream), count), dtype=float)
    if values.shape[0] < count:
        values = np.concatenate([values, np.zeros(count - values.shape[0])])
    return values


def stream_from_block(block: HankelBlock) -> CoefficientStream:
    """
    Anti-diagonals of a block followed by zeros

    Args:
        block: Finite Hankel block

    Returns:
        CoefficientStream of the zero-padded anti-diagonals
    """
    def generate() -> Iterator[float]:
        for value in block.diag[:block.support]:
            yield float(value)
        while True:
            yield 0.0

    return CoefficientStream(generate, name=repr(block))


def stream_from_oracle(oracle: 'SequenceOracle') -> CoefficientStream:
    """
    Oracle values f(0), f(1), ...

    Args:
        oracle: Sequence oracle

    Returns:
        CoefficientStream evaluating the oracle lazily
    """
    def generate() -> Iterator[float]:
        # Chunked prefixes keep sequential models (Elman) linear in the length read
        start = 0
        while True:
            count = max(STREAM_CHUNK, 2 * start)
            if count > oracle.horizon_hint + 1:
                count = int(oracle.horizon_hint) + 1
            if count <= start:
                while True:
                    yield oracle.eval(start)
                    start += 1
            for value in oracle.prefix(count)[start:]:
                yield float(value)
            start = count

    return CoefficientStream(generate, name=repr(oracle))


def build_truncation(oracle: 'SequenceOracle', n: int) -> HankelBlock:
    """
    Truncated Hankel block: f(m) on anti-diagonals m <= n-1, zero after

    Args:
        oracle: Sequence oracle with horizon >= n-1
        n: Block size

    Returns:
        HankelBlock with support n
    """
    if n < 1:
        raise ValueError(f"truncation size must be at least 1 (got {n})")
    diag = np.zeros(2 * n - 1)
    diag[:n] = oracle.prefix(n)
    block = HankelBlock(n, diag, n)
    logger.debug(f"Built truncation {block} from {oracle!r}")
    return block


def tail_mass(oracle: 'SequenceOracle', n: int) -> float:
    """
    Mass beyond index n: 1 - sum_{i<=n} f(i)

    Args:
        oracle: Oracle declaring sum f = 1
        n: Last included index

    Returns:
        Non-negative tail mass
    """
    if not oracle.probabilistic:
        raise UnsupportedBoundError(
            f"{oracle!r} does not declare total mass one; the tail bound needs sum f = 1")
    if n < 0:
        raise ValueError(f"tail index must be non-negative (got {n})")
    tail = 1.0 - math.fsum(oracle.prefix(n + 1))
    if tail < 0.0:
        if tail < -TAIL_CLAMP:
            raise MassError(f"partial sum up to {n} exceeds one by {-tail!r}")
        tail = 0.0
    return tail


def sample_noise(n: int, spec: NoiseSpec) -> HankelBlock:
    """
    Random Hankel block with anti-diagonal m uniform in [-(m+2)^-p, (m+2)^-p]

    The generator is numpy's PCG64 seeded with spec.seed, so the same seed
    reproduces the same block on every platform.

    Args:
        n: Block size
        spec: Noise specification

    Returns:
        HankelBlock (zero when spec is disabled)
    """
    if spec.p < 2:
        raise NoiseSpecError(f"noise decay exponent must be >= 2 for a compact perturbation (got {spec.p})")
    if not spec.enabled:
        return HankelBlock.zeros(n)

    rng = np.random.Generator(np.random.PCG64(spec.seed))
    bound = (np.arange(2 * n - 1) + 2.0) ** (-spec.p)
    diag = rng.uniform(-bound, bound)
    support = 2 * n - 1
    if not spec.full_block:
        diag[n:] = 0.0
        support = n
    logger.debug(f"Sampled noise block n={n}, p={spec.p}, seed={spec.seed}, support={support}")
    return HankelBlock(n, diag, support)


def toeplitz_from_hankel(block: HankelBlock) -> ToeplitzBlock:
    """
    Toeplitz companion of a Hankel block: first row [0, nu_0, ..., nu_{n-2}]

    Args:
        block: Hankel block

    Returns:
        ToeplitzBlock of the same size
    """
    first_row = np.zeros(block.n)
    first_row[1:] = block.diag[:block.n - 1]
    return ToeplitzBlock(block.n, first_row)


def build_toeplitz(oracle: 'SequenceOracle', n: int) -> ToeplitzBlock:
    """
    Toeplitz block of the truncated oracle: first row [0, f(0), ..., f(n-2)]

    Args:
        oracle: Sequence oracle
        n: Block size

    Returns:
        ToeplitzBlock
    """
    if n < 1:
        raise ValueError(f"Toeplitz size must be at least 1 (got {n})")
    first_row = np.zeros(n)
    first_row[1:] = oracle.prefix(n - 1)
    return ToeplitzBlock(n, first_row)


def singular_values(block: Union[HankelBlock, np.ndarray]) -> np.ndarray:
    """
    Singular values of a symmetric block, descending (|eigenvalues| sorted)

    Args:
        block: HankelBlock or dense symmetric matrix

    Returns:
        Array of singular values
    """
    matrix = block.matrix() if isinstance(block, HankelBlock) else block
    return np.sort(np.abs(linalg.eigvalsh(matrix)))[::-1]


def spectral_norm(block: Union[HankelBlock, np.ndarray]) -> float:
    """Largest singular value of a symmetric block"""
    return float(singular_values(block)[0])


def _difference_norm(diag_a: StreamLike, diag_b: StreamLike, M: int) -> float:
    coeffs = _take(diag_a, 2 * M - 1) - _take(diag_b, 2 * M - 1)
    return spectral_norm(linalg.hankel(coeffs[:M], coeffs[M - 1:]))


def hankel_diff_norm(
    diag_a: StreamLike,
    diag_b: StreamLike,
    M: Optional[int] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    Spectral norm of the M x M Hankel block of the coefficient difference a - b

    The finite block is a principal submatrix of the infinite Hankel operator,
    so the value is a lower bound of the operator norm and grows with M.
    Without M the block doubles from 32 until the norm changes by less than
    norm_rel_tol (relative) or reaches norm_max_size.

    Args:
        diag_a: Coefficients of the first operator
        diag_b: Coefficients of the second operator
        M: Fixed block size (adaptive when None)
        tolerances: Convergence settings

    Returns:
        Largest singular value of the difference block
    """
    if M is not None:
        if M < 1:
            raise ValueError(f"block size must be at least 1 (got {M})")
        return _difference_norm(diag_a, diag_b, M)

    size = min(NORM_START_SIZE, tolerances.norm_max_size)
    current = _difference_norm(diag_a, diag_b, size)
    while size < tolerances.norm_max_size:
        previous = current
        size = min(2 * size, tolerances.norm_max_size)
        current = _difference_norm(diag_a, diag_b, size)
        logger.debug(f"Norm estimate M={size}: {current!r}")
        if abs(current - previous) <= tolerances.norm_rel_tol * current:
            return current
    if size > NORM_START_SIZE:
        logger.warning(f"Norm estimator reached M={size} without converging "
                       f"(last value {format_float(current)})")
    return current
