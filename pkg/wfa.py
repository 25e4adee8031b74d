"""
One-letter weighted finite automata
Representation, evaluation, JSON I/O and spectral extraction from Hankel coefficients
"""

import logging
from dataclasses import dataclass
from typing import Iterator

import numpy as np
from scipy import linalg

from errors import ConfigError, DegreeMismatchError, RankDeficiencyError
from hankel import CoefficientStream
from rational import RationalSymbol, series_coefficients
from tolerances import DEFAULT_TOLERANCES, Tolerances
from utils import PathLike, read_json, write_json

logger = logging.getLogger(__name__)

# Extracted automata must reproduce their window to this (relative) accuracy
EXTRACTION_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class Wfa:
    """
    Automaton <alpha, A, beta> computing f(n) = alpha^T A^n beta

    Attributes:
        k: Number of states
        alpha: Initial weights
        A: Transition matrix of the single symbol
        beta: Final weights
    """
    k: int
    alpha: np.ndarray
    A: np.ndarray
    beta: np.ndarray

    def __post_init__(self):
        alpha = np.array(self.alpha, dtype=float).reshape(-1)
        beta = np.array(self.beta, dtype=float).reshape(-1)
        A = np.array(self.A, dtype=float).reshape(self.k, self.k) if self.k else np.zeros((0, 0))
        if alpha.shape != (self.k,) or beta.shape != (self.k,):
            raise ValueError(f"alpha and beta must have {self.k} entries "
                             f"(got {alpha.shape[0]} and {beta.shape[0]})")
        if not (np.all(np.isfinite(alpha)) and np.all(np.isfinite(A)) and np.all(np.isfinite(beta))):
            raise ValueError("automaton weights must be finite")
        for array in (alpha, A, beta):
            array.setflags(write=False)
        object.__setattr__(self, 'alpha', alpha)
        object.__setattr__(self, 'A', A)
        object.__setattr__(self, 'beta', beta)

    @classmethod
    def from_dict(cls, data: dict) -> 'Wfa':
        """Build from {"k", "alpha", "A", "beta"}"""
        k = int(data['k'])
        try:
            return cls(k, data['alpha'], data['A'], data['beta'])
        except ValueError as e:
            raise ValueError(f"malformed automaton: {e}") from e

    def to_dict(self) -> dict:
        return {
            'k': self.k,
            'alpha': self.alpha.tolist(),
            'A': self.A.tolist(),
            'beta': self.beta.tolist(),
        }

    def save(self, path: PathLike) -> None:
        write_json(path, self.to_dict())

    def __repr__(self):
        return f"Wfa(k={self.k})"


def load_wfa(path: PathLike) -> Wfa:
    """
    Load an automaton from JSON {"k": int, "alpha": [...], "A": [[...]], "beta": [...]}

    Args:
        path: JSON file

    Returns:
        Wfa
    """
    data = read_json(path)
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: automaton file must be a JSON object")
    missing = [key for key in ('k', 'alpha', 'A', 'beta') if key not in data]
    if missing:
        raise ConfigError(f"{path}: automaton missing keys {missing}")
    try:
        return Wfa.from_dict(data)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"{path}: {e}") from e


def wfa_eval(wfa: Wfa, n: int) -> float:
    """
    alpha^T A^n beta by repeated matrix-vector products

    Args:
        wfa: Automaton
        n: Word length

    Returns:
        f(n)
    """
    if n < 0:
        raise ValueError(f"word length must be non-negative (got {n})")
    state = wfa.beta
    for _ in range(n):
        state = wfa.A @ state
    return float(wfa.alpha @ state)


def spectral_radius(wfa: Wfa) -> float:
    """Largest eigenvalue modulus of the transition matrix"""
    if wfa.k == 0:
        return 0.0
    return float(np.max(np.abs(linalg.eigvals(wfa.A))))


def wfa_coefficient_stream(wfa: Wfa) -> CoefficientStream:
    """
    Lazy stream f(0), f(1), ... of an automaton

    Values are bit-identical to wfa_eval.

    Args:
        wfa: Automaton

    Returns:
        CoefficientStream
    """
    def generate() -> Iterator[float]:
        state = wfa.beta
        while True:
            yield float(wfa.alpha @ state)
            state = wfa.A @ state

    return CoefficientStream(generate, name=repr(wfa))


@dataclass(frozen=True, eq=False)
class CoefficientWindow:
    """
    Hankel coefficients g_0 .. g_2k feeding the spectral method

    Attributes:
        g: 2k+1 coefficients
        k: Number of states to extract
    """
    g: np.ndarray
    k: int

    def __post_init__(self):
        g = np.array(self.g, dtype=float)
        if self.k < 1:
            raise ValueError(f"window needs k >= 1 (got {self.k})")
        if g.shape != (2 * self.k + 1,):
            raise ValueError(f"window for k={self.k} needs {2 * self.k + 1} coefficients, got {g.shape}")
        g.setflags(write=False)
        object.__setattr__(self, 'g', g)

    def hankel_blocks(self):
        """
        Blocks of the spectral method

        Returns:
            Tuple of (H_eps, H_a) with H_eps[i, j] = g_{i+j} and H_a[i, j] = g_{i+j+1}
        """
        k = self.k
        h_eps = linalg.hankel(self.g[:k], self.g[k - 1:2 * k - 1])
        h_a = linalg.hankel(self.g[1:k + 1], self.g[k:2 * k])
        return h_eps, h_a


def recover_window(symbol: RationalSymbol, k: int) -> CoefficientWindow:
    """
    First 2k+1 Laurent coefficients of a degree-k symbol

    Args:
        symbol: Strictly proper symbol with deg q = k
        k: Number of states

    Returns:
        CoefficientWindow
    """
    if symbol.degree != k:
        raise DegreeMismatchError(f"symbol has degree {symbol.degree}, expected {k}")
    return CoefficientWindow(series_coefficients(symbol, 2 * k + 1), k)


def spectral_extract(window: CoefficientWindow, tolerances: Tolerances = DEFAULT_TOLERANCES) -> Wfa:
    """
    Minimal automaton from a coefficient window (spectral method)

    Prefixes and suffixes are the words shorter than k. The leading block
    is factorised H_eps = P S with P = U D^(1/2), S = D^(1/2) V^T from its
    SVD, then alpha^T = h_S^T S^+, beta = P^+ h_P and A = P^+ H_a S^+.

    Args:
        window: Coefficients g_0 .. g_2k
        tolerances: rank_tol for the rank decision

    Returns:
        Wfa with k states
    """
    k = window.k
    h_eps, h_a = window.hankel_blocks()
    U, d, Vt = linalg.svd(h_eps)
    rank = int(np.sum(d > tolerances.rank_tol * d[0])) if d[0] > 0 else 0
    if rank < k:
        raise RankDeficiencyError(rank, k)

    root = np.sqrt(d)
    p_pinv = (U / root).T            # D^(-1/2) U^T
    s_pinv = Vt.T / root             # V D^(-1/2)
    alpha = h_eps[0, :] @ s_pinv
    beta = p_pinv @ h_eps[:, 0]
    A = p_pinv @ h_a @ s_pinv
    wfa = Wfa(k, alpha, A, beta)

    values = np.array([wfa_eval(wfa, n) for n in range(2 * k + 1)])
    error = np.max(np.abs(values - window.g))
    scale = np.max(np.abs(window.g))
    if error > EXTRACTION_TOL * scale:
        logger.warning(f"Extracted automaton reproduces the window only to {error:.3g} "
                       f"(max |g| = {scale:.3g})")
    radius = spectral_radius(wfa)
    if radius >= 1.0:
        logger.warning(f"Extracted automaton has spectral radius {radius:.6g} >= 1")
    logger.info(f"Extracted {k}-state automaton (condition {d[0] / d[-1]:.3g})")
    return wfa
