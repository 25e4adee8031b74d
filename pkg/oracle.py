"""
Sequence oracles for the Hankel approximation toolkit
Black-box functions f: N -> R (language-model stand-ins) and the fixtures used in tests
"""

import logging
import math
from abc import ABC, abstractmethod
from enum import Enum
from typing import Callable, Sequence

import numpy as np
from scipy.special import softmax

from errors import ConfigError, MassError, OutOfHorizonError
from utils import PathLike, read_json
from wfa import Wfa, load_wfa, wfa_eval

logger = logging.getLogger(__name__)

# Partial sums of a probabilistic oracle may exceed one by this much
MASS_SLACK = 1e-12


class TablePolicy(Enum):
    """
    Behaviour of a table oracle beyond its last value
    """
    ZERO = "zero"     # f(n) = 0 beyond the table
    ERROR = "error"   # evaluation beyond the table raises


class SequenceOracle(ABC):
    """
    Black box computing f(n), the mass of the string of length n

    Subclasses are immutable after construction and evaluation is pure,
    so one oracle can be shared between threads.
    """

    #: True when the oracle guarantees f >= 0 and sum f = 1
    probabilistic: bool = False

    @property
    def horizon_hint(self) -> float:
        """Largest index the backing model supports (math.inf for analytic oracles)"""
        return math.inf

    @abstractmethod
    def eval(self, n: int) -> float:
        """
        Evaluate f(n)

        Args:
            n: String length (n >= 0)

        Returns:
            f(n)
        """

    def prefix(self, count: int) -> np.ndarray:
        """
        Evaluate f(0), ..., f(count-1)

        Args:
            count: Number of values

        Returns:
            Array of length count
        """
        return np.array([self.eval(i) for i in range(count)], dtype=float)

    def __call__(self, n: int) -> float:
        return self.eval(n)

    @staticmethod
    def _check_index(n: int) -> None:
        if n < 0:
            raise ValueError(f"oracle index must be non-negative (got {n})")


class TableOracle(SequenceOracle):
    """
    Oracle backed by a finite list of values
    """

    def __init__(
        self,
        values: Sequence[float],
        beyond_table: TablePolicy = TablePolicy.ZERO,
        probabilistic: bool = False
    ):
        """
        Initialize table oracle

        Args:
            values: f(0), f(1), ... in order
            beyond_table: Policy for indices past the table
            probabilistic: Declare that the values are a probability distribution
        """
        values = np.array(values, dtype=float)
        if values.ndim != 1:
            raise ValueError("table values must be a flat list")
        if not np.all(np.isfinite(values)):
            raise ValueError("table values must be finite")
        values.setflags(write=False)
        self.values = values
        self.beyond_table = TablePolicy(beyond_table)
        self.probabilistic = probabilistic

    @property
    def horizon_hint(self) -> float:
        if self.beyond_table is TablePolicy.ERROR:
            return len(self.values) - 1
        return math.inf

    def eval(self, n: int) -> float:
        self._check_index(n)
        if n < len(self.values):
            return float(self.values[n])
        if self.beyond_table is TablePolicy.ERROR:
            raise OutOfHorizonError(n, len(self.values) - 1)
        return 0.0

    def __repr__(self):
        return f"TableOracle(length={len(self.values)}, beyond_table={self.beyond_table.value})"


class FunctionOracle(SequenceOracle):
    """
    Oracle wrapping a closed-form function
    """

    def __init__(self, func: Callable[[int], float], probabilistic: bool = False, name: str = "function"):
        """
        Initialize function oracle

        Args:
            func: Pure function n -> f(n)
            probabilistic: Declare that f sums to one
            name: Label used in logs
        """
        self.func = func
        self.probabilistic = probabilistic
        self.name = name

    def eval(self, n: int) -> float:
        self._check_index(n)
        return float(self.func(n))

    def __repr__(self):
        return f"FunctionOracle({self.name})"


class WfaOracle(SequenceOracle):
    """
    Oracle computing f(n) = alpha^T A^n beta for a one-letter WFA
    """

    def __init__(self, wfa: Wfa, probabilistic: bool = False):
        """
        Initialize WFA oracle

        Args:
            wfa: Automaton to evaluate
            probabilistic: Declare that the automaton computes a distribution
        """
        self.wfa = wfa
        self.probabilistic = probabilistic

    def eval(self, n: int) -> float:
        self._check_index(n)
        return wfa_eval(self.wfa, n)

    def prefix(self, count: int) -> np.ndarray:
        values = np.empty(count)
        state = self.wfa.beta.copy()
        for i in range(count):
            values[i] = self.wfa.alpha @ state
            state = self.wfa.A @ state
        return values

    def __repr__(self):
        return f"WfaOracle(states={self.wfa.k})"


class ElmanOracle(SequenceOracle):
    """
    Elman RNN language model over one symbol plus end-of-string

    f(n) = prod_{t<n} p_t(symbol) * p_n(end) with
    h_{t+1} = tanh(W h_t + U_in + b) and p_t = softmax(w_out h_t)
    """

    probabilistic = True

    def __init__(
        self,
        W: np.ndarray,
        U_in: np.ndarray,
        b: np.ndarray,
        h0: np.ndarray,
        w_out: np.ndarray
    ):
        """
        Initialize Elman oracle

        Args:
            W: Recurrent weights (h x h)
            U_in: Input weights of the single symbol (h)
            b: Hidden bias (h)
            h0: Initial hidden state (h)
            w_out: Output logits for (symbol, end-of-string) (2 x h)
        """
        self.W = self._frozen(W)
        self.U_in = self._frozen(U_in)
        self.b = self._frozen(b)
        self.h0 = self._frozen(h0)
        self.w_out = self._frozen(w_out)

        h = self.h0.shape[0]
        if self.W.shape != (h, h) or self.U_in.shape != (h,) or self.b.shape != (h,) \
                or self.w_out.shape != (2, h):
            raise ValueError(
                f"inconsistent Elman shapes: W{self.W.shape}, U_in{self.U_in.shape}, "
                f"b{self.b.shape}, h0{self.h0.shape}, w_out{self.w_out.shape}")
        self.hidden_size = h

    @staticmethod
    def _frozen(array) -> np.ndarray:
        array = np.array(array, dtype=float)
        array.setflags(write=False)
        return array

    def _step(self, h: np.ndarray) -> np.ndarray:
        return np.tanh(self.W @ h + self.U_in + self.b)

    def eval(self, n: int) -> float:
        self._check_index(n)
        h = self.h0
        mass = 1.0
        for _ in range(n):
            mass *= softmax(self.w_out @ h)[0]
            h = self._step(h)
        return float(mass * softmax(self.w_out @ h)[1])

    def prefix(self, count: int) -> np.ndarray:
        # Single pass; same operation order as eval so values are bit-identical
        values = np.empty(count)
        h = self.h0
        mass = 1.0
        for i in range(count):
            p = softmax(self.w_out @ h)
            values[i] = mass * p[1]
            mass *= p[0]
            h = self._step(h)
        return values

    def to_dict(self) -> dict:
        return {
            'h': self.hidden_size,
            'W': self.W.tolist(),
            'U_in': self.U_in.tolist(),
            'b': self.b.tolist(),
            'h0': self.h0.tolist(),
            'w_out': self.w_out.tolist(),
        }

    def __repr__(self):
        return f"ElmanOracle(hidden={self.hidden_size})"


def oracle_from_table(
    values: Sequence[float],
    policy: TablePolicy = TablePolicy.ZERO,
    probabilistic: bool = False
) -> TableOracle:
    """
    Build an oracle that looks values up in a table

    Args:
        values: f(0), f(1), ...
        policy: Behaviour beyond the table
        probabilistic: Declare that the table is a distribution

    Returns:
        TableOracle
    """
    return TableOracle(values, policy, probabilistic)


def oracle_from_wfa(wfa: Wfa, probabilistic: bool = False) -> WfaOracle:
    """
    Build an oracle computing alpha^T A^n beta

    Args:
        wfa: Well-formed automaton
        probabilistic: Declare that the automaton computes a distribution

    Returns:
        WfaOracle with infinite horizon
    """
    return WfaOracle(wfa, probabilistic)


def geometric_oracle(a: float) -> FunctionOracle:
    """
    f(n) = (1 - a) a^n, a rank-one distribution

    Args:
        a: Ratio in [0, 1)

    Returns:
        Probabilistic FunctionOracle
    """
    if not 0.0 <= a < 1.0:
        raise ValueError(f"geometric ratio must lie in [0, 1) (got {a})")
    return FunctionOracle(lambda n: (1.0 - a) * a ** n, probabilistic=True, name=f"geometric({a})")


def even_geometric_oracle(r: float = 1.0 / 9.0) -> FunctionOracle:
    """
    f(2m) = (1 - r) r^m and f(2m+1) = 0, a rank-two distribution

    With r = 1/9 the Hankel operator has singular values 0.9 and 0.1 and
    symbol (8/9) z / (z^2 - 1/9).

    Args:
        r: Ratio in [0, 1)

    Returns:
        Probabilistic FunctionOracle
    """
    if not 0.0 <= r < 1.0:
        raise ValueError(f"ratio must lie in [0, 1) (got {r})")

    def f(n: int) -> float:
        if n % 2:
            return 0.0
        return (1.0 - r) * r ** (n // 2)

    return FunctionOracle(f, probabilistic=True, name=f"even_geometric({r})")


def zero_oracle() -> FunctionOracle:
    """The zero function"""
    return FunctionOracle(lambda n: 0.0, name="zero")


def check_mass(oracle: SequenceOracle, horizon: int) -> np.ndarray:
    """
    Verify the probabilistic invariants up to a horizon

    Args:
        oracle: Oracle declaring itself probabilistic
        horizon: Last index to check

    Returns:
        Partial sums sum_{i<=N} f(i) for N = 0..horizon
    """
    values = oracle.prefix(horizon + 1)
    if np.any(values < 0):
        first = int(np.argmax(values < 0))
        raise MassError(f"negative mass f({first}) = {values[first]}")
    partial = np.cumsum(values)
    if partial[-1] > 1.0 + MASS_SLACK:
        first = int(np.argmax(partial > 1.0 + MASS_SLACK))
        raise MassError(f"partial sum up to {first} exceeds one ({partial[first]!r})")
    return partial


def load_table(path: PathLike, policy: TablePolicy = TablePolicy.ZERO,
               probabilistic: bool = False) -> TableOracle:
    """
    Load a table oracle from a JSON array of finite doubles

    Args:
        path: JSON file, e.g. [0.888888, 0.0, 0.098765]
        policy: Behaviour beyond the table
        probabilistic: Declare that the table is a distribution

    Returns:
        TableOracle
    """
    data = read_json(path)
    if not isinstance(data, list) or not data \
            or not all(isinstance(v, (int, float)) and not isinstance(v, bool) for v in data):
        raise ConfigError(f"{path}: table oracle file must be a non-empty JSON array of numbers")
    try:
        return TableOracle(data, policy, probabilistic)
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e


def load_elman(path: PathLike) -> ElmanOracle:
    """
    Load Elman weights from JSON {"h", "W", "U_in", "b", "h0", "w_out"}

    Args:
        path: JSON weights file

    Returns:
        ElmanOracle
    """
    data = read_json(path)
    required = ['h', 'W', 'U_in', 'b', 'h0', 'w_out']
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: Elman weights file must be a JSON object")
    missing = [key for key in required if key not in data]
    if missing:
        raise ConfigError(f"{path}: Elman weights missing keys {missing}")
    try:
        oracle = ElmanOracle(data['W'], data['U_in'], data['b'], data['h0'], data['w_out'])
    except ValueError as e:
        raise ConfigError(f"{path}: {e}") from e
    if oracle.hidden_size != data['h']:
        raise ConfigError(f"{path}: declared h={data['h']} but h0 has size {oracle.hidden_size}")
    return oracle


def load_oracle(path: PathLike, kind: str, policy: TablePolicy = TablePolicy.ZERO,
                probabilistic: bool = False) -> SequenceOracle:
    """
    Load an oracle file of the given kind

    Args:
        path: Input file
        kind: 'table', 'elman' or 'wfa'
        policy: Table policy (table kind only)
        probabilistic: Declare that the oracle is a distribution (table and wfa kinds)

    Returns:
        Oracle instance
    """
    if kind == 'table':
        oracle = load_table(path, policy, probabilistic)
    elif kind == 'elman':
        oracle = load_elman(path)
    elif kind == 'wfa':
        oracle = oracle_from_wfa(load_wfa(path), probabilistic)
    else:
        raise ConfigError(f"unknown oracle kind '{kind}' (expected table, elman or wfa)")
    logger.info(f"Loaded {oracle!r} from {path}")
    return oracle

