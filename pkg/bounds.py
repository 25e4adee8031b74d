"""
Error certificates for a completed approximation run
Near-optimality interval, noise adjustment, l2 distance, singular value
deviation and the assembled ErrorReport
"""

import logging
import math
from dataclasses import dataclass, field
from typing import List, Optional, Tuple, Union

import numpy as np

from errors import BoundViolationError, UncertifiableTailError
from hankel import (
    HankelBlock,
    StreamLike,
    hankel_diff_norm,
    singular_values,
    spectral_norm,
    stream_from_oracle,
    tail_mass,
)
from oracle import SequenceOracle, TableOracle, TablePolicy, WfaOracle
from tolerances import DEFAULT_TOLERANCES, Tolerances
from utils import PathLike, write_csv, write_json
from wfa import Wfa, spectral_radius, wfa_coefficient_stream

logger = logging.getLogger(__name__)

# Riesz inequality slack for sigma_deviation
DEVIATION_SLACK = 1e-10

# Rounding allowance when a measured norm is held against the certified interval
BOUND_SLACK = 1e-11

# The adaptive estimate approaches ||H - G|| from below
ESTIMATE_REL_SLACK = 1e-6

# First horizon tried when certifying l2 tails
HORIZON_START = 64

REPORT_HEADER = ('quantity', 'value', 'provenance')

PROVENANCE = {
    'sigma_k_n': "k-th singular value of the truncated Hankel block",
    'tail': "1 - sum_{i<=n} f(i)",
    'noise_norm': "||N^n||, dense SVD of the finite noise block",
    'lower_bound': "raw: sigma_k <= ||H - G||; substituted sigma_k >= sigma_k^n - tail "
                   "gives max(sigma_k^n - tail, 0)",
    'upper_bound': "raw: ||H - G|| <= sigma_k + 2 tail; substituted sigma_k <= sigma_k^n + tail "
                   "gives sigma_k^n + 3 tail, plus 2 ||N^n|| for perturbed runs",
    'l2_distance': "||f - g||_2 <= ||H - G|| (entry-wise difference)",
    'l2_slack': "certified l2 norm of both tails beyond the horizon",
    'spectral_estimate': "largest singular value of the M x M block of H - G (lower bound, grows with M)",
    'sigma_deviation': "|sigma_k(H_a) - sigma_k(H_b)| <= ||H_a - H_b||",
}


def near_optimality_bound(sigma_k_n: float, tail: float) -> Tuple[float, float]:
    """
    Certified interval for ||H - G_k^n|| in computable quantities

    Args:
        sigma_k_n: sigma_k of the truncation
        tail: Tail mass 1 - sum_{i<=n} f(i)

    Returns:
        Tuple of (max(sigma_k_n - tail, 0), sigma_k_n + 3 tail)
    """
    if tail < 0:
        raise ValueError(f"tail mass must be non-negative (got {tail})")
    return max(sigma_k_n - tail, 0.0), sigma_k_n + 3.0 * tail


def noise_adjustment(upper: float, noise_norm: float) -> float:
    """Upper bound of a perturbed run: upper + 2 ||N^n||"""
    if noise_norm < 0:
        raise ValueError(f"noise norm must be non-negative (got {noise_norm})")
    return upper + 2.0 * noise_norm


def noise_norm(block: HankelBlock) -> float:
    """Exact spectral norm of a finite noise block"""
    if block.support == 0:
        return 0.0
    return spectral_norm(block)


def spectral_estimate(
    oracle: SequenceOracle,
    approximant: StreamLike,
    M: Optional[int] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> float:
    """
    Estimate of ||H - G|| for an oracle and the coefficients of an approximant

    Args:
        oracle: Sequence oracle (H)
        approximant: Coefficients of G
        M: Fixed block size (adaptive when None)
        tolerances: Norm estimator settings

    Returns:
        Lower bound of the operator norm, see hankel_diff_norm
    """
    if M is None and math.isfinite(oracle.horizon_hint):
        # Largest block whose anti-diagonals stay inside the horizon
        M = min(tolerances.norm_max_size, (int(oracle.horizon_hint) + 2) // 2)
        logger.debug(f"Finite horizon: fixed norm block size M={M}")
    return hankel_diff_norm(stream_from_oracle(oracle), approximant, M, tolerances)


@dataclass(frozen=True)
class L2Distance:
    """
    Truncated l2 distance with certified tail slack

    Attributes:
        value: (sum_{n<=horizon} (f(n) - g(n))^2)^(1/2)
        slack: Bound on the l2 norm of the difference beyond the horizon
        horizon: Last index summed
    """
    value: float
    slack: float
    horizon: int

    @property
    def upper(self) -> float:
        return self.value + self.slack


def _wfa_tail(wfa: Wfa, horizon: int) -> float:
    """
    l2 norm bound of g beyond the horizon from a fitted decay C r^m

    r lies halfway between the spectral radius and 1, C is fitted on the
    first 2k+1 values.
    """
    radius = spectral_radius(wfa)
    if radius >= 1.0:
        raise UncertifiableTailError(f"automaton has spectral radius {radius:.6g} >= 1; "
                                     f"its tail does not decay")
    rate = 0.5 * (1.0 + radius)
    head = wfa_coefficient_stream(wfa).take(2 * wfa.k + 1)
    constant = float(np.max(np.abs(head) / rate ** np.arange(len(head))))
    return constant * rate ** (horizon + 1) / math.sqrt(1.0 - rate * rate)


def _oracle_tail(oracle: SequenceOracle, horizon: int) -> float:
    """l2 norm bound of f beyond the horizon"""
    if isinstance(oracle, TableOracle) and oracle.beyond_table is TablePolicy.ZERO \
            and horizon >= len(oracle.values) - 1:
        return 0.0
    if oracle.probabilistic:
        # 0 <= f(m) <= tail, so the squared tail sums to at most tail^2
        return tail_mass(oracle, horizon)
    if isinstance(oracle, WfaOracle):
        return _wfa_tail(oracle.wfa, horizon)
    raise UncertifiableTailError(
        f"cannot bound the tail of {oracle!r}: it is neither probabilistic, "
        f"a zero-padded table nor an automaton")


def _tail_slack(oracle: SequenceOracle, wfa: Wfa, horizon: int) -> float:
    return _oracle_tail(oracle, horizon) + _wfa_tail(wfa, horizon)


def _default_horizon(oracle: SequenceOracle, wfa: Wfa, tolerances: Tolerances) -> int:
    cap = tolerances.horizon_cap
    if math.isfinite(oracle.horizon_hint):
        cap = min(cap, int(oracle.horizon_hint))
    horizon = min(HORIZON_START, cap)
    while True:
        slack = _tail_slack(oracle, wfa, horizon)
        if slack < tolerances.tail_tol:
            return horizon
        if horizon >= cap:
            raise UncertifiableTailError(
                f"tail slack {slack:.3g} still above {tolerances.tail_tol:g} at horizon {horizon}")
        horizon = min(2 * horizon, cap)


def l2_distance(
    oracle: SequenceOracle,
    wfa: Wfa,
    horizon: Optional[int] = None,
    tolerances: Tolerances = DEFAULT_TOLERANCES
) -> L2Distance:
    """
    l2 distance between an oracle and an automaton

    Args:
        oracle: Sequence oracle
        wfa: Automaton
        horizon: Last index summed (default: smallest doubling from 64 that
            certifies both tails below tail_tol, capped at horizon_cap)
        tolerances: tail_tol and horizon_cap

    Returns:
        L2Distance
    """
    if horizon is None:
        horizon = _default_horizon(oracle, wfa, tolerances)
        slack = _tail_slack(oracle, wfa, horizon)
    else:
        if horizon < 0:
            raise ValueError(f"horizon must be non-negative (got {horizon})")
        slack = _tail_slack(oracle, wfa, horizon)
        if slack >= tolerances.tail_tol:
            raise UncertifiableTailError(
                f"tails beyond horizon {horizon} are only bounded by {slack:.3g} "
                f"(need < {tolerances.tail_tol:g})")

    f = oracle.prefix(horizon + 1)
    g = wfa_coefficient_stream(wfa).take(horizon + 1)
    value = math.sqrt(math.fsum((f - g) ** 2))
    logger.debug(f"l2 distance to horizon {horizon}: {value!r} (slack {slack:.3g})")
    return L2Distance(value, slack, horizon)


def _as_matrix(block: Union[HankelBlock, np.ndarray]) -> np.ndarray:
    return block.matrix() if isinstance(block, HankelBlock) else np.asarray(block, dtype=float)


def sigma_deviation(H_a: Union[HankelBlock, np.ndarray], H_b: Union[HankelBlock, np.ndarray],
                    k: int) -> float:
    """
    |sigma_k(H_a) - sigma_k(H_b)|, checked against ||H_a - H_b||

    Args:
        H_a: First symmetric block
        H_b: Second block of the same size
        k: Singular value index

    Returns:
        Absolute deviation
    """
    a = _as_matrix(H_a)
    b = _as_matrix(H_b)
    if a.shape != b.shape:
        raise ValueError(f"blocks must have equal sizes ({a.shape} vs {b.shape})")
    if not 0 <= k < a.shape[0]:
        raise ValueError(f"singular value index {k} out of range for size {a.shape[0]}")
    deviation = abs(float(singular_values(a)[k] - singular_values(b)[k]))
    distance = spectral_norm(a - b)
    if deviation > distance + DEVIATION_SLACK:
        raise BoundViolationError(
            f"sigma_{k} moved by {deviation!r}, more than ||H_a - H_b|| = {distance!r}")
    return deviation


@dataclass
class ErrorReport:
    """
    Certificates of one run; quantities that were not computed are None

    Attributes:
        sigma_k_n: sigma_k of the clean truncation
        tail: Tail mass 1 - sum_{i<=n} f(i)
        noise_norm: ||N^n||
        lower_bound: max(sigma_k_n - tail, 0)
        upper_bound: sigma_k_n + 3 tail + 2 noise_norm
        l2_distance: Truncated l2 distance between oracle and automaton
        l2_slack: Certified tail slack of l2_distance
        spectral_estimate: hankel_diff_norm of H - G
        sigma_deviation: |sigma_k^n(perturbed) - sigma_k^n(clean)|
        warnings: Notes on quantities that could not be certified
    """
    sigma_k_n: Optional[float] = None
    tail: Optional[float] = None
    noise_norm: float = 0.0
    lower_bound: Optional[float] = None
    upper_bound: Optional[float] = None
    l2_distance: Optional[float] = None
    l2_slack: Optional[float] = None
    spectral_estimate: Optional[float] = None
    sigma_deviation: Optional[float] = None
    warnings: List[str] = field(default_factory=list)

    QUANTITIES = ('sigma_k_n', 'tail', 'noise_norm', 'lower_bound', 'upper_bound',
                  'l2_distance', 'l2_slack', 'spectral_estimate', 'sigma_deviation')

    @property
    def violation(self) -> Optional[str]:
        """Which end of the certified interval the measured estimate breaks, None if neither"""
        if None in (self.lower_bound, self.upper_bound, self.spectral_estimate):
            return None
        if self.spectral_estimate > self.upper_bound + BOUND_SLACK:
            return (f"measured ||H - G|| = {self.spectral_estimate!r} exceeds the certified "
                    f"upper bound {self.upper_bound!r}")
        if self.spectral_estimate < self.lower_bound * (1.0 - ESTIMATE_REL_SLACK) - BOUND_SLACK:
            return (f"measured ||H - G|| = {self.spectral_estimate!r} is below the certified "
                    f"lower bound {self.lower_bound!r}")
        return None

    @property
    def certified(self) -> bool:
        """True when lower_bound <= spectral_estimate <= upper_bound (up to rounding)"""
        if None in (self.lower_bound, self.upper_bound, self.spectral_estimate):
            return False
        return self.violation is None

    def rows(self) -> List[Tuple[str, float, str]]:
        """(quantity, value, provenance) for every computed quantity"""
        return [(name, getattr(self, name), PROVENANCE[name])
                for name in self.QUANTITIES if getattr(self, name) is not None]

    def to_dict(self) -> dict:
        data = {name: getattr(self, name) for name in self.QUANTITIES}
        data['provenance'] = {name: PROVENANCE[name] for name, _, _ in self.rows()}
        data['certified'] = self.certified
        data['warnings'] = list(self.warnings)
        return data

    def to_json(self, path: PathLike) -> None:
        write_json(path, self.to_dict())

    def to_csv(self, path: PathLike) -> None:
        write_csv(path, REPORT_HEADER, self.rows())

    def summary(self) -> str:
        parts = []
        if self.sigma_k_n is not None:
            parts.append(f"sigma_k^n={self.sigma_k_n:.6g}")
        if self.lower_bound is not None and self.upper_bound is not None:
            parts.append(f"bound=[{self.lower_bound:.6g}, {self.upper_bound:.6g}]")
        if self.spectral_estimate is not None:
            parts.append(f"||H-G||~{self.spectral_estimate:.6g}")
        if self.l2_distance is not None:
            parts.append(f"l2={self.l2_distance:.6g}")
        return " ".join(parts)


def build_report(
    sigma_k_n: Optional[float] = None,
    tail: Optional[float] = None,
    noise: Optional[HankelBlock] = None,
    l2: Optional[L2Distance] = None,
    estimate: Optional[float] = None,
    deviation: Optional[float] = None,
    warnings: Optional[List[str]] = None
) -> ErrorReport:
    """
    Assemble an ErrorReport from the quantities of a run

    Bounds are filled in only when both sigma_k_n and tail are known.

    Args:
        sigma_k_n: sigma_k of the clean truncation
        tail: Tail mass (None for oracles without total mass one)
        noise: Noise block of the run
        l2: l2 distance to the extracted automaton
        estimate: Measured ||H - G||
        deviation: sigma_k shift caused by the noise
        warnings: Notes to carry into the report

    Returns:
        ErrorReport
    """
    report = ErrorReport(warnings=list(warnings or []))
    report.sigma_k_n = sigma_k_n
    report.tail = tail
    report.noise_norm = noise_norm(noise) if noise is not None else 0.0
    if sigma_k_n is not None and tail is not None:
        lower, upper = near_optimality_bound(sigma_k_n, tail)
        report.lower_bound = lower
        report.upper_bound = noise_adjustment(upper, report.noise_norm)
    elif sigma_k_n is not None:
        report.warnings.append("oracle does not declare total mass one; no certified interval")
    if l2 is not None:
        report.l2_distance = l2.value
        report.l2_slack = l2.slack
    report.spectral_estimate = estimate
    report.sigma_deviation = deviation
    violation = report.violation
    if violation is not None:
        logger.warning(violation)
        report.warnings.append(violation)
    return report
