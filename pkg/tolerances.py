"""
Numerical thresholds shared by the approximation pipeline
Defaults match config.json; Tolerances.from_config overrides them section by section
"""

import logging
from dataclasses import dataclass, fields, replace

logger = logging.getLogger(__name__)

# config.json section owning each field
_SECTIONS = {
    'strip_tol': 'rational',
    'root_residual_tol': 'rational',
    'cluster_tol': 'rational',
    'gcd_tol': 'rational',
    'pole_tol': 'rational',
    'near_circle_band': 'rational',
    'residue_tol': 'rational',
    'max_multiplicity': 'rational',
    'gap_tol': 'aak',
    'default_n_factor': 'aak',
    'rank_tol': 'wfa',
    'norm_rel_tol': 'hankel',
    'norm_max_size': 'hankel',
    'tail_tol': 'bounds',
    'horizon_cap': 'bounds',
}


@dataclass(frozen=True)
class Tolerances:
    """
    Every threshold used by the numerical modules

    Attributes:
        strip_tol: Relative size below which trailing polynomial coefficients are dropped
        root_residual_tol: Allowed |q(root)| relative to the coefficient norm
        cluster_tol: Roots closer than this merge into one multiple root
        gcd_tol: Numerator and denominator roots closer than this cancel
        pole_tol: Poles with |z| >= 1 - pole_tol are discarded by the projection
        near_circle_band: Half-width of the band around |z|=1 that triggers a warning
        residue_tol: Kept terms with residues below this (relative) are pruned
        max_multiplicity: Largest pole multiplicity the residue code accepts
        gap_tol: Relative sigma gap below which a multiplicity warning is raised
        default_n_factor: Truncation size defaults to this multiple of k
        rank_tol: Relative singular value cutoff in spectral extraction
        norm_rel_tol: Convergence threshold of the adaptive norm estimator
        norm_max_size: Largest block the norm estimator builds
        tail_tol: Tails must be certified below this for the l2 distance
        horizon_cap: Largest horizon the l2 distance may use
    """
    strip_tol: float = 1e-14
    root_residual_tol: float = 1e-8
    cluster_tol: float = 1e-7
    gcd_tol: float = 1e-6
    pole_tol: float = 1e-8
    near_circle_band: float = 1e-4
    residue_tol: float = 1e-9
    max_multiplicity: int = 4
    gap_tol: float = 1e-6
    default_n_factor: int = 8
    rank_tol: float = 1e-10
    norm_rel_tol: float = 1e-9
    norm_max_size: int = 2048
    tail_tol: float = 1e-12
    horizon_cap: int = 100000

    @classmethod
    def from_config(cls, config: dict) -> 'Tolerances':
        """
        Build tolerances from a validated config dictionary

        Args:
            config: Parsed config.json (missing sections keep their defaults)

        Returns:
            Tolerances instance
        """
        overrides = {}
        for field in fields(cls):
            section = config.get(_SECTIONS[field.name], {})
            if field.name in section:
                overrides[field.name] = type(field.default)(section[field.name])
        tolerances = replace(cls(), **overrides)
        if overrides:
            logger.debug(f"Tolerance overrides from config: {overrides}")
        return tolerances


DEFAULT_TOLERANCES = Tolerances()
