"""
Configuration Validator for the Hankel approximation toolkit
Validates config.json for errors and missing values
"""

import json
import logging
from typing import List, Tuple

logger = logging.getLogger(__name__)

KNOWN_FORMATS = ('json', 'csv')


class ConfigValidator:
    """
    Validates the settings file of the approximation pipeline
    """

    def __init__(self, config_file: str = 'config.json'):
        """
        Initialize validator

        Args:
            config_file: Path to config.json
        """
        self.config_file = config_file
        self.errors: List[str] = []
        self.warnings: List[str] = []

    def validate(self) -> Tuple[bool, dict]:
        """
        Validate configuration file

        Returns:
            Tuple of (is_valid, config_dict)
        """
        self.errors = []
        self.warnings = []

        # Load config
        try:
            with open(self.config_file, 'r') as f:
                config = json.load(f)
        except FileNotFoundError:
            self.warnings.append(f"⚠️  Config file not found: {self.config_file} - using defaults")
            config = {}
        except json.JSONDecodeError as e:
            self.errors.append(f"❌ JSON error in {self.config_file}: {e}")
            return False, {}

        if not isinstance(config, dict):
            self.errors.append(f"❌ {self.config_file} must contain a JSON object")
            return False, {}

        # Validate sections
        self._validate_hankel(config)
        self._validate_rational(config)
        self._validate_aak(config)
        self._validate_wfa(config)
        self._validate_bounds(config)
        self._validate_output(config)

        # Report results
        if self.errors:
            logger.error("❌ Config validation failed!")
            for error in self.errors:
                logger.error(f"  {error}")
            return False, config

        if self.warnings:
            logger.warning("⚠️  Config warnings:")
            for warning in self.warnings:
                logger.warning(f"  {warning}")

        logger.debug("✅ Config validation successful")
        return True, config

    def _check_positive(self, section: dict, name: str, key: str, integer: bool = False) -> None:
        """Check that section[key], if present, is a positive number"""
        if key not in section:
            return
        value = section[key]
        expected = int if integer else (int, float)
        if isinstance(value, bool) or not isinstance(value, expected) or value <= 0:
            kind = "positive integer" if integer else "positive number"
            self.errors.append(f"❌ {name}.{key} must be a {kind} (is: {value})")

    def _section(self, config: dict, name: str) -> dict:
        """Return a section, recording an error if it is not an object"""
        section = config.get(name, {})
        if not isinstance(section, dict):
            self.errors.append(f"❌ Section '{name}' must be an object")
            return {}
        return section

    def _validate_hankel(self, config: dict) -> None:
        """Validate hankel section"""
        hankel = self._section(config, 'hankel')
        self._check_positive(hankel, 'hankel', 'norm_rel_tol')
        self._check_positive(hankel, 'hankel', 'norm_max_size', integer=True)

        if hankel.get('norm_max_size', 0) > 8192:
            self.warnings.append(
                f"⚠️  hankel.norm_max_size very large ({hankel['norm_max_size']}) - dense eigensolves get slow")

    def _validate_rational(self, config: dict) -> None:
        """Validate rational section"""
        rational = self._section(config, 'rational')
        for key in ['strip_tol', 'root_residual_tol', 'cluster_tol', 'gcd_tol',
                    'pole_tol', 'near_circle_band', 'residue_tol']:
            self._check_positive(rational, 'rational', key)
        self._check_positive(rational, 'rational', 'max_multiplicity', integer=True)

        if rational.get('pole_tol', 0) >= 1:
            self.errors.append(f"❌ rational.pole_tol must be below 1 (is: {rational['pole_tol']})")

        if rational.get('cluster_tol', 0) > 1e-4:
            self.warnings.append(
                f"⚠️  rational.cluster_tol large ({rational['cluster_tol']}) - distinct poles may merge")

        if rational.get('max_multiplicity', 4) > 4:
            self.warnings.append("⚠️  rational.max_multiplicity above 4 - generalized residues lose accuracy")

    def _validate_aak(self, config: dict) -> None:
        """Validate aak section"""
        aak = self._section(config, 'aak')
        self._check_positive(aak, 'aak', 'gap_tol')
        self._check_positive(aak, 'aak', 'default_n_factor', integer=True)

        if aak.get('default_n_factor', 8) == 1:
            self.errors.append("❌ aak.default_n_factor must be at least 2 (n > k)")

        if aak.get('gap_tol', 0) > 1e-3:
            self.warnings.append(f"⚠️  aak.gap_tol very large ({aak['gap_tol']}) - most runs will warn")

    def _validate_wfa(self, config: dict) -> None:
        """Validate wfa section"""
        wfa = self._section(config, 'wfa')
        self._check_positive(wfa, 'wfa', 'rank_tol')

        if wfa.get('rank_tol', 0) > 1e-4:
            self.warnings.append(f"⚠️  wfa.rank_tol large ({wfa['rank_tol']}) - small states may be dropped")

    def _validate_bounds(self, config: dict) -> None:
        """Validate bounds section"""
        bounds = self._section(config, 'bounds')
        self._check_positive(bounds, 'bounds', 'tail_tol')
        self._check_positive(bounds, 'bounds', 'horizon_cap', integer=True)

        if bounds.get('tail_tol', 0) > 1e-6:
            self.warnings.append(f"⚠️  bounds.tail_tol large ({bounds['tail_tol']}) - l2 slack will dominate")

    def _validate_output(self, config: dict) -> None:
        """Validate output section"""
        output = self._section(config, 'output')

        if 'formats' in output:
            formats = output['formats']
            if not isinstance(formats, list) or not formats:
                self.errors.append("❌ output.formats must be a non-empty list")
            else:
                for fmt in formats:
                    if fmt not in KNOWN_FORMATS:
                        self.errors.append(f"❌ output.formats contains unknown format '{fmt}'")

        self._check_positive(output, 'output', 'singular_values', integer=True)

    def get_errors(self) -> List[str]:
        """Get all errors"""
        return self.errors

    def get_warnings(self) -> List[str]:
        """Get all warnings"""
        return self.warnings


def validate_config(config_file: str = 'config.json') -> Tuple[bool, dict]:
    """
    Validate configuration file

    Args:
        config_file: Path to config.json

    Returns:
        Tuple of (is_valid, config_dict)
    """
    validator = ConfigValidator(config_file)
    return validator.validate()


if __name__ == '__main__':
    import sys
    from utils import setup_logging

    setup_logging()

    valid, config = validate_config(sys.argv[1] if len(sys.argv) > 1 else 'config.json')

    if not valid:
        print("\n❌ Errors found in config.json!")
        sys.exit(1)
    else:
        print("\n✅ config.json is valid!")
        sys.exit(0)
