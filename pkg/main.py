"""
Hankel approximation toolkit - command line
Rank-k spectral-norm approximation of a one-letter sequence oracle,
automaton extraction and error certificates
"""

import argparse
import logging
import math
import sys
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Optional, Sequence

from aak import aak_approximate, default_truncation, refine_truncation, select_rank
from bounds import ErrorReport, build_report, l2_distance, sigma_deviation, spectral_estimate
from config_validator import KNOWN_FORMATS, validate_config
from errors import AakError, BoundViolationError, ConfigError, UncertifiableTailError
from hankel import NoiseSpec, build_truncation, singular_values, tail_mass
from oracle import SequenceOracle, TablePolicy, load_oracle
from tolerances import Tolerances
from utils import dumps_json, setup_logging, write_csv, write_json
from wfa import load_wfa, recover_window, spectral_extract, wfa_coefficient_stream

logger = logging.getLogger(__name__)

EXIT_OK = 0
EXIT_PIPELINE = 1
EXIT_CONFIG = 2

ORACLE_KINDS = ('table', 'elman', 'wfa')

EPILOG = """
Exit codes:
  0  success
  1  pipeline error (numerical failure, uncertifiable quantity, measured error
     outside the certified interval, oracle error)
  2  invalid configuration, command line or input file

Examples:
  # Rank-1 approximation of a table oracle, truncation n=60
  python3 main.py approximate --oracle table.json --kind table --k 1 --n 60 --out run/

  # Same with Hankel noise (decay p=3, seed 7)
  python3 main.py approximate --oracle table.json --kind table --k 1 --noise-p 3 --noise-seed 7 --out run/

  # Singular values of the n=40 truncation, smallest rank below 1e-3
  python3 main.py spectrum --oracle rnn.json --kind elman --n 40 --tolerance 1e-3

  # Distance between an oracle and an extracted automaton
  python3 main.py compare --oracle rnn.json --kind elman --wfa run/wfa.json --k 2
"""


@dataclass
class RunConfig:
    """
    Settings of one CLI run (flags merged over config.json)

    Attributes:
        oracle_path: Oracle file
        kind: Oracle file kind (table, elman or wfa)
        k: Target rank
        n: Truncation size (None: default_n_factor * k)
        noise: Hankel noise specification
        output_dir: Directory for output files (None: stdout only)
        report_formats: Subset of {json, csv}
    """
    oracle_path: Path
    kind: str
    k: Optional[int] = None
    n: Optional[int] = None
    noise: NoiseSpec = field(default_factory=NoiseSpec)
    output_dir: Optional[Path] = None
    report_formats: List[str] = field(default_factory=lambda: list(KNOWN_FORMATS))
    tolerances: Tolerances = field(default_factory=Tolerances)
    probabilistic: bool = False
    table_policy: TablePolicy = TablePolicy.ZERO
    toeplitz_from: str = 'perturbed'
    max_n: Optional[int] = None
    singular_value_count: int = 32
    wfa_path: Optional[Path] = None
    rank_tolerance: Optional[float] = None
    horizon: Optional[int] = None
    norm_size: Optional[int] = None

    def load_oracle(self) -> SequenceOracle:
        try:
            return load_oracle(self.oracle_path, self.kind, self.table_policy, self.probabilistic)
        except ValueError as e:
            # JSON syntax errors
            raise ConfigError(f"{self.oracle_path}: {e}") from e


def _add_common_arguments(parser: argparse.ArgumentParser) -> None:
    parser.add_argument('--oracle', required=True, help='Oracle file (JSON)')
    parser.add_argument('--kind', required=True, choices=ORACLE_KINDS, help='Oracle file kind')
    parser.add_argument('--k', type=int, default=None, help='Target number of states')
    parser.add_argument('--n', type=int, default=None,
                        help='Truncation size, n > k (default: 8k, limited by the oracle horizon)')
    parser.add_argument('--out', default=None, help='Output directory')
    parser.add_argument('--format', default=None,
                        help='Report formats, comma separated subset of json,csv (default: config.json)')
    parser.add_argument('--config', default='config.json', help='Settings file (default: config.json)')
    parser.add_argument('--probabilistic', action='store_true',
                        help='Declare that a table or wfa oracle sums to one (enables tail bounds)')
    parser.add_argument('--table-policy', default='zero', choices=[p.value for p in TablePolicy],
                        help='Table values beyond the end: zero or error (default: zero)')
    verbosity = parser.add_mutually_exclusive_group()
    verbosity.add_argument('--verbose', '-v', action='store_true', help='Debug logging')
    verbosity.add_argument('--quiet', '-q', action='store_true', help='Warnings and errors only')


def build_parser() -> argparse.ArgumentParser:
    """Argument parser with the approximate, spectrum and compare commands"""
    parser = argparse.ArgumentParser(
        description='Spectral-norm rank-k Hankel approximation and automaton extraction',
        formatter_class=argparse.RawDescriptionHelpFormatter,
        epilog=EPILOG
    )
    commands = parser.add_subparsers(dest='command', required=True)

    approximate = commands.add_parser(
        'approximate', help='Rank-k approximation, automaton extraction and certificates',
        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=EPILOG)
    _add_common_arguments(approximate)
    approximate.add_argument('--noise-p', type=float, default=None,
                             help='Noise decay exponent p >= 2 (enables noise, default 2)')
    approximate.add_argument('--noise-seed', type=int, default=None,
                             help='Noise generator seed (enables noise, default 0)')
    approximate.add_argument('--no-noise', action='store_true', help='Disable noise (default)')
    approximate.add_argument('--noise-truncated', action='store_true',
                             help='Perturb only the first n anti-diagonals')
    approximate.add_argument('--toeplitz', default='perturbed', choices=['perturbed', 'clean'],
                             help='Sequence the Toeplitz block is built from (default: perturbed)')
    approximate.add_argument('--max-n', type=int, default=None,
                             help='Double n up to this size while the kept-pole count differs from k')

    spectrum = commands.add_parser(
        'spectrum', help='Singular values of the truncated Hankel block (CSV)',
        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=EPILOG)
    _add_common_arguments(spectrum)
    spectrum.add_argument('--tolerance', type=float, default=None,
                          help='Report the smallest k with sigma_k < TOLERANCE')

    compare = commands.add_parser(
        'compare', help='Error report between an oracle and an automaton',
        formatter_class=argparse.RawDescriptionHelpFormatter, epilog=EPILOG)
    _add_common_arguments(compare)
    compare.add_argument('--wfa', required=True, help='Automaton file (JSON)')
    compare.add_argument('--horizon', type=int, default=None, help='Last index of the l2 sum')
    compare.add_argument('--M', type=int, default=None,
                         help='Block size of the norm estimate (default: adaptive)')
    return parser


def _parse_formats(text: Optional[str], config: dict) -> List[str]:
    if text is None:
        formats = config.get('output', {}).get('formats', list(KNOWN_FORMATS))
    else:
        formats = [item.strip() for item in text.split(',') if item.strip()]
    unknown = [fmt for fmt in formats if fmt not in KNOWN_FORMATS]
    if not formats or unknown:
        raise ConfigError(f"--format must be a subset of {','.join(KNOWN_FORMATS)} (got {text!r})")
    return formats


def build_run_config(args: argparse.Namespace) -> RunConfig:
    """
    Validate flags and settings file into a RunConfig

    Args:
        args: Parsed command line

    Returns:
        RunConfig
    """
    valid, config = validate_config(args.config)
    if not valid:
        raise ConfigError(f"invalid settings file {args.config}")
    tolerances = Tolerances.from_config(config)

    oracle_path = Path(args.oracle)
    if not oracle_path.is_file():
        raise ConfigError(f"oracle file not found: {oracle_path}")

    if args.k is not None and args.k < 1:
        raise ConfigError(f"--k must be at least 1 (got {args.k})")
    if args.n is not None and args.n < 1:
        raise ConfigError(f"--n must be at least 1 (got {args.n})")
    if args.k is not None and args.n is not None and args.n <= args.k:
        raise ConfigError(f"the truncation size must exceed the rank: n > k required "
                          f"(got n={args.n}, k={args.k})")

    run = RunConfig(
        oracle_path=oracle_path,
        kind=args.kind,
        k=args.k,
        n=args.n,
        output_dir=Path(args.out) if args.out else None,
        report_formats=_parse_formats(args.format, config),
        tolerances=tolerances,
        probabilistic=args.probabilistic,
        table_policy=TablePolicy(args.table_policy),
        singular_value_count=config.get('output', {}).get('singular_values', 32),
    )

    if args.command == 'approximate':
        if args.k is None:
            raise ConfigError("approximate needs --k")
        enabled = not args.no_noise and (args.noise_p is not None or args.noise_seed is not None)
        p = args.noise_p if args.noise_p is not None else 2.0
        if enabled and p < 2:
            raise ConfigError(f"--noise-p must be at least 2 (got {p})")
        seed = args.noise_seed if args.noise_seed is not None else 0
        if seed < 0:
            raise ConfigError(f"--noise-seed must be non-negative (got {seed})")
        run.noise = NoiseSpec(p=p, seed=seed, enabled=enabled, full_block=not args.noise_truncated)
        run.toeplitz_from = args.toeplitz
        if args.max_n is not None:
            if args.max_n <= args.k:
                raise ConfigError(f"--max-n must exceed k (got {args.max_n})")
            run.max_n = args.max_n
    elif args.command == 'spectrum':
        if args.n is None and args.k is None:
            raise ConfigError("spectrum needs --n (or --k for the default n = 8k)")
        if args.tolerance is not None and args.tolerance <= 0:
            raise ConfigError(f"--tolerance must be positive (got {args.tolerance})")
        run.rank_tolerance = args.tolerance
    elif args.command == 'compare':
        wfa_path = Path(args.wfa)
        if not wfa_path.is_file():
            raise ConfigError(f"automaton file not found: {wfa_path}")
        if args.horizon is not None and args.horizon < 0:
            raise ConfigError(f"--horizon must be non-negative (got {args.horizon})")
        if args.M is not None and args.M < 1:
            raise ConfigError(f"--M must be at least 1 (got {args.M})")
        run.wfa_path = wfa_path
        run.horizon = args.horizon
        run.norm_size = args.M

    if run.output_dir is not None:
        run.output_dir.mkdir(parents=True, exist_ok=True)
    return run


def _truncation_size(run: RunConfig, oracle: SequenceOracle) -> int:
    n = run.n if run.n is not None else default_truncation(oracle, run.k, run.tolerances)
    if run.k is not None and n <= run.k:
        raise ConfigError(f"the truncation size must exceed the rank: n > k required "
                          f"(got n={n}, k={run.k})")
    return n


def _tail(oracle: SequenceOracle, n: int) -> Optional[float]:
    """Tail mass beyond index n (the last oracle index when the horizon is shorter)"""
    if not oracle.probabilistic:
        return None
    index = n if math.isinf(oracle.horizon_hint) else min(n, int(oracle.horizon_hint))
    return tail_mass(oracle, index)


def _write_report(run: RunConfig, report: ErrorReport) -> List[Path]:
    written = []
    if run.output_dir is None:
        return written
    if 'json' in run.report_formats:
        path = run.output_dir / 'report.json'
        report.to_json(path)
        written.append(path)
    if 'csv' in run.report_formats:
        path = run.output_dir / 'report.csv'
        report.to_csv(path)
        written.append(path)
    return written


def cmd_approximate(run: RunConfig) -> int:
    """
    Approximate, extract the automaton, certify and write the outputs

    Args:
        run: Validated configuration

    Returns:
        Exit status
    """
    oracle = run.load_oracle()
    n = _truncation_size(run, oracle)
    if run.max_n is not None:
        result = refine_truncation(oracle, run.k, n, run.noise, run.max_n,
                                   run.toeplitz_from, run.tolerances)
    else:
        result = aak_approximate(oracle, run.k, n, run.noise, run.toeplitz_from, run.tolerances)

    states = result.symbol.degree
    if states != run.k:
        logger.warning(f"Extracting a {states}-state automaton (requested {run.k})")
    wfa = spectral_extract(recover_window(result.symbol, states), run.tolerances)

    clean_sigmas = singular_values(result.truncation)
    warnings = list(result.warnings)
    try:
        l2 = l2_distance(oracle, wfa, tolerances=run.tolerances)
    except UncertifiableTailError as e:
        logger.warning(f"l2 distance not reported: {e}")
        warnings.append(f"l2 distance not reported: {e}")
        l2 = None
    report = build_report(
        sigma_k_n=float(clean_sigmas[run.k]),
        tail=_tail(oracle, result.n),
        noise=result.noise if run.noise.enabled else None,
        l2=l2,
        estimate=spectral_estimate(oracle, result.approximant_stream(), tolerances=run.tolerances),
        deviation=sigma_deviation(result.perturbed, result.truncation, run.k) if run.noise.enabled else None,
        warnings=warnings,
    )

    written = []
    if run.output_dir is not None:
        out = run.output_dir
        wfa.save(out / 'wfa.json')
        write_json(out / 'symbol.json', result.symbol.to_dict())
        written += [out / 'wfa.json', out / 'symbol.json']
        if 'json' in run.report_formats:
            write_json(out / 'approximation.json', result.to_dict())
            written.append(out / 'approximation.json')
        written += _write_report(run, report)
        count = min(result.n, run.singular_value_count)
        write_csv(out / 'singular_values.csv', ('j', 'sigma'),
                  [(j, float(s)) for j, s in enumerate(result.schmidt.spectrum[:count])])
        written.append(out / 'singular_values.csv')
        logger.info(f"✅ Wrote {len(written)} file(s) to {out}")

    print(f"k={run.k} n={result.n} {report.summary()}"
          + (f" -> {', '.join(str(p) for p in written)}" if written else ""))
    if report.violation is not None:
        raise BoundViolationError(f"{report.violation} (k={run.k}, n={result.n})")
    return EXIT_OK


def cmd_spectrum(run: RunConfig) -> int:
    """
    Print (j, sigma_j^n) as CSV

    Args:
        run: Validated configuration

    Returns:
        Exit status
    """
    oracle = run.load_oracle()
    n = _truncation_size(run, oracle)
    block = build_truncation(oracle, n)
    sigmas = singular_values(block)
    rows = [(j, float(s)) for j, s in enumerate(sigmas)]

    print("j,sigma")
    for j, sigma in rows:
        print(f"{j},{sigma:.17g}")

    selected = None
    if run.rank_tolerance is not None:
        selected = select_rank(block, run.rank_tolerance)
        logger.info(f"Smallest k with sigma_k < {run.rank_tolerance:g}: {selected}")

    if run.output_dir is not None:
        write_csv(run.output_dir / 'spectrum.csv', ('j', 'sigma'), rows)
        if 'json' in run.report_formats:
            write_json(run.output_dir / 'spectrum.json',
                       {'n': n, 'singular_values': sigmas, 'tolerance': run.rank_tolerance,
                        'selected_rank': selected})
    return EXIT_OK


def cmd_compare(run: RunConfig) -> int:
    """
    Error report between the oracle and a given automaton

    Args:
        run: Validated configuration (wfa_path set)

    Returns:
        Exit status
    """
    oracle = run.load_oracle()
    try:
        wfa = load_wfa(run.wfa_path)
    except ValueError as e:
        raise ConfigError(f"{run.wfa_path}: {e}") from e

    warnings = []
    try:
        l2 = l2_distance(oracle, wfa, run.horizon, run.tolerances)
    except UncertifiableTailError as e:
        logger.warning(f"l2 distance not reported: {e}")
        warnings.append(f"l2 distance not reported: {e}")
        l2 = None
    estimate = spectral_estimate(oracle, wfa_coefficient_stream(wfa), run.norm_size, run.tolerances)

    sigma_k_n = tail = None
    if run.k is not None:
        n = _truncation_size(run, oracle)
        sigma_k_n = float(singular_values(build_truncation(oracle, n))[run.k])
        tail = _tail(oracle, n)
    report = build_report(sigma_k_n=sigma_k_n, tail=tail, l2=l2, estimate=estimate, warnings=warnings)

    written = _write_report(run, report)
    if run.output_dir is None:
        sys.stdout.write(dumps_json(report.to_dict()))
    print(report.summary() + (f" -> {', '.join(str(p) for p in written)}" if written else ""))
    return EXIT_OK


COMMANDS = {
    'approximate': cmd_approximate,
    'spectrum': cmd_spectrum,
    'compare': cmd_compare,
}


def main(argv: Optional[Sequence[str]] = None) -> int:
    """
    Main entry point

    Args:
        argv: Command line without the program name (default: sys.argv[1:])

    Returns:
        Exit status (0 ok, 1 pipeline error, 2 configuration error)
    """
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as e:
        return e.code if isinstance(e.code, int) else EXIT_CONFIG

    level = logging.DEBUG if args.verbose else logging.WARNING if args.quiet else logging.INFO
    setup_logging(level=level)
    logging.getLogger().setLevel(level)

    try:
        run = build_run_config(args)
    except (ConfigError, ValueError) as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG

    try:
        return COMMANDS[args.command](run)
    except ConfigError as e:
        logger.error(f"❌ {e}")
        print(f"error: {e}", file=sys.stderr)
        return EXIT_CONFIG
    except (AakError, ValueError, ArithmeticError) as e:
        logger.error(f"❌ {type(e).__name__}: {e}")
        print(f"error: {type(e).__name__}: {e}", file=sys.stderr)
        return EXIT_PIPELINE


if __name__ == '__main__':
    sys.exit(main())
