"""
Command line tests
Run with: pytest test_main.py -v
"""

import json
from pathlib import Path

import pytest

from main import EXIT_CONFIG, EXIT_OK, build_parser, main
from oracle import even_geometric_oracle

REPO_CONFIG = str(Path(__file__).parent / 'config.json')


@pytest.fixture
def table_file(tmp_path):
    """Sixty values of f(2m) = (8/9) 9^-m"""
    path = tmp_path / 'table.json'
    path.write_text(json.dumps(even_geometric_oracle().prefix(60).tolist()))
    return str(path)


@pytest.fixture
def wfa_file(tmp_path):
    """One-state automaton f(n) = 2^-n"""
    path = tmp_path / 'wfa.json'
    path.write_text(json.dumps({'k': 1, 'alpha': [1.0], 'A': [[0.5]], 'beta': [1.0]}))
    return str(path)


def run(*args) -> int:
    return main(list(args) + ['--config', REPO_CONFIG, '--quiet'])


class TestParser:
    """Test argument parsing"""

    def test_commands(self):
        """Three subcommands"""
        parser = build_parser()
        args = parser.parse_args(['spectrum', '--oracle', 'x.json', '--kind', 'table', '--n', '5'])
        assert args.command == 'spectrum' and args.n == 5

    def test_unknown_kind(self, table_file):
        """Invalid choices exit with status 2"""
        assert run('approximate', '--oracle', table_file, '--kind', 'transformer', '--k', '1') == EXIT_CONFIG

    def test_missing_command(self):
        """A command is required"""
        assert main([]) == EXIT_CONFIG


class TestApproximate:
    """Test the approximate command"""

    def test_rank_one(self, table_file, tmp_path, capsys):
        """sigma_1 of the even geometric table is 0.1"""
        out = tmp_path / 'run'
        code = run('approximate', '--oracle', table_file, '--kind', 'table', '--k', '1', '--n', '60',
                   '--probabilistic', '--out', str(out))
        assert code == EXIT_OK
        for name in ('wfa.json', 'symbol.json', 'approximation.json', 'report.json', 'report.csv',
                     'singular_values.csv'):
            assert (out / name).is_file(), name
        report = json.loads((out / 'report.json').read_text())
        assert report['sigma_k_n'] == pytest.approx(0.1, abs=1e-4)
        assert report['spectral_estimate'] == pytest.approx(0.1, abs=1e-4)
        assert report['lower_bound'] - 1e-9 <= report['spectral_estimate'] <= report['upper_bound'] + 1e-9
        assert report['certified'] is True
        wfa = json.loads((out / 'wfa.json').read_text())
        assert wfa['k'] == 1
        assert capsys.readouterr().out.startswith("k=1 n=60")

    def test_rank_not_below_size(self, table_file, tmp_path):
        """n > k is required"""
        assert run('approximate', '--oracle', table_file, '--kind', 'table', '--k', '2', '--n', '2',
                   '--out', str(tmp_path / 'run')) == EXIT_CONFIG

    def test_missing_oracle(self, tmp_path):
        """Oracle file must exist"""
        assert run('approximate', '--oracle', str(tmp_path / 'absent.json'), '--kind', 'table',
                   '--k', '1') == EXIT_CONFIG

    def test_wrong_kind(self, table_file):
        """A table read as an automaton is a configuration error"""
        assert run('approximate', '--oracle', table_file, '--kind', 'wfa', '--k', '1') == EXIT_CONFIG

    def test_bad_noise(self, table_file):
        """Noise exponents below 2 are rejected"""
        assert run('approximate', '--oracle', table_file, '--kind', 'table', '--k', '1',
                   '--noise-p', '1.5') == EXIT_CONFIG

    def test_deterministic(self, table_file, tmp_path):
        """Same seed, same bytes"""
        codes = []
        for i in range(3):
            codes.append(run('approximate', '--oracle', table_file, '--kind', 'table', '--k', '1',
                             '--n', '30', '--probabilistic', '--noise-p', '3', '--noise-seed', '7',
                             '--noise-truncated', '--out', str(tmp_path / f'run{i}')))
        assert codes == [EXIT_OK] * 3
        for name in ('approximation.json', 'report.json', 'symbol.json', 'wfa.json'):
            first = (tmp_path / 'run0' / name).read_bytes()
            assert (tmp_path / 'run1' / name).read_bytes() == first
            assert (tmp_path / 'run2' / name).read_bytes() == first

    def test_rank_two(self, table_file, tmp_path):
        """k=2 on the even geometric table is exact and certified"""
        out = tmp_path / 'run'
        code = run('approximate', '--oracle', table_file, '--kind', 'table', '--k', '2', '--n', '60',
                   '--probabilistic', '--out', str(out))
        assert code == EXIT_OK
        report = json.loads((out / 'report.json').read_text())
        assert report['certified'] is True
        assert report['spectral_estimate'] < 1e-10
        assert json.loads((out / 'wfa.json').read_text())['k'] == 2


class TestSpectrum:
    """Test the spectrum command"""

    def test_csv_output(self, table_file, tmp_path, capsys):
        """j,sigma rows in descending order"""
        out = tmp_path / 'spectrum'
        code = run('spectrum', '--oracle', table_file, '--kind', 'table', '--n', '20',
                   '--tolerance', '0.05', '--out', str(out))
        assert code == EXIT_OK
        lines = capsys.readouterr().out.splitlines()
        assert lines[0] == "j,sigma"
        assert len(lines) == 21
        assert float(lines[1].split(',')[1]) == pytest.approx(0.9, abs=1e-9)
        assert float(lines[2].split(',')[1]) == pytest.approx(0.1, abs=1e-9)
        data = json.loads((out / 'spectrum.json').read_text())
        assert data['selected_rank'] == 2
        assert (out / 'spectrum.csv').is_file()

    def test_needs_size(self, table_file):
        """Either --n or --k"""
        assert run('spectrum', '--oracle', table_file, '--kind', 'table') == EXIT_CONFIG


class TestCompare:
    """Test the compare command"""

    def test_self_comparison(self, wfa_file, tmp_path):
        """An automaton compared with itself"""
        out = tmp_path / 'compare'
        code = run('compare', '--oracle', wfa_file, '--kind', 'wfa', '--wfa', wfa_file, '--out', str(out))
        assert code == EXIT_OK
        report = json.loads((out / 'report.json').read_text())
        assert report['l2_distance'] == 0.0
        assert report['spectral_estimate'] == 0.0

    def test_stdout(self, wfa_file, capsys):
        """Without --out the report goes to stdout"""
        assert run('compare', '--oracle', wfa_file, '--kind', 'wfa', '--wfa', wfa_file) == EXIT_OK
        assert '"l2_distance": 0.0' in capsys.readouterr().out

    def test_missing_automaton(self, wfa_file, tmp_path):
        """Automaton file must exist"""
        assert run('compare', '--oracle', wfa_file, '--kind', 'wfa',
                   '--wfa', str(tmp_path / 'absent.json')) == EXIT_CONFIG


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
