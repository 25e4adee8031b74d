"""
Unit tests for oracle.py
Run with: pytest test_oracle.py -v
"""

import json
import math

import numpy as np
import pytest

from errors import ConfigError, MassError, OutOfHorizonError
from oracle import (
    ElmanOracle,
    TableOracle,
    TablePolicy,
    check_mass,
    even_geometric_oracle,
    geometric_oracle,
    load_elman,
    load_oracle,
    load_table,
    oracle_from_table,
    oracle_from_wfa,
    zero_oracle,
)
from wfa import Wfa


def random_elman(seed: int, h: int = 4) -> ElmanOracle:
    rng = np.random.default_rng(seed)
    return ElmanOracle(
        W=rng.normal(scale=0.5, size=(h, h)),
        U_in=rng.normal(size=h),
        b=rng.normal(size=h),
        h0=rng.normal(size=h),
        w_out=rng.normal(size=(2, h)),
    )


class TestFixtureOracles:
    """Test closed-form oracles"""

    def test_geometric(self):
        """f(3) = (1 - a) a^3 = 1/16 for a = 1/2"""
        assert geometric_oracle(0.5).eval(3) == 1.0 / 16.0

    def test_even_geometric(self):
        """f(2) = 8/81, odd indices vanish"""
        oracle = even_geometric_oracle()
        assert oracle.eval(2) == pytest.approx(8.0 / 81.0, rel=1e-15)
        assert oracle.eval(0) == pytest.approx(8.0 / 9.0, rel=1e-15)
        assert oracle.eval(3) == 0.0

    def test_zero(self):
        """Zero oracle is not probabilistic"""
        oracle = zero_oracle()
        assert oracle.eval(10) == 0.0
        assert not oracle.probabilistic

    def test_invalid_ratio(self):
        """Ratios outside [0, 1) are rejected"""
        with pytest.raises(ValueError):
            geometric_oracle(1.0)
        with pytest.raises(ValueError):
            even_geometric_oracle(-0.1)

    def test_negative_index(self):
        """Negative indices are rejected"""
        with pytest.raises(ValueError):
            geometric_oracle(0.5).eval(-1)

    def test_callable(self):
        """oracle(n) is oracle.eval(n)"""
        oracle = geometric_oracle(0.25)
        assert oracle(2) == oracle.eval(2)

    def test_infinite_horizon(self):
        """Analytic oracles have no horizon"""
        assert math.isinf(geometric_oracle(0.5).horizon_hint)


class TestTableOracle:
    """Test table lookups and beyond-table policies"""

    def test_zero_policy(self):
        """Values past the table are zero"""
        assert oracle_from_table([1.0]).eval(5) == 0.0

    def test_lookup(self):
        """Values inside the table are returned"""
        assert oracle_from_table([0.5, 0.25]).eval(1) == 0.25

    def test_error_policy(self):
        """Evaluation past the table raises under the error policy"""
        oracle = oracle_from_table([0.5, 0.25], TablePolicy.ERROR)
        assert oracle.horizon_hint == 1
        with pytest.raises(OutOfHorizonError) as info:
            oracle.eval(2)
        assert info.value.index == 2
        assert info.value.horizon == 1

    def test_non_finite_rejected(self):
        """Tables must be finite"""
        with pytest.raises(ValueError):
            TableOracle([0.5, float('nan')])

    def test_immutable(self):
        """Table values cannot be modified"""
        oracle = TableOracle([0.5, 0.25])
        with pytest.raises(ValueError):
            oracle.values[0] = 1.0

    def test_prefix(self):
        """prefix returns the first values with zero padding"""
        np.testing.assert_array_equal(TableOracle([0.5, 0.25]).prefix(4), [0.5, 0.25, 0.0, 0.0])


class TestWfaOracle:
    """Test automaton oracles"""

    def test_scalar(self):
        """alpha=[1], A=[1/2], beta=[1]"""
        oracle = oracle_from_wfa(Wfa(1, [1.0], [[0.5]], [1.0]))
        assert oracle.eval(0) == 1.0
        assert oracle.eval(3) == 0.125

    def test_two_state_realisation(self):
        """Two-state automaton realising f(2m) = (8/9) 9^-m"""
        root = math.sqrt(8.0 / 9.0)
        oracle = oracle_from_wfa(Wfa(2, [root, 0.0], [[0.0, 1.0 / 3.0], [1.0 / 3.0, 0.0]], [root, 0.0]))
        reference = even_geometric_oracle()
        for n in range(9):
            assert abs(oracle.eval(n) - reference.eval(n)) < 1e-15

    def test_prefix_matches_eval(self):
        """prefix gives the same bits as eval"""
        oracle = oracle_from_wfa(Wfa(2, [1.0, -0.5], [[0.3, 0.2], [-0.1, 0.4]], [0.2, 1.0]))
        values = oracle.prefix(12)
        for n in range(12):
            assert values[n] == oracle.eval(n)


class TestElmanOracle:
    """Test the Elman language model oracle"""

    def test_zero_weights(self):
        """softmax(0, 0) = (1/2, 1/2), so f(1) = 1/4"""
        oracle = ElmanOracle(np.zeros((1, 1)), np.zeros(1), np.zeros(1), np.zeros(1), np.zeros((2, 1)))
        assert oracle.eval(0) == 0.5
        assert oracle.eval(1) == 0.25

    def test_purity(self):
        """Repeated evaluations are bit-identical"""
        oracle = random_elman(3)
        assert oracle.eval(7) == oracle.eval(7)

    def test_prefix_matches_eval(self):
        """Single-pass prefix equals eval bit for bit"""
        oracle = random_elman(5)
        values = oracle.prefix(15)
        for n in range(15):
            assert values[n] == oracle.eval(n)

    def test_values_are_probabilities(self):
        """0 < f(n) < 1 and partial sums stay below one"""
        oracle = random_elman(11)
        values = oracle.prefix(40)
        assert np.all(values > 0) and np.all(values < 1)
        partial = check_mass(oracle, 199)
        assert np.all(np.diff(partial) >= 0)
        assert partial[-1] <= 1.0 + 1e-12

    def test_shape_mismatch(self):
        """Inconsistent weight shapes are rejected"""
        with pytest.raises(ValueError):
            ElmanOracle(np.zeros((2, 2)), np.zeros(2), np.zeros(2), np.zeros(2), np.zeros((2, 3)))


class TestCheckMass:
    """Test probabilistic invariants"""

    def test_geometric_mass(self):
        """Partial sums of a distribution approach one from below"""
        partial = check_mass(geometric_oracle(0.5), 50)
        assert partial[0] == 0.5
        assert abs(partial[-1] - 1.0) < 1e-12

    def test_excess_mass(self):
        """Partial sums above one are rejected"""
        with pytest.raises(MassError):
            check_mass(TableOracle([0.7, 0.5], probabilistic=True), 1)

    def test_negative_mass(self):
        """Negative values are rejected"""
        with pytest.raises(MassError):
            check_mass(TableOracle([0.5, -0.1], probabilistic=True), 1)


class TestLoaders:
    """Test JSON oracle files"""

    def test_load_table(self, tmp_path):
        """Table file is a JSON array"""
        path = tmp_path / 'table.json'
        path.write_text(json.dumps([0.888888, 0.0, 0.098765]))
        oracle = load_table(path)
        assert oracle.eval(2) == 0.098765
        assert oracle.eval(3) == 0.0

    def test_load_table_rejects_object(self, tmp_path):
        """Non-array table files are configuration errors"""
        path = tmp_path / 'table.json'
        path.write_text(json.dumps({'values': [1.0]}))
        with pytest.raises(ConfigError):
            load_table(path)

    def test_load_elman_round_trip(self, tmp_path):
        """Weights written by to_dict load back to the same oracle"""
        oracle = random_elman(2, h=3)
        path = tmp_path / 'elman.json'
        path.write_text(json.dumps(oracle.to_dict()))
        loaded = load_elman(path)
        for n in range(10):
            assert loaded.eval(n) == oracle.eval(n)

    def test_load_elman_missing_keys(self, tmp_path):
        """Missing weights are configuration errors"""
        path = tmp_path / 'elman.json'
        path.write_text(json.dumps({'h': 1, 'W': [[0.0]]}))
        with pytest.raises(ConfigError):
            load_elman(path)

    def test_load_elman_wrong_size(self, tmp_path):
        """Declared hidden size must match the weights"""
        data = random_elman(2, h=3).to_dict()
        data['h'] = 4
        path = tmp_path / 'elman.json'
        path.write_text(json.dumps(data))
        with pytest.raises(ConfigError):
            load_elman(path)

    def test_load_oracle_kinds(self, tmp_path):
        """load_oracle dispatches on the kind"""
        path = tmp_path / 'wfa.json'
        path.write_text(json.dumps({'k': 1, 'alpha': [1.0], 'A': [[0.5]], 'beta': [1.0]}))
        assert load_oracle(path, 'wfa').eval(2) == 0.25
        with pytest.raises(ConfigError):
            load_oracle(path, 'table')
        with pytest.raises(ConfigError):
            load_oracle(path, 'transformer')


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
