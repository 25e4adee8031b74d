"""
Unit tests for utils.py serialisation helpers
Run with: pytest test_utils.py -v
"""

import json
import logging

import numpy as np
import pytest

from utils import dumps_json, format_float, read_json, setup_logging, to_builtin, write_csv, write_json


class TestToBuiltin:
    """Test conversion to JSON-serialisable objects"""

    def test_numpy_scalars(self):
        """numpy scalars become Python numbers"""
        assert to_builtin(np.float64(0.5)) == 0.5
        assert type(to_builtin(np.float64(0.5))) is float
        assert type(to_builtin(np.int64(3))) is int
        assert to_builtin(np.bool_(True)) is True

    def test_arrays_and_tuples(self):
        """Arrays and tuples become lists"""
        assert to_builtin(np.array([[1.0, 2.0], [3.0, 4.0]])) == [[1.0, 2.0], [3.0, 4.0]]
        assert to_builtin((1, 2)) == [1, 2]

    def test_complex(self):
        """Complex numbers become [re, im]"""
        assert to_builtin(complex(1.0, -2.0)) == [1.0, -2.0]
        assert to_builtin(np.complex128(0.5 + 0.25j)) == [0.5, 0.25]

    def test_non_finite(self):
        """inf and nan become None"""
        assert to_builtin(float('inf')) is None
        assert to_builtin(np.nan) is None

    def test_nested(self):
        """Nested dictionaries are converted recursively"""
        data = to_builtin({'a': {'b': np.arange(3)}, 1: None})
        assert data == {'a': {'b': [0, 1, 2]}, '1': None}


class TestJson:
    """Test deterministic JSON output"""

    def test_sorted_and_terminated(self):
        """Keys are sorted and the text ends with a newline"""
        text = dumps_json({'b': 1, 'a': 2})
        assert text.index('"a"') < text.index('"b"')
        assert text.endswith("\n")

    def test_float_round_trip(self, tmp_path):
        """Floats survive a write/read cycle bit-exactly"""
        values = [1.0 / 3.0, 8.0 / 729.0, 2.0 ** -60]
        path = write_json(tmp_path / 'values.json', values)
        assert read_json(path) == values

    def test_identical_bytes(self, tmp_path):
        """Same data gives the same bytes"""
        data = {'x': np.linspace(0, 1, 5), 'y': {'z': 0.1}}
        first = write_json(tmp_path / 'a.json', data).read_bytes()
        second = write_json(tmp_path / 'b.json', data).read_bytes()
        assert first == second
        assert json.loads(first)['y']['z'] == 0.1


class TestCsv:
    """Test CSV output"""

    def test_format_float(self):
        """17 significant digits"""
        assert format_float(0.1) == "0.10000000000000001"
        assert float(format_float(1.0 / 3.0)) == 1.0 / 3.0

    def test_write_csv(self, tmp_path):
        """Header first, floats formatted, other values verbatim"""
        path = write_csv(tmp_path / 'out.csv', ('j', 'sigma'), [(0, 0.9), (1, np.float64(0.1))])
        lines = path.read_text().splitlines()
        assert lines[0] == "j,sigma"
        assert lines[1] == "0,0.90000000000000002"
        assert lines[2] == "1,0.10000000000000001"


class TestSetupLogging:
    """Test logging setup"""

    def test_does_not_raise(self):
        """setup_logging can be called repeatedly"""
        setup_logging(level=logging.DEBUG)
        setup_logging()


if __name__ == '__main__':
    pytest.main([__file__, '-v'])
