import enum
import json
import os
import unittest

import numpy as np

from cvqed.codecs.report_writers import CsvWriter, JsonWriter, TextWriter, get_writer, to_jsonable
from cvqed.codecs.state_coder import StateCoder
from cvqed.common.errors import ConfigError
from cvqed.gaussian_sim import displace, groundstate, vacuum
from cvqed.lattice import LatticeConfig


class Color(enum.Enum):
    RED = "red"


class TestStateCoder(unittest.TestCase):

    def _read(self, filename):
        with open(os.path.join(os.path.dirname(__file__), "test_data", filename), "r") as f:
            return f.read()

    def test_encode_vacuum_matches_golden(self):
        self.assertEqual(StateCoder.encode_state(vacuum(1)), self._read("vacuum_state.txt"))

    def test_decode_golden(self):
        state = StateCoder.decode_state(self._read("vacuum_state.txt"))
        np.testing.assert_array_equal(state.cov, 0.5 * np.identity(2))
        np.testing.assert_array_equal(state.mean, np.zeros(2))

    def test_groundstate_snapshot_is_exact(self):
        state = displace(groundstate(LatticeConfig(1, 2, 0.8)), 1, 0.3 - 0.2j)
        decoded = StateCoder.decode_state(StateCoder.encode_state(state))
        np.testing.assert_array_equal(decoded.cov, state.cov)
        np.testing.assert_array_equal(decoded.mean, state.mean)

    def test_missing_header(self):
        with self.assertRaises(ConfigError):
            StateCoder.decode_state("mean\n0.0 0.0\n")

    def test_wrong_section_names(self):
        with self.assertRaises(ConfigError):
            StateCoder.decode_state("# gaussian 1\nmeans\n0.0 0.0\ncov\n0.5 0.0\n0.0 0.5\n")

    def test_truncated_covariance(self):
        with self.assertRaises(ConfigError):
            StateCoder.decode_state("# gaussian 1\nmean\n0.0 0.0\ncov\n0.5 0.0\n")


class TestReportWriters(unittest.TestCase):

    rows = [
        {"name": "delta_m", "value": -1.36, "flags": "matches-reference"},
        {"name": "pi0", "value": 0.25, "flags": ""},
    ]

    def test_to_jsonable(self):
        value = to_jsonable({"a": np.array([1, 2]), "b": 1 + 2j, "c": np.float64(0.5), "d": Color.RED, 3: np.bool_(True)})
        self.assertEqual(value, {"a": [1, 2], "b": [1.0, 2.0], "c": 0.5, "d": "red", "3": True})

    def test_json_document_is_sorted(self):
        text = JsonWriter().format_document({"z": 1, "a": {"y": np.int64(2), "b": None}})
        self.assertEqual(json.loads(text), {"a": {"b": None, "y": 2}, "z": 1})
        self.assertLess(text.index('"a"'), text.index('"z"'))

    def test_json_is_reproducible(self):
        document = {"value": 0.1 + 0.2, "rows": self.rows}
        self.assertEqual(JsonWriter().format_document(document), JsonWriter().format_document(dict(document)))

    def test_csv_rows(self):
        text = CsvWriter().format_rows(self.rows)
        self.assertEqual(
            text.splitlines(),
            ["name,value,flags", "delta_m,-1.36,matches-reference", "pi0,0.25,"],
        )

    def test_csv_document_flattens(self):
        text = CsvWriter().format_document({"config": {"lattice": {"dim": 1}}, "seed": 0})
        self.assertEqual(text.splitlines(), ["key,value", "config.lattice.dim,1", "seed,0"])

    def test_text_rows_are_aligned(self):
        lines = TextWriter().format_rows(self.rows).splitlines()
        self.assertEqual(len(lines), 3)
        self.assertEqual(lines[0].index("value"), lines[1].index("-1.36"))

    def test_empty_rows(self):
        self.assertEqual(CsvWriter().format_rows([]), "")
        self.assertEqual(TextWriter().format_rows([]), "")

    def test_get_writer(self):
        self.assertEqual(get_writer("csv").extension, "csv")
        self.assertEqual(get_writer("text").extension, "txt")
        with self.assertRaises(ConfigError):
            get_writer("yaml")


if __name__ == "__main__":
    unittest.main()
