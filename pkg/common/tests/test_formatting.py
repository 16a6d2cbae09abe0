"""Tests for artifact writers."""
import json
import os
import tempfile

import numpy as np
from django.test import SimpleTestCase

from common.formatting import append_csv_row, dumps_json, fmt_cell, fmt_float, read_csv_rows, write_csv


class FormattingTest(SimpleTestCase):

    def setUp(self):
        self.tmp = tempfile.TemporaryDirectory()
        self.addCleanup(self.tmp.cleanup)

    def test_float_round_trips(self):
        x = 0.1 + 0.2
        self.assertEqual(float(fmt_float(x)), x)
        self.assertEqual(fmt_float(None), '')
        self.assertEqual(fmt_cell(np.float64(0.5)), '0.5')

    def test_json_handles_numpy(self):
        payload = json.loads(dumps_json({'a': np.int64(3), 'b': np.arange(2.0)}))
        self.assertEqual(payload, {'a': 3, 'b': [0.0, 1.0]})

    def test_append_writes_header_once(self):
        path = os.path.join(self.tmp.name, 'nested', 'rows.csv')
        append_csv_row(path, ['a', 'b'], [1, 2.5])
        append_csv_row(path, ['a', 'b'], [2, None])
        rows = read_csv_rows(path)
        self.assertEqual(rows, [{'a': '1', 'b': '2.5'}, {'a': '2', 'b': ''}])

    def test_write_csv_replaces(self):
        path = os.path.join(self.tmp.name, 't.csv')
        write_csv(path, ['x'], [[1], [2]])
        write_csv(path, ['x'], [[3]])
        self.assertEqual(read_csv_rows(path), [{'x': '3'}])

    def test_missing_csv_reads_empty(self):
        self.assertEqual(read_csv_rows(os.path.join(self.tmp.name, 'none.csv')), [])
