# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_io.py
# Project: helpers
# Author: The abc-towers developers
# Created: Monday, 25th October 2021 9:40:12 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 25th October 2021 1:15:48 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import numpy as np
import pytest

from abc_towers.construction.scheduler import CertEntry
from abc_towers.exceptions import TowerIOError, TowerMissingDependency
from abc_towers.helpers import io
from abc_towers.helpers.io import (decode_rational, dump_json, dumps_json, encode,
                                   ensure_directory, format_table, load_json, make_table,
                                   write_csv)


class TestEncode(object):

    @pytest.mark.parametrize('value, exp',
                             [(F(1, 3), {'num': '1', 'den': '3'}),
                              (F(-5, 2), {'num': '-5', 'den': '2'}),
                              (2 ** 60, str(2 ** 60)),
                              (2 ** 53, 2 ** 53),
                              (np.int64(3), 3),
                              (np.bool_(True), True),
                              (None, None),
                              ('p/q', 'p/q')])
    def test_scalars(self, value, exp):
        assert encode(value) == exp

    def test_nested(self):
        out = encode({1: [F(1, 2), True, (0.5, None)], 'set': {3, 1}})
        assert out == {'1': [{'num': '1', 'den': '2'}, True, [0.5, None]], 'set': [1, 3]}

    def test_as_dict(self):
        out = encode(CertEntry(1, 'A', 0, 0, '=='))
        assert out['condition'] == 'A'
        assert out['holds'] is True

    def test_dumps_sorted(self):
        text = dumps_json({'b': 1, 'a': F(2, 3)})
        assert text.endswith('\n')
        assert text.index('"a"') < text.index('"b"')
        assert dumps_json({'a': F(2, 3), 'b': 1}) == text


class TestDecode(object):

    @pytest.mark.parametrize('value, exp',
                             [({'num': '2', 'den': '6'}, F(1, 3)),
                              ('2/3', F(2, 3)),
                              (5, F(5))])
    def test_values(self, value, exp):
        assert decode_rational(value) == exp

    @pytest.mark.parametrize('value, match',
                             [(0.5, 'not an exact rational'),
                              ({'num': '1'}, 'exactly the keys')])
    def test_invalid(self, value, match):
        with pytest.raises(TowerIOError, match=match):
            decode_rational(value)

    def test_roundtrip_large(self):
        x = F(3 ** 80, 7 ** 40)
        assert decode_rational(encode(x)) == x


class TestFiles(object):

    def test_dump_load(self, tmp_path):
        path = dump_json({'x': F(1, 7), 'n': 2 ** 70}, tmp_path / 'report.json')
        data = load_json(path)
        assert decode_rational(data['x']) == F(1, 7)
        assert int(data['n']) == 2 ** 70

    def test_dump_missing_dir(self, tmp_path):
        with pytest.raises(TowerIOError, match='Failed to write'):
            dump_json({}, tmp_path / 'missing' / 'report.json')

    def test_load_errors(self, tmp_path):
        with pytest.raises(TowerIOError, match='Failed to read'):
            load_json(tmp_path / 'absent.json')
        bad = tmp_path / 'bad.json'
        bad.write_text('{not json')
        with pytest.raises(TowerIOError, match='Failed to read'):
            load_json(bad)

    def test_ensure_directory(self, tmp_path):
        assert ensure_directory(tmp_path) == tmp_path
        with pytest.raises(TowerIOError, match='does not exist'):
            ensure_directory(tmp_path / 'out')
        assert ensure_directory(tmp_path / 'out', create=True).is_dir()


class TestTables(object):

    rows = [{'stage': 1, 'lhs': F(1, 3), 'holds': True},
            {'stage': 2, 'lhs': 4, 'holds': False}]

    def test_make_table(self):
        table = make_table(self.rows)
        assert table.colnames == ['stage', 'lhs', 'holds']
        assert list(table['lhs']) == ['1/3', '4']
        assert list(table['holds']) == ['True', 'False']
        assert len(make_table([], ['stage'])) == 0

    def test_write_csv(self, tmp_path):
        path = write_csv(self.rows, tmp_path / 'rows.csv', ['stage', 'lhs'])
        lines = path.read_text().splitlines()
        assert lines[0] == 'stage,lhs'
        assert lines[1] == '1,1/3'

    def test_format_table(self):
        text = format_table(self.rows, ['stage', 'lhs'])
        assert 'lhs' in text.splitlines()[0]
        assert '1/3' in text

    def test_format_table_no_tabulate(self, monkeypatch):
        monkeypatch.setattr(io, 'tabulate', None)
        with pytest.raises(TowerMissingDependency, match='tabulate'):
            format_table(self.rows)
