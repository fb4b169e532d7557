# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_fbar.py
# Project: analysis
# Author: The abc-towers developers
# Created: Wednesday, 20th October 2021 10:18:44 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Friday, 29th October 2021 9:12:30 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import numpy as np
import pytest

from abc_towers.analysis.fbar import (LevelPartition, MatchConstants, MatchWitness,
                                      ProductPartition, SymbolName, alignment_bound,
                                      closelevel_probability, fbar_bruteforce, fbar_distance,
                                      ks_criterion_check, lcs, level_partition,
                                      names_from_towers, product_name, verify_match_lemma)
from abc_towers.exceptions import TowerError


def random_names(count, length, alphabet, seed=5):
    rng = np.random.default_rng(seed)
    draw = rng.integers(0, alphabet, size=(count, 2, length))
    return [(a.tolist(), b.tolist()) for a, b in draw]


class TestNames(object):

    def test_symbol_name(self):
        name = SymbolName([3, 1, 2])
        assert len(name) == 3
        assert list(name) == [3, 1, 2]
        assert name[0] == 3

    @pytest.mark.parametrize('symbols, match', [([], 'at least one'), ([1, -1], 'non-negative')])
    def test_symbol_name_invalid(self, symbols, match):
        with pytest.raises(TowerError, match=match):
            SymbolName(symbols)

    def test_witness(self):
        witness = MatchWitness([0, 2], [1, 2])
        assert len(witness) == 2
        assert witness.valid_for([5, 6, 7], [0, 5, 7])
        assert not witness.valid_for([5, 6, 7], [5, 0, 7])

    @pytest.mark.parametrize('k, j, match',
                             [([0, 1], [0], 'differ in length'),
                              ([1, 1], [0, 1], 'strictly increasing')])
    def test_witness_invalid(self, k, j, match):
        with pytest.raises(TowerError, match=match):
            MatchWitness(k, j)

    def test_product_name(self):
        assert list(product_name([1, 2], [3, 0], 4)) == [7, 8]
        with pytest.raises(TowerError, match='equal length'):
            product_name([1], [1, 2], 4)


class TestDistance(object):

    @pytest.mark.parametrize('a, b, exp',
                             [([1, 2, 3], [1, 2, 3], 0),
                              ([1, 2, 3], [3, 1, 2], F(1, 3)),
                              ([1, 1, 1, 1], [2, 2, 2, 2], 1),
                              ([0, 1, 0, 1], [1, 0, 1, 0], F(1, 4))])
    def test_values(self, a, b, exp):
        value, witness = fbar_distance(a, b)
        assert value == exp
        assert witness.valid_for(a, b)
        assert len(witness) == (1 - exp) * len(a)

    @pytest.mark.parametrize('engine', ['full', 'sparse'])
    def test_engines_match_oracle(self, engine):
        for a, b in random_names(25, 7, 3):
            value, witness = fbar_distance(a, b, engine=engine)
            assert value == fbar_bruteforce(a, b)
            assert witness.valid_for(a, b)

    def test_wide_band_is_exact(self):
        for a, b in random_names(10, 12, 4, seed=11):
            assert fbar_distance(a, b, engine='banded', band=12)[0] == fbar_distance(a, b)[0]

    def test_zero_band(self):
        value, witness = fbar_distance([1, 2, 3, 4], [1, 0, 3, 0], engine='banded', band=0)
        assert value == F(1, 2)
        assert witness.k_indices == (0, 2)

    def test_banded_upper_bound(self):
        a, b = [1, 2, 3, 4, 5], [5, 1, 2, 3, 4]
        assert fbar_distance(a, b, engine='banded', band=1)[0] == F(1, 5)
        assert fbar_distance(a, b, engine='banded', band=0)[0] == 1

    def test_large_sparse(self):
        a = list(range(3000))
        b = a[1:] + [0]
        value, witness = fbar_distance(a, b)
        assert value == F(1, 3000)
        assert witness.valid_for(a, b)

    @pytest.mark.parametrize('a, b, match',
                             [([1, 2], [1], 'equal length'),
                              ([], [], 'empty')])
    def test_invalid(self, a, b, match):
        with pytest.raises(TowerError, match=match):
            fbar_distance(a, b)

    def test_engine_errors(self):
        assert lcs([], [1]) == []
        with pytest.raises(TowerError, match='non-negative band'):
            lcs([1], [1], engine='banded')
        with pytest.raises(TowerError, match='unknown matching engine'):
            lcs([1], [1], engine='greedy')

    @pytest.mark.slow
    def test_oracle_sweep(self):
        rng = np.random.default_rng(2021)
        for _ in range(10 ** 5):
            length = int(rng.integers(1, 11))
            alphabet = int(rng.integers(1, 5))
            a, b = rng.integers(0, alphabet, size=(2, length)).tolist()
            value, witness = fbar_distance(a, b)
            assert value == fbar_bruteforce(a, b), (a, b)
            assert witness.valid_for(a, b)


class TestPartition(object):

    @pytest.fixture()
    def partition(self):
        return LevelPartition(m=5, columns=3, junk_columns={1: 1, 2: 0})

    def test_ids(self, partition):
        assert partition.junk == 9
        assert partition.size == 10
        assert partition.level_id(2, 4) == 4
        assert partition.level_id(1, 0) == 5
        assert partition.clean_columns(1) == 2
        assert partition.clean_columns(2) == 3

    @pytest.mark.parametrize('kwargs, match',
                             [({'m': 1, 'columns': 1}, 'below 2'),
                              ({'m': 4, 'columns': 1, 'model': 'bernoulli'}, 'junk model')])
    def test_invalid(self, kwargs, match):
        with pytest.raises(TowerError, match=match):
            LevelPartition(**kwargs)

    def test_name_tower2(self, partition):
        name = names_from_towers(None, partition, (2, 3, 0), 6)
        assert list(name) == [3, 4, 0, 1, 2, 3]

    def test_name_junk_column(self, partition):
        assert list(names_from_towers(None, partition, (1, 2, 2), 6)) == [7, 8, 9, 6, 7, 8]
        assert list(names_from_towers(None, partition, (1, 2, 1), 6)) == [7, 8, 5, 6, 7, 8]

    def test_name_random_model(self):
        partition = LevelPartition(m=3, columns=2, junk_probability={1: F(1), 2: F(0)},
                                   model='random')
        assert list(names_from_towers(None, partition, (1, 0, 0), 5)) == [3, 4, 5, 4, 5]
        assert list(names_from_towers(None, partition, (2, 0, 0), 4)) == [0, 1, 2, 0]

    @pytest.mark.parametrize('point, length, match',
                             [((1, 4, 0), 3, 'level 4'),
                              ((2, 0, 3), 3, 'column 3'),
                              ((2, 0, 0), 0, 'at least 1')])
    def test_name_invalid(self, partition, point, length, match):
        with pytest.raises(TowerError, match=match):
            names_from_towers(None, partition, point, length)

    def test_name_wrong_pair(self, desk_pair, partition):
        with pytest.raises(TowerError, match='does not belong'):
            names_from_towers(desk_pair, partition, (2, 0, 0), 3)

    def test_level_partition(self, desk_pair):
        partition = level_partition(desk_pair)
        assert partition.m == 902
        assert partition.columns == 15
        assert partition.junk == 1803
        for s in (1, 2):
            assert 0 <= partition.junk_probability[s] <= 1
            assert 0 <= partition.junk_columns[s] <= 15

    def test_product_partition(self):
        table = ProductPartition('blocks', blocks=2).mapping(LevelPartition(m=4, columns=1))
        assert table.tolist() == [0, 0, 1, 1, 2, 2, 3, 4]
        assert ProductPartition('levels').mapping(LevelPartition(m=4, columns=1)) is None


class TestMatchConstants(object):

    def test_defaults(self):
        c = MatchConstants()
        assert c.alpha0 == F(1, 921600)
        assert c.c2_tilde == 512
        assert c.c2 == 513
        assert c.as_dict()['c1'] == 12

    def test_alpha_for(self):
        c = MatchConstants(r=1)
        assert c.alpha0 == F(1, 57600)
        assert c.alpha_for(F(1, 2)) == F(1, 57600)
        assert c.alpha_for(F(1, 1000)) == F(1, 36 * 10 ** 6)

    def test_k_max(self):
        assert MatchConstants(r=1).k_max(100, F(1, 4)) == 25

    def test_invalid(self):
        with pytest.raises(TowerError, match='outside'):
            MatchConstants(r=0)


class TestAlignmentBound(object):

    @pytest.mark.parametrize('k, exp', [(0, F(1, 50)), (25, F(13, 25))])
    def test_values(self, k, exp):
        assert alignment_bound(100, F(1, 4), r=1, k=k) == exp

    @pytest.mark.parametrize('m, alpha, k, match',
                             [(100, F(1, 4), 26, 'offset 26'),
                              (100, F(0), 0, 'alpha'),
                              (1, F(1, 4), 0, 'below 2')])
    def test_invalid(self, m, alpha, k, match):
        with pytest.raises(TowerError, match=match):
            alignment_bound(m, alpha, r=1, k=k)

    @pytest.mark.parametrize('m, k, exp', [(10, 2, F(5, 9)), (10, 10, 1)])
    def test_closelevel(self, m, k, exp):
        assert closelevel_probability(m, k) == exp


class TestMatchLemma(object):

    def test_synthetic(self):
        partition = LevelPartition(m=20, columns=3)
        report = verify_match_lemma(None, F(1, 4), trials=10, partition=partition,
                                    constants=MatchConstants(r=1), threads=1)
        assert report['N'] == 200
        assert report['k_max'] == 5
        assert report['closelevel_probability'] == F(11, 19)
        assert report['triangle'] == {'checked': 10, 'holds': True}
        assert report['violations'] == []
        assert report['passed'] is True
        assert all(s['dp'] <= s['alignment'] < s['bound'] for s in report['samples'])
        assert [o['trial'] for o in report['offsets']] == list(range(10))

    def test_deterministic(self):
        partition = LevelPartition(m=12, columns=2)
        kwargs = dict(trials=6, partition=partition, constants=MatchConstants(r=1), seed=4)
        first = verify_match_lemma(None, F(1, 4), threads=1, **kwargs)
        second = verify_match_lemma(None, F(1, 4), threads=2, **kwargs)
        assert [s['dp'] for s in first['samples']] == [s['dp'] for s in second['samples']]

    def test_too_short(self):
        with pytest.raises(TowerError, match='no room'):
            verify_match_lemma(None, F(1, 4), trials=2, partition=LevelPartition(m=2, columns=1))

    def test_c2_tilde_violation(self, monkeypatch):
        monkeypatch.setattr('abc_towers.analysis.fbar._below_sqrt', lambda x, c, alpha: False)
        partition = LevelPartition(m=20, columns=3)
        report = verify_match_lemma(None, F(1, 4), trials=4, partition=partition,
                                    constants=MatchConstants(r=1), threads=1)
        assert report['below_c2_tilde'] == 0
        assert len(report['violations']) == 4
        assert report['passed'] is False

    @pytest.mark.slow
    @pytest.mark.parametrize('alpha', [F(1, 16), F(1, 64)])
    def test_desk_pair(self, desk_pair, alpha):
        report = verify_match_lemma(desk_pair, alpha, trials=1000,
                                    constants=MatchConstants(r=F(1, 4)))
        assert report['violations'] == []
        assert report['below_c2_tilde'] == 1000
        assert report['passed'] is True


def test_criterion_check():
    partition = LevelPartition(m=12, columns=3)
    report = ks_criterion_check(None, [F(1, 2), F(1)], trials=5, partition=partition,
                                constants=MatchConstants(r=1), threads=1,
                                partitions=[ProductPartition('levels'),
                                            ProductPartition('blocks', blocks=3)])
    assert report['stage'] is None
    assert len(report['rows']) == 4
    first = report['rows'][0]
    assert first['alpha'] == F(1, 57600)
    assert first['N'] == 12
    assert first['k_max'] == 1
    assert first['samples'] == 5
    assert all(r['passed'] for r in report['rows'] if r['eps'] == 1)
