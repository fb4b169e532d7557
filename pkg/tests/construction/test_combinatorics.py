# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_combinatorics.py
# Project: construction
# Author: The abc-towers developers
# Created: Thursday, 7th October 2021 10:20:45 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Tuesday, 12th October 2021 1:08:12 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
import math
from fractions import Fraction as F

import pytest

from abc_towers.construction.combinatorics import (CellAssignment, check_identities, crt_index,
                                                   derive_stage, lattice_groups, rectangles,
                                                   verify_combidisj, verify_coset_partition)
from abc_towers.exceptions import ConditionViolation, TowerError
from abc_towers.geometry.boxes import verify_pairwise_disjoint


class TestDeriveStage(object):

    def test_small_stage(self, small_stage):
        assert small_stage.lam == 15
        assert small_stage.m == 17
        assert small_stage.qbar_next == 255
        assert (small_stage.r, small_stage.r_prime) == (2, 1)
        assert small_stage.eps == F(2, 15)
        assert small_stage.Delta == F(1, 255)
        assert small_stage.alpha_next == F(2, 3) + F(1, 240)
        assert small_stage.q_prime_next == 255

    def test_desk_stage(self, desk_stage):
        assert desk_stage.q_next == 13515
        assert desk_stage.m == 902
        assert desk_stage.qbar_next == 13530
        assert (desk_stage.r, desk_stage.r_prime) == (2, 1)
        assert desk_stage.D > 0
        assert desk_stage.Delta > 0
        assert all(check_identities(desk_stage).values())

    @pytest.mark.parametrize('args, kwargs, condition',
                             [((2, 3, 1, 5, 241), {}, 'A'),
                              ((1, 2, 1, 4, 240), {}, 'B'),
                              ((2, 4, 1, 5, 240), {}, 'reduced'),
                              ((2, 3, 1, 5, 240), {'production': True}, 'D'),
                              ((2, 3, 1, 5, 240), {'D': F(1, 255)}, 'Delta')])
    def test_violations(self, args, kwargs, condition):
        with pytest.raises(ConditionViolation) as cm:
            derive_stage(*args, **kwargs)
        assert cm.value.condition == condition

    def test_condition_b_message(self):
        with pytest.raises(ConditionViolation, match=r'condition \(B\) violated at stage 1'):
            derive_stage(1, 2, 1, 4, 240)

    @pytest.mark.parametrize('kwargs, match',
                             [({'d': 1}, 'dimension'),
                              ({'n': 0}, 'stage index')])
    def test_invalid(self, kwargs, match):
        with pytest.raises(TowerError, match=match):
            derive_stage(2, 3, 1, 5, 240, **kwargs)


class TestCrt(object):

    @pytest.mark.parametrize('i, j, exp',
                             [(1, 0, 6),
                              (2, 1, 7),
                              (0, 0, 0),
                              (4, 2, 14)])
    def test_index(self, i, j, exp):
        assert crt_index(i, j, 3, 5) == exp

    def test_trivial(self):
        assert crt_index(0, 0, 1, 1) == 0

    def test_not_coprime(self):
        with pytest.raises(ConditionViolation, match=r'\(B\)'):
            crt_index(0, 0, 2, 4)

    def test_out_of_range(self):
        with pytest.raises(TowerError, match='outside'):
            crt_index(5, 0, 3, 5)

    def test_bijection(self, small_stage):
        cells = CellAssignment(small_stage)
        assert sorted(cells.k_of.values()) == list(range(15))
        for k in range(15):
            assert cells.k(*cells.ij(k)) == k


class TestCellAssignment(object):

    def test_tables(self, small_stage):
        tables = CellAssignment(small_stage).as_dict()
        assert len(tables['k_of']) == 15
        assert len(tables['offsets']) == 30

    @pytest.mark.parametrize('s', [1, 2])
    def test_lattice_indices(self, small_stage, s):
        cells = CellAssignment(small_stage)
        targets = {cells.lattice_indices(i, j, s) for i in range(5) for j in range(3)}
        assert len(targets) == 15
        assert all(0 <= j1 < 15 and 0 <= j2 < 15 for j1, j2 in targets)


class TestRectangles(object):

    @pytest.mark.parametrize('s', [1, 2])
    def test_family(self, small_stage, s):
        boxes = rectangles(small_stage, s)
        assert len(boxes) == 15
        assert all(b.measure == F(1, 450) for b in boxes)
        assert verify_pairwise_disjoint(boxes) == []

    def test_bad_family(self, small_stage):
        with pytest.raises(TowerError, match='family'):
            rectangles(small_stage, 3)


class TestCombidisj(object):

    def test_exhaustive(self, small_stage):
        report = verify_combidisj(small_stage)
        assert report['mode'] == 'exhaustive'
        assert report['passed'] is True
        assert all(f['witnesses'] == [] for f in report['families'].values())

    def test_analytic(self, small_stage):
        report = verify_combidisj(small_stage, limit=1)
        assert report['mode'] == 'analytic'
        assert report['passed'] is True

    def test_desk_analytic(self, desk_stage):
        assert verify_combidisj(desk_stage, limit=10)['passed'] is True

    @pytest.mark.slow
    def test_all_small_denominators(self):
        checked = 0
        # q = 1 gives an integer rotation and eps_n >= 1
        for q in range(2, 101):
            for q_prime in range(2, 200 // q + 1):
                if math.gcd(q, q_prime) != 1:
                    continue
                for p in (x for x in range(1, q) if math.gcd(x, q) == 1):
                    for p_prime in (x for x in range(1, q_prime) if math.gcd(x, q_prime) == 1):
                        stage = derive_stage(p, q, p_prime, q_prime, 16 * q * q_prime)
                        assert check_identities(stage) == {'a1': True, 'a2': True,
                                                           'a3': True, 'a4': True}
                        report = verify_combidisj(stage)
                        assert report['mode'] == 'exhaustive'
                        assert report['passed'] is True, (p, q, p_prime, q_prime)
                        checked += 1
        assert checked > 1000


def test_coset_partition(small_stage):
    groups = lattice_groups(small_stage)
    assert groups.lambda_size == 225
    assert len(groups.gamma(1)) == 15
    assert verify_coset_partition(groups, 3, 5) == {1: True, 2: True}
