# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_towers.py
# Project: analysis
# Author: The abc-towers developers
# Created: Monday, 18th October 2021 11:04:37 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Thursday, 28th October 2021 2:40:19 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import pytest

from abc_towers.analysis.towers import (base_cell, build_bases, build_columns,
                                        generating_diagnostics, parallelogram_tiling,
                                        substantiality, towerbase_inequality,
                                        verify_disjointness)
from abc_towers.exceptions import ConditionViolation, TowerAnalyticOnlyWarning, TowerError


class TestTowerPair(object):

    def test_heights(self, desk_pair):
        assert desk_pair.h1 == 901
        assert desk_pair.h2 == 902
        assert desk_pair.height(1) == 901
        assert repr(desk_pair) == '<TowerPair(stage=1, h1=901, h2=902)>'

    def test_measures(self, desk_pair):
        assert desk_pair.measure(1) == F(7, 30)
        assert desk_pair.measure(2) == F(1519, 6750)
        assert desk_pair.level_measure(1) == F(7, 30) / 901

    def test_levels(self, desk_pair):
        assert desk_pair.level_box(1, 901) == desk_pair.cell(1, 1)
        assert desk_pair.level_box(2, 902) == desk_pair.cell(2, 1)
        assert desk_pair.sigma(1, 900) == 0
        assert desk_pair.sigma(2, 900) == 901
        with pytest.raises(TowerError, match='outside tower 1'):
            desk_pair.level(1, 901)

    def test_level_union(self, desk_pair):
        level = desk_pair.level(2, 3)
        assert len(level) == 15
        assert level.measure == desk_pair.level_measure(2)

    def test_partitions(self, desk_pair):
        assert len(list(desk_pair.xi_cells())) == 901 + 902
        eta = list(desk_pair.eta_cells())
        assert len(eta) == 902
        assert eta[0] == ((1, 0), (2, 0))
        assert eta[-1] == ((2, 901),)

    def test_as_dict(self, desk_pair):
        out = desk_pair.as_dict()
        assert out['cells'] == 15
        assert out['measure'][1] == F(7, 30)


class TestBuildBases(object):

    def test_report(self, desk_pair):
        assert desk_pair.report['mode'] == 'exhaustive'
        assert desk_pair.report['checked'] == 15
        assert desk_pair.report['passed'] is True

    def test_inequality(self, desk_stage):
        chain = towerbase_inequality(desk_stage)
        assert chain['left'] == F(15, 13530)
        assert chain['middle'] == F(1, 901)
        assert chain['right'] == F(1, 900)
        assert chain['holds'] is True

    def test_inequality_fails(self, small_stage):
        with pytest.raises(ConditionViolation) as cm:
            build_bases(small_stage)
        assert cm.value.condition == 'towerbase'

    def test_small_chain(self, small_stage):
        assert towerbase_inequality(small_stage)['holds'] is False

    def test_ends_only(self, desk_stage):
        with pytest.warns(TowerAnalyticOnlyWarning, match='ends of k'):
            pair = build_bases(desk_stage, limit=10)
        assert pair.report['mode'] == 'analytic'
        assert pair.report['checked'] == 2

    @pytest.mark.parametrize('k, s, match', [(15, 1, 'cell index'), (0, 3, 'tower')])
    def test_base_cell_invalid(self, desk_stage, k, s, match):
        with pytest.raises(TowerError, match=match):
            base_cell(desk_stage, k, s)

    def test_base_cell_widths(self, desk_stage):
        first = base_cell(desk_stage, 0, 1)
        assert first.theta1.length == F(1, 901)
        assert first.theta2.length == (1 - 4 * desk_stage.eps) / 30


class TestDisjointness(object):

    def test_tiling(self, desk_stage):
        tiling = parallelogram_tiling(desk_stage)
        assert tiling['strips'] == 30
        assert tiling['gaps'] == 0
        assert tiling['overlaps'] == 0
        assert tiling['measure'] == 1
        assert tiling['passed'] is True

    def test_tiling_analytic(self, desk_stage):
        assert parallelogram_tiling(desk_stage, limit=10)['mode'] == 'analytic'

    def test_analytic(self, desk_pair):
        with pytest.warns(TowerAnalyticOnlyWarning, match='sweep'):
            report = verify_disjointness(desk_pair, exhaustive_limit=10)
        assert report['sweep'] == {'run': False}
        assert report['residue_bijection'] is True
        assert report['corner_margin'] == F(676, 202725)
        assert report['proof_slack'] == F(1, 300)
        assert report['corner_margin_ok'] is True
        for s in (1, 2):
            assert report['towers'][s]['mode'] == 'analytic'
            assert report['towers'][s]['min_below'] > 0
            assert report['towers'][s]['stacked'] is True
        assert report['towers'][1]['advance'] == F(1, 901)
        assert report['passed'] is True

    @pytest.mark.slow
    def test_margins_enumerated(self, desk_pair):
        with pytest.warns(TowerAnalyticOnlyWarning):
            report = verify_disjointness(desk_pair, exhaustive_limit=15000, threads=1)
        assert report['towers'][1]['mode'] == 'exhaustive'
        assert report['towers'][1]['checked'] == 901 * 15
        assert report['towers'][1]['witnesses'] == []
        assert report['passed'] is True

    @pytest.mark.slow
    def test_full_sweep(self, desk_pair):
        report = verify_disjointness(desk_pair, exhaustive_limit=30000, threads=1)
        assert report['sweep']['run'] is True
        assert report['sweep']['boxes'] == (901 + 902) * 15
        assert report['sweep']['witnesses'] == []
        assert report['passed'] is True


def test_substantiality(desk_pair):
    report = substantiality(desk_pair)
    assert report['bound'][1] == F(7, 30)
    assert report['bound'][2] == F(49, 450)
    assert report['exceeds_r'] == {1: False, 2: False}
    assert report['passed'] is True


class TestGenerating(object):

    def test_enumerated(self, desk_pair):
        report = generating_diagnostics(desk_pair)
        assert report['towers'][1]['mode'] == 'enumerated'
        assert report['eta']['mode'] == 'enumerated'
        assert 0 <= report['eta']['fraction'] <= 1
        assert report['towers'][1]['lower_bound'] == 1 - F(2, 15) - F(30, 901)
        assert report['diameter_target'] == F(1, 2)

    def test_counted(self, desk_pair):
        enumerated = generating_diagnostics(desk_pair)
        counted = generating_diagnostics(desk_pair, limit=10)
        for s in (1, 2):
            assert counted['towers'][s]['mode'] == 'counted'
            assert counted['towers'][s]['hits'] == enumerated['towers'][s]['hits']
        assert counted['eta']['mode'] == 'skipped'
        assert counted['eta']['fraction'] is None

    def test_stage_mismatch(self, desk_pair, small_stage):
        with pytest.raises(TowerError, match='stage does not match'):
            generating_diagnostics(desk_pair, stage=small_stage)


class TestColumns(object):

    def test_desk(self, desk_pair):
        columns = build_columns(desk_pair)
        assert columns.t_star == {1: 14, 2: 14}
        assert columns.N == 210
        assert columns.report['N_exceeds_stated'] is True
        assert columns.report['N_exceeds_guaranteed'] is True
        assert columns.report['passed'] is True

    def test_boxes(self, desk_pair):
        columns = build_columns(desk_pair)
        assert columns.tilde(1, 0, 0).contains_box(columns.column(1, 0, 0))
        assert columns.tilde(2, 3, 5).contains_box(columns.column(2, 3, 5))
        with pytest.raises(TowerError, match='column index'):
            columns.column(1, 0, 14)

    def test_stage_mismatch(self, desk_pair, small_stage):
        with pytest.raises(TowerError, match='stage does not match'):
            build_columns(desk_pair, stage=small_stage)
