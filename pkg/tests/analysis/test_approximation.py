# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_approximation.py
# Project: analysis
# Author: The abc-towers developers
# Created: Tuesday, 19th October 2021 3:22:10 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Thursday, 28th October 2021 4:51:02 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
import math
from fractions import Fraction as F

import pytest

from abc_towers.analysis.approximation import (BoxIndicator, ConjugatedIndicator,
                                               MonteCarloEstimate, aggregate_translation_check,
                                               hoeffding_bound, neighborhood_predicate,
                                               rigidity_check, speed_constant, speed_exact,
                                               speed_ratio, translation_continuity_mc)
from abc_towers.construction.conjugations import h1_forward, h2_forward, tilde_cell
from abc_towers.construction.scheduler import build_ladder
from abc_towers.exceptions import MonteCarloInconclusive, TowerError
from abc_towers.geometry.boxes import Box


half = Box.from_bounds(F(0), F(1, 2), F(0), F(1, 2))


@pytest.fixture(scope='module')
def speed(desk_pair):
    return speed_exact(desk_pair)


class TestSpeed(object):

    def test_exact(self, speed):
        assert speed.n == 1
        assert speed.m == 902
        assert speed.bound_error1 == F(6, 901 * 902)
        assert speed.exact_wraparound_term == speed.wraparound[1] + speed.wraparound[2]
        for s in (1, 2):
            assert 0 <= speed.wraparound[s] <= speed.tower_bounds[s]
        assert speed.passed is True

    def test_ratio(self, speed):
        ratio = speed_ratio(speed)
        assert 0 < ratio <= 6
        assert ratio == speed.exact_wraparound_term * 902 * 901

    def test_constant(self, speed):
        assert speed_constant(speed) == 6
        assert speed.as_dict()['constant'] == 6
        assert speed.as_dict()['mc_error3'] is None

    def test_eps_term(self, speed):
        assert speed.eps_ratio < speed.eps_ratio_bound
        assert speed.eps_ratio_bound == F(1, 900)
        assert speed.error3_bound == 2 * speed.eps_next

    def test_stage_mismatch(self, desk_pair, small_stage):
        with pytest.raises(TowerError, match='stage does not match'):
            speed_exact(desk_pair, stage=small_stage)


class TestRigidity(object):

    def test_desk(self, desk_stage):
        report = rigidity_check(desk_stage)
        assert report['period'] == 13515 * desk_stage.q_prime_next
        assert report['period'] % report['exact_period'] == 0
        assert report['alpha_integral'] is True
        assert report['alpha_prime_integral'] is True
        assert report['d0_budget'] == F(1, 30)
        assert report['passed'] is True

    def test_small(self, small_stage):
        report = rigidity_check(small_stage)
        assert report['period'] == 240 * 255
        assert report['passed'] is True


@pytest.mark.parametrize('samples, confidence',
                         [(10000, F(99, 100)),
                          (2000, F(95, 100)),
                          (1, F(1, 2))])
def test_hoeffding(samples, confidence):
    expected = math.sqrt(math.log(2 / (1 - float(confidence))) / (2 * samples))
    assert hoeffding_bound(samples, confidence) == pytest.approx(expected)


class TestBoxIndicator(object):

    def test_contains(self):
        ind = BoxIndicator([half])
        assert ind.contains((0.25, 0.25))
        assert ind.contains((1.25, -0.75))
        assert not ind.contains((0.75, 0.25))
        assert ind.measure == F(1, 4)

    def test_rotated(self):
        ind = BoxIndicator([half]).rotated(F(1, 2), F(0))
        assert ind.contains((0.75, 0.25))
        assert not ind.contains((0.25, 0.25))

    def test_empty(self):
        with pytest.raises(TowerError, match='empty union'):
            BoxIndicator([])


class TestConjugatedIndicator(object):

    def test_single_stage(self, small_stage):
        cell = tilde_cell(small_stage, 2, 1, 0, 1)
        ind = ConjugatedIndicator(small_stage, cell)
        assert ind.closed is True
        assert ind.measure == cell.measure
        centre = (cell.theta1.lo + cell.theta1.length / 2,
                  cell.theta2.lo + cell.theta2.length / 2)
        image = h2_forward(small_stage, h1_forward(small_stage, centre))
        point = (float(image[0] + small_stage.alpha), float(image[1] + small_stage.alpha_prime))
        assert ind.contains(point)
        assert not ind.contains((float(small_stage.alpha), float(small_stage.alpha_prime)))

    def test_no_stages(self):
        with pytest.raises(TowerError, match='at least one stage'):
            ConjugatedIndicator([], half)


class TestTranslationContinuity(object):

    def test_box_union(self):
        result = translation_continuity_mc(BoxIndicator([half]), (F(1, 4), F(0)),
                                           samples=4000, budget=F(1, 2), seed=7,
                                           confidence=F(999, 1000), threads=1, exact=True)
        assert result.exact == F(1, 4)
        assert result.samples == 4000
        assert result.undefined == 0
        assert result.within_bound is True
        assert result.verdict == 'pass'
        assert result.as_dict()['verdict'] == 'pass'

    def test_fail(self):
        result = translation_continuity_mc(BoxIndicator([half]), (F(1, 4), F(0)),
                                           samples=4000, budget=F(1, 10), seed=7, threads=1)
        assert result.verdict == 'fail'

    def test_deterministic(self):
        kwargs = dict(samples=1000, seed=3, chunks=4)
        first = translation_continuity_mc(BoxIndicator([half]), (F(1, 3), F(1, 5)),
                                          threads=1, **kwargs)
        second = translation_continuity_mc(BoxIndicator([half]), (F(1, 3), F(1, 5)),
                                           threads=2, **kwargs)
        assert first.estimate == second.estimate
        assert first.verdict == 'unchecked'

    def test_integer_shift(self):
        result = translation_continuity_mc(BoxIndicator([half]), (1, 0))
        assert result.estimate == 0
        assert result.samples == 0
        assert result.exact == 0

    def test_strict(self):
        with pytest.raises(MonteCarloInconclusive, match='straddles'):
            translation_continuity_mc(BoxIndicator([half]), (F(1, 4), F(0)), samples=500,
                                      budget=F(1, 4), seed=1, threads=1, strict=True)

    def test_stages(self, small_stage):
        cell = tilde_cell(small_stage, 0, 0, 0, 2)
        result = translation_continuity_mc(small_stage, (F(1, 1000), F(0)), cell=cell,
                                           samples=400, seed=2, threads=1)
        assert result.budget == small_stage.eps * cell.measure
        assert result.verdict in ('pass', 'fail', 'inconclusive')
        assert 0 <= result.estimate <= 1

    def test_stages_need_cell(self, small_stage):
        with pytest.raises(TowerError, match='downstairs cell'):
            translation_continuity_mc(small_stage, (F(1, 1000), F(0)))

    def test_bound_coverage(self):
        inside = 0
        for seed in range(100):
            result = translation_continuity_mc(BoxIndicator([half]), (F(1, 4), F(0)),
                                               samples=2000, seed=seed, threads=1,
                                               confidence=F(99, 100), exact=True)
            assert result.exact == F(1, 4)
            inside += abs(result.estimate - float(result.exact)) <= result.bound
        assert inside >= 99

    def test_unchecked(self):
        est = MonteCarloEstimate(0.1, 0.01, 100, 0, F(99, 100), 0, (F(0), F(0)))
        assert est.verdict == 'unchecked'
        assert est.within_bound is None


@pytest.mark.slow
def test_aggregate():
    ladder = build_ladder((2, 3, 1, 5), 2)
    from abc_towers.analysis.towers import build_bases
    pair = build_bases(ladder.stages[0])
    result = aggregate_translation_check(pair, ladder.stages[1], samples=2000, threads=1)
    assert result.extra['stage'] == 1
    assert result.extra['boxes'] == (901 + 902) * 15
    assert result.budget == F(2, 15) * (pair.measure(1) + pair.measure(2))


class TestNeighborhood(object):

    def test_inside(self, desk_stage):
        metrics = {'derivative_distance': F(0), 'rigidity_distance': F(0),
                   'speed': F(6, 902 * 901)}
        assert neighborhood_predicate(metrics, desk_stage, 160) is True

    @pytest.mark.parametrize('key, value',
                             [('derivative_distance', F(2, 160)),
                              ('rigidity_distance', F(2, 15)),
                              ('speed', F(7, 902 * 901))])
    def test_outside(self, desk_stage, key, value):
        metrics = {'derivative_distance': F(0), 'rigidity_distance': F(0), 'speed': F(0)}
        metrics[key] = value
        assert neighborhood_predicate(metrics, desk_stage, 160) is False

    def test_missing(self, desk_stage):
        with pytest.raises(TowerError, match='neighbourhood metrics missing'):
            neighborhood_predicate({'speed': F(0)}, desk_stage, 160)
