# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_rational.py
# Project: geometry
# Author: The abc-towers developers
# Created: Tuesday, 5th October 2021 9:14:40 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Tuesday, 5th October 2021 9:14:40 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import pytest

from abc_towers.exceptions import TowerError
from abc_towers.geometry.rational import (CircleInterval, CircleValue, Interval, as_fraction,
                                          ceil_sqrt_ratio, mod1)


class TestAsFraction(object):

    @pytest.mark.parametrize('value, exp',
                             [(2, F(2)),
                              ('2/3', F(2, 3)),
                              (' 1/5 ', F(1, 5)),
                              ({'num': '7', 'den': '30'}, F(7, 30)),
                              (F(3, 4), F(3, 4))])
    def test_exact(self, value, exp):
        assert as_fraction(value) == exp

    @pytest.mark.parametrize('value, match',
                             [(True, 'boolean'),
                              (0.5, 'exact rational'),
                              ('two', 'invalid rational string'),
                              ({'num': '1'}, 'invalid rational mapping'),
                              ({'num': '1', 'den': '0'}, 'invalid rational mapping')])
    def test_refused(self, value, match):
        with pytest.raises(TowerError, match=match):
            as_fraction(value)


@pytest.mark.parametrize('x, exp',
                         [(F(5, 4), F(1, 4)),
                          (F(-1, 3), F(2, 3)),
                          (F(0), F(0)),
                          (F(3), F(0))])
def test_mod1(x, exp):
    assert mod1(x) == exp


@pytest.mark.parametrize('x, exp',
                         [(F(0), 0),
                          (F(1, 4), 1),
                          (F(4), 2),
                          (F(5), 3),
                          (F(9, 4), 2),
                          (F(10 ** 12), 10 ** 6)])
def test_ceil_sqrt_ratio(x, exp):
    assert ceil_sqrt_ratio(x) == exp


def test_ceil_sqrt_negative():
    with pytest.raises(TowerError, match='negative'):
        ceil_sqrt_ratio(F(-1))


class TestCircleValue(object):

    def test_reduced(self):
        assert CircleValue(F(5, 4)).value == F(1, 4)
        assert (CircleValue(F(3, 4)) + F(1, 2)).value == F(1, 4)
        assert (CircleValue(F(1, 4)) - CircleValue(F(1, 2))).value == F(3, 4)

    def test_multiple(self):
        assert (3 * CircleValue(F(1, 2))).value == F(1, 2)
        assert (CircleValue(F(2, 3)) * 2).value == F(1, 3)

    def test_distance(self):
        assert CircleValue(F(9, 10)).distance(CircleValue(F(1, 10))) == F(1, 5)
        assert CircleValue(F(1, 2)).distance(F(0)) == F(1, 2)


class TestInterval(object):

    def test_empty(self):
        with pytest.raises(TowerError, match='empty interval'):
            Interval(F(1), F(0))

    def test_overlap(self):
        a = Interval(F(0), F(1, 2))
        assert a.overlap(Interval(F(1, 4), F(1))) == F(1, 4)
        assert a.overlap(Interval(F(1, 2), F(1))) == 0
        assert a.overlap(Interval(F(3, 4), F(1))) == 0

    def test_contains(self):
        a = Interval(F(0), F(1, 2))
        assert a.contains(Interval(F(0), F(1, 4)))
        assert not a.contains(Interval(F(1, 4), F(3, 4)))
        assert a.contains_point(F(1, 2))
        assert a.shrink(F(1, 8)) == Interval(F(1, 8), F(3, 8))
        assert a.shift(F(1, 2)).hi == 1


class TestCircleInterval(object):

    @pytest.mark.parametrize('length', [F(0), F(3, 2), F(-1, 4)])
    def test_bad_length(self, length):
        with pytest.raises(TowerError, match='outside'):
            CircleInterval(F(0), length)

    def test_wraps(self):
        arc = CircleInterval(F(3, 4), F(1, 2))
        assert arc.wraps
        assert arc.hi == F(5, 4)
        assert arc.pieces() == [Interval(F(3, 4), F(1)), Interval(F(0), F(1, 4))]
        assert CircleInterval(F(5, 4), F(1, 2)).lo == F(1, 4)

    def test_from_bounds(self):
        arc = CircleInterval.from_bounds(F(-1, 8), F(1, 8))
        assert arc.lo == F(7, 8)
        assert arc.length == F(1, 4)

    @pytest.mark.parametrize('lo, length, exp',
                             [(F(7, 8), F(1, 4), True),
                              (F(0), F(1, 4), True),
                              (F(1, 8), F(1, 4), False),
                              (F(1, 2), F(1, 8), False)])
    def test_contains(self, lo, length, exp):
        arc = CircleInterval(F(3, 4), F(1, 2))
        assert arc.contains(CircleInterval(lo, length)) is exp

    def test_full_circle_contains(self):
        assert CircleInterval(F(1, 3), F(1)).contains(CircleInterval(F(0), F(1, 2)))

    def test_overlap_across_seam(self):
        a = CircleInterval(F(3, 4), F(1, 2))
        b = CircleInterval(F(7, 8), F(1, 4))
        assert a.overlap(b) == F(1, 4)
        assert a.overlap(CircleInterval(F(1, 4), F(1, 2))) == 0

    def test_points(self):
        arc = CircleInterval(F(3, 4), F(1, 2))
        assert arc.contains_point(F(0))
        assert arc.contains_point(F(1, 4))
        assert not arc.contains_point(F(1, 2))
        assert arc.lift_near(F(0)) == (F(-1, 4), F(1, 4))
        assert arc.offset_of(CircleInterval(F(0), F(1, 8))) == F(1, 4)
