# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_bumps.py
# Project: construction
# Author: The abc-towers developers
# Created: Tuesday, 12th October 2021 4:02:51 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Tuesday, 12th October 2021 4:02:51 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import mpmath
import pytest

from abc_towers.construction.bumps import BumpProfile, bump_audit, smoothstep, smoothstep_prime
from abc_towers.exceptions import TowerError


@pytest.fixture(scope='module')
def profile():
    return BumpProfile.for_stage(F(2, 15))


@pytest.fixture(scope='module')
def audit(profile):
    return bump_audit(profile)


class TestSmoothstep(object):

    @pytest.mark.parametrize('t, exp', [(F(-1), 0), (F(0), 0), (F(1), 1), (F(3, 2), 1)])
    def test_exact_ends(self, t, exp):
        assert smoothstep(t) == exp
        assert isinstance(smoothstep(t), F)

    def test_midpoint(self):
        assert mpmath.almosteq(smoothstep(F(1, 2)), mpmath.mpf(1) / 2)
        assert mpmath.almosteq(smoothstep_prime(F(1, 2)), 2)
        assert smoothstep_prime(F(2)) == 0


class TestBumpProfile(object):

    @pytest.mark.parametrize('rho, delta, match',
                             [(F(0), F(1, 4), 'rho'),
                              (F(1), F(1, 4), 'rho'),
                              (F(1, 2), F(1, 2), 'delta'),
                              (F(1, 2), F(0), 'delta')])
    def test_invalid(self, rho, delta, match):
        with pytest.raises(TowerError, match=match):
            BumpProfile(rho, delta)

    def test_for_stage(self):
        p = BumpProfile.for_stage(F(2, 15), gamma=15)
        assert p.rho == F(2, 225)
        assert p.delta == F(2, 15)

    def test_sigma(self, profile):
        assert profile.sigma(F(0)) == 0
        assert profile.sigma(F(1, 2)) == 1
        assert profile.sigma(F(1)) == 0
        assert 0 < profile.sigma(F(1, 10)) < 1
        assert profile.sigma_prime(F(1, 2)) == 0

    def test_beta(self, profile):
        assert profile.beta_tilde(F(1, 4)) == 0
        assert profile.beta_tilde(F(3, 4)) == F(1, 4)
        assert profile.beta_tilde(F(1)) == 0
        assert profile.beta_tilde_prime(F(3, 4)) == 1
        assert 0 < profile.beta_tilde(F(13, 25)) < mpmath.mpf(1) / 50

    def test_bounds(self, profile):
        assert profile.beta_slope_bound == 29
        assert profile.sigma_slope_bound == 30
        assert profile.beta_sup == F(13, 30)

    def test_deficit(self, profile):
        assert profile.beta_deficit(F(14, 15)) == 0
        assert profile.beta_deficit(F(19, 20)) > 0
        assert profile.beta_deficit(F(29, 30)) > 0
        with pytest.raises(TowerError, match='cut-off'):
            profile.beta_deficit(F(1, 2))

    def test_scaled(self, profile):
        beta = profile.beta_scaled(15)
        assert beta(F(3, 4) / 15) == F(1, 60)
        assert beta(F(1) + F(3, 4) / 15) == F(1, 60)


class TestAudit(object):

    def test_passes(self, audit):
        assert audit['passed'] is True
        assert audit['grid'] == 1000
        assert all(audit['symbolic'].values())

    def test_checks(self, audit):
        assert {'sigma_one', 'beta_segment', 'beta_below_segment',
                'beta_slope_bound'} <= set(audit['checks'])
        assert audit['checks']['sigma_one']['checked'] == 1001
        assert audit['checks']['beta_below_segment']['checked'] == 1000

    def test_grid(self, profile):
        with pytest.raises(TowerError, match='at least 1000'):
            bump_audit(profile, grid=999)

    @pytest.mark.slow
    @pytest.mark.parametrize('rho', [F(1, 10), F(1, 100)])
    @pytest.mark.parametrize('delta', [F(1, 10), F(1, 100)])
    def test_fine_grid(self, rho, delta):
        report = bump_audit(BumpProfile(rho, delta), grid=10 ** 4)
        assert report['passed'] is True
        assert report['rho'] == rho and report['delta'] == delta
        plateaus = ['sigma_zero_left', 'sigma_one', 'sigma_zero_right', 'beta_zero_left',
                    'beta_segment', 'beta_zero_right']
        for name in plateaus:
            assert report['checks'][name]['checked'] == 10 ** 4 + 1
            assert report['checks'][name]['violations'] == []
        assert report['symbolic'] == {'limit_at_0': True, 'limit_at_1': True,
                                      'midpoint': True, 'midpoint_slope': True}
