# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: test_scheduler.py
# Project: construction
# Author: The abc-towers developers
# Created: Friday, 8th October 2021 9:41:30 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Wednesday, 20th October 2021 5:12:07 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction as F

import pytest

from abc_towers.construction.scheduler import (CertEntry, build_ladder, check_rotation_distance,
                                               choose_D, constant_C, l_policy, next_stage)
from abc_towers.exceptions import ConditionViolation, NoAdmissibleStage, TowerError

DESK_SEED = (2, 3, 1, 5)


@pytest.mark.parametrize('k, d, exp',
                         [(0, 2, 1),
                          (1, 2, 2),
                          (2, 2, 6),
                          (3, 3, 60),
                          (1, 5, 5)])
def test_constant_c(k, d, exp):
    assert constant_C(k, d) == exp


@pytest.mark.parametrize('k, d', [(-1, 2), (1, 1)])
def test_constant_c_invalid(k, d):
    with pytest.raises(TowerError, match='constant_C'):
        constant_C(k, d)


class TestLPolicy(object):

    def test_first(self):
        assert l_policy(1, F(1, 10)) == 80

    def test_later(self):
        assert l_policy(2, F(1, 10), eps_prev=F(2, 15), l_prev=80) == 160
        assert l_policy(2, F(1, 10), eps_prev=F(1, 1000), l_prev=80) == 4000

    def test_needs_history(self):
        with pytest.raises(TowerError, match='needs'):
            l_policy(2, F(1, 10))


def test_choose_d():
    D, alpha_prime, M = choose_D(F(1, 5), 13530, 13515, 1, 2)
    assert M >= 5
    assert D > 0
    assert D < F(1, 4 * 13530 ** 3)
    assert alpha_prime == F(1, 5) + F(1, 13530) + D
    assert alpha_prime.denominator % 13530 ** 3 == 1


class TestLadder(object):

    def test_desk(self, desk_ladder):
        stage = desk_ladder.stages[0]
        assert stage.q_next == 13515
        assert desk_ladder.l_seq == [80]
        assert desk_ladder.audit() == []
        assert desk_ladder.eps(1) == F(2, 15)
        assert desk_ladder.current_rotation() == (stage.alpha_next.numerator, 13515,
                                                  stage.alpha_prime_next.numerator,
                                                  stage.q_prime_next)

    def test_cert_conditions(self, desk_ladder):
        conditions = {c.condition for c in desk_ladder.cert}
        assert {'A', 'B', 'C', 'D', 'E', 'F', 'Delta', 'increment', 'mD', 'lsum',
                'ltail'} <= conditions
        closeness = [c for c in desk_ladder.cert if c.condition == 'closeness']
        assert closeness and not closeness[0].enforced

    def test_as_dict(self, desk_ladder):
        out = desk_ladder.as_dict()
        assert out['seed'] == {'p': 2, 'q': 3, 'p_prime': 1, 'q_prime': 5}
        assert len(out['stages']) == 1
        assert out['stages'][0]['m'] == 902

    def test_two_stages(self):
        ladder = build_ladder(DESK_SEED, 2)
        first, second = ladder.stages
        assert second.q == first.q_next
        assert second.q_prime == first.q_prime_next
        assert second.q_next % second.lam == 0
        assert ladder.l_seq[1] > ladder.l_seq[0]
        assert ladder.audit() == []

    def test_condition_b(self):
        with pytest.raises(ConditionViolation) as cm:
            build_ladder((1, 2, 1, 4), 1)
        assert cm.value.condition == 'B'

    def test_explicit_l_fails_summability(self):
        with pytest.raises(ConditionViolation, match='summability') as cm:
            build_ladder(DESK_SEED, 1, l_seq=[2])
        assert cm.value.condition == 'convgen'

    def test_explicit_l_too_short(self):
        with pytest.raises(TowerError, match='no entry for stage 1'):
            build_ladder(DESK_SEED, 1, l_seq=[])

    def test_verifier_bumps(self):
        ladder = build_ladder(DESK_SEED, 1, verifier=lambda st: st.q_next != 13515)
        assert ladder.stages[0].q_next > 13515
        assert ladder.stages[0].q_next % 15 == 0

    def test_no_admissible(self):
        with pytest.raises(NoAdmissibleStage, match='no admissible'):
            build_ladder(DESK_SEED, 1, verifier=lambda st: False, k_ceiling=3)

    def test_strict(self):
        ladder = build_ladder(DESK_SEED, 1, enforce_convergence=True)
        stage = ladder.stages[0]
        assert stage.q_next >= 8 * 80 * constant_C(80, 2) * 15
        closeness = [c for c in ladder.cert if c.condition == 'closeness']
        assert closeness[0].enforced and closeness[0].holds


class TestNextStage(object):

    def test_extends(self):
        ladder = build_ladder(DESK_SEED, 1)
        stage = next_stage(ladder)
        assert stage.n == 2
        assert len(ladder.stages) == 2
        assert stage.q_next > 4 * 2 * stage.lam ** 3


def test_cert_entry():
    entry = CertEntry(1, 'A', 0, 0, '==')
    assert entry.holds
    assert entry.as_dict()['holds'] is True
    assert not CertEntry(1, 'E', F(2), F(1)).holds


class TestRotationDistance(object):

    def test_desk(self, desk_ladder):
        report = check_rotation_distance(desk_ladder)
        assert report['seed_distance'] == 0
        assert report['passed'] is True
        assert report['bound'] == F(4, 10)
        row, = report['increments']
        assert row['increment'] == max(F(1, 13515), F(1, 13530) + desk_ladder.stages[0].D)
        assert report['telescoped_sum'] == row['increment']

    def test_target(self):
        ladder = build_ladder(DESK_SEED, 1, target=(F(2, 3) + F(1, 5), F(1, 5)))
        report = check_rotation_distance(ladder)
        assert report['seed_distance'] == F(1, 5)
        assert report['passed'] is False

    def test_empty(self):
        ladder = build_ladder(DESK_SEED, 0)
        with pytest.raises(TowerError, match='empty ladder'):
            check_rotation_distance(ladder)
