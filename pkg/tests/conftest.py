# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: conftest.py
# Project: tests
# Author: The abc-towers developers
# Created: Monday, 4th October 2021 10:02:11 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 6th December 2021 3:40:18 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
from fractions import Fraction

import pytest

from abc_towers import cfg_params
from abc_towers.analysis.towers import build_bases
from abc_towers.config import Config, config
from abc_towers.construction.combinatorics import derive_stage
from abc_towers.construction.scheduler import build_ladder


#: the seed rotation (2/3, 1/5) of the desk ladder
DESK_SEED = (2, 3, 1, 5)


def pytest_addoption(parser):
    """ Add new options to the pytest command-line """
    parser.addoption('--runslow', action='store_true', default=False,
                     help='run the acceptance-size tests marked slow')


def pytest_collection_modifyitems(config, items):
    ''' skip slow tests unless --runslow is given '''
    if config.getoption('--runslow'):
        return
    skip_slow = pytest.mark.skip(reason='needs --runslow')
    for item in items:
        if 'slow' in item.keywords:
            item.add_marker(skip_slow)


@pytest.fixture(scope='session')
def desk_ladder():
    ''' the one-stage desk ladder, q_2 = 13515 '''
    return build_ladder(DESK_SEED, 1)


@pytest.fixture(scope='session')
def desk_stage(desk_ladder):
    ''' stage 1 of the desk ladder: q = 3, q' = 5, m = 902 '''
    return desk_ladder.stages[0]


@pytest.fixture(scope='session')
def desk_pair(desk_stage):
    ''' the tower pair of the desk stage '''
    return build_bases(desk_stage)


@pytest.fixture()
def small_stage():
    ''' the stage of the combinatorics picture: q_{n+1} = 240, m = 17, no D '''
    return derive_stage(2, 3, 1, 5, 240)


@pytest.fixture()
def mockedcfg(monkeypatch):
    ''' fixture to return a mocked Config with modified cfg_params '''
    monkeypatch.setitem(cfg_params, 'exhaustive_limit', 500)
    monkeypatch.setitem(cfg_params, 'mc_samples', 2000)
    monkeypatch.delenv('ABC_TOWERS_THREADS', raising=False)
    cfg = Config()
    yield cfg
    cfg = None


@pytest.fixture()
def restore_config():
    ''' restore the runtime config after a test that changes it '''
    saved = {name: getattr(config, f'_{name}') for name in
             ('exhaustive_limit', 'enumeration_limit', 'lattice_limit', 'mc_samples',
              'mc_confidence', 'mc_chunks', 'fbar_trials', 'svg_precision', 'threads')}
    yield config
    for name, value in saved.items():
        setattr(config, f'_{name}', value)


def fr(value) -> Fraction:
    ''' shorthand for exact literals in tests '''
    return Fraction(value)
