# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: parallel.py
# Project: helpers
# Author: The abc-towers developers
# Created: Tuesday, 2nd November 2021 1:40:19 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Tuesday, 9th November 2021 10:02:45 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import multiprocessing as mp
from typing import Callable, Iterable, List, Sequence, Tuple

import numpy as np

from abc_towers import log
from abc_towers.exceptions import TowerError


__all__ = ['worker_count', 'batches', 'ordered_map']


def worker_count(threads: int = None) -> int:
    """ The number of worker processes to use

    Parameters
    ----------
    threads : int, optional
        An explicit count; -1 takes all cpus.  By default the value of
        ``config.threads``, which honours ABC_TOWERS_THREADS.

    Returns
    -------
    int
        a positive worker count
    """
    if threads is None:
        from abc_towers.config import config
        threads = config.threads
    if threads == -1:
        return mp.cpu_count()
    if threads < 1:
        raise TowerError(f'worker count must be positive or -1, not {threads}')
    return threads


def batches(total: int, chunks: int) -> List[Tuple[int, int]]:
    """ Split range(total) into at most ``chunks`` contiguous (start, stop) pieces """
    if total <= 0:
        return []
    edges = np.linspace(0, total, num=min(chunks, total) + 1, dtype=np.int64)
    return [(int(a), int(b)) for a, b in zip(edges[:-1], edges[1:]) if b > a]


def ordered_map(func: Callable, items: Iterable, threads: int = None) -> list:
    """ Map func over items, in worker processes when more than one is asked for

    The results come back in input order whatever the worker count, so
    every reduction over them is deterministic.  func and the items must be
    picklable when more than one worker is used.

    Parameters
    ----------
    func : callable
        A module-level function of one argument
    items : iterable
        The arguments
    threads : int, optional
        Worker count, by default from the configuration

    Returns
    -------
    list
        func(item) for each item, in order
    """
    items: Sequence = list(items)
    workers = min(worker_count(threads), len(items))
    if workers <= 1:
        return [func(item) for item in items]

    log.debug(f'mapping {len(items)} tasks over {workers} processes')
    with mp.Pool(processes=workers) as pool:
        return pool.map(func, items)
