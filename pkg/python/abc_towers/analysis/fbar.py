# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: fbar.py
# Project: analysis
# Author: The abc-towers developers
# Created: Tuesday, 9th November 2021 2:18:55 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Wednesday, 17th November 2021 6:44:03 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import bisect
import itertools
from collections import Counter, defaultdict
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, Hashable, List, Optional, Sequence, Tuple, Union

import numpy as np

from abc_towers import log
from abc_towers.config import config
from abc_towers.exceptions import TowerError
from abc_towers.geometry.rational import ceil_sqrt_ratio
from abc_towers.helpers.parallel import ordered_map


__all__ = ['SymbolName', 'MatchWitness', 'QuadrupleSample', 'LevelPartition',
           'ProductPartition', 'MatchConstants', 'lcs', 'fbar_distance', 'fbar_bruteforce',
           'level_partition', 'names_from_towers', 'product_name', 'alignment_bound',
           'closelevel_probability', 'verify_match_lemma', 'ks_criterion_check']

Names = Union['SymbolName', Sequence[Hashable]]

#: entries of the full dynamic programming table above which the sparse engine is used
FULL_TABLE_LIMIT = 4 * 10 ** 6


@dataclass(frozen=True)
class SymbolName:
    """ A finite name, the partition elements visited along an orbit

    Attributes
    ----------
    symbols : tuple of int
        the non-negative element IDs
    """
    symbols: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'symbols', tuple(int(s) for s in self.symbols))
        if not self.symbols:
            raise TowerError('a name has at least one symbol')
        if min(self.symbols) < 0:
            raise TowerError('name symbols are non-negative element IDs')

    def __len__(self):
        return len(self.symbols)

    def __iter__(self):
        return iter(self.symbols)

    def __getitem__(self, index):
        return self.symbols[index]


@dataclass(frozen=True)
class MatchWitness:
    """ An order preserving matching of two names

    Attributes
    ----------
    k_indices : tuple of int
        strictly increasing positions in the first name
    l_indices : tuple of int
        strictly increasing positions in the second name
    """
    k_indices: Tuple[int, ...]
    l_indices: Tuple[int, ...]

    def __post_init__(self):
        object.__setattr__(self, 'k_indices', tuple(self.k_indices))
        object.__setattr__(self, 'l_indices', tuple(self.l_indices))
        if len(self.k_indices) != len(self.l_indices):
            raise TowerError('witness index sequences differ in length')
        for seq in (self.k_indices, self.l_indices):
            if any(b <= a for a, b in zip(seq, seq[1:])):
                raise TowerError('witness indices must be strictly increasing')

    def __len__(self):
        return len(self.k_indices)

    def valid_for(self, a: Names, b: Names) -> bool:
        """ Whether every matched pair carries equal symbols """
        a, b = list(a), list(b)
        return all(0 <= k < len(a) and 0 <= j < len(b) and a[k] == b[j]
                   for k, j in zip(self.k_indices, self.l_indices))


# longest common subsequence engines

def _lcs_full(a: Sequence, b: Sequence) -> List[Tuple[int, int]]:
    """ Quadratic table with backtracking """
    n, m = len(a), len(b)
    table = np.zeros((n + 1, m + 1), dtype=np.int32)
    above = [0] * (m + 1)
    for i in range(1, n + 1):
        row, ai = [0] * (m + 1), a[i - 1]
        for j in range(1, m + 1):
            if ai == b[j - 1]:
                row[j] = above[j - 1] + 1
            else:
                row[j] = max(above[j], row[j - 1])
        table[i] = row
        above = row
    pairs = []
    i, j = n, m
    while i > 0 and j > 0:
        if a[i - 1] == b[j - 1] and table[i, j] == table[i - 1, j - 1] + 1:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
        elif table[i - 1, j] >= table[i, j - 1]:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def _lcs_banded(a: Sequence, b: Sequence, band: int) -> List[Tuple[int, int]]:
    """ Table restricted to |i - j| <= band; exact when an optimal matching stays inside """
    n, m = len(a), len(b)
    width = 2 * band + 1
    table = np.zeros((n + 1, width), dtype=np.int32)

    def get(i, j):
        if j < 0 or j > m or abs(i - j) > band:
            return -1
        if i == 0 or j == 0:
            return 0
        return int(table[i, j - i + band])

    for i in range(1, n + 1):
        for j in range(max(1, i - band), min(m, i + band) + 1):
            if a[i - 1] == b[j - 1]:
                value = get(i - 1, j - 1) + 1
            else:
                value = max(get(i - 1, j), get(i, j - 1), get(i - 1, j - 1), 0)
            table[i, j - i + band] = value

    pairs = []
    i, j = n, min(m, n + band)
    if abs(i - j) > band:
        return pairs
    while i > 0 and j > 0:
        here = get(i, j)
        if here <= 0:
            break
        if a[i - 1] == b[j - 1] and here == get(i - 1, j - 1) + 1:
            pairs.append((i - 1, j - 1))
            i, j = i - 1, j - 1
            continue
        up, left, diag = get(i - 1, j), get(i, j - 1), get(i - 1, j - 1)
        if diag >= max(up, left):
            i, j = i - 1, j - 1
        elif up >= left:
            i -= 1
        else:
            j -= 1
    pairs.reverse()
    return pairs


def _lcs_sparse(a: Sequence, b: Sequence) -> List[Tuple[int, int]]:
    """ Hunt-Szymanski: threshold array over the matching pairs """
    positions = defaultdict(list)
    for j in range(len(b) - 1, -1, -1):
        positions[b[j]].append(j)

    thresh = []
    links = []
    for i, symbol in enumerate(a):
        # positions in decreasing order so one row extends each threshold at most once
        for j in positions.get(symbol, ()):
            k = bisect.bisect_left(thresh, j)
            previous = links[k - 1] if k else None
            if k == len(thresh):
                thresh.append(j)
                links.append((i, j, previous))
            elif j < thresh[k]:
                thresh[k] = j
                links[k] = (i, j, previous)

    pairs = []
    node = links[-1] if links else None
    while node is not None:
        pairs.append(node[:2])
        node = node[2]
    pairs.reverse()
    return pairs


def lcs(a: Names, b: Names, engine: str = 'auto', band: int = None) -> List[Tuple[int, int]]:
    """ An optimal order preserving matching of two sequences

    Parameters
    ----------
    a : sequence
        The first sequence
    b : sequence
        The second sequence
    engine : str
        'full', 'banded', 'sparse' or 'auto'.  'auto' uses the quadratic
        table for small inputs and Hunt-Szymanski when the number of equal
        pairs is small or the table would be too large
    band : int, optional
        Half width for the banded engine

    Returns
    -------
    list of tuple
        matched (i, j) position pairs, increasing in both
    """
    a, b = list(a), list(b)
    if not a or not b:
        return []
    if engine == 'auto':
        counts = Counter(b)
        matches = sum(counts.get(s, 0) for s in a)
        size = len(a) * len(b)
        engine = 'sparse' if size > FULL_TABLE_LIMIT or matches * 8 < size else 'full'
    if engine == 'full':
        return _lcs_full(a, b)
    if engine == 'sparse':
        return _lcs_sparse(a, b)
    if engine == 'banded':
        if band is None or band < 0:
            raise TowerError('the banded engine needs a non-negative band')
        return _lcs_banded(a, b, band)
    raise TowerError(f'unknown matching engine {engine!r}')


def fbar_distance(a: Names, b: Names, engine: str = 'auto',
                  band: int = None) -> Tuple[Fraction, MatchWitness]:
    """ The f-bar distance 1 - m/n of two names of length n

    Parameters
    ----------
    a : SymbolName or sequence
        The first name
    b : SymbolName or sequence
        The second name, of the same length
    engine : str
        The matching engine, see `lcs`
    band : int, optional
        Half width for the banded engine

    Returns
    -------
    tuple
        the exact distance and an optimal witness

    Raises
    ------
    TowerError
        when the names differ in length or are empty
    """
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise TowerError(f'f-bar compares names of equal length, not {len(a)} and {len(b)}')
    if not a:
        raise TowerError('f-bar of empty names')
    pairs = lcs(a, b, engine=engine, band=band)
    witness = MatchWitness([p[0] for p in pairs], [p[1] for p in pairs])
    return 1 - Fraction(len(pairs), len(a)), witness


def fbar_bruteforce(a: Names, b: Names) -> Fraction:
    """ f-bar by exhaustive search over subsequences of the first name """
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise TowerError(f'f-bar compares names of equal length, not {len(a)} and {len(b)}')

    def embeds(seq):
        it = iter(b)
        return all(any(x == y for y in it) for x in seq)

    for size in range(len(a), 0, -1):
        if any(embeds([a[k] for k in combo])
               for combo in itertools.combinations(range(len(a)), size)):
            return 1 - Fraction(size, len(a))
    return Fraction(1)


# names of the periodic process

@dataclass(frozen=True)
class LevelPartition:
    """ The partition xi_n plus one junk element, with the junk model

    Tower 2 levels carry IDs 0..m-1, tower 1 levels m..2m-2 and the junk
    element 2m-1.  Under the 'wraparound' model the first symbol after
    each passage through the top of tower s is junk in the last
    ``junk_columns[s]`` columns; 'random' marks that symbol with
    probability ``junk_probability[s]``; 'none' never marks it.

    Attributes
    ----------
    m : int
        the height of tower 2
    columns : int
        columns per tower, one per base box
    junk_columns : dict
        the number of marked columns per tower
    junk_probability : dict
        the mismatch fraction of the top level of each tower
    model : str
        'wraparound', 'random' or 'none'
    """
    m: int
    columns: int
    junk_columns: Dict[int, int] = field(default_factory=lambda: {1: 0, 2: 0})
    junk_probability: Dict[int, Fraction] = field(default_factory=lambda: {1: Fraction(0),
                                                                           2: Fraction(0)})
    model: str = 'wraparound'

    def __post_init__(self):
        if self.m < 2:
            raise TowerError(f'tower height {self.m} is below 2')
        if self.model not in ('wraparound', 'random', 'none'):
            raise TowerError(f'unknown junk model {self.model!r}')

    @property
    def junk(self) -> int:
        return 2 * self.m - 1

    @property
    def size(self) -> int:
        return 2 * self.m

    def height(self, s: int) -> int:
        return self.m - 1 if s == 1 else self.m

    def level_id(self, s: int, i: int) -> int:
        return i if s == 2 else self.m + i

    def is_junk_column(self, s: int, c: int) -> bool:
        return self.model == 'wraparound' and c >= self.columns - self.junk_columns[s]

    def clean_columns(self, s: int) -> int:
        """ Number of columns free of junk, at least one """
        if self.model != 'wraparound':
            return self.columns
        return max(self.columns - self.junk_columns[s], 1)

    def as_dict(self) -> dict:
        return {'m': self.m, 'columns': self.columns, 'junk_columns': self.junk_columns,
                'junk_probability': self.junk_probability, 'model': self.model,
                'junk': self.junk}


def level_partition(pair, model: str = 'wraparound', speed=None) -> LevelPartition:
    """ The level partition of a tower pair with junk fractions from the exact speed

    E_n = {T != sigma_n} meets the top level of tower s in the fraction
    wraparound_s / (2 mu(level)).
    """
    if speed is None:
        from abc_towers.analysis.approximation import speed_exact
        speed = speed_exact(pair)
    lam = pair.stage.lam
    fractions = {s: speed.wraparound[s] / (2 * pair.level_measure(s)) for s in (1, 2)}
    junk = {s: min(lam, -((-fractions[s] * lam).numerator // (fractions[s] * lam).denominator))
            for s in (1, 2)}
    return LevelPartition(m=pair.stage.m, columns=lam, junk_columns=junk,
                          junk_probability=fractions, model=model)


def _name_array(partition: LevelPartition, point: Tuple[int, int, int], length: int,
                rng: np.random.Generator = None) -> np.ndarray:
    s, i, c = point
    h = partition.height(s)
    if not 0 <= i < h:
        raise TowerError(f'level {i} outside tower {s} of height {h}')
    if not 0 <= c < partition.columns:
        raise TowerError(f'column {c} outside [0, {partition.columns})')
    steps = np.arange(length, dtype=np.int64)
    levels = (i + steps) % h
    ids = levels + (0 if s == 2 else partition.m)
    wraps = (levels == 0) & (steps > 0)
    if partition.model == 'wraparound' and partition.is_junk_column(s, c):
        ids[wraps] = partition.junk
    elif partition.model == 'random' and wraps.any():
        rng = rng or np.random.default_rng(0)
        hit = rng.random(int(wraps.sum())) < float(partition.junk_probability[s])
        where = np.flatnonzero(wraps)[hit]
        ids[where] = partition.junk
    return ids


def names_from_towers(pair, partition: LevelPartition, point: Tuple[int, int, int],
                      length: int, rng: np.random.Generator = None) -> SymbolName:
    """ The sigma_n name of a point given by (tower, level, column)

    Parameters
    ----------
    pair : TowerPair or None
        The towers, used to check the partition heights when given
    partition : LevelPartition
        The level partition with its junk model
    point : tuple
        (s, i, c): tower, level and column of the point
    length : int
        The name length N >= 1
    rng : numpy.random.Generator, optional
        Source for the 'random' junk model

    Returns
    -------
    SymbolName
        the name of the orbit from time 0 to N - 1
    """
    if length < 1:
        raise TowerError('names have length at least 1')
    if pair is not None and pair.stage.m != partition.m:
        raise TowerError('partition does not belong to the tower pair')
    return SymbolName(_name_array(partition, point, length, rng))


def product_name(a: Names, b: Names, base: int) -> SymbolName:
    """ The name in the product partition, pairs (a_k, b_k) coded as a_k base + b_k """
    a, b = list(a), list(b)
    if len(a) != len(b):
        raise TowerError('product names need factors of equal length')
    return SymbolName(x * base + y for x, y in zip(a, b))


# the matching lemma

@dataclass(frozen=True)
class MatchConstants:
    """ The constants of the matching argument

    Attributes
    ----------
    r : Fraction
        lower bound for the tower measures
    c1 : Fraction
        speed constant, d(xi_n, T, sigma_n) <= c1 / m^2
    """
    r: Fraction = Fraction(1, 4)
    c1: Fraction = Fraction(12)

    def __post_init__(self):
        object.__setattr__(self, 'r', Fraction(self.r))
        object.__setattr__(self, 'c1', Fraction(self.c1))
        if not 0 < self.r <= 1:
            raise TowerError(f'r = {self.r} outside (0, 1]')

    @property
    def alpha0(self) -> Fraction:
        return min(self.r ** 4 / 4, (self.r / 20) ** 2 / self.c1 ** 2)

    @property
    def c2_tilde(self) -> Fraction:
        return 2 / self.r ** 4

    @property
    def c2(self) -> Fraction:
        return self.c2_tilde + 1

    def k_max(self, m: int, alpha: Fraction) -> int:
        """ ceil(alpha (m - 1) / r^4) """
        x = alpha * (m - 1) / self.r ** 4
        return -((-x.numerator) // x.denominator)

    def alpha_for(self, eps: Fraction) -> Fraction:
        """ alpha(eps) = min(alpha0, eps^2 / (4 c2^2)) """
        return min(self.alpha0, Fraction(eps) ** 2 / (4 * self.c2 ** 2))

    def as_dict(self) -> dict:
        return {'r': self.r, 'c1': self.c1, 'alpha0': self.alpha0, 'c2_tilde': self.c2_tilde,
                'c2': self.c2}


def _block_length(m: int, alpha: Fraction) -> int:
    """ ceil(sqrt(alpha) m) """
    return ceil_sqrt_ratio(alpha * m * m)


def _below_sqrt(x: Fraction, c: Fraction, alpha: Fraction) -> bool:
    """ Exact x < c sqrt(alpha) """
    return x < 0 or x * x < c * c * alpha


def alignment_bound(m: int, alpha, r=Fraction(1, 4), k: int = 1) -> Fraction:
    """ The f-bar bound (k+1) m / (m ceil(sqrt(alpha) m)) of the matched blocks

    Parameters
    ----------
    m : int
        Height of the taller tower, m_n >= 2
    alpha : Fraction
        0 < alpha <= 1
    r : Fraction
        Tower measure lower bound, 0 < r <= 1
    k : int
        Level offset, 0 <= k <= ceil(alpha (m - 1) / r^4)

    Returns
    -------
    Fraction
        the exact bound
    """
    alpha, r = Fraction(alpha), Fraction(r)
    if not 0 < alpha <= 1:
        raise TowerError(f'alpha = {alpha} outside (0, 1]')
    if m < 2:
        raise TowerError(f'tower height {m} is below 2')
    k_max = MatchConstants(r=r).k_max(m, alpha)
    if not 0 <= k <= k_max:
        raise TowerError(f'offset {k} outside [0, {k_max}]')
    return Fraction((k + 1) * m, m * _block_length(m, alpha))


def closelevel_probability(m: int, k_max: int) -> Fraction:
    """ Exact probability that two uniform tower-1 levels differ by at most k_max mod m - 1 """
    return Fraction(min(2 * k_max + 1, m - 1), m - 1)


@dataclass(frozen=True)
class QuadrupleSample:
    """ Levels and columns of (x, y, x~, y~) in towers 1, 2, 1, 2

    Attributes
    ----------
    levels : tuple of int
        the four levels
    columns : tuple of int
        the four columns
    s : tuple of int
        steps (s, s~) taking y and y~ to the bottom of tower 2
    offset : int
        the representative k of the level difference mod m - 1 with the
        smallest absolute value
    """
    levels: Tuple[int, int, int, int]
    columns: Tuple[int, int, int, int]
    s: Tuple[int, int]
    offset: int

    def points(self):
        return ((1, self.levels[0], self.columns[0]), (2, self.levels[1], self.columns[1]),
                (1, self.levels[2], self.columns[2]), (2, self.levels[3], self.columns[3]))


def _offset(m: int, x_level: int, s: int, xt_level: int, st: int) -> int:
    d = ((x_level + s) - (xt_level + st)) % (m - 1)
    return d if d <= (m - 1) // 2 else d - (m - 1)


def _sample_quadruple(rng: np.random.Generator, partition: LevelPartition, k_max: int,
                      reference: Optional[Tuple[int, int, int, int]] = None,
                      junk: bool = False) -> QuadrupleSample:
    """ A quadruple satisfying the close-level condition

    Columns are drawn from the junk-free columns unless ``junk`` is set, in
    which case they are drawn from the junk columns when there are any.
    """
    m = partition.m

    def column(s):
        clean = partition.clean_columns(s)
        if junk and clean < partition.columns:
            return int(rng.integers(clean, partition.columns))
        return int(rng.integers(0, clean))

    if reference is None:
        x_level, y_level = int(rng.integers(0, m - 1)), int(rng.integers(0, m))
        cx, cy = column(1), column(2)
    else:
        x_level, y_level, cx, cy = reference
    yt_level, xt_level = int(rng.integers(0, m)), int(rng.integers(0, m - 1))
    k = int(rng.integers(-k_max, k_max + 1))
    s, st = (-y_level) % m, (-yt_level) % m
    # move x~ so that its level at time s~ sits k below that of x at time s
    xt_level = (x_level + s - k - st) % (m - 1)
    offset = _offset(m, x_level, s, xt_level, st)
    return QuadrupleSample((x_level, y_level, xt_level, yt_level),
                           (cx, cy, column(1), column(2)), (s, st), offset)


def _pair_name(partition: LevelPartition, first, second, length: int,
               mapping: Optional[np.ndarray] = None, rng=None) -> List[int]:
    a = _name_array(partition, first, length, rng)
    b = _name_array(partition, second, length, rng)
    if mapping is not None:
        a, b = mapping[a], mapping[b]
    base = partition.size if mapping is None else int(mapping.max()) + 1
    return (a * base + b).tolist()


def _constructed_alignment(sample: QuadrupleSample, m: int, length: int, a: Sequence,
                           b: Sequence) -> MatchWitness:
    """ Matching of (x,y) from time s with (x~,y~) from time s~ + k m, or the reverse """
    s, st = sample.s
    k = abs(sample.offset)
    start_a, start_b = (s, st + k * m) if sample.offset >= 0 else (s + k * m, st)
    span = max(0, length - max(start_a, start_b))
    pairs = [(start_a + t, start_b + t) for t in range(span)
             if a[start_a + t] == b[start_b + t]]
    return MatchWitness([p[0] for p in pairs], [p[1] for p in pairs])


@dataclass(frozen=True)
class _MatchTask:
    partition: LevelPartition
    length: int
    k_max: int
    seed: int
    alpha: Fraction
    constants: MatchConstants
    reference: Optional[Tuple[int, ...]] = None


def _match_trial(task: _MatchTask, trial: int) -> dict:
    rng = np.random.default_rng([task.seed, trial])
    partition, length, m = task.partition, task.length, task.partition.m
    sample = _sample_quadruple(rng, partition, task.k_max)
    x, y, xt, yt = sample.points()
    a = _pair_name(partition, x, y, length)
    b = _pair_name(partition, xt, yt, length)
    dp, _ = fbar_distance(a, b)
    witness = _constructed_alignment(sample, m, length, a, b)
    aligned = 1 - Fraction(len(witness), length)
    k = abs(sample.offset)
    bound = alignment_bound(m, task.alpha, task.constants.r, k) if k <= task.k_max else None
    result = {'trial': trial, 'levels': sample.levels, 'columns': sample.columns, 'k': k,
              'dp': dp, 'alignment': aligned, 'bound': bound,
              'dp_below_alignment': dp <= aligned,
              'alignment_below_bound': bound is None or aligned < bound,
              'below_c2_tilde': _below_sqrt(dp, task.constants.c2_tilde, task.alpha)}
    if task.reference is not None:
        ref = list(task.reference)
        to_ref, _ = fbar_distance(a, ref)
        from_ref, _ = fbar_distance(ref, b)
        result['triangle'] = dp <= to_ref + from_ref
        result['via_reference'] = to_ref + from_ref
    result['ok'] = (result['dp_below_alignment'] and result['alignment_below_bound']
                    and result['below_c2_tilde'])
    return result


def verify_match_lemma(pair, alpha, trials: int = None, seed: int = 0,
                       constants: MatchConstants = None, partition: LevelPartition = None,
                       triangle_checks: int = 20, threads: int = None) -> dict:
    """ Check the matching lemma on sampled quadruples of the stage towers

    Quadruples (x, y, x~, y~) in towers 1, 2, 1, 2 are drawn from junk-free
    columns subject to the close-level condition.  For each, the exact
    f-bar distance of the product names of length N = m ceil(sqrt(alpha) m)
    is computed and compared with the constructed block alignment and its
    bound (k+1) m / N, and must stay below c2~ sqrt(alpha).  The first
    ``triangle_checks`` trials also check the reduction through a fixed
    reference pair.

    Parameters
    ----------
    pair : TowerPair
        The towers
    alpha : Fraction
        The matching parameter
    trials : int, optional
        Number of quadruples, by default config.fbar_trials
    seed : int
        Root seed; trial t uses the stream (seed, t)
    constants : MatchConstants, optional
        r and c1, by default r = 1/4 and c1 = 12
    partition : LevelPartition, optional
        By default the wraparound junk model from the exact speed
    triangle_checks : int
        Trials that also run the reference reduction
    threads : int, optional
        Worker processes

    Returns
    -------
    dict
        the per-trial results, the close-level probabilities and the verdict
    """
    alpha = Fraction(alpha)
    constants = constants or MatchConstants()
    trials = trials or config.fbar_trials
    partition = partition or level_partition(pair)
    m = partition.m
    if m < 3:
        raise TowerError(f'tower height {m} leaves no room for a level offset')
    length = m * _block_length(m, alpha)
    k_max = constants.k_max(m, alpha)

    rng = np.random.default_rng([seed, trials])
    ref_sample = _sample_quadruple(rng, partition, k_max)
    ref_x, ref_y = ref_sample.points()[:2]
    reference = tuple(_pair_name(partition, ref_x, ref_y, length))

    base = _MatchTask(partition, length, k_max, seed, alpha, constants)
    checked = _MatchTask(partition, length, k_max, seed, alpha, constants, reference)
    results = ordered_map(partial(_match_trial, checked), range(min(triangle_checks, trials)),
                          threads=threads)
    results += ordered_map(partial(_match_trial, base), range(len(results), trials),
                           threads=threads)

    # unconstrained level quadruples for the empirical close-level rate
    levels = rng.integers(0, [m - 1, m, m - 1, m], size=(max(trials, 1000), 4))
    s = (-levels[:, 1]) % m
    st = (-levels[:, 3]) % m
    diff = ((levels[:, 0] + s) - (levels[:, 2] + st)) % (m - 1)
    close = np.minimum(diff, (m - 1) - diff) <= k_max
    triangle = [r['triangle'] for r in results if 'triangle' in r]
    violations = [r for r in results if not r['ok']]

    report = {'stage': pair.stage.n if pair is not None else None, 'alpha': alpha,
              'alpha_below_alpha0': alpha < constants.alpha0, 'constants': constants.as_dict(),
              'N': length, 'k_max': k_max, 'trials': trials,
              'closelevel_probability': closelevel_probability(m, k_max),
              'closelevel_bound': Fraction(2 * k_max + 1, m - 1),
              'closelevel_empirical': float(close.mean()),
              'max_dp': max(r['dp'] for r in results) if results else None,
              'below_c2_tilde': sum(r['below_c2_tilde'] for r in results),
              'triangle': {'checked': len(triangle), 'holds': all(triangle)},
              'partition': partition.as_dict(),
              'violations': violations[:5], 'samples': results[:10],
              'offsets': [{'trial': r['trial'], 'k': r['k'], 'bound': r['bound'],
                           'alignment': r['alignment'], 'dp': r['dp']} for r in results],
              'passed': not violations and all(triangle)}
    log.info(f'match lemma at alpha = {alpha}: {trials} quadruples, '
             f'{len(violations)} violations, N = {length}')
    return report


@dataclass(frozen=True)
class ProductPartition:
    """ A test partition of X x X coarser than xi_n x xi_n

    The levels of each tower are grouped into ``blocks`` consecutive runs
    (None keeps every level); junk stays its own element.  With
    ``junk_columns`` set, points are drawn from the junk columns, the
    adversarial case.
    """
    name: str
    blocks: Optional[int] = None
    junk_columns: bool = False

    def mapping(self, partition: LevelPartition) -> Optional[np.ndarray]:
        if self.blocks is None:
            return None
        m, b = partition.m, self.blocks
        table = np.empty(partition.size, dtype=np.int64)
        table[:m] = np.arange(m) * b // m
        table[m:2 * m - 1] = b + np.arange(m - 1) * b // (m - 1)
        table[partition.junk] = 2 * b
        return table


@dataclass(frozen=True)
class _CriterionTask:
    partition: LevelPartition
    test: ProductPartition
    length: int
    k_max: int
    seed: int
    reference: Tuple[int, int, int, int]


def _criterion_trial(task: _CriterionTask, trial: int) -> Fraction:
    rng = np.random.default_rng([task.seed, trial])
    mapping = task.test.mapping(task.partition)
    first = _sample_quadruple(rng, task.partition, task.k_max, task.reference,
                              junk=task.test.junk_columns)
    second = _sample_quadruple(rng, task.partition, task.k_max, task.reference,
                               junk=task.test.junk_columns)
    a = _pair_name(task.partition, *first.points()[2:], task.length, mapping, rng)
    b = _pair_name(task.partition, *second.points()[2:], task.length, mapping, rng)
    value, _ = fbar_distance(a, b)
    return value


def ks_criterion_check(pair, eps_schedule: Sequence, partitions: Sequence = None,
                       trials: int = None, seed: int = 0, constants: MatchConstants = None,
                       partition: LevelPartition = None, threads: int = None) -> dict:
    """ Finite-scale check of the f-bar criterion for loose Bernoullicity of T x T

    For each eps the parameter alpha(eps) = min(alpha0, eps^2/(4 c2^2)) and
    N = m ceil(sqrt(alpha) m) are formed, a set K of pairs close in level to
    a fixed reference is sampled, and the f-bar distances of sampled pairs
    of K are compared with eps under each test partition.  This is a
    diagnostic and proves nothing about the limit.
    """
    constants = constants or MatchConstants()
    trials = trials or config.fbar_trials
    partition = partition or level_partition(pair)
    partitions = list(partitions or [ProductPartition('levels')])
    m = partition.m
    rows = []
    for eps in eps_schedule:
        eps = Fraction(eps)
        alpha = constants.alpha_for(eps)
        length = m * _block_length(m, alpha)
        k_max = constants.k_max(m, alpha)
        rng = np.random.default_rng([seed, 0, len(rows)])
        ref = _sample_quadruple(rng, partition, k_max)
        reference = (ref.levels[0], ref.levels[1], ref.columns[0], ref.columns[1])
        for test in partitions:
            task = _CriterionTask(partition, test, length, k_max, seed + len(rows) + 1, reference)
            values = ordered_map(partial(_criterion_trial, task), range(trials), threads=threads)
            failures = sum(v >= eps for v in values)
            rows.append({'eps': eps, 'alpha': alpha, 'N': length, 'k_max': k_max,
                         'partition': test.name, 'samples': len(values),
                         'max_fbar': max(values) if values else None,
                         'failure_fraction': Fraction(failures, max(len(values), 1)),
                         'passed': eps >= 1 or failures == 0})
            log.debug(f'criterion check eps = {eps}, partition {test.name}: '
                      f'{failures} of {len(values)} pairs at or above eps')
    return {'stage': pair.stage.n if pair is not None else None,
            'constants': constants.as_dict(), 'rows': rows,
            'passed': all(r['passed'] for r in rows)}
