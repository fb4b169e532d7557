# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: towers.py
# Project: analysis
# Author: The abc-towers developers
# Created: Monday, 1st November 2021 9:05:33 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Thursday, 11th November 2021 3:27:08 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
import warnings
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, Iterator, List, Optional, Tuple

from abc_towers import log
from abc_towers.config import config
from abc_towers.construction.combinatorics import CellAssignment, StageParams
from abc_towers.construction.conjugations import diameter_check, slanted_good_cell
from abc_towers.exceptions import (AmbiguousContainment, ConditionViolation,
                                   TowerAnalyticOnlyWarning, TowerError)
from abc_towers.geometry.boxes import Box, BoxUnion, verify_pairwise_disjoint
from abc_towers.geometry.parallelogram import Parallelogram
from abc_towers.geometry.rational import Interval, mod1
from abc_towers.helpers.parallel import batches, ordered_map


__all__ = ['TowerPair', 'ColumnSet', 'towerbase_inequality', 'base_cell', 'build_bases',
           'verify_disjointness', 'parallelogram_tiling', 'substantiality',
           'generating_diagnostics', 'build_columns']


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _ceil(x: Fraction) -> int:
    return -((-x.numerator) // x.denominator)


def _fiber(stage: StageParams) -> Tuple[Interval, ...]:
    return tuple(Interval(stage.eps, 1 - stage.eps) for _ in range(stage.d - 2))


def towerbase_inequality(stage: StageParams) -> dict:
    """ The chain q q'/qbar' < q q'/q_{n+1} < eps~/(8 q q') of the tower bases """
    lam = stage.lam
    left = Fraction(lam, stage.qbar_next)
    middle = Fraction(lam, stage.q_next)
    right = stage.eps_tilde / (8 * lam)
    return {'left': left, 'middle': middle, 'right': right, 'holds': left < middle < right}


def _check_preconditions(stage: StageParams) -> None:
    if stage.Delta <= 0:
        raise ConditionViolation('Delta', lhs=Fraction(0), rhs=stage.Delta, relation='<',
                                 stage=stage.n)
    if stage.m * stage.D >= Fraction(1, stage.q_next):
        raise ConditionViolation('D', lhs=stage.m * stage.D, rhs=Fraction(1, stage.q_next),
                                 relation='<', stage=stage.n)


def base_cell(stage: StageParams, k: int, s: int,
              assignment: Optional[CellAssignment] = None) -> Box:
    """ The base box C^(s)_k of tower s, in closed form for any 0 <= k < q q'

    Parameters
    ----------
    stage : StageParams
        The stage
    k : int
        The cell index k(i, j)
    s : int
        The tower, 1 or 2
    assignment : CellAssignment, optional
        The cell bookkeeping of the stage

    Returns
    -------
    Box
        the exact base box
    """
    if s not in (1, 2):
        raise TowerError(f'tower must be 1 or 2, not {s}')
    if not 0 <= k < stage.lam:
        raise TowerError(f'cell index {k} outside [0, {stage.lam})')
    assignment = assignment or CellAssignment(stage)
    lam, e, et = stage.lam, stage.eps, stage.eps_tilde
    i, j = assignment.ij(k)
    a, a_prime = assignment.offsets(i, j, s)
    if s == 1:
        t1 = Fraction(a, stage.q) + (i + et / 2) / lam
        t2 = Fraction(a_prime, stage.q_prime) + (j + 3 * e / 2) / lam - k * stage.Delta
        return Box.from_bounds(t1, t1 + Fraction(lam, stage.q_next), t2,
                               t2 + (1 - 4 * e) / (2 * lam), _fiber(stage))
    t1 = Fraction(a, stage.q) + (i + 3 * e / 2) / lam + Fraction(k, stage.q_next)
    t2 = (Fraction(a_prime, stage.q_prime) + (j + et / 2) / lam + k * stage.m * stage.D
          + 2 * e / stage.qbar_next)
    return Box.from_bounds(t1, t1 + (1 - 4 * e) / (2 * lam), t2,
                           t2 + (lam - 4 * e) / stage.qbar_next, _fiber(stage))


class TowerPair(object):
    """ The two towers of a stage, upstairs in the rotation picture

    Tower 1 has height m_n - 1 and tower 2 height m_n.  Level i of tower s is
    R^i of its base, where R is the rotation by (alpha_{n+1}, alpha'_{n+1}),
    and consists of the q q' boxes R^(i + k h_s) C^(s)_0.  Base boxes and
    level boxes are computed on demand, so a pair is usable for stages far
    too large to materialize.

    Parameters
    ----------
    stage : StageParams
        The stage
    assignment : CellAssignment, optional
        The cell bookkeeping, built from the stage by default
    """

    def __init__(self, stage: StageParams, assignment: Optional[CellAssignment] = None):
        self.stage = stage
        self.assignment = assignment or CellAssignment(stage)
        self.rotation = (stage.alpha_next, stage.alpha_prime_next)
        self.report = {}
        self._cells = {}
        self._bases = {}

    def __repr__(self):
        return f'<TowerPair(stage={self.stage.n}, h1={self.h1}, h2={self.h2})>'

    @property
    def h1(self) -> int:
        return self.stage.m - 1

    @property
    def h2(self) -> int:
        return self.stage.m

    def height(self, s: int) -> int:
        return self.h1 if s == 1 else self.h2

    def cell(self, s: int, k: int) -> Box:
        """ The base box C^(s)_k """
        key = (s, k)
        if key not in self._cells:
            self._cells[key] = base_cell(self.stage, k, s, self.assignment)
        return self._cells[key]

    def base(self, s: int, limit: int = None) -> BoxUnion:
        """ The base of tower s as an exact union of q q' boxes """
        limit = limit or config.exhaustive_limit
        if self.stage.lam > limit:
            raise TowerError(f'refusing to materialize {self.stage.lam} base boxes')
        if s not in self._bases:
            self._bases[s] = BoxUnion((self.cell(s, k) for k in range(self.stage.lam)),
                                      merge=False)
        return self._bases[s]

    @property
    def base1(self) -> BoxUnion:
        return self.base(1)

    @property
    def base2(self) -> BoxUnion:
        return self.base(2)

    def level(self, s: int, i: int) -> BoxUnion:
        """ Level i of tower s, R^i applied to the base """
        if not 0 <= i < self.height(s):
            raise TowerError(f'level {i} outside tower {s} of height {self.height(s)}')
        return self.base(s).rotate(*self.rotation, power=i)

    def level_box(self, s: int, t: int) -> Box:
        """ R^t C^(s)_0, a box of level t mod h_s """
        return self.cell(s, 0).rotate(*self.rotation, power=t)

    def level_boxes(self, s: int) -> Iterator[Box]:
        """ Every box of every level of tower s, R^t C^(s)_0 for 0 <= t < h_s q q' """
        for t in range(self.height(s) * self.stage.lam):
            yield self.level_box(s, t)

    def sigma(self, s: int, i: int) -> int:
        """ The cyclic permutation of the levels of tower s """
        return (i + 1) % self.height(s)

    def level_measure(self, s: int) -> Fraction:
        return self.stage.lam * self.cell(s, 0).measure

    def measure(self, s: int) -> Fraction:
        return self.height(s) * self.level_measure(s)

    def xi_cells(self) -> Iterator[Tuple[int, int]]:
        """ Labels (s, i) of the levels making up the partial partition xi_n """
        for s in (1, 2):
            for i in range(self.height(s)):
                yield s, i

    def eta_cells(self) -> Iterator[Tuple[Tuple[int, int], ...]]:
        """ The levels of the combined tower, level i of both towers joined """
        for i in range(self.h2):
            yield ((1, i), (2, i)) if i < self.h1 else ((2, i),)

    def as_dict(self) -> dict:
        return {'stage': self.stage.n, 'h1': self.h1, 'h2': self.h2,
                'cells': self.stage.lam, 'alpha_next': self.rotation[0],
                'alpha_prime_next': self.rotation[1],
                'level_measure': {1: self.level_measure(1), 2: self.level_measure(2)},
                'measure': {1: self.measure(1), 2: self.measure(2)}}


def _sample(total: int, limit: int) -> List[int]:
    """ Every index when total is small, else the two ends """
    if total <= limit:
        return list(range(total))
    return sorted({0, total - 1})


def build_bases(stage: StageParams, assignment: Optional[CellAssignment] = None,
                check: bool = True, limit: int = None) -> TowerPair:
    """ Build the tower bases C^(s)_k and check them against the good domain

    Each C^(s)_{k(i,j)} must lie in the slanted cell I^(n,s)_{j1,j2,0} of
    the good domain of h_n^-1, and R^(h_s) must carry C^(s)_k onto
    C^(s)_{k+1}.  When q q' exceeds ``limit`` only k = 0 and k = q q' - 1 are
    checked; every margin is affine in k.

    Parameters
    ----------
    stage : StageParams
        The stage
    assignment : CellAssignment, optional
        The cell bookkeeping
    check : bool
        Raise on a failed inequality or containment, by default True; when
        False failures are only recorded in ``pair.report``
    limit : int, optional
        Largest q q' checked for every k, by default config.exhaustive_limit

    Returns
    -------
    TowerPair
        the two towers

    Raises
    ------
    ConditionViolation
        when Delta_n <= 0, 1/q_{n+1} <= m_n D_n, the tower base inequality
        fails or a base box leaves its good cell
    """
    _check_preconditions(stage)
    inequality = towerbase_inequality(stage)
    if check and not inequality['holds']:
        raise ConditionViolation('towerbase', lhs=inequality['middle'], rhs=inequality['right'],
                                 relation='<', stage=stage.n)

    limit = limit or config.exhaustive_limit
    pair = TowerPair(stage, assignment)
    ks = _sample(stage.lam, limit)
    failures = []
    for s in (1, 2):
        for k in ks:
            i, j = pair.assignment.ij(k)
            j1, j2 = pair.assignment.lattice_indices(i, j, s)
            cell = slanted_good_cell(stage, j1, j2, 0, s)
            if not cell.contains_box(pair.cell(s, k)):
                failures.append({'tower': s, 'k': k, 'j1': j1, 'j2': j2,
                                 'margins': list(cell.margins(pair.cell(s, k)))})
        for k in (k for k in ks if k < stage.lam - 1):
            image = pair.cell(s, k).rotate(*pair.rotation, power=pair.height(s))
            if image != pair.cell(s, k + 1):
                raise TowerError(f'R^{pair.height(s)} C^({s})_{k} differs from C^({s})_{k + 1}')

    if failures and check:
        w = failures[0]
        raise ConditionViolation('towerbase', relation='subset', stage=stage.n,
                                 message=f'C^({w["tower"]})_{w["k"]} is not inside the good '
                                         f'cell I_({w["j1"]},{w["j2"]},0) at stage {stage.n}')
    for w in failures:
        log.warning(f'base box C^({w["tower"]})_{w["k"]} leaves its good cell')

    if len(ks) < stage.lam:
        warnings.warn(f'stage {stage.n}: base boxes checked at the ends of k only',
                      TowerAnalyticOnlyWarning)
    pair.report = {'stage': stage.n, 'inequality': inequality, 'checked': len(ks),
                   'mode': 'exhaustive' if len(ks) == stage.lam else 'analytic',
                   'failures': failures, 'passed': inequality['holds'] and not failures}
    log.info(f'stage {stage.n} tower bases: {stage.lam} cells per tower, heights '
             f'{pair.h1} and {pair.h2}')
    return pair


# disjointness

def _strip_drift(stage: StageParams, s: int) -> Fraction:
    """ Change of the strip margin below the box per application of R """
    drift = Fraction(1, stage.qbar_next) + stage.D - Fraction(1, stage.q_next)
    return drift if s == 1 else -drift


def _parallelogram(stage: StageParams, s: int, t: int) -> Parallelogram:
    return Parallelogram(s, (t * stage.p) % stage.q, (t * stage.p_prime) % stage.q_prime,
                         stage.eps, stage.q, stage.q_prime, fiber_eps=stage.eps)


def _margins(pair: TowerPair, s: int, t: int) -> Optional[Tuple[Fraction, Fraction, bool]]:
    box = pair.level_box(s, t)
    p = _parallelogram(pair.stage, s, t)
    try:
        below, above = p.margins(box)
    except AmbiguousContainment:
        return None
    return below, above, p.fiber_ok(box)


def _margin_chunk(pair: TowerPair, s: int, bounds: Tuple[int, int]) -> dict:
    """ Containment margins of R^t C^(s)_0 for t in [start, stop) """
    start, stop = bounds
    low, high = None, None
    witnesses = []
    for t in range(start, stop):
        result = _margins(pair, s, t)
        if result is None:
            witnesses.append({'t': t, 'reason': 'ambiguous'})
            continue
        below, above, fiber = result
        low = below if low is None else min(low, below)
        high = above if high is None else min(high, above)
        if below <= 0 or above <= 0 or not fiber:
            witnesses.append({'t': t, 'below': below, 'above': above, 'fiber': fiber})
    return {'below': low, 'above': high, 'witnesses': witnesses[:5], 'failed': len(witnesses)}


def _family_report(pair: TowerPair, s: int, limit: int, threads: int = None) -> dict:
    stage = pair.stage
    total = pair.height(s) * stage.lam
    if total <= limit:
        chunks = ordered_map(partial(_margin_chunk, pair, s),
                             batches(total, config.mc_chunks), threads=threads)
        lows = [c['below'] for c in chunks if c['below'] is not None]
        highs = [c['above'] for c in chunks if c['above'] is not None]
        witnesses = [w for c in chunks for w in c['witnesses']][:5]
        failed = sum(c['failed'] for c in chunks)
        report = {'mode': 'exhaustive', 'checked': total,
                  'min_below': min(lows) if lows else None,
                  'min_above': min(highs) if highs else None,
                  'witnesses': witnesses, 'contained': failed == 0}
    else:
        first, last = _margins(pair, s, 0), _margins(pair, s, total - 1)
        drift = _strip_drift(stage, s)
        if first is None or last is None:
            report = {'mode': 'analytic', 'checked': 2, 'min_below': None, 'min_above': None,
                      'witnesses': [{'reason': 'ambiguous'}], 'contained': False}
        else:
            predicted = (first[0] + (total - 1) * drift, first[1] - (total - 1) * drift)
            consistent = predicted == last[:2]
            low, high = min(first[0], predicted[0]), min(first[1], predicted[1])
            ok = consistent and low > 0 and high > 0 and first[2]
            report = {'mode': 'analytic', 'checked': 2, 'min_below': low, 'min_above': high,
                      'witnesses': [] if ok else [{'t': total - 1, 'below': last[0],
                                                   'above': last[1]}],
                      'contained': ok}

    report.update(_stacking(pair, s))
    report['height'] = pair.height(s)
    report['passed'] = report['contained'] and report['stacked']
    return report


def _stacking(pair: TowerPair, s: int) -> dict:
    """ Disjointness of R^(j q q') C^(s)_0, 0 <= j < h_s, inside one strip """
    stage, lam = pair.stage, pair.stage.lam
    box = pair.cell(s, 0)
    if s == 1:
        advance = mod1(lam * pair.rotation[0])
        width = box.theta1.length
        return {'advance': advance, 'width': width,
                'stacked': advance == width and pair.h1 * advance == 1}
    advance = mod1(lam * pair.rotation[1])
    height = box.theta2.length
    gap = advance - height
    top = (pair.h2 - 1) * advance + height
    return {'advance': advance, 'width': height, 'gap': gap, 'top': top,
            'stacked': gap > 0 and top <= 1}


def _residue_bijection(stage: StageParams, limit: int) -> bool:
    """ Whether t -> (t p mod q, t p' mod q') is a bijection of [0, q q') """
    if stage.lam <= limit:
        seen = {((t * stage.p) % stage.q, (t * stage.p_prime) % stage.q_prime)
                for t in range(stage.lam)}
        return len(seen) == stage.lam
    return (math.gcd(stage.p, stage.q) == 1 and math.gcd(stage.p_prime, stage.q_prime) == 1
            and math.gcd(stage.q, stage.q_prime) == 1)


def parallelogram_tiling(stage: StageParams, limit: int = None) -> dict:
    """ Check that the closures of the strips P^(s)_{j1,j2} tile the torus

    All 2 q q' strips are written in the coordinate w = theta2 - theta1,
    where P^(1)_{j1,j2} occupies (c, c + 1/(2qq')) and P^(2)_{j1,j2} the arc
    (c - 1/(2qq'), c) just below it, c = j2/q' - j1/q.  The arcs must abut
    without overlap and their measures must add up to that of
    T^2 x [eps_n, 1 - eps_n]^(d-2).
    """
    limit = limit or config.lattice_limit
    lam, d = stage.lam, stage.d
    expected = (1 - 2 * stage.eps) ** (d - 2)
    if lam > limit:
        ok = math.gcd(stage.q, stage.q_prime) == 1
        return {'mode': 'analytic', 'strips': 2 * lam, 'measure': expected if ok else None,
                'expected': expected, 'gaps': 0, 'overlaps': 0, 'passed': ok}

    arcs = []
    total = Fraction(0)
    for j1 in range(stage.q):
        for j2 in range(stage.q_prime):
            for s in (1, 2):
                p = Parallelogram(s, j1, j2, Fraction(0), stage.q, stage.q_prime,
                                  fiber_eps=stage.eps)
                lo = mod1(p.lower) if s == 1 else mod1(-p.lower - p.width)
                arcs.append((lo, p.width))
                total += p.measure(d)
    arcs.sort()
    gaps = overlaps = 0
    for (lo, width), (nxt, _) in zip(arcs, arcs[1:] + [(arcs[0][0] + 1, None)]):
        if lo + width < nxt:
            gaps += 1
        elif lo + width > nxt:
            overlaps += 1
    return {'mode': 'exhaustive', 'strips': len(arcs), 'measure': total, 'expected': expected,
            'gaps': gaps, 'overlaps': overlaps,
            'passed': gaps == 0 and overlaps == 0 and total == expected}


def verify_disjointness(pair: TowerPair, exhaustive_limit: int = None, progress: bool = False,
                        threads: int = None) -> dict:
    """ Check that all levels of both towers are pairwise disjoint

    The check follows the structure of the construction instead of testing
    all pairs: for every t the box R^t C^(s)_0 lies in the strip
    P^(s)_{tp, tp', eps_n}; inside a strip the boxes R^(t + j q q') C^(s)_0
    are stacked without overlap; distinct residues t mod q q' give distinct
    strips; and the strips themselves tile the torus.  When the number of
    boxes is at most ``exhaustive_limit`` every margin is computed and a
    sweep-line pass over all boxes confirms the verdict.

    Parameters
    ----------
    pair : TowerPair
        The towers
    exhaustive_limit : int, optional
        Largest box count enumerated, by default config.exhaustive_limit
    progress : bool
        Show a progress bar during the sweep
    threads : int, optional
        Worker count for the margin enumeration

    Returns
    -------
    dict
        report with per-tower margins, the tiling check, the corner margin
        and its slack from the construction, and the verdict
    """
    stage = pair.stage
    limit = exhaustive_limit or config.exhaustive_limit
    towers = {s: _family_report(pair, s, limit, threads=threads) for s in (1, 2)}
    tiling = parallelogram_tiling(stage)
    bijection = _residue_bijection(stage, limit)

    lam = stage.lam
    corner = (stage.eps - stage.eps_tilde / 2) / lam - Fraction(lam, stage.q_next)
    slack = 3 * stage.eps / (8 * lam)

    total = (pair.h1 + pair.h2) * lam
    sweep = {'run': False}
    if total <= limit:
        boxes = list(pair.level_boxes(1)) + list(pair.level_boxes(2))
        overlaps = verify_pairwise_disjoint(boxes, max_witnesses=5, progress=progress)
        split = pair.h1 * lam

        def label(index):
            return (1, index) if index < split else (2, index - split)

        sweep = {'run': True, 'boxes': total,
                 'witnesses': [{'first': label(o.first), 'second': label(o.second),
                                'measure': o.measure} for o in overlaps],
                 'passed': not overlaps}
    else:
        warnings.warn(f'stage {stage.n}: sweep over {total} level boxes skipped, margins '
                      'settled in closed form', TowerAnalyticOnlyWarning)

    passed = all(t['passed'] for t in towers.values()) and tiling['passed'] and bijection
    if sweep['run']:
        passed = passed and sweep['passed']
    report = {'stage': stage.n, 'towers': towers, 'tiling': tiling,
              'residue_bijection': bijection, 'corner_margin': corner, 'proof_slack': slack,
              'corner_margin_ok': corner > slack, 'sweep': sweep, 'passed': passed}
    log.info(f'stage {stage.n} tower disjointness: {"pass" if passed else "FAIL"}')
    return report


def substantiality(pair: TowerPair, r: Fraction = Fraction(1, 4)) -> dict:
    """ Tower measures against the lower bounds of the construction

    ``passed`` reflects the bounds (1-4 eps)^(d-1)/2 and (1-4 eps)^d/2;
    the comparison with r is reported separately.
    """
    e, d = pair.stage.eps, pair.stage.d
    bounds = {1: (1 - 4 * e) ** (d - 1) / 2, 2: (1 - 4 * e) ** d / 2}
    measures = {s: pair.measure(s) for s in (1, 2)}
    report = {'stage': pair.stage.n, 'measure': measures, 'bound': bounds, 'r': Fraction(r),
              'exceeds_r': {s: measures[s] > r for s in (1, 2)},
              'passed': measures[1] >= bounds[1] and measures[2] > bounds[2]}
    if not all(report['exceeds_r'].values()):
        log.warning(f'stage {pair.stage.n} tower measures {measures[1]}, {measures[2]} '
                    f'do not both exceed r = {r}')
    return report


# generating diagnostics

def _progression_hits(start: Fraction, step: Fraction, count: int, lo: Fraction,
                      hi: Fraction) -> int:
    """ Number of 0 <= i < count with (start + i step) mod 1 in [lo, hi] """
    if hi < lo:
        return 0
    hits = 0
    for wrap in range(_ceil(start + step * count) + 1):
        first = max(_ceil((lo + wrap - start) / step), 0)
        last = min(_floor((hi + wrap - start) / step), count - 1)
        hits += max(0, last - first + 1)
    return hits


def _windows(stage: StageParams, shrink: Fraction) -> Tuple[Fraction, Fraction]:
    """ First straight-coordinate window (lambda-local) and the window period """
    g, e = stage.gamma, stage.eps
    return (e / 2 / g + shrink, (1 - e / 2) / g - shrink), Fraction(1, g)


def _hit(stage: StageParams, position: Fraction, length: Fraction, shrink: Fraction):
    """ The sub-window ell holding [position, position + length], or None """
    g = stage.gamma
    ell = min(_floor(g * position), g - 1)
    (lo, hi), period = _windows(stage, shrink)
    if lo + ell * period <= position and position + length <= hi + ell * period:
        return ell
    return None


def _square(stage: StageParams, box: Box) -> Tuple[int, int]:
    """ The lattice square of the lower left corner modulo (1/q, 1/q') """
    lam = stage.lam
    return (_floor(lam * box.theta1.lo) % stage.q_prime,
            _floor(lam * box.theta2.lo) % stage.q)


def _tower_counts(pair: TowerPair, s: int, limit: int) -> dict:
    stage = pair.stage
    lam, g = stage.lam, stage.gamma
    shrink = Fraction(0) if s == 1 else stage.eps / g
    h = pair.height(s)
    box = pair.cell(s, 0)
    axis = 0 if s == 1 else 1
    arc = box.theta1 if s == 1 else box.theta2
    start = mod1(lam * arc.lo)
    length = lam * arc.length
    step = mod1(lam * pair.rotation[axis])

    if h <= limit:
        hits = 0
        for i in range(h):
            level = pair.level_box(s, i)
            arc = level.theta1 if s == 1 else level.theta2
            if _hit(stage, mod1(lam * arc.lo), length, shrink) is not None:
                hits += 1
        mode = 'enumerated'
    else:
        (lo, hi), period = _windows(stage, shrink)
        if g <= limit:
            hits = sum(_progression_hits(start, step, h, lo + ell * period,
                                         hi + ell * period - length) for ell in range(g))
            mode = 'counted'
        else:
            hits = g * max(0, _floor((hi - lo - length) / step))
            mode = 'bound'
    return {'hits': hits, 'levels': h, 'fraction': Fraction(hits, h), 'mode': mode}


def generating_diagnostics(pair: TowerPair, stage: Optional[StageParams] = None,
                           limit: int = None) -> dict:
    """ Finite-scale fractions behind xi_n -> eps and eta_n -> eps

    For tower 1 a level counts when the theta1 factor of R^i C^(1)_0 lies in
    the theta1 projection of a scaled, lattice-translated G~_{1,ell}; for
    tower 2 when the theta2 factor of R^i C^(2)_0 lies in the eps-shrunken
    window of some G~_{2,ell}.  The combined fraction asks for both at the
    same ell with the two corners in the same lattice square modulo
    (1/q, 1/q').  Towers taller than ``limit`` are counted in closed form
    along the arithmetic progression of left ends; the combined fraction is
    then skipped.

    Parameters
    ----------
    pair : TowerPair
        The towers
    stage : StageParams, optional
        Must be the stage of the pair when given
    limit : int, optional
        Largest tower height enumerated, by default config.enumeration_limit

    Returns
    -------
    dict
        exact fractions per tower, the combined fraction and the diameter
        check against 1/(2n^2)
    """
    stage = stage or pair.stage
    if stage != pair.stage:
        raise TowerError('stage does not match the tower pair')
    limit = limit or config.enumeration_limit
    lam, g, e = stage.lam, stage.gamma, stage.eps

    towers = {s: _tower_counts(pair, s, limit) for s in (1, 2)}
    towers[1]['lower_bound'] = 1 - e - 2 * g * lam * Fraction(lam, stage.q_next)

    if pair.h1 <= limit:
        hits = 0
        length1 = lam * pair.cell(1, 0).theta1.length
        length2 = lam * pair.cell(2, 0).theta2.length
        for i in range(pair.h1):
            b1, b2 = pair.level_box(1, i), pair.level_box(2, i)
            ell1 = _hit(stage, mod1(lam * b1.theta1.lo), length1, e / g)
            ell2 = _hit(stage, mod1(lam * b2.theta2.lo), length2, e / g)
            if ell1 is not None and ell1 == ell2 and _square(stage, b1) == _square(stage, b2):
                hits += 1
        eta = {'hits': hits, 'levels': pair.h1, 'fraction': Fraction(hits, pair.h1),
               'mode': 'enumerated'}
    else:
        log.warning(f'stage {stage.n}: combined tower fraction skipped for height {pair.h1}')
        eta = {'hits': None, 'levels': pair.h1, 'fraction': None, 'mode': 'skipped'}

    report = {'stage': stage.n, 'towers': towers, 'eta': eta,
              'diameter': diameter_check(stage),
              'diameter_target': Fraction(1, 2 * stage.n ** 2)}
    log.info(f'stage {stage.n} generating fractions: {towers[1]["fraction"]}, '
             f'{towers[2]["fraction"]}, combined {eta["fraction"]}')
    return report


# columns

@dataclass
class ColumnSet:
    """ The column boxes C^(s)_{k,t} and their enlargements C~^(s)_{k,t}

    Attributes
    ----------
    pair : TowerPair
        The towers the columns subdivide
    t_star : dict
        the column counts t*_1 and t*_2 per base box
    report : dict
        the inclusion checks
    """
    pair: TowerPair
    t_star: Dict[int, int]
    report: dict = field(default_factory=dict)

    @property
    def N(self) -> int:
        """ Number of columns of tower 1, q q' t*_1 """
        return self.pair.stage.lam * self.t_star[1]

    def column(self, s: int, k: int, t: int) -> Box:
        return self._box(s, k, t, tilde=False)

    def tilde(self, s: int, k: int, t: int) -> Box:
        return self._box(s, k, t, tilde=True)

    def _box(self, s: int, k: int, t: int, tilde: bool) -> Box:
        if not 0 <= t < self.t_star[s]:
            raise TowerError(f'column index {t} outside [0, {self.t_star[s]})')
        stage = self.pair.stage
        lam, e, qbar = stage.lam, stage.eps, stage.qbar_next
        base = self.pair.cell(s, k)
        if s == 1:
            lo = base.theta2.lo + Fraction(t * lam, qbar)
            margin = 0 if tilde else e / qbar
            return Box.from_bounds(base.theta1.lo, base.theta1.hi, lo + margin,
                                   lo + Fraction(lam, qbar) - margin, base.fiber)
        lo = base.theta1.lo + Fraction(t * lam, stage.q_next)
        # the base already starts 2 eps / qbar above the cell corner
        margin = 0 if tilde else 2 * e / qbar
        return Box.from_bounds(lo, lo + Fraction(lam, stage.q_next), base.theta2.lo + margin,
                               base.theta2.hi - margin, base.fiber)


def _column_inclusion(columns: ColumnSet, s: int, t: int) -> Tuple[bool, Box, Box]:
    pair, lam, m = columns.pair, columns.pair.stage.lam, columns.pair.stage.m
    star = columns.t_star[s]
    if s == 1:
        image = columns.column(1, 0, star - 1).rotate(*pair.rotation, power=t * lam * (m - 1))
        target = columns.tilde(1, 0, star - t - 1)
    else:
        image = columns.column(2, 0, 0).rotate(*pair.rotation, power=t * lam * m)
        target = columns.tilde(2, 0, t)
    return target.contains_box(image), image, target


def build_columns(pair: TowerPair, stage: Optional[StageParams] = None,
                  limit: int = None) -> ColumnSet:
    """ Subdivide the tower bases into columns and check their passage

    Tower 1 gets t*_1 = floor((1 - 4 eps) qbar' / (2 (qq')^2)) columns per
    base box and tower 2 t*_2 = floor((1 - 4 eps) q_{n+1} / (2 (qq')^2)).
    The inclusions R^(t qq'(m-1)) C^(1)_{0,t*-1} in C~^(1)_{0,t*-t-1} and
    R^(t qq' m) C^(2)_{0,0} in C~^(2)_{0,t} are checked for every t when t*
    is at most ``limit`` and at both ends otherwise; the margins are affine
    in t.

    Parameters
    ----------
    pair : TowerPair
        The towers
    stage : StageParams, optional
        Must be the stage of the pair when given
    limit : int, optional
        Largest t* enumerated, by default config.enumeration_limit

    Returns
    -------
    ColumnSet
        the columns with the inclusion report
    """
    stage = stage or pair.stage
    if stage != pair.stage:
        raise TowerError('stage does not match the tower pair')
    limit = limit or config.enumeration_limit
    lam, e, m = stage.lam, stage.eps, stage.m
    t_star = {1: _floor((1 - 4 * e) * stage.qbar_next / (2 * lam * lam)),
              2: _floor((1 - 4 * e) * stage.q_next / (2 * lam * lam))}
    columns = ColumnSet(pair, t_star)

    towers = {}
    for s in (1, 2):
        star = t_star[s]
        if star < 1:
            towers[s] = {'t_star': star, 'checked': 0, 'witnesses': [], 'passed': True}
            continue
        checked = _sample(star, limit)
        witnesses = []
        for t in checked:
            ok, image, target = _column_inclusion(columns, s, t)
            if not ok:
                witnesses.append({'t': t, 'image': repr(image), 'target': repr(target)})
        shift_ok = all(
            columns.column(s, k, 0).rotate(*pair.rotation, power=pair.height(s))
            == columns.column(s, k + 1, 0) for k in _sample(lam - 1, 2))
        towers[s] = {'t_star': star, 'checked': len(checked), 'witnesses': witnesses[:5],
                     'level_shift': shift_ok, 'passed': not witnesses and shift_ok}

    guaranteed = (1 - 4 * e) / 2 - Fraction(lam, m)
    stated = (1 - 4 * e) / 2 - Fraction(1, m)
    columns.report = {'stage': stage.n, 'towers': towers, 'N': columns.N,
                      'ratio': Fraction(columns.N, m), 'c_guaranteed': guaranteed,
                      'N_exceeds_guaranteed': columns.N > guaranteed * m,
                      'N_exceeds_stated': columns.N > stated * m,
                      'drift_condition': m * m * stage.D < e / (2 * stage.qbar_next),
                      'passed': all(t['passed'] for t in towers.values())
                      and columns.N > guaranteed * m}
    log.info(f'stage {stage.n} columns: t* = {t_star[1]}, {t_star[2]}; N = {columns.N}')
    return columns
