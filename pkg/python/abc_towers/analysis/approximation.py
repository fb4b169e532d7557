# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: approximation.py
# Project: analysis
# Author: The abc-towers developers
# Created: Friday, 5th November 2021 11:12:40 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 15th November 2021 5:31:12 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
from dataclasses import dataclass, field
from fractions import Fraction
from functools import partial
from typing import Dict, Optional, Sequence, Tuple, Union

import numpy as np

from abc_towers import log
from abc_towers.config import config
from abc_towers.construction.combinatorics import StageParams
from abc_towers.construction.conjugations import h1_forward, h1_inverse, h2_inverse
from abc_towers.exceptions import (IndicatorUndefined, MonteCarloInconclusive,
                                   OutsideGoodDomain, TowerError)
from abc_towers.geometry.boxes import Box, BoxUnion, symmetric_difference_measure
from abc_towers.helpers.parallel import batches, ordered_map


__all__ = ['SpeedReport', 'speed_exact', 'speed_ratio', 'speed_constant', 'rigidity_check',
           'hoeffding_bound', 'BoxIndicator', 'ConjugatedIndicator', 'MonteCarloEstimate',
           'translation_continuity_mc', 'aggregate_translation_check', 'neighborhood_predicate']


@dataclass
class SpeedReport:
    """ The (h, h+1) approximation speed of one stage

    Attributes
    ----------
    n : int
        the stage
    m : int
        the tower height m_n
    wraparound : dict
        exact mu(T_n(c) D sigma_n(c)) of the top level of each tower
    exact_wraparound_term : Fraction
        the sum over all levels of both towers
    bound_error1 : Fraction
        6 (qq')^2 / (q_{n+1} qbar'_{n+1})
    tower_bounds : dict
        the per-tower bounds from the construction
    eps_next : Fraction
        eps_{n+1}
    mc_error3 : MonteCarloEstimate or None
        the sampled translation continuity check, when run
    """
    n: int
    m: int
    wraparound: Dict[int, Fraction]
    exact_wraparound_term: Fraction
    bound_error1: Fraction
    tower_bounds: Dict[int, Fraction]
    eps_next: Fraction
    q_ratio: Fraction
    mc_error3: Optional['MonteCarloEstimate'] = None

    @property
    def ratio(self) -> Fraction:
        """ exact_wraparound_term m_n (m_n - 1) """
        return self.exact_wraparound_term * self.m * (self.m - 1)

    @property
    def eps_ratio(self) -> Fraction:
        """ eps_{n+1} m_n (m_n - 1), the share of the limit error in the speed """
        return self.eps_next * self.m * (self.m - 1)

    @property
    def eps_ratio_bound(self) -> Fraction:
        return self.q_ratio

    @property
    def error3_bound(self) -> Fraction:
        """ The telescoped bound 2 eps_{n+1} on sum mu(T(c) D T_n(c)) """
        return 2 * self.eps_next

    @property
    def passed(self) -> bool:
        return (self.exact_wraparound_term <= self.bound_error1
                and all(self.wraparound[s] <= self.tower_bounds[s] for s in (1, 2))
                and 0 < self.ratio <= 6 and self.eps_ratio < self.eps_ratio_bound)

    def as_dict(self) -> dict:
        report = {'n': self.n, 'm': self.m, 'wraparound': self.wraparound,
                  'exact_wraparound_term': self.exact_wraparound_term,
                  'bound_error1': self.bound_error1, 'tower_bounds': self.tower_bounds,
                  'ratio': self.ratio, 'constant': speed_constant(self),
                  'eps_next': self.eps_next, 'eps_ratio': self.eps_ratio,
                  'eps_ratio_bound': self.eps_ratio_bound, 'error3_bound': self.error3_bound,
                  'passed': self.passed}
        report['mc_error3'] = self.mc_error3.as_dict() if self.mc_error3 else None
        return report


def speed_exact(pair, stage: Optional[StageParams] = None) -> SpeedReport:
    """ Exact sum of mu(T_n(c) D sigma_n(c)) over the levels c of both towers

    sigma_n agrees with T_n on every level but the top one of each tower,
    where T_n(top) differs from the base only by R^(h_s) C^(s)_(qq'-1)
    against C^(s)_0.  Both terms are computed upstairs, H_n being measure
    preserving.

    Parameters
    ----------
    pair : TowerPair
        The towers of the stage
    stage : StageParams, optional
        Must be the stage of the pair when given

    Returns
    -------
    SpeedReport
        the exact term with its bounds
    """
    stage = stage or pair.stage
    if stage != pair.stage:
        raise TowerError('stage does not match the tower pair')
    lam, e, d = stage.lam, stage.eps, stage.d
    last = lam - 1
    wrap = {s: symmetric_difference_measure(
        pair.cell(s, last).rotate(*pair.rotation, power=pair.height(s)), pair.cell(s, 0))
        for s in (1, 2)}
    scale = Fraction(lam * lam, stage.q_next * stage.qbar_next)
    bounds = {1: 2 * scale * (1 - 2 * e) ** (d - 2), 2: 4 * scale}
    report = SpeedReport(n=stage.n, m=stage.m, wraparound=wrap,
                         exact_wraparound_term=wrap[1] + wrap[2], bound_error1=6 * scale,
                         tower_bounds=bounds, eps_next=stage.eps_next,
                         q_ratio=Fraction(1, 2 * (stage.n + 1) * lam * lam))
    log.info(f'stage {stage.n} speed: {float(report.exact_wraparound_term):.3e} '
             f'(bound {float(report.bound_error1):.3e})')
    return report


def speed_ratio(report: SpeedReport) -> Fraction:
    """ The normalized speed exact_wraparound_term m_n (m_n - 1)

    A value in (0, 6] is the "of order, but not smaller than, 1/h^2"
    behaviour; values outside it and an eps_{n+1} term not below
    1/(2(n+1)(qq')^2) are logged.
    """
    ratio = report.ratio
    if not 0 < ratio <= 6:
        log.warning(f'stage {report.n}: speed ratio {ratio} outside (0, 6]')
    if not report.eps_ratio < report.eps_ratio_bound:
        log.warning(f'stage {report.n}: eps_(n+1) term ratio {report.eps_ratio} is not below '
                    f'{report.eps_ratio_bound}')
    return ratio


def speed_constant(report: SpeedReport) -> int:
    """ The constant A with speed <= A / (m_n (m_n - 1)), rounded up """
    bound = report.bound_error1 * report.m * (report.m - 1)
    return -((-bound.numerator) // bound.denominator)


def rigidity_check(stage: StageParams) -> dict:
    """ Check that T_n^(q_{n+1} q'_{n+1}) is the identity

    T_n is conjugate to the rotation by (alpha_{n+1}, alpha'_{n+1}), so it
    suffices that q_{n+1} q'_{n+1} times either rotation number is an
    integer.  The d_0 perturbation budget eps_n/4 of the limit is reported
    alongside.
    """
    period = stage.q_next * stage.q_prime_next
    first = period * stage.alpha_next
    second = period * stage.alpha_prime_next
    exact_period = (stage.alpha_next.denominator * stage.alpha_prime_next.denominator
                    // math.gcd(stage.alpha_next.denominator, stage.alpha_prime_next.denominator))
    return {'stage': stage.n, 'period': period, 'exact_period': exact_period,
            'alpha_integral': first.denominator == 1,
            'alpha_prime_integral': second.denominator == 1,
            'products': {'alpha': first, 'alpha_prime': second},
            'd0_budget': stage.eps / 4,
            'passed': first.denominator == 1 and second.denominator == 1}


# Monte Carlo

class BoxIndicator(object):
    """ Membership oracle of a finite union of boxes

    Pieces are hashed into a uniform grid over the torus; lookups compare
    float coordinates, which is only wrong on the measure-zero boundary.

    Parameters
    ----------
    boxes : iterable of Box or BoxUnion
        The members of the set
    grid : int, optional
        Cells per torus side, by default about twice the square root of the
        number of members
    """

    def __init__(self, boxes, grid: int = None):
        self.boxes = list(boxes)
        if not self.boxes:
            raise TowerError('indicator of an empty union')
        self.d = self.boxes[0].d
        self.grid = grid or min(max(16, 2 * math.isqrt(len(self.boxes))), 2048)
        self.cells = {}
        for box in self.boxes:
            fiber = tuple((float(f.lo), float(f.hi)) for f in box.fiber)
            for a, b in box.pieces():
                piece = (float(a.lo), float(a.hi), float(b.lo), float(b.hi), fiber)
                for i in self._span(piece[0], piece[1]):
                    for j in self._span(piece[2], piece[3]):
                        self.cells.setdefault((i, j), []).append(piece)

    def __repr__(self):
        return f'<BoxIndicator(members={len(self.boxes)}, grid={self.grid})>'

    def _span(self, lo: float, hi: float) -> range:
        first = int(lo * self.grid)
        last = min(int(math.ceil(hi * self.grid)), self.grid)
        return range(first, max(last, first + 1))

    @property
    def measure(self) -> Fraction:
        return BoxUnion(self.boxes, check=False, merge=False).measure

    def contains(self, point: Sequence[float]) -> bool:
        x, y = point[0] % 1.0, point[1] % 1.0
        key = (min(int(x * self.grid), self.grid - 1), min(int(y * self.grid), self.grid - 1))
        for x0, x1, y0, y1, fiber in self.cells.get(key, ()):
            if x0 <= x <= x1 and y0 <= y <= y1 and all(
                    lo <= r <= hi for (lo, hi), r in zip(fiber, point[2:])):
                return True
        return False

    def rotated(self, alpha, alpha_prime) -> 'BoxIndicator':
        return BoxIndicator([b.rotate(alpha, alpha_prime) for b in self.boxes], grid=self.grid)


class ConjugatedIndicator(object):
    """ Membership oracle of X = R_(alpha_l, alpha'_l) H_l(c) for a box c

    A sample is pulled back through the exact inverse pieces of h_l,
    h_(l-1), ..., h_1.  For a single stage the cell is checked to lie in
    one tilde cell, so a sample outside the good domain is known to miss X;
    otherwise such a sample raises IndicatorUndefined.

    Parameters
    ----------
    stages : StageParams or list of StageParams
        The stages 1..l of the conjugation
    cell : Box
        The downstairs set c
    """

    def __init__(self, stages: Union[StageParams, Sequence[StageParams]], cell: Box):
        self.stages = [stages] if isinstance(stages, StageParams) else list(stages)
        if not self.stages:
            raise TowerError('conjugated indicator needs at least one stage')
        self.cell = cell
        self.d = cell.d
        last = self.stages[-1]
        self.rotation = (last.alpha, last.alpha_prime)
        self.closed = False
        if len(self.stages) == 1:
            try:
                h1_forward(last, cell)
            except OutsideGoodDomain:
                log.warning(f'{cell} is not inside one tilde cell; samples outside the good '
                            'domain will be undefined')
            else:
                self.closed = True

    def __repr__(self):
        return f'<ConjugatedIndicator(stages={len(self.stages)}, cell={self.cell})>'

    @property
    def measure(self) -> Fraction:
        return self.cell.measure

    def contains(self, point: Sequence[float]) -> bool:
        y = tuple(Fraction(float(v)) for v in point)
        y = (y[0] - self.rotation[0], y[1] - self.rotation[1]) + y[2:]
        try:
            for stage in reversed(self.stages):
                y = h1_inverse(stage, h2_inverse(stage, y))
        except OutsideGoodDomain as err:
            if self.closed:
                return False
            raise IndicatorUndefined(f'sample {tuple(point)} is outside every good '
                                     'domain piece') from err
        return self.cell.contains_point(y)


@dataclass
class MonteCarloEstimate:
    """ A sampled measure of X D R_delta(X) with its Hoeffding bound

    Attributes
    ----------
    estimate : float
        the sample mean of the symmetric difference indicator
    bound : float
        the two-sided Hoeffding half width at the confidence level
    budget : Fraction or None
        the threshold the estimate is tested against
    exact : Fraction or None
        the exact value, when X is a union of boxes and it was asked for
    """
    estimate: float
    bound: float
    samples: int
    undefined: int
    confidence: Fraction
    seed: int
    delta: Tuple[Fraction, Fraction]
    budget: Optional[Fraction] = None
    exact: Optional[Fraction] = None
    extra: dict = field(default_factory=dict)

    @property
    def verdict(self) -> str:
        """ 'pass', 'fail', 'inconclusive' or 'unchecked' against the budget """
        if self.budget is None:
            return 'unchecked'
        budget = float(self.budget)
        if self.estimate + self.bound < budget:
            return 'pass'
        if self.estimate - self.bound >= budget:
            return 'fail'
        return 'inconclusive'

    @property
    def within_bound(self) -> Optional[bool]:
        if self.exact is None:
            return None
        return abs(self.estimate - float(self.exact)) <= self.bound

    def as_dict(self) -> dict:
        return {'estimate': self.estimate, 'bound': self.bound, 'samples': self.samples,
                'undefined': self.undefined, 'confidence': self.confidence, 'seed': self.seed,
                'delta': list(self.delta), 'budget': self.budget, 'exact': self.exact,
                'within_bound': self.within_bound, 'verdict': self.verdict, **self.extra}


def hoeffding_bound(samples: int, confidence) -> float:
    """ Two-sided Hoeffding half width for the mean of samples in [0, 1] """
    return math.sqrt(math.log(2 / (1 - float(confidence))) / (2 * samples))


def _mc_chunk(indicator, delta: Tuple[float, float], task) -> Tuple[int, int]:
    """ Count mismatches of 1_X(x) and 1_X(x - delta) over one substream """
    seed_seq, count = task
    rng = np.random.default_rng(seed_seq)
    points = rng.random((count, indicator.d))
    mismatches = undefined = 0
    for point in points:
        shifted = (point[0] - delta[0], point[1] - delta[1]) + tuple(point[2:])
        try:
            if indicator.contains(point) != indicator.contains(shifted):
                mismatches += 1
        except IndicatorUndefined:
            mismatches += 1
            undefined += 1
    return mismatches, undefined


def translation_continuity_mc(setup, delta: Tuple, cell: Optional[Box] = None,
                              samples: int = None, budget: Fraction = None, seed: int = 0,
                              confidence: Fraction = None, chunks: int = None,
                              threads: int = None, exact: bool = False,
                              strict: bool = False) -> MonteCarloEstimate:
    """ Estimate mu(R_delta(X) D X) by Monte Carlo

    Samples are drawn from substreams spawned from one SeedSequence, one
    per chunk, so the estimate depends on the seed and the chunk count but
    not on the number of worker processes.  Undefined samples count as
    mismatches.

    Parameters
    ----------
    setup : BoxIndicator, StageParams or list of StageParams
        Either the set X itself or the stages of the conjugation H_l, in
        which case ``cell`` is required and X = R_(alpha_l, alpha'_l) H_l(c)
    delta : tuple of Fraction
        The translation (delta1, delta2)
    cell : Box, optional
        The downstairs set c
    samples : int, optional
        Sample count, by default config.mc_samples
    budget : Fraction, optional
        Threshold, by default eps_l mu(c) when stages are given
    seed : int
        Root seed
    confidence : Fraction, optional
        Confidence level of the bound, by default config.mc_confidence
    chunks : int, optional
        Number of substreams, by default config.mc_chunks
    threads : int, optional
        Worker processes
    exact : bool
        Also compute the exact value when X is a union of boxes
    strict : bool
        Raise MonteCarloInconclusive when the verdict is inconclusive

    Returns
    -------
    MonteCarloEstimate
        the estimate, its bound and the verdict
    """
    samples = samples or config.mc_samples
    confidence = Fraction(confidence) if confidence is not None else config.mc_confidence
    chunks = chunks or config.mc_chunks
    delta = (Fraction(delta[0]), Fraction(delta[1]))

    if isinstance(setup, BoxIndicator):
        indicator = setup
    else:
        if cell is None:
            raise TowerError('a downstairs cell is needed to build X from the stages')
        indicator = ConjugatedIndicator(setup, cell)
        if budget is None:
            budget = indicator.stages[-1].eps * cell.measure

    if delta[0] % 1 == 0 and delta[1] % 1 == 0:
        return MonteCarloEstimate(0.0, 0.0, 0, 0, confidence, seed, delta, budget=budget,
                                  exact=Fraction(0))

    tasks = list(zip(np.random.SeedSequence(seed).spawn(chunks),
                     [b - a for a, b in batches(samples, chunks)]))
    worker = partial(_mc_chunk, indicator, (float(delta[0]), float(delta[1])))
    counts = ordered_map(worker, tasks, threads=threads)
    mismatches = sum(c[0] for c in counts)
    undefined = sum(c[1] for c in counts)
    if undefined:
        log.warning(f'{undefined} of {samples} samples fell outside every good-domain piece')

    value = None
    if exact and isinstance(indicator, BoxIndicator):
        union = BoxUnion(indicator.boxes, check=False, merge=False)
        value = symmetric_difference_measure(union, union.rotate(*delta))

    result = MonteCarloEstimate(mismatches / samples, hoeffding_bound(samples, confidence),
                                samples, undefined, confidence, seed, delta, budget=budget,
                                exact=value)
    log.debug(f'translation continuity: {result.estimate:.4e} +- {result.bound:.1e} '
              f'({result.verdict})')
    if strict and result.verdict == 'inconclusive':
        raise MonteCarloInconclusive(f'estimate {result.estimate:.4e} +- {result.bound:.1e} '
                                     f'straddles the budget {float(budget):.4e}')
    return result


def aggregate_translation_check(pair, next_stage: StageParams, samples: int = None,
                                seed: int = 0, threads: int = None,
                                strict: bool = False) -> MonteCarloEstimate:
    """ Sampled continuity check of the upstairs towers under the next increment

    X is the union of all level boxes of both towers moved by
    R_(alpha_{n+1}, alpha'_{n+1}); it is translated by
    (alpha_{n+2} - alpha_{n+1}, alpha'_{n+2} - alpha'_{n+1}) and tested
    against eps_n mu(X).
    """
    stage = pair.stage
    boxes = [b.rotate(*pair.rotation) for s in (1, 2) for b in pair.level_boxes(s)]
    indicator = BoxIndicator(boxes)
    delta = (next_stage.alpha_next - next_stage.alpha,
             next_stage.alpha_prime_next - next_stage.alpha_prime)
    budget = stage.eps * (pair.measure(1) + pair.measure(2))
    result = translation_continuity_mc(indicator, delta, samples=samples, budget=budget,
                                       seed=seed, threads=threads, strict=strict)
    result.extra['stage'] = stage.n
    result.extra['boxes'] = len(boxes)
    log.info(f'stage {stage.n} translation check: {result.verdict}')
    return result


def neighborhood_predicate(metrics: dict, stage: StageParams, l_next: int,
                           constant: int = 6) -> bool:
    """ Membership of a candidate in the neighbourhood U of the stage map

    Parameters
    ----------
    metrics : dict
        The declared measurements 'derivative_distance' (d_(l_{n+1}) to
        T_n), 'rigidity_distance' (d_0 of the q_{n+1} q'_{n+1} powers) and
        'speed' (sum over the combined tower levels)
    stage : StageParams
        The stage n
    l_next : int
        l_{n+1}
    constant : int
        The speed constant A

    Returns
    -------
    bool
        True when all three strict inequalities hold
    """
    missing = {'derivative_distance', 'rigidity_distance', 'speed'} - set(metrics)
    if missing:
        raise TowerError(f'neighbourhood metrics missing {sorted(missing)}')
    m = stage.m
    checks = [metrics['derivative_distance'] < Fraction(2, l_next),
              metrics['rigidity_distance'] < stage.eps,
              metrics['speed'] < Fraction(constant + 1, m * (m - 1))]
    return all(checks)
