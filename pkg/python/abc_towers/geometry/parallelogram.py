# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: parallelogram.py
# Project: geometry
# Author: The abc-towers developers
# Created: Tuesday, 5th October 2021 3:15:27 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Friday, 22nd October 2021 4:50:02 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

from dataclasses import dataclass
from fractions import Fraction
from typing import Tuple

from abc_towers.exceptions import AmbiguousContainment, TowerError
from abc_towers.geometry.boxes import Box
from abc_towers.geometry.rational import mod1


__all__ = ['Parallelogram', 'contains']


@dataclass(frozen=True)
class Parallelogram:
    """ A slope-one strip P^(s)_{j1,j2,eps} of the torus times a fiber cube

    Kind 1 constrains the strip coordinate w = theta2 - theta1, kind 2 the
    coordinate w = theta1 - theta2.  Both strips are open and have width
    (1 - 2 eps) / (2 q q') in w.

    Attributes
    ----------
    kind : int
        1 or 2
    j1 : int
        the theta1 lattice index, 0 <= j1 < q
    j2 : int
        the theta2 lattice index, 0 <= j2 < q'
    eps : Fraction
        the strip margin, 0 <= eps < 1/4
    q : int
        the stage denominator q_n
    q_prime : int
        the stage denominator q'_n
    fiber_eps : Fraction
        the fiber factor is [fiber_eps, 1 - fiber_eps]^(d-2)
    """
    kind: int
    j1: int
    j2: int
    eps: Fraction
    q: int
    q_prime: int
    fiber_eps: Fraction = Fraction(0)

    def __post_init__(self):
        if self.kind not in (1, 2):
            raise TowerError(f'parallelogram kind must be 1 or 2, not {self.kind}')
        if not (0 <= self.j1 < self.q and 0 <= self.j2 < self.q_prime):
            raise TowerError(f'indices ({self.j1}, {self.j2}) outside [0, {self.q}) x '
                             f'[0, {self.q_prime})')
        if not 0 <= self.eps < Fraction(1, 4):
            raise TowerError(f'strip margin {self.eps} outside [0, 1/4)')

    @property
    def lam(self) -> int:
        return self.q * self.q_prime

    @property
    def offset(self) -> Fraction:
        """ The lattice offset c of the strip in its own strip coordinate """
        if self.kind == 1:
            return Fraction(self.j2, self.q_prime) - Fraction(self.j1, self.q)
        return Fraction(self.j1, self.q) - Fraction(self.j2, self.q_prime)

    @property
    def lower(self) -> Fraction:
        return self.offset + self.eps / (2 * self.lam)

    @property
    def width(self) -> Fraction:
        return (1 - 2 * self.eps) / (2 * self.lam)

    def strip_range(self, b: Box) -> Tuple[Fraction, Fraction]:
        """ The interval of strip-coordinate values taken on the closed box """
        if self.kind == 1:
            lo = b.theta2.lo - b.theta1.hi
            hi = b.theta2.hi - b.theta1.lo
        else:
            lo = b.theta1.lo - b.theta2.hi
            hi = b.theta1.hi - b.theta2.lo
        if hi - lo >= 1:
            raise AmbiguousContainment(f'strip coordinate of {b} covers the whole circle')
        return lo, hi

    def margins(self, b: Box) -> Tuple[Fraction, Fraction]:
        """ Slack between the box and the lower and upper strip edges

        Both values are positive exactly when the box lies in the open strip.
        """
        lo, hi = self.strip_range(b)
        below = mod1(lo - self.lower)
        above = self.width - below - (hi - lo)
        return below, above

    def fiber_ok(self, b: Box) -> bool:
        return all(self.fiber_eps <= f.lo and f.hi <= 1 - self.fiber_eps for f in b.fiber)

    def contains(self, b: Box) -> bool:
        below, above = self.margins(b)
        return below > 0 and above > 0 and self.fiber_ok(b)

    def measure(self, d: int = 2) -> Fraction:
        return self.width * (1 - 2 * self.fiber_eps) ** (d - 2)


def contains(p: Parallelogram, b: Box) -> bool:
    """ Whether box b lies in the open parallelogram p

    Parameters
    ----------
    p : Parallelogram
        The slope-one strip
    b : Box
        A box whose strip-coordinate range is shorter than the circle

    Returns
    -------
    bool
        True iff every corner of the torus factor satisfies both strip
        inequalities and the fiber factor lies in the fiber cube of p

    Raises
    ------
    AmbiguousContainment
        when the strip coordinate of b wraps the whole circle
    """
    return p.contains(b)
