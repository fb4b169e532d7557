# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: rational.py
# Project: geometry
# Author: The abc-towers developers
# Created: Monday, 4th October 2021 9:12:40 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 18th October 2021 2:03:11 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import List, Tuple, Union

from abc_towers.exceptions import TowerError


__all__ = ['Rational', 'as_fraction', 'mod1', 'ceil_sqrt_ratio', 'CircleValue',
           'Interval', 'CircleInterval']

# python's Fraction is always reduced with a positive denominator
Rational = Fraction

RationalLike = Union[Fraction, int, str, dict]


def as_fraction(value: RationalLike) -> Fraction:
    """ Convert a user-facing value into an exact Fraction

    Accepts ints, Fractions, strings such as ``"2/3"`` and the serialized
    ``{"num": "...", "den": "..."}`` form.  Floats are refused since they
    carry binary rounding.

    Parameters
    ----------
    value : int, str, dict or Fraction
        The value to convert

    Returns
    -------
    Fraction
        the exact rational value

    Raises
    ------
    TowerError
        when the value cannot be read exactly
    """
    if isinstance(value, bool):
        raise TowerError(f'cannot read boolean {value} as a rational')
    if isinstance(value, (Fraction, int)):
        return Fraction(value)
    if isinstance(value, dict):
        try:
            return Fraction(int(value['num']), int(value['den']))
        except (KeyError, ValueError, ZeroDivisionError) as err:
            raise TowerError(f'invalid rational mapping {value}') from err
    if isinstance(value, str):
        try:
            return Fraction(value.strip())
        except (ValueError, ZeroDivisionError) as err:
            raise TowerError(f'invalid rational string {value!r}') from err
    raise TowerError(f'cannot read {type(value).__name__} {value!r} as an exact rational')


def mod1(x: Fraction) -> Fraction:
    """ The canonical representative of x modulo 1, in [0, 1) """
    return x - (x.numerator // x.denominator)


def ceil_sqrt_ratio(x: Fraction) -> int:
    """ Exact ceil(sqrt(x)) for a non-negative rational x """
    if x < 0:
        raise TowerError('square root of a negative rational')
    c = math.isqrt(x.numerator // x.denominator)
    while c * c < x:
        c += 1
    while c > 0 and (c - 1) * (c - 1) >= x:
        c -= 1
    return c


@dataclass(frozen=True)
class CircleValue:
    """ A point of the circle R/Z stored by its representative in [0, 1) """
    value: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'value', mod1(Fraction(self.value)))

    def __add__(self, other):
        other = other.value if isinstance(other, CircleValue) else other
        return CircleValue(self.value + other)

    def __sub__(self, other):
        other = other.value if isinstance(other, CircleValue) else other
        return CircleValue(self.value - other)

    def __mul__(self, k: int):
        return CircleValue(self.value * k)

    __rmul__ = __mul__

    def distance(self, other) -> Fraction:
        """ The circle distance to another value """
        delta = (self - other).value
        return min(delta, 1 - delta)


@dataclass(frozen=True, order=True)
class Interval:
    """ A closed interval [lo, hi] of the real line """
    lo: Fraction
    hi: Fraction

    def __post_init__(self):
        if self.hi < self.lo:
            raise TowerError(f'empty interval [{self.lo}, {self.hi}]')

    @property
    def length(self) -> Fraction:
        return self.hi - self.lo

    def overlap(self, other: 'Interval') -> Fraction:
        """ Length of the intersection with another interval """
        return max(Fraction(0), min(self.hi, other.hi) - max(self.lo, other.lo))

    def contains(self, other: 'Interval') -> bool:
        return self.lo <= other.lo and other.hi <= self.hi

    def contains_point(self, x: Fraction) -> bool:
        return self.lo <= x <= self.hi

    def shrink(self, margin: Fraction) -> 'Interval':
        return Interval(self.lo + margin, self.hi - margin)

    def shift(self, offset: Fraction) -> 'Interval':
        return Interval(self.lo + offset, self.hi + offset)


@dataclass(frozen=True)
class CircleInterval:
    """ An arc of the circle starting at lo with length 0 < length <= 1 """
    lo: Fraction
    length: Fraction

    def __post_init__(self):
        if not 0 < self.length <= 1:
            raise TowerError(f'circle interval length {self.length} outside (0, 1]')
        object.__setattr__(self, 'lo', mod1(Fraction(self.lo)))

    @classmethod
    def from_bounds(cls, lo: Fraction, hi: Fraction) -> 'CircleInterval':
        """ Build the arc from lo to hi, hi - lo giving the length """
        return cls(lo, Fraction(hi) - Fraction(lo))

    @property
    def hi(self) -> Fraction:
        """ The unreduced upper end, lo + length, possibly beyond 1 """
        return self.lo + self.length

    @property
    def wraps(self) -> bool:
        return self.hi > 1

    def pieces(self) -> List[Interval]:
        """ Split the arc at the 0/1 seam into plain intervals of [0, 1] """
        if not self.wraps:
            return [Interval(self.lo, self.hi)]
        return [Interval(self.lo, Fraction(1)), Interval(Fraction(0), self.hi - 1)]

    def shift(self, offset: Fraction) -> 'CircleInterval':
        return CircleInterval(self.lo + offset, self.length)

    def overlap(self, other: 'CircleInterval') -> Fraction:
        """ Length of the intersection with another arc """
        return sum((a.overlap(b) for a in self.pieces() for b in other.pieces()), Fraction(0))

    def offset_of(self, other: 'CircleInterval') -> Fraction:
        """ Position of other's lower end measured forward from lo, in [0, 1) """
        return mod1(other.lo - self.lo)

    def contains(self, other: 'CircleInterval') -> bool:
        """ Whether the closed arc other lies in this closed arc """
        if self.length == 1:
            return True
        return self.offset_of(other) + other.length <= self.length

    def contains_point(self, x: Fraction) -> bool:
        return mod1(Fraction(x) - self.lo) <= self.length

    def lift_near(self, x: Fraction) -> Tuple[Fraction, Fraction]:
        """ Bounds of the arc lifted to the real line closest to x """
        lo = self.lo + math.floor(Fraction(x) - self.lo)
        return lo, lo + self.length
