# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: boxes.py
# Project: geometry
# Author: The abc-towers developers
# Created: Monday, 4th October 2021 10:30:02 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Friday, 22nd October 2021 4:48:19 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import bisect
import math
from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

from abc_towers.exceptions import TowerError
from abc_towers.geometry.rational import CircleInterval, CircleValue, Interval


__all__ = ['Box', 'BoxUnion', 'rotate', 'symmetric_difference_measure',
           'verify_pairwise_disjoint', 'Overlap']


def _angle(value) -> Fraction:
    return value.value if isinstance(value, CircleValue) else Fraction(value)


@dataclass(frozen=True)
class Box:
    """ An axis-parallel cuboid of T^2 x [0,1]^(d-2)

    The two torus factors are circle arcs, the fiber factors closed
    subintervals of [0, 1].

    Attributes
    ----------
    theta1 : CircleInterval
        the arc in the first torus coordinate
    theta2 : CircleInterval
        the arc in the second torus coordinate
    fiber : tuple of Interval
        d - 2 closed subintervals of [0, 1]
    """
    theta1: CircleInterval
    theta2: CircleInterval
    fiber: Tuple[Interval, ...] = ()

    def __post_init__(self):
        object.__setattr__(self, 'fiber', tuple(self.fiber))
        for item in self.fiber:
            if item.lo < 0 or item.hi > 1:
                raise TowerError(f'fiber interval {item} leaves [0, 1]')

    @classmethod
    def from_bounds(cls, t1lo, t1hi, t2lo, t2hi, fiber: Iterable = ()) -> 'Box':
        """ Build a box from lower and upper bounds of each factor

        Fiber factors may be given as Intervals or (lo, hi) pairs.
        """
        fiber = tuple(f if isinstance(f, Interval) else Interval(Fraction(f[0]), Fraction(f[1]))
                      for f in fiber)
        return cls(CircleInterval.from_bounds(Fraction(t1lo), Fraction(t1hi)),
                   CircleInterval.from_bounds(Fraction(t2lo), Fraction(t2hi)), fiber)

    def __repr__(self):
        return (f'<Box(theta1=[{self.theta1.lo}, {self.theta1.hi}], '
                f'theta2=[{self.theta2.lo}, {self.theta2.hi}], fiber={len(self.fiber)})>')

    @property
    def d(self) -> int:
        return 2 + len(self.fiber)

    @property
    def fiber_measure(self) -> Fraction:
        return reduce(lambda acc, f: acc * f.length, self.fiber, Fraction(1))

    @property
    def measure(self) -> Fraction:
        return self.theta1.length * self.theta2.length * self.fiber_measure

    @property
    def sort_key(self) -> tuple:
        return (self.theta1.lo, self.theta2.lo, self.theta1.length, self.theta2.length,
                tuple((f.lo, f.hi) for f in self.fiber))

    def pieces(self) -> List[Tuple[Interval, Interval]]:
        """ The torus factor split at the seams into plain rectangles """
        return [(a, b) for a in self.theta1.pieces() for b in self.theta2.pieces()]

    def rotate(self, alpha, alpha_prime, power: int = 1) -> 'Box':
        """ Image under the power-th iterate of R_{alpha, alpha'} """
        return Box(self.theta1.shift(power * _angle(alpha)),
                   self.theta2.shift(power * _angle(alpha_prime)), self.fiber)

    def translate(self, a, b) -> 'Box':
        return self.rotate(a, b, 1)

    def _fiber_overlap(self, other: 'Box') -> Fraction:
        if len(self.fiber) != len(other.fiber):
            raise TowerError('boxes of different dimension')
        return reduce(lambda acc, pair: acc * pair[0].overlap(pair[1]),
                      zip(self.fiber, other.fiber), Fraction(1))

    def intersection_measure(self, other: 'Box') -> Fraction:
        """ Exact measure of the intersection with another box """
        fiber = self._fiber_overlap(other)
        if fiber == 0:
            return Fraction(0)
        return self.theta1.overlap(other.theta1) * self.theta2.overlap(other.theta2) * fiber

    def contains_box(self, other: 'Box') -> bool:
        """ Whether the closed box other lies inside this closed box """
        return (self.theta1.contains(other.theta1) and self.theta2.contains(other.theta2)
                and all(a.contains(b) for a, b in zip(self.fiber, other.fiber)))

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        if len(point) != self.d:
            raise TowerError(f'point of dimension {len(point)} for a box of dimension {self.d}')
        return (self.theta1.contains_point(point[0]) and self.theta2.contains_point(point[1])
                and all(f.contains_point(x) for f, x in zip(self.fiber, point[2:])))

    def shrink(self, margin1: Fraction, margin2: Fraction) -> 'Box':
        """ Remove margin1 from both ends of theta1 and margin2 from theta2 """
        return Box(CircleInterval(self.theta1.lo + margin1, self.theta1.length - 2 * margin1),
                   CircleInterval(self.theta2.lo + margin2, self.theta2.length - 2 * margin2),
                   self.fiber)


@dataclass(frozen=True)
class Overlap:
    """ Witness of two members sharing interior points """
    first: int
    second: int
    measure: Fraction


class _Slab(object):
    """ A plain (non-wrapping) piece of a box with integer-scaled coordinates """
    __slots__ = ('x0', 'x1', 'y0', 'y1', 'fiber', 'owner')

    def __init__(self, x0, x1, y0, y1, fiber, owner):
        self.x0, self.x1, self.y0, self.y1 = x0, x1, y0, y1
        self.fiber = fiber
        self.owner = owner


def _common_denominator(boxes: Sequence[Box]) -> int:
    den = 1
    for box in boxes:
        values = [box.theta1.lo, box.theta1.length, box.theta2.lo, box.theta2.length]
        values += [v for f in box.fiber for v in (f.lo, f.hi)]
        for value in values:
            q = value.denominator
            den = den * q // math.gcd(den, q)
    return den


def _slabs(boxes: Sequence[Box], den: int) -> List[_Slab]:
    slabs = []
    for owner, box in enumerate(boxes):
        fiber = tuple((int(f.lo * den), int(f.hi * den)) for f in box.fiber)
        for a, b in box.pieces():
            slabs.append(_Slab(int(a.lo * den), int(a.hi * den), int(b.lo * den),
                               int(b.hi * den), fiber, owner))
    slabs.sort(key=lambda s: (s.x0, s.y0))
    return slabs


def _open_overlap(s: _Slab, t: _Slab) -> int:
    """ Integer-scaled overlap volume of two slabs (0 when interiors are disjoint) """
    dx = min(s.x1, t.x1) - max(s.x0, t.x0)
    if dx <= 0:
        return 0
    dy = min(s.y1, t.y1) - max(s.y0, t.y0)
    if dy <= 0:
        return 0
    vol = dx * dy
    for (a0, a1), (b0, b1) in zip(s.fiber, t.fiber):
        df = min(a1, b1) - max(a0, b0)
        if df <= 0:
            return 0
        vol *= df
    return vol


def verify_pairwise_disjoint(boxes: Sequence[Box], max_witnesses: int = 1,
                             progress: bool = False) -> List[Overlap]:
    """ Sweep-line check that boxes have pairwise disjoint interiors

    Coordinates are scaled to a common integer grid so the sweep compares
    machine-friendly integers while staying exact.  Boxes sharing only
    boundary points count as disjoint.

    Parameters
    ----------
    boxes : list of Box
        The boxes to check
    max_witnesses : int
        Stop after collecting this many overlapping pairs
    progress : bool
        Show a tqdm progress bar when tqdm is installed

    Returns
    -------
    list of Overlap
        the overlapping pairs found, empty when all interiors are disjoint
    """
    boxes = list(boxes)
    if len(boxes) < 2:
        return []
    den = _common_denominator(boxes)
    slabs = _slabs(boxes, den)
    scale = Fraction(1, den ** boxes[0].d)

    iterator = range(len(slabs))
    if progress:
        try:
            from tqdm import tqdm
        except ImportError:
            tqdm = None
        if tqdm:
            iterator = tqdm(iterator, desc='sweep', leave=False)

    witnesses = []
    for i in iterator:
        s = slabs[i]
        j = i + 1
        while j < len(slabs) and slabs[j].x0 < s.x1:
            t = slabs[j]
            if t.owner != s.owner:
                vol = _open_overlap(s, t)
                if vol:
                    first, second = sorted((s.owner, t.owner))
                    witnesses.append(Overlap(first, second, vol * scale))
                    if len(witnesses) >= max_witnesses:
                        return witnesses
            j += 1
    return witnesses


class BoxUnion(object):
    """ A finite union of boxes with pairwise disjoint interiors

    On construction the members are checked for disjointness, sorted, and
    abutting members with identical cross sections are merged.

    Parameters
    ----------
    boxes : iterable of Box
        The members of the union
    check : bool
        Run the sweep-line disjointness check, by default True
    merge : bool
        Merge abutting boxes with identical cross sections, by default True

    Raises
    ------
    TowerError
        when two members overlap in positive measure
    """

    def __init__(self, boxes: Iterable[Box] = (), check: bool = True, merge: bool = True):
        boxes = sorted(boxes, key=lambda b: b.sort_key)
        if check:
            overlaps = verify_pairwise_disjoint(boxes)
            if overlaps:
                w = overlaps[0]
                raise TowerError(f'union members {boxes[w.first]} and {boxes[w.second]} '
                                 f'overlap in measure {w.measure}')
        self.boxes = _merge(boxes) if merge else boxes

    def __repr__(self):
        return f'<BoxUnion(members={len(self.boxes)}, measure={self.measure})>'

    def __len__(self):
        return len(self.boxes)

    def __iter__(self):
        return iter(self.boxes)

    def __eq__(self, other):
        if not isinstance(other, BoxUnion):
            return NotImplemented
        return self.boxes == other.boxes

    @property
    def measure(self) -> Fraction:
        return sum((b.measure for b in self.boxes), Fraction(0))

    def rotate(self, alpha, alpha_prime, power: int = 1) -> 'BoxUnion':
        return BoxUnion((b.rotate(alpha, alpha_prime, power) for b in self.boxes),
                        check=False)

    def union(self, other: 'BoxUnion') -> 'BoxUnion':
        return BoxUnion(list(self.boxes) + list(other.boxes))

    def intersection_measure(self, other: Union['BoxUnion', Box]) -> Fraction:
        """ Exact measure of the intersection with another union """
        others = [other] if isinstance(other, Box) else list(other.boxes)
        if not self.boxes or not others:
            return Fraction(0)

        # index the other union's plain pieces by lower theta1 end
        pieces = sorted(((a, b, box) for box in others for a, b in box.pieces()),
                        key=lambda p: p[0].lo)
        starts = [p[0].lo for p in pieces]
        widest = max(p[0].length for p in pieces)

        total = Fraction(0)
        for box in self.boxes:
            for a, b in box.pieces():
                lo = bisect.bisect_left(starts, a.lo - widest)
                hi = bisect.bisect_left(starts, a.hi)
                for a2, b2, other_box in pieces[lo:hi]:
                    dx = a.overlap(a2)
                    if dx == 0:
                        continue
                    dy = b.overlap(b2)
                    if dy == 0:
                        continue
                    total += dx * dy * box._fiber_overlap(other_box)
        return total


def _merge(boxes: List[Box]) -> List[Box]:
    """ Merge abutting boxes that share their cross section """
    merged = _merge_along(boxes, axis=1)
    merged = _merge_along(merged, axis=2)
    return sorted(merged, key=lambda b: b.sort_key)


def _merge_along(boxes: List[Box], axis: int) -> List[Box]:
    groups = {}
    for box in boxes:
        if axis == 1:
            key = (box.theta2, box.fiber)
        else:
            key = (box.theta1, box.fiber)
        groups.setdefault(key, []).append(box)

    result = []
    for key, members in groups.items():
        members.sort(key=lambda b: (b.theta1 if axis == 1 else b.theta2).lo)
        current = members[0]
        for box in members[1:]:
            arc = current.theta1 if axis == 1 else current.theta2
            nxt = box.theta1 if axis == 1 else box.theta2
            if arc.hi == nxt.lo and arc.length + nxt.length <= 1:
                joined = CircleInterval(arc.lo, arc.length + nxt.length)
                current = (Box(joined, current.theta2, current.fiber) if axis == 1
                           else Box(current.theta1, joined, current.fiber))
            else:
                result.append(current)
                current = box
        result.append(current)
    return result


def rotate(b: Union[Box, BoxUnion], alpha, alpha_prime, power: int = 1):
    """ Exact image of a box or union under R_{alpha, alpha'} iterated power times

    Parameters
    ----------
    b : Box or BoxUnion
        The set to rotate
    alpha : Fraction or CircleValue
        The theta1 rotation number
    alpha_prime : Fraction or CircleValue
        The theta2 rotation number
    power : int
        Number of iterates, may be negative

    Returns
    -------
    Box or BoxUnion
        the rotated set, of the same measure
    """
    return b.rotate(alpha, alpha_prime, power)


def _as_union(value: Optional[Union[Box, BoxUnion]]) -> BoxUnion:
    if value is None:
        return BoxUnion()
    if isinstance(value, Box):
        return BoxUnion([value], check=False)
    return value


def symmetric_difference_measure(a: Union[Box, BoxUnion, None],
                                 b: Union[Box, BoxUnion, None]) -> Fraction:
    """ Exact measure of the symmetric difference of two sets

    Parameters
    ----------
    a : Box or BoxUnion
        The first set; None is the empty set
    b : Box or BoxUnion
        The second set; None is the empty set

    Returns
    -------
    Fraction
        mu(a) + mu(b) - 2 mu(a & b)
    """
    a, b = _as_union(a), _as_union(b)
    return a.measure + b.measure - 2 * a.intersection_measure(b)
