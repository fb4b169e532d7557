# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: conjugations.py
# Project: construction
# Author: The abc-towers developers
# Created: Monday, 11th October 2021 9:47:12 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Friday, 29th October 2021 11:26:40 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

from dataclasses import dataclass
from fractions import Fraction
from functools import reduce
from typing import Iterable, List, Optional, Sequence, Tuple, Union

import mpmath
import numpy as np
import sympy

from abc_towers import log
from abc_towers.construction.bumps import BumpProfile, as_mpf
from abc_towers.construction.combinatorics import CellAssignment, StageParams
from abc_towers.exceptions import OutsideGoodDomain, TowerError
from abc_towers.geometry.boxes import Box
from abc_towers.geometry.rational import Interval, mod1


__all__ = ['AffinePiece', 'SlantedCell', 'PiecewiseMap', 'NormCertificate', 'tilde_cell',
           'good_cell', 'slanted_good_cell', 'h1_forward', 'h1_inverse', 'h2_forward',
           'h2_inverse', 'hn_forward', 'hn_image_of_tilde_cell', 'good_domain_h1',
           'good_domain_h2', 'h1_inverse_map', 'h2_inverse_map', 'verify_good_domains',
           'xi_forward', 'xi_inverse', 'theta_forward', 'theta_inverse', 'h2_composed',
           'h2_inverse_composed', 'verify_xi_factorization', 'shear_bound', 'stage_norm_bound',
           'norm_bound_DH', 'sampled_norm', 'diameter_check', 'check_equivariance']

Point = Tuple[Fraction, ...]
HALF = Fraction(1, 2)


def _floor(x: Fraction) -> int:
    return x.numerator // x.denominator


def _digits(ell: int, base: int, count: int) -> Tuple[int, ...]:
    """ (l_1, ..., l_count) with ell = sum l_r base^(r-1) """
    return tuple((ell // base ** r) % base for r in range(count))


def _ell(digits: Sequence[int], base: int) -> int:
    return sum(x * base ** r for r, x in enumerate(digits))


@dataclass(frozen=True)
class AffinePiece:
    """ x -> L x + c on one cell of a good domain """
    linear: Tuple[Tuple[Fraction, ...], ...]
    shift: Tuple[Fraction, ...]

    @property
    def det(self) -> Fraction:
        value = sympy.Matrix([[sympy.Rational(x.numerator, x.denominator) for x in row]
                              for row in self.linear]).det()
        return Fraction(int(value.p), int(value.q))

    @property
    def norm(self) -> Fraction:
        """ The maximal absolute row sum of the linear part """
        return max(sum((abs(x) for x in row), Fraction(0)) for row in self.linear)

    def apply(self, point: Sequence[Fraction]) -> Point:
        image = [sum((a * x for a, x in zip(row, point)), Fraction(0)) + c
                 for row, c in zip(self.linear, self.shift)]
        return (mod1(image[0]), mod1(image[1])) + tuple(image[2:])


@dataclass(frozen=True)
class SlantedCell:
    """ A slanted parallelogram piece of T^2 times a fiber box

    Kind 1 is bounded by a range of theta1 (the straight coordinate) and a
    range of theta2 - theta1; kind 2 by a range of theta2 and a range of
    theta1 - theta2.  Both ranges are normalized so that their lower end
    lies in [0, 1).

    Attributes
    ----------
    kind : int
        1 or 2
    straight : Interval
        the range of the straight coordinate
    slant : Interval
        the range of the difference coordinate
    fiber : tuple of Interval
        the fiber factors
    """
    kind: int
    straight: Interval
    slant: Interval
    fiber: Tuple[Interval, ...] = ()

    def __post_init__(self):
        if self.kind not in (1, 2):
            raise TowerError(f'slanted cell kind must be 1 or 2, not {self.kind}')
        if self.straight.length > 1 or self.slant.length > 1:
            raise TowerError('slanted cell ranges must be shorter than the circle')
        object.__setattr__(self, 'straight', self.straight.shift(-_floor(self.straight.lo)))
        object.__setattr__(self, 'slant', self.slant.shift(-_floor(self.slant.lo)))
        object.__setattr__(self, 'fiber', tuple(self.fiber))

    @property
    def measure(self) -> Fraction:
        return reduce(lambda acc, f: acc * f.length, self.fiber,
                      self.straight.length * self.slant.length)

    def contains_point(self, point: Sequence[Fraction]) -> bool:
        t1, t2 = point[0], point[1]
        s, w = (t1, t2 - t1) if self.kind == 1 else (t2, t1 - t2)
        return (mod1(s - self.straight.lo) <= self.straight.length
                and mod1(w - self.slant.lo) <= self.slant.length
                and all(f.contains_point(x) for f, x in zip(self.fiber, point[2:])))

    def ranges(self, b: Box) -> Tuple[Tuple[Fraction, Fraction], Tuple[Fraction, Fraction]]:
        """ The straight and difference coordinate ranges taken on a closed box """
        if self.kind == 1:
            straight, other = b.theta1, b.theta2
        else:
            straight, other = b.theta2, b.theta1
        return ((straight.lo, straight.hi),
                (other.lo - straight.hi, other.hi - straight.lo))

    def margins(self, b: Box) -> Tuple[Fraction, ...]:
        """ Slack of the box against the four torus edges of the cell

        Returns (straight below, straight above, slant below, slant above);
        the box lies in the closed cell iff all four are non-negative.
        """
        (s0, s1), (w0, w1) = self.ranges(b)
        below_s = mod1(s0 - self.straight.lo)
        below_w = mod1(w0 - self.slant.lo)
        return (below_s, self.straight.length - below_s - (s1 - s0),
                below_w, self.slant.length - below_w - (w1 - w0))

    def contains_box(self, b: Box) -> bool:
        if len(b.fiber) != len(self.fiber):
            raise TowerError('box and slanted cell of different dimension')
        return (all(x >= 0 for x in self.margins(b))
                and all(f.contains(g) for f, g in zip(self.fiber, b.fiber)))


@dataclass
class PiecewiseMap:
    """ A map given by affine pieces on its good domain

    Points outside every piece are only known to be mapped by the smooth
    extension and are reported with ``extension_tag``.
    """
    name: str
    pieces: List[Tuple[object, AffinePiece]]
    extension_tag: str = 'extension'

    def __len__(self):
        return len(self.pieces)

    def locate(self, point: Sequence[Fraction]) -> Union[AffinePiece, str]:
        for domain, piece in self.pieces:
            if domain.contains_point(point):
                return piece
        return self.extension_tag

    @property
    def max_norm(self) -> Fraction:
        return max(piece.norm for _, piece in self.pieces)

    def determinants(self) -> List[Fraction]:
        return sorted({piece.det for _, piece in self.pieces})


@dataclass(frozen=True)
class NormCertificate:
    """ An upper bound for the order-k norm of a conjugation

    Attributes
    ----------
    k : int
        the derivative order
    upper : Fraction
        the bound
    method : str
        exact, analytic-bound or sampled
    resolution : int, optional
        number of samples of a sampled certificate
    """
    k: int
    upper: Fraction
    method: str = 'analytic-bound'
    resolution: Optional[int] = None

    @property
    def certified(self) -> bool:
        return self.method != 'sampled'

    def as_dict(self) -> dict:
        return {'k': self.k, 'upper': self.upper, 'method': self.method,
                'resolution': self.resolution, 'certified': self.certified}


# cells

def _fiber_window(stage: StageParams, digits: Sequence[int]) -> Tuple[Interval, ...]:
    nl = stage.n * stage.lam
    e = stage.eps
    return tuple(Interval((x + e) / nl, (x + 1 - e) / nl) for x in digits)


def _band(stage: StageParams, s: int) -> Tuple[Fraction, Fraction]:
    """ The local theta2 band of the upper (s=1) or lower (s=2) half cell """
    e = stage.eps
    if s == 1:
        return (1 + e) / 2, 1 - e / 2
    return e / 2, (1 - e) / 2


def _window(stage: StageParams, ell: int) -> Tuple[Fraction, Fraction]:
    """ The local straight-coordinate window of sub-cell ell """
    e, g = stage.eps, stage.gamma
    return (ell + e / 2) / g, (ell + 1 - e / 2) / g


def _core_fiber(stage: StageParams) -> Tuple[Interval, ...]:
    return tuple(Interval(stage.eps, 1 - stage.eps) for _ in range(stage.d - 2))


def tilde_cell(stage: StageParams, I: int, J: int, ell: int, s: int) -> Box:
    """ The cell S~^(s) in lattice cell (I, J) with fiber sub-cube ell """
    lam, e = stage.lam, stage.eps
    lo, hi = _band(stage, s)
    digits = _digits(ell, stage.n * lam, stage.d - 2)
    return Box.from_bounds((I + e / 2) / lam, (I + 1 - e / 2) / lam, (J + lo) / lam,
                           (J + hi) / lam, _fiber_window(stage, digits))


def good_cell(stage: StageParams, I: int, J: int, ell: int, s: int) -> Box:
    """ The cell S^(s)_{., ., ell, eps} sitting in lattice cell (I, J) """
    lam = stage.lam
    lo, hi = _band(stage, s)
    u0, u1 = _window(stage, ell)
    return Box.from_bounds((I + u0) / lam, (I + u1) / lam, (J + lo) / lam, (J + hi) / lam,
                           _core_fiber(stage))


# h_{n,1}

def _locate_tilde(stage: StageParams, point: Sequence[Fraction]) -> Tuple[int, int, int, int]:
    lam, e = stage.lam, stage.eps
    t1, t2 = mod1(Fraction(point[0])), mod1(Fraction(point[1]))
    I, J = _floor(lam * t1), _floor(lam * t2)
    u, v = lam * t1 - I, lam * t2 - J
    s = 1 if v >= HALF else 2
    lo, hi = _band(stage, s)
    if not (e / 2 <= u <= 1 - e / 2 and lo <= v <= hi):
        raise OutsideGoodDomain(f'point {tuple(point)} is outside the good domain of h_n,1')
    nl = stage.n * lam
    digits = []
    for r in point[2:]:
        x = _floor(nl * Fraction(r))
        if not (0 <= x < nl and e <= nl * Fraction(r) - x <= 1 - e):
            raise OutsideGoodDomain(f'fiber coordinate {r} is outside the good domain of h_n,1')
        digits.append(x)
    return I, J, _ell(digits, nl), s


def _h1_target(stage: StageParams, I: int, J: int, s: int) -> Tuple[int, int]:
    """ The lattice cell receiving tilde cell (I, J) under h_n,1 """
    i, j = I % stage.q_prime, J % stage.q
    a, a_prime = CellAssignment(stage).offsets(i, j, s)
    return (I + a * stage.q_prime) % stage.lam, (J + a_prime * stage.q) % stage.lam


def _h1_source(stage: StageParams, J1: int, J2: int, s: int) -> Tuple[int, int]:
    i, j = J1 % stage.q_prime, J2 % stage.q
    a, a_prime = CellAssignment(stage).offsets(i, j, s)
    return (J1 - a * stage.q_prime) % stage.lam, (J2 - a_prime * stage.q) % stage.lam


def _h1_point(stage: StageParams, point: Sequence[Fraction]) -> Point:
    I, J, ell, s = _locate_tilde(stage, point)
    lam, g, nl = stage.lam, stage.gamma, stage.n * stage.lam
    J1, J2 = _h1_target(stage, I, J, s)
    u = lam * mod1(Fraction(point[0])) - I
    v = lam * mod1(Fraction(point[1])) - J
    digits = _digits(ell, nl, stage.d - 2)
    fiber = tuple(nl * Fraction(r) - x for r, x in zip(point[2:], digits))
    return (mod1((J1 + (ell + u) / g) / lam), mod1((J2 + v) / lam)) + fiber


def _box_corner(b: Box) -> Point:
    return (b.theta1.lo, b.theta2.lo) + tuple(f.lo for f in b.fiber)


def _box_far(b: Box) -> Point:
    return (b.theta1.hi, b.theta2.hi) + tuple(f.hi for f in b.fiber)


def h1_forward(stage: StageParams, x: Union[Sequence[Fraction], Box]):
    """ Evaluate h_n,1 = phi_n o psi_n on a point or box of a tilde cell

    On each cell S~^(s)_{i,j,ell,eps} the map is affine: psi_n shrinks
    theta1 by gamma = (n q q')^(d-2) into the sub-window ell and stretches
    the fiber by n q q', then phi_n translates by (a/q, a'/q').

    Parameters
    ----------
    stage : StageParams
        The stage
    x : tuple of Fraction or Box
        A point or a box inside a single tilde cell

    Returns
    -------
    tuple or Box
        the image

    Raises
    ------
    OutsideGoodDomain
        when the input is not inside a tilde cell
    """
    if not isinstance(x, Box):
        return _h1_point(stage, x)
    I, J, ell, s = _locate_tilde(stage, _box_corner(x))
    if not tilde_cell(stage, I, J, ell, s).contains_box(x):
        raise OutsideGoodDomain(f'{x} is not inside a single tilde cell')
    lo, hi = _h1_point(stage, _box_corner(x)), _h1_point(stage, _box_far(x))
    hi1 = lo[0] + x.theta1.length / stage.gamma
    hi2 = lo[1] + x.theta2.length
    fiber = [(a, b) for a, b in zip(lo[2:], hi[2:])]
    return Box.from_bounds(lo[0], hi1, lo[1], hi2, fiber)


def _locate_good(stage: StageParams, point: Sequence[Fraction]) -> Tuple[int, int, int, int]:
    lam, e, g = stage.lam, stage.eps, stage.gamma
    t1, t2 = mod1(Fraction(point[0])), mod1(Fraction(point[1]))
    J1, J2 = _floor(lam * t1), _floor(lam * t2)
    u, v = lam * t1 - J1, lam * t2 - J2
    s = 1 if v >= HALF else 2
    lo, hi = _band(stage, s)
    ell = min(_floor(g * u), g - 1)
    u0, u1 = _window(stage, ell)
    if not (u0 <= u <= u1 and lo <= v <= hi):
        raise OutsideGoodDomain(f'point {tuple(point)} is outside the good domain of h_n,1^-1')
    if any(not e <= Fraction(r) <= 1 - e for r in point[2:]):
        raise OutsideGoodDomain(f'fiber of {tuple(point)} is outside [eps, 1 - eps]')
    return J1, J2, ell, s


def _h1_inverse_point(stage: StageParams, point: Sequence[Fraction]) -> Point:
    J1, J2, ell, s = _locate_good(stage, point)
    lam, g, nl = stage.lam, stage.gamma, stage.n * stage.lam
    I, J = _h1_source(stage, J1, J2, s)
    u = g * (lam * mod1(Fraction(point[0])) - J1) - ell
    v = lam * mod1(Fraction(point[1])) - J2
    digits = _digits(ell, nl, stage.d - 2)
    fiber = tuple((Fraction(r) + x) / nl for r, x in zip(point[2:], digits))
    return (mod1((I + u) / lam), mod1((J + v) / lam)) + fiber


def h1_inverse(stage: StageParams, x: Union[Sequence[Fraction], Box]):
    """ Evaluate h_n,1^-1 on a point or box of the good domain D(h_n,1^-1) """
    if not isinstance(x, Box):
        return _h1_inverse_point(stage, x)
    J1, J2, ell, s = _locate_good(stage, _box_corner(x))
    if not good_cell(stage, J1, J2, ell, s).contains_box(x):
        raise OutsideGoodDomain(f'{x} is not inside a single good cell')
    lo, hi = _h1_inverse_point(stage, _box_corner(x)), _h1_inverse_point(stage, _box_far(x))
    fiber = [(a, b) for a, b in zip(lo[2:], hi[2:])]
    return Box.from_bounds(lo[0], lo[0] + x.theta1.length * stage.gamma, lo[1],
                           lo[1] + x.theta2.length, fiber)


# h_{n,2}

def _half(x):
    return HALF if isinstance(x, (Fraction, int)) else as_mpf(HALF)


def _A(s: int, u: Fraction, v: Fraction) -> Tuple[Fraction, Fraction]:
    half = _half(u)
    if s == 1:
        return u, v + u - half
    return u + half - v, u


def _A_inverse(s: int, x: Fraction, y: Fraction) -> Tuple[Fraction, Fraction]:
    half = _half(x)
    if s == 1:
        return x, y - x + half
    return y, y + half - x


def h2_forward(stage: StageParams, x: Union[Sequence[Fraction], Box]):
    """ Evaluate h_n,2 on a point or box of D(h_n,1^-1)

    On each cell the map is the affine map A_s of the lattice cell,
    A_1(u, v) = (u, v + u - 1/2) and A_2(u, v) = (u + 1/2 - v, u) in local
    coordinates, so boxes go to slanted cells.
    """
    lam = stage.lam
    if isinstance(x, Box):
        J1, J2, ell, s = _locate_good(stage, _box_corner(x))
        if not good_cell(stage, J1, J2, ell, s).contains_box(x):
            raise OutsideGoodDomain(f'{x} is not inside a single good cell')
        u0 = lam * x.theta1.lo - J1
        u1 = u0 + lam * x.theta1.length
        v0 = lam * x.theta2.lo - J2
        v1 = v0 + lam * x.theta2.length
        if s == 1:
            straight = Interval((J1 + u0) / lam, (J1 + u1) / lam)
            slant = Interval((J2 - J1 + v0 - HALF) / lam, (J2 - J1 + v1 - HALF) / lam)
        else:
            straight = Interval((J2 + u0) / lam, (J2 + u1) / lam)
            slant = Interval((J1 - J2 + HALF - v1) / lam, (J1 - J2 + HALF - v0) / lam)
        return SlantedCell(s, straight, slant, x.fiber)

    J1, J2, _, s = _locate_good(stage, x)
    u = lam * mod1(Fraction(x[0])) - J1
    v = lam * mod1(Fraction(x[1])) - J2
    a, b = _A(s, u, v)
    return (mod1((J1 + a) / lam), mod1((J2 + b) / lam)) + tuple(Fraction(r) for r in x[2:])


def _locate_slanted(stage: StageParams, point: Sequence[Fraction]) -> Tuple[int, int, int, int]:
    """ (j1, j2, ell, s) of the cell I^(n,s)_{j1,j2,ell} holding a point """
    lam, e, g = stage.lam, stage.eps, stage.gamma
    t1, t2 = mod1(Fraction(point[0])), mod1(Fraction(point[1]))
    if any(not e <= Fraction(r) <= 1 - e for r in point[2:]):
        raise OutsideGoodDomain(f'fiber of {tuple(point)} is outside [eps, 1 - eps]')
    for s, (a, b) in ((1, (t1, t2)), (2, (t2, t1))):
        ja = _floor(lam * a)
        u = lam * a - ja
        ell = min(_floor(g * u), g - 1)
        u0, u1 = _window(stage, ell)
        if not u0 <= u <= u1:
            continue
        w = lam * b - u
        jb = _floor(w)
        if e / 2 <= w - jb <= (1 - e) / 2:
            j1, j2 = (ja, jb % lam) if s == 1 else (jb % lam, ja)
            return j1, j2, ell, s
    raise OutsideGoodDomain(f'point {tuple(point)} is outside the good domain of h_n,2^-1')


def h2_inverse(stage: StageParams, x: Union[Sequence[Fraction], SlantedCell]):
    """ Evaluate h_n,2^-1 on a point or slanted cell of D(h_n,2^-1)

    Parameters
    ----------
    stage : StageParams
        The stage
    x : tuple of Fraction or SlantedCell
        A point of some I^(n,s)_{j1,j2,ell} or a slanted cell inside one

    Returns
    -------
    tuple or Box
        the preimage, a point or an axis-parallel box

    Raises
    ------
    OutsideGoodDomain
        when the input is not inside a slanted good cell
    """
    lam = stage.lam
    if isinstance(x, SlantedCell):
        straight, slant = x.straight, x.slant
        ja = _floor(lam * straight.lo)
        u0, u1 = lam * straight.lo - ja, lam * straight.hi - ja
        w0 = lam * slant.lo + ja
        jb = _floor(w0)
        f0, f1 = w0 - jb, lam * slant.hi + ja - jb
        e = stage.eps
        ell = min(_floor(stage.gamma * u0), stage.gamma - 1)
        lo, hi = _window(stage, ell)
        if not (lo <= u0 and u1 <= hi and e / 2 <= f0 and f1 <= (1 - e) / 2):
            raise OutsideGoodDomain(f'{x} is not inside a single slanted good cell')
        if any(not Interval(e, 1 - e).contains(f) for f in x.fiber):
            raise OutsideGoodDomain(f'fiber of {x} is outside [eps, 1 - eps]')
        if x.kind == 1:
            return Box.from_bounds((ja + u0) / lam, (ja + u1) / lam, (jb + f0 + HALF) / lam,
                                   (jb + f1 + HALF) / lam, x.fiber)
        return Box.from_bounds((jb + u0) / lam, (jb + u1) / lam, (ja + HALF - f1) / lam,
                               (ja + HALF - f0) / lam, x.fiber)

    j1, j2, _, s = _locate_slanted(stage, x)
    t1, t2 = mod1(Fraction(x[0])), mod1(Fraction(x[1]))
    # local coordinates may leave the cell by multiples of lam, which vanish mod 1
    a, b = _A_inverse(s, lam * t1 - j1, lam * t2 - j2)
    return (mod1((j1 + a) / lam), mod1((j2 + b) / lam)) + tuple(Fraction(r) for r in x[2:])


# the shears Xi_1, Xi_2 and the conjugating map Theta

MpPoint = Tuple[mpmath.mpf, ...]


def _shear(stage: StageParams, j: int, point: Sequence, sign: int,
           profile: Optional[BumpProfile]) -> MpPoint:
    if j not in (1, 2):
        raise TowerError(f'there is no shear Xi_{j}, use 1 or 2')
    profile = profile or BumpProfile.for_stage(stage.eps, stage.gamma)
    beta = profile.beta_scaled(stage.lam)
    x = [as_mpf(c) for c in point]
    weight = mpmath.fprod(as_mpf(profile.sigma(r)) for r in x[2:])
    moved, base = (0, 1) if j == 1 else (1, 0)
    x[moved] = mpmath.frac(x[moved] + sign * as_mpf(beta(x[base])) * weight)
    x[base] = mpmath.frac(x[base])
    return tuple(x)


def xi_forward(stage: StageParams, j: int, point: Sequence,
               profile: Optional[BumpProfile] = None) -> MpPoint:
    """ Evaluate the shear Xi_j of a stage at a point

    Xi_1 moves theta_1 by beta(theta_2) prod sigma(r_i) and Xi_2 moves
    theta_2 by beta(theta_1) prod sigma(r_i), with beta the 1/lambda
    periodic rescaling of beta~_rho, rho = eps / gamma, and sigma the
    fiber bump of width eps.  Values are mpmath numbers.

    Parameters
    ----------
    stage : StageParams
        The stage
    j : int
        1 or 2
    point : tuple
        the point, Fractions or mpmath numbers
    profile : BumpProfile
        the bump profile, by default ``BumpProfile.for_stage(eps, gamma)``

    Returns
    -------
    tuple
        the image, torus coordinates reduced mod 1
    """
    return _shear(stage, j, point, 1, profile)


def xi_inverse(stage: StageParams, j: int, point: Sequence,
               profile: Optional[BumpProfile] = None) -> MpPoint:
    """ Evaluate Xi_j^-1, which subtracts the same shear term """
    return _shear(stage, j, point, -1, profile)


def theta_forward(stage: StageParams, point: Sequence[Fraction],
                  profile: Optional[BumpProfile] = None) -> MpPoint:
    """ Evaluate Theta = Xi_1^-1 o Xi_2^-1 o A_s on a cell of D(h_n,1^-1) """
    lam = stage.lam
    J1, J2, _, s = _locate_good(stage, point)
    u = lam * mod1(Fraction(point[0])) - J1
    v = lam * mod1(Fraction(point[1])) - J2
    a, b = _A(s, u, v)
    image = ((J1 + a) / lam, (J2 + b) / lam) + tuple(Fraction(r) for r in point[2:])
    return xi_inverse(stage, 1, xi_inverse(stage, 2, image, profile), profile)


def theta_inverse(stage: StageParams, point: Sequence, cell: Tuple[int, int, int],
                  profile: Optional[BumpProfile] = None) -> MpPoint:
    """ Evaluate Theta^-1 = A_s^-1 o Xi_2 o Xi_1 for the slanted cell (j1, j2, s) """
    lam = stage.lam
    j1, j2, s = cell
    w = xi_forward(stage, 2, xi_forward(stage, 1, point, profile), profile)
    a, b = _A_inverse(s, lam * w[0] - j1, lam * w[1] - j2)
    return (mpmath.frac((j1 + a) / lam), mpmath.frac((j2 + b) / lam)) + w[2:]


def h2_composed(stage: StageParams, point: Sequence[Fraction],
                profile: Optional[BumpProfile] = None) -> MpPoint:
    """ h_n,2 = Xi_2 o Xi_1 o Theta, evaluated pointwise with mpmath """
    return xi_forward(stage, 2, xi_forward(stage, 1, theta_forward(stage, point, profile),
                                           profile), profile)


def h2_inverse_composed(stage: StageParams, point: Sequence[Fraction],
                        profile: Optional[BumpProfile] = None) -> MpPoint:
    """ h_n,2^-1 = Theta^-1 o Xi_1^-1 o Xi_2^-1 on a point of D(h_n,2^-1) """
    j1, j2, _, s = _locate_slanted(stage, point)
    inner = xi_inverse(stage, 1, xi_inverse(stage, 2, point, profile), profile)
    return theta_inverse(stage, inner, (j1, j2, s), profile)


def _gap(a: Sequence, b: Sequence) -> mpmath.mpf:
    """ sup distance on T^2 x [0, 1]^(d-2) """
    gaps = []
    for k, (x, y) in enumerate(zip(a, b)):
        diff = as_mpf(x) - as_mpf(y)
        if k < 2:
            diff = mpmath.frac(diff)
            diff = min(diff, 1 - diff)
        gaps.append(abs(diff))
    return max(gaps)


def verify_xi_factorization(stage: StageParams, samples: int = 100, seed: int = 0,
                            dps: int = 30) -> dict:
    """ Check h_n,2 = Xi_2 o Xi_1 o Theta on random points of the good cells

    Each point is drawn in the middle of a random cell of D(h_n,1^-1).  The
    composition is compared with the exact affine h_n,2, and the composed
    inverse with the exact h_n,2^-1 at the image.

    Parameters
    ----------
    stage : StageParams
        The stage
    samples : int
        the number of points
    seed : int
        seed of the numpy generator
    dps : int
        mpmath decimal precision; deviations must stay below 10^(8 - dps)

    Returns
    -------
    dict
        maximal deviations, the number of points where a shear term was
        non-zero, and passed
    """
    lam, g = stage.lam, stage.gamma
    if lam >= 2 ** 62:
        raise TowerError(f'stage {stage.n} is too large to sample')
    profile = BumpProfile.for_stage(stage.eps, stage.gamma)
    rng = np.random.default_rng(seed)
    forward = inverse = mpmath.mpf(0)
    sheared = 0
    with mpmath.workdps(dps):
        tol = mpmath.mpf(10) ** (8 - dps)
        for _ in range(samples):
            I, J = (int(x) for x in rng.integers(0, lam, size=2))
            s = int(rng.integers(1, 3))
            ell = int(rng.integers(0, g))
            cell = good_cell(stage, I, J, ell, s)
            frac = [Fraction(int(x), 1024) for x in rng.integers(128, 896, size=stage.d)]
            point = (cell.theta1.lo + cell.theta1.length * frac[0],
                     cell.theta2.lo + cell.theta2.length * frac[1]) + \
                tuple(f.lo + f.length * x for f, x in zip(cell.fiber, frac[2:]))
            image = h2_forward(stage, point)
            inner = theta_forward(stage, point, profile)
            if _gap(xi_forward(stage, 1, inner, profile), inner) > tol:
                sheared += 1
            forward = max(forward, _gap(h2_composed(stage, point, profile), image))
            inverse = max(inverse, _gap(h2_inverse_composed(stage, image, profile), point))
        passed = forward <= tol and inverse <= tol
    report = {'stage': stage.n, 'samples': samples, 'forward_deviation': float(forward),
              'inverse_deviation': float(inverse), 'sheared': sheared, 'passed': passed}
    if not passed:
        log.warning(f'stage {stage.n}: Xi factorization deviates by '
                    f'{float(max(forward, inverse))}')
    return report


def hn_forward(stage: StageParams, x):
    """ h_n = h_n,2 o h_n,1 on a tilde cell """
    return h2_forward(stage, h1_forward(stage, x))


def hn_image_of_tilde_cell(stage: StageParams, i: int, j: int, ell: int, s: int) -> SlantedCell:
    """ The slanted cell I^(n,s)_{j1,j2,ell} = h_n(S~^(s)_{i,j,ell,eps})

    (j1, j2) = (i + a q', j + a' q) with (a, a') the translation offsets of
    cell (i, j).  The result is compared with the exact image of the
    tilde cell under h_n,2 o h_n,1.

    Parameters
    ----------
    stage : StageParams
        The stage
    i : int
        0 <= i < q'
    j : int
        0 <= j < q
    ell : int
        fiber sub-cube index, 0 <= ell < gamma
    s : int
        1 or 2

    Returns
    -------
    SlantedCell
        the image cell
    """
    if not (0 <= i < stage.q_prime and 0 <= j < stage.q and 0 <= ell < stage.gamma
            and s in (1, 2)):
        raise TowerError(f'invalid tilde cell indices ({i}, {j}, {ell}, {s})')
    lam, e = stage.lam, stage.eps
    a, a_prime = CellAssignment(stage).offsets(i, j, s)
    j1, j2 = i + a * stage.q_prime, j + a_prime * stage.q
    u0, u1 = _window(stage, ell)
    fiber = _core_fiber(stage)
    if s == 1:
        cell = SlantedCell(1, Interval((j1 + u0) / lam, (j1 + u1) / lam),
                           Interval((j2 - j1 + e / 2) / lam, (j2 - j1 + (1 - e) / 2) / lam), fiber)
    else:
        cell = SlantedCell(2, Interval((j2 + u0) / lam, (j2 + u1) / lam),
                           Interval((j1 - j2 + e / 2) / lam, (j1 - j2 + (1 - e) / 2) / lam), fiber)
    image = hn_forward(stage, tilde_cell(stage, i, j, ell, s))
    if image != cell:
        raise TowerError(f'h_n image of tilde cell ({i}, {j}, {ell}, {s}) is not I_({j1},{j2})')
    return cell


# good domains

def _cells(stage: StageParams, limit: int) -> Iterable[Tuple[int, int, int, int]]:
    lam, g = stage.lam, stage.gamma
    total = 2 * lam * lam * g
    if total > limit:
        raise TowerError(f'good domain of stage {stage.n} has {total} cells, above {limit}')
    for s in (1, 2):
        for J1 in range(lam):
            for J2 in range(lam):
                for ell in range(g):
                    yield J1, J2, ell, s


def good_domain_h1(stage: StageParams, limit: int = 10 ** 5) -> List[Box]:
    """ The cells of D(h_n,1^-1), every translate of every S^(s)_{i,j,ell,eps} """
    return [good_cell(stage, J1, J2, ell, s) for J1, J2, ell, s in _cells(stage, limit)]


def slanted_good_cell(stage: StageParams, J1: int, J2: int, ell: int, s: int) -> SlantedCell:
    """ The cell I^(n,s)_{J1,J2,ell} of D(h_n,2^-1) """
    lam, e = stage.lam, stage.eps
    u0, u1 = _window(stage, ell)
    ja, jb = (J1, J2) if s == 1 else (J2, J1)
    return SlantedCell(s, Interval((ja + u0) / lam, (ja + u1) / lam),
                       Interval((jb - ja + e / 2) / lam, (jb - ja + (1 - e) / 2) / lam),
                       _core_fiber(stage))


def good_domain_h2(stage: StageParams, limit: int = 10 ** 5) -> List[SlantedCell]:
    """ The cells I^(n,s)_{j1,j2,ell} of D(h_n,2^-1) """
    return [slanted_good_cell(stage, J1, J2, ell, s) for J1, J2, ell, s in _cells(stage, limit)]


def _diag(values: Sequence[Fraction]) -> Tuple[Tuple[Fraction, ...], ...]:
    n = len(values)
    return tuple(tuple(values[r] if r == c else Fraction(0) for c in range(n))
                 for r in range(n))


def h1_inverse_map(stage: StageParams, limit: int = 10 ** 5) -> PiecewiseMap:
    """ h_n,1^-1 as affine pieces on the cells of its good domain """
    lam, g, nl = stage.lam, stage.gamma, stage.n * stage.lam
    linear = _diag([Fraction(g), Fraction(1)] + [Fraction(1, nl)] * (stage.d - 2))
    pieces = []
    for J1, J2, ell, s in _cells(stage, limit):
        I, J = _h1_source(stage, J1, J2, s)
        digits = _digits(ell, nl, stage.d - 2)
        shift = (Fraction(I - g * J1 - ell, lam), Fraction(J - J2, lam)) + \
            tuple(Fraction(x, nl) for x in digits)
        pieces.append((good_cell(stage, J1, J2, ell, s), AffinePiece(linear, shift)))
    return PiecewiseMap('h1_inverse', pieces)


def h2_inverse_map(stage: StageParams, limit: int = 10 ** 5) -> PiecewiseMap:
    """ h_n,2^-1 as affine pieces on the cells I^(n,s)_{j1,j2,ell} """
    lam = stage.lam
    one, zero = Fraction(1), Fraction(0)
    fiber_rows = [tuple(one if c == r + 2 else zero for c in range(stage.d))
                  for r in range(stage.d - 2)]
    pad = (zero,) * (stage.d - 2)
    pieces = []
    for J1, J2, ell, s in _cells(stage, limit):
        if s == 1:
            rows = ((one, zero) + pad, (-one, one) + pad)
            shift = (zero, (J1 + HALF) / lam)
        else:
            rows = ((zero, one) + pad, (-one, one) + pad)
            shift = (Fraction(J1 - J2, lam), (J1 + HALF) / lam)
        linear = rows + tuple(fiber_rows)
        pieces.append((slanted_good_cell(stage, J1, J2, ell, s),
                       AffinePiece(linear, shift + pad)))
    return PiecewiseMap('h2_inverse', pieces)


def verify_good_domains(stage: StageParams, limit: int = 10 ** 5) -> dict:
    """ Check h_n,2^-1(D(h_n,2^-1)) = D(h_n,1^-1) cell by cell, and unit determinants """
    images = sorted((h2_inverse(stage, c) for c in good_domain_h2(stage, limit)),
                    key=lambda b: b.sort_key)
    cells = sorted(good_domain_h1(stage, limit), key=lambda b: b.sort_key)
    dets = set(h1_inverse_map(stage, limit).determinants()) | \
        set(h2_inverse_map(stage, limit).determinants())
    report = {'stage': stage.n, 'cells': len(cells), 'equal': images == cells,
              'determinants': sorted(dets)}
    report['passed'] = report['equal'] and dets == {Fraction(1)}
    return report


# norms

def shear_bound(beta_slope: Fraction, d: int = 2, beta_sup: Fraction = Fraction(0),
                sigma_slope: Fraction = Fraction(0)) -> Fraction:
    """ Row-sum bound of the Jacobian of a shear Xi

    The sheared row is (1, beta' sigma..., beta sigma' ...), every other
    row a unit vector, so the bound is
    1 + sup|beta'| + (d - 2) sup|beta| sup|sigma'|.
    """
    return 1 + Fraction(beta_slope) + (d - 2) * Fraction(beta_sup) * Fraction(sigma_slope)


def _affine_max(stage: StageParams) -> Fraction:
    """ max of |Dh_n| and |Dh_n^-1| over the affine pieces of the good domains """
    g, nl = Fraction(stage.gamma), Fraction(stage.n * stage.lam)
    if stage.d == 2:
        return Fraction(2)
    return max(1 + 1 / g, nl, g, Fraction(2))


def stage_norm_bound(stage: StageParams) -> NormCertificate:
    """ Bound for max(|Dh_n|, |Dh_n^-1|) of one stage

    The exact maximum over the affine pieces is multiplied by the shear
    bounds of Xi_1 and Xi_2 built from the closed-form slopes of the stage
    bump profile.
    """
    profile = BumpProfile.for_stage(stage.eps, stage.gamma)
    shear = shear_bound(profile.beta_slope_bound, stage.d, profile.beta_sup / stage.lam,
                        profile.sigma_slope_bound)
    return NormCertificate(1, _affine_max(stage) * shear * shear, 'analytic-bound')


def norm_bound_DH(stages: Sequence[Union[StageParams, NormCertificate]],
                  d: int = 2) -> NormCertificate:
    """ Certified upper bound for max(|DH_n|, |DH_n^-1|), H_n = h_1 o ... o h_n

    Parameters
    ----------
    stages : list
        StageParams, or precomputed per-stage NormCertificates (e.g. for an
        identity stage)
    d : int
        the dimension

    Returns
    -------
    NormCertificate
        the product of the per-stage bounds, k = 1
    """
    upper = Fraction(1)
    method = 'exact'
    for item in stages:
        if isinstance(item, StageParams) and item.d != d:
            raise TowerError(f'stage {item.n} has dimension {item.d}, expected {d}')
        cert = item if isinstance(item, NormCertificate) else stage_norm_bound(item)
        if cert.k != 1:
            raise TowerError('norm_bound_DH combines first order certificates only')
        upper *= cert.upper
        if cert.method == 'sampled' or method == 'sampled':
            method = 'sampled'
        elif cert.method != 'exact':
            method = 'analytic-bound'
    return NormCertificate(1, upper, method)


def sampled_norm(stage: StageParams, samples: int = 1000, seed: int = 0) -> NormCertificate:
    """ Finite-difference estimate of |Dh_n| on random points of tilde cells

    Points are drawn in the middle half of random tilde cells and each
    difference step stays inside the cell, so every quotient is exact.
    """
    lam, g, nl = stage.lam, stage.gamma, stage.n * stage.lam
    if lam * g >= 2 ** 62:
        raise TowerError(f'stage {stage.n} is too large to sample')
    rng = np.random.default_rng(seed)
    h = Fraction(1, 64 * lam * nl)
    best = Fraction(0)
    for _ in range(samples):
        I, J = (int(x) for x in rng.integers(0, lam, size=2))
        s = int(rng.integers(1, 3))
        ell = int(rng.integers(0, g))
        cell = tilde_cell(stage, I, J, ell, s)
        frac = [Fraction(int(x), 1024) for x in rng.integers(256, 768, size=stage.d)]
        point = (cell.theta1.lo + cell.theta1.length * frac[0],
                 cell.theta2.lo + cell.theta2.length * frac[1]) + \
            tuple(f.lo + f.length * x for f, x in zip(cell.fiber, frac[2:]))
        base = hn_forward(stage, point)
        columns = []
        for k in range(stage.d):
            moved = tuple(x + h if c == k else x for c, x in enumerate(point))
            image = hn_forward(stage, moved)
            col = [(b - a) / h for a, b in zip(base, image)]
            # torus coordinates are compared across the seam
            col[0] = (mod1(col[0] * h + HALF) - HALF) / h
            col[1] = (mod1(col[1] * h + HALF) - HALF) / h
            columns.append(col)
        rows = [sum(abs(columns[c][r]) for c in range(stage.d)) for r in range(stage.d)]
        best = max(best, max(rows))
    return NormCertificate(1, best, 'sampled', resolution=samples)


def diameter_check(stage: StageParams) -> dict:
    """ Check diam(S~^(s)_{i,j,ell,eps})^2 < (5/4 + (d-2)/n^2) / (q q')^2 exactly """
    lam, e, n, d = stage.lam, stage.eps, stage.n, stage.d
    sides = [(1 - e) / lam, (1 - 2 * e) / (2 * lam)] + [(1 - 2 * e) / (n * lam)] * (d - 2)
    lhs = sum((x * x for x in sides), Fraction(0))
    rhs = (Fraction(5, 4) + Fraction(d - 2, n * n)) / (lam * lam)
    return {'stage': n, 'diameter_squared': lhs, 'bound_squared': rhs, 'passed': lhs < rhs}


def check_equivariance(stage: StageParams, limit: int = 10 ** 4) -> dict:
    """ Check h_n,1 R_{1/q,1/q'} = R h_n,1 and h_n,2 R_{i/qq',j/qq'} = R h_n,2

    Every cell of the good domains is sampled at its centre when the domain
    has at most ``limit`` cells.
    """
    lam = stage.lam
    shift1 = (Fraction(1, stage.q), Fraction(1, stage.q_prime))
    witnesses = []
    checked = 0
    for J1, J2, ell, s in _cells(stage, limit):
        centre = tilde_cell(stage, J1, J2, ell, s)
        p = (centre.theta1.lo + centre.theta1.length / 2,
             centre.theta2.lo + centre.theta2.length / 2) + \
            tuple((f.lo + f.hi) / 2 for f in centre.fiber)
        moved = (p[0] + shift1[0], p[1] + shift1[1]) + p[2:]
        lhs, rhs = h1_forward(stage, moved), h1_forward(stage, p)
        rhs = (mod1(rhs[0] + shift1[0]), mod1(rhs[1] + shift1[1])) + rhs[2:]
        if lhs != rhs:
            witnesses.append({'map': 'h1', 'cell': (J1, J2, ell, s)})
        g = good_cell(stage, J1, J2, ell, s)
        p = (g.theta1.lo + g.theta1.length / 2, g.theta2.lo + g.theta2.length / 2) + \
            tuple((f.lo + f.hi) / 2 for f in g.fiber)
        for di, dj in ((1, 0), (0, 1)):
            moved = (p[0] + Fraction(di, lam), p[1] + Fraction(dj, lam)) + p[2:]
            lhs, rhs = h2_forward(stage, moved), h2_forward(stage, p)
            rhs = (mod1(rhs[0] + Fraction(di, lam)), mod1(rhs[1] + Fraction(dj, lam))) + rhs[2:]
            if lhs != rhs:
                witnesses.append({'map': 'h2', 'cell': (J1, J2, ell, s), 'shift': (di, dj)})
        checked += 1
    log.debug(f'equivariance checked on {checked} cells of stage {stage.n}')
    return {'stage': stage.n, 'cells': checked, 'witnesses': witnesses[:10],
            'passed': not witnesses}
