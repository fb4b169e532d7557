# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: bumps.py
# Project: construction
# Author: The abc-towers developers
# Created: Friday, 8th October 2021 10:33:05 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Tuesday, 26th October 2021 3:58:30 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Callable, Dict, List, Union

import mpmath
import sympy

from abc_towers import log
from abc_towers.exceptions import TowerError


__all__ = ['SMOOTHSTEP', 'SMOOTHSTEP_SLOPE', 'smoothstep', 'smoothstep_prime', 'as_mpf',
           'BumpProfile', 'bump_audit']


_t = sympy.Symbol('t', positive=True)


def _flat(u):
    return sympy.exp(-1 / u)


# the C-infinity transition from 0 on t <= 0 to 1 on t >= 1
SMOOTHSTEP = _flat(_t) / (_flat(_t) + _flat(1 - _t))

# sup |S'| on (0, 1), attained at t = 1/2
SMOOTHSTEP_SLOPE = 2

_step = sympy.lambdify(_t, SMOOTHSTEP, 'mpmath')
_step_prime = sympy.lambdify(_t, sympy.diff(SMOOTHSTEP, _t), 'mpmath')

Number = Union[Fraction, int, float, mpmath.mpf]


def smoothstep(t: Number):
    """ S(t), exactly 0 for t <= 0 and exactly 1 for t >= 1 """
    if t <= 0:
        return Fraction(0)
    if t >= 1:
        return Fraction(1)
    return _step(mpmath.mpf(t.numerator) / t.denominator if isinstance(t, Fraction) else t)


def smoothstep_prime(t: Number):
    if t <= 0 or t >= 1:
        return Fraction(0)
    return _step_prime(mpmath.mpf(t.numerator) / t.denominator
                       if isinstance(t, Fraction) else t)


def _mp(x: Number):
    if isinstance(x, Fraction):
        return mpmath.mpf(x.numerator) / x.denominator
    return mpmath.mpf(x)


def as_mpf(x: Number) -> mpmath.mpf:
    """ Convert a Fraction, int or mpmath number to an mpmath mpf """
    return _mp(x)


def _S(t):
    """ smoothstep as an mpmath number, for products with mpmath values """
    return _mp(smoothstep(t))


def _dS(t):
    return _mp(smoothstep_prime(t))


def _like(x: Number) -> Callable:
    """ Converter bringing thresholds to the number type of x """
    if isinstance(x, (Fraction, int)):
        return Fraction
    return _mp


@dataclass(frozen=True)
class BumpProfile:
    """ The bump functions sigma_delta and beta~_rho of the shear maps

    sigma_delta rises from 0 at delta/2 to 1 at delta, stays 1 up to
    1 - delta and falls back to 0 at 1 - delta/2.  beta~_rho is 0 up to 1/2,
    blends into the segment x - 1/2 on [1/2, (1+rho)/2] as S(t) (x - 1/2),
    follows the segment up to 1 - rho/2 and is cut back to 0 at 1 - rho/4
    as (1 - S(t)) (x - 1/2).  Plateau values of rational arguments are
    returned as exact Fractions, everything else as mpmath numbers.

    Attributes
    ----------
    rho : Fraction
        the beta~ parameter, 0 < rho < 1
    delta : Fraction
        the sigma parameter, 0 < delta < 1/2
    """
    rho: Fraction
    delta: Fraction

    def __post_init__(self):
        object.__setattr__(self, 'rho', Fraction(self.rho))
        object.__setattr__(self, 'delta', Fraction(self.delta))
        if not 0 < self.rho < 1:
            raise TowerError(f'bump parameter rho={self.rho} outside (0, 1)')
        if not 0 < self.delta < Fraction(1, 2):
            raise TowerError(f'bump parameter delta={self.delta} outside (0, 1/2)')

    @classmethod
    def for_stage(cls, eps: Fraction, gamma: int = 1) -> 'BumpProfile':
        """ The profile used at a stage: rho = eps / gamma, delta = eps """
        return cls(rho=Fraction(eps) / gamma, delta=Fraction(eps))

    def sigma(self, x: Number):
        c = _like(x)
        d = self.delta
        if x <= c(d / 2) or x >= c(1 - d / 2):
            return Fraction(0)
        if c(d) <= x <= c(1 - d):
            return Fraction(1)
        scale = 2 / _mp(d)
        if x < c(d):
            return _S((_mp(x) - _mp(d / 2)) * scale)
        return _S((_mp(1 - d / 2) - _mp(x)) * scale)

    def sigma_prime(self, x: Number):
        c = _like(x)
        d = self.delta
        if x <= c(d / 2) or x >= c(1 - d / 2) or c(d) <= x <= c(1 - d):
            return Fraction(0)
        scale = 2 / _mp(d)
        if x < c(d):
            return scale * _dS((_mp(x) - _mp(d / 2)) * scale)
        return -scale * _dS((_mp(1 - d / 2) - _mp(x)) * scale)

    def beta_tilde(self, x: Number):
        """ beta~_rho on [0, 1] """
        c = _like(x)
        r = self.rho
        if x <= c(Fraction(1, 2)) or x >= c(1 - r / 4):
            return Fraction(0)
        if c((1 + r) / 2) <= x <= c(1 - r / 2):
            return x - c(Fraction(1, 2))
        xm, half = _mp(x), mpmath.mpf(1) / 2
        if x < c((1 + r) / 2):
            return _S((xm - half) / _mp(r / 2)) * (xm - half)
        return (1 - _S((xm - _mp(1 - r / 2)) / _mp(r / 4))) * (xm - half)

    def beta_tilde_prime(self, x: Number):
        c = _like(x)
        r = self.rho
        if x <= c(Fraction(1, 2)) or x >= c(1 - r / 4):
            return Fraction(0)
        if c((1 + r) / 2) <= x <= c(1 - r / 2):
            return Fraction(1)
        xm, half = _mp(x), mpmath.mpf(1) / 2
        if x < c((1 + r) / 2):
            t = (xm - half) / _mp(r / 2)
            return _dS(t) * t + _S(t)
        t = (xm - _mp(1 - r / 2)) / _mp(r / 4)
        return -_dS(t) * (xm - half) / _mp(r / 4) + (1 - _S(t))

    def beta_deficit(self, x: Number):
        """ (x - 1/2) - beta~_rho(x) on the cut-off interval [1 - rho/2, 1 - rho/4] """
        r = self.rho
        if not (1 - r / 2 <= x <= 1 - r / 4):
            raise TowerError(f'{x} outside the cut-off interval of beta~')
        if x == 1 - r / 2:
            return Fraction(0)
        t = (_mp(x) - _mp(1 - r / 2)) / _mp(r / 4)
        return _S(t) * _mp(x - Fraction(1, 2))

    @property
    def beta_slope_bound(self) -> Fraction:
        """ Closed-form bound sup |beta~'_rho| <= 4/rho - 1 """
        return 4 / self.rho - 1

    @property
    def sigma_slope_bound(self) -> Fraction:
        """ Closed-form bound sup |sigma'_delta| <= 4/delta """
        return SMOOTHSTEP_SLOPE * 2 / self.delta

    @property
    def beta_sup(self) -> Fraction:
        """ sup beta~_rho = (1 - rho)/2, reached at the end of the segment """
        return (1 - self.rho) / 2

    def beta_scaled(self, lam: int) -> Callable:
        """ beta_{lambda,gamma,eps}(x) = beta~(lambda x mod 1) / lambda """
        def _beta(x):
            y = x * lam
            return self.beta_tilde(y - math.floor(y)) / lam
        return _beta


def _points(lo: Fraction, hi: Fraction, grid: int, open_lo: bool = False) -> List[Fraction]:
    start = 1 if open_lo else 0
    return [lo + (hi - lo) * Fraction(k, grid) for k in range(start, grid + 1)]


def _run(check: Callable, points: List[Fraction], limit: int = 5) -> dict:
    bad = [x for x in points if not check(x)]
    return {'passed': not bad, 'checked': len(points), 'violations': bad[:limit]}


def bump_audit(profile: BumpProfile, grid: int = 1000) -> dict:
    """ Audit the defining constraints of sigma_delta and beta~_rho

    Each constraint is evaluated on ``grid`` + 1 rational points of the
    interval it concerns; plateau values are compared exactly.  The slope
    bounds used by the norm certificates are checked on the same points and
    the smooth transition is checked symbolically at its joins.

    Parameters
    ----------
    profile : BumpProfile
        The bump functions to audit
    grid : int
        Number of subintervals per constraint, at least 1000

    Returns
    -------
    dict
        report with per-check verdicts and violations and the overall verdict
    """
    if grid < 1000:
        raise TowerError(f'bump audit grid must be at least 1000, not {grid}')
    r, d = profile.rho, profile.delta
    half = Fraction(1, 2)
    b, s = profile.beta_tilde, profile.sigma
    tol = mpmath.mpf(10) ** (-(mpmath.mp.dps - 3))

    def bt(x):
        return _mp(b(x))

    def slope_ok(value, bound):
        return abs(_mp(value)) <= _mp(bound) + tol

    checks: Dict[str, dict] = {
        'sigma_zero_left': _run(lambda x: s(x) == 0, _points(Fraction(0), d / 2, grid)),
        'sigma_one': _run(lambda x: s(x) == 1, _points(d, 1 - d, grid)),
        'sigma_zero_right': _run(lambda x: s(x) == 0, _points(1 - d / 2, Fraction(1), grid)),
        'sigma_range': _run(lambda x: 0 <= _mp(s(x)) <= 1,
                            _points(Fraction(0), Fraction(1), grid)),
        'beta_zero_left': _run(lambda x: b(x) == 0, _points(Fraction(0), half, grid)),
        'beta_segment': _run(lambda x: b(x) == x - half, _points((1 + r) / 2, 1 - r / 2, grid)),
        'beta_zero_right': _run(lambda x: b(x) == 0, _points(1 - r / 4, Fraction(1), grid)),
        'beta_monotone': _run(lambda x: _mp(profile.beta_tilde_prime(x)) >= -tol,
                              _points(half, (1 + r) / 2, grid)),
        'beta_below_segment': _run(lambda x: _mp(profile.beta_deficit(x)) > 0,
                                   _points(1 - r / 2, 1 - r / 4, grid, open_lo=True)),
        'beta_overshoot': _run(lambda x: bt((2 + r) / 4 + x) > _mp(x),
                               _points(Fraction(0), r / 4, grid)),
        'beta_range': _run(lambda x: 0 <= bt(x) < _mp((2 - r) / 4),
                           _points(Fraction(0), Fraction(1), grid)),
        'beta_slope_bound': _run(lambda x: slope_ok(profile.beta_tilde_prime(x),
                                                    profile.beta_slope_bound),
                                 _points(half, 1 - r / 4, grid)),
        'sigma_slope_bound': _run(lambda x: slope_ok(profile.sigma_prime(x),
                                                     profile.sigma_slope_bound),
                                  _points(d / 2, d, grid) + _points(1 - d, 1 - d / 2, grid)),
    }

    dS = sympy.diff(SMOOTHSTEP, _t)
    symbolic = {
        'limit_at_0': sympy.limit(SMOOTHSTEP, _t, 0, '+') == 0,
        'limit_at_1': sympy.limit(SMOOTHSTEP, _t, 1, '-') == 1,
        'midpoint': sympy.simplify(SMOOTHSTEP.subs(_t, sympy.Rational(1, 2)))
        == sympy.Rational(1, 2),
        'midpoint_slope': sympy.simplify(dS.subs(_t, sympy.Rational(1, 2))) == SMOOTHSTEP_SLOPE,
    }
    passed = all(c['passed'] for c in checks.values()) and all(symbolic.values())
    if not passed:
        failed = [k for k, c in checks.items() if not c['passed']] + \
            [k for k, v in symbolic.items() if not v]
        log.warning(f'bump audit failed for rho={r}, delta={d}: {", ".join(failed)}')
    return {'rho': r, 'delta': d, 'grid': grid, 'checks': checks,
            'symbolic': {k: bool(v) for k, v in symbolic.items()}, 'passed': passed}
