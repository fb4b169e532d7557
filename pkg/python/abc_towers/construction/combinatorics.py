# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: combinatorics.py
# Project: construction
# Author: The abc-towers developers
# Created: Wednesday, 6th October 2021 11:02:51 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 25th October 2021 10:14:37 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
from dataclasses import dataclass
from fractions import Fraction
from typing import Dict, List, Optional, Tuple

from sympy.ntheory.modular import crt

from abc_towers import log
from abc_towers.exceptions import ConditionViolation, TowerError
from abc_towers.geometry.boxes import Box
from abc_towers.geometry.rational import Interval, mod1


__all__ = ['StageParams', 'derive_stage', 'crt_index', 'CellAssignment', 'rectangles',
           'cell_rectangle', 'verify_combidisj', 'LatticeGroups', 'lattice_groups',
           'verify_coset_partition', 'check_identities']


@dataclass(frozen=True)
class StageParams:
    """ All numbers of one stage of the construction

    Attributes
    ----------
    n : int
        the stage index
    d : int
        the dimension of T^2 x [0,1]^(d-2)
    p, q : int
        alpha_n = p/q, reduced
    p_prime, q_prime : int
        alpha'_n = p'/q', reduced
    q_next : int
        q_{n+1}, a multiple of q q'
    qbar_next : int
        q_{n+1} + q q'
    D : Fraction
        the extra increment of alpha'_{n+1}
    eps : Fraction
        eps_n = 2 / (n q q')
    m : int
        tower height parameter, q_next / (q q') + 1
    r, r_prime : int
        (m - 1) p mod q and (m - 1) p' mod q'
    Delta : Fraction
        1 / qbar_next - (m - 1) D, positive
    l_n : int or None
        the derivative order controlled at this stage
    """
    n: int
    d: int
    p: int
    q: int
    p_prime: int
    q_prime: int
    q_next: int
    qbar_next: int
    D: Fraction
    eps: Fraction
    m: int
    r: int
    r_prime: int
    Delta: Fraction
    l_n: Optional[int] = None

    def __repr__(self):
        return (f'<StageParams(n={self.n}, alpha={self.p}/{self.q}, '
                f'alpha_prime={self.p_prime}/{self.q_prime}, q_next={self.q_next}, m={self.m})>')

    @property
    def lam(self) -> int:
        """ q q', the size of the stage lattice """
        return self.q * self.q_prime

    @property
    def alpha(self) -> Fraction:
        return Fraction(self.p, self.q)

    @property
    def alpha_prime(self) -> Fraction:
        return Fraction(self.p_prime, self.q_prime)

    @property
    def alpha_next(self) -> Fraction:
        return self.alpha + Fraction(1, self.q_next)

    @property
    def alpha_prime_next(self) -> Fraction:
        return self.alpha_prime + Fraction(1, self.qbar_next) + self.D

    @property
    def q_prime_next(self) -> int:
        return self.alpha_prime_next.denominator

    @property
    def gamma(self) -> int:
        """ (n q q')^(d-2), the number of fiber sub-cells folded into theta1 """
        return (self.n * self.lam) ** (self.d - 2)

    @property
    def eps_tilde(self) -> Fraction:
        return self.eps / self.gamma

    @property
    def eps_next(self) -> Fraction:
        return Fraction(2, (self.n + 1) * self.q_next * self.q_prime_next)

    @property
    def step1(self) -> Tuple[Fraction, Fraction]:
        """ (m - 1) (alpha_{n+1}, alpha'_{n+1}) + (0, Delta) mod 1 """
        return (mod1(Fraction(self.r, self.q) + Fraction(1, self.lam)),
                mod1(Fraction(self.r_prime, self.q_prime) + Fraction(1, self.lam)))

    @property
    def step2(self) -> Tuple[Fraction, Fraction]:
        """ m (alpha_{n+1}, alpha'_{n+1}) minus the small drift, mod 1 """
        return (mod1(Fraction(self.r + self.p, self.q) + Fraction(1, self.lam)),
                mod1(Fraction(self.r_prime + self.p_prime, self.q_prime) + Fraction(1, self.lam)))

    def step(self, s: int) -> Tuple[Fraction, Fraction]:
        return self.step1 if s == 1 else self.step2

    def as_dict(self) -> dict:
        return {'n': self.n, 'd': self.d, 'p': self.p, 'q': self.q, 'p_prime': self.p_prime,
                'q_prime': self.q_prime, 'q_next': self.q_next, 'qbar_next': self.qbar_next,
                'D': self.D, 'eps': self.eps, 'm': self.m, 'r': self.r,
                'r_prime': self.r_prime, 'Delta': self.Delta, 'l_n': self.l_n,
                'alpha_next': self.alpha_next, 'alpha_prime_next': self.alpha_prime_next}


def check_identities(stage: StageParams) -> Dict[str, bool]:
    """ Check the four rotation identities modulo 1 as exact equalities

    Returns
    -------
    dict
        label to verdict for a1, a2, a3 and a4
    """
    lam = stage.lam
    a, ap = stage.alpha_next, stage.alpha_prime_next
    m = stage.m
    return {
        'a1': mod1((m - 1) * a) == mod1(Fraction(stage.r, stage.q) + Fraction(1, lam)),
        'a2': mod1((m - 1) * ap) == mod1(Fraction(stage.r_prime, stage.q_prime)
                                         + Fraction(1, lam) - stage.Delta),
        'a3': mod1(m * a) == mod1(Fraction(stage.r + stage.p, stage.q) + Fraction(1, lam)
                                  + Fraction(1, stage.q_next)),
        'a4': mod1(m * ap) == mod1(Fraction(stage.r_prime + stage.p_prime, stage.q_prime)
                                   + Fraction(1, lam) + m * stage.D),
    }


def derive_stage(p: int, q: int, p_prime: int, q_prime: int, q_next: int, D=0, n: int = 1,
                 d: int = 2, l_n: int = None, production: bool = False) -> StageParams:
    """ Derive all stage numbers from the rotation data and q_{n+1}

    Parameters
    ----------
    p, q : int
        alpha_n = p / q, reduced
    p_prime, q_prime : int
        alpha'_n = p' / q', reduced
    q_next : int
        the next denominator q_{n+1}
    D : Fraction
        the extra increment of alpha'_{n+1}, D >= 0
    n : int
        the stage index, by default 1
    d : int
        the dimension, by default 2
    l_n : int, optional
        the derivative order of this stage
    production : bool
        when True require D > 0

    Returns
    -------
    StageParams
        the derived stage

    Raises
    ------
    ConditionViolation
        when (A), (B), reducedness, positivity of Delta or one of the
        identities a1-a4 fails
    """
    D = Fraction(D)
    if d < 2:
        raise TowerError(f'dimension must be at least 2, got {d}')
    if n < 1:
        raise TowerError(f'stage index must be at least 1, got {n}')
    if q < 1 or q_prime < 1:
        raise TowerError(f'denominators must be positive, got {q} and {q_prime}')
    if math.gcd(p, q) != 1 or math.gcd(p_prime, q_prime) != 1:
        raise ConditionViolation('reduced', lhs=Fraction(p, q), rhs=Fraction(p_prime, q_prime),
                                 relation='reduced', stage=n,
                                 message=f'rotation numbers {p}/{q}, {p_prime}/{q_prime} '
                                         f'are not reduced fractions at stage {n}')
    if math.gcd(q, q_prime) != 1:
        raise ConditionViolation('B', lhs=math.gcd(q, q_prime), rhs=1, relation='==', stage=n)

    lam = q * q_prime
    if q_next < lam or q_next % lam != 0:
        raise ConditionViolation('A', lhs=q_next % lam, rhs=0, relation='==', stage=n,
                                 message=f'condition (A) violated at stage {n}: q q\' = {lam} '
                                         f'does not divide q_next = {q_next}')
    if D < 0 or (production and D == 0):
        raise ConditionViolation('D', lhs=Fraction(0), rhs=D, relation='<', stage=n)

    qbar = q_next + lam
    m = q_next // lam + 1
    if qbar != m * lam:
        raise ConditionViolation('C', lhs=qbar, rhs=m * lam, relation='==', stage=n)
    delta = Fraction(1, qbar) - (m - 1) * D
    if delta <= 0:
        raise ConditionViolation('Delta', lhs=Fraction(0), rhs=delta, relation='<', stage=n)

    stage = StageParams(n=n, d=d, p=p, q=q, p_prime=p_prime, q_prime=q_prime, q_next=q_next,
                        qbar_next=qbar, D=D, eps=Fraction(2, n * lam), m=m,
                        r=((m - 1) * p) % q, r_prime=((m - 1) * p_prime) % q_prime,
                        Delta=delta, l_n=l_n)

    for label, ok in check_identities(stage).items():
        if not ok:
            raise ConditionViolation(label, relation='==', stage=n,
                                     message=f'identity ({label}) fails modulo 1 at stage {n}')
    log.debug(f'derived stage {stage}')
    return stage


def crt_index(i: int, j: int, q: int, q_prime: int) -> int:
    """ The unique 0 <= k < q q' with k = i mod q' and k = j mod q

    Parameters
    ----------
    i : int
        residue modulo q', 0 <= i < q'
    j : int
        residue modulo q, 0 <= j < q
    q, q_prime : int
        coprime moduli

    Returns
    -------
    int
        the Chinese remainder index k(i, j)

    Raises
    ------
    ConditionViolation
        when q and q' are not coprime
    """
    if math.gcd(q, q_prime) != 1:
        raise ConditionViolation('B', lhs=math.gcd(q, q_prime), rhs=1, relation='==')
    if not (0 <= i < q_prime and 0 <= j < q):
        raise TowerError(f'indices ({i}, {j}) outside [0, {q_prime}) x [0, {q})')
    if q * q_prime == 1:
        return 0
    k, _ = crt([q_prime, q], [i, j])
    return int(k)


class CellAssignment(object):
    """ The cell bookkeeping k(i, j) and the translation offsets a_{n,s}(i, j)

    Every lookup is computed in closed form, so the assignment is usable for
    stages whose lattice is far too large to tabulate.  The tables k_of and
    a are materialized on first access.

    Parameters
    ----------
    stage : StageParams
        The stage whose lattice is indexed
    """

    def __init__(self, stage: StageParams):
        self.stage = stage
        self._k_of = None
        self._a = None

    def __repr__(self):
        return f'<CellAssignment(q={self.stage.q}, q_prime={self.stage.q_prime})>'

    def k(self, i: int, j: int) -> int:
        return crt_index(i, j, self.stage.q, self.stage.q_prime)

    def ij(self, k: int) -> Tuple[int, int]:
        """ The cell (i, j) of index k """
        return k % self.stage.q_prime, k % self.stage.q

    def offsets(self, i: int, j: int, s: int) -> Tuple[int, int]:
        """ (a_{n,s}(i,j), a'_{n,s}(i,j)) with S^(s)_{k(i,j)} = R_{a/q, a'/q'} S^(s)_{i,j} """
        st = self.stage
        k = self.k(i, j)
        shift1, shift2 = (st.r, st.r_prime) if s == 1 else (st.r + st.p, st.r_prime + st.p_prime)
        a = (k * shift1 + (k - i) // st.q_prime) % st.q
        a_prime = (k * shift2 + (k - j) // st.q) % st.q_prime
        return a, a_prime

    def lattice_indices(self, i: int, j: int, s: int) -> Tuple[int, int]:
        """ (j1, j2) with i/(qq') + a/q = j1/(qq') and j/(qq') + a'/q' = j2/(qq') """
        a, a_prime = self.offsets(i, j, s)
        return i + a * self.stage.q_prime, j + a_prime * self.stage.q

    def _table_guard(self):
        if self.stage.lam > 10 ** 6:
            raise TowerError(f'refusing to tabulate {self.stage.lam} cells')

    @property
    def k_of(self) -> Dict[Tuple[int, int], int]:
        if self._k_of is None:
            self._table_guard()
            self._k_of = {(i, j): self.k(i, j) for i in range(self.stage.q_prime)
                          for j in range(self.stage.q)}
        return self._k_of

    @property
    def a(self) -> Dict[Tuple[int, int, int], Tuple[int, int]]:
        if self._a is None:
            self._table_guard()
            self._a = {(i, j, s): self.offsets(i, j, s) for s in (1, 2)
                       for i in range(self.stage.q_prime) for j in range(self.stage.q)}
        return self._a

    def as_dict(self) -> dict:
        """ JSON-ready tables of k(i, j) and the offsets """
        return {'k_of': [{'i': i, 'j': j, 'k': k} for (i, j), k in sorted(self.k_of.items())],
                'offsets': [{'i': i, 'j': j, 's': s, 'a': a, 'a_prime': ap}
                            for (i, j, s), (a, ap) in sorted(self.a.items())]}


def _fiber(d: int) -> Tuple[Interval, ...]:
    return tuple(Interval(Fraction(0), Fraction(1)) for _ in range(d - 2))


def cell_rectangle(stage: StageParams, i: int, j: int, s: int) -> Box:
    """ S^(s)_{i,j}: the upper (s=1) or lower (s=2) half of lattice cell (i, j) """
    lam = stage.lam
    half = Fraction(2 - s, 2)
    return Box.from_bounds(Fraction(i, lam), Fraction(i + 1, lam),
                           (j + half) / lam, (j + half + Fraction(1, 2)) / lam, _fiber(stage.d))


def rectangles(stage: StageParams, s: int) -> List[Box]:
    """ The q q' iterates S^(s)_k of S^(s)_{0,0}

    Each iterate is compared against the translate of S^(s)_{i,j}
    predicted by the Chinese remainder index and the offsets a_{n,s}.

    Parameters
    ----------
    stage : StageParams
        The stage
    s : int
        1 for the upper family, 2 for the lower family

    Returns
    -------
    list of Box
        S^(s)_k for k = 0, ..., q q' - 1

    Raises
    ------
    ConditionViolation
        when an iterate differs from its predicted translate
    """
    if s not in (1, 2):
        raise TowerError(f'rectangle family must be 1 or 2, not {s}')
    assignment = CellAssignment(stage)
    step = stage.step(s)
    base = cell_rectangle(stage, 0, 0, s)
    boxes = []
    for k in range(stage.lam):
        box = base.rotate(step[0], step[1], k)
        i, j = assignment.ij(k)
        a, a_prime = assignment.offsets(i, j, s)
        predicted = cell_rectangle(stage, i, j, s).translate(Fraction(a, stage.q),
                                                               Fraction(a_prime, stage.q_prime))
        if box != predicted:
            raise ConditionViolation('combidisj', relation='==', stage=stage.n,
                                     message=f'S^({s})_{k} differs from the translate of '
                                             f'S^({s})_({i},{j})')
        boxes.append(box)
    return boxes


def verify_combidisj(stage: StageParams, limit: int = 10 ** 5) -> dict:
    """ Check that the iterates S^(s)_k hit every cell mod (1/q, 1/q') once

    For stages with at most ``limit`` cells the positions of all iterates
    modulo (1/q, 1/q') are compared exhaustively with the cell grid.  Larger
    stages are settled by the residues of the generating step, which are
    1 mod q' and 1 mod q exactly when the position map is a bijection.

    Parameters
    ----------
    stage : StageParams
        The stage to check
    limit : int
        Largest lattice size checked exhaustively

    Returns
    -------
    dict
        report with keys passed, mode, families and identities
    """
    lam, q, qp = stage.lam, stage.q, stage.q_prime
    identities = check_identities(stage)
    report = {'stage': stage.n, 'q': q, 'q_prime': qp, 'identities': identities,
              'families': {}}

    if lam > limit:
        report['mode'] = 'analytic'
        for s in (1, 2):
            g1 = stage.step(s)[0] * lam
            g2 = stage.step(s)[1] * lam
            ok = g1.denominator == 1 and g2.denominator == 1 and \
                int(g1) % qp == 1 % qp and int(g2) % q == 1 % q
            report['families'][s] = {'passed': ok, 'cells': lam, 'witnesses': []}
    else:
        report['mode'] = 'exhaustive'
        for s in (1, 2):
            expected = {(Fraction(i, lam), (j + Fraction(2 - s, 2)) / lam): (i, j)
                        for i in range(qp) for j in range(q)}
            seen = {}
            witnesses = []
            for k, box in enumerate(rectangles(stage, s)):
                pos = (box.theta1.lo % Fraction(1, q), box.theta2.lo % Fraction(1, qp))
                if pos not in expected:
                    witnesses.append({'k': k, 'reason': 'off-grid', 'position': pos})
                elif pos in seen:
                    witnesses.append({'k': k, 'reason': 'repeated', 'other': seen[pos]})
                else:
                    seen[pos] = k
            if len(seen) != len(expected) and not witnesses:
                witnesses.append({'reason': 'missing', 'count': len(expected) - len(seen)})
            report['families'][s] = {'passed': not witnesses, 'cells': lam,
                                     'witnesses': witnesses}

    report['passed'] = all(identities.values()) and \
        all(f['passed'] for f in report['families'].values())
    log.info(f'stage {stage.n} cell bijectivity ({report["mode"]}): '
             f'{"pass" if report["passed"] else "FAIL"}')
    return report


@dataclass(frozen=True)
class LatticeGroups:
    """ The lattice Lambda_n and the cyclic subgroups Gamma^(s)_n

    Elements are integer pairs (t1, t2) standing for (t1/(qq'), t2/(qq')).
    """
    lam: int
    gamma1: Tuple[Tuple[int, int], ...]
    gamma2: Tuple[Tuple[int, int], ...]

    @property
    def lambda_size(self) -> int:
        return self.lam ** 2

    def gamma(self, s: int) -> Tuple[Tuple[int, int], ...]:
        return self.gamma1 if s == 1 else self.gamma2


def lattice_groups(stage: StageParams) -> LatticeGroups:
    """ Enumerate Gamma^(1)_n and Gamma^(2)_n from their generating steps """
    lam = stage.lam
    groups = []
    for s in (1, 2):
        g1, g2 = (int(x * lam) for x in stage.step(s))
        groups.append(tuple(((k * g1) % lam, (k * g2) % lam) for k in range(lam)))
    return LatticeGroups(lam, groups[0], groups[1])


def verify_coset_partition(groups: LatticeGroups, q: int, q_prime: int) -> Dict[int, bool]:
    """ Check that the cosets Gamma^(s) + (i1/q, i2/q') partition Lambda_n """
    lam = groups.lam
    result = {}
    for s in (1, 2):
        gamma = groups.gamma(s)
        if len(set(gamma)) != lam:
            result[s] = False
            continue
        hits = bytearray(lam * lam)
        ok = True
        for i1 in range(q):
            for i2 in range(q_prime):
                for t1, t2 in gamma:
                    cell = ((t1 + i1 * q_prime) % lam) * lam + (t2 + i2 * q) % lam
                    if hits[cell]:
                        ok = False
                        break
                    hits[cell] = 1
                if not ok:
                    break
            if not ok:
                break
        result[s] = ok and all(hits)
    return result
