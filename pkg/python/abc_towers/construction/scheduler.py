# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: scheduler.py
# Project: construction
# Author: The abc-towers developers
# Created: Thursday, 7th October 2021 2:40:19 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Wednesday, 27th October 2021 5:12:48 pm
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
import operator
from dataclasses import dataclass, field
from fractions import Fraction
from typing import Callable, List, Optional, Tuple

from abc_towers import log
from abc_towers.construction.combinatorics import StageParams, derive_stage
from abc_towers.exceptions import ConditionViolation, NoAdmissibleStage, TowerError
from abc_towers.geometry.rational import CircleValue, ceil_sqrt_ratio


__all__ = ['CertEntry', 'Ladder', 'constant_C', 'l_policy', 'choose_D', 'next_stage',
           'build_ladder', 'check_rotation_distance']


_RELATIONS = {'<': operator.lt, '<=': operator.le, '==': operator.eq, '>': operator.gt,
              '>=': operator.ge}

StageVerifier = Callable[[StageParams], bool]


@dataclass(frozen=True)
class CertEntry:
    """ One checked inequality of the parameter ladder, both sides exact """
    stage: int
    condition: str
    lhs: object
    rhs: object
    relation: str = '<'
    enforced: bool = True
    note: str = ''

    def recheck(self) -> bool:
        return _RELATIONS[self.relation](self.lhs, self.rhs)

    @property
    def holds(self) -> bool:
        return self.recheck()

    def as_dict(self) -> dict:
        return {'stage': self.stage, 'condition': self.condition, 'lhs': self.lhs,
                'rhs': self.rhs, 'relation': self.relation, 'holds': self.holds,
                'enforced': self.enforced, 'note': self.note}


@dataclass
class Ladder:
    """ The certified sequence of stages of the construction

    Attributes
    ----------
    seed : tuple
        (p1, q1, p1', q1')
    target : tuple of Fraction
        the rotation (A, B) approximated by the seed
    eps_global : Fraction
        the global closeness budget
    d : int
        the dimension
    enforce_convergence : bool
        strict mode, where (G) and the closeness bound drive q_{n+1}
    l_seq : list of int
        the derivative orders l_n chosen so far
    stages : list of StageParams
        the committed stages
    cert : list of CertEntry
        every checked inequality
    norm_bounds : list of Fraction
        the norm bound used for each committed stage
    """
    seed: Tuple[int, int, int, int]
    target: Tuple[Fraction, Fraction]
    eps_global: Fraction
    d: int = 2
    enforce_convergence: bool = False
    l_seq: List[int] = field(default_factory=list)
    stages: List[StageParams] = field(default_factory=list)
    cert: List[CertEntry] = field(default_factory=list)
    norm_bounds: List[Fraction] = field(default_factory=list)
    explicit_l: Optional[List[int]] = None

    def __repr__(self):
        return (f'<Ladder(seed={self.seed}, stages={len(self.stages)}, '
                f'strict={self.enforce_convergence})>')

    @property
    def n(self) -> int:
        """ The index of the next stage to construct """
        return len(self.stages) + 1

    def current_rotation(self) -> Tuple[int, int, int, int]:
        """ (p_n, q_n, p'_n, q'_n) of the next stage to construct """
        if not self.stages:
            return self.seed
        last = self.stages[-1]
        a, ap = last.alpha_next, last.alpha_prime_next
        return a.numerator, a.denominator, ap.numerator, ap.denominator

    def eps(self, n: int) -> Fraction:
        """ eps_n = 2 / (n q_n q'_n) for a committed or pending stage n """
        if n <= len(self.stages):
            return self.stages[n - 1].eps
        _, q, _, qp = self.current_rotation()
        return Fraction(2, n * q * qp)

    def audit(self) -> List[CertEntry]:
        """ Re-check every enforced certificate entry, returning the failures """
        return [c for c in self.cert if c.enforced and not c.recheck()]

    def as_dict(self) -> dict:
        return {'seed': {'p': self.seed[0], 'q': self.seed[1], 'p_prime': self.seed[2],
                         'q_prime': self.seed[3]},
                'target': list(self.target), 'eps_global': self.eps_global, 'd': self.d,
                'enforce_convergence': self.enforce_convergence, 'l_seq': list(self.l_seq),
                'stages': [s.as_dict() for s in self.stages],
                'norm_bounds': list(self.norm_bounds),
                'cert': [c.as_dict() for c in self.cert]}


def constant_C(k: int, d: int) -> int:
    """ (d + k - 1)! / (d - 1)!, with C_0 = 1 """
    if k < 0 or d < 2:
        raise TowerError(f'constant_C needs k >= 0 and d >= 2, got k={k}, d={d}')
    return math.factorial(d + k - 1) // math.factorial(d - 1)


def l_policy(n: int, eps_global: Fraction, eps_prev: Fraction = None,
             l_prev: int = None) -> int:
    """ The default derivative order l_n

    l_1 = ceil(8 / eps_global) and for n > 1
    l_n = max(n^2, ceil(2^(n+2) / eps_global), ceil(4 / eps_{n-1}), l_{n-1} + 1).
    """
    if n == 1:
        return math.ceil(Fraction(8) / eps_global)
    if eps_prev is None or l_prev is None:
        raise TowerError('l_n for n > 1 needs eps_{n-1} and l_{n-1}')
    return max(n * n, math.ceil(Fraction(2 ** (n + 2)) / eps_global),
               math.ceil(Fraction(4) / eps_prev), l_prev + 1)


def choose_D(alpha_prime: Fraction, qbar: int, q_next: int, n: int,
             d: int) -> Tuple[Fraction, Fraction, int]:
    """ Choose alpha'_{n+1} = P/N just above alpha'_n + 1/qbar

    N = M qbar^(d+1) + 1 for the smallest M > 4n with gcd(N, q_{n+1}) = 1
    and P = floor((alpha'_n + 1/qbar) N) + 1 coprime to N.

    Returns
    -------
    tuple
        (D_n, alpha'_{n+1}, M)
    """
    base = alpha_prime + Fraction(1, qbar)
    power = qbar ** (d + 1)
    M = 4 * n + 1
    while True:
        N = M * power + 1
        if math.gcd(N, q_next) == 1:
            P = (base.numerator * N) // base.denominator + 1
            if math.gcd(P, N) == 1 and P < N:
                return Fraction(P, N) - base, Fraction(P, N), M
        M += 1


def _strict_floor(ladder: Ladder, lam: int, n: int, l_n: int, norm_bound: Fraction,
                  dh_bound: Optional[Fraction]) -> int:
    """ Smallest q_{n+1} allowed by the closeness bound and (G) """
    close = 8 * l_n * constant_C(l_n, ladder.d) * lam * Fraction(norm_bound)
    floor_q = math.ceil(close)
    if dh_bound is not None:
        # q^2 > 4 d (n+1)^4 B^2
        rhs = 4 * ladder.d * (n + 1) ** 4 * Fraction(dh_bound) ** 2
        floor_q = max(floor_q, ceil_sqrt_ratio(rhs) + 1)
    return floor_q


def _stage_cert(ladder: Ladder, stage: StageParams, norm_bound: Fraction,
                dh_bound: Optional[Fraction]) -> List[CertEntry]:
    n, d, lam = stage.n, stage.d, stage.lam
    qbar, qn = stage.qbar_next, stage.q_next
    qpn = stage.q_prime_next
    strict = ladder.enforce_convergence
    a, ap = stage.alpha_next, stage.alpha_prime_next
    entries = [
        CertEntry(n, 'A', qn % lam, 0, '=='),
        CertEntry(n, 'B', math.gcd(stage.q, stage.q_prime), 1, '=='),
        CertEntry(n, 'C', qbar, qn + lam, '=='),
        CertEntry(n, 'D', Fraction(0), stage.D),
        CertEntry(n, 'D', stage.D, Fraction(1, 4 * n * qbar ** (d + 1))),
        CertEntry(n, 'E', 4 * n ** (d - 1) * lam ** (d + 1), qn),
        CertEntry(n, 'E', qn, qbar),
        CertEntry(n, 'E', qbar, qpn),
        CertEntry(n, 'F', 4 * qbar, qpn),
        CertEntry(n, 'reduced', math.gcd(a.numerator, a.denominator), 1, '==',
                  note='gcd(p_{n+1}, q_{n+1})'),
        CertEntry(n, 'reduced', a.denominator, qn, '==', note='denominator of alpha_{n+1}'),
        CertEntry(n, 'reduced', math.gcd(ap.numerator, ap.denominator), 1, '==',
                  note="gcd(p'_{n+1}, q'_{n+1})"),
        CertEntry(n, 'coprime', math.gcd(qpn, qn), 1, '==', note="gcd(q'_{n+1}, q_{n+1})"),
        CertEntry(n, 'Delta', Fraction(0), stage.Delta),
        CertEntry(n, 'increment', -stage.eps / (8 * stage.m * lam),
                  lam * (Fraction(1, qbar) + stage.D - Fraction(1, qn))),
        CertEntry(n, 'increment', lam * (Fraction(1, qbar) + stage.D - Fraction(1, qn)),
                  Fraction(0)),
        CertEntry(n, 'mD', stage.m ** 2 * stage.D, stage.eps / (2 * qbar)),
    ]

    l_n = stage.l_n
    C = constant_C(l_n, d)
    entries.append(CertEntry(n, 'closeness', Fraction(1, qn),
                             Fraction(1, 8 * l_n * C * lam) / Fraction(norm_bound), '<=',
                             enforced=strict,
                             note='' if strict else 'not enforced in desk mode'))
    if dh_bound is not None:
        entries.append(CertEntry(n, 'G', 4 * d * (n + 1) ** 4 * Fraction(dh_bound) ** 2,
                                 Fraction(qn) ** 2, enforced=strict,
                                 note='squared form' if strict else 'not enforced in desk mode'))
    return entries


def _tail_cert(ladder: Ladder) -> List[CertEntry]:
    """ Summability of 1/l_n against eps_global and the eps_n tails """
    entries = []
    ls = ladder.l_seq
    total = sum((Fraction(1, l) for l in ls), Fraction(0))
    if ladder.explicit_l is None:
        # policy values satisfy 1/l_n <= eps_global / 2^(n+2) and, for the
        # continuation, 1/l_{i} <= eps_{i-1}/4 with eps_i <= eps_{i-1}/2
        entries.append(CertEntry(0, 'lsum', total + Fraction(ladder.eps_global,
                                                             2 ** (len(ls) + 2)),
                                 ladder.eps_global, note='with geometric continuation'))
        for n in range(1, len(ladder.stages) + 1):
            tail = sum((Fraction(1, l) for l in ls[n:]), Fraction(0))
            eps_last = ladder.eps(len(ls))
            entries.append(CertEntry(n, 'ltail', tail + eps_last / 2, ladder.eps(n),
                                     note='with geometric continuation'))
            if n > 1:
                entries.append(CertEntry(n, 'eps_decay', ladder.eps(n),
                                         ladder.eps(n - 1) / 2, '<='))
    else:
        entries.append(CertEntry(0, 'lsum', total, ladder.eps_global))
        for n in range(1, len(ladder.stages) + 1):
            tail = sum((Fraction(1, l) for l in ls[n:]), Fraction(0))
            entries.append(CertEntry(n, 'ltail', tail, ladder.eps(n),
                                     note='finite explicit sequence'))
    return entries


def _next_l(ladder: Ladder) -> int:
    n = ladder.n
    if ladder.explicit_l is not None:
        if n > len(ladder.explicit_l):
            raise TowerError(f'explicit l_seq has no entry for stage {n}')
        return ladder.explicit_l[n - 1]
    if n == 1:
        return l_policy(1, ladder.eps_global)
    return l_policy(n, ladder.eps_global, ladder.eps(n - 1), ladder.l_seq[-1])


def next_stage(ladder: Ladder, norm_bound=1, dh_bound=None, verifier: StageVerifier = None,
               k_ceiling: int = 10 ** 6) -> StageParams:
    """ Choose and commit the parameters of the next stage

    q_{n+1} = k_n q_n q'_n is the smallest multiple satisfying (E) with
    alpha_{n+1} = alpha_n + 1/q_{n+1} of reduced denominator q_{n+1}; in
    strict mode also the closeness bound against ``norm_bound`` and (G)
    against ``dh_bound``.  alpha'_{n+1} is chosen by `choose_D`.  When a
    ``verifier`` is given the candidate is proposed to it and k_n is bumped
    until it accepts.

    Parameters
    ----------
    ladder : Ladder
        The ladder to extend
    norm_bound : Fraction
        Upper bound for the conjugation norm of order l_n + 1
    dh_bound : Fraction, optional
        Upper bound for max(|DH_n|, |DH_n^-1|), used by (G)
    verifier : callable, optional
        Called with each proposed StageParams, returns True to commit
    k_ceiling : int
        Largest number of candidates k_n examined beyond the minimal one

    Returns
    -------
    StageParams
        the committed stage

    Raises
    ------
    NoAdmissibleStage
        when no candidate is accepted within k_ceiling steps
    """
    n, d = ladder.n, ladder.d
    p, q, pp, qp = ladder.current_rotation()
    lam = q * qp
    l_n = _next_l(ladder)

    # (E): q_{n+1} > 4 n^(d-1) (q q')^(d+1)
    k_min = 4 * n ** (d - 1) * lam ** d + 1
    if ladder.enforce_convergence:
        floor_q = _strict_floor(ladder, lam, n, l_n, norm_bound, dh_bound)
        k_min = max(k_min, -(-floor_q // lam))

    for k in range(k_min, k_min + k_ceiling):
        q_next = k * lam
        if math.gcd(p * k * qp + 1, q_next) != 1:
            continue
        qbar = q_next + lam
        D, _, M = choose_D(Fraction(pp, qp), qbar, q_next, n, d)
        stage = derive_stage(p, q, pp, qp, q_next, D, n=n, d=d, l_n=l_n, production=True)
        if verifier is not None and not verifier(stage):
            log.info(f'stage {n}: candidate k={k} rejected by verifier, bumping k')
            continue
        log.debug(f'stage {n}: k_n={k}, M={M}')
        break
    else:
        raise NoAdmissibleStage(f'no admissible q_{n + 1} among {k_ceiling} multiples of '
                                f'{lam} starting at k={k_min}')

    ladder.stages.append(stage)
    ladder.l_seq.append(l_n)
    ladder.norm_bounds.append(Fraction(norm_bound))
    entries = _stage_cert(ladder, stage, norm_bound, dh_bound)
    ladder.cert.extend(entries)
    failed = [c for c in entries if c.enforced and not c.holds]
    if failed:
        c = failed[0]
        raise ConditionViolation(c.condition, c.lhs, c.rhs, c.relation, stage=n)
    log.info(f'committed stage {n}: q_{n + 1}={stage.q_next}, '
             f"q'_{n + 1} has {len(str(stage.q_prime_next))} digits")
    return stage


def build_ladder(seed: Tuple[int, int, int, int], n_max: int, eps_global=Fraction(1, 10),
                 d: int = 2, target=None, enforce_convergence: bool = False,
                 l_seq: List[int] = None, verifier: StageVerifier = None,
                 k_ceiling: int = 10 ** 6) -> Ladder:
    """ Build and certify a ladder of n_max stages from the seed rotation

    In strict mode the per-stage bound on |DH_n| is taken from
    `~abc_towers.construction.conjugations.norm_bound_DH` and its
    (l_n + 1)-th power stands in for the higher-order conjugation norm.

    Parameters
    ----------
    seed : tuple
        (p1, q1, p1', q1')
    n_max : int
        the number of stages to construct
    eps_global : Fraction
        the global closeness budget
    d : int
        the dimension
    target : tuple, optional
        the rotation (A, B) to approximate, by default the seed itself
    enforce_convergence : bool
        strict mode when True
    l_seq : list of int, optional
        explicit derivative orders; checked against the tail conditions
    verifier : callable, optional
        stage verifier passed to `next_stage`
    k_ceiling : int
        search ceiling per stage

    Returns
    -------
    Ladder
        the certified ladder

    Raises
    ------
    ConditionViolation
        when an enforced inequality fails, including the l_n tail conditions
    """
    from abc_towers.construction.conjugations import norm_bound_DH

    p, q, pp, qp = seed
    if math.gcd(q, qp) != 1:
        raise ConditionViolation('B', lhs=math.gcd(q, qp), rhs=1, relation='==', stage=1)
    eps_global = Fraction(eps_global)
    if target is None:
        target = (Fraction(p, q), Fraction(pp, qp))
    ladder = Ladder(seed=tuple(seed), target=tuple(Fraction(t) for t in target),
                    eps_global=eps_global, d=d, enforce_convergence=enforce_convergence,
                    explicit_l=list(l_seq) if l_seq is not None else None)

    for _ in range(n_max):
        norm_bound, dh_bound = Fraction(1), None
        if enforce_convergence:
            l_n = _next_l(ladder)
            dh_bound = norm_bound_DH(ladder.stages, d=d).upper if ladder.stages else Fraction(1)
            norm_bound = dh_bound ** (l_n + 1)
        next_stage(ladder, norm_bound=norm_bound, dh_bound=dh_bound, verifier=verifier,
                   k_ceiling=k_ceiling)

    tails = _tail_cert(ladder)
    ladder.cert.extend(tails)
    failed = [c for c in tails if not c.holds]
    if failed:
        c = failed[0]
        raise ConditionViolation('convgen', c.lhs, c.rhs, c.relation, stage=c.stage,
                                 message=f'l_n summability ({c.condition}) fails at stage '
                                         f'{c.stage}: {c.lhs} {c.relation} {c.rhs} does not hold')
    return ladder


def check_rotation_distance(ladder: Ladder) -> dict:
    """ Check the closeness of the seed to the target and the stage increments

    Returns
    -------
    dict
        report with the seed distance, per-stage increments, their exact
        telescoped sum, the bound 4 eps_global and the verdict
    """
    if not ladder.stages:
        raise TowerError('cannot check an empty ladder')
    A, B = ladder.target
    first = ladder.stages[0]
    seed_dist = max(CircleValue(A).distance(first.alpha),
                    CircleValue(B).distance(first.alpha_prime))
    rows = []
    witnesses = []
    telescoped = Fraction(0)
    for stage, l_n, norm in zip(ladder.stages, ladder.l_seq, ladder.norm_bounds):
        inc = max(Fraction(1, stage.q_next), Fraction(1, stage.qbar_next) + stage.D)
        bound = Fraction(1, 8 * l_n * constant_C(l_n, ladder.d) * stage.lam) / norm
        ok = inc <= bound
        telescoped += inc
        rows.append({'stage': stage.n, 'increment': inc, 'bound': bound, 'holds': ok,
                     'enforced': ladder.enforce_convergence})
        if ladder.enforce_convergence and not ok:
            witnesses.append({'stage': stage.n, 'increment': inc, 'bound': bound})

    passed = seed_dist < ladder.eps_global and not witnesses
    log.info(f'rotation distance: seed distance {seed_dist}, telescoped increments '
             f'{float(telescoped):.3e}, {"pass" if passed else "FAIL"}')
    return {'seed_distance': seed_dist, 'eps_global': ladder.eps_global,
            'increments': rows, 'telescoped_sum': telescoped,
            'limit_distance_bound': seed_dist + telescoped,
            'bound': 4 * ladder.eps_global, 'witnesses': witnesses, 'passed': passed}
