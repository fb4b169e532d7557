# !usr/bin/env python
# -*- coding: utf-8 -*-
#
# Licensed under a 3-clause BSD license.
#
# Filename: exceptions.py
# Project: abc_towers


from __future__ import print_function, division, absolute_import


class TowerError(Exception):
    """A custom core abc_towers exception"""

    def __init__(self, message=None):

        message = 'There has been an error' \
            if not message else message

        super(TowerError, self).__init__(message)


class ConditionViolation(TowerError):
    """A failed inequality or identity of the construction

    Carries the condition label and both sides as exact rationals so that
    reports and exit messages can name the offending inequality.
    """

    def __init__(self, condition, lhs=None, rhs=None, relation='<', stage=None, message=None):
        self.condition = condition
        self.lhs = lhs
        self.rhs = rhs
        self.relation = relation
        self.stage = stage

        if not message:
            where = f' at stage {stage}' if stage is not None else ''
            message = f'condition ({condition}) violated{where}'
            if lhs is not None or rhs is not None:
                message += f': {lhs} {relation} {rhs} does not hold'

        super(ConditionViolation, self).__init__(message)


class NoAdmissibleStage(TowerError):
    """A custom exception for when the k_n search hits its ceiling"""

    def __init__(self, message=None):

        message = 'No admissible stage found below the configured k_n ceiling.' \
            if not message else message

        super(NoAdmissibleStage, self).__init__(message)


class OutsideGoodDomain(TowerError):
    """A custom exception for conjugation queries outside the closed-form region"""
    pass


class IndicatorUndefined(TowerError):
    """A custom exception for set indicators that cannot be evaluated at a point"""
    pass


class AmbiguousContainment(TowerError):
    """A custom exception for strip tests whose strip coordinate wraps the circle"""
    pass


class MonteCarloInconclusive(TowerError):
    """A custom exception for Monte Carlo bounds not below their budget"""
    pass


class TowerIOError(TowerError):
    """A custom exception for reports and configs that cannot be read or written"""
    pass


class TowerMissingDependency(TowerError):
    """A custom exception for missing dependencies."""
    pass


class TowerWarning(Warning):
    """Base warning for abc_towers."""


class TowerUserWarning(UserWarning, TowerWarning):
    """The primary warning class."""
    pass


class TowerAnalyticOnlyWarning(TowerUserWarning):
    """A warning for stages too large to enumerate."""
    pass
