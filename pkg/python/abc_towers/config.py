# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: config.py
# Project: abc_towers
# Author: The abc-towers developers
# Created: Monday, 4th October 2021 10:20:11 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Thursday, 28th October 2021 9:41:56 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import copy
import json
import math
import os
import pathlib
from fractions import Fraction
from typing import List, Optional, Tuple, Union

import yaml
from pydantic import BaseModel, ValidationError, validator

from abc_towers import cfg_params, log
from abc_towers.exceptions import TowerError
from abc_towers.geometry.rational import as_fraction


__all__ = ['Config', 'RunConfig', 'config']


THREADS_ENV = 'ABC_TOWERS_THREADS'


class Config(object):
    """ Global runtime configuration for abc_towers

    Holds the enumeration limits and sampling knobs shared by all
    verification routines.  Defaults come from the package YAML file
    and may be overridden by the user's custom configuration file.

    Attributes
    ----------
    exhaustive_limit : int
        Largest number of tower boxes checked by the exhaustive sweep
    enumeration_limit : int
        Largest tower height for which levels are enumerated
    lattice_limit : int
        Largest q q' for which the lattice coset partition is enumerated
    mc_samples : int
        Default number of Monte Carlo samples
    mc_confidence : Fraction
        Confidence level of the Monte Carlo bound
    mc_chunks : int
        Number of independent Monte Carlo substreams
    fbar_trials : int
        Default number of sampled name pairs or quadruples
    svg_precision : int
        Number of decimals written for SVG coordinates
    threads : int
        Worker count; the environment variable ABC_TOWERS_THREADS wins
    """

    def __init__(self):
        self._exhaustive_limit = 10 ** 5
        self._enumeration_limit = 5000
        self._lattice_limit = 1000
        self._mc_samples = 10 ** 5
        self._mc_confidence = Fraction(99, 100)
        self._mc_chunks = 16
        self._fbar_trials = 200
        self._svg_precision = 6
        self._threads = 1

        # load default config parameters
        self._load_defaults()

    def __repr__(self):
        return (f'<TowerConfig(exhaustive_limit={self.exhaustive_limit}, '
                f'mc_samples={self.mc_samples}, threads={self.threads})>')

    def _load_defaults(self) -> None:
        """ Load the package config yaml file and update any parameters """

        # update any matching Config values
        for key, value in cfg_params.items():
            if hasattr(self, key):
                self.__setattr__(key, value)

        self._custom_config = cfg_params

    @staticmethod
    def _positive_int(name: str, value) -> int:
        if isinstance(value, bool) or not isinstance(value, int) or value < 1:
            raise TowerError(f'config.{name} must be a positive integer, not {value!r}')
        return value

    @property
    def exhaustive_limit(self) -> int:
        return self._exhaustive_limit

    @exhaustive_limit.setter
    def exhaustive_limit(self, value: int) -> None:
        self._exhaustive_limit = self._positive_int('exhaustive_limit', value)

    @property
    def enumeration_limit(self) -> int:
        return self._enumeration_limit

    @enumeration_limit.setter
    def enumeration_limit(self, value: int) -> None:
        self._enumeration_limit = self._positive_int('enumeration_limit', value)

    @property
    def lattice_limit(self) -> int:
        return self._lattice_limit

    @lattice_limit.setter
    def lattice_limit(self, value: int) -> None:
        self._lattice_limit = self._positive_int('lattice_limit', value)

    @property
    def mc_samples(self) -> int:
        return self._mc_samples

    @mc_samples.setter
    def mc_samples(self, value: int) -> None:
        self._mc_samples = self._positive_int('mc_samples', value)

    @property
    def mc_chunks(self) -> int:
        return self._mc_chunks

    @mc_chunks.setter
    def mc_chunks(self, value: int) -> None:
        self._mc_chunks = self._positive_int('mc_chunks', value)

    @property
    def mc_confidence(self) -> Fraction:
        return self._mc_confidence

    @mc_confidence.setter
    def mc_confidence(self, value) -> None:
        value = as_fraction(value)
        if not 0 < value < 1:
            raise TowerError(f'config.mc_confidence must lie in (0, 1), not {value}')
        self._mc_confidence = value

    @property
    def fbar_trials(self) -> int:
        return self._fbar_trials

    @fbar_trials.setter
    def fbar_trials(self, value: int) -> None:
        self._fbar_trials = self._positive_int('fbar_trials', value)

    @property
    def svg_precision(self) -> int:
        return self._svg_precision

    @svg_precision.setter
    def svg_precision(self, value: int) -> None:
        self._svg_precision = self._positive_int('svg_precision', value)

    @property
    def threads(self) -> int:
        """ The worker count, read from ABC_TOWERS_THREADS when set """
        env = os.environ.get(THREADS_ENV)
        if env:
            try:
                return self._positive_int('threads', int(env))
            except ValueError as err:
                raise TowerError(f'{THREADS_ENV} must be a positive integer, '
                                 f'not {env!r}') from err
        return self._threads

    @threads.setter
    def threads(self, value: int) -> None:
        self._threads = self._positive_int('threads', value)


def _frac(value):
    try:
        return as_fraction(value)
    except TowerError as err:
        raise ValueError(str(err)) from err


class RunConfig(BaseModel):
    """ Pydantic class validating a pipeline run configuration

    Rationals may be given as ``"p/q"`` strings, integers or
    ``{"num": ..., "den": ...}`` objects.  Floats are rejected.
    """
    d: int = 2
    alpha: Fraction
    alpha_prime: Fraction
    target: Optional[Tuple[Fraction, Fraction]] = None
    eps_global: Fraction = Fraction(1, 10)
    n_max: int = 2
    k_ceiling: int = 10 ** 6
    enforce_convergence: bool = False
    l_seq: Optional[List[int]] = None
    mc_samples: int = 10 ** 5
    mc_confidence: Fraction = Fraction(99, 100)
    mc_chunks: int = 16
    rng_seed: int = 20211
    output_dir: str = 'abc_towers_output'
    fbar_alphas: List[Fraction] = [Fraction(1, 10000)]
    fbar_trials: int = 200
    fbar_eps_schedule: List[Fraction] = [Fraction(1), Fraction(1, 2)]
    fbar_names: Optional[Tuple[List[str], List[str]]] = None
    substantiality_r: Fraction = Fraction(1, 4)
    exhaustive_limit: int = 10 ** 5
    enumeration_limit: int = 5000
    lattice_limit: int = 1000
    threads: int = 1
    svg_precision: int = 6

    class Config:
        arbitrary_types_allowed = True
        extra = 'forbid'

    @validator('alpha', 'alpha_prime', 'eps_global', 'mc_confidence', 'substantiality_r',
               pre=True)
    def read_rational(cls, value):
        return _frac(value)

    @validator('target', pre=True)
    def read_target(cls, value):
        if value is None:
            return None
        if len(value) != 2:
            raise ValueError('target must be a pair (A, B)')
        return tuple(_frac(v) for v in value)

    @validator('fbar_alphas', 'fbar_eps_schedule', pre=True)
    def read_rational_list(cls, values):
        return [_frac(v) for v in values]

    @validator('alpha', 'alpha_prime')
    def in_unit_interval(cls, value):
        if not 0 <= value < 1:
            raise ValueError(f'seed rotation number {value} outside [0, 1)')
        return value

    @validator('alpha_prime')
    def coprime_denominators(cls, value, values):
        alpha = values.get('alpha')
        if alpha is not None and math.gcd(alpha.denominator, value.denominator) != 1:
            raise ValueError(f'condition (B) fails for the seed: gcd({alpha.denominator}, '
                             f'{value.denominator}) != 1')
        return value

    @validator('d')
    def dimension(cls, value):
        if value < 2:
            raise ValueError('dimension d must be at least 2')
        return value

    @validator('n_max', 'k_ceiling', 'mc_samples', 'mc_chunks', 'fbar_trials',
               'exhaustive_limit', 'enumeration_limit', 'lattice_limit', 'threads',
               'svg_precision')
    def positive(cls, value):
        if value < 1:
            raise ValueError('must be a positive integer')
        return value

    @validator('eps_global')
    def positive_eps(cls, value):
        if value <= 0:
            raise ValueError('eps_global must be positive')
        return value

    @validator('mc_confidence')
    def confidence_range(cls, value):
        if not 0 < value < 1:
            raise ValueError('mc_confidence must lie in (0, 1)')
        return value

    @validator('fbar_alphas', each_item=True)
    def alpha_range(cls, value):
        if not 0 < value <= 1:
            raise ValueError(f'f-bar alpha {value} outside (0, 1]')
        return value

    @validator('fbar_names', pre=True)
    def read_names(cls, value):
        if value is None:
            return None
        if isinstance(value, str) or len(value) != 2:
            raise ValueError('fbar_names must be a pair of names')
        # a string name has one symbol per character
        names = [list(v) for v in value]
        if not names[0] or len(names[0]) != len(names[1]):
            raise ValueError('fbar_names must be two non-empty names of equal length')
        return tuple(names)

    @validator('substantiality_r')
    def r_range(cls, value):
        if not 0 < value <= 1:
            raise ValueError('substantiality_r must lie in (0, 1]')
        return value

    @validator('l_seq', each_item=True)
    def l_positive(cls, value):
        if value < 1:
            raise ValueError('l_n values must be positive')
        return value

    @property
    def seed(self) -> Tuple[int, int, int, int]:
        """ (p1, q1, p1', q1') """
        return (self.alpha.numerator, self.alpha.denominator,
                self.alpha_prime.numerator, self.alpha_prime.denominator)

    @classmethod
    def from_dict(cls, values: dict, base: dict = None) -> 'RunConfig':
        """ Build a run config from a mapping merged over a base mapping

        Parameters
        ----------
        values : dict
            The user values; a nested ``seed`` mapping is flattened
        base : dict, optional
            The defaults, by default the package cfg_params

        Returns
        -------
        RunConfig
            the validated configuration

        Raises
        ------
        TowerError
            when validation fails
        """
        merged = _flatten(copy.deepcopy(dict(cfg_params if base is None else base)))
        merged.update(_flatten(copy.deepcopy(dict(values or {}))))
        known = set(cls.__fields__)
        merged = {k: v for k, v in merged.items() if k in known or k in values}
        try:
            return cls(**merged)
        except ValidationError as err:
            raise TowerError(f'invalid run configuration: {err}') from err

    @classmethod
    def from_file(cls, path: Union[str, pathlib.Path], base: dict = None) -> 'RunConfig':
        """ Read a JSON (or YAML) run config file and merge it over the defaults

        Raises
        ------
        OSError
            when the file cannot be read
        TowerError
            when the content is not a valid configuration
        """
        path = pathlib.Path(path)
        text = path.read_text()
        try:
            if path.suffix in ('.yml', '.yaml'):
                values = yaml.load(text, Loader=yaml.SafeLoader)
            else:
                values = json.loads(text)
        except (ValueError, yaml.YAMLError) as err:
            raise TowerError(f'could not parse run config {path}') from err
        if not isinstance(values, dict):
            raise TowerError(f'run config {path} must hold a mapping')
        log.debug(f'loaded run config from {path}')
        return cls.from_dict(values, base=base)


def _flatten(values: dict) -> dict:
    seed = values.pop('seed', None)
    if isinstance(seed, dict):
        for key in ('alpha', 'alpha_prime'):
            if key in seed:
                values[key] = seed[key]
    return values


config = Config()
