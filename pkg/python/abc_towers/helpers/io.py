# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: io.py
# Project: helpers
# Author: The abc-towers developers
# Created: Wednesday, 10th November 2021 10:54:12 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Thursday, 18th November 2021 9:20:31 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import json
import pathlib
from fractions import Fraction
from typing import Iterable, List, Sequence, Union

import numpy as np
from astropy.table import Table

from abc_towers import log
from abc_towers.exceptions import TowerIOError, TowerMissingDependency

try:
    from tabulate import tabulate
except ImportError:
    tabulate = None


__all__ = ['encode', 'decode_rational', 'dumps_json', 'dump_json', 'load_json', 'make_table',
           'write_csv', 'format_table', 'ensure_directory']

#: integers above this are written as decimal strings
MAX_SAFE_INTEGER = 2 ** 53

PathLike = Union[str, pathlib.Path]


def encode(value):
    """ Convert a report into plain JSON types

    Fractions become ``{"num": "...", "den": "..."}`` objects of decimal
    strings, integers beyond 2^53 become decimal strings, mapping keys
    become strings and objects with an ``as_dict`` method are expanded.

    Parameters
    ----------
    value : object
        A report or any nesting of dicts, sequences and scalars

    Returns
    -------
    object
        the JSON-ready value
    """
    if isinstance(value, bool) or value is None or isinstance(value, str):
        return value
    if isinstance(value, np.bool_):
        return bool(value)
    if isinstance(value, (int, np.integer)):
        value = int(value)
        return str(value) if abs(value) > MAX_SAFE_INTEGER else value
    if isinstance(value, Fraction):
        return {'num': str(value.numerator), 'den': str(value.denominator)}
    if isinstance(value, (float, np.floating)):
        return float(value)
    if hasattr(value, 'as_dict'):
        return encode(value.as_dict())
    if isinstance(value, dict):
        return {str(k): encode(v) for k, v in value.items()}
    if isinstance(value, (list, tuple, set, frozenset, np.ndarray)):
        items = sorted(value) if isinstance(value, (set, frozenset)) else value
        return [encode(v) for v in items]
    return repr(value)


def decode_rational(value) -> Fraction:
    """ Read a rational written by `encode`, a "p/q" string or an integer """
    if isinstance(value, dict):
        if set(value) != {'num', 'den'}:
            raise TowerIOError(f'a rational needs exactly the keys num and den, not {value}')
        return Fraction(int(value['num']), int(value['den']))
    if isinstance(value, float):
        raise TowerIOError(f'floating point value {value} is not an exact rational')
    return Fraction(value)


def dumps_json(value) -> str:
    """ Deterministic JSON text: sorted keys, two-space indent and a trailing newline """
    return json.dumps(encode(value), sort_keys=True, indent=2) + '\n'


def dump_json(value, filename: PathLike) -> pathlib.Path:
    """ Write a report as deterministic JSON

    Raises
    ------
    TowerIOError
        when the file cannot be written
    """
    path = pathlib.Path(filename)
    try:
        path.write_text(dumps_json(value))
    except OSError as err:
        log.error(f'Cannot write report {path}: {err}')
        raise TowerIOError(f'Failed to write {path}: {err}') from err
    log.debug(f'wrote {path}')
    return path


def load_json(filename: PathLike) -> dict:
    """ Read a JSON file

    Raises
    ------
    TowerIOError
        when the file is missing or not valid JSON
    """
    path = pathlib.Path(filename)
    try:
        return json.loads(path.read_text())
    except (OSError, ValueError) as err:
        log.error(f'Cannot read {path}: {err}')
        raise TowerIOError(f'Failed to read {path}: {err}') from err


def ensure_directory(dirname: PathLike, create: bool = False) -> pathlib.Path:
    """ Check that an output directory exists, optionally creating it """
    path = pathlib.Path(dirname)
    if create:
        try:
            path.mkdir(parents=True, exist_ok=True)
        except OSError as err:
            raise TowerIOError(f'Cannot create output directory {path}: {err}') from err
    if not path.is_dir():
        raise TowerIOError(f'output directory {path} does not exist')
    return path


def _cell(value):
    if isinstance(value, Fraction):
        return str(value)
    if isinstance(value, bool) or value is None:
        return str(value)
    if isinstance(value, int) and abs(value) > MAX_SAFE_INTEGER:
        return str(value)
    return value


def make_table(rows: Sequence[dict], columns: Sequence[str] = None) -> Table:
    """ An astropy Table of report rows, rationals written as "p/q" strings """
    rows = list(rows)
    columns = list(columns or (rows[0].keys() if rows else []))
    data = {c: [_cell(r.get(c)) for r in rows] for c in columns}
    # one dtype per column: fall back to strings when the entries are mixed
    for c, values in data.items():
        if len({type(v) for v in values}) > 1:
            data[c] = [str(v) for v in values]
    return Table(data, names=columns) if rows else Table(names=columns)


def write_csv(rows: Sequence[dict], filename: PathLike,
              columns: Sequence[str] = None) -> pathlib.Path:
    """ Write report rows as CSV through astropy """
    path = pathlib.Path(filename)
    try:
        make_table(rows, columns).write(path, format='ascii.csv', overwrite=True)
    except OSError as err:
        log.error(f'Cannot write table {path}: {err}')
        raise TowerIOError(f'Failed to write {path}: {err}') from err
    return path


def format_table(rows: Iterable[dict], columns: List[str] = None, tablefmt: str = 'simple',
                 **kwargs) -> str:
    """ Render report rows as a plain text table

    Parameters
    ----------
    rows : iterable of dict
        The rows
    columns : list of str, optional
        Column order, by default the keys of the first row
    tablefmt : str
        A tabulate table format
    kwargs
        Other kwargs for the tabulate method

    Returns
    -------
    str
        the table

    Raises
    ------
    TowerMissingDependency
        when the tabulate package is not installed
    """
    if not tabulate:
        raise TowerMissingDependency('package tabulate not found.  Cannot format the table.')
    rows = list(rows)
    columns = list(columns or (rows[0].keys() if rows else []))
    body = [[_cell(r.get(c)) for c in columns] for r in rows]
    return tabulate(body, headers=columns, tablefmt=tablefmt, disable_numparse=True, **kwargs)
