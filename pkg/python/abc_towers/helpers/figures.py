# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: figures.py
# Project: helpers
# Author: The abc-towers developers
# Created: Monday, 15th November 2021 2:41:08 pm
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 22nd November 2021 11:02:45 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import

import math
import pathlib
from fractions import Fraction
from typing import List, Sequence, Tuple, Union

from abc_towers import log
from abc_towers.config import config
from abc_towers.construction.combinatorics import StageParams, rectangles
from abc_towers.construction.conjugations import (SlantedCell, good_domain_h1,
                                                  good_domain_h2)
from abc_towers.exceptions import TowerIOError, TowerMissingDependency
from abc_towers.geometry.boxes import Box
from abc_towers.geometry.parallelogram import Parallelogram

try:
    import drawsvg as draw
except ImportError:
    draw = None


__all__ = ['Canvas', 'torus_pieces', 'combinatorics_figure', 'good_domain_figure',
           'towers_figure', 'skeleton_figure', 'save_figure']

Vertex = Tuple[Fraction, Fraction]

MARGIN = 20
PANEL = 480
GREY = '#b0b0b0'
BLACK = '#000000'
STRIP = '#e8e8f4'
FONT = 'Helvetica, Arial, sans-serif'


def _require_drawsvg():
    if not draw:
        raise TowerMissingDependency('package drawsvg not found.  Cannot draw figures.')


class Canvas(object):
    """ A drawsvg drawing with exact-to-pixel coordinate mapping

    Torus coordinates are exact rationals; they are mapped affinely onto
    pixels, the second coordinate pointing up, and rounded to the
    configured number of decimals so that equal inputs give identical files.

    Parameters
    ----------
    width : int
        Pixel width of the drawing
    height : int
        Pixel height of the drawing
    precision : int, optional
        Decimals kept for every coordinate
    """

    def __init__(self, width: int, height: int, precision: int = None):
        _require_drawsvg()
        self.width = width
        self.height = height
        self.precision = precision or config.svg_precision
        self.drawing = draw.Drawing(width, height)
        self.drawing.append(draw.Rectangle(0, 0, width, height, fill='white'))
        self.frames = []

    def __repr__(self):
        return f'<Canvas(width={self.width}, height={self.height}, panels={len(self.frames)})>'

    def _round(self, value) -> float:
        return round(float(value), self.precision)

    def panel(self, x0: float, y0: float, scale_x: float, scale_y: float, extent_y) -> int:
        """ Register a panel whose origin (0, 0) sits at pixel (x0, y0 + extent_y * scale_y) """
        self.frames.append((x0, y0, scale_x, scale_y, Fraction(extent_y)))
        return len(self.frames) - 1

    def point(self, frame: int, x, y) -> Tuple[float, float]:
        x0, y0, sx, sy, extent = self.frames[frame]
        return (self._round(x0 + Fraction(x) * Fraction(sx)),
                self._round(y0 + (extent - Fraction(y)) * Fraction(sy)))

    def rectangle(self, frame: int, x_lo, x_hi, y_lo, y_hi, **kwargs) -> None:
        left, top = self.point(frame, x_lo, y_hi)
        right, bottom = self.point(frame, x_hi, y_lo)
        self.drawing.append(draw.Rectangle(left, top, self._round(right - left),
                                           self._round(bottom - top), **kwargs))

    def polygon(self, frame: int, vertices: Sequence[Vertex], **kwargs) -> None:
        coords = [c for v in vertices for c in self.point(frame, *v)]
        self.drawing.append(draw.Lines(*coords, close=True, **kwargs))

    def text(self, frame: int, label: str, x, y, size: float, **kwargs) -> None:
        px, py = self.point(frame, x, y)
        self.drawing.append(draw.Text(label, size, px, py, font_family=FONT,
                                      text_anchor='middle', dominant_baseline='middle',
                                      **kwargs))

    def caption(self, label: str, x: float, y: float, size: float = 14) -> None:
        self.drawing.append(draw.Text(label, size, x, y, font_family=FONT, fill=BLACK))

    def as_svg(self) -> str:
        return self.drawing.as_svg()


def _clip(polygon: List[Vertex], a: int, b: int, c: Fraction) -> List[Vertex]:
    """ Keep the part of a convex polygon where a x + b y >= c """
    if not polygon:
        return []
    out = []
    for (x1, y1), (x2, y2) in zip(polygon, polygon[1:] + polygon[:1]):
        f1, f2 = a * x1 + b * y1 - c, a * x2 + b * y2 - c
        if f1 >= 0:
            out.append((x1, y1))
        if (f1 < 0 < f2) or (f2 < 0 < f1):
            t = f1 / (f1 - f2)
            out.append((x1 + t * (x2 - x1), y1 + t * (y2 - y1)))
    return out


def _area(polygon: Sequence[Vertex]) -> Fraction:
    pairs = zip(polygon, polygon[1:] + polygon[:1])
    return abs(sum((x1 * y2 - x2 * y1 for (x1, y1), (x2, y2) in pairs), Fraction(0))) / 2


def torus_pieces(polygon: Sequence[Vertex]) -> List[List[Vertex]]:
    """ Fold a convex polygon of the plane onto the unit square

    Parameters
    ----------
    polygon : sequence of (Fraction, Fraction)
        The vertices of a convex polygon, in order

    Returns
    -------
    list
        the non-degenerate pieces of the polygon cut along the integer
        lattice and translated into [0, 1]^2, in lattice order
    """
    polygon = [(Fraction(x), Fraction(y)) for x, y in polygon]
    xs = [x for x, _ in polygon]
    ys = [y for _, y in polygon]
    pieces = []
    for kx in range(math.floor(min(xs)), math.ceil(max(xs))):
        for ky in range(math.floor(min(ys)), math.ceil(max(ys))):
            piece = _clip(polygon, 1, 0, Fraction(kx))
            piece = _clip(piece, -1, 0, Fraction(-kx - 1))
            piece = _clip(piece, 0, 1, Fraction(ky))
            piece = _clip(piece, 0, -1, Fraction(-ky - 1))
            if len(piece) >= 3 and _area(piece) > 0:
                pieces.append([(x - kx, y - ky) for x, y in piece])
    return pieces


def _slanted_polygon(cell: SlantedCell) -> List[Vertex]:
    a0, a1 = cell.straight.lo, cell.straight.hi
    w0, w1 = cell.slant.lo, cell.slant.hi
    if cell.kind == 1:
        return [(a0, a0 + w0), (a1, a1 + w0), (a1, a1 + w1), (a0, a0 + w1)]
    return [(a0 + w0, a0), (a1 + w0, a1), (a1 + w1, a1), (a0 + w1, a0)]


def _strip_polygon(p: Parallelogram) -> List[Vertex]:
    lo, hi = p.lower, p.lower + p.width
    zero, one = Fraction(0), Fraction(1)
    if p.kind == 1:
        return [(zero, lo), (one, 1 + lo), (one, 1 + hi), (zero, hi)]
    return [(lo, zero), (1 + lo, one), (1 + hi, one), (hi, zero)]


def _box(canvas: Canvas, frame: int, box: Box, **kwargs) -> None:
    for a, b in box.pieces():
        canvas.rectangle(frame, a.lo, a.hi, b.lo, b.hi, **kwargs)


def _unit_frame(canvas: Canvas, frame: int) -> None:
    canvas.rectangle(frame, 0, 1, 0, 1, fill='none', stroke=BLACK, stroke_width=1)


def combinatorics_figure(stage: StageParams, cell: int = 60) -> Canvas:
    """ The cells S^(1)_k (grey) and S^(2)_k (black) in the fundamental domain

    Every cell is folded into [0, 1/q] x [0, 1/q'] and labeled by its
    iterate index k.

    Parameters
    ----------
    stage : StageParams
        The stage
    cell : int
        Pixel size of one lattice cell of side 1/(q q')

    Returns
    -------
    Canvas
        the figure
    """
    lam, q, qp = stage.lam, stage.q, stage.q_prime
    canvas = Canvas(2 * MARGIN + qp * cell, 3 * MARGIN + q * cell)
    frame = canvas.panel(MARGIN, 2 * MARGIN, cell * lam, cell * lam, Fraction(1, qp))
    for s, fill, ink in ((1, GREY, BLACK), (2, BLACK, 'white')):
        for k, box in enumerate(rectangles(stage, s)):
            x0 = box.theta1.lo - Fraction(math.floor(box.theta1.lo * q), q)
            y0 = box.theta2.lo - Fraction(math.floor(box.theta2.lo * qp), qp)
            x1, y1 = x0 + box.theta1.length, y0 + box.theta2.length
            canvas.rectangle(frame, x0, x1, y0, y1, fill=fill, stroke=BLACK, stroke_width=0.5)
            canvas.text(frame, str(k), (x0 + x1) / 2, (y0 + y1) / 2, cell / 4, fill=ink)
    canvas.rectangle(frame, 0, Fraction(1, q), 0, Fraction(1, qp), fill='none', stroke=BLACK,
                     stroke_width=1)
    canvas.caption(f'stage {stage.n}: p={stage.p}, q={q}, p\'={stage.p_prime}, q\'={qp}, '
                   f'r={stage.r}, r\'={stage.r_prime}', MARGIN, MARGIN, size=12)
    return canvas


def good_domain_figure(stage: StageParams, limit: int = None) -> Canvas:
    """ The good domains of h_n,1^-1 (left) and h_n,2^-1 (right) on the torus factor """
    limit = limit or config.exhaustive_limit
    canvas = Canvas(3 * MARGIN + 2 * PANEL, 3 * MARGIN + PANEL)
    left = canvas.panel(MARGIN, 2 * MARGIN, PANEL, PANEL, 1)
    right = canvas.panel(2 * MARGIN + PANEL, 2 * MARGIN, PANEL, PANEL, 1)
    for box in good_domain_h1(stage, limit):
        _box(canvas, left, box, fill=GREY, stroke='none')
    for cell in good_domain_h2(stage, limit):
        fill = GREY if cell.kind == 1 else BLACK
        for piece in torus_pieces(_slanted_polygon(cell)):
            canvas.polygon(right, piece, fill=fill, stroke='none')
    _unit_frame(canvas, left)
    _unit_frame(canvas, right)
    canvas.caption(f'stage {stage.n} good domains', MARGIN, MARGIN, size=12)
    return canvas


def towers_figure(pair, limit: int = None) -> Canvas:
    """ Level boxes R^(j q q') C^(s)_0 inside their parallelogram strips

    Tower 1 is drawn grey in its strip of kind 1, tower 2 black in its
    strip of kind 2.

    Parameters
    ----------
    pair : TowerPair
        The towers of a stage
    limit : int, optional
        Largest number of boxes drawn per tower

    Returns
    -------
    Canvas
        the figure
    """
    stage = pair.stage
    limit = limit or config.enumeration_limit
    canvas = Canvas(2 * MARGIN + PANEL, 3 * MARGIN + PANEL)
    frame = canvas.panel(MARGIN, 2 * MARGIN, PANEL, PANEL, 1)
    for s, fill in ((1, GREY), (2, BLACK)):
        strip = Parallelogram(s, 0, 0, stage.eps, stage.q, stage.q_prime, fiber_eps=stage.eps)
        for piece in torus_pieces(_strip_polygon(strip)):
            canvas.polygon(frame, piece, fill=STRIP, stroke=fill, stroke_width=0.5)
        count = pair.height(s)
        if count > limit:
            log.warning(f'drawing {limit} of the {count} level boxes of tower {s}')
            count = limit
        for j in range(count):
            _box(canvas, frame, pair.level_box(s, j * stage.lam), fill=fill, stroke=fill,
                 stroke_width=0.2)
    _unit_frame(canvas, frame)
    canvas.caption(f'stage {stage.n} towers: heights {pair.h1} and {pair.h2}', MARGIN, MARGIN,
                   size=12)
    return canvas


def skeleton_figure(title: str = '') -> Canvas:
    """ An empty unit-square frame, drawn when there is no stage to show """
    canvas = Canvas(2 * MARGIN + PANEL, 3 * MARGIN + PANEL)
    frame = canvas.panel(MARGIN, 2 * MARGIN, PANEL, PANEL, 1)
    _unit_frame(canvas, frame)
    if title:
        canvas.caption(title, MARGIN, MARGIN, size=12)
    return canvas


def save_figure(canvas: Canvas, filename: Union[str, pathlib.Path]) -> pathlib.Path:
    """ Write a figure as SVG

    Raises
    ------
    TowerIOError
        when the file cannot be written
    """
    path = pathlib.Path(filename)
    try:
        path.write_text(canvas.as_svg())
    except OSError as err:
        log.error(f'Cannot write figure {path}: {err}')
        raise TowerIOError(f'Failed to write {path}: {err}') from err
    log.debug(f'wrote {path}')
    return path
