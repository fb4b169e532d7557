# !/usr/bin/env python
# -*- coding: utf-8 -*-
#
# Filename: __init__.py
# Project: analysis
# Author: The abc-towers developers
# Created: Monday, 4th October 2021 10:02:11 am
# License: BSD 3-clause "New" or "Revised" License
# Copyright (c) 2021 The abc-towers developers
# Last Modified: Monday, 4th October 2021 10:02:11 am
# Modified By: The abc-towers developers


from __future__ import print_function, division, absolute_import
