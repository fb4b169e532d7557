# encoding: utf-8
# flake8: noqa

from .combinatorics import *
from .scheduler import *
from .bumps import *
from .conjugations import *
