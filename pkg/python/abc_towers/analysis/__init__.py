# encoding: utf-8
# flake8: noqa

from .towers import *
from .approximation import *
from .fbar import *
