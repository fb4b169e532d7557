# encoding: utf-8
# flake8: noqa

from .rational import *
from .boxes import *
from .parallelogram import *
