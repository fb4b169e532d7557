# encoding: utf-8
# flake8: noqa

from .parallel import *
from .io import *
from .figures import *
