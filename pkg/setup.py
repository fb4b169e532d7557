# encoding: utf-8
#
# setup.py
#

from setuptools import setup


setup()
