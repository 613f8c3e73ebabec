#!/usr/bin/env python
from setuptools import setup, find_packages


version = '0.1.0'


setup(name='vbdiff',
      version=version,
      description='Variable-bandwidth diffusion-kernel estimation of Kolmogorov operators from point clouds',
      packages=find_packages(exclude=('test', 'test.*')),
      python_requires='>=3.8',
      install_requires=['numpy>=1.20', 'scipy>=1.7', 'requests>=2.20.0'],
      entry_points={'console_scripts': ['vbdiff = vbdiff.cli:main']})
