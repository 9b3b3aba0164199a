#!/usr/bin/env python3
# Copyright 2025 R5 Labs
# This file is part of the hslab toolkit.
#
# This software is provided "as is", without warranty of any kind,
# express or implied, including but not limited to the warranties
# of merchantability, fitness for a particular purpose and
# noninfringement. In no event shall the authors or copyright
# holders be liable for any claim, damages, or other liability,
# whether in an action of contract, tort or otherwise, arising
# from, out of or in connection with the software or the use or
# other dealings in the software.

from setuptools import setup, find_packages # type: ignore

setup(
    name='hslab',
    version='1.0.0',
    description='Numerical laboratory for the critical Hardy-Sobolev problem on spheres',
    author='R5 Labs',
    author_email='support@r5.network',
    packages=find_packages(exclude=['tests', 'tests.*', 'examples', 'examples.*']),
    install_requires=[
        'numpy',
        'scipy',
        'mpmath',
        'pyinstaller',
    ],
    extras_require={
        'tests': [
            'pytest',
            'hypothesis',
        ],
    },
    entry_points={
        'console_scripts': [
            'hslab = hslab.main:main',
        ],
    },
    classifiers=[
        "Programming Language :: Python :: 3",
        "Operating System :: OS Independent",
    ],
    python_requires=">=3.9",
)
