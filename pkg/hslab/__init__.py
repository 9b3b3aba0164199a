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
"""
hslab - a desk-scale numerical laboratory for the Hardy-Sobolev equation
with critical exponent and critical Hardy potential on the round sphere.

Modules:
  constants      sharp Sobolev/Hardy constants and energy thresholds
  quadrature     radial integration engine and the I(alpha, beta) family
  bubbles        standard and singular Euclidean extremals
  manifold       round-sphere geometry, cutoff and radial potential
  grid           graded radial grid and discrete fields
  solver         discrete energy, Nehari projection, projected descent
  expansion      test-function expansion and existence conditions
  decomposition  synthetic bubble decomposition of Palais-Smale sequences
  config         layered INI configuration and argument parsing
  report         CSV and JSON report writers
  main           command-line driver
"""

__version__ = "1.0.0"
