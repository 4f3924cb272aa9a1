"""lmcflab: numerics for Lagrangian mean curvature flow and its bookkeeping.

Subpackages
-----------
novikov     truncated Novikov series with exact exponents
planes      graded Lagrangian planes, characteristic angles, degrees
solitons    explicit special Lagrangian and soliton families in C^m
flow1d      graded curve shortening flow with surgeries in C and on tori
stability   central charges, phases and Harder-Narasimhan filtrations
cli         command line front end (``lmcf``)
"""

__version__ = "0.1.0"
