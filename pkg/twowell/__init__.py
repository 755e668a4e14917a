"""Explicit quasiconvex relaxation of the two-dimensional two-well energy.

W(F) = dist^2(F, SO(2)U1 u SO(2)U2) + theta(det F), its relaxation W^qc,
the optimal laminates realizing it and brute-force oracles checking both.
"""

__version__ = "0.1.0"
