"""Membership tests for the Harvey-Lawson T^2 cone and its smoothings in C^3."""

from __future__ import annotations

import numpy as np

__all__ = ["hl_membership", "product_defect"]


def product_defect(p: complex) -> float:
    """Distance of a complex number from the closed ray ``[0, inf)``."""
    return abs(p.imag) if p.real >= 0 else abs(p)


def hl_membership(kind: str, z, A: float = 0.0, tol: float = 1e-9, variant: int = 1):
    """Check whether ``z`` lies on the cone or on the smoothing ``L^A_variant``.

    Parameters
    ----------
    kind : {"hl_cone", "hl_L1"}
    z : sequence of 3 complex
    A : float
        Size of the smoothing (``hl_L1`` only).
    variant : {1, 2, 3}
        Which coordinate carries the ``+A``; variants 2 and 3 are the cyclic
        permutations of variant 1.

    Returns
    -------
    inside : bool
    defect : float
        Worst violation among the modulus equations and the product condition.
    """
    z = np.asarray(z, complex)
    if z.shape != (3,):
        raise ValueError("Harvey-Lawson examples live in C^3")
    if variant not in (1, 2, 3):
        raise ValueError("variant must be 1, 2 or 3")
    z = np.roll(z, 1 - variant)
    s = np.abs(z) ** 2
    if kind == "hl_cone":
        shift = 0.0
    elif kind == "hl_L1":
        if A <= 0:
            raise ValueError("hl_L1 needs A > 0")
        shift = A
    else:
        raise ValueError(f"unknown kind {kind!r}")
    defects = [abs(s[0] - shift - s[1]), abs(s[1] - s[2]), product_defect(complex(np.prod(z)))]
    worst = float(max(defects))
    return worst <= tol, worst
