"""Angles of the explicit soliton families and their inverses."""
import math

import numpy as np

from lmcflab.solitons import (SolitonParams, asymptotic_decay, expander_angles, family_invert,
                              lawlor_angles, soliton_phase, translator_angles)

# Lawlor necks: the angles always add up to pi, whatever the parameters
for a in [(1, 1, 1), (1, 2, 3), (0.3, 4.0, 1.5, 2.2)]:
    ad = lawlor_angles(a)
    print("lawlor", a, np.round(ad.phi, 6), "sum - pi =", f"{ad.phi.sum() - math.pi:.1e}")

# expanders fill the open region 0 < sum < pi, and shrink to Lawlor as alpha -> 0
a = (1.0, 2.0, 3.0)
for alpha in (2.0, 1.0, 0.5, 0.1, 0.0):
    print(f"expander alpha={alpha:<4}", np.round(expander_angles(alpha, a).phi, 6))

# inverting the angle map recovers the parameters
phi = expander_angles(1.0, a).phi
print("inverted:", family_invert("expander", 1.0, phi))

# the translator phase runs monotonically from pi down to the angle sum
p = SolitonParams("translator", 3, (1, 2), 1.0)
print("translator theta(-50), theta(0), theta(50):",
      [round(soliton_phase(p, y), 6) for y in (-50, 0, 50)],
      "target", round(float(translator_angles(1.0, (1, 2)).phi.sum()), 6))

# Lawlor ends approach their asymptotic planes at rate r^(2-m)
rho, radii, dist = asymptotic_decay(SolitonParams("lawlor", 3, (1, 2, 3)), np.geomspace(5, 50, 6))
print("fitted decay exponent for m = 3:", round(rho, 4))
