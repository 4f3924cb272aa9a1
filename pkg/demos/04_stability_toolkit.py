"""Central charges, phases and Harder-Narasimhan filtrations on toy categories."""
import cmath
import math

import numpy as np

from lmcflab.stability import (CentralCharge, ToyCategory, ToyObject, check_axioms, global_phase,
                               hn_bruteforce, hn_filtration, random_uniserial_category, slope)

# A and B with E an extension of A by B; A1 is the shift of A
objs = {"A": ToyObject("A", (1, 0), 0.25), "B": ToyObject("B", (0, 1), 0.75),
        "E": ToyObject("E", (1, 1)), "A1": ToyObject("A1", (-1, 0), 1.25)}
cat = ToyCategory(2, objs, shifts=[("A", 1, "A1")], homs=[("A", "B"), ("A", "A1")],
                  triangles=[("B", "E", "A")], filtrations={"E": ["B", "A"]})
Z = CentralCharge((cmath.rect(1.0, math.pi / 4), cmath.rect(2.0, 3 * math.pi / 4)))
print("axioms:", check_axioms(cat, Z))

for name in ("A", "B", "E"):
    c = cat.cls(name)
    print(f"{name}: Z = {Z(c):.3f}, phase {global_phase(Z, c, 0.0):.4f}, slope {slope(Z, c, 0.0):.4f}")
print("HN factors of E:", [(f.name, round(f.phase, 4)) for f in hn_filtration(cat, Z, "E", 0.0)])

# greedy filtrations agree with brute-force search on random categories
rng = np.random.default_rng(3)
agree = 0
for _ in range(20):
    cat, Z = random_uniserial_category(rng)
    for name in cat.objects:
        greedy = [f.name for f in hn_filtration(cat, Z, name, 0.0)]
        agree += greedy == [f.name for f in hn_bruteforce(cat, Z, name, 0.0)[0]]
print("greedy == exhaustive for", agree, "objects")
