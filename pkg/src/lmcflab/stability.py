"""Central charges, phases and Harder-Narasimhan filtrations on toy categories.

A toy category is pure data: named objects with integer K-classes and an
optional slicing phase, a shift table, a table of nonzero degree-0 Homs, a
table of triangles ``A -> B -> C -> A[1]`` (read as short exact sequences in
a heart) and optional filtrations for objects outside the slicing.

Two phase conventions appear and are kept apart:

* slicing phases ``phi`` are in units of pi, ``Z = m exp(i pi phi)``;
* global phases are in radians, in ``(pi alpha, pi (alpha + 1)]``.
"""

from __future__ import annotations

import cmath
import itertools
import json
import math
from dataclasses import dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

__all__ = [
    "CentralCharge",
    "ToyObject",
    "ToyCategory",
    "MalformedCategoryError",
    "InadmissibleError",
    "admissible_alpha",
    "global_phase",
    "slope",
    "check_axioms",
    "hn_filtration",
    "hn_bruteforce",
    "semistability_test",
    "HNFactor",
    "random_uniserial_category",
]

PHASE_TOL = 1e-9


class MalformedCategoryError(ValueError):
    pass


class InadmissibleError(ValueError):
    pass


@dataclass(frozen=True)
class CentralCharge:
    """Linear map ``Z(c) = sum c_i periods_i`` on the K-lattice."""

    periods: tuple

    def __post_init__(self):
        object.__setattr__(self, "periods", tuple(complex(p) for p in self.periods))

    @property
    def rank(self) -> int:
        return len(self.periods)

    def __call__(self, cls) -> complex:
        c = np.asarray(cls)
        if c.shape != (self.rank,):
            raise ValueError(f"class {tuple(c)} does not have rank {self.rank}")
        return complex(np.dot(c, np.asarray(self.periods)))

    def to_json(self) -> dict:
        return {"periods": [[p.real, p.imag] for p in self.periods]}

    @classmethod
    def from_json(cls, doc) -> "CentralCharge":
        periods = doc["periods"] if isinstance(doc, dict) else doc
        return cls(tuple(complex(*p) if isinstance(p, (list, tuple)) else complex(p) for p in periods))


# ----------------------------------------------------------------------
# phases

def admissible_alpha(charge: CentralCharge, classes, alpha: float, tol: float = 1e-12) -> bool:
    """True iff no ``Z(c)`` lies on the open ray ``exp(i pi alpha) (0, inf)``."""
    rot = cmath.exp(-1j * math.pi * alpha)
    for c in classes:
        w = charge(c) * rot
        if w.real > 0 and abs(w.imag) <= tol * max(1.0, abs(w)):
            return False
    return True


def _phase_from_z(z: complex, alpha: float, tol: float = 1e-12) -> float:
    if abs(z) == 0:
        raise ValueError("Z = 0 has no phase")
    w = z * cmath.exp(-1j * math.pi * alpha)
    scale = abs(w)
    if abs(w.imag) <= tol * scale:
        if w.real > 0:
            raise InadmissibleError(f"Z = {z} lies on the excluded ray for alpha = {alpha}")
        return math.pi * alpha + math.pi
    if w.imag < 0:
        raise InadmissibleError(f"Z = {z} is outside the half-plane of alpha = {alpha}")
    return math.pi * alpha + math.atan2(w.imag, w.real)


def global_phase(charge: CentralCharge, cls, alpha: float) -> float:
    """Argument of ``Z(cls)`` on the branch ``(pi alpha, pi (alpha + 1)]``.

    Raises
    ------
    ValueError
        ``Z = 0``.
    InadmissibleError
        ``Z`` on the excluded ray or in the opposite half-plane.
    """
    return _phase_from_z(charge(cls), alpha)


def slope(charge: CentralCharge, cls, alpha: float) -> float:
    """Slope with ``global_phase = arctan(slope) + pi alpha + pi / 2``.

    Raises
    ------
    ZeroDivisionError
        When the phase sits on the boundary ``pi alpha + pi``.
    """
    z = charge(cls)
    c, s = math.cos(math.pi * alpha), math.sin(math.pi * alpha)
    num = -c * z.real - s * z.imag
    den = -s * z.real + c * z.imag
    if abs(den) <= 1e-15 * max(1.0, abs(z)):
        raise ZeroDivisionError("slope undefined: phase on the boundary pi*alpha + pi")
    return num / den


# ----------------------------------------------------------------------
# categories

@dataclass(frozen=True)
class ToyObject:
    name: str
    cls: tuple
    phase: Optional[float] = None  # slicing phase, units of pi


@dataclass
class ToyCategory:
    rank: int
    objects: Dict[str, ToyObject]
    shifts: List[Tuple[str, int, str]] = field(default_factory=list)
    homs: List[Tuple[str, str]] = field(default_factory=list)
    triangles: List[Tuple[str, str, str]] = field(default_factory=list)
    filtrations: Dict[str, List[str]] = field(default_factory=dict)

    def __post_init__(self):
        self.validate()

    def cls(self, name) -> np.ndarray:
        return np.asarray(self.objects[name].cls)

    def validate(self) -> None:
        def known(n, where):
            if n not in self.objects:
                raise MalformedCategoryError(f"{where}: unknown object {n!r}")

        for o in self.objects.values():
            if len(o.cls) != self.rank:
                raise MalformedCategoryError(f"objects.{o.name}: class has wrong rank")
        for s, n, t in self.shifts:
            known(s, "shifts")
            known(t, "shifts")
            if not np.array_equal(self.cls(t), (-1) ** (n % 2) * self.cls(s)):
                raise MalformedCategoryError(f"shifts: [{t}] != (-1)^{n} [{s}]")
        for a, b in self.homs:
            known(a, "homs")
            known(b, "homs")
        for a, b, c in self.triangles:
            for n in (a, b, c):
                known(n, "triangles")
            if not np.array_equal(self.cls(b), self.cls(a) + self.cls(c)):
                raise MalformedCategoryError(f"triangles: [{b}] != [{a}] + [{c}]")
        for obj, factors in self.filtrations.items():
            known(obj, "filtrations")
            for f in factors:
                known(f, f"filtrations.{obj}")

    # subobject lattice read off the triangle table
    def subobjects(self, name):
        return [(a, c) for a, b, c in self.triangles if b == name]

    def to_json(self) -> dict:
        return {
            "rank": self.rank,
            "objects": [
                {"name": o.name, "class": list(o.cls), **({"phase": o.phase} if o.phase is not None else {})}
                for o in self.objects.values()
            ],
            "shifts": [{"source": s, "n": n, "target": t} for s, n, t in self.shifts],
            "homs": [list(h) for h in self.homs],
            "triangles": [list(t) for t in self.triangles],
            "filtrations": dict(self.filtrations),
        }

    @classmethod
    def from_json(cls, doc: dict) -> "ToyCategory":
        allowed = {"rank", "objects", "shifts", "homs", "triangles", "filtrations", "charge"}
        extra = set(doc) - allowed
        if extra:
            raise MalformedCategoryError(f"unknown keys {sorted(extra)}")
        try:
            objs = {}
            for o in doc["objects"]:
                objs[o["name"]] = ToyObject(o["name"], tuple(int(v) for v in o["class"]), o.get("phase"))
            return cls(
                int(doc["rank"]),
                objs,
                [(s["source"], int(s["n"]), s["target"]) for s in doc.get("shifts", [])],
                [tuple(h) for h in doc.get("homs", [])],
                [tuple(t) for t in doc.get("triangles", [])],
                {k: list(v) for k, v in doc.get("filtrations", {}).items()},
            )
        except (KeyError, TypeError) as exc:
            raise MalformedCategoryError(f"malformed category document: {exc!r}") from exc


def _ray_defect(z: complex, phase: float) -> float:
    """Angle between ``z`` and the ray of slicing phase ``phase``."""
    if z == 0:
        return math.inf
    return abs(math.remainder(cmath.phase(z) - math.pi * phase, 2 * math.pi))


def check_axioms(cat: ToyCategory, charge: CentralCharge, tol: float = PHASE_TOL) -> dict:
    """Check the four slicing axioms on the data and list every violation.

    Returns
    -------
    dict
        ``{"ok": bool, "axioms": {"i": [...], "ii": [...], "iii": [...], "iv": [...]}}``
        where each list holds violation records with witnesses.
    """
    if charge.rank != cat.rank:
        raise MalformedCategoryError("charge rank differs from category rank")
    v = {"i": [], "ii": [], "iii": [], "iv": []}
    for o in cat.objects.values():
        if o.phase is None:
            continue
        d = _ray_defect(charge(o.cls), o.phase)
        if d > tol:
            v["i"].append({"object": o.name, "phase": o.phase, "Z": [charge(o.cls).real, charge(o.cls).imag],
                           "angle_defect": d})
    for s, n, t in cat.shifts:
        ps, pt = cat.objects[s].phase, cat.objects[t].phase
        if ps is None and pt is None:
            continue
        if ps is None or pt is None or abs(pt - ps - n) > tol:
            v["ii"].append({"source": s, "n": n, "target": t, "phase_source": ps, "phase_target": pt})
    for a, b in cat.homs:
        pa, pb = cat.objects[a].phase, cat.objects[b].phase
        if pa is not None and pb is not None and pa > pb + tol:
            v["iii"].append({"from": a, "to": b, "phase_from": pa, "phase_to": pb})
    for o in cat.objects.values():
        if o.phase is not None:
            continue
        factors = cat.filtrations.get(o.name)
        if not factors:
            v["iv"].append({"object": o.name, "reason": "no filtration listed"})
            continue
        phases = [cat.objects[f].phase for f in factors]
        if any(p is None for p in phases):
            v["iv"].append({"object": o.name, "reason": "factor outside the slicing", "factors": factors})
            continue
        if any(p <= q + tol for p, q in zip(phases, phases[1:])):
            v["iv"].append({"object": o.name, "reason": "phases not strictly decreasing",
                            "factors": factors, "phases": phases})
            continue
        total = sum((cat.cls(f) for f in factors), np.zeros(cat.rank, int))
        if not np.array_equal(total, cat.cls(o.name)):
            v["iv"].append({"object": o.name, "reason": "factor classes do not add up", "factors": factors})
    return {"ok": not any(v.values()), "axioms": v}


# ----------------------------------------------------------------------
# HN filtrations and (semi)stability

@dataclass(frozen=True)
class HNFactor:
    name: str
    cls: tuple
    phase: float


def _phase(cat, charge, name, alpha):
    return global_phase(charge, cat.cls(name), alpha)


def _max_destabilizer(cat, charge, name, alpha):
    """Subobject of maximal phase, ties broken by largest class norm, or None if semistable."""
    own = _phase(cat, charge, name, alpha)
    best = None
    for sub, quo in cat.subobjects(name):
        p = _phase(cat, charge, sub, alpha)
        key = (p, float(np.linalg.norm(cat.cls(sub))))
        if best is None or key[0] > best[0][0] + PHASE_TOL or (
            abs(key[0] - best[0][0]) <= PHASE_TOL and key[1] > best[0][1]
        ):
            best = (key, sub, quo)
    if best is None or best[0][0] <= own + PHASE_TOL:
        return None
    return best[1], best[2]


def hn_filtration(cat: ToyCategory, charge: CentralCharge, name: str, alpha: float) -> List[HNFactor]:
    """Greedy HN factors of ``name`` with strictly decreasing global phases.

    Raises
    ------
    MalformedCategoryError
        If the triangle table does not support a consistent filtration.
    """
    classes = [o.cls for o in cat.objects.values()]
    if not admissible_alpha(charge, classes, alpha):
        raise InadmissibleError(f"alpha = {alpha} is not admissible for this category")
    out: List[HNFactor] = []
    current = name
    seen = set()
    while True:
        if current in seen:
            raise MalformedCategoryError(f"cyclic subobject table at {current!r}")
        seen.add(current)
        split = _max_destabilizer(cat, charge, current, alpha)
        if split is None:
            out.append(HNFactor(current, cat.objects[current].cls, _phase(cat, charge, current, alpha)))
            break
        sub, quo = split
        # the destabilizer must itself be semistable
        if _max_destabilizer(cat, charge, sub, alpha) is not None:
            raise MalformedCategoryError(f"maximal destabilizer {sub!r} of {current!r} is not semistable")
        out.append(HNFactor(sub, cat.objects[sub].cls, _phase(cat, charge, sub, alpha)))
        current = quo
    for f, g in zip(out, out[1:]):
        if not f.phase > g.phase + PHASE_TOL:
            raise MalformedCategoryError("no decreasing-phase filtration exists for this lattice")
    return out


def hn_bruteforce(cat: ToyCategory, charge: CentralCharge, name: str, alpha: float):
    """All filtrations with semistable factors and strictly decreasing phases.

    Exhaustive over chains of triangles; exponential, meant as an oracle
    for small categories.
    """
    def semistable(n):
        own = _phase(cat, charge, n, alpha)
        return all(_phase(cat, charge, s, alpha) <= own + PHASE_TOL for s, _ in cat.subobjects(n))

    def chains(n, depth):
        if depth > len(cat.objects):
            return
        if semistable(n):
            yield [n]
        for sub, quo in cat.subobjects(n):
            if not semistable(sub):
                continue
            for rest in chains(quo, depth + 1):
                yield [sub] + rest

    found = []
    for ch in chains(name, 0):
        ph = [_phase(cat, charge, n, alpha) for n in ch]
        if all(p > q + PHASE_TOL for p, q in zip(ph, ph[1:])):
            found.append([HNFactor(n, cat.objects[n].cls, p) for n, p in zip(ch, ph)])
    return found


def semistability_test(cat: ToyCategory, charge: CentralCharge, name: str, alpha: float):
    """Classify ``name`` by scanning triangles ``L1 -> L -> L2``.

    Returns
    -------
    status : {"stable", "semistable", "unstable"}
    witness : tuple or None
        The triangle that decides the status.
    """
    status, witness = "stable", None
    for a, b, c in cat.triangles:
        if b != name:
            continue
        p1, p2 = _phase(cat, charge, a, alpha), _phase(cat, charge, c, alpha)
        if p1 > p2 + PHASE_TOL:
            return "unstable", (a, b, c)
        if abs(p1 - p2) <= PHASE_TOL and status == "stable":
            status, witness = "semistable", (a, b, c)
    return status, witness


# ----------------------------------------------------------------------
# random test categories

def random_uniserial_category(rng: np.random.Generator, max_objects: int = 6):
    """Random category of uniserial objects over 2 or 3 simples.

    Objects are words in the simples; subobjects are prefixes and quotients
    the matching suffixes, so HN filtrations exist and are unique.
    """
    k = int(rng.integers(2, 4))
    periods = [cmath.rect(float(rng.uniform(0.5, 2.0)), float(rng.uniform(0.05, 0.95)) * math.pi)
               for _ in range(k)]
    charge = CentralCharge(tuple(periods))
    words = set()
    while len(words) < max_objects:
        length = int(rng.integers(1, 4))
        w = tuple(int(v) for v in rng.integers(0, k, length))
        closure = {w[i:j] for i in range(len(w)) for j in range(i + 1, len(w) + 1)}
        if len(words | closure) > max_objects:
            if not words:
                continue
            break
        words |= closure
    name = lambda w: "".join("ABC"[i] for i in w)
    objs = {}
    for w in sorted(words, key=lambda w: (len(w), w)):
        cls = [0] * k
        for i in w:
            cls[i] += 1
        objs[name(w)] = ToyObject(name(w), tuple(cls))
    tris = [(name(w[:j]), name(w), name(w[j:])) for w in words for j in range(1, len(w))]
    cat = ToyCategory(k, objs, triangles=sorted(tris))
    return cat, charge
