"""Command line front end, installed as ``lmcf``.

Commands::

    lmcf soliton {angles|invert|sample|residual|asymptote|u1solve} [flags]
    lmcf flow {run|probe} SCENARIO.json [flags]
    lmcf stability {check|hn|phase} CATEGORY.json [flags]

Every invocation is turned into a :class:`Scenario`, validated, and run by
:func:`dispatch`, which returns a :class:`RunRecord`.  Exit codes are 0 on
success, 2 when a flow ends in a modelled terminal singularity and 1 on
errors.  ``LMCF_LOG`` sets the log level (``DEBUG``, ``INFO``, ...).
"""

from __future__ import annotations

import argparse
import csv
import hashlib
import io
import json
import logging
import math
import os
import sys
import time
from dataclasses import dataclass, field
from fractions import Fraction
from pathlib import Path
from typing import List, Optional

import jsonschema
import numpy as np

from . import __version__

log = logging.getLogger("lmcflab.cli")

EXIT_OK, EXIT_ERROR, EXIT_TERMINAL = 0, 1, 2
TERMINAL_STATUSES = ("obstructed-terminal", "singular-terminal")


class ScenarioError(ValueError):
    """Schema violation; the message starts with the offending field path."""


# ----------------------------------------------------------------------
# schemas

_NUM = {"type": "number"}
_POINT = {"type": "array", "items": _NUM, "minItems": 2, "maxItems": 2}
_CLASS = {"type": "array", "items": {"type": "integer"}, "minItems": 2, "maxItems": 2}

_POLICY_FIELDS = {
    "dt_factor": _NUM, "dt_safety": _NUM, "max_turn": _NUM, "h_target": _NUM,
    "min_vertices": {"type": "integer"}, "max_vertices": {"type": "integer"},
    "remesh": {"type": "boolean"}, "collapse_mesh_lengths": _NUM, "terminal_area": _NUM,
    "smoothing_radius": _NUM, "surgeries": {"type": "boolean"}, "record_every": {"type": "integer"},
    "snapshot_every": _NUM, "holonomy_sign": {"enum": [1, -1]}, "area_rtol": _NUM,
    "max_steps": {"type": "integer"}, "kappa_limit": _NUM,
}

FLOW_SCHEMA = {
    "type": "object",
    "additionalProperties": False,
    "required": ["ambient", "curve", "horizon"],
    "properties": {
        "kind": {"const": "flow"},
        "ambient": {
            "type": "object",
            "additionalProperties": False,
            "required": ["kind"],
            "properties": {"kind": {"enum": ["plane", "torus"]}, "tau": _POINT},
        },
        "curve": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "preset": {"type": "string"},
                "params": {"type": "object"},
                "loops": {"type": "array", "items": {"type": "array", "items": _POINT, "minItems": 32}},
                "periods": {"type": "array", "items": _CLASS},
                "holonomies": {"type": "array", "items": {"type": ["string", "number"]}},
                "graded": {"type": "boolean"},
                "exact": {"type": "boolean"},
            },
            "oneOf": [{"required": ["preset"]}, {"required": ["loops"]}],
        },
        "policy": {"type": "object", "additionalProperties": False, "properties": _POLICY_FIELDS},
        "horizon": {"type": "number", "exclusiveMinimum": 0},
        "seed": {"type": "integer"},
        "probe": {
            "type": "object",
            "additionalProperties": False,
            "properties": {"fit_fraction": _NUM, "min_points": {"type": "integer"},
                           "growth_threshold": _NUM},
        },
        "outputs": {
            "type": "object",
            "additionalProperties": False,
            "properties": {
                "csv": {"type": "string"},
                "events": {"type": "string"},
                "record": {"type": "string"},
                "probe": {"type": "string"},
                "frames": {
                    "type": "object",
                    "additionalProperties": False,
                    "required": ["directory", "interval"],
                    "properties": {"directory": {"type": "string"},
                                   "interval": {"type": "number", "exclusiveMinimum": 0}},
                },
            },
        },
    },
}


@dataclass
class Scenario:
    """A validated request: ``command`` is e.g. ``"flow run"``."""

    command: str
    params: dict
    outputs: dict = field(default_factory=dict)
    seed: Optional[int] = None
    base: Path = Path(".")

    def canonical(self) -> str:
        return json.dumps({"command": self.command, "params": self.params, "outputs": self.outputs,
                           "seed": self.seed}, sort_keys=True, default=str)

    @property
    def digest(self) -> str:
        return hashlib.sha256(self.canonical().encode()).hexdigest()

    def path(self, rel) -> Path:
        p = Path(rel)
        return p if p.is_absolute() else self.base / p


@dataclass
class RunRecord:
    scenario_hash: str
    version: str
    wall_clock: float
    outputs: List[str]
    status: str
    exit_code: int
    result: dict = field(default_factory=dict)

    def to_json(self) -> dict:
        return {"scenario_hash": self.scenario_hash, "version": self.version,
                "wall_clock": self.wall_clock, "outputs": self.outputs, "status": self.status,
                "exit_code": self.exit_code}


def _where(err) -> str:
    path = list(err.absolute_path)
    return ".".join(str(p) for p in path) or "<root>"


def validate(doc, schema, command: str) -> None:
    errs = sorted(jsonschema.Draft202012Validator(schema).iter_errors(doc),
                  key=lambda e: (len(list(e.absolute_path)), list(map(str, e.absolute_path))))
    if not errs:
        return
    e = errs[0]
    if e.validator == "required":
        missing = [k for k in e.validator_value if k not in e.instance]
        loc = _where(e)
        name = missing[0] if loc == "<root>" else f"{loc}.{missing[0]}"
        raise ScenarioError(f"{name}: required field is missing ({command})")
    if e.validator == "additionalProperties":
        extra = sorted(set(e.instance) - set(e.schema.get("properties", {})))
        loc = _where(e)
        name = extra[0] if loc == "<root>" else f"{loc}.{extra[0]}"
        raise ScenarioError(f"{name}: unknown field ({command})")
    if e.validator == "oneOf" and _where(e) == "curve":
        raise ScenarioError("curve: give exactly one of 'preset' or 'loops'")
    raise ScenarioError(f"{_where(e)}: {e.message}")


def parse_scenario(path, command: str = "flow run") -> Scenario:
    """Read and validate a flow scenario file.

    Raises
    ------
    ScenarioError
        On invalid JSON or a schema violation; the message names the field.
    OSError
        If the file cannot be read.
    """
    path = Path(path)
    text = path.read_text()
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ScenarioError(f"<root>: not valid JSON ({exc.msg} at line {exc.lineno})") from None
    validate(doc, FLOW_SCHEMA, command)
    doc = dict(doc)
    doc.pop("kind", None)
    outputs = doc.pop("outputs", {})
    seed = doc.pop("seed", None)
    return Scenario(command, doc, outputs, seed, path.parent)


# ----------------------------------------------------------------------
# flow

def _flow_curve(params):
    from .flow1d import AmbientSurface, build_curve, preset

    amb = AmbientSurface.from_json(params["ambient"])
    cdoc = params["curve"]
    if "preset" in cdoc:
        try:
            p_amb, loops, opt = preset(cdoc["preset"], **cdoc.get("params", {}))
        except KeyError as exc:
            raise ScenarioError(f"curve.preset: {exc.args[0]}") from None
        except TypeError as exc:
            raise ScenarioError(f"curve.params: {exc}") from None
        if p_amb.kind != amb.kind:
            raise ScenarioError(f"ambient.kind: preset {cdoc['preset']!r} lives on a {p_amb.kind}")
        amb = p_amb
        for k in ("graded", "exact"):
            if k in cdoc:
                opt[k] = cdoc[k]
    else:
        loops = [np.asarray(l, float) for l in cdoc["loops"]]
        opt = {"graded": cdoc.get("graded", True), "exact": cdoc.get("exact", False)}
        if "periods" in cdoc:
            opt["periods"] = [tuple(p) for p in cdoc["periods"]]
    if "holonomies" in cdoc:
        opt["holonomies"] = [Fraction(str(h)) for h in cdoc["holonomies"]]
    return build_curve(amb, loops, **opt)


def _run_flow(sc: Scenario):
    from .flow1d import FlowPolicy, run_with_surgeries

    policy = FlowPolicy(**sc.params.get("policy", {}))
    fr = sc.outputs.get("frames")
    if fr is not None and policy.snapshot_every is None:
        policy.snapshot_every = fr["interval"]
    curve = _flow_curve(sc.params)
    return run_with_surgeries(curve, policy, horizon=float(sc.params["horizon"]))


def _flow_outputs(sc: Scenario, traj) -> List[str]:
    from .flow1d import emit_frames, write_csv, write_events

    written = []
    if "csv" in sc.outputs:
        written.append(str(write_csv(traj, sc.path(sc.outputs["csv"]))))
    if "events" in sc.outputs:
        written.append(str(write_events(traj, sc.path(sc.outputs["events"]))))
    fr = sc.outputs.get("frames")
    if fr is not None:
        written += [str(p) for p in emit_frames(traj, fr["interval"], sc.path(fr["directory"]))]
    return written


def _cmd_flow_run(sc: Scenario):
    traj = _run_flow(sc)
    written = _flow_outputs(sc, traj)
    counts = {}
    for e in traj.events:
        counts[e.kind] = counts.get(e.kind, 0) + 1
    result = {"status": traj.status, "t": traj.final.t, "steps": traj.final.step, "events": counts,
              "T_estimate": traj.info.get("T_estimate")}
    return result, written, traj.status


def _probe_json(res) -> dict:
    return {"kind": res.kind, "T": res.T, "slope": res.slope, "decade_growth": res.decade_growth,
            "growth": res.growth}


def _cmd_flow_probe(sc: Scenario):
    from .flow1d import singularity_probe

    opts = sc.params.get("probe", {})
    if "series_csv" in sc.params:
        rows = [r for r in sc.path(sc.params["series_csv"]).read_text().splitlines() if not r.startswith("#")]
        data = list(csv.DictReader(rows))
        t = [float(r["t"]) for r in data]
        k = [float(r["kappa_max"]) for r in data]
        written, status = [], "probed"
    else:
        traj = _run_flow(sc)
        t, k = traj.series("t"), traj.series("kappa_max")
        written, status = _flow_outputs(sc, traj), traj.status
    res = singularity_probe(t, k, **opts)
    result = _probe_json(res)
    if "probe" in sc.outputs:
        p = sc.path(sc.outputs["probe"])
        p.write_text(json.dumps(result, sort_keys=True, indent=1) + "\n")
        written.append(str(p))
    return result, written, status


# ----------------------------------------------------------------------
# solitons

def _params(p):
    from .solitons import SolitonParams

    return SolitonParams(p["kind"], int(p["m"]), tuple(p.get("a", ())), float(p.get("alpha", 0.0)),
                         float(p.get("A", 0.0)))


def _cmd_soliton_angles(sc):
    from .solitons import family_angles

    ad = family_angles(_params(sc.params))
    return {"phi": [float(v) for v in ad.phi], "sum": float(np.sum(ad.phi)), "A": ad.A,
            "error": ad.error}, [], "ok"


def _cmd_soliton_invert(sc):
    from .solitons import family_invert

    p = sc.params
    a = family_invert(p["kind"], float(p.get("alpha", 0.0)), p["phi"], p.get("A"))
    return {"a": [float(v) for v in a]}, [], "ok"


def _grid(sc, params):
    from .solitons import default_grid

    p = sc.params
    return default_grid(params, n_y=int(p.get("n_y", 9)), n_x=int(p.get("n_x", 3)),
                        seed=int(sc.seed or 0), y_max=float(p.get("y_max", 2.0)))


def _cmd_soliton_sample(sc):
    from .solitons import soliton_sample

    params = _params(sc.params)
    rows = []
    for y, x in _grid(sc, params):
        s = soliton_sample(params, y, x)
        rows.append([s.y, *s.x, *[v for z in s.point for v in (z.real, z.imag)], s.theta])
    m = params.m
    nx = len(rows[0]) - 2 - 2 * m if rows else 0
    head = (["y"] + [f"x{i + 1}" for i in range(nx)]
            + [f"{p}{i + 1}" for i in range(m) for p in ("re", "im")] + ["theta"])
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(head)
    for r in rows:
        w.writerow(["" if v is None else repr(float(v)) for v in r])
    return {"csv": buf.getvalue(), "rows": len(rows)}, [], "ok"


def _cmd_soliton_residual(sc):
    from .solitons import soliton_residual

    params = _params(sc.params)
    r = soliton_residual(params, _grid(sc, params), h=float(sc.params.get("h", 1e-3)),
                         order=int(sc.params.get("order", 2)))
    return {"residual": r, "points": len(_grid(sc, params))}, [], "ok"


def _cmd_soliton_asymptote(sc):
    from .solitons import asymptotic_decay

    rho, radii, dist = asymptotic_decay(_params(sc.params), sc.params["radii"])
    return {"rho": rho, "radii": [float(v) for v in radii], "distance": [float(v) for v in dist]}, [], "ok"


U1_DATA = {
    "linear": lambda c: (lambda X, Y: c[0] + c[1] * X + c[2] * Y),
    "quadratic": lambda c: (lambda X, Y: c[0] * X * Y + c[1] * X**2 + c[2] * Y**2),
    "sincosh": lambda c: (lambda X, Y: np.sin(c[0] * X) * np.cosh(c[1] * Y) + c[2] * X * Y**2),
}


def _cmd_soliton_u1solve(sc):
    from .solitons import u1_solve

    p = sc.params
    c = list(p.get("coef", [])) + [0.0, 0.0, 0.0]
    n = int(p.get("n", 33))
    x = y = np.linspace(-1.0, 1.0, n)
    sol = u1_solve(x, y, U1_DATA[p.get("boundary", "linear")](c[:3]), float(p["a"]),
                   tol=float(p.get("tol", 1e-10)))
    return {"residual": sol.residual, "iterations": sol.iterations, "n": n,
            "center": float(sol.f[n // 2, n // 2]), "f": sol.f.tolist()}, [], "ok"


# ----------------------------------------------------------------------
# stability

def _category(sc):
    from .stability import CentralCharge, MalformedCategoryError, ToyCategory

    doc = json.loads(sc.path(sc.params["category"]).read_text())
    if "charge" not in doc:
        raise ScenarioError("charge: required field is missing (category document)")
    cat = ToyCategory.from_json(doc)
    return cat, CentralCharge.from_json(doc["charge"])


def _cmd_stability_check(sc):
    from .stability import check_axioms

    cat, Z = _category(sc)
    rep = check_axioms(cat, Z, tol=float(sc.params.get("tol", 1e-9)))
    return rep, [], "ok" if rep["ok"] else "violations"


def _cmd_stability_hn(sc):
    from .stability import hn_filtration, semistability_test

    cat, Z = _category(sc)
    alpha = float(sc.params.get("alpha", 0.0))
    names = [sc.params["object"]] if sc.params.get("object") else sorted(cat.objects)
    out = {}
    for name in names:
        chain = hn_filtration(cat, Z, name, alpha)
        verdict = semistability_test(cat, Z, name, alpha)
        out[name] = {"factors": [{"name": f.name, "class": list(map(int, f.cls)), "phase": f.phase}
                                 for f in chain],
                     "semistability": verdict[0] if isinstance(verdict, tuple) else verdict}
    return {"alpha": alpha, "objects": out}, [], "ok"


def _cmd_stability_phase(sc):
    from .stability import admissible_alpha, global_phase, slope

    cat, Z = _category(sc)
    alpha = float(sc.params.get("alpha", 0.0))
    classes = ({"query": tuple(sc.params["class"])} if sc.params.get("class")
               else {n: o.cls for n, o in sorted(cat.objects.items())})
    out = {}
    for name, c in classes.items():
        z = Z(c)
        rec = {"class": list(map(int, c)), "Z": [z.real, z.imag]}
        if admissible_alpha(Z, [c], alpha) and z != 0:
            rec["phase"] = global_phase(Z, c, alpha)
            try:
                rec["slope"] = slope(Z, c, alpha)
            except (ZeroDivisionError, ValueError):
                rec["slope"] = None
        else:
            rec["phase"] = None
        out[name] = rec
    return {"alpha": alpha, "phases": out}, [], "ok"


COMMANDS = {
    "soliton angles": _cmd_soliton_angles,
    "soliton invert": _cmd_soliton_invert,
    "soliton sample": _cmd_soliton_sample,
    "soliton residual": _cmd_soliton_residual,
    "soliton asymptote": _cmd_soliton_asymptote,
    "soliton u1solve": _cmd_soliton_u1solve,
    "flow run": _cmd_flow_run,
    "flow probe": _cmd_flow_probe,
    "stability check": _cmd_stability_check,
    "stability hn": _cmd_stability_hn,
    "stability phase": _cmd_stability_phase,
}


def _jsonable(x):
    if isinstance(x, dict):
        return {str(k): _jsonable(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_jsonable(v) for v in x]
    if isinstance(x, np.ndarray):
        return _jsonable(x.tolist())
    if isinstance(x, (np.floating, np.integer)):
        return x.item()
    if isinstance(x, Fraction):
        return str(x)
    if isinstance(x, complex):
        return [x.real, x.imag]
    if isinstance(x, float) and not math.isfinite(x):
        return str(x)
    return x


def dispatch(sc: Scenario) -> RunRecord:
    """Run a scenario and write its outputs.

    The command's result is written as JSON to ``outputs["result"]`` when
    given (CSV text for ``soliton sample``); ``outputs["record"]`` receives
    the run record.  Module errors propagate.
    """
    if sc.command not in COMMANDS:
        raise ScenarioError(f"command: unknown command {sc.command!r}")
    t0 = time.perf_counter()
    log.info("running %s (%s)", sc.command, sc.digest[:12])
    result, written, status = COMMANDS[sc.command](sc)
    result = _jsonable(result)
    if "result" in sc.outputs:
        p = sc.path(sc.outputs["result"])
        if sc.command == "soliton sample":
            p.write_text(result["csv"])
        else:
            p.write_text(json.dumps(result, sort_keys=True, indent=1) + "\n")
        written.append(str(p))
    code = EXIT_TERMINAL if status in TERMINAL_STATUSES else EXIT_OK
    rec = RunRecord(sc.digest, __version__, time.perf_counter() - t0, written, status, code, result)
    if "record" in sc.outputs:
        p = sc.path(sc.outputs["record"])
        rec.outputs.append(str(p))
        p.write_text(json.dumps(rec.to_json(), sort_keys=True, indent=1) + "\n")
    return rec


# ----------------------------------------------------------------------
# argument parsing

def _floats(text):
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}") from None


def _ints(text):
    try:
        return [int(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated integers, got {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="lmcf", description=__doc__.split("\n\n")[0], allow_abbrev=False)
    ap.add_argument("--version", action="version", version=f"lmcf {__version__}")
    top = ap.add_subparsers(dest="group", required=True)

    def outputs(p):
        p.add_argument("--output", help="write the result here (JSON, CSV for samples)")
        p.add_argument("--record", help="write the run record here")

    sol = top.add_parser("soliton", help="soliton families", allow_abbrev=False)
    ss = sol.add_subparsers(dest="command", required=True)

    def family(p, need_a=True):
        p.add_argument("--kind", default="lawlor",
                       choices=["lawlor", "expander", "translator", "grim_reaper", "hl_cone", "hl_L1"])
        p.add_argument("--m", type=int, required=True)
        p.add_argument("--a", type=_floats, required=need_a, default=[])
        p.add_argument("--alpha", type=float, default=0.0)
        p.add_argument("--area", type=float, default=0.0, help="the constant A of hl_L1")

    p = ss.add_parser("angles", allow_abbrev=False)
    family(p)
    outputs(p)
    p = ss.add_parser("invert", allow_abbrev=False)
    p.add_argument("--kind", default="lawlor", choices=["lawlor", "expander", "translator"])
    p.add_argument("--alpha", type=float, default=0.0)
    p.add_argument("--phi", type=_floats, required=True)
    p.add_argument("--area", type=float, default=None, help="neck area (lawlor only)")
    outputs(p)
    for name in ("sample", "residual"):
        p = ss.add_parser(name, allow_abbrev=False)
        family(p, need_a=False)
        p.add_argument("--n-y", type=int, default=9)
        p.add_argument("--n-x", type=int, default=3)
        p.add_argument("--y-max", type=float, default=2.0)
        p.add_argument("--seed", type=int, default=0)
        if name == "residual":
            p.add_argument("--h", type=float, default=1e-3)
            p.add_argument("--order", type=int, default=2, choices=[2, 4])
        outputs(p)
    p = ss.add_parser("asymptote", allow_abbrev=False)
    family(p)
    p.add_argument("--radii", type=_floats, default=[5, 10, 20, 50])
    outputs(p)
    p = ss.add_parser("u1solve", allow_abbrev=False)
    p.add_argument("--a", type=float, required=True)
    p.add_argument("--n", type=int, default=33)
    p.add_argument("--boundary", choices=sorted(U1_DATA), default="linear")
    p.add_argument("--coef", type=_floats, default=[0.0, 1.0, 0.0])
    p.add_argument("--tol", type=float, default=1e-10)
    outputs(p)

    fl = top.add_parser("flow", help="curve flow scenarios", allow_abbrev=False)
    fs = fl.add_subparsers(dest="command", required=True)
    p = fs.add_parser("run", allow_abbrev=False)
    p.add_argument("scenario")
    p.add_argument("--output-dir", help="directory for relative output paths")
    outputs(p)
    p = fs.add_parser("probe", allow_abbrev=False)
    p.add_argument("scenario", nargs="?")
    p.add_argument("--series", help="probe the t/kappa_max columns of a flow CSV instead")
    p.add_argument("--output-dir")
    outputs(p)

    st = top.add_parser("stability", help="stability toolkit", allow_abbrev=False)
    sts = st.add_subparsers(dest="command", required=True)
    for name in ("check", "hn", "phase"):
        p = sts.add_parser(name, allow_abbrev=False)
        p.add_argument("category")
        if name == "check":
            p.add_argument("--tol", type=float, default=1e-9)
        else:
            p.add_argument("--alpha", type=float, default=0.0)
        if name == "hn":
            p.add_argument("--object")
        if name == "phase":
            p.add_argument("--class", dest="klass", type=_ints)
        outputs(p)
    return ap


def scenario_from_args(args) -> Scenario:
    cmd = f"{args.group} {args.command}"
    outs = {}
    if getattr(args, "output", None):
        outs["result"] = args.output
    if getattr(args, "record", None):
        outs["record"] = args.record
    if args.group == "flow":
        if args.command == "probe" and args.series:
            sc = Scenario(cmd, {"series_csv": str(Path(args.series).resolve())})
        elif args.scenario is None:
            raise ScenarioError("scenario: give a scenario file or --series")
        else:
            sc = parse_scenario(args.scenario, cmd)
        if args.output_dir:
            sc.base = Path(args.output_dir)
            sc.base.mkdir(parents=True, exist_ok=True)
        sc.outputs.update({k: str(Path(v).resolve()) for k, v in outs.items()})
        return sc
    if args.group == "stability":
        params = {"category": str(Path(args.category).resolve())}
        for k in ("tol", "alpha", "object"):
            if getattr(args, k, None) is not None:
                params[k] = getattr(args, k)
        if getattr(args, "klass", None):
            params["class"] = args.klass
        return Scenario(cmd, params, outs)
    v = vars(args)
    params = {}
    for k in ("kind", "m", "a", "alpha", "phi", "radii", "n_y", "n_x", "y_max", "h", "order",
              "n", "boundary", "coef", "tol"):
        if v.get(k) is not None:
            params[k] = v[k]
    if args.command == "u1solve":
        params.pop("kind", None)
    if v.get("area") is not None:
        params["A"] = v["area"]
    return Scenario(cmd, params, outs, v.get("seed"))


def _print_result(sc, rec, stream):
    res = rec.result
    if sc.command == "soliton sample" and "result" not in sc.outputs:
        stream.write(res["csv"])
        return
    if sc.command == "soliton u1solve":
        res = {k: v for k, v in res.items() if k != "f"}
    if sc.command == "soliton sample":
        res = {"rows": res["rows"]}
    stream.write(json.dumps(res, sort_keys=True, indent=1) + "\n")


def main(argv=None) -> int:
    level = os.environ.get("LMCF_LOG", "WARNING").upper()
    logging.basicConfig(level=getattr(logging, level, logging.WARNING), stream=sys.stderr,
                        format="%(levelname)s %(name)s: %(message)s")
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code in (0, None) else EXIT_ERROR
    try:
        sc = scenario_from_args(args)
        rec = dispatch(sc)
    except Exception as exc:  # every failure maps to exit code 1
        log.debug("failure", exc_info=True)
        print(f"lmcf: error: {type(exc).__name__}: {exc}", file=sys.stderr)
        return EXIT_ERROR
    _print_result(sc, rec, sys.stdout)
    log.info("record %s", json.dumps(rec.to_json(), sort_keys=True))
    return rec.exit_code


if __name__ == "__main__":
    sys.exit(main())
