"""Curve shortening of figure-eight curves, exact and not.

Unequal loops: the smaller teardrop is obstructed and pinches off.  Equal
loops: the curve is exact, unobstructed, and shrinks away in one piece.
"""
from lmcflab.flow1d import (FlowPolicy, build_curve, obstruction_status, preset, run_with_surgeries,
                            singularity_probe)

for a1, a2 in [(0.5, 0.2), (0.3, 0.3)]:
    amb, loops, opt = preset("infinity", a1=a1, a2=a2, n=128)
    curve = build_curve(amb, loops, **opt)
    rep = obstruction_status(curve)
    print(f"\nloops {a1}/{a2}: exact={curve.exact}, obstruction={rep.status}")

    traj = run_with_surgeries(curve, FlowPolicy(), horizon=1.0)
    print("  status:", traj.status, "at t =", round(traj.final.t, 6), "after", traj.final.step, "steps")
    for e in traj.events:
        print("  event", e.kind, "t =", round(e.t, 6))

    # the two teardrops lose area at the rates the turning angle predicts
    first = traj.samples[0]["faces"]
    for lab, f in sorted(first.items()):
        print(f"  {lab}: area {f['area']:.4f}, predicted rate {f['rate']:.4f}")

    if traj.status == "obstructed-terminal":
        res = singularity_probe(traj.series("t"), traj.series("kappa_max"))
        print(f"  blow-up type {res.kind}, T ~ {res.T:.6f}, q growth near T {res.growth:.2f}")
