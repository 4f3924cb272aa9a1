"""A wall-crossing in the flow, resolved by opening a neck.

The chain curve has three crossings.  The degree-1 crossing carries a
Novikov cochain whose valuation follows the teardrop-minus-bigon area.
When the valuation hits zero the crossing is smoothed and the flow goes on
with two exact figure-eights, which then collapse.
"""
from lmcflab.flow1d import FlowPolicy, build_curve, init_state, preset, run_with_surgeries

amb, loops, opt = preset("wall_chain")
state = init_state(build_curve(amb, loops, **opt))
for x in state.crossings:
    val = None if x.cochain is None else x.cochain.valuation()
    print(f"crossing {x.key}: degrees ({x.mu_pm}, {x.mu_mp}), valuation {val}")

trace = []


def watch(s, row):
    x = [c for c in s.crossings if c.cochain is not None]
    if x and s.curve.n_components == 1 and s.step % 200 == 0:
        trace.append((s.t, float(x[0].cochain.valuation()), x[0].potential_gap))


traj = run_with_surgeries(state, FlowPolicy(), horizon=1.0, callback=watch)
print("\n   t         valuation     potential gap")
for t, v, g in trace[::2]:
    print(f"{t:.5f}   {v: .6e}   {g: .6e}")

for e in traj.events:
    extra = {k: v for k, v in e.data.items() if k in ("key", "valuation", "components", "component")}
    print("event", e.kind, f"t = {e.t:.6f}", extra)
print("final status:", traj.status)
