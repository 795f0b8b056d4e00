"""The bundled reader / hub / peripheral scenario.

The reader powers both implants; the hub sends backscatter frames to the
reader and galvanic frames to the peripheral 4 cm away, in 2 ms TDMA slots.
"""

from implantsim.config import build_scenario, load_config
from implantsim.netsim import run, summarize

trace = run(build_scenario(load_config(env={})))
for e in trace.events:
    if e.kind in ("phase_transition", "frame_end"):
        info = e.info
        what = info.get("phase") or f"{info['link']} {info['delivered']}/{info['bits']} bits -> {info['receivers'] or '-'}"
        print(f"{e.t_ns / 1e3:9.3f} us  {e.node:7s} {e.kind:17s} {what}")

print()
for r in summarize(trace):
    epb = "n/a" if r.energy_per_bit is None else f"{r.energy_per_bit * 1e9:.2f} nJ/bit"
    print(f"{r.node:7s} delivered {r.delivered_bits:4d} bits, {epb}, availability {r.availability:.3f}")
