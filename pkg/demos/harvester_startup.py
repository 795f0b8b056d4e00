"""Cold start and brown-out of the 330 pF storage capacitor.

At 40 uW the capacitor reaches the 1.8 V start threshold in about 13.4 us.
With the field removed, the idle loads pull it down to 1.65 V in about 27 us.
"""

from implantsim.harvester import HarvesterState, Phase, StorageCap, advance, sustainable_load, trajectory

rows, s = trajectory(HarvesterState(), 16e-6, 40e-6, dt=1e-6)
for t_us, v, phase, *_ in rows[::3]:
    print(f"t = {t_us:5.1f} us  V = {v:.3f} V  {phase}")

_, tr = advance(HarvesterState(), 50e-6, 40e-6)
print("\ncold start transitions:", [(f"{t * 1e6:.3f} us", ph.value) for t, ph in tr])

s = HarvesterState(phase=Phase.RUNNING, cap=StorageCap(330e-12, 1.8))
s, tr = advance(s, 60e-6, 0.0)
print("brown-out transitions:", [(f"{t * 1e6:.2f} us", ph.value) for t, ph in tr])
print(f"ledger: consumed {s.ledger.consumed_by_load * 1e12:.1f} pJ")

print(f"\nsustainable sensor load at 40 uW: {sustainable_load(40e-6) * 1e6:.3f} uW")
