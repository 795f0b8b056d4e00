"""From reader TX power to the voltage the implant rectifier sees.

Walks the coupling model down in depth, then designs the Q=10 matching
network for the 35 ohm implant antenna and reports the boosted voltage.
"""

from implantsim.antenna_link import (
    ImplantAntennaSpec, boosted_voltage, coupling_db, default_coupling, design_match, impedance_at,
    received_power_dbm,
)
from implantsim.tissue_em import muscle_stack
from implantsim.units import dbm_to_w

model, stack = default_coupling(), muscle_stack()
print(f"C0 at 401 MHz = {model.c0(401e6):.2f} dB")
for d in (0, 50, 80, 100, 150):
    c = coupling_db(model, stack, 401e6, d)
    print(f"depth {d:3d} mm: coupling {c:7.2f} dB, received {received_power_dbm(23.0, c):7.2f} dBm")

r, x = impedance_at(ImplantAntennaSpec(), 401e6)
net = design_match(r, x, 401e6, 10.0)
print(f"\nmatch for {r:.0f}{x:+.0f}j ohm: L = {net.inductance * 1e9:.2f} nH, C = {net.capacitance * 1e12:.2f} pF, "
      f"Q = {net.loaded_Q:.1f}, -3 dB bandwidth {net.bandwidth() / 1e6:.1f} MHz")
p_rf = dbm_to_w(-10.0)
print(f"boosted voltage at -10 dBm: {boosted_voltage(p_rf, r, 10.0):.3f} V (start threshold 1.8 V)")
