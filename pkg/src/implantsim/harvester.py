"""Implant energy chain: rectifier, storage capacitor and threshold-gated loads.

There is no regulator.  The capacitor charges from a constant-power rectifier
model; the electronics switch on when the capacitor voltage crosses
``v_start`` upward and off when it falls below ``v_stop``.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Iterable, List, Optional, Tuple

from .errors import ConfigurationError
from .units import dbm_to_w

V_START = 1.8
V_STOP = 1.65
MAX_STEP = 1e-6
DEFAULT_PULSE_ENERGY = 85e-12

LOAD_NAMES = ("oscillator", "rf_switch", "sensor")


class Phase(str, Enum):
    OFF = "OFF"
    CHARGING = "CHARGING"
    RUNNING = "RUNNING"


@dataclass(frozen=True)
class RectifierSpec:
    efficiency: float = 0.40
    sensitivity_floor_dbm: float = -25.0
    diode_drop: float = 0.15  # V per diode; the doubler has two

    def __post_init__(self):
        if not (0 < self.efficiency <= 1):
            raise ValueError("rectifier efficiency must be in (0, 1]")


def rectify(spec: RectifierSpec, P_rf: float) -> float:
    """DC power out of the rectifier for ``P_rf`` watts in (0 below the floor)."""
    if P_rf < 0:
        raise ValueError("P_rf must be >= 0")
    if P_rf == 0 or P_rf < dbm_to_w(spec.sensitivity_floor_dbm):
        return 0.0
    return spec.efficiency * P_rf


@dataclass(frozen=True)
class StorageCap:
    capacitance: float = 330e-12
    voltage: float = 0.0
    leakage: float = 0.0  # W
    v_max: Optional[float] = None  # optional clamp; excess charge is booked as clipped

    def __post_init__(self):
        if self.voltage < 0:
            raise ValueError("capacitor voltage must be >= 0")

    @property
    def energy(self) -> float:
        return 0.5 * self.capacitance * self.voltage**2

    def energy_at(self, v: float) -> float:
        return 0.5 * self.capacitance * v * v

    def with_energy(self, e: float) -> "StorageCap":
        return replace(self, voltage=math.sqrt(2 * max(e, 0.0) / self.capacitance))


@dataclass(frozen=True)
class Load:
    power: float
    min_voltage: float

    def __post_init__(self):
        if self.power < 0:
            raise ValueError("load power must be >= 0")


@dataclass(frozen=True)
class LoadSpec:
    """MEMS oscillator, RF switch and an optional sensor (0-35 uW)."""

    oscillator: Load = Load(3e-6, 1.8)
    rf_switch: Load = Load(165e-9, 1.65)
    sensor: Load = Load(0.0, 1.65)

    def get(self, name: str) -> Load:
        return getattr(self, name)

    @property
    def idle_power(self) -> float:
        """Oscillator plus switch, the always-on draw while RUNNING."""
        return self.oscillator.power + self.rf_switch.power


@dataclass(frozen=True)
class EnergyLedger:
    harvested: float = 0.0
    consumed_by_load: float = 0.0
    emitted_galvanic: float = 0.0
    leaked: float = 0.0
    clipped: float = 0.0

    def residual(self, stored_delta: float) -> float:
        """``harvested - outflows - stored_delta``; zero for a balanced ledger."""
        return (self.harvested - self.consumed_by_load - self.emitted_galvanic
                - self.leaked - self.clipped - stored_delta)


@dataclass(frozen=True)
class HarvesterState:
    phase: Phase = Phase.OFF
    cap: StorageCap = field(default_factory=StorageCap)
    ledger: EnergyLedger = field(default_factory=EnergyLedger)
    loads: LoadSpec = field(default_factory=LoadSpec)
    v_start: float = V_START
    v_stop: float = V_STOP

    @property
    def voltage(self) -> float:
        return self.cap.voltage


def active_loads(state: HarvesterState, requested: Iterable[str]) -> Tuple[str, ...]:
    """Loads that actually draw power in ``state``.

    Nothing runs outside RUNNING.  Loads whose minimum voltage is within the
    start threshold run for the whole RUNNING interval (they were satisfied on
    entry and the stop threshold protects the lowest-voltage part); loads
    needing more than ``v_start`` are gated on their own minimum.
    """
    if state.phase is not Phase.RUNNING:
        return ()
    out = []
    for name in LOAD_NAMES:
        if name in requested:
            ld = state.loads.get(name)
            if ld.min_voltage > state.v_start and state.cap.voltage < ld.min_voltage:
                continue
            out.append(name)
    return tuple(out)


def load_power(state: HarvesterState, requested: Iterable[str]) -> float:
    return sum(state.loads.get(n).power for n in active_loads(state, requested))


def _next_phase(state: HarvesterState, v_new: float, p_dc: float) -> Phase:
    if state.phase is Phase.RUNNING:
        return Phase.CHARGING if v_new < state.v_stop else Phase.RUNNING
    if v_new >= state.v_start:
        return Phase.RUNNING
    if v_new == 0 and p_dc == 0:
        return Phase.OFF
    return Phase.CHARGING


def _apply(state: HarvesterState, dt: float, p_dc: float, requested) -> HarvesterState:
    cap = state.cap
    e0 = cap.energy
    e_in = p_dc * dt
    e_load = load_power(state, requested) * dt
    e_leak = cap.leakage * dt
    e1 = e0 + e_in - e_load - e_leak
    if e1 < 0:
        # shortfall: loads get what is left first, then leakage
        short = -e1
        cut = min(short, e_load)
        e_load -= cut
        e_leak -= short - cut
        e1 = 0.0
    clipped = 0.0
    if cap.v_max is not None:
        e_cap = cap.energy_at(cap.v_max)
        if e1 > e_cap:
            clipped, e1 = e1 - e_cap, e_cap
    new_cap = cap.with_energy(e1)
    # the V -> E -> V round trip can move V by an ulp against the energy change
    if (e1 >= e0 and new_cap.voltage < cap.voltage) or (e1 <= e0 and new_cap.voltage > cap.voltage):
        new_cap = cap
    lg = state.ledger
    ledger = EnergyLedger(lg.harvested + e_in, lg.consumed_by_load + e_load, lg.emitted_galvanic,
                          lg.leaked + e_leak, lg.clipped + clipped)
    return replace(state, cap=new_cap, ledger=ledger, phase=_next_phase(state, new_cap.voltage, p_dc))


def step(state: HarvesterState, dt: float, P_dc: float, loads_active=LOAD_NAMES) -> HarvesterState:
    """Advance the harvester by ``dt`` seconds (``0 < dt <= 1 us``) at constant power.

    Load power is evaluated from the phase at the start of the step; the phase
    is updated from the voltage at its end.
    """
    if not (0 < dt <= MAX_STEP):
        raise ConfigurationError(f"dt must be in (0, {MAX_STEP}] s, got {dt}")
    if P_dc < 0:
        raise ValueError("P_dc must be >= 0")
    return _apply(state, dt, P_dc, set(loads_active))


def advance(state: HarvesterState, duration: float, P_dc: float,
            loads_active=LOAD_NAMES) -> Tuple[HarvesterState, List[Tuple[float, Phase]]]:
    """Advance over an arbitrary ``duration`` with exact threshold crossings.

    Power is piecewise constant between crossings, so the interval is split
    where the voltage reaches ``v_start`` or ``v_stop`` instead of being
    stepped.  Returns the final state and ``(time_offset, new_phase)`` for every
    phase change.
    """
    if duration < 0:
        raise ValueError("duration must be >= 0")
    requested = set(loads_active)
    transitions = []
    t = 0.0
    s = state
    if s.phase is Phase.OFF and (P_dc > 0 or s.cap.voltage > 0):
        s = replace(s, phase=Phase.CHARGING)
        transitions.append((0.0, Phase.CHARGING))
    for _ in range(10_000_000):
        remaining = duration - t
        if remaining <= 0:
            break
        p_net = P_dc - load_power(s, requested) - s.cap.leakage
        e = s.cap.energy
        t_cross = math.inf
        if s.phase is Phase.RUNNING and p_net < 0:
            t_cross = max(e - s.cap.energy_at(s.v_stop), 0.0) / -p_net
        elif s.phase is not Phase.RUNNING and p_net > 0:
            t_cross = max(s.cap.energy_at(s.v_start) - e, 0.0) / p_net
        seg = min(remaining, t_cross)
        crossing = t_cross <= remaining
        before = s.phase
        s = _apply(s, seg, P_dc, requested)
        if crossing:
            # land exactly on the threshold to avoid rounding short of it
            v_hit = s.v_stop if before is Phase.RUNNING else s.v_start
            s = replace(s, cap=replace(s.cap, voltage=v_hit),
                        ledger=s.ledger, phase=Phase.CHARGING if before is Phase.RUNNING else Phase.RUNNING)
            s = _rebalance(s, state)
        t += seg
        if s.phase is not before:
            transitions.append((t, s.phase))
    return s, transitions


def _rebalance(s: HarvesterState, origin: HarvesterState) -> HarvesterState:
    """Book the rounding difference from snapping onto a threshold as clipped energy."""
    resid = s.ledger.residual(s.cap.energy - origin.cap.energy) - origin.ledger.residual(0.0)
    return replace(s, ledger=replace(s.ledger, clipped=s.ledger.clipped + resid))


def time_to_voltage(capacitance: float, v0: float, v1: float, p_net: float) -> float:
    """Closed-form time for a constant net power to move the cap from v0 to v1."""
    de = 0.5 * capacitance * (v1 * v1 - v0 * v0)
    if de == 0:
        return 0.0
    if p_net == 0 or (de > 0) != (p_net > 0):
        return math.inf
    return de / p_net


def sustainable_load(P_dc: float, base_loads: LoadSpec = LoadSpec(), switch_duty: float = 1.0,
                     margin: float = 0.0) -> float:
    """Largest steady sensor power the harvested DC power can carry."""
    if P_dc < 0:
        raise ValueError("P_dc must be >= 0")
    spare = P_dc - base_loads.oscillator.power - base_loads.rf_switch.power * switch_duty - margin
    # sub-attowatt residue is rounding, not headroom
    return spare if spare > 1e-18 else 0.0


def galvanic_pulse_budget(state: HarvesterState, pulse_energy: float = DEFAULT_PULSE_ENERGY):
    """Try to discharge ``pulse_energy`` joules through the galvanic electrode.

    Allowed only if the capacitor stays at or above ``v_stop``.  Returns
    ``(allowed, new_state)``; the state is unchanged when refused.
    """
    if pulse_energy < 0:
        raise ValueError("pulse_energy must be >= 0")
    if pulse_energy == 0:
        return True, state
    e_after = state.cap.energy - pulse_energy
    if e_after < state.cap.energy_at(state.v_stop):
        return False, state
    lg = state.ledger
    # stored energy is derived from voltage; book the sqrt rounding so the ledger stays exact
    new_cap = state.cap.with_energy(e_after)
    drift = (state.cap.energy - new_cap.energy) - pulse_energy
    ledger = replace(lg, emitted_galvanic=lg.emitted_galvanic + pulse_energy, clipped=lg.clipped + drift)
    return True, replace(state, cap=new_cap, ledger=ledger)


def trajectory(state: HarvesterState, duration: float, P_dc: float, dt: float = MAX_STEP,
               loads_active=LOAD_NAMES):
    """Fixed-step trajectory rows ``(t_us, v_cap, phase, p_dc_uw, p_load_uw)`` and the final state."""
    rows = [(0.0, state.voltage, state.phase.value, P_dc * 1e6, load_power(state, loads_active) * 1e6)]
    n = int(math.ceil(duration / dt - 1e-9))
    s = state
    for k in range(1, n + 1):
        p_load = load_power(s, loads_active)
        s = step(s, dt, P_dc, loads_active)
        rows.append((k * dt * 1e6, s.voltage, s.phase.value, P_dc * 1e6, p_load * 1e6))
    return rows, s


def write_trajectory_csv(rows, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t_us", "v_cap", "phase", "p_dc_uw", "p_load_uw"])
        for t, v, ph, pdc, pl in rows:
            w.writerow([f"{t:.6g}", f"{v:.6g}", ph, f"{pdc:.6g}", f"{pl:.6g}"])
