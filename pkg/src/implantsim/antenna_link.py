"""Antenna impedance tables, L-section matching and on-body to implant coupling."""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, field
from functools import lru_cache
from importlib import resources
from pathlib import Path
from typing import Optional

import numpy as np
from scipy.optimize import brentq

from .errors import DesignError, RangeError
from .tissue_em.layers import LayerStack, muscle_stack
from .tissue_em.tmm import loss_at_depth

IMPLANT_SEPARATIONS_MM = (5, 10, 20, 30, 40)
ONBODY_SEPARATIONS_MM = (30, 50, 70, 100)

MICS_FREQ = 401e6


@dataclass(frozen=True)
class ImpedanceTable:
    """Tabulated antenna impedance; frequencies strictly increasing, R > 0."""

    freq_hz: np.ndarray
    r_ohm: np.ndarray
    x_ohm: np.ndarray

    def __post_init__(self):
        f = np.asarray(self.freq_hz, dtype=float)
        r = np.asarray(self.r_ohm, dtype=float)
        x = np.asarray(self.x_ohm, dtype=float)
        if not (f.shape == r.shape == x.shape) or f.ndim != 1 or f.size < 2:
            raise ValueError("impedance table needs matching 1-D columns with >= 2 rows")
        if np.any(np.diff(f) <= 0):
            raise ValueError("table frequencies must be strictly increasing")
        if np.any(r <= 0):
            raise ValueError("table resistance must be > 0")
        for name, v in (("freq_hz", f), ("r_ohm", r), ("x_ohm", x)):
            v.setflags(write=False)
            object.__setattr__(self, name, v)

    def covers(self, f_lo: float = 100e6, f_hi: float = 700e6) -> bool:
        return self.freq_hz[0] <= f_lo and self.freq_hz[-1] >= f_hi


def read_impedance_csv(source) -> ImpedanceTable:
    """Parse ``freq_hz, r_ohm, x_ohm`` CSV (``#`` lines are comments).

    ``source`` is a path, or CSV text when it is a string containing a newline.
    """
    if isinstance(source, str) and "\n" in source:
        text = source
    else:
        text = Path(source).read_text()
    lines = [ln for ln in text.splitlines() if ln.strip() and not ln.lstrip().startswith("#")]
    rows = list(csv.DictReader(lines, skipinitialspace=True))
    return ImpedanceTable(
        np.array([float(r["freq_hz"]) for r in rows]),
        np.array([float(r["r_ohm"]) for r in rows]),
        np.array([float(r["x_ohm"]) for r in rows]),
    )


def write_impedance_csv(table: ImpedanceTable, path) -> None:
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "r_ohm", "x_ohm"])
        for row in zip(table.freq_hz, table.r_ohm, table.x_ohm):
            w.writerow([f"{v:.6g}" for v in row])


@lru_cache(maxsize=None)
def _bundled_table(name: str) -> ImpedanceTable:
    return read_impedance_csv(resources.files("implantsim.data").joinpath(name).read_text())


@dataclass(frozen=True)
class ImplantAntennaSpec:
    """Two-electrode capacitively coupled implant antenna (dimensions in mm)."""

    impedance_table: ImpedanceTable = field(default_factory=lambda: _bundled_table("implant_20mm.csv"))
    separation_L: float = 20.0
    electrode_diameter: float = 7.0
    electrode_thickness: float = 1.0
    coupling_gap: float = 0.1

    def __post_init__(self):
        if not self.impedance_table.covers():
            raise ValueError("impedance table must cover 100-700 MHz")


@dataclass(frozen=True)
class OnBodyAntennaSpec:
    """Pair of square patches fed from the centre (dimensions in mm)."""

    impedance_table: ImpedanceTable = field(default_factory=lambda: _bundled_table("onbody_100mm.csv"))
    separation: float = 100.0
    patch_size: float = 15.0
    tissue_gap: float = 1.0

    def __post_init__(self):
        if not self.impedance_table.covers():
            raise ValueError("impedance table must cover 100-700 MHz")


def impedance_at(spec, f: float):
    """Linearly interpolated ``(R, X)`` of an antenna spec at ``f`` Hz."""
    t = spec.impedance_table if hasattr(spec, "impedance_table") else spec
    if f < t.freq_hz[0] or f > t.freq_hz[-1]:
        raise RangeError(f"{f:g} Hz outside impedance table [{t.freq_hz[0]:g}, {t.freq_hz[-1]:g}]")
    return float(np.interp(f, t.freq_hz, t.r_ohm)), float(np.interp(f, t.freq_hz, t.x_ohm))


# --- matching ----------------------------------------------------------------

@dataclass(frozen=True)
class MatchingNetwork:
    """Lossless two-element L-section between an antenna and a resistive load.

    ``series_L_shunt_C``: antenna -- series L -- (shunt C || r_load); raises
    the impedance level.  ``shunt_C_series_L``: (antenna || shunt C) -- series
    L -- r_load; lowers it.  ``loaded_Q`` is the section's node Q
    (``|X|/R`` of the series branch at ``f0``); the doubly terminated -3 dB
    bandwidth is about ``2*f0/loaded_Q``.
    """

    f0: float
    loaded_Q: float
    topology: str
    inductance: float  # H
    capacitance: float  # F
    r_load: float
    z_ant: complex

    def _zl(self, f):
        return 1j * 2 * np.pi * f * self.inductance

    def _yc(self, f):
        return 1j * 2 * np.pi * f * self.capacitance

    def input_impedance(self, f):
        """Impedance seen by the antenna looking into network + load."""
        if self.topology == "series_L_shunt_C":
            return self._zl(f) + 1 / (self._yc(f) + 1 / self.r_load)
        return 1 / (self._yc(f) + 1 / (self._zl(f) + self.r_load))

    def output_impedance(self, f):
        """Impedance seen by the load looking back into network + antenna."""
        if self.topology == "series_L_shunt_C":
            return 1 / (self._yc(f) + 1 / (self.z_ant + self._zl(f)))
        return self._zl(f) + 1 / (self._yc(f) + 1 / self.z_ant)

    def reflection(self, f):
        """Power-wave reflection coefficient at the antenna port."""
        zin = self.input_impedance(f)
        return (zin - np.conj(self.z_ant)) / (zin + self.z_ant)

    def transducer_gain(self, f):
        return 1 - np.abs(self.reflection(f)) ** 2

    def resonant_frequency(self) -> float:
        """Frequency near ``f0`` where the output impedance is purely real."""
        if self.inductance == 0 and self.capacitance == 0:
            return self.f0
        g = lambda f: np.imag(self.output_impedance(f))
        return float(brentq(g, 0.8 * self.f0, 1.2 * self.f0, xtol=1e-6))

    def bandwidth(self) -> float:
        """-3 dB bandwidth of the transducer gain (Hz)."""
        g = lambda f: self.transducer_gain(f) - 0.5
        lo = brentq(g, 1e-3 * self.f0, self.f0)
        hi = brentq(g, self.f0, 1e3 * self.f0)
        return float(hi - lo)


TOPOLOGIES = ("series_L_shunt_C", "shunt_C_series_L")


def design_match(R_ant: float, X_ant: float, f0: float, Q_target: float,
                 topology: str = "series_L_shunt_C", r_load: Optional[float] = None) -> MatchingNetwork:
    """Design an L-section presenting a conjugate match to ``R_ant + jX_ant``.

    With ``r_load=None`` the load resistance is chosen so the section has
    node Q ``Q_target`` (``R_ant*(1+Q^2)`` for the step-up topology).  With an
    explicit ``r_load`` the section Q is fixed by the impedance ratio and must
    lie within 10% of ``Q_target``.

    Raises
    ------
    DesignError
        The requested Q cannot be realised; the message names the bound.
    """
    if R_ant <= 0:
        raise ValueError("R_ant must be > 0")
    if Q_target < 1:
        raise ValueError("Q_target must be >= 1")
    if topology not in TOPOLOGIES:
        raise ValueError(f"unknown topology {topology!r}")
    w = 2 * np.pi * f0
    z_ant = complex(R_ant, X_ant)

    if topology == "series_L_shunt_C":
        if r_load is None:
            q = Q_target
            r_load = R_ant * (1 + q * q)
        else:
            if r_load < R_ant:
                raise DesignError(f"step-up section needs r_load >= R_ant = {R_ant:g} ohm")
            q = math.sqrt(r_load / R_ant - 1)
        x_l = q * R_ant - X_ant
        if x_l < 0:
            raise DesignError(f"series inductor would be negative: Q must be >= X_ant/R_ant = {X_ant / R_ant:.4g}")
        b_c = q / r_load
    else:
        y = 1 / z_ant
        g_p, b_p = y.real, y.imag
        r_p = 1 / g_p
        if r_load is None:
            q = Q_target
            r_load = r_p / (1 + q * q)
        else:
            if r_load > r_p:
                raise DesignError(f"step-down section needs r_load <= {r_p:g} ohm")
            q = math.sqrt(r_p / r_load - 1)
        b_c = q * g_p - b_p
        if b_c < 0:
            raise DesignError(f"shunt capacitor would be negative: Q must be >= {b_p / g_p:.4g}")
        x_l = q * r_load

    degenerate = q == 0 and X_ant == 0
    if not degenerate and abs(q - Q_target) > 0.1 * Q_target:
        raise DesignError(
            f"an L-section between {R_ant:g} ohm and {r_load:g} ohm has Q = {q:.4g}; "
            f"Q_target {Q_target:g} needs r_load = {R_ant * (1 + Q_target ** 2):.6g} ohm")
    return MatchingNetwork(f0, q, topology, x_l / w, b_c / w, float(r_load), z_ant)


def boosted_voltage(P_avail: float, R_ant: float, Q: float) -> float:
    """Peak voltage at the rectifier input of a resonant-boost voltage doubler.

    ``2 * sqrt(2) * Q * sqrt(P_avail * R_ant)``: RMS antenna voltage magnified
    by Q, converted to peak, doubled.  Diode drops are not included.
    """
    if P_avail < 0 or R_ant <= 0 or Q <= 0:
        raise ValueError("P_avail >= 0, R_ant > 0 and Q > 0 required")
    return 2 * math.sqrt(2) * Q * math.sqrt(P_avail * R_ant)


# --- coupling ----------------------------------------------------------------

@dataclass(frozen=True)
class CouplingModel:
    """Lumped antenna/interface term on top of plane-wave tissue loss.

    ``C0(f) = c0_anchor_db + freq_slope_db_per_decade * log10(f / anchor_freq)``
    clipped at 0 dB.  The default slope of 40 dB/decade stands for the
    radiation efficiency of two electrically small antennas, each rising as
    f^2; set it to 0 for a frequency-flat term.
    """

    c0_anchor_db: float
    anchor_freq: float = MICS_FREQ
    freq_slope_db_per_decade: float = 40.0

    def __post_init__(self):
        if self.c0_anchor_db > 0:
            raise ValueError("C0 must be <= 0 dB (passive)")

    def c0(self, f) -> float:
        v = self.c0_anchor_db + self.freq_slope_db_per_decade * np.log10(np.asarray(f, float) / self.anchor_freq)
        v = np.minimum(v, 0.0)
        return float(v) if np.ndim(v) == 0 else v

    @classmethod
    def calibrate(cls, stack: LayerStack, f: float = MICS_FREQ, depth_mm: float = 100.0,
                  target_db: float = -33.0, **kw) -> "CouplingModel":
        """Fix C0 so that ``coupling_db(stack, f, depth_mm) == target_db``."""
        return cls(target_db + loss_at_depth(stack, f, depth_mm), anchor_freq=f, **kw)


def default_coupling(stack: Optional[LayerStack] = None) -> CouplingModel:
    """C0 calibrated to -33 dB at 401 MHz and 100 mm in ``stack`` (muscle by default).

    -33 dB turns the 200 mW reader output into the -10 dBm received at 10 cm.
    """
    return CouplingModel.calibrate(stack or muscle_stack())


def coupling_db(model: CouplingModel, stack: LayerStack, f: float, depth_mm: float) -> float:
    """One-way coupling from the on-body port to the implant port (dB)."""
    if depth_mm == 0:
        return model.c0(f)
    return model.c0(f) - loss_at_depth(stack, f, depth_mm)


def received_power_dbm(P_tx_dbm: float, coupling: float) -> float:
    return P_tx_dbm + coupling


def coupling_sweep_csv(model: CouplingModel, stack: LayerStack, freqs, depths_mm, out=None) -> str:
    """``freq_hz, depth_mm, coupling_db`` rows; returns the text and writes ``out`` if given."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["freq_hz", "depth_mm", "coupling_db"])
    for f in freqs:
        for d in depths_mm:
            w.writerow([f"{f:.6g}", f"{d:.6g}", f"{coupling_db(model, stack, f, d):.6g}"])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
