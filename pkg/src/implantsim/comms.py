"""Backscatter uplink and galvanic impulse link: channel laws and frame transfer.

Both links are threshold-detected at frame level; there is no per-bit error
model.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass, replace
from pathlib import Path
from typing import Optional, Sequence, Tuple

from .errors import ConfigurationError, PreconditionError
from .harvester import (
    DEFAULT_PULSE_ENERGY, LOAD_NAMES, HarvesterState, Phase, advance, galvanic_pulse_budget,
)


@dataclass(frozen=True)
class BackscatterLinkModel:
    """Linear-in-dB backscatter decay anchored at a detectability depth.

    ``anchor_rx_dbm`` is the subcarrier power at ``anchor_depth_cm`` for
    ``reference_tx_dbm``; ``None`` places it exactly on the detection
    threshold (``noise_floor_dbm + detection_snr_db``).
    """

    slope_db_per_cm: float = 2.9
    anchor_depth_cm: float = 8.5
    anchor_rx_dbm: Optional[float] = None
    reference_tx_dbm: float = 23.0
    subcarrier_freq: float = 100e3
    duty: float = 0.5
    reader_isolation_db: float = -25.0
    noise_floor_dbm: float = -100.0
    detection_snr_db: float = 10.0

    def __post_init__(self):
        if self.slope_db_per_cm <= 0:
            raise ValueError("slope must be > 0 dB/cm")
        if not (0 < self.duty < 1):
            raise ValueError("duty must be in (0, 1)")

    @property
    def threshold_dbm(self) -> float:
        return self.noise_floor_dbm + self.detection_snr_db

    @property
    def anchor_dbm(self) -> float:
        return self.threshold_dbm if self.anchor_rx_dbm is None else self.anchor_rx_dbm

    @property
    def intercept_db(self) -> float:
        """Subcarrier power at depth 0 relative to the reader TX power."""
        return self.anchor_dbm - self.reference_tx_dbm + self.slope_db_per_cm * self.anchor_depth_cm

    @property
    def intercept_p0_dbm(self) -> float:
        """Subcarrier power at depth 0 for the reference TX power."""
        return self.reference_tx_dbm + self.intercept_db


@dataclass(frozen=True)
class GalvanicLinkModel:
    """Received impulse amplitude ``a1 * sqrt(E/E_ref) * d**-exponent``.

    ``amplitude_at_1cm`` only sets the scale; the detector threshold defaults
    to the amplitude of a reference pulse at ``max_range_cm``.
    """

    amplitude_at_1cm: float = 20e-3  # V
    exponent: float = 3.0
    max_range_cm: float = 5.0
    pulse_energy: float = DEFAULT_PULSE_ENERGY
    reference_pulse_energy: float = DEFAULT_PULSE_ENERGY
    detector_threshold: Optional[float] = None

    def __post_init__(self):
        if self.exponent <= 0 or self.amplitude_at_1cm <= 0:
            raise ValueError("amplitude and exponent must be > 0")

    def amplitude(self, distance_cm: float, pulse_energy: Optional[float] = None) -> float:
        e = self.pulse_energy if pulse_energy is None else pulse_energy
        scale = 1.0 if e == self.reference_pulse_energy else math.sqrt(e / self.reference_pulse_energy)
        return self.amplitude_at_1cm * scale * distance_cm ** (-self.exponent)

    @property
    def threshold(self) -> float:
        if self.detector_threshold is not None:
            return self.detector_threshold
        return self.amplitude(self.max_range_cm, self.reference_pulse_energy)


@dataclass(frozen=True)
class Bitstream:
    bits: Tuple[int, ...]
    rate: float  # bit/s

    def __post_init__(self):
        object.__setattr__(self, "bits", tuple(int(b) for b in self.bits))
        if self.rate <= 0:
            raise ValueError("bit rate must be > 0")

    def __len__(self):
        return len(self.bits)

    @property
    def duration(self) -> float:
        return len(self.bits) / self.rate

    @classmethod
    def zeros(cls, n: int, rate: float) -> "Bitstream":
        return cls((0,) * n, rate)


@dataclass(frozen=True)
class DetectionResult:
    """Outcome of a detection or frame transfer.

    ``margin`` is in dB for backscatter and volts for galvanic.
    ``energy_spent`` is the harvester ledger outflow over the frame
    (load consumption plus emitted pulses).
    """

    detected: bool
    margin: float
    delivered_bits: int = 0
    energy_spent: float = 0.0
    received: float = math.nan  # dBm or V
    self_interference_dbm: Optional[float] = None
    pulses: int = 0
    emitted_energy: float = 0.0
    aborted: bool = False

    def __post_init__(self):
        if self.detected and self.margin < 0:
            raise AssertionError("detected with negative margin")


# --- backscatter -------------------------------------------------------------

def backscatter_rx_dbm(model: BackscatterLinkModel, P_tx_dbm: float, depth_cm: float) -> float:
    """Subcarrier sideband power at the reader (dBm)."""
    if depth_cm < 0:
        raise ValueError("depth must be >= 0")
    return (model.anchor_dbm + (P_tx_dbm - model.reference_tx_dbm)
            - model.slope_db_per_cm * (depth_cm - model.anchor_depth_cm))


def backscatter_detect(model: BackscatterLinkModel, P_tx_dbm: float, depth_cm: float) -> DetectionResult:
    """Threshold detection of the subcarrier.

    Carrier leakage between the bistatic reader antennas is reported but not
    applied: the subcarrier sits off the carrier frequency.
    """
    p = backscatter_rx_dbm(model, P_tx_dbm, depth_cm)
    margin = p - model.threshold_dbm
    return DetectionResult(margin >= 0, margin, received=p,
                           self_interference_dbm=P_tx_dbm + model.reader_isolation_db)


def _ledger_outflow(s: HarvesterState) -> float:
    return s.ledger.consumed_by_load + s.ledger.emitted_galvanic


def transmit_frame_backscatter(model: BackscatterLinkModel, bits: Bitstream, P_tx_dbm: float,
                               depth_cm: float, harvester: HarvesterState, p_dc: float = 0.0,
                               loads=LOAD_NAMES) -> Tuple[DetectionResult, HarvesterState]:
    """Send one backscatter frame; all bits arrive or none do.

    The harvester runs its loads for the frame duration while harvesting only
    in the absorb half of the duty cycle (``p_dc * duty``).  A frame during
    which the electronics drop out of RUNNING is lost.
    """
    if harvester.phase is not Phase.RUNNING:
        raise PreconditionError(f"harvester must be RUNNING to backscatter, is {harvester.phase.value}")
    if bits.rate > model.subcarrier_freq / 2:
        raise ConfigurationError(f"bit rate {bits.rate:g} exceeds subcarrier/2 = {model.subcarrier_freq / 2:g}")
    det = backscatter_detect(model, P_tx_dbm, depth_cm)
    if len(bits) == 0:
        return replace(det, delivered_bits=0, energy_spent=0.0), harvester
    before = _ledger_outflow(harvester)
    after, transitions = advance(harvester, bits.duration, p_dc * model.duty, loads)
    aborted = any(ph is not Phase.RUNNING for _, ph in transitions)
    delivered = len(bits) if det.detected and not aborted else 0
    return replace(det, delivered_bits=delivered, energy_spent=_ledger_outflow(after) - before,
                   aborted=aborted), after


# --- galvanic ------------------------------------------------------------------

def galvanic_rx_detect(model: GalvanicLinkModel, distance_cm: float,
                       pulse_energy: Optional[float] = None) -> DetectionResult:
    if distance_cm <= 0:
        raise ValueError("distance must be > 0")
    a = model.amplitude(distance_cm, pulse_energy)
    margin = a - model.threshold
    return DetectionResult(margin >= 0, margin, received=a)


def transmit_frame_galvanic(model: GalvanicLinkModel, bits: Bitstream, distance_cm: float,
                            harvester: HarvesterState, p_dc: float = 0.0,
                            loads=LOAD_NAMES) -> Tuple[DetectionResult, HarvesterState]:
    """Send a frame as one capacitor-discharge pulse per bit.

    Each bit period opens with a pulse and then harvests/consumes for the rest
    of the period.  Transmission stops early (partial frame) once a pulse
    would pull the capacitor below the stop threshold or the electronics drop
    out of RUNNING.
    """
    if harvester.phase is not Phase.RUNNING:
        raise PreconditionError(f"harvester must be RUNNING for galvanic pulses, is {harvester.phase.value}")
    det = galvanic_rx_detect(model, distance_cm)
    before = _ledger_outflow(harvester)
    s = harvester
    pulses = 0
    aborted = False
    for _ in bits.bits:
        ok, s = galvanic_pulse_budget(s, model.pulse_energy)
        if not ok:
            aborted = True
            break
        pulses += 1
        s, transitions = advance(s, 1.0 / bits.rate, p_dc, loads)
        if s.phase is not Phase.RUNNING:
            aborted = pulses < len(bits)
            break
    delivered = pulses if det.detected else 0
    return replace(det, delivered_bits=delivered, energy_spent=_ledger_outflow(s) - before,
                   pulses=pulses, emitted_energy=pulses * model.pulse_energy, aborted=aborted), s


# --- sweeps --------------------------------------------------------------------

def backscatter_sweep_csv(model: BackscatterLinkModel, P_tx_dbm: float, depths_cm: Sequence[float],
                          out=None, with_margin: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["depth_cm", "p_rx_dbm", "margin_db", "detected"] if with_margin
               else ["depth_cm", "p_rx_dbm", "detected"])
    for d in depths_cm:
        r = backscatter_detect(model, P_tx_dbm, d)
        row = [f"{d:.6g}", f"{r.received:.6g}"]
        if with_margin:
            row.append(f"{r.margin:.6g}")
        row.append(str(r.detected).lower())
        w.writerow(row)
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text


def galvanic_sweep_csv(model: GalvanicLinkModel, distances_cm: Sequence[float], out=None) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["distance_cm", "margin", "detected"])
    for d in distances_cm:
        r = galvanic_rx_detect(model, d)
        w.writerow([f"{d:.6g}", f"{r.margin:.6g}", str(r.detected).lower()])
    text = buf.getvalue()
    if out is not None:
        Path(out).write_text(text)
    return text
