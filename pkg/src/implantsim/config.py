"""Run configuration: JSON file merged over the defaults profile, plus overrides.

A single file fully determines a run.  Sections mirror the profile in
:mod:`implantsim.defaults`; the optional ``scenario`` section describes a
network for the simulate command.  Validation collects every problem instead
of stopping at the first.
"""

from __future__ import annotations

import json
import math
import os
from importlib import resources
from pathlib import Path
from typing import List, Optional, Sequence, Tuple

import numpy as np

from .antenna_link import CouplingModel, ImplantAntennaSpec
from .comms import BackscatterLinkModel, Bitstream, GalvanicLinkModel
from .defaults import PROFILE_VERSION, profile
from .errors import ValidationError
from .harvester import Load, LoadSpec, RectifierSpec, StorageCap
from .netsim import ImplantNodeConfig, NodeConfig, Scenario, TrafficItem, schedule_tdma, validate
from .tissue_em.layers import LayerStack, muscle_stack, skin_fat_muscle_stack

CONFIG_ENV = "IMPLANTSIM_CONFIG"
BAND = (100e6, 700e6)


def _merge(base: dict, extra: dict) -> dict:
    out = dict(base)
    for k, v in extra.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def load_config(path=None, env: Optional[dict] = None) -> dict:
    """Profile defaults overlaid with ``path`` (or the file named by ``$IMPLANTSIM_CONFIG``).

    Raises ``OSError`` for unreadable files and ``ValidationError`` for
    malformed JSON.
    """
    env = os.environ if env is None else env
    path = path or env.get(CONFIG_ENV) or None
    cfg = profile()
    if path is None:
        return cfg
    text = Path(path).read_text()
    try:
        user = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ValidationError([f"{path}: invalid JSON ({exc})"]) from None
    if not isinstance(user, dict):
        raise ValidationError([f"{path}: top level must be an object"])
    return _merge(cfg, user)


def apply_overrides(cfg: dict, overrides: Sequence[str]) -> dict:
    """Apply ``section.key=value`` overrides; values are parsed as JSON when possible."""
    errs = []
    cfg = json.loads(json.dumps(cfg))
    for ov in overrides:
        key, sep, raw = ov.partition("=")
        if not sep or not key:
            errs.append(f"override {ov!r}: expected KEY=VALUE")
            continue
        try:
            val = json.loads(raw)
        except json.JSONDecodeError:
            val = raw
        node = cfg
        parts = key.split(".")
        for p in parts[:-1]:
            if not isinstance(node.get(p), dict):
                node[p] = {}
            node = node[p]
        node[parts[-1]] = val
    if errs:
        raise ValidationError(errs)
    return cfg


def _unknown_keys(cfg: dict, ref: dict, prefix: str = "") -> List[str]:
    errs = []
    for k, v in cfg.items():
        name = f"{prefix}{k}"
        if k not in ref:
            errs.append(f"unknown key {name!r}")
        elif isinstance(ref[k], dict) and isinstance(v, dict):
            errs.extend(_unknown_keys(v, ref[k], name + "."))
        elif isinstance(ref[k], dict):
            errs.append(f"{name}: expected a section")
    return errs


def _num(errs: List[str], cfg: dict, path: str, positive: bool = False, allow_none: bool = False,
         allow_neg_inf: bool = False) -> Optional[float]:
    node = cfg
    for p in path.split("."):
        node = node.get(p) if isinstance(node, dict) else None
    if node is None and allow_none:
        return None
    if isinstance(node, str) and allow_neg_inf and node.strip().lower() in ("-inf", "off"):
        return -math.inf
    if isinstance(node, bool) or not isinstance(node, (int, float)):
        errs.append(f"{path}: expected a number, got {node!r}")
        return None
    if not math.isfinite(node) and not (allow_neg_inf and node == -math.inf):
        errs.append(f"{path}: must be finite")
        return None
    if positive and not node > 0:
        errs.append(f"{path}: must be > 0")
    return float(node)


def axis(spec: dict) -> np.ndarray:
    """Inclusive ``start..stop`` grid with the given step."""
    n = int(math.floor((spec["stop"] - spec["start"]) / spec["step"] + 1e-9))
    return spec["start"] + spec["step"] * np.arange(n + 1)


def validate_config(cfg: dict) -> List[str]:
    """All problems with ``cfg`` (empty when it can be built)."""
    ref = profile()
    errs = _unknown_keys({k: v for k, v in cfg.items() if k != "scenario"}, ref)
    if cfg.get("profile_version") != PROFILE_VERSION:
        errs.append(f"profile_version must be {PROFILE_VERSION}")
    seed = cfg.get("seed")
    if isinstance(seed, bool) or not isinstance(seed, int) or seed < 0:
        errs.append("seed: expected a non-negative integer")
    if cfg.get("stack", {}).get("kind") not in ("muscle", "skin_fat_muscle"):
        errs.append("stack.kind: expected 'muscle' or 'skin_fat_muscle'")
    for p in ("stack.skin_mm", "stack.fat_mm", "link.carrier_hz", "link.matching_q",
              "link.coupling_anchor_depth_mm", "harvester.capacitance", "harvester.v_start",
              "harvester.v_stop", "backscatter.slope_db_per_cm", "backscatter.subcarrier_freq",
              "galvanic.amplitude_at_1cm", "galvanic.exponent", "galvanic.max_range_cm",
              "galvanic.reference_pulse_energy", "linkbudget.galvanic_distance_cm"):
        _num(errs, cfg, p, positive=True)
    _num(errs, cfg, "link.p_tx_dbm", allow_neg_inf=True)
    for p in ("link.coupling_target_db", "link.freq_slope_db_per_decade", "link.startup_tolerance",
              "harvester.efficiency", "harvester.sensitivity_floor_dbm", "harvester.diode_drop",
              "harvester.leakage", "harvester.oscillator_w", "harvester.rf_switch_w", "harvester.sensor_w",
              "backscatter.anchor_depth_cm", "backscatter.reference_tx_dbm", "backscatter.duty",
              "backscatter.reader_isolation_db", "backscatter.noise_floor_dbm",
              "backscatter.detection_snr_db", "galvanic.pulse_energy", "linkbudget.depth_mm"):
        _num(errs, cfg, p)
    _num(errs, cfg, "backscatter.anchor_rx_dbm", allow_none=True)
    _num(errs, cfg, "galvanic.detector_threshold", allow_none=True, positive=True)
    carrier = cfg.get("link", {}).get("carrier_hz")
    if isinstance(carrier, (int, float)) and not (BAND[0] <= carrier <= BAND[1]):
        errs.append("link.carrier_hz: must lie within 100-700 MHz")
    freqs = cfg.get("sweep", {}).get("freqs_hz")
    if not isinstance(freqs, list) or not freqs:
        errs.append("sweep.freqs_hz: expected a non-empty list")
    else:
        for f in freqs:
            if isinstance(f, bool) or not isinstance(f, (int, float)) or not (BAND[0] <= f <= BAND[1]):
                errs.append(f"sweep.freqs_hz: {f!r} outside 100-700 MHz")
    for ax in ("depth_mm", "depth_cm"):
        for k in ("start", "stop", "step"):
            _num(errs, cfg, f"sweep.{ax}.{k}", positive=(k == "step"))
        a = cfg.get("sweep", {}).get(ax, {})
        if isinstance(a, dict) and all(isinstance(a.get(k), (int, float)) for k in ("start", "stop")):
            if a["start"] < 0 or a["stop"] < a["start"]:
                errs.append(f"sweep.{ax}: need 0 <= start <= stop")
    if not errs:
        try:
            build_models(cfg)
        except (ValueError, TypeError) as exc:
            errs.append(str(exc))
    return errs


# --- builders ------------------------------------------------------------------

def build_stack(cfg: dict) -> LayerStack:
    s = cfg["stack"]
    if s["kind"] == "muscle":
        return muscle_stack()
    return skin_fat_muscle_stack(s["skin_mm"], s["fat_mm"])


def build_rectifier(cfg: dict) -> RectifierSpec:
    h = cfg["harvester"]
    return RectifierSpec(h["efficiency"], h["sensitivity_floor_dbm"], h["diode_drop"])


def build_loads(cfg: dict) -> LoadSpec:
    h = cfg["harvester"]
    return LoadSpec(Load(h["oscillator_w"], h["v_start"]), Load(h["rf_switch_w"], h["v_stop"]),
                    Load(h["sensor_w"], h["v_stop"]))


def build_implant(cfg: dict, matching_q: Optional[float] = None) -> ImplantNodeConfig:
    h = cfg["harvester"]
    return ImplantNodeConfig(ImplantAntennaSpec(), cfg["link"]["matching_q"] if matching_q is None else matching_q,
                             build_rectifier(cfg), StorageCap(h["capacitance"], 0.0, h["leakage"]),
                             build_loads(cfg), h["v_start"], h["v_stop"])


def build_coupling(cfg: dict, stack: LayerStack) -> CouplingModel:
    ln = cfg["link"]
    return CouplingModel.calibrate(stack, ln["carrier_hz"], ln["coupling_anchor_depth_mm"],
                                   ln["coupling_target_db"],
                                   freq_slope_db_per_decade=ln["freq_slope_db_per_decade"])


def build_models(cfg: dict) -> Tuple[LayerStack, CouplingModel, BackscatterLinkModel, GalvanicLinkModel]:
    stack = build_stack(cfg)
    return (stack, build_coupling(cfg, stack), BackscatterLinkModel(**cfg["backscatter"]),
            GalvanicLinkModel(**cfg["galvanic"]))


def _bits(spec, k: int) -> Tuple[int, ...]:
    if isinstance(spec, str):
        if not spec or set(spec) - {"0", "1"}:
            raise ValueError(f"traffic[{k}].bits: expected a 0/1 string")
        return tuple(int(c) for c in spec)
    if isinstance(spec, int) and not isinstance(spec, bool) and spec > 0:
        return tuple(i % 2 for i in range(spec))
    raise ValueError(f"traffic[{k}].bits: expected a positive count or a 0/1 string")


def default_scenario_dict() -> dict:
    return json.loads(resources.files("implantsim.data").joinpath("default_scenario.json").read_text())


def build_scenario(cfg: dict, sc: Optional[dict] = None) -> Scenario:
    """Scenario from a config and a scenario section (bundled default when both are absent)."""
    if sc is None:
        sc = cfg.get("scenario") or default_scenario_dict()
    errs: List[str] = []
    stack, coupling, bs, gal = build_models(cfg)
    ln = cfg["link"]
    nodes = []
    for k, nd in enumerate(sc.get("nodes", [])):
        try:
            kind = nd["kind"]
            pos = tuple(float(v) for v in nd.get("position_mm", (0, 0, 0)))
            if len(pos) != 3:
                raise ValueError("position_mm needs 3 components")
            if kind == "reader":
                p_tx = nd.get("p_tx_dbm", ln["p_tx_dbm"])
                p_tx = -math.inf if isinstance(p_tx, str) and p_tx.lower() in ("-inf", "off") else float(p_tx)
                nodes.append(NodeConfig(str(nd["id"]), kind, pos, p_tx_dbm=p_tx,
                                        carrier=float(nd.get("carrier_hz", ln["carrier_hz"])),
                                        bistatic_separation=float(nd.get("bistatic_separation_mm", 50.0))))
            else:
                nodes.append(NodeConfig(str(nd["id"]), kind, pos,
                                        implant=build_implant(cfg, nd.get("matching_q"))))
        except (KeyError, ValueError, TypeError) as exc:
            errs.append(f"nodes[{k}]: {exc.__class__.__name__}: {exc}")
    traffic = []
    for k, tr in enumerate(sc.get("traffic", [])):
        try:
            frame = Bitstream(_bits(tr["bits"], k), float(tr["rate_bps"]))
            repeat = int(tr.get("repeat", 1))
            period = float(tr.get("period_s", 0.0))
            if repeat < 1 or (repeat > 1 and period <= 0):
                raise ValueError("repeat needs a positive period_s")
            for r in range(repeat):
                traffic.append(TrafficItem(float(tr["t_s"]) + r * period, str(tr["source"]), frame, tr["link"]))
        except (KeyError, ValueError, TypeError) as exc:
            errs.append(f"traffic[{k}]: {exc.__class__.__name__}: {exc}")
    if errs:
        raise ValidationError(errs)
    slot = sc.get("tdma_slot_s")
    tdma = schedule_tdma(nodes, float(slot)) if slot else None
    scenario = Scenario(
        tuple(nodes), tuple(traffic), float(sc.get("duration_s", 1e-3)), stack, coupling, bs, gal,
        int(cfg["seed"]), tdma, float(sc.get("traffic_jitter_s", 0.0)),
        None if sc.get("sample_interval_s") is None else float(sc["sample_interval_s"]))
    errs = validate(scenario)
    if errs:
        raise ValidationError(errs)
    return scenario
