"""Command line: parametric sweeps, link-budget report and network simulation.

Exit codes: 0 success, 2 invalid configuration (every violation is listed on
stderr), 3 I/O failure.
"""

from __future__ import annotations

import argparse
import json
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass
from pathlib import Path
from typing import Optional, Sequence

from . import __version__
from .antenna_link import boosted_voltage, coupling_db, impedance_at
from .comms import backscatter_detect, backscatter_sweep_csv, galvanic_rx_detect
from .config import (
    apply_overrides, axis, build_implant, build_models, build_scenario, load_config, validate_config,
)
from .errors import ImplantSimError, ValidationError
from .harvester import HarvesterState, StorageCap, galvanic_pulse_budget, rectify, sustainable_load
from .netsim import events_csv, metrics_csv, run, summary_json
from .units import dbm_to_w

EXIT_OK, EXIT_INVALID, EXIT_IO = 0, 2, 3

DEPTH_COLUMNS = ("freq_hz", "depth_mm", "coupling_db", "p_rx_dbm", "p_dc_uw", "v_boost", "sustainable_sensor_uw")


def _g(v: float) -> str:
    return f"{v:.6g}"


# --- link budget -------------------------------------------------------------------

@dataclass(frozen=True)
class LinkBudget:
    depth_mm: float
    p_tx_dbm: float
    coupling_db: float
    p_rx_dbm: float
    p_dc_w: float
    v_boost: float
    startup_ok: bool
    sustainable_sensor_w: float
    backscatter_margin_db: float
    pulses_per_charge: int
    pulse_rate_hz: float  # sustained galvanic pulse rate from the harvested surplus
    galvanic_detected: bool


def link_budget(cfg: dict, depth_mm: Optional[float] = None) -> LinkBudget:
    """The reader-to-implant chain at one depth.

    Startup passes when the boosted rectifier voltage reaches ``v_start``
    within the boost model's stated accuracy (``link.startup_tolerance``) and
    the harvested power exceeds the idle draw.
    """
    stack, coupling, bs, gal = build_models(cfg)
    ln = cfg["link"]
    d = cfg["linkbudget"]["depth_mm"] if depth_mm is None else depth_mm
    implant = build_implant(cfg)
    c = coupling_db(coupling, stack, ln["carrier_hz"], d)
    p_rx = ln["p_tx_dbm"] + c
    p_rf = dbm_to_w(p_rx)
    p_dc = rectify(implant.rectifier, p_rf)
    r_ant, _ = impedance_at(implant.antenna, ln["carrier_hz"])
    v_boost = boosted_voltage(p_rf, r_ant, implant.matching_Q)
    idle = implant.loads.idle_power
    ok = v_boost >= (1 - ln["startup_tolerance"]) * implant.v_start and p_dc > idle
    st = HarvesterState(cap=StorageCap(implant.cap.capacitance, implant.v_start), loads=implant.loads,
                        v_start=implant.v_start, v_stop=implant.v_stop)
    pulses = 0
    while gal.pulse_energy > 0 and pulses < 10_000:
        allowed, st = galvanic_pulse_budget(st, gal.pulse_energy)
        if not allowed:
            break
        pulses += 1
    surplus = p_dc - idle
    rate = surplus / gal.pulse_energy if surplus > 0 and gal.pulse_energy > 0 else 0.0
    return LinkBudget(d, ln["p_tx_dbm"], c, p_rx, p_dc, v_boost, ok, sustainable_load(p_dc, implant.loads),
                      backscatter_detect(bs, ln["p_tx_dbm"], d / 10).margin, pulses, rate,
                      galvanic_rx_detect(gal, cfg["linkbudget"]["galvanic_distance_cm"]).detected)


def format_link_budget(lb: LinkBudget, cfg: dict) -> str:
    v_start = cfg["harvester"]["v_start"]
    rows = [
        ("depth", _g(lb.depth_mm), "mm"),
        ("TX power", _g(lb.p_tx_dbm), "dBm"),
        ("coupling", _g(lb.coupling_db), "dB"),
        ("RX power", _g(lb.p_rx_dbm), "dBm"),
        ("DC power", _g(lb.p_dc_w * 1e6), "uW"),
        ("boosted voltage", _g(lb.v_boost), "V"),
        ("startup threshold", ("pass" if lb.startup_ok else "fail") + f" (v_start {v_start:g} V)", ""),
        ("sustainable sensor", _g(lb.sustainable_sensor_w * 1e6), "uW"),
        ("backscatter margin", _g(lb.backscatter_margin_db), "dB"),
        ("galvanic pulses per charge", str(lb.pulses_per_charge), ""),
        ("galvanic sustained rate", _g(lb.pulse_rate_hz), "pulse/s"),
        (f"galvanic at {cfg['linkbudget']['galvanic_distance_cm']:g} cm",
         "detected" if lb.galvanic_detected else "not detected", ""),
    ]
    w = max(len(r[0]) for r in rows)
    return "\n".join(f"{name:<{w}}  {val} {unit}".rstrip() for name, val, unit in rows) + "\n"


# --- sweeps -------------------------------------------------------------------------

def _depth_row(job):
    cfg, f, d = job
    stack, coupling, _, _ = build_models(cfg)
    implant = build_implant(cfg)
    c = coupling_db(coupling, stack, f, d)
    p_rx = cfg["link"]["p_tx_dbm"] + c
    p_rf = dbm_to_w(p_rx)
    p_dc = rectify(implant.rectifier, p_rf)
    r_ant, _ = impedance_at(implant.antenna, f)
    v = boosted_voltage(p_rf, r_ant, implant.matching_Q)
    return (f, d, c, p_rx, p_dc * 1e6, v, sustainable_load(p_dc, implant.loads) * 1e6)


def sweep_depth_csv(cfg: dict, workers: int = 1) -> str:
    """Depth sweep rows ordered by frequency, then depth, whatever the worker count."""
    depths = axis(cfg["sweep"]["depth_mm"])
    jobs = [(cfg, float(f), float(d)) for f in sorted(cfg["sweep"]["freqs_hz"]) for d in depths]
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as ex:
            rows = list(ex.map(_depth_row, jobs, chunksize=16))
    else:
        rows = [_depth_row(j) for j in jobs]
    lines = [",".join(DEPTH_COLUMNS)]
    lines += [",".join(_g(v) for v in r) for r in rows]
    return "\n".join(lines) + "\n"


def sweep_backscatter_text(cfg: dict) -> str:
    _, _, bs, _ = build_models(cfg)
    return backscatter_sweep_csv(bs, cfg["link"]["p_tx_dbm"], axis(cfg["sweep"]["depth_cm"]), with_margin=True)


# --- entry point ------------------------------------------------------------------

def _parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--config", type=Path, help="JSON config (default: $IMPLANTSIM_CONFIG)")
    common.add_argument("--out", type=Path, default=Path("."), help="output directory")
    common.add_argument("--seed", type=int, help="override the configured seed")
    common.add_argument("--override", action="append", default=[], metavar="KEY=VALUE",
                        help="set a config value, e.g. link.p_tx_dbm=20 (repeatable)")
    common.add_argument("--workers", type=int, default=1, help="worker processes for sweeps")

    p = argparse.ArgumentParser(prog="implantsim", description=__doc__.splitlines()[0])
    p.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = p.add_subparsers(dest="command", required=True)
    sub.add_parser("sweep-depth", parents=[common], help="coupling and power chain versus depth")
    sub.add_parser("sweep-backscatter", parents=[common], help="backscatter level and margin versus depth")
    sim = sub.add_parser("simulate", parents=[common], help="run a network scenario")
    sim.add_argument("--scenario", type=Path, help="JSON scenario (default: config or bundled)")
    lb = sub.add_parser("linkbudget", parents=[common], help="print the link budget at one depth")
    lb.add_argument("--depth-mm", type=float, help="implant depth (default: linkbudget.depth_mm)")
    return p


def _write(out: Path, name: str, text: str) -> Path:
    out.mkdir(parents=True, exist_ok=True)
    path = out / name
    path.write_text(text)
    return path


def main(argv: Optional[Sequence[str]] = None) -> int:
    args = _parser().parse_args(argv)
    try:
        cfg = load_config(args.config)
        overrides = list(args.override)
        if args.seed is not None:
            overrides.append(f"seed={args.seed}")
        cfg = apply_overrides(cfg, overrides)
        errs = validate_config(cfg)
        if args.workers < 1:
            errs.append("--workers must be >= 1")
        if errs:
            raise ValidationError(errs)

        if args.command == "sweep-depth":
            print(_write(args.out, "sweep_depth.csv", sweep_depth_csv(cfg, args.workers)))
        elif args.command == "sweep-backscatter":
            print(_write(args.out, "sweep_backscatter.csv", sweep_backscatter_text(cfg)))
        elif args.command == "simulate":
            sc_dict = None
            if args.scenario is not None:
                try:
                    sc_dict = json.loads(args.scenario.read_text())
                except json.JSONDecodeError as exc:
                    raise ValidationError([f"{args.scenario}: invalid JSON ({exc})"]) from None
            trace = run(build_scenario(cfg, sc_dict))
            for name, text in (("events.csv", events_csv(trace)), ("metrics.csv", metrics_csv(trace)),
                               ("summary.json", summary_json(trace))):
                print(_write(args.out, name, text))
        elif args.command == "linkbudget":
            text = format_link_budget(link_budget(cfg, args.depth_mm), cfg)
            sys.stdout.write(text)
            if args.out != Path("."):
                _write(args.out, "linkbudget.txt", text)
    except ValidationError as exc:
        for v in exc.violations:
            print(f"error: {v}", file=sys.stderr)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_IO
    except (ImplantSimError, ValueError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_INVALID
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
