"""Discrete-event simulation of an on-body reader, a hub implant and peripherals.

The reader's carrier powers every implant continuously.  Implants send frames
to the reader by backscatter and to each other by galvanic impulses.  Time is
kept in integer nanoseconds; harvester state is advanced exactly between
events (power is piecewise constant, threshold crossings are solved for).
"""

from __future__ import annotations

import csv
import heapq
import io
import json
import math
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from enum import Enum
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np

from .antenna_link import CouplingModel, ImplantAntennaSpec, coupling_db, default_coupling
from .comms import (
    BackscatterLinkModel, Bitstream, GalvanicLinkModel, backscatter_detect, galvanic_rx_detect,
)
from .errors import ValidationError
from .harvester import (
    LOAD_NAMES, V_START, V_STOP, HarvesterState, LoadSpec, Phase, RectifierSpec, StorageCap, advance,
    galvanic_pulse_budget, rectify,
)
from .tissue_em.layers import LayerStack, muscle_stack
from .units import dbm_to_w

NS = 1_000_000_000


class NodeKind(str, Enum):
    READER = "reader"
    HUB = "hub_implant"
    PERIPHERAL = "peripheral_implant"


class LinkKind(str, Enum):
    BACKSCATTER = "backscatter"
    GALVANIC = "galvanic"


# processing order for simultaneous events
EVENT_KINDS = ("power_update", "phase_transition", "frame_end", "frame_start", "metric_sample")
_RANK = {k: i for i, k in enumerate(EVENT_KINDS)}
_PULSE_RANK = _RANK["frame_end"]  # internal, never logged


@dataclass(frozen=True)
class ImplantNodeConfig:
    antenna: ImplantAntennaSpec = field(default_factory=ImplantAntennaSpec)
    matching_Q: float = 10.0
    rectifier: RectifierSpec = RectifierSpec()
    cap: StorageCap = StorageCap()
    loads: LoadSpec = LoadSpec()
    v_start: float = V_START
    v_stop: float = V_STOP

    def __post_init__(self):
        if not (0 < self.v_stop < self.v_start):
            raise ValueError("need 0 < v_stop < v_start")


@dataclass(frozen=True)
class NodeConfig:
    node_id: str
    kind: NodeKind
    position: Tuple[float, float, float] = (0.0, 0.0, 0.0)  # mm; z is depth below the skin
    implant: Optional[ImplantNodeConfig] = None
    p_tx_dbm: float = 23.0
    carrier: float = 401e6
    bistatic_separation: float = 50.0

    def __post_init__(self):
        object.__setattr__(self, "kind", NodeKind(self.kind))
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        if self.kind is not NodeKind.READER and self.implant is None:
            object.__setattr__(self, "implant", ImplantNodeConfig())

    @property
    def is_implant(self) -> bool:
        return self.kind is not NodeKind.READER

    @property
    def depth_mm(self) -> float:
        return self.position[2]


@dataclass(frozen=True)
class TrafficItem:
    t: float  # s
    source: str
    frame: Bitstream
    link: LinkKind

    def __post_init__(self):
        object.__setattr__(self, "link", LinkKind(self.link))


@dataclass(frozen=True)
class TdmaSchedule:
    """Round-robin slots: slot ``i`` belongs to ``owners[i % len(owners)]``."""

    slot_length: float
    owners: Tuple[str, ...]

    @property
    def slot_ns(self) -> int:
        return int(round(self.slot_length * NS))

    def owner(self, slot_index: int) -> str:
        return self.owners[slot_index % len(self.owners)]

    def slots(self, duration: float) -> List[Tuple[float, str]]:
        n = int(math.ceil(duration / self.slot_length - 1e-9))
        return [(i * self.slot_length, self.owner(i)) for i in range(n)]

    def next_start_ns(self, node_id: str, t_ns: int) -> int:
        """Start of the first slot owned by ``node_id`` beginning at or after ``t_ns``."""
        k = self.owners.index(node_id)
        n = len(self.owners)
        i = -(-t_ns // self.slot_ns)
        i += (k - i) % n
        return i * self.slot_ns


def schedule_tdma(nodes: Sequence, slot_length: float) -> TdmaSchedule:
    """Round-robin TDMA over the implants in ``nodes`` (given order)."""
    if slot_length <= 0:
        raise ValueError("slot_length must be > 0")
    ids = []
    for n in nodes:
        if isinstance(n, NodeConfig):
            if n.is_implant:
                ids.append(n.node_id)
        else:
            ids.append(str(n))
    if not ids:
        raise ValueError("no implants to schedule")
    return TdmaSchedule(slot_length, tuple(ids))


@dataclass(frozen=True)
class Scenario:
    nodes: Tuple[NodeConfig, ...]
    traffic: Tuple[TrafficItem, ...] = ()
    duration: float = 1e-3
    stack: LayerStack = field(default_factory=muscle_stack)
    coupling: Optional[CouplingModel] = None  # calibrated on ``stack`` when None
    backscatter: BackscatterLinkModel = BackscatterLinkModel()
    galvanic: GalvanicLinkModel = GalvanicLinkModel()
    seed: int = 0
    tdma: Optional[TdmaSchedule] = None
    traffic_jitter: float = 0.0  # s, uniform, drawn from ``seed``
    sample_interval: Optional[float] = None

    def __post_init__(self):
        object.__setattr__(self, "nodes", tuple(self.nodes))
        object.__setattr__(self, "traffic", tuple(self.traffic))

    def node(self, node_id: str) -> NodeConfig:
        for n in self.nodes:
            if n.node_id == node_id:
                return n
        raise KeyError(node_id)


def validate(sc: Scenario) -> List[str]:
    """Every invariant violation in ``sc`` (empty when valid)."""
    errs = []
    ids = [n.node_id for n in sc.nodes]
    dup = sorted({i for i in ids if ids.count(i) > 1})
    if dup:
        errs.append(f"duplicate node ids: {dup}")
    readers = [n for n in sc.nodes if n.kind is NodeKind.READER]
    if len(readers) > 1:
        errs.append("at most one reader is supported")
    for n in sc.nodes:
        if n.is_implant and not n.depth_mm > 0:
            errs.append(f"implant {n.node_id}: depth (z) must be > 0 mm")
        if n.is_implant and n.depth_mm > sc.stack.depth_limit_mm:
            errs.append(f"implant {n.node_id}: depth beyond stack limit {sc.stack.depth_limit_mm} mm")
    if not sc.duration > 0:
        errs.append("duration must be > 0")
    known = {n.node_id: n for n in sc.nodes}
    for k, tr in enumerate(sc.traffic):
        if not (0 <= tr.t <= sc.duration):
            errs.append(f"traffic[{k}]: t={tr.t} outside [0, {sc.duration}]")
        src = known.get(tr.source)
        if src is None:
            errs.append(f"traffic[{k}]: unknown source {tr.source!r}")
        elif not src.is_implant:
            errs.append(f"traffic[{k}]: source {tr.source!r} is not an implant")
        if tr.link is LinkKind.BACKSCATTER and tr.frame.rate > sc.backscatter.subcarrier_freq / 2:
            errs.append(f"traffic[{k}]: rate exceeds subcarrier/2")
        if sc.tdma is not None:
            if tr.source not in sc.tdma.owners:
                errs.append(f"traffic[{k}]: source {tr.source!r} has no TDMA slot")
            if tr.frame.duration > sc.tdma.slot_length:
                errs.append(f"traffic[{k}]: frame longer than the TDMA slot")
    if sc.traffic_jitter < 0:
        errs.append("traffic_jitter must be >= 0")
    if sc.sample_interval is not None and not sc.sample_interval > 0:
        errs.append("sample_interval must be > 0")
    return errs


# --- trace -------------------------------------------------------------------

@dataclass(frozen=True)
class Event:
    t_ns: int
    kind: str
    node: str
    detail: Tuple[Tuple[str, object], ...] = ()

    @property
    def info(self) -> dict:
        return dict(self.detail)


@dataclass(frozen=True)
class NodeMetrics:
    node: str
    kind: str
    offered_bits: int = 0
    delivered_bits: int = 0
    received_bits: int = 0
    harvested: float = 0.0
    consumed: float = 0.0
    emitted: float = 0.0
    time_off: float = 0.0
    time_charging: float = 0.0
    time_running: float = 0.0
    v_min: float = 0.0
    v_max: float = 0.0


@dataclass(frozen=True)
class Trace:
    events: Tuple[Event, ...]
    metrics: Tuple[NodeMetrics, ...]
    duration: float
    seed: int

    def metric(self, node_id: str) -> NodeMetrics:
        for m in self.metrics:
            if m.node == node_id:
                return m
        raise KeyError(node_id)

    def of_kind(self, kind: str, node: Optional[str] = None) -> List[Event]:
        return [e for e in self.events if e.kind == kind and (node is None or e.node == node)]


# --- simulation ----------------------------------------------------------------

@dataclass
class _Frame:
    item: TrafficItem
    start_ns: int
    end_ns: int
    aborted: bool = False
    pulses: int = 0
    halted: bool = False


@dataclass
class _Implant:
    cfg: NodeConfig
    state: HarvesterState
    p_dc: float = 0.0
    t_ns: int = 0
    frame: Optional[_Frame] = None
    phase_time: Dict[str, int] = field(default_factory=lambda: {p.value: 0 for p in Phase})
    v_min: float = math.inf
    v_max: float = -math.inf
    offered: int = 0
    delivered: int = 0
    received: int = 0

    def note_voltage(self, v: float):
        self.v_min = min(self.v_min, v)
        self.v_max = max(self.v_max, v)


class _Sim:
    def __init__(self, sc: Scenario):
        self.sc = sc
        self.coupling = sc.coupling or default_coupling(sc.stack)
        self.reader = next((n for n in sc.nodes if n.kind is NodeKind.READER), None)
        self.implants: Dict[str, _Implant] = {}
        for n in sorted((n for n in sc.nodes if n.is_implant), key=lambda n: n.node_id):
            ic = n.implant
            st = HarvesterState(cap=ic.cap, loads=ic.loads, v_start=ic.v_start, v_stop=ic.v_stop)
            im = _Implant(n, st)
            im.note_voltage(st.voltage)
            self.implants[n.node_id] = im
        self.reader_received = 0
        self.queue: list = []
        self.seq = 0
        self.events: List[Event] = []
        self.end_ns = int(round(sc.duration * NS))

    # queue ----------------------------------------------------------------
    def push(self, t_ns: int, kind: str, node: str, payload=None, rank: Optional[int] = None):
        r = _RANK[kind] if rank is None else rank
        heapq.heappush(self.queue, (t_ns, r, node, self.seq, kind, payload))
        self.seq += 1

    def log(self, t_ns: int, kind: str, node: str, **detail):
        if self.events and t_ns < self.events[-1].t_ns:
            raise AssertionError(f"causality violated: {kind}@{t_ns} after {self.events[-1].t_ns}")
        self.events.append(Event(t_ns, kind, node, tuple(sorted(detail.items()))))

    # physics ----------------------------------------------------------------
    def received_dc(self, im: _Implant) -> Tuple[float, float]:
        if self.reader is None or self.reader.p_tx_dbm == -math.inf:
            return -math.inf, 0.0
        c = coupling_db(self.coupling, self.sc.stack, self.reader.carrier, im.cfg.depth_mm)
        p_rx = self.reader.p_tx_dbm + c
        return p_rx, rectify(im.cfg.implant.rectifier, dbm_to_w(p_rx))

    def effective_pdc(self, im: _Implant) -> float:
        f = im.frame
        if f is not None and f.item.link is LinkKind.BACKSCATTER and not f.aborted:
            return im.p_dc * self.sc.backscatter.duty
        return im.p_dc

    def advance_all(self, t_ns: int):
        pending = []
        for nid, im in self.implants.items():
            if t_ns <= im.t_ns:
                continue
            start = im.t_ns
            dt = (t_ns - start) / NS
            phase0 = im.state.phase
            im.state, trans = advance(im.state, dt, self.effective_pdc(im), LOAD_NAMES)
            last_t, cur = start, phase0
            for off, ph in trans:
                te = min(start + int(math.ceil(off * NS - 1e-6)), t_ns)
                im.phase_time[cur.value] += te - last_t
                # crossings land exactly on a threshold; OFF->CHARGING starts where we were
                if cur is Phase.RUNNING:
                    im.note_voltage(im.state.v_stop)
                elif ph is Phase.RUNNING:
                    im.note_voltage(im.state.v_start)
                last_t, cur = te, ph
                pending.append((te, nid, ph))
                if ph is not Phase.RUNNING and im.frame is not None:
                    im.frame.aborted = True
            im.phase_time[cur.value] += t_ns - last_t
            im.t_ns = t_ns
            im.note_voltage(im.state.voltage)
        for te, nid, ph in sorted(pending, key=lambda p: (p[0], p[1])):
            self.log(te, "phase_transition", nid, phase=ph.value)

    # scheduling ---------------------------------------------------------------
    def schedule_traffic(self):
        sc = self.sc
        rng = np.random.default_rng(sc.seed)
        items = list(sc.traffic)
        jit = rng.uniform(0.0, sc.traffic_jitter, len(items)) if sc.traffic_jitter > 0 else np.zeros(len(items))
        busy: Dict[str, int] = {}
        order = sorted(range(len(items)), key=lambda k: (int(round((items[k].t + jit[k]) * NS)), items[k].source, k))
        for k in order:
            it = items[k]
            im = self.implants[it.source]
            im.offered += len(it.frame)
            t_req = int(round((it.t + jit[k]) * NS))
            start = max(t_req, busy.get(it.source, 0))
            if sc.tdma is not None:
                start = sc.tdma.next_start_ns(it.source, start)
            dur = int(round(it.frame.duration * NS))
            if start >= self.end_ns:
                continue  # deferred past the horizon: offered, never sent
            busy[it.source] = start + dur
            self.push(start, "frame_start", it.source, _Frame(it, start, start + dur))

    # handlers -----------------------------------------------------------------
    def on_frame_start(self, t_ns: int, nid: str, fr: _Frame):
        im = self.implants[nid]
        bits = len(fr.item.frame)
        if im.state.phase is not Phase.RUNNING:
            self.log(t_ns, "frame_start", nid, link=fr.item.link.value, bits=bits, accepted=False)
            self.log(t_ns, "frame_end", nid, link=fr.item.link.value, bits=bits, delivered=0,
                     pulses=0, emitted_j=0.0, reason="not_running", receivers="")
            return
        self.log(t_ns, "frame_start", nid, link=fr.item.link.value, bits=bits, accepted=True)
        im.frame = fr
        if fr.item.link is LinkKind.BACKSCATTER:
            self.push(fr.end_ns, "frame_end", nid, fr)
        else:
            self.pulse(t_ns, nid, fr, 0)

    def pulse(self, t_ns: int, nid: str, fr: _Frame, k: int):
        im = self.implants[nid]
        energy = self.sc.galvanic.pulse_energy
        if fr.aborted or im.state.phase is not Phase.RUNNING:
            fr.halted = True
        else:
            ok, im.state = galvanic_pulse_budget(im.state, energy)
            if ok:
                fr.pulses += 1
                im.note_voltage(im.state.voltage)
            else:
                fr.halted = True
        n = len(fr.item.frame)
        if fr.halted or fr.pulses == n:
            t_end = t_ns if fr.halted else fr.start_ns + int(round(n * NS / fr.item.frame.rate))
            fr.end_ns = t_end
            self.push(t_end, "frame_end", nid, fr)
        else:
            t_next = fr.start_ns + int(round((k + 1) * NS / fr.item.frame.rate))
            self.push(t_next, "pulse", nid, (fr, k + 1), rank=_PULSE_RANK)

    def on_frame_end(self, t_ns: int, nid: str, fr: _Frame, cut: bool = False):
        im = self.implants[nid]
        im.frame = None
        bits = len(fr.item.frame)
        if fr.item.link is LinkKind.BACKSCATTER:
            det = backscatter_detect(self.sc.backscatter, self.reader.p_tx_dbm if self.reader else -math.inf,
                                     im.cfg.depth_mm / 10)
            ok = det.detected and not fr.aborted and not cut and self.reader is not None
            delivered = bits if ok else 0
            im.delivered += delivered
            self.reader_received += delivered
            reason = "ok" if ok else ("horizon" if cut else "aborted" if fr.aborted else "below_threshold")
            self.log(t_ns, "frame_end", nid, link="backscatter", bits=bits, delivered=delivered,
                     pulses=0, emitted_j=0.0, margin_db=round(det.margin, 9), reason=reason,
                     receivers=self.reader.node_id if ok else "")
        else:
            energy = self.sc.galvanic.pulse_energy
            got = []
            for rid, other in self.implants.items():
                if rid == nid:
                    continue
                d_cm = float(np.linalg.norm(np.subtract(other.cfg.position, im.cfg.position))) / 10
                if d_cm > 0 and galvanic_rx_detect(self.sc.galvanic, d_cm).detected and fr.pulses:
                    got.append(rid)
                    other.received += fr.pulses
            delivered = fr.pulses if got else 0
            im.delivered += delivered
            self.log(t_ns, "frame_end", nid, link="galvanic", bits=bits, delivered=delivered,
                     pulses=fr.pulses, emitted_j=fr.pulses * energy,
                     reason="ok" if fr.pulses == bits else ("horizon" if cut else "halted"),
                     receivers=",".join(got))

    def sample(self, t_ns: int):
        for nid, im in self.implants.items():
            lg = im.state.ledger
            self.log(t_ns, "metric_sample", nid, v_cap=im.state.voltage, phase=im.state.phase.value,
                     harvested_j=lg.harvested, consumed_j=lg.consumed_by_load, emitted_j=lg.emitted_galvanic)

    # main loop ----------------------------------------------------------------
    def run(self) -> Trace:
        for nid in self.implants:
            self.push(0, "power_update", nid)
        self.schedule_traffic()
        if self.sc.sample_interval:
            step = int(round(self.sc.sample_interval * NS))
            for t in range(step, self.end_ns, step):
                self.push(t, "metric_sample", "")
        last_t = 0
        while self.queue and self.queue[0][0] <= self.end_ns:
            t_ns, _, nid, _, kind, payload = heapq.heappop(self.queue)
            if t_ns < last_t:
                raise AssertionError("event queue out of order")
            last_t = t_ns
            self.advance_all(t_ns)
            if kind == "power_update":
                im = self.implants[nid]
                p_rx, im.p_dc = self.received_dc(im)
                self.log(t_ns, "power_update", nid, p_rx_dbm=round(p_rx, 9), p_dc_w=im.p_dc)
            elif kind == "frame_start":
                self.on_frame_start(t_ns, nid, payload)
            elif kind == "pulse":
                self.pulse(t_ns, nid, payload[0], payload[1])
            elif kind == "frame_end":
                self.on_frame_end(t_ns, nid, payload)
            elif kind == "metric_sample":
                self.sample(t_ns)
        self.advance_all(self.end_ns)
        # frames still open at the horizon are cut off there
        for nid, im in self.implants.items():
            if im.frame is not None:
                im.frame.end_ns = self.end_ns
                self.on_frame_end(self.end_ns, nid, im.frame, cut=True)
        self.sample(self.end_ns)
        return Trace(tuple(self.events), self._metrics(), self.sc.duration, self.sc.seed)

    def _metrics(self) -> Tuple[NodeMetrics, ...]:
        out = []
        for nid, im in self.implants.items():
            lg = im.state.ledger
            pt = im.phase_time
            out.append(NodeMetrics(
                nid, im.cfg.kind.value, im.offered, im.delivered, im.received,
                lg.harvested, lg.consumed_by_load, lg.emitted_galvanic,
                pt["OFF"] / NS, pt["CHARGING"] / NS, pt["RUNNING"] / NS, im.v_min, im.v_max))
        if self.reader is not None:
            out.append(NodeMetrics(self.reader.node_id, NodeKind.READER.value, received_bits=self.reader_received))
        return tuple(sorted(out, key=lambda m: m.node))


def run(scenario: Scenario) -> Trace:
    """Simulate ``scenario``; deterministic for a fixed scenario and seed.

    Raises
    ------
    ValidationError
        Listing every violation, before any event is processed.
    """
    errs = validate(scenario)
    if errs:
        raise ValidationError(errs)
    return _Sim(scenario).run()


def run_many(scenarios: Sequence[Scenario], workers: int = 1) -> List[Trace]:
    """Run independent scenarios, optionally in a process pool; order is preserved."""
    if workers <= 1:
        return [run(s) for s in scenarios]
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(run, scenarios))


# --- reporting -------------------------------------------------------------------

@dataclass(frozen=True)
class NodeReport:
    node: str
    kind: str
    delivered_bits: int
    offered_bits: int
    throughput_bps: float
    energy_per_bit: Optional[float]  # J/bit; None when nothing was delivered
    availability: float
    emitted_galvanic: float
    consumed: float


def summarize(trace: Trace) -> Tuple[NodeReport, ...]:
    """Per-node throughput, energy per delivered bit and availability.

    Energy per bit counts everything the node drew from its capacitor (load
    consumption plus galvanic emission) over the run.
    """
    out = []
    for m in trace.metrics:
        spent = m.consumed + m.emitted
        epb = spent / m.delivered_bits if m.delivered_bits else None
        out.append(NodeReport(m.node, m.kind, m.delivered_bits, m.offered_bits,
                              m.delivered_bits / trace.duration, epb,
                              m.time_running / trace.duration, m.emitted, m.consumed))
    return tuple(out)


def recompute_metrics(trace: Trace) -> Dict[str, dict]:
    """Rebuild bit counts, emitted energy and phase times from the event log alone."""
    acc: Dict[str, dict] = {}
    phase: Dict[str, Tuple[str, int]] = {}
    end_ns = int(round(trace.duration * NS))
    for e in trace.events:
        a = acc.setdefault(e.node, {"delivered_bits": 0, "received_bits": 0, "emitted": 0.0,
                                    "time_running_ns": 0})
        info = e.info
        if e.kind == "power_update":
            phase.setdefault(e.node, ("OFF", e.t_ns))
        elif e.kind == "frame_end":
            a["delivered_bits"] += info["delivered"]
            a["emitted"] += info["emitted_j"]
            for r in filter(None, str(info["receivers"]).split(",")):
                acc.setdefault(r, {"delivered_bits": 0, "received_bits": 0, "emitted": 0.0,
                                   "time_running_ns": 0})["received_bits"] += (
                    info["pulses"] if info["link"] == "galvanic" else info["delivered"])
        elif e.kind == "phase_transition":
            prev, t0 = phase.get(e.node, ("OFF", 0))
            if prev == "RUNNING":
                a["time_running_ns"] += e.t_ns - t0
            phase[e.node] = (info["phase"], e.t_ns)
    for node, (ph, t0) in phase.items():
        if ph == "RUNNING":
            acc[node]["time_running_ns"] += end_ns - t0
    return acc


def _fmt(v) -> str:
    if isinstance(v, bool):
        return str(v).lower()
    if isinstance(v, float):
        return f"{v:.6g}"
    return str(v)


def events_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["t_ns", "node", "kind", "detail"])
    for e in trace.events:
        w.writerow([e.t_ns, e.node, e.kind, ";".join(f"{k}={_fmt(v)}" for k, v in e.detail)])
    return buf.getvalue()


def metrics_csv(trace: Trace) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["node", "delivered_bits", "j_per_bit", "availability"])
    for r in summarize(trace):
        w.writerow([r.node, r.delivered_bits, "" if r.energy_per_bit is None else f"{r.energy_per_bit:.6g}",
                    f"{r.availability:.6g}"])
    return buf.getvalue()


def summary_json(trace: Trace) -> str:
    nodes = {}
    for m, r in zip(trace.metrics, summarize(trace)):
        nodes[m.node] = {
            "kind": m.kind,
            "offered_bits": m.offered_bits,
            "delivered_bits": m.delivered_bits,
            "received_bits": m.received_bits,
            "throughput_bps": float(f"{r.throughput_bps:.6g}"),
            "energy_per_bit_j": None if r.energy_per_bit is None else float(f"{r.energy_per_bit:.6g}"),
            "availability": float(f"{r.availability:.6g}"),
            "harvested_j": float(f"{m.harvested:.6g}"),
            "consumed_j": float(f"{m.consumed:.6g}"),
            "emitted_galvanic_j": float(f"{m.emitted:.6g}"),
            "v_min": float(f"{m.v_min:.6g}"),
            "v_max": float(f"{m.v_max:.6g}"),
        }
    return json.dumps({"duration_s": trace.duration, "seed": trace.seed, "events": len(trace.events),
                       "nodes": nodes}, indent=2, sort_keys=True) + "\n"
