"""Scenario files: flat key-value text with dotted sections.

Grammar (one entry per line):

    key = value            # '#' starts a comment
    key = [v1, v2, v3]     # list value (sweeps, churn edges)

Durations are integer ticks (1 tick = 1 ms).  See the README for the full
key table.  Churn entries use indexed keys:

    churn.1 = leave 12 at 30
    churn.2 = join 25 at 60 edges 7,11,13,17
"""

from __future__ import annotations

import os
from dataclasses import dataclass, field, replace

from .protocol import MrfConfig, ProtocolConfig, Variant
from .sim import (ChurnEvent, ClockDriftModel, DelayModel, LinkFaultModel,
                  RunResult, make_link_delay_table, run)
from .topology import (Topology, load_topology, make_complete,
                       make_random_geometric, make_regular_grid)


class ScenarioError(ValueError):
    pass


@dataclass(frozen=True)
class TopologySpec:
    kind: str                       # grid | random_geometric | complete | file
    rows: int = 0
    cols: int = 0
    wraparound: bool = False
    n: int = 0
    radius: float = 0.0
    seed: int = 0
    path: str = ""


@dataclass(frozen=True)
class SweepSpec:
    parameter: str
    values: tuple


@dataclass(frozen=True)
class ScenarioConfig:
    topology: TopologySpec
    protocol: ProtocolConfig
    mrf: MrfConfig | None = None
    delay: DelayModel = field(default_factory=DelayModel)
    fault: LinkFaultModel = field(default_factory=LinkFaultModel)
    drift: ClockDriftModel = field(default_factory=ClockDriftModel)
    churn: tuple[ChurnEvent, ...] = ()
    horizon: int = 50
    seed: int = 0
    payload_rate: float = 1.0
    sweep: SweepSpec | None = None
    # fixed per-directed-link delay offsets drawn from [lo, hi] with the
    # given seed; materialized against the topology at run time
    link_delay: tuple[int, int, int] | None = None


def build_topology(spec: TopologySpec) -> Topology:
    if spec.kind == "grid":
        return make_regular_grid(spec.rows, spec.cols, spec.wraparound)
    if spec.kind == "random_geometric":
        return make_random_geometric(spec.n, spec.radius, spec.seed)
    if spec.kind == "complete":
        return make_complete(spec.n)
    if spec.kind == "file":
        return load_topology(spec.path)
    raise ScenarioError(f"unknown topology kind {spec.kind!r}")


def run_config(cfg: ScenarioConfig, scheme: str = "ebs",
               seed: int | None = None, trace: bool = False) -> RunResult:
    """Execute one run of a scenario (EBS or the refractory baseline)."""
    topology = build_topology(cfg.topology)
    delay = cfg.delay
    if cfg.link_delay is not None:
        lo, hi, table_seed = cfg.link_delay
        delay = replace(delay, overrides=make_link_delay_table(topology, lo, hi, table_seed))
    return run(topology, cfg.protocol, scheme=scheme,
               mrf_cfg=cfg.mrf if scheme == "mrf" else None,
               delay=delay, fault=cfg.fault, drift=cfg.drift,
               churn=cfg.churn, horizon=cfg.horizon,
               seed=cfg.seed if seed is None else seed,
               payload_rate=cfg.payload_rate, trace=trace)


# --- parsing ----------------------------------------------------------------

_BOOLS = {"true": True, "false": False, "yes": True, "no": False,
          "on": True, "off": False}

# key -> (type tag, required)
_KEYS: dict[str, str] = {
    "topology.kind": "str",
    "topology.rows": "int",
    "topology.cols": "int",
    "topology.wraparound": "bool",
    "topology.n": "int",
    "topology.radius": "float",
    "topology.seed": "int",
    "topology.path": "str",
    "protocol.period_t": "int",
    "protocol.epsilon": "float",
    "protocol.sigma": "float",
    "protocol.s_th": "float",
    "protocol.c0": "int",
    "protocol.variant": "str",
    "protocol.adaptive_c": "bool",
    "protocol.init_listen_periods": "int",
    "mrf.enabled": "bool",
    "mrf.t_ref": "int",
    "mrf.sleep": "bool",
    "delay.kind": "str",
    "delay.nu": "int",
    "delay.lo": "int",
    "delay.hi": "int",
    "delay.link_lo": "int",
    "delay.link_hi": "int",
    "delay.link_seed": "int",
    "fault.loss_probability": "float",
    "fault.collisions": "bool",
    "fault.beta": "int",
    "drift.skew_ppm_min": "float",
    "drift.skew_ppm_max": "float",
    "run.horizon": "int",
    "run.seed": "int",
    "run.payload_rate": "float",
    "sweep.parameter": "str",
    "sweep.values": "list",
}

_REQUIRED = ("topology.kind", "protocol.period_t", "protocol.epsilon",
             "protocol.sigma", "protocol.s_th")

# keys a sweep may vary (re-parsed per point through the same validation)
SWEEPABLE = tuple(k for k in _KEYS
                  if k.split(".")[0] in ("protocol", "delay", "fault", "run", "mrf")
                  and _KEYS[k] != "list")


def _scalar(key: str, text: str, lineno: int, source: str):
    tag = _KEYS[key]
    try:
        if tag == "int":
            return int(text)
        if tag == "float":
            return float(text)
        if tag == "bool":
            if text.lower() not in _BOOLS:
                raise ValueError
            return _BOOLS[text.lower()]
        return text
    except ValueError:
        raise ScenarioError(
            f"{source}:{lineno}: {key}: expected {tag}, got {text!r}") from None


def _parse_list(text: str, lineno: int, source: str) -> tuple:
    inner = text.strip()
    if not (inner.startswith("[") and inner.endswith("]")):
        raise ScenarioError(f"{source}:{lineno}: expected a [a, b, ...] list")
    items = [s.strip() for s in inner[1:-1].split(",") if s.strip()]
    out = []
    for item in items:
        try:
            out.append(int(item))
        except ValueError:
            try:
                out.append(float(item))
            except ValueError:
                out.append(item)
    return tuple(out)


def _parse_churn(text: str, lineno: int, source: str) -> ChurnEvent:
    parts = text.split()
    try:
        if parts[0] == "leave" and len(parts) == 4 and parts[2] == "at":
            return ChurnEvent(int(parts[3]), "leave", int(parts[1]))
        if parts[0] == "join" and len(parts) == 6 and parts[2] == "at" and parts[4] == "edges":
            edges = tuple(int(e) for e in parts[5].split(","))
            return ChurnEvent(int(parts[3]), "join", int(parts[1]), edges)
    except (ValueError, IndexError):
        pass
    raise ScenarioError(
        f"{source}:{lineno}: churn entry must be 'leave <id> at <period>' "
        f"or 'join <id> at <period> edges <id,id,...>', got {text!r}")


def parse_scenario_text(text: str, source: str = "<string>") -> ScenarioConfig:
    values: dict[str, object] = {}
    lines: dict[str, int] = {}
    churn: list[ChurnEvent] = []
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ScenarioError(f"{source}:{lineno}: expected 'key = value'")
        key, _, val = line.partition("=")
        key, val = key.strip(), val.strip()
        if key.startswith("churn."):
            churn.append(_parse_churn(val, lineno, source))
            continue
        if key not in _KEYS:
            raise ScenarioError(f"{source}:{lineno}: unknown key {key!r}")
        if key in values:
            raise ScenarioError(f"{source}:{lineno}: duplicate key {key!r}")
        if _KEYS[key] == "list":
            values[key] = _parse_list(val, lineno, source)
        else:
            values[key] = _scalar(key, val, lineno, source)
        lines[key] = lineno

    def where(key: str) -> str:
        return f"{source}:{lines.get(key, '?')}"

    for key in _REQUIRED:
        if key not in values:
            raise ScenarioError(f"{source}: missing required key {key!r}")

    def get(key: str, default):
        return values.get(key, default)

    topo_kind = values["topology.kind"]
    if topo_kind not in ("grid", "random_geometric", "complete", "file"):
        raise ScenarioError(f"{where('topology.kind')}: unknown topology kind {topo_kind!r}")
    if topo_kind == "grid" and ("topology.rows" not in values or "topology.cols" not in values):
        raise ScenarioError(f"{source}: grid topology needs topology.rows and topology.cols")
    if topo_kind in ("random_geometric", "complete") and "topology.n" not in values:
        raise ScenarioError(f"{source}: {topo_kind} topology needs topology.n")
    if topo_kind == "random_geometric" and "topology.radius" not in values:
        raise ScenarioError(f"{source}: random_geometric topology needs topology.radius")
    if topo_kind == "file" and "topology.path" not in values:
        raise ScenarioError(f"{source}: file topology needs topology.path")
    topo = TopologySpec(
        kind=topo_kind, rows=get("topology.rows", 0), cols=get("topology.cols", 0),
        wraparound=get("topology.wraparound", False), n=get("topology.n", 0),
        radius=get("topology.radius", 0.0), seed=get("topology.seed", 0),
        path=get("topology.path", ""))

    variant_name = get("protocol.variant", "no_reachback")
    try:
        variant = Variant(variant_name)
    except ValueError:
        raise ScenarioError(f"{where('protocol.variant')}: unknown variant {variant_name!r}") from None
    try:
        proto = ProtocolConfig(
            period_t=values["protocol.period_t"],
            epsilon=values["protocol.epsilon"],
            sigma=values["protocol.sigma"],
            s_th=values["protocol.s_th"],
            c0=get("protocol.c0", 50),
            variant=variant,
            adaptive_c=get("protocol.adaptive_c", False),
            init_listen_periods=get("protocol.init_listen_periods", 5))
    except ValueError as exc:
        raise ScenarioError(f"{source}: protocol config: {exc}") from None

    mrf = None
    if get("mrf.enabled", False):
        try:
            mrf = MrfConfig(proto.period_t, get("mrf.t_ref", proto.period_t // 2),
                            sleep_during_refractory=get("mrf.sleep", True))
        except ValueError as exc:
            raise ScenarioError(f"{source}: mrf config: {exc}") from None

    link_delay = None
    if "delay.link_hi" in values:
        link_lo = get("delay.link_lo", 0)
        link_hi = values["delay.link_hi"]
        if link_lo < 0 or link_hi < link_lo:
            raise ScenarioError(
                f"{where('delay.link_hi')}: link delays need 0 <= link_lo <= link_hi")
        link_delay = (link_lo, link_hi, get("delay.link_seed", 0))

    try:
        delay = DelayModel(kind=get("delay.kind", "none"), nu=get("delay.nu", 0),
                           lo=get("delay.lo", 0), hi=get("delay.hi", 0))
        fault = LinkFaultModel(loss_probability=get("fault.loss_probability", 0.0),
                               collisions_enabled=get("fault.collisions", False),
                               airtime_beta=get("fault.beta", 4))
        drift = ClockDriftModel(skew_ppm_min=get("drift.skew_ppm_min", 0.0),
                                skew_ppm_max=get("drift.skew_ppm_max", 0.0))
    except ValueError as exc:
        raise ScenarioError(f"{source}: {exc}") from None

    horizon = get("run.horizon", 50)
    if horizon < 1:
        raise ScenarioError(f"{where('run.horizon')}: run.horizon must be >= 1")
    payload_rate = get("run.payload_rate", 1.0)
    if payload_rate < 0:
        raise ScenarioError(f"{where('run.payload_rate')}: run.payload_rate must be >= 0")

    sweep = None
    if "sweep.parameter" in values or "sweep.values" in values:
        if "sweep.parameter" not in values or "sweep.values" not in values:
            raise ScenarioError(f"{source}: sweep needs both sweep.parameter and sweep.values")
        param = values["sweep.parameter"]
        if param not in SWEEPABLE:
            raise ScenarioError(f"{where('sweep.parameter')}: cannot sweep {param!r}")
        if not values["sweep.values"]:
            raise ScenarioError(f"{where('sweep.values')}: empty sweep")
        sweep = SweepSpec(param, values["sweep.values"])

    return ScenarioConfig(topology=topo, protocol=proto, mrf=mrf, delay=delay,
                          fault=fault, drift=drift, churn=tuple(churn),
                          horizon=horizon, seed=get("run.seed", 0),
                          payload_rate=payload_rate, sweep=sweep,
                          link_delay=link_delay)


def parse_scenario(path: str) -> ScenarioConfig:
    if not os.path.exists(path):
        raise ScenarioError(f"scenario file not found: {path}")
    with open(path, encoding="utf-8") as fh:
        return parse_scenario_text(fh.read(), source=path)


def apply_override(cfg: ScenarioConfig, parameter: str, value) -> ScenarioConfig:
    """Return a copy of the scenario with one sweepable key replaced."""
    if parameter not in SWEEPABLE:
        raise ScenarioError(f"cannot sweep {parameter!r}")
    section, name = parameter.split(".", 1)
    if section == "protocol":
        if name == "variant":
            value = Variant(value)
        proto = replace(cfg.protocol, **{name: value})
        mrf = cfg.mrf
        if mrf is not None and name == "period_t":
            mrf = MrfConfig(value, min(mrf.refractory, value - 1),
                            sleep_during_refractory=mrf.sleep_during_refractory)
        return replace(cfg, protocol=proto, mrf=mrf)
    if section == "delay":
        if name.startswith("link_"):
            lo, hi, table_seed = cfg.link_delay or (0, 0, 0)
            slot = name.removeprefix("link_")
            lo, hi, table_seed = {
                "lo": (value, hi, table_seed),
                "hi": (lo, value, table_seed),
                "seed": (lo, hi, value),
            }[slot]
            if lo < 0 or hi < lo:
                raise ScenarioError("link delays need 0 <= link_lo <= link_hi")
            return replace(cfg, link_delay=(lo, hi, table_seed))
        return replace(cfg, delay=replace(cfg.delay, **{name: value}))
    if section == "fault":
        field_name = {"loss_probability": "loss_probability",
                      "collisions": "collisions_enabled",
                      "beta": "airtime_beta"}[name]
        return replace(cfg, fault=replace(cfg.fault, **{field_name: value}))
    if section == "mrf":
        old = cfg.mrf
        if name == "enabled":
            return replace(cfg, mrf=MrfConfig(cfg.protocol.period_t,
                                              cfg.protocol.period_t // 2) if value else None)
        if name == "sleep":
            refractory = old.refractory if old else cfg.protocol.period_t // 2
            return replace(cfg, mrf=MrfConfig(cfg.protocol.period_t, refractory,
                                              sleep_during_refractory=value))
        sleep = old.sleep_during_refractory if old else True
        return replace(cfg, mrf=MrfConfig(cfg.protocol.period_t, value,
                                          sleep_during_refractory=sleep))
    # run.*
    key = {"horizon": "horizon", "seed": "seed", "payload_rate": "payload_rate"}[name]
    return replace(cfg, **{key: value})


def resolved_text(cfg: ScenarioConfig) -> str:
    """Echo of the fully materialized configuration, defaults included."""
    t = cfg.topology
    out = [f"topology.kind = {t.kind}"]
    if t.kind == "grid":
        out += [f"topology.rows = {t.rows}", f"topology.cols = {t.cols}",
                f"topology.wraparound = {str(t.wraparound).lower()}"]
    elif t.kind == "random_geometric":
        out += [f"topology.n = {t.n}", f"topology.radius = {t.radius}",
                f"topology.seed = {t.seed}"]
    elif t.kind == "complete":
        out += [f"topology.n = {t.n}"]
    else:
        out += [f"topology.path = {t.path}"]
    p = cfg.protocol
    out += [
        f"protocol.period_t = {p.period_t}",
        f"protocol.epsilon = {p.epsilon}",
        f"protocol.sigma = {p.sigma}",
        f"protocol.s_th = {p.s_th}",
        f"protocol.c0 = {p.c0}",
        f"protocol.variant = {p.variant.value}",
        f"protocol.adaptive_c = {str(p.adaptive_c).lower()}",
        f"protocol.init_listen_periods = {p.init_listen_periods}",
        f"mrf.enabled = {str(cfg.mrf is not None).lower()}",
    ]
    if cfg.mrf is not None:
        out.append(f"mrf.t_ref = {cfg.mrf.refractory}")
        out.append(f"mrf.sleep = {str(cfg.mrf.sleep_during_refractory).lower()}")
    out += [
        f"delay.kind = {cfg.delay.kind}",
        f"delay.nu = {cfg.delay.nu}",
        f"delay.lo = {cfg.delay.lo}",
        f"delay.hi = {cfg.delay.hi}",
    ]
    if cfg.link_delay is not None:
        lo, hi, table_seed = cfg.link_delay
        out += [f"delay.link_lo = {lo}", f"delay.link_hi = {hi}",
                f"delay.link_seed = {table_seed}"]
    out += [
        f"fault.loss_probability = {cfg.fault.loss_probability}",
        f"fault.collisions = {str(cfg.fault.collisions_enabled).lower()}",
        f"fault.beta = {cfg.fault.airtime_beta}",
        f"drift.skew_ppm_min = {cfg.drift.skew_ppm_min}",
        f"drift.skew_ppm_max = {cfg.drift.skew_ppm_max}",
        f"run.horizon = {cfg.horizon}",
        f"run.seed = {cfg.seed}",
        f"run.payload_rate = {cfg.payload_rate}",
    ]
    for i, ev in enumerate(cfg.churn, start=1):
        if ev.action == "leave":
            out.append(f"churn.{i} = leave {ev.node_id} at {ev.at_period}")
        else:
            edges = ",".join(str(e) for e in ev.edges)
            out.append(f"churn.{i} = join {ev.node_id} at {ev.at_period} edges {edges}")
    if cfg.sweep is not None:
        out.append(f"sweep.parameter = {cfg.sweep.parameter}")
        out.append(f"sweep.values = [{', '.join(str(v) for v in cfg.sweep.values)}]")
    return "\n".join(out) + "\n"
