"""Scenario documents: YAML in, validated :class:`~petreg.sim.Scenario` out.

A document has the sections ``graph``, ``leader``, ``followers``,
``observer``, ``controller``, ``sim`` and optionally ``bound_params``.
Unknown keys anywhere are rejected.  Follower ids in ``graph`` are 1-based.
"""

import copy
import json
import re
from importlib import resources
from pathlib import Path
from typing import List, Literal, Optional, Union

import numpy as np
import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError

from .controller import BoundParams, TriggerConfig
from .errors import PetregError, ScenarioError
from .graph import Graph
from .observer import PetmAConfig
from .plant import FollowerModel, LeaderModel
from .sim import Agent, ObserverParams, Scenario, SimConfig

Matrix = List[List[float]]


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid")


class GraphSection(_Strict):
    followers: int = Field(gt=0)
    edges: List[List[int]] = []
    pinned: List[int]


class LeaderSection(_Strict):
    S: Matrix
    v0: List[float]


class FollowerSection(_Strict):
    A: Matrix
    B: Matrix
    C: Matrix
    F: Matrix
    Cm: Matrix
    D: Optional[Matrix] = None
    E: Optional[Matrix] = None
    Dm: Optional[Matrix] = None
    Fm: Optional[Matrix] = None
    x0: List[float]
    K: Matrix
    L: Matrix
    sigma: float = Field(default=1.0, ge=0)
    rho: float = Field(default=1.0, ge=0)


class ObserverSection(_Strict):
    mu1: float = Field(gt=0)
    mu2: float = Field(gt=0)
    iota_s: float = Field(gt=0)
    gamma_s: float = Field(gt=0)
    iota_v: float = Field(gt=0)
    gamma_v: float = Field(gt=0)
    combine_mode: Literal["and", "or"] = "and"


class ControllerSection(_Strict):
    iota_psi: float = Field(ge=0)
    gamma_psi: float = Field(ge=0)
    iota_psi_bar: float = Field(default=0.0, ge=0)
    iota_omega: float = Field(default=0.0, ge=0)
    gamma_omega: float = Field(default=0.0, ge=0)
    iota_omega_bar: float = Field(default=0.0, ge=0)
    petm_c: bool = False
    variant_e: bool = False
    kappa: float = Field(gt=0)


class SimSection(_Strict):
    T: float = Field(gt=0)
    sensor_periods: Union[float, List[float]]
    sensor_phases: Union[float, List[float]] = 0.0
    t_end: float = Field(gt=0)
    substeps: int = Field(default=2, ge=1)
    override_bounds: bool = False


class BoundParamsSection(_Strict):
    zeta1: float = Field(gt=0)
    zeta2: float = Field(ge=0)
    zeta3: float = Field(gt=0)
    epsilon: float = Field(gt=0)


class ScenarioDocument(_Strict):
    graph: GraphSection
    leader: LeaderSection
    followers: List[FollowerSection]
    observer: ObserverSection
    controller: ControllerSection
    sim: SimSection
    bound_params: Optional[BoundParamsSection] = None


def _loc(loc):
    out = ""
    for part in loc:
        out += f"[{part}]" if isinstance(part, int) else (f".{part}" if out else str(part))
    return out


def validate_document(raw):
    """Schema-check a raw mapping; returns the :class:`ScenarioDocument`."""
    try:
        return ScenarioDocument.model_validate(raw)
    except ValidationError as exc:
        err = exc.errors()[0]
        raise ScenarioError(_loc(err["loc"]), err["msg"]) from None


def _per_agent(value, n, path):
    if isinstance(value, list):
        if len(value) != n:
            raise ScenarioError(path, f"expected {n} entries, got {len(value)}")
        return tuple(value)
    return (value,) * n


def build_scenario(doc):
    """Turn a validated document into simulator objects, cross-checking dimensions."""
    n = doc.graph.followers
    if len(doc.followers) != n:
        raise ScenarioError("followers", f"expected {n} followers, got {len(doc.followers)}")
    for k, e in enumerate(doc.graph.edges):
        if len(e) != 2:
            raise ScenarioError(f"graph.edges[{k}]", "edge must be a [source, target] pair")
    try:
        graph = Graph.from_edges(n, doc.graph.edges, doc.graph.pinned)
    except PetregError as exc:
        raise ScenarioError("graph", str(exc)) from None
    try:
        leader = LeaderModel(np.array(doc.leader.S, dtype=float), np.array(doc.leader.v0, dtype=float))
    except PetregError as exc:
        raise ScenarioError("leader", str(exc)) from None

    nv = leader.nv
    c = doc.controller
    agents = []
    for i, f in enumerate(doc.followers):
        path = f"followers[{i}]"
        try:
            a = np.array(f.A, dtype=float)
            b = np.array(f.B, dtype=float)
            cm = np.array(f.C, dtype=float)
            cmm = np.array(f.Cm, dtype=float)
            nx, nu, ne, ny = a.shape[0], b.shape[1], cm.shape[0], cmm.shape[0]
            model = FollowerModel(
                a=a, b=b, c=cm,
                d=np.array(f.D if f.D is not None else np.zeros((ne, nu)), dtype=float),
                e=np.array(f.E if f.E is not None else np.zeros((nx, nv)), dtype=float),
                f=np.array(f.F, dtype=float),
                c_m=cmm,
                d_m=np.array(f.Dm if f.Dm is not None else np.zeros((ny, nu)), dtype=float),
                f_m=np.array(f.Fm if f.Fm is not None else np.zeros((ny, nv)), dtype=float),
                x0=np.array(f.x0, dtype=float),
            )
            trig = TriggerConfig(
                iota_psi=c.iota_psi, gamma_psi=c.gamma_psi, iota_psi_bar=c.iota_psi_bar,
                iota_omega=c.iota_omega, gamma_omega=c.gamma_omega, iota_omega_bar=c.iota_omega_bar,
                sigma=f.sigma, rho=f.rho, petm_c_enabled=c.petm_c, variant_e=c.variant_e,
            )
            agents.append(Agent(model, np.array(f.K, dtype=float), np.array(f.L, dtype=float), trig, c.kappa))
        except (PetregError, ValueError) as exc:
            raise ScenarioError(path, str(exc)) from None

    o = doc.observer
    s = doc.sim
    try:
        observer = ObserverParams(o.mu1, o.mu2, PetmAConfig(o.iota_s, o.gamma_s, o.iota_v, o.gamma_v, o.combine_mode))
        sim = SimConfig(
            t_end=s.t_end,
            comm_period=s.T,
            sensor_periods=_per_agent(s.sensor_periods, n, "sim.sensor_periods"),
            sensor_phases=_per_agent(s.sensor_phases, n, "sim.sensor_phases"),
            substeps=s.substeps,
            override_bounds=s.override_bounds,
        )
    except PetregError as exc:
        raise ScenarioError("sim", str(exc)) from None
    bp = None
    if doc.bound_params is not None:
        q = doc.bound_params
        bp = BoundParams(q.zeta1, q.zeta2, q.zeta3, q.epsilon)
    return Scenario(graph, leader, agents, observer, sim, bp)


def load_raw(source):
    """Parse YAML from a path (``str``/``Path``) into a plain mapping."""
    text = Path(source).read_text()
    raw = yaml.safe_load(text)
    if not isinstance(raw, dict):
        raise ScenarioError("", "document must be a mapping")
    # merge keys alias nested lists between followers; break the sharing
    return json.loads(json.dumps(raw))


def parse_scenario(raw):
    return build_scenario(validate_document(raw))


def load_scenario(source):
    return parse_scenario(load_raw(source))


def dump_document(raw):
    """Serialize a (validated) document back to YAML text, merge keys expanded."""
    doc = validate_document(raw)
    return yaml.safe_dump(doc.model_dump(exclude_none=True), sort_keys=False)


def bundled_path(name):
    """Path of a scenario shipped with the package (``four_followers``, ...)."""
    p = resources.files("petreg") / "scenarios" / f"{name}.yaml"
    if not p.is_file():
        raise FileNotFoundError(f"no bundled scenario named {name!r}")
    return Path(str(p))


def bundled_names():
    root = resources.files("petreg") / "scenarios"
    return sorted(p.name[:-5] for p in root.iterdir() if p.name.endswith(".yaml"))


_TOKEN = re.compile(r"([A-Za-z_][A-Za-z0-9_]*)((?:\[(?:\d+|\*)\])*)")


def set_path(raw, path, value):
    """Set ``value`` at a dotted path in a raw document, in place.

    Segments may index lists, ``followers[0].sigma``; ``[*]`` fans out to
    every element, ``followers[*].sigma``.
    """
    parts = path.split(".")
    targets = [raw]
    for depth, part in enumerate(parts):
        m = _TOKEN.fullmatch(part)
        if not m:
            raise ScenarioError(path, f"malformed path segment {part!r}")
        key, idx = m.group(1), re.findall(r"\[(\d+|\*)\]", m.group(2))
        last = depth == len(parts) - 1
        nxt = []
        for node in targets:
            if not isinstance(node, dict) or (key not in node and not (last and not idx)):
                raise ScenarioError(path, f"unknown key {key!r}")
            if last and not idx:
                node[key] = value
                continue
            cur = [node[key]]
            for j, ix in enumerate(idx):
                expanded = []
                for c in cur:
                    if not isinstance(c, list):
                        raise ScenarioError(path, f"{key} is not a list")
                    picks = range(len(c)) if ix == "*" else [int(ix)]
                    for p in picks:
                        if p >= len(c):
                            raise ScenarioError(path, f"index {p} out of range")
                        if last and j == len(idx) - 1:
                            c[p] = value
                        else:
                            expanded.append(c[p])
                cur = expanded
            nxt.extend(cur)
        targets = nxt
    return raw


def with_overrides(raw, assignments):
    """Deep copy of ``raw`` with ``{path: value}`` applied."""
    out = copy.deepcopy(raw)
    for path, value in assignments.items():
        set_path(out, path, value)
    return out
