"""Domain types shared by every module: parties, failure graphs, messages,
round configuration, outcomes, and the scenario file format."""

from __future__ import annotations

import hashlib
import json
from dataclasses import dataclass, field, replace
from typing import Mapping, Optional, Sequence


class ScenarioError(ValueError):
    """A scenario violates one of its type invariants."""


class DuplicateSmInList(ScenarioError):
    pass


class IncompleteSendingList(ScenarioError):
    pass


class WorkingEdgeNotInGraph(ScenarioError):
    pass


class ModulusTooSmall(ScenarioError):
    pass


class NMinOutOfRange(ScenarioError):
    pass


class UnknownParty(ScenarioError):
    pass


class MissingMeasurement(ScenarioError):
    pass


class MeasurementOutOfRange(ScenarioError):
    pass


@dataclass(frozen=True, order=True)
class PartyId:
    """Either the concentrator (kind 'DC', index 0) or a meter ('SM', index >= 1)."""

    kind: str
    index: int

    _DC_KIND = "DC"
    _SM_KIND = "SM"

    @staticmethod
    def dc() -> "PartyId":
        return PartyId(PartyId._DC_KIND, 0)

    @staticmethod
    def sm(index: int) -> "PartyId":
        if index < 1:
            raise UnknownParty(f"meter index must be >= 1, got {index}")
        return PartyId(PartyId._SM_KIND, index)

    @staticmethod
    def parse(name: str) -> "PartyId":
        if name == "DC":
            return PartyId.dc()
        if name.startswith("SM"):
            suffix = name[2:]
            if suffix.isdigit() and not suffix.startswith("0"):
                return PartyId.sm(int(suffix))
        raise UnknownParty(f"unrecognized party name {name!r}")

    @property
    def name(self) -> str:
        return "DC" if self.is_dc else f"SM{self.index}"

    @property
    def is_dc(self) -> bool:
        return self.kind == PartyId._DC_KIND

    @property
    def is_sm(self) -> bool:
        return self.kind == PartyId._SM_KIND

    def __str__(self) -> str:
        return self.name


DC = PartyId.dc()

Edge = tuple[PartyId, PartyId]


def edge_key(a: PartyId, b: PartyId) -> Edge:
    """Normalize an undirected edge; both orientations map to the same key."""
    if a == b:
        raise ScenarioError(f"self-loop at {a}")
    return (a, b) if a < b else (b, a)


@dataclass(frozen=True)
class FailureGraph:
    """Undirected link graph: `edges` is the full topology, `working` the links
    that are on for the current round."""

    vertices: frozenset[PartyId]
    edges: frozenset[Edge]
    working: frozenset[Edge]

    @staticmethod
    def build(
        n_sm: int,
        edges: Sequence[tuple[PartyId, PartyId]],
        working: Sequence[tuple[PartyId, PartyId]],
    ) -> "FailureGraph":
        vertices = frozenset([DC] + [PartyId.sm(i) for i in range(1, n_sm + 1)])
        return FailureGraph(
            vertices=vertices,
            edges=frozenset(edge_key(a, b) for a, b in edges),
            working=frozenset(edge_key(a, b) for a, b in working),
        )

    def has_vertex(self, p: PartyId) -> bool:
        return p in self.vertices


def link_on(g: FailureGraph, a: PartyId, b: PartyId) -> bool:
    """True iff the undirected link between a and b is on this round."""
    if a not in g.vertices:
        raise UnknownParty(f"{a} not in graph")
    if b not in g.vertices:
        raise UnknownParty(f"{b} not in graph")
    return edge_key(a, b) in g.working


@dataclass(frozen=True)
class SendingList:
    """Ring order over meter indices; the concentrator endpoints are implicit."""

    order: tuple[int, ...]

    def __iter__(self):
        return iter(self.order)

    def __len__(self) -> int:
        return len(self.order)


# Message kinds double as the "kind" field of exported trace records.
KIND_INITIAL_DATA = "initial_data"
KIND_ACTIVATION = "activation"
KIND_ACK_S = "ack_s"
KIND_ACK = "ack"
KIND_SHARE_HANDOFF = "share_handoff"
KIND_MASKED_REPORT = "masked_report"
KIND_END_OF_ROUND = "end_of_round"


@dataclass(frozen=True)
class InitialData:
    """Per-meter opening message; payload is None when the backend ships no
    masked value (it then only marks the meter as reachable)."""

    round: int
    sm: int
    payload: Optional[int]

    kind = KIND_INITIAL_DATA


@dataclass(frozen=True)
class Activation:
    """Handoff carrying the running share and both bookkeeping lists."""

    share: object
    remaining: tuple[int, ...]
    active: tuple[int, ...]

    kind = KIND_ACTIVATION


@dataclass(frozen=True)
class AckS:
    """Explicit acknowledgment of a successful activation handoff."""

    kind = KIND_ACK_S


@dataclass(frozen=True)
class EndOfRound:
    """Final message to the concentrator; share is None iff active is empty."""

    round: int
    share: Optional[object]
    active: tuple[int, ...]

    kind = KIND_END_OF_ROUND


@dataclass(frozen=True)
class TraceRecord:
    tick: int
    sender: PartyId
    receiver: PartyId
    message: object
    delivered: bool


def trace_record_to_dict(r: TraceRecord) -> dict:
    return {
        "tick": r.tick,
        "from": r.sender.name,
        "to": r.receiver.name,
        "kind": r.message.kind,
        "delivered": r.delivered,
    }


def trace_to_jsonl(trace: Sequence[TraceRecord]) -> str:
    return "\n".join(json.dumps(trace_record_to_dict(r)) for r in trace) + "\n"


@dataclass(frozen=True)
class MaskingSpec:
    """Modular-masking backend choice; k is a power of two."""

    k_bits: int = 64

    type = "masking"

    @property
    def k(self) -> int:
        return 1 << self.k_bits


@dataclass(frozen=True)
class PaillierSpec:
    """Additive-HE backend choice."""

    key_bits: int = 256

    type = "paillier"


BackendSpec = MaskingSpec | PaillierSpec


@dataclass(frozen=True)
class Scenario:
    """One aggregation round: topology, ring order, measurements, backend, seed.

    All fields are fixed for the round; link states never change mid-round.
    """

    n_sm: int
    graph: FailureGraph
    sending_list: SendingList
    n_min: int
    round: int
    measurements: Mapping[int, int]
    backend: BackendSpec
    seed: int
    sm_online: Mapping[int, bool] = field(default_factory=dict)
    prf_keys: Optional[Mapping[int, bytes]] = None

    def online(self, i: int) -> bool:
        return self.sm_online.get(i, True)

    def with_backend(self, backend: BackendSpec) -> "Scenario":
        return replace(self, backend=backend)

    def with_seed(self, seed: int) -> "Scenario":
        return replace(self, seed=seed)


@dataclass(frozen=True)
class RoundOutcome:
    """Result of one round.

    aggregate is present iff the round terminated with at least n_min active
    meters; active lists every meter that ever held the running share.
    """

    aggregate: Optional[int]
    active: tuple[int, ...]
    remaining_at_init: tuple[int, ...]
    trace: tuple[TraceRecord, ...]
    steps: int
    terminated: bool


def validate_scenario(s: Scenario) -> Scenario:
    """Check every scenario invariant; returns the scenario unchanged.

    Idempotent; raises a ScenarioError subclass naming the violated invariant.
    """
    if s.n_sm < 1:
        raise ScenarioError(f"need at least one meter, got n_sm={s.n_sm}")
    sms = list(range(1, s.n_sm + 1))

    seen = set()
    for i in s.sending_list:
        if i not in range(1, s.n_sm + 1):
            raise UnknownParty(f"sending list names unknown meter {i}")
        if i in seen:
            raise DuplicateSmInList(f"meter {i} appears twice in the sending list")
        seen.add(i)
    if len(seen) != s.n_sm:
        missing = sorted(set(sms) - seen)
        raise IncompleteSendingList(f"sending list omits meters {missing}")

    expected_vertices = frozenset([DC] + [PartyId.sm(i) for i in sms])
    for v in s.graph.vertices:
        if v not in expected_vertices:
            raise UnknownParty(f"graph vertex {v} not part of the scenario")
    if s.graph.vertices != expected_vertices:
        raise UnknownParty("graph must contain DC and every meter")
    for a, b in s.graph.edges:
        if a not in expected_vertices or b not in expected_vertices:
            raise UnknownParty(f"edge ({a},{b}) references unknown party")
    for e in s.graph.working:
        if e not in s.graph.edges:
            raise WorkingEdgeNotInGraph(f"working edge ({e[0]},{e[1]}) not in topology")

    if not 1 <= s.n_min <= s.n_sm:
        raise NMinOutOfRange(f"n_min={s.n_min} outside 1..{s.n_sm}")

    for i in s.measurements:
        if i not in seen:
            raise UnknownParty(f"measurement for unknown meter {i}")
    for i in sms:
        if i not in s.measurements:
            raise MissingMeasurement(f"no measurement for meter {i}")
        if s.measurements[i] < 0:
            raise MeasurementOutOfRange(f"measurement of meter {i} is negative")

    if isinstance(s.backend, MaskingSpec):
        total = sum(s.measurements.values())
        if total >= s.backend.k:
            raise ModulusTooSmall(
                f"sum of measurements {total} must stay below the modulus {s.backend.k}"
            )

    for i in s.sm_online:
        if i not in seen:
            raise UnknownParty(f"online flag for unknown meter {i}")

    if not 0 <= s.seed < 1 << 64:
        raise ScenarioError("seed must fit in 64 bits")
    if s.round < 0:
        raise ScenarioError("round index must be non-negative")

    if s.prf_keys is not None:
        for i, key in s.prf_keys.items():
            if i not in seen:
                raise UnknownParty(f"pinned key for unknown meter {i}")
            if len(key) != 16:
                raise ScenarioError(f"pinned key for meter {i} must be 16 bytes")

    return s


def _backend_to_dict(b: BackendSpec) -> dict:
    if isinstance(b, MaskingSpec):
        return {"type": "masking", "k_bits": b.k_bits}
    return {"type": "paillier", "key_bits": b.key_bits}


def _backend_from_dict(d: dict) -> BackendSpec:
    if not isinstance(d, dict) or "type" not in d:
        raise ScenarioError("backend must be an object with a 'type' field")
    if d["type"] == "masking":
        return MaskingSpec(k_bits=int(d.get("k_bits", 64)))
    if d["type"] == "paillier":
        return PaillierSpec(key_bits=int(d.get("key_bits", 256)))
    raise ScenarioError(f"unknown backend type {d['type']!r}")


def scenario_to_dict(s: Scenario) -> dict:
    d = {
        "n_sm": s.n_sm,
        "edges": sorted([a.name, b.name] for a, b in s.graph.edges),
        "working_edges": sorted([a.name, b.name] for a, b in s.graph.working),
        "sending_list": list(s.sending_list.order),
        "n_min": s.n_min,
        "round": s.round,
        "measurements": {str(i): m for i, m in sorted(s.measurements.items())},
        "backend": _backend_to_dict(s.backend),
        "seed": s.seed,
    }
    if s.sm_online:
        d["sm_online"] = {str(i): v for i, v in sorted(s.sm_online.items())}
    if s.prf_keys is not None:
        d["prf_keys"] = {str(i): key.hex() for i, key in sorted(s.prf_keys.items())}
    return d


def _parse_index(raw: object, what: str) -> int:
    try:
        return int(raw)
    except (TypeError, ValueError):
        raise ScenarioError(f"{what} key {raw!r} is not a meter index") from None


def scenario_from_dict(d: dict) -> Scenario:
    try:
        n_sm = int(d["n_sm"])
        raw_edges = d["edges"]
        raw_working = d["working_edges"]
        raw_list = d["sending_list"]
        n_min = int(d["n_min"])
        round_index = int(d["round"])
        raw_measurements = d["measurements"]
        raw_backend = d["backend"]
        seed = int(d["seed"])
    except KeyError as exc:
        raise ScenarioError(f"scenario file missing key {exc.args[0]!r}") from None

    def parse_pairs(raw, what):
        pairs = []
        for item in raw:
            if len(item) != 2:
                raise ScenarioError(f"{what} entries must be 2-element arrays")
            pairs.append((PartyId.parse(item[0]), PartyId.parse(item[1])))
        return pairs

    graph = FailureGraph.build(
        n_sm,
        parse_pairs(raw_edges, "edges"),
        parse_pairs(raw_working, "working_edges"),
    )
    measurements = {
        _parse_index(i, "measurements"): int(m) for i, m in raw_measurements.items()
    }
    sm_online = {
        _parse_index(i, "sm_online"): bool(v)
        for i, v in d.get("sm_online", {}).items()
    }
    prf_keys = None
    if "prf_keys" in d:
        prf_keys = {
            _parse_index(i, "prf_keys"): bytes.fromhex(h)
            for i, h in d["prf_keys"].items()
        }
    return Scenario(
        n_sm=n_sm,
        graph=graph,
        sending_list=SendingList(tuple(int(i) for i in raw_list)),
        n_min=n_min,
        round=round_index,
        measurements=measurements,
        backend=_backend_from_dict(raw_backend),
        seed=seed,
        sm_online=sm_online,
        prf_keys=prf_keys,
    )


def scenario_to_json(s: Scenario, pretty: bool = False) -> str:
    indent = 2 if pretty else None
    return json.dumps(scenario_to_dict(s), indent=indent, sort_keys=True)


def scenario_from_json(text: str) -> Scenario:
    return scenario_from_dict(json.loads(text))


def scenario_digest(s: Scenario) -> str:
    """Stable content hash used to key reports to their scenario."""
    canonical = json.dumps(scenario_to_dict(s), sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(canonical.encode()).hexdigest()
