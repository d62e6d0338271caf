"""Deterministic message transport with static per-round link failures.

A send either delivers (1 tick) or times out (delta_t ticks, the cost of
waiting for an acknowledgment that never comes). Acknowledgment records for
delivered handoffs are traced separately at zero tick cost because the
delivering exchange already paid for the round trip.
"""

from __future__ import annotations

import enum
from typing import Mapping, Optional

from .model import (
    DC,
    FailureGraph,
    PartyId,
    ScenarioError,
    TraceRecord,
    link_on,
)


class DeliveryStatus(enum.Enum):
    DELIVERED = "delivered"
    TIMED_OUT = "timed_out"


class SimNetwork:
    """Single-round transport over a frozen FailureGraph.

    The graph's working set never changes while the instance lives; an offline
    meter is modeled as every link touching it being treated as off.
    """

    def __init__(
        self,
        graph: FailureGraph,
        delta_t: int = 5,
        online: Optional[Mapping[PartyId, bool]] = None,
    ):
        if delta_t < 1:
            raise ScenarioError("delta_t must be at least 1 tick")
        self.graph = graph
        self.delta_t = delta_t
        self._online = dict(online or {})
        if not self._online.get(DC, True):
            raise ScenarioError("the concentrator cannot be offline")
        self.clock = 0
        self.trace: list[TraceRecord] = []
        self.inboxes: dict[PartyId, list[object]] = {v: [] for v in graph.vertices}

    @staticmethod
    def for_scenario(scenario, delta_t: int = 5) -> "SimNetwork":
        online = {PartyId.sm(i): scenario.online(i) for i in range(1, scenario.n_sm + 1)}
        return SimNetwork(scenario.graph, delta_t=delta_t, online=online)

    def is_online(self, p: PartyId) -> bool:
        return self._online.get(p, True)

    def _link_works(self, a: PartyId, b: PartyId) -> bool:
        return link_on(self.graph, a, b) and self.is_online(a) and self.is_online(b)

    def send(self, sender: PartyId, receiver: PartyId, msg) -> DeliveryStatus:
        """Attempt a delivery; every attempt lands in the trace exactly once."""
        if sender == receiver:
            raise ScenarioError(f"{sender} cannot send to itself")
        if self._link_works(sender, receiver):
            self.clock += 1
            self.trace.append(TraceRecord(self.clock, sender, receiver, msg, True))
            self.inboxes.setdefault(receiver, []).append(msg)
            return DeliveryStatus.DELIVERED
        self.clock += self.delta_t
        self.trace.append(TraceRecord(self.clock, sender, receiver, msg, False))
        return DeliveryStatus.TIMED_OUT

    def send_bundled_ack(self, sender: PartyId, receiver: PartyId, msg) -> None:
        """Trace an acknowledgment for a handoff that just delivered.

        The link is known to be on (the triggering message got through and
        links are static), so this never times out and costs no extra ticks.
        """
        assert self._link_works(sender, receiver), "ack over a dead link"
        self.trace.append(TraceRecord(self.clock, sender, receiver, msg, True))
        self.inboxes.setdefault(receiver, []).append(msg)

    def elapsed(self) -> int:
        return self.clock
