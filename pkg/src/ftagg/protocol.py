"""The ring-aggregation engine and its trace classifier.

One round has three phases: every meter reports to the concentrator, the
activation chain threads the running share along the reachable meters, and
the concentrator finishes from the final message. The computation is plugged
in behind a small backend interface so the message flow never changes.
"""

from __future__ import annotations

from typing import Optional, Protocol

from .masking import MaskingBackend
from .model import (
    DC,
    Activation,
    AckS,
    EndOfRound,
    InitialData,
    KIND_ACTIVATION,
    KIND_END_OF_ROUND,
    MaskingSpec,
    PartyId,
    RoundOutcome,
    Scenario,
    TraceRecord,
)
from .netsim import DeliveryStatus, SimNetwork
from .paillier import PaillierBackend

STEP_CAP_SLOPE = 10
STEP_CAP_OFFSET = 10


class MalformedTrace(ValueError):
    pass


class ComputationBackend(Protocol):
    """What the engine needs from a computation scheme.

    initial_payload may return None when nothing rides the opening message;
    finalize must return None whenever it receives no final share.
    """

    def initial_payload(self, i: int, t: int) -> Optional[object]: ...

    def init_share(self) -> tuple[object, object]: ...

    def fold_measurement(self, s_running: object, i: int) -> object: ...

    def finalize(self, s_final, l_act, collected, aux) -> Optional[int]: ...


def make_backend(scenario: Scenario) -> ComputationBackend:
    if isinstance(scenario.backend, MaskingSpec):
        return MaskingBackend(scenario)
    return PaillierBackend(scenario)


def run_round(
    scenario: Scenario, backend: ComputationBackend, net: SimNetwork
) -> RoundOutcome:
    """Execute one full round; failures are outcomes, never exceptions."""
    t = scenario.round
    n_min = scenario.n_min

    # Opening phase: every online meter reports once, then goes quiet.
    collected: dict[int, object] = {}
    for i in scenario.sending_list:
        if not scenario.online(i):
            continue
        payload = backend.initial_payload(i, t)
        status = net.send(PartyId.sm(i), DC, InitialData(t, i, payload))
        if status is DeliveryStatus.DELIVERED:
            collected[i] = payload

    l_rem = [i for i in scenario.sending_list if i in collected]
    remaining_at_init = tuple(l_rem)
    l_act: list[int] = []

    def finish(aggregate: Optional[int]) -> RoundOutcome:
        trace = tuple(net.trace)
        steps = len(trace)
        cap = STEP_CAP_SLOPE * scenario.n_sm + STEP_CAP_OFFSET
        assert steps <= cap, f"{steps} steps exceed the hard cap {cap}"
        return RoundOutcome(
            aggregate=aggregate,
            active=tuple(l_act),
            remaining_at_init=remaining_at_init,
            trace=trace,
            steps=steps,
            terminated=True,
        )

    if len(l_rem) < n_min:
        return finish(None)

    aux, s_running = backend.init_share()

    def check_last() -> bool:
        return not l_rem or len(l_rem) + len(l_act) < n_min

    # The first pick's concentrator link already worked this round, so this
    # handoff cannot time out.
    first = l_rem[0]
    status = net.send(DC, PartyId.sm(first), Activation(s_running, tuple(l_rem), ()))
    assert status is DeliveryStatus.DELIVERED, "opening handoff lost on a live link"
    net.send_bundled_ack(PartyId.sm(first), DC, AckS())

    holder = first
    eor: Optional[EndOfRound] = None
    while eor is None:
        s_running = backend.fold_measurement(s_running, holder)
        l_act.append(holder)
        l_rem.remove(holder)

        is_last = check_last()
        next_holder = None
        while not is_last:
            j = l_rem[0]
            status = net.send(
                PartyId.sm(holder),
                PartyId.sm(j),
                Activation(s_running, tuple(l_rem), tuple(l_act)),
            )
            if status is DeliveryStatus.DELIVERED:
                net.send_bundled_ack(PartyId.sm(j), PartyId.sm(holder), AckS())
                next_holder = j
                break
            l_rem.remove(j)
            is_last = check_last()

        if is_last:
            # The quorum check rides with the final message: below quorum the
            # share and the contributor list are both withheld.
            if len(l_rem) + len(l_act) < n_min:
                eor = EndOfRound(t, None, ())
            else:
                eor = EndOfRound(t, s_running, tuple(l_act))
            status = net.send(PartyId.sm(holder), DC, eor)
            assert status is DeliveryStatus.DELIVERED, "final message lost on a live link"
        else:
            holder = next_holder

    if eor.share is None:
        return finish(None)
    return finish(backend.finalize(eor.share, eor.active, collected, aux))


C1 = "C1"
C2 = "C2"
C3_1 = "C3_1"
C3_2 = "C3_2"


def classify_steps(outcome: RoundOutcome) -> list[str]:
    """Label every activation-chain step of a terminated round.

    C2: a delivered meter-to-meter handoff. C3_2: a failed handoff whose
    sender then tried another meter. C3_1: a failed handoff that ended the
    round (the sender's next act was the final message). C1: a final message
    not forced by a failed handoff. The concentrator's opening handoff is not
    a chain step and carries no label.
    """
    if not outcome.terminated:
        raise MalformedTrace("cannot classify a round that never terminated")
    events = [
        r
        for r in outcome.trace
        if r.message.kind in (KIND_ACTIVATION, KIND_END_OF_ROUND)
    ]
    labels = []
    for idx, r in enumerate(events):
        if r.message.kind == KIND_ACTIVATION:
            if r.sender.is_dc:
                if not r.delivered:
                    raise MalformedTrace("opening handoff must deliver")
                continue
            if r.delivered:
                labels.append(C2)
                continue
            if idx + 1 >= len(events):
                raise MalformedTrace("failed handoff with no follow-up from its sender")
            nxt = events[idx + 1]
            if nxt.sender != r.sender:
                raise MalformedTrace("failed handoff followed by a foreign step")
            labels.append(C3_2 if nxt.message.kind == KIND_ACTIVATION else C3_1)
        else:
            if r.sender.is_dc:
                raise MalformedTrace("final message sent by the concentrator")
            prev = events[idx - 1] if idx > 0 else None
            forced = (
                prev is not None
                and prev.message.kind == KIND_ACTIVATION
                and not prev.delivered
                and prev.sender == r.sender
            )
            if not forced:
                labels.append(C1)
    return labels


def proof_case_histogram(outcome: RoundOutcome) -> dict[str, int]:
    hist = {C1: 0, C2: 0, C3_1: 0, C3_2: 0}
    for label in classify_steps(outcome):
        hist[label] += 1
    return hist
