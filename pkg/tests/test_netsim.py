import json

import pytest
from conftest import golden_ring4, make_scenario, sm
from ftagg.model import DC, AckS, InitialData, ScenarioError, UnknownParty, trace_to_jsonl
from ftagg.netsim import DeliveryStatus, SimNetwork


def msg(i=1):
    return InitialData(round=0, sm=sm(i), payload=7)


def test_delivery_over_working_link():
    net = SimNetwork.for_scenario(golden_ring4())
    status = net.send(sm(1), DC, msg())
    assert status is DeliveryStatus.DELIVERED
    assert net.elapsed() == 1
    assert [m for m in net.inboxes[DC]] == [msg()]


def test_timeout_over_dead_link():
    net = SimNetwork.for_scenario(golden_ring4(), delta_t=5)
    status = net.send(sm(2), DC, msg(2))
    assert status is DeliveryStatus.TIMED_OUT
    assert net.elapsed() == 5
    assert net.inboxes[DC] == []


def test_tick_accounting_mixes_costs():
    net = SimNetwork.for_scenario(golden_ring4(), delta_t=5)
    net.send(sm(1), DC, msg(1))     # +1
    net.send(sm(2), DC, msg(2))     # +5
    net.send(DC, sm(1), msg(1))     # +1
    assert net.elapsed() == 7


def test_every_attempt_is_traced_once():
    net = SimNetwork.for_scenario(golden_ring4())
    net.send(sm(1), DC, msg(1))
    net.send(sm(2), DC, msg(2))
    assert len(net.trace) == 2
    delivered = [r.delivered for r in net.trace]
    assert delivered == [True, False]
    assert net.trace[0].tick == 1
    assert net.trace[1].tick == 6


def test_bundled_ack_costs_nothing():
    net = SimNetwork.for_scenario(golden_ring4())
    net.send(DC, sm(1), msg(1))
    before = net.elapsed()
    net.send_bundled_ack(sm(1), DC, AckS())
    assert net.elapsed() == before
    assert net.trace[-1].delivered is True
    assert net.trace[-1].message == AckS()
    assert net.inboxes[DC] == [AckS()]


def test_bundled_ack_requires_live_link():
    net = SimNetwork.for_scenario(golden_ring4())
    with pytest.raises(AssertionError):
        net.send_bundled_ack(sm(2), DC, AckS())


def test_offline_receiver_times_out():
    s = make_scenario(3, off=(), online={3: False})
    net = SimNetwork.for_scenario(s)
    assert net.send(DC, sm(3), msg(3)) is DeliveryStatus.TIMED_OUT
    assert net.send(sm(3), DC, msg(3)) is DeliveryStatus.TIMED_OUT


def test_self_send_rejected():
    net = SimNetwork.for_scenario(golden_ring4())
    with pytest.raises(ScenarioError):
        net.send(sm(1), sm(1), msg())


def test_unknown_party_rejected():
    net = SimNetwork.for_scenario(golden_ring4())
    with pytest.raises(UnknownParty):
        net.send(sm(9), DC, msg(9))


def test_dc_must_stay_online():
    s = make_scenario(2)
    net = SimNetwork.for_scenario(s)
    assert net.is_online(DC)
    with pytest.raises(ScenarioError):
        SimNetwork(s.graph, delta_t=5, online={DC: False, sm(1): True, sm(2): True})


def test_delta_t_must_be_positive():
    s = make_scenario(2)
    with pytest.raises(ScenarioError):
        SimNetwork.for_scenario(s, delta_t=0)


def test_identical_sequences_trace_identically():
    def drive(net):
        net.send(sm(1), DC, msg(1))
        net.send(sm(2), DC, msg(2))
        net.send(DC, sm(1), msg(1))
        return net.trace

    a = drive(SimNetwork.for_scenario(golden_ring4()))
    b = drive(SimNetwork.for_scenario(golden_ring4()))
    assert a == b


def test_trace_jsonl_shape():
    net = SimNetwork.for_scenario(golden_ring4())
    net.send(sm(1), DC, msg(1))
    net.send(sm(2), DC, msg(2))
    lines = trace_to_jsonl(net.trace).splitlines()
    assert len(lines) == 2
    first = json.loads(lines[0])
    assert first == {
        "tick": 1,
        "from": "SM1",
        "to": "DC",
        "kind": "initial_data",
        "delivered": True,
    }
    second = json.loads(lines[1])
    assert second["delivered"] is False and second["from"] == "SM2"
