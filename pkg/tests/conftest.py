"""Shared scenario builders for the test suite."""

from __future__ import annotations

import itertools
import random

from ftagg.model import (
    DC,
    FailureGraph,
    MaskingSpec,
    PaillierSpec,
    PartyId,
    Scenario,
    SendingList,
    validate_scenario,
)


def sm(i: int) -> PartyId:
    return PartyId.sm(i)


def full_edges(n_sm: int) -> list[tuple[PartyId, PartyId]]:
    parties = [DC] + [sm(i) for i in range(1, n_sm + 1)]
    return list(itertools.combinations(parties, 2))


def make_scenario(
    n_sm,
    edges=None,
    working=None,
    off=(),
    n_min=2,
    measurements=None,
    backend=None,
    seed=42,
    order=None,
    online=None,
    round_index=0,
):
    """Build a validated scenario; `off` removes edges from a full working set."""
    edges = edges if edges is not None else full_edges(n_sm)
    if working is None:
        off_keys = {frozenset(e) for e in off}
        working = [e for e in edges if frozenset(e) not in off_keys]
    measurements = measurements or {i: 10 * i for i in range(1, n_sm + 1)}
    return validate_scenario(
        Scenario(
            n_sm=n_sm,
            graph=FailureGraph.build(n_sm, edges, working),
            sending_list=SendingList(tuple(order or range(1, n_sm + 1))),
            n_min=n_min,
            round=round_index,
            measurements=measurements,
            backend=backend or MaskingSpec(),
            seed=seed,
            sm_online=online or {},
        )
    )


def golden_ring4() -> Scenario:
    """4-meter network where meters 2 and 4 cannot reach the concentrator and
    the 1-2 link is down; hand-walked contributors are [1, 3], sum 30."""
    edges = [
        (DC, sm(1)), (DC, sm(2)), (DC, sm(3)), (DC, sm(4)),
        (sm(1), sm(2)), (sm(1), sm(3)), (sm(2), sm(3)), (sm(2), sm(4)),
        (sm(3), sm(4)),
    ]
    working = [
        (DC, sm(1)), (DC, sm(3)),
        (sm(1), sm(3)), (sm(2), sm(3)), (sm(2), sm(4)), (sm(3), sm(4)),
    ]
    return make_scenario(
        4,
        edges=edges,
        working=working,
        measurements={1: 10, 2: 7, 3: 20, 4: 9},
        seed=42,
    )


def golden_ring5() -> Scenario:
    """5-meter full mesh with meter 2 cut off from the concentrator and the
    3-4 link down; hand-walked contributors are [1, 3, 5], sum 35."""
    return make_scenario(
        5,
        off=[(DC, sm(2)), (sm(3), sm(4))],
        measurements={1: 10, 2: 7, 3: 20, 4: 9, 5: 5},
        seed=7,
    )


def random_scenario(rng: random.Random, n_max=12, backend=None, key_bits=128):
    """Random valid scenario: random topology, working density, ring order.

    Paillier scenarios default to small keys to keep bulk suites fast.
    """
    n = rng.randint(1, n_max)
    edges = [e for e in full_edges(n) if rng.random() < 0.85]
    density = rng.uniform(0.2, 1.0)
    working = [e for e in edges if rng.random() < density]
    order = list(range(1, n + 1))
    rng.shuffle(order)
    if backend is None:
        backend = rng.choice([MaskingSpec(), PaillierSpec(key_bits=key_bits)])
    elif backend == "masking":
        backend = MaskingSpec()
    elif backend == "paillier":
        backend = PaillierSpec(key_bits=key_bits)
    online = {}
    if n > 1 and rng.random() < 0.3:
        online[rng.randint(1, n)] = False
    return validate_scenario(
        Scenario(
            n_sm=n,
            graph=FailureGraph.build(n, edges, working),
            sending_list=SendingList(tuple(order)),
            n_min=rng.randint(1, n),
            round=rng.randint(0, 1000),
            measurements={i: rng.randint(0, 1000) for i in range(1, n + 1)},
            backend=backend,
            seed=rng.getrandbits(64),
            sm_online=online,
        )
    )


def zero_failure_scenario(rng: random.Random, n_max=12, backend=None):
    """Full mesh, all links working, everyone online."""
    n = rng.randint(2, n_max)
    return make_scenario(
        n,
        n_min=rng.randint(1, n),
        measurements={i: rng.randint(0, 1000) for i in range(1, n + 1)},
        backend=backend or MaskingSpec(),
        seed=rng.getrandbits(64),
    )
