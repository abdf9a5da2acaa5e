"""Shared fixtures: a standard eight-vehicle fleet and topology builders."""

import sys
from fractions import Fraction

import pytest

from uvfsim.fleet import StateClocks, UvId, UvKind, UvRecord, UvState
from uvfsim.topology import MCC, Topology, validate_topology

UAVS = [UvId(f"UAV{i}") for i in range(1, 6)]
UGVS = [UvId(f"UGV{i}") for i in range(1, 4)]


def registered(uv_id, *, controlled=False, t_unc=0, t_c=0):
    """A registered record with optional pre-set control clocks."""
    name = str(uv_id)
    kind = UvKind.UAV if name.startswith("UAV") else UvKind.UGV
    state = UvState.REGISTERED_CONTROLLED if controlled else UvState.REGISTERED_UNCONTROLLED
    t_unc, t_c = Fraction(t_unc), Fraction(t_c)
    return UvRecord(
        id=uv_id,
        kind=kind,
        in_mcc_range=(kind is UvKind.UAV),
        state=state,
        clocks=StateClocks(
            t_av=t_unc + t_c, t_r=t_unc + t_c, t_unc=t_unc, t_c=t_c
        ),
    )


@pytest.fixture
def full_fleet():
    """All eight vehicles registered; UAVs in range, UGVs out of range."""
    return {uv: registered(uv) for uv in UAVS + UGVS}


def random_fleet_topology(rng):
    """A random topology that passes every structural check.

    Returns ``(topology, records)`` where records covers the whole fleet,
    connected or not. Shapes span all three patterns: bare layer 1, relay
    followers, same-kind clusters, and optional lateral peer links.
    """
    n_uav = rng.randint(1, 5)
    n_ugv = rng.randint(0, 3)
    uavs = UAVS[:n_uav]
    ugvs = UGVS[:n_ugv]
    records = {uv: registered(uv) for uv in uavs + ugvs}

    layer1 = rng.sample(uavs, rng.randint(1, min(3, n_uav)))
    layers = {uv: 1 for uv in layer1}
    masters = {uv: MCC for uv in layer1}
    slots = {uv: 2 for uv in layer1}

    pool = [uv for uv in uavs + ugvs if uv not in layers]
    rng.shuffle(pool)

    # Same-kind cluster under a leader with a spare slot.
    if len(pool) >= 2 and rng.random() < 0.5:
        kinds = {}
        for uv in pool:
            kinds.setdefault(records[uv].kind, []).append(uv)
        groups = [g for g in kinds.values() if len(g) >= 2]
        open_leaders = [l for l in layer1 if slots[l] > 0]
        if groups and open_leaders:
            group = rng.choice(groups)[: rng.randint(2, 3)]
            head, *members = group
            leader = rng.choice(open_leaders)
            layers[head] = 2
            masters[head] = leader
            slots[leader] -= 1
            for m in members:
                layers[m] = 3
            peer_links = {frozenset({head, m}) for m in members}
            pool = [uv for uv in pool if uv not in group]
        else:
            peer_links = set()
    else:
        peer_links = set()

    for uv in pool:
        open_leaders = [l for l in layer1 if slots[l] > 0]
        if not open_leaders or rng.random() < 0.2:
            continue  # stays disconnected
        leader = rng.choice(open_leaders)
        layers[uv] = 2
        masters[uv] = leader
        slots[leader] -= 1

    if len(layer1) >= 2 and rng.random() < 0.4:
        for i, a in enumerate(layer1):
            for b in layer1[i + 1:]:
                if rng.random() < 0.8:
                    peer_links.add(frozenset({a, b}))

    topo = Topology(layers=layers, masters=masters, peer_links=frozenset(peer_links))
    problems = validate_topology(topo, records)
    assert problems == [], problems
    return topo, records


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    """Repeat the acceptance verdict lines where capture cannot hide them."""
    module = sys.modules.get("test_acceptance")
    lines = getattr(module, "RESULTS", None)
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in lines:
            terminalreporter.write_line(line)
