"""Bus directory, link enforcement, and ledger-vs-formula equivalence."""

import json
import random

import pytest

from uvfsim.bus import (
    BROADCAST,
    Bus,
    DuplicateName,
    LinkForbidden,
    Performative,
    UnknownAgent,
    ensure_node_agents,
    message,
    run_telemetry_cycle,
)
from uvfsim.fleet import UvId
from uvfsim.topology import MCC, compute_traffic, make_topology

from conftest import random_fleet_topology

A1, A2, A3, A4, A5 = (UvId(f"UAV{i}") for i in range(1, 6))
G1, G2, G3 = (UvId(f"UGV{i}") for i in range(1, 4))

EMPTY = make_topology(layers={}, masters={})


def relay_pair():
    return make_topology(layers={A4: 1, G3: 2}, masters={A4: MCC, G3: A4})


def holonic_full():
    return make_topology(
        layers={A1: 1, A3: 1, A5: 1, A2: 2, A4: 2, G2: 2, G1: 3, G3: 3},
        masters={A1: MCC, A3: MCC, A5: MCC, A2: A1, A4: A5, G2: A3},
        peer_links=[(A1, A3), (A1, A5), (A3, A5), (G2, G1), (G2, G3)],
    )


def test_register_issues_unique_addresses():
    bus = Bus()
    a = bus.register_agent("UAV1", {"uv-telemetry"})
    b = bus.register_agent("UAV2", {"uv-telemetry"})
    assert a.address != b.address
    assert bus.agent("UAV1") == a


def test_register_twice_is_rejected():
    bus = Bus()
    bus.register_agent("UAV1")
    with pytest.raises(DuplicateName):
        bus.register_agent("UAV1")


def test_lookup_service_in_registration_order():
    bus = Bus()
    bus.register_agent("UAV2", {"uv-telemetry"})
    bus.register_agent("operator", {"operator"})
    bus.register_agent("UAV1", {"uv-telemetry"})
    assert [a.name for a in bus.lookup_service("uv-telemetry")] == ["UAV2", "UAV1"]
    assert [a.name for a in bus.lookup_service("operator")] == ["operator"]
    assert bus.lookup_service("missing") == []


def test_deregistration_removes_directory_entry():
    bus = Bus()
    bus.register_agent("UAV1", {"uv-telemetry"})
    bus.deregister("UAV1")
    assert bus.lookup_service("uv-telemetry") == []
    with pytest.raises(UnknownAgent):
        bus.agent("UAV1")


def test_unregistered_sender_is_rejected():
    bus = Bus()
    ghost = bus.register_agent("UAV1")
    bus.deregister("UAV1")
    mcc = bus.register_agent("MCC", {"mcc-control"})
    msg = message(Performative.INFORM, ghost, mcc, "c1", 0, payload="x")
    with pytest.raises(UnknownAgent):
        bus.send(msg, EMPTY)


def test_empty_content_key_is_rejected():
    bus = Bus()
    a = bus.register_agent("UAV1")
    with pytest.raises(ValueError):
        message(Performative.INFORM, a, a, "c1", 0, **{"": "x"})


def test_operator_mode_change_conversation():
    bus = Bus()
    operator = bus.register_agent("operator", {"operator"})
    mcc = bus.register_agent("MCC", {"mcc-control"})
    req = message(
        Performative.REQUEST, operator, mcc, "mode-1", 0,
        mode="manual", pattern="central",
    )
    receipt = bus.send(req, EMPTY)
    assert receipt.delivered_to == (mcc,)
    assert receipt.charges == ()  # supervision channel is free
    assert bus.unanswered_requests() == [("mode-1", "operator", "MCC")]
    bus.send(message(Performative.AGREE, mcc, operator, "mode-1", 0, mode="manual"), EMPTY)
    assert bus.unanswered_requests() == []


def test_unlinked_vehicles_cannot_talk():
    topo = holonic_full()
    bus = Bus()
    ensure_node_agents(bus, topo)
    msg = message(
        Performative.INFORM, bus.agent("UGV3"), bus.agent("UAV2"), "c1", 0, payload="x"
    )
    with pytest.raises(LinkForbidden):
        bus.send(msg, topo)
    assert bus.cycle_ledger() == {MCC: 0}


def test_slave_cannot_initiate_toward_master():
    topo = relay_pair()
    bus = Bus()
    ensure_node_agents(bus, topo)
    up = message(Performative.INFORM, bus.agent("UGV3"), bus.agent("UAV4"), "c1", 0, payload="x")
    with pytest.raises(LinkForbidden):
        bus.send(up, topo)
    # Once the master opens the conversation the reply is allowed.
    bus.send(
        message(Performative.REQUEST, bus.agent("UAV4"), bus.agent("UGV3"), "c1", 0, subject="s"),
        topo,
    )
    receipt = bus.send(
        message(Performative.AGREE, bus.agent("UGV3"), bus.agent("UAV4"), "c1", 0, subject="s"),
        topo,
    )
    assert receipt.delivered_to == (bus.agent("UAV4"),)
    assert bus.unanswered_requests() == []


def test_master_commands_slave_directly():
    topo = relay_pair()
    bus = Bus()
    ensure_node_agents(bus, topo)
    receipt = bus.send(
        message(Performative.REQUEST, bus.agent("MCC"), bus.agent("UAV4"), "c1", 0, subject="s"),
        topo,
    )
    assert receipt.delivered_to == (bus.agent("UAV4"),)


def test_mcc_cannot_skip_relay_layers():
    topo = relay_pair()
    bus = Bus()
    ensure_node_agents(bus, topo)
    skip = message(Performative.REQUEST, bus.agent("MCC"), bus.agent("UGV3"), "c1", 0, subject="s")
    with pytest.raises(LinkForbidden):
        bus.send(skip, topo)


def test_cluster_head_broadcast_reaches_both_members():
    topo = holonic_full()
    bus = Bus()
    ensure_node_agents(bus, topo)
    receipt = bus.send(
        message(Performative.INFORM, bus.agent("UGV2"), BROADCAST, "c1", 0, payload="x"),
        topo,
    )
    assert tuple(a.name for a in receipt.delivered_to) == ("UGV1", "UGV3")


def test_cycle_ledger_relay_pair():
    bus = Bus()
    ledger = run_telemetry_cycle(bus, relay_pair(), cycle=1)
    assert ledger == {A4: 800, G3: 0, MCC: 1600}
    assert bus.unanswered_requests() == []


def test_cycle_ledger_empty_topology():
    bus = Bus()
    assert run_telemetry_cycle(bus, EMPTY, cycle=1) == {MCC: 0}


def test_cycle_ledger_matches_formula_on_holonic_fleet():
    topo = holonic_full()
    bus = Bus()
    assert run_telemetry_cycle(bus, topo, cycle=3) == compute_traffic(topo)


def test_cycle_ledger_matches_formula_on_random_topologies():
    rng = random.Random(2024)
    for _ in range(60):
        topo, _records = random_fleet_topology(rng)
        bus = Bus()
        assert run_telemetry_cycle(bus, topo, cycle=1) == compute_traffic(topo)
        assert bus.unanswered_requests() == []


def test_random_illegal_sends_never_deliver():
    rng = random.Random(99)
    for _ in range(40):
        topo, records = random_fleet_topology(rng)
        bus = Bus()
        ensure_node_agents(bus, topo)
        for uv in records:
            if uv.name not in [a.name for a in bus.lookup_service("uv-telemetry")]:
                bus.register_agent(uv.name, {"uv-telemetry"})
        names = sorted(str(uv) for uv in records)
        for _ in range(10):
            s, r = rng.choice(names), rng.choice(names)
            s_uv, r_uv = UvId(s), UvId(r)
            linked = (
                topo.masters.get(r_uv) == s_uv
                or frozenset({s_uv, r_uv}) in topo.peer_links
            )
            if s == r or linked:
                continue
            msg = message(
                Performative.INFORM, bus.agent(s), bus.agent(r), "fuzz", 0, payload="x"
            )
            with pytest.raises(LinkForbidden):
                bus.send(msg, topo)


def test_log_export_shape():
    bus = Bus()
    run_telemetry_cycle(bus, relay_pair(), cycle=2)
    lines = bus.export_log().splitlines()
    assert len(lines) == len(bus.log())
    first = json.loads(lines[0])
    assert first["cycle"] == 2
    assert first["performative"] == "REQUEST"
    assert first["sender"] == "MCC"
    assert first["receiver"] == "UAV4"
    assert "content" in first
