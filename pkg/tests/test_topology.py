"""Topology graph: classification, validation, and the traffic formula."""

import pytest

from uvfsim.fleet import UvId
from uvfsim.topology import (
    MCC,
    CapacityLimits,
    Pattern,
    classify_pattern,
    compute_traffic,
    make_topology,
    topology_as_dict,
    topology_from_dict,
    validate_topology,
)

from conftest import registered

A1, A2, A3, A4, A5 = (UvId(f"UAV{i}") for i in range(1, 6))
G1, G2, G3 = (UvId(f"UGV{i}") for i in range(1, 4))


def central_three():
    return make_topology(
        layers={A2: 1, A4: 1, A5: 1},
        masters={A2: MCC, A4: MCC, A5: MCC},
    )


def hierarchical_single_relay():
    # One leader relaying one out-of-range follower.
    return make_topology(layers={A4: 1, G3: 2}, masters={A4: MCC, G3: A4})


def hierarchical_full():
    return make_topology(
        layers={A1: 1, A3: 1, A5: 1, A2: 2, A4: 2, G1: 2, G3: 2},
        masters={A1: MCC, A3: MCC, A5: MCC, A2: A3, A4: A1, G1: A5, G3: A3},
    )


def holonic_full():
    # Three leaders in a peer mesh; a UGV cluster headed by G2 under A3.
    return make_topology(
        layers={A1: 1, A3: 1, A5: 1, A2: 2, A4: 2, G2: 2, G1: 3, G3: 3},
        masters={A1: MCC, A3: MCC, A5: MCC, A2: A1, A4: A5, G2: A3},
        peer_links=[(A1, A3), (A1, A5), (A3, A5), (G1, G2), (G3, G2)],
    )


def test_classify_empty_is_none():
    assert classify_pattern(make_topology({}, {})) is None


def test_classify_central():
    assert classify_pattern(central_three()) is Pattern.CENTRAL


def test_classify_hierarchical():
    assert classify_pattern(hierarchical_single_relay()) is Pattern.HIERARCHICAL
    assert classify_pattern(hierarchical_full()) is Pattern.HIERARCHICAL


def test_classify_holonic_by_depth():
    assert classify_pattern(holonic_full()) is Pattern.HOLONIC


def test_classify_holonic_by_peers_alone():
    topo = make_topology(
        layers={A1: 1, A2: 1},
        masters={A1: MCC, A2: MCC},
        peer_links=[(A1, A2)],
    )
    assert classify_pattern(topo) is Pattern.HOLONIC


def test_validate_accepts_reference_shapes(full_fleet):
    for topo in (central_three(), hierarchical_single_relay(), hierarchical_full(), holonic_full()):
        assert validate_topology(topo, full_fleet) == []


def test_validate_rejects_out_of_range_leader(full_fleet):
    topo = make_topology(layers={G1: 1}, masters={G1: MCC})
    assert any("out of MCC range" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_unregistered_vehicle(full_fleet):
    from uvfsim.fleet import UvRecord, UvKind, UvState

    fleet = dict(full_fleet)
    fleet[A1] = UvRecord(id=A1, kind=UvKind.UAV, in_mcc_range=True, state=UvState.AVAILABLE_UNREGISTERED)
    topo = make_topology(layers={A1: 1}, masters={A1: MCC})
    assert any("not registered" in p for p in validate_topology(topo, fleet))


def test_validate_rejects_fourth_mcc_link(full_fleet):
    topo = make_topology(
        layers={A1: 1, A2: 1, A3: 1, A4: 1},
        masters={uv: MCC for uv in (A1, A2, A3, A4)},
    )
    assert any("MCC holds 4 links" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_third_follower(full_fleet):
    topo = make_topology(
        layers={A1: 1, A2: 2, A3: 2, A4: 2},
        masters={A1: MCC, A2: A1, A3: A1, A4: A1},
    )
    assert any("leads 3 vehicles" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_member_with_master(full_fleet):
    topo = make_topology(
        layers={A1: 1, G2: 2, G1: 3},
        masters={A1: MCC, G2: A1, G1: G2},
        peer_links=[(G1, G2)],
    )
    assert any("must not hold a master-slave link" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_mixed_kind_cluster(full_fleet):
    topo = make_topology(
        layers={A1: 1, A2: 2, G1: 3},
        masters={A1: MCC, A2: A1},
        peer_links=[(G1, A2)],
    )
    assert any("differ in kind" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_lateral_link_below_layer1(full_fleet):
    topo = make_topology(
        layers={A1: 1, A3: 1, A2: 2, A4: 2},
        masters={A1: MCC, A3: MCC, A2: A1, A4: A3},
        peer_links=[(A2, A4)],
    )
    assert any("joins layers 2 and 2" in p for p in validate_topology(topo, full_fleet))


def test_validate_rejects_oversize_fleet():
    fleet = {UvId(f"UAV{i}"): registered(UvId(f"UAV{i}")) for i in range(1, 7)}
    topo = make_topology(layers={}, masters={})
    assert any("6 UAVs" in p for p in validate_topology(topo, fleet))
    assert validate_topology(topo, fleet, CapacityLimits(max_uavs=6)) == []


def test_descendants_count_members_through_head():
    topo = holonic_full()
    assert topo.descendants(A3) == {G2, G1, G3}
    assert topo.descendants(G2) == {G1, G3}
    assert topo.descendants(A1) == {A2}
    assert topo.descendants(MCC) == set(topo.layers)


# Traffic for one telemetry cycle, frozen against worked examples: a single
# relay pair, a three-leader tree, and the full clustered mesh.
def test_traffic_single_relay():
    assert compute_traffic(hierarchical_single_relay()) == {A4: 800, G3: 0, MCC: 1600}


def test_traffic_central():
    assert compute_traffic(central_three()) == {A2: 0, A4: 0, A5: 0, MCC: 2400}


def test_traffic_balanced_tree():
    topo = make_topology(
        layers={A1: 1, A2: 1, A5: 1, A4: 2, G1: 2, G3: 2},
        masters={A1: MCC, A2: MCC, A5: MCC, A4: A1, G3: A2, G1: A5},
    )
    assert compute_traffic(topo) == {A1: 800, A2: 800, A5: 800, A4: 0, G1: 0, G3: 0, MCC: 4800}


def test_traffic_uneven_tree():
    topo = make_topology(
        layers={A1: 1, A3: 1, A5: 1, A2: 2, G3: 2, A4: 2, G1: 2},
        masters={A1: MCC, A3: MCC, A5: MCC, A2: A3, G3: A3, A4: A1, G1: A5},
    )
    assert compute_traffic(topo) == {
        A1: 800, A3: 1600, A5: 800, A2: 0, A4: 0, G1: 0, G3: 0, MCC: 5600,
    }


def test_traffic_holonic_mesh():
    assert compute_traffic(holonic_full()) == {
        A1: 4000, A3: 5600, A5: 4000,
        A2: 0, A4: 0,
        G1: 1600, G2: 1600, G3: 1600,
        MCC: 16000,
    }


def test_traffic_scales_with_uplink_rate():
    topo = hierarchical_single_relay()
    assert compute_traffic(topo, uplink_rate=100) == {A4: 100, G3: 0, MCC: 200}


def test_dict_round_trip():
    topo = holonic_full()
    again = topology_from_dict(topology_as_dict(topo))
    assert again.layers == dict(topo.layers)
    assert again.masters == dict(topo.masters)
    assert again.peer_links == topo.peer_links
    assert topology_as_dict(again) == topology_as_dict(topo)
