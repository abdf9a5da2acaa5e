"""Fleet communication graph: layers, links, validation, traffic model.

A topology places connected vehicles on numbered layers below the control
center (layer 0): operational vehicles sit on layer 1 with a direct
master-slave link to the MCC, execution vehicles on layer 2 under a layer-1
leader, and cluster members on layer 3. Members hold no master-slave link
at all; their only link is a peer link to their cluster head on layer 2.
Layer-1 vehicles may additionally hold peer links among themselves.

The pattern of a topology follows from its shape: one vehicle layer is
central, two is hierarchical, and three layers or any peer links make it
holonic.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum
from typing import Iterable, Mapping, Union

from .fleet import UvId, UvKind, UvRecord


class _MccNode:
    """Singleton graph node for the mission control center."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "MCC"

    def __str__(self) -> str:
        return "MCC"


MCC = _MccNode()
Node = Union[UvId, _MccNode]


class Pattern(str, Enum):
    CENTRAL = "central"
    HIERARCHICAL = "hierarchical"
    HOLONIC = "holonic"


@dataclass(frozen=True)
class CapacityLimits:
    """Hard resource bounds the synthesizer and validator both honor."""

    mcc_max_links: int = 3
    leader_max_followers: int = 2
    uplink_rate: int = 800  # Kbit per telemetry report
    max_uavs: int = 5
    max_ugvs: int = 3


@dataclass(frozen=True)
class Topology:
    """An immutable snapshot of the fleet communication graph.

    ``layers`` maps every connected vehicle to its layer (1..3).
    ``masters`` maps each slave to its master (the MCC for layer 1); cluster
    members are deliberately absent from it. ``peer_links`` holds unordered
    vehicle pairs.
    """

    layers: Mapping[UvId, int] = field(default_factory=dict)
    masters: Mapping[UvId, Node] = field(default_factory=dict)
    peer_links: frozenset = frozenset()

    def connected(self) -> set[UvId]:
        return set(self.layers)

    def layer1(self) -> list[UvId]:
        return sorted(uv for uv, layer in self.layers.items() if layer == 1)

    def slaves_of(self, node: Node) -> list[UvId]:
        return sorted(uv for uv, master in self.masters.items() if master == node)

    def peers_of(self, uv: UvId) -> list[UvId]:
        out = []
        for link in self.peer_links:
            if uv in link:
                (other,) = set(link) - {uv}
                out.append(other)
        return sorted(out)

    def is_member(self, uv: UvId) -> bool:
        return self.layers.get(uv) == 3

    def is_head(self, uv: UvId) -> bool:
        return self.layers.get(uv) == 2 and any(self.is_member(p) for p in self.peers_of(uv))

    def head_of(self, member: UvId) -> UvId | None:
        """The cluster head a layer-3 member reports through."""
        if not self.is_member(member):
            return None
        for peer in self.peers_of(member):
            if self.layers.get(peer) == 2:
                return peer
        return None

    def relay_parent(self, uv: UvId) -> Node | None:
        """Next hop toward the MCC: the master, or the head for members."""
        if uv in self.masters:
            return self.masters[uv]
        return self.head_of(uv)

    def descendants(self, node: Node) -> set[UvId]:
        """Vehicles whose telemetry path to the MCC passes through ``node``."""
        out = set()
        for uv in self.layers:
            hop = self.relay_parent(uv)
            seen = 0
            while hop is not None and hop is not MCC and seen <= len(self.layers):
                if hop == node:
                    out.add(uv)
                    break
                hop = self.relay_parent(hop)
                seen += 1
            else:
                if node is MCC and hop is MCC:
                    out.add(uv)
        return out


def classify_pattern(topo: Topology) -> Pattern | None:
    """Name the architecture by shape; None for an empty graph."""
    if not topo.layers:
        return None
    depth = max(topo.layers.values())
    if depth >= 3 or topo.peer_links:
        return Pattern.HOLONIC
    if depth == 2:
        return Pattern.HIERARCHICAL
    return Pattern.CENTRAL


def validate_topology(
    topo: Topology,
    snapshot: Mapping[UvId, UvRecord],
    limits: CapacityLimits = CapacityLimits(),
) -> list[str]:
    """Check every structural constraint; return human-readable violations.

    An empty list means the topology is well formed with respect to the
    given fleet snapshot.
    """
    problems: list[str] = []

    def bad(msg: str) -> None:
        problems.append(msg)

    for uv, layer in topo.layers.items():
        record = snapshot.get(uv)
        if record is None:
            bad(f"{uv} is connected but not in the fleet")
            continue
        if not record.state.is_registered:
            bad(f"{uv} is connected but not registered ({record.state.value})")
        if layer not in (1, 2, 3):
            bad(f"{uv} has layer {layer}, expected 1..3")
        if layer == 1:
            if topo.masters.get(uv) is not MCC:
                bad(f"{uv} is on layer 1 but its master is not the MCC")
            if not record.in_mcc_range:
                bad(f"{uv} is out of MCC range but holds a direct MCC link")
        elif layer == 2:
            master = topo.masters.get(uv)
            if not isinstance(master, UvId):
                bad(f"{uv} is on layer 2 without a vehicle master")
            elif topo.layers.get(master) != 1:
                bad(f"{uv} reports to {master}, which is not on layer 1")
        elif layer == 3:
            if uv in topo.masters:
                bad(f"cluster member {uv} must not hold a master-slave link")
            peers = topo.peers_of(uv)
            heads = [p for p in peers if topo.layers.get(p) == 2]
            if len(peers) != 1 or len(heads) != 1:
                bad(f"cluster member {uv} needs exactly one peer link, to its head")
            else:
                head_rec = snapshot.get(heads[0])
                if head_rec is not None and head_rec.kind != record.kind:
                    bad(f"cluster member {uv} and head {heads[0]} differ in kind")

    for uv in topo.masters:
        if uv not in topo.layers:
            bad(f"{uv} has a master but no layer")

    mcc_links = len(topo.slaves_of(MCC))
    if mcc_links > limits.mcc_max_links:
        bad(f"MCC holds {mcc_links} links, limit {limits.mcc_max_links}")
    for uv in topo.layers:
        children = topo.slaves_of(uv)
        members = [m for m in topo.peers_of(uv) if topo.is_member(m)] if topo.layers[uv] == 2 else []
        if len(children) + len(members) > limits.leader_max_followers:
            bad(f"{uv} leads {len(children) + len(members)} vehicles, limit {limits.leader_max_followers}")

    for link in topo.peer_links:
        pair = sorted(link)
        if len(pair) != 2:
            bad(f"peer link {pair} must join two distinct vehicles")
            continue
        a, b = pair
        la, lb = topo.layers.get(a), topo.layers.get(b)
        if la is None or lb is None:
            bad(f"peer link {a}-{b} touches a disconnected vehicle")
        elif {la, lb} == {1}:
            pass  # leaders may coordinate laterally
        elif {la, lb} == {2, 3}:
            pass  # head-member cluster link
        else:
            bad(f"peer link {a}-{b} joins layers {la} and {lb}")

    n_uavs = sum(1 for rec in snapshot.values() if rec.kind is UvKind.UAV)
    n_ugvs = sum(1 for rec in snapshot.values() if rec.kind is UvKind.UGV)
    if n_uavs > limits.max_uavs:
        bad(f"fleet has {n_uavs} UAVs, limit {limits.max_uavs}")
    if n_ugvs > limits.max_ugvs:
        bad(f"fleet has {n_ugvs} UGVs, limit {limits.max_ugvs}")

    return problems


def compute_traffic(topo: Topology, uplink_rate: int = 800) -> dict[Node, int]:
    """Per-node relay traffic in Kbit for one telemetry cycle.

    Each connected vehicle reports ``uplink_rate`` Kbit upward once. A
    node's own report is carried by its parent, not itself, so a vehicle
    accrues the rate once per vehicle in its relay subtree. Peer links add
    a bidirectional exchange at the vehicle endpoints: a layer-1 vehicle
    accrues twice the rate per lateral peer, and a cluster member twice the
    rate for its head link. The MCC terminates every report and mirrors the
    lateral peer exchanges.
    """
    traffic: dict[Node, int] = {}
    lateral_links = 0
    for link in topo.peer_links:
        a, b = sorted(link)
        if topo.layers.get(a) == 1 and topo.layers.get(b) == 1:
            lateral_links += 1
    for uv in topo.layers:
        tr = uplink_rate * len(topo.descendants(uv))
        if topo.layers[uv] == 1:
            lateral = sum(1 for p in topo.peers_of(uv) if topo.layers.get(p) == 1)
            tr += 2 * uplink_rate * lateral
        elif topo.is_member(uv):
            tr += 2 * uplink_rate
        traffic[uv] = tr
    traffic[MCC] = uplink_rate * len(topo.layers) + 4 * uplink_rate * lateral_links
    return traffic


def topology_as_dict(topo: Topology) -> dict:
    """JSON-friendly view with deterministic ordering."""
    return {
        "layers": {str(uv): layer for uv, layer in sorted(topo.layers.items())},
        "masters": {str(uv): str(master) for uv, master in sorted(topo.masters.items())},
        "peer_links": sorted(sorted(str(uv) for uv in link) for link in topo.peer_links),
    }


def topology_from_dict(data: Mapping) -> Topology:
    return Topology(
        layers={UvId(name): layer for name, layer in data["layers"].items()},
        masters={
            UvId(name): (MCC if master == "MCC" else UvId(master))
            for name, master in data["masters"].items()
        },
        peer_links=frozenset(
            frozenset(UvId(name) for name in pair) for pair in data["peer_links"]
        ),
    )


def make_topology(
    layers: Mapping[UvId, int],
    masters: Mapping[UvId, Node],
    peer_links: Iterable[tuple[UvId, UvId]] = (),
) -> Topology:
    return Topology(
        layers=dict(layers),
        masters=dict(masters),
        peer_links=frozenset(frozenset(pair) for pair in peer_links),
    )
