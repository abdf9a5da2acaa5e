"""Mission control center: synthesizes fleet topologies with the rule engine.

Synthesis is staged. A selection stage runs the leader-selection production
to fill layer 1 with the least-utilized in-range vehicles; the driver then
plans clusters where the requested pattern or the remaining capacity calls
for them, and an attachment stage runs the placement productions (heads,
members, followers, mesh). Classification of the finished graph goes the
other way: a backward query over the pattern rules names the architecture.

In automatic mode a previous synthesis is kept and extended incrementally
as long as its layer-1 set is still a minimum-utilization choice; otherwise
the topology is rebuilt from scratch. Manual modes always rebuild.

Every decision is logged with the rule labels (R1..R9, C1..C9) that
motivated it, which is what the scenario traces and regression tests key on.
"""

from __future__ import annotations

import random
from collections import Counter
from dataclasses import dataclass
from typing import Mapping, Optional, Sequence

from . import catalog
from .engine import Match, Var, WorkingMemory, run_backward, run_forward
from .fleet import UvId, UvKind, UvRecord
from .topology import (
    MCC,
    CapacityLimits,
    Pattern,
    Topology,
    validate_topology,
)


@dataclass(frozen=True)
class OperationMode:
    """Automatic, or manual with a concrete requested pattern."""

    automatic: bool
    requested: Optional[Pattern] = None

    def __post_init__(self) -> None:
        if self.automatic and self.requested is not None:
            raise ValueError("automatic mode carries no pattern request")
        if not self.automatic and self.requested is None:
            raise ValueError("manual mode requires a requested pattern")

    @classmethod
    def auto(cls) -> "OperationMode":
        return cls(automatic=True)

    @classmethod
    def manual(cls, pattern: Pattern) -> "OperationMode":
        return cls(automatic=False, requested=pattern)

    def label(self) -> str:
        return "automatic" if self.automatic else f"manual:{self.requested.value}"


@dataclass(frozen=True)
class FleetSnapshot:
    """Immutable input to one synthesis decision."""

    uvs: tuple
    utilizations: Mapping
    limits: CapacityLimits = CapacityLimits()
    mode: OperationMode = OperationMode.auto()
    seed: int = 0

    def __post_init__(self) -> None:
        missing = [
            str(rec.id)
            for rec in self.uvs
            if rec.state.is_registered and rec.id not in self.utilizations
        ]
        if missing:
            raise ValueError(f"utilization missing for registered UVs: {missing}")

    def records(self) -> dict:
        return {rec.id: rec for rec in self.uvs}

    def registered(self) -> list:
        return sorted((rec for rec in self.uvs if rec.state.is_registered), key=lambda r: r.id)

    def utilization(self, uv: UvId) -> float:
        return float(self.utilizations[uv])


@dataclass(frozen=True)
class DecisionEntry:
    """One logged synthesis decision with its rule attribution."""

    action: str
    subject: Optional[str]
    detail: Mapping
    rules: tuple

    def as_dict(self) -> dict:
        return {
            "action": self.action,
            "subject": self.subject,
            "detail": dict(self.detail),
            "rules": list(self.rules),
        }


@dataclass(frozen=True)
class SynthesisResult:
    topology: Topology
    pattern: Optional[Pattern]
    uncontrolled: frozenset
    decision_log: tuple


@dataclass(frozen=True)
class Cluster:
    """Same-kind group: head first in utilization order, then members."""

    head: UvId
    members: tuple


class CapacityExhausted(Exception):
    """No leader had a free slot; carries what was placed anyway."""

    def __init__(self, unplaced: tuple, partial: Topology) -> None:
        super().__init__(f"no follower slot left for {[str(u) for u in unplaced]}")
        self.unplaced = unplaced
        self.partial = partial


class UnknownUv(Exception):
    pass


class SynthesisError(Exception):
    """A synthesized topology failed its own structural validation."""

    def __init__(self, problems: list) -> None:
        super().__init__("; ".join(problems))
        self.problems = problems


_PATTERN_RULE = {
    Pattern.CENTRAL: ("R1",),
    Pattern.HIERARCHICAL: ("R2",),
    Pattern.HOLONIC: ("R3",),
    None: (),
}


def _nonces(snapshot: FleetSnapshot) -> dict:
    """Per-vehicle random tie-break keys, reproducible from the seed."""
    rng = random.Random(snapshot.seed)
    return {rec.id: rng.random() for rec in sorted(snapshot.uvs, key=lambda r: r.id)}


def classify_with_rules(topo: Topology) -> Optional[Pattern]:
    """Name the pattern by backward-chaining over the classification rules."""
    wm = WorkingMemory()
    catalog.seed_shape(wm, topo)
    proof = run_backward(wm, catalog.CLASSIFICATION_RULES, Match("shape", "pattern", Var("p")))
    if proof is None or proof["p"] == "none":
        return None
    return Pattern(proof["p"])


def select_operational_layer(snapshot: FleetSnapshot) -> list:
    """Layer-1 leaders: least-utilized in-range registered vehicles."""
    wm = WorkingMemory()
    _seed_selection(wm, snapshot, _nonces(snapshot), pre=None)
    _, decisions = run_forward(wm, [catalog.SELECT_LEADER])
    return [UvId(d.payload["slave"]) for d in decisions]


def assign_followers(
    leaders: Sequence[UvId],
    followers: Sequence[UvId],
    snapshot: FleetSnapshot,
    topology: Topology,
) -> Topology:
    """Attach followers to the least-loaded leaders, utilization tie-break.

    Followers are processed in the given order; each lands on the leader
    with minimum subtree load, ties by utilization, then by the seeded
    nonce. Raises CapacityExhausted with the partial result once every
    leader is full.
    """
    nonces = _nonces(snapshot)
    rate = snapshot.limits.uplink_rate
    wm = WorkingMemory()
    catalog.seed_limits(wm, snapshot.limits)
    for leader in leaders:
        name = str(leader)
        wm.put(name, "utilization", snapshot.utilization(leader))
        wm.put(name, "nonce", nonces[leader])
        wm.put(name, "layer", 1)
        wm.put(name, "load", rate * len(topology.descendants(leader)))
        wm.put(name, "followers", len(topology.slaves_of(leader)))
        wm.put(name, "accepting", True)
    for rank, follower in enumerate(followers):
        name = str(follower)
        wm.put(name, "pending", True)
        wm.put(name, "attach_rank", rank)
        wm.put(name, "weight", rate)
    wm, decisions = run_forward(wm, [catalog.CLOSE_LEADER, catalog.ATTACH_FOLLOWER])

    layers = dict(topology.layers)
    masters = dict(topology.masters)
    for d in decisions:
        if d.tag != "follower_link":
            continue
        slave = UvId(d.payload["slave"])
        layers[slave] = 2
        masters[slave] = UvId(d.payload["master"])
    out = Topology(layers=layers, masters=masters, peer_links=topology.peer_links)
    unplaced = tuple(f for f in followers if wm.get(str(f), "pending") is True)
    if unplaced:
        raise CapacityExhausted(unplaced, out)
    return out


def form_clusters(remaining: Sequence[UvRecord], snapshot: FleetSnapshot) -> list:
    """Group by kind; min-utilization head; spill past the cap into new
    clusters of the same kind. Groups are processed largest first."""
    nonces = _nonces(snapshot)
    cap = snapshot.limits.leader_max_followers
    groups: dict = {}
    for rec in remaining:
        groups.setdefault(rec.kind, []).append(rec)
    clusters = []
    for kind in sorted(groups, key=lambda k: (-len(groups[k]), k.value)):
        queue = sorted(groups[kind], key=lambda r: (snapshot.utilization(r.id), nonces[r.id]))
        while queue:
            chunk, queue = queue[: 1 + cap], queue[1 + cap :]
            clusters.append(Cluster(chunk[0].id, tuple(r.id for r in chunk[1:])))
    return clusters


def synthesize_topology(
    snapshot: FleetSnapshot, previous: Optional[SynthesisResult] = None
) -> SynthesisResult:
    """Build the fleet architecture for the snapshot's operation mode.

    ``previous`` lets automatic mode extend the standing topology instead
    of rebuilding, as long as its layer-1 set is still a valid
    minimum-utilization choice; manual modes ignore it.
    """
    nonces = _nonces(snapshot)
    mode = snapshot.mode
    if mode.automatic:
        pre = previous.topology if previous is not None and _reusable(previous, snapshot) else None
        return _build(snapshot, nonces, target="automatic", pre=pre)
    return _build(snapshot, nonces, target=mode.requested.value, pre=None)


def handle_failure(result: SynthesisResult, failed: UvId, snapshot: FleetSnapshot) -> SynthesisResult:
    """Repair after a vehicle failure.

    A failed cluster head is replaced locally by its least-utilized member;
    any other connected casualty triggers a full re-synthesis on the
    reduced snapshot. Failures of disconnected vehicles change nothing.
    """
    topo = result.topology
    known = set(snapshot.records()) | topo.connected() | set(result.uncontrolled)
    if failed not in known:
        raise UnknownUv(str(failed))
    if failed not in topo.connected():
        return result
    if topo.is_head(failed):
        return _promote_member(result, failed, snapshot)
    return synthesize_topology(snapshot)


def _promote_member(result: SynthesisResult, failed: UvId, snapshot: FleetSnapshot) -> SynthesisResult:
    topo = result.topology
    nonces = _nonces(snapshot)
    members = [m for m in topo.peers_of(failed) if topo.is_member(m)]
    promoted = min(members, key=lambda m: (snapshot.utilization(m), nonces[m]))
    master = topo.masters[failed]

    layers = {uv: layer for uv, layer in topo.layers.items() if uv != failed}
    masters = {uv: m for uv, m in topo.masters.items() if uv != failed}
    peers = {link for link in topo.peer_links if failed not in link}
    layers[promoted] = 2
    masters[promoted] = master
    for member in members:
        if member != promoted:
            peers.add(frozenset({member, promoted}))

    new_topo = Topology(layers=layers, masters=masters, peer_links=frozenset(peers))
    _check(new_topo, snapshot)
    entry = DecisionEntry(
        "promote_head",
        str(promoted),
        {"replaces": str(failed), "master": str(master)},
        ("R8", "R9") if len(members) >= 2 else ("R9",),
    )
    # The log covers this repair only, not the synthesis it patched.
    return SynthesisResult(
        topology=new_topo,
        pattern=classify_with_rules(new_topo),
        uncontrolled=result.uncontrolled,
        decision_log=(entry,),
    )


def _reusable(previous: SynthesisResult, snapshot: FleetSnapshot) -> bool:
    """Is the previous layer 1 still a minimum-utilization selection?"""
    if previous.pattern is None:
        return False
    records = snapshot.records()
    registered = {rec.id for rec in snapshot.registered()}
    topo = previous.topology
    if not topo.connected() <= registered:
        return False
    leaders = topo.layer1()
    candidates = [uv for uv in registered if records[uv].in_mcc_range]
    k = min(snapshot.limits.mcc_max_links, len(candidates))
    if len(leaders) > k:
        return False
    budget = Counter(sorted(snapshot.utilization(c) for c in candidates)[:k])
    for leader in leaders:
        u = snapshot.utilization(leader)
        if budget[u] <= 0:
            return False
        budget[u] -= 1
    return True


def _seed_selection(wm: WorkingMemory, snapshot: FleetSnapshot, nonces: dict, pre: Optional[Topology]) -> None:
    catalog.seed_limits(wm, snapshot.limits)
    rate = snapshot.limits.uplink_rate
    pre_layer1 = pre.layer1() if pre is not None else []
    placed = pre.connected() if pre is not None else set()
    wm.put("mcc", "links", len(pre_layer1))
    for rec in snapshot.registered():
        name = str(rec.id)
        wm.put(name, "utilization", snapshot.utilization(rec.id))
        wm.put(name, "nonce", nonces[rec.id])
        if rec.id not in placed and rec.in_mcc_range:
            wm.put(name, "leader_candidate", True)
    for leader in pre_layer1:
        name = str(leader)
        wm.put(name, "layer", 1)
        wm.put(name, "load", rate * len(pre.descendants(leader)))
        wm.put(name, "followers", len(pre.slaves_of(leader)))
        wm.put(name, "accepting", True)


def _seed_attachments(
    wm: WorkingMemory,
    snapshot: FleetSnapshot,
    clusters: Sequence[Cluster],
    followers: Sequence[UvId],
    needs_mesh: bool,
) -> None:
    rate = snapshot.limits.uplink_rate
    for rank, cluster in enumerate(clusters):
        head = str(cluster.head)
        wm.put(head, "pending_head", True)
        wm.put(head, "attach_rank", rank)
        wm.put(head, "weight", rate * (1 + len(cluster.members)))
        for member in cluster.members:
            wm.put(str(member), "member_of", head)
            wm.put(str(member), "placed", False)
    for rank, follower in enumerate(followers):
        name = str(follower)
        wm.put(name, "pending", True)
        wm.put(name, "attach_rank", rank)
        wm.put(name, "weight", rate)
    if needs_mesh:
        wm.put("topology", "needs_mesh", True)


def _plan_clusters_partial(
    residual: Sequence[UvRecord], snapshot: FleetSnapshot, nonces: dict, free_slots: int
) -> tuple:
    """Cluster only as much as the requested holonic pattern needs.

    At least one cluster forms (the operator asked for the pattern); after
    that, clustering continues only while head slots plus plain followers
    would not fit the free capacity. Largest same-kind group goes first.
    """
    cap = snapshot.limits.leader_max_followers
    queues: dict = {}
    for rec in residual:
        queues.setdefault(rec.kind, []).append(rec)
    for kind in queues:
        queues[kind].sort(key=lambda r: (snapshot.utilization(r.id), nonces[r.id]))
    clusters = []
    while any(queues.values()):
        pending = sum(len(q) for q in queues.values())
        if clusters and len(clusters) + pending <= free_slots:
            break
        kind = sorted(queues, key=lambda k: (-len(queues[k]), k.value))[0]
        chunk, queues[kind] = queues[kind][: 1 + cap], queues[kind][1 + cap :]
        clusters.append(Cluster(chunk[0].id, tuple(r.id for r in chunk[1:])))
    followers = sorted(rec.id for q in queues.values() for rec in q)
    return clusters, followers


def _check(topo: Topology, snapshot: FleetSnapshot) -> None:
    problems = validate_topology(topo, snapshot.records(), snapshot.limits)
    if problems:
        raise SynthesisError(problems)


def _build(snapshot: FleetSnapshot, nonces: dict, target: str, pre: Optional[Topology]) -> SynthesisResult:
    records = snapshot.records()
    registered = [rec.id for rec in snapshot.registered()]
    rate = snapshot.limits.uplink_rate
    cap = snapshot.limits.leader_max_followers

    wm = WorkingMemory()
    _seed_selection(wm, snapshot, nonces, pre)
    pre_connected = pre.connected() if pre is not None else set()
    candidates = [
        uv for uv in registered if records[uv].in_mcc_range and uv not in pre_connected
    ]
    wm, sel_decisions = run_forward(wm, [catalog.SELECT_LEADER])
    selected = [UvId(d.payload["slave"]) for d in sel_decisions]
    layer1 = (pre.layer1() if pre is not None else []) + selected

    if target == "central":
        sel_rules = ("R1",)
    elif len(candidates) > len(selected):
        sel_rules = ("R5", "R6")
    else:
        sel_rules = ("R5",)
    entries = [
        DecisionEntry("select_leader", d.payload["slave"], {"master": "MCC"}, sel_rules)
        for d in sel_decisions
    ]

    placed = set(layer1) | pre_connected
    residual = [uv for uv in registered if uv not in placed]

    # Driver-side mirror of leader loads, used for rule attribution.
    load = {}
    followers_of = {}
    for leader in layer1:
        if pre is not None and leader in pre_connected:
            load[leader] = rate * len(pre.descendants(leader))
            followers_of[leader] = len(pre.slaves_of(leader))
        else:
            load[leader] = 0
            followers_of[leader] = 0
    free_slots = sum(max(0, cap - n) for n in followers_of.values())

    clusters: list = []
    plain: list = []
    needs_mesh = False
    if target != "central" and residual:
        if target == "holonic":
            clusters, plain = _plan_clusters_partial(
                [records[uv] for uv in residual], snapshot, nonces, free_slots
            )
        elif len(residual) > free_slots and target == "automatic":
            clusters = form_clusters([records[uv] for uv in residual], snapshot)
        else:
            plain = list(residual)
    if target == "holonic" and layer1:
        needs_mesh = True
    if clusters and target == "automatic":
        needs_mesh = True

    att_decisions = []
    if layer1 and (clusters or plain or needs_mesh):
        _seed_attachments(wm, snapshot, clusters, plain, needs_mesh)
        wm, att_decisions = run_forward(wm, catalog.CONSTRUCTION_RULES)

    layers = dict(pre.layers) if pre is not None else {}
    masters = dict(pre.masters) if pre is not None else {}
    peers = set(pre.peer_links) if pre is not None else set()
    for uv in selected:
        layers[uv] = 1
        masters[uv] = MCC

    cluster_size = {c.head: 1 + len(c.members) for c in clusters}
    for d in att_decisions:
        if d.tag == "head_link":
            head = UvId(d.payload["slave"])
            leader = UvId(d.payload["master"])
            layers[head] = 2
            masters[head] = leader
            load[leader] += rate * cluster_size[head]
            followers_of[leader] += 1
            rules = ["R9"]
            if cluster_size[head] >= 2:
                rules.append("R8")
            if not records[head].in_mcc_range:
                rules.append("R4")
            entries.append(
                DecisionEntry("attach_head", str(head), {"master": str(leader)}, tuple(sorted(rules)))
            )
        elif d.tag == "follower_link":
            follower = UvId(d.payload["slave"])
            leader = UvId(d.payload["master"])
            accepting = [l for l in layer1 if followers_of[l] < cap]
            floor = min(load[l] for l in accepting)
            tied = sum(1 for l in accepting if load[l] == floor) >= 2
            layers[follower] = 2
            masters[follower] = leader
            load[leader] += rate
            followers_of[leader] += 1
            rules = ["R7"]
            if tied and floor > 0:
                rules.append("R8")
            if not records[follower].in_mcc_range:
                rules.append("R4")
            entries.append(
                DecisionEntry("attach_follower", str(follower), {"master": str(leader)}, tuple(sorted(rules)))
            )
        elif d.tag == "member_link":
            member = UvId(d.payload["member"])
            head = UvId(d.payload["head"])
            layers[member] = 3
            peers.add(frozenset({member, head}))
            entries.append(DecisionEntry("join_cluster", str(member), {"head": str(head)}, ("R9",)))
        elif d.tag == "mesh":
            mesh_layer1 = sorted(uv for uv, layer in layers.items() if layer == 1)
            pairs = []
            for i, a in enumerate(mesh_layer1):
                for b in mesh_layer1[i + 1 :]:
                    peers.add(frozenset({a, b}))
                    pairs.append([str(a), str(b)])
            entries.append(DecisionEntry("install_mesh", None, {"pairs": pairs}, ("R3",)))

    topo = Topology(layers=layers, masters=masters, peer_links=frozenset(peers))
    _check(topo, snapshot)

    uncontrolled = [uv for uv in registered if uv not in topo.connected()]
    mcc_full = len(topo.layer1()) >= snapshot.limits.mcc_max_links
    for uv in sorted(uncontrolled):
        if target == "central":
            rules = ("R1",)
        elif not records[uv].in_mcc_range:
            rules = ("C4", "R4")
        elif mcc_full:
            rules = ("C8",)
        else:
            rules = ("C9",)
        entries.append(DecisionEntry("uncontrolled", str(uv), {}, rules))

    pattern = classify_with_rules(topo)
    entries.append(
        DecisionEntry(
            "classify",
            None,
            {"pattern": pattern.value if pattern is not None else "none"},
            _PATTERN_RULE[pattern],
        )
    )
    return SynthesisResult(
        topology=topo,
        pattern=pattern,
        uncontrolled=frozenset(uncontrolled),
        decision_log=tuple(entries),
    )
