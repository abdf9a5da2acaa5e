"""Production catalog the mission control center runs on the rule engine.

Two rule families live here. The construction rules place vehicles: leader
selection onto layer 1 by minimum utilization, cluster heads under the
least-utilized leader, members onto layer 3 beside their head, plain
followers wherever the subtree load is lowest, and finally the lateral
peer mesh. The classification rules name the pattern of a finished
topology from its shape; they are written so that forward execution and
backward goal resolution give the same answer.

Working-memory schema (subjects are vehicle names, plus ``mcc``, ``limits``
and ``topology``/``shape``):

==============  =====================  =======================================
subject         attribute              meaning
==============  =====================  =======================================
limits          mcc_max_links          capacity facts
mcc             links                  current direct-link count
<uv>            leader_candidate       eligible for layer 1 (in range)
<uv>            utilization, nonce     ordering keys (nonce = seeded random)
<uv>            layer, load, followers placement state of a layer-1 leader
<uv>            accepting              leader still has a follower slot
<uv>            pending, pending_head  waiting for attachment (rank-ordered)
<uv>            attach_rank, weight    attachment order / subtree weight
<uv>            member_of, placed      cluster membership plan
topology        needs_mesh             holonic build wants the layer-1 mesh
shape           depth, lateral_links,  classification inputs
                connected, pattern
==============  =====================  =======================================
"""

from __future__ import annotations

from .engine import (
    ANY,
    Absent,
    Emit,
    Least,
    Match,
    Plus,
    Put,
    Test,
    Var,
    WorkingMemory,
    rule,
)
from .topology import Topology

SELECT_LEADER = rule(
    "select-leader",
    50,
    [
        Match("mcc", "links", Var("n")),
        Match("limits", "mcc_max_links", Var("cap")),
        Test(Var("n"), "<", Var("cap")),
        Least(Var("uv"), "leader_candidate", True, order_by=("utilization", "nonce")),
    ],
    [
        Put(Var("uv"), "leader_candidate", False),
        Put(Var("uv"), "layer", 1),
        Put(Var("uv"), "load", 0),
        Put(Var("uv"), "followers", 0),
        Put(Var("uv"), "accepting", True),
        Put("mcc", "links", Plus(Var("n"), 1)),
        Emit.of("link", master="MCC", slave=Var("uv")),
    ],
)

# Fires between attachments, retiring any leader that just became full.
CLOSE_LEADER = rule(
    "close-leader",
    45,
    [
        Match(Var("l"), "accepting", True),
        Match(Var("l"), "followers", Var("k")),
        Match("limits", "leader_max_followers", Var("cap")),
        Test(Var("k"), ">=", Var("cap")),
    ],
    [Put(Var("l"), "accepting", False)],
)

# Members join as soon as their head lands on layer 2, ahead of any further
# attachments, so each cluster assembles as a unit.
JOIN_CLUSTER = rule(
    "join-cluster",
    42,
    [
        Match(Var("m"), "member_of", Var("h")),
        Match(Var("m"), "placed", False),
        Match(Var("h"), "layer", 2),
    ],
    [
        Put(Var("m"), "placed", True),
        Put(Var("m"), "layer", 3),
        Emit.of("member_link", member=Var("m"), head=Var("h")),
    ],
)

# Cluster heads weigh their whole cluster and go to the least-utilized
# leader; plain followers go to the least-loaded one.
ATTACH_HEAD = rule(
    "attach-head",
    40,
    [
        Least(Var("h"), "pending_head", True, order_by=("attach_rank",)),
        Least(Var("l"), "accepting", True, order_by=("utilization", "nonce")),
        Match(Var("l"), "load", Var("load")),
        Match(Var("l"), "followers", Var("k")),
        Match(Var("h"), "weight", Var("w")),
    ],
    [
        Put(Var("h"), "pending_head", False),
        Put(Var("h"), "layer", 2),
        Put(Var("l"), "load", Plus(Var("load"), Var("w"))),
        Put(Var("l"), "followers", Plus(Var("k"), 1)),
        Emit.of("head_link", master=Var("l"), slave=Var("h")),
    ],
)

ATTACH_FOLLOWER = rule(
    "attach-follower",
    30,
    [
        Least(Var("f"), "pending", True, order_by=("attach_rank",)),
        Least(Var("l"), "accepting", True, order_by=("load", "utilization", "nonce")),
        Match(Var("l"), "load", Var("load")),
        Match(Var("l"), "followers", Var("k")),
        Match(Var("f"), "weight", Var("w")),
    ],
    [
        Put(Var("f"), "pending", False),
        Put(Var("f"), "layer", 2),
        Put(Var("l"), "load", Plus(Var("load"), Var("w"))),
        Put(Var("l"), "followers", Plus(Var("k"), 1)),
        Emit.of("follower_link", master=Var("l"), slave=Var("f")),
    ],
)

# Lowest salience: emits once after every placement, and the driver expands
# it into the concrete layer-1 pairs.
INSTALL_MESH = rule(
    "install-mesh",
    10,
    [Match("topology", "needs_mesh", True)],
    [Put("topology", "needs_mesh", False), Emit.of("mesh")],
)

CONSTRUCTION_RULES = (
    SELECT_LEADER,
    CLOSE_LEADER,
    JOIN_CLUSTER,
    ATTACH_HEAD,
    ATTACH_FOLLOWER,
    INSTALL_MESH,
)

# Classification: the Absent guard makes the families mutually exclusive
# under forward execution, while salience makes backward resolution try the
# same order; both therefore agree with the structural classifier.
CLASSIFICATION_RULES = (
    rule(
        "pattern-holonic-depth",
        30,
        [Match("shape", "depth", Var("d")), Test(Var("d"), ">=", 3), Absent("shape", "pattern", ANY)],
        [Put("shape", "pattern", "holonic")],
    ),
    rule(
        "pattern-holonic-links",
        29,
        [Match("shape", "lateral_links", Var("n")), Test(Var("n"), ">", 0), Absent("shape", "pattern", ANY)],
        [Put("shape", "pattern", "holonic")],
    ),
    rule(
        "pattern-hierarchical",
        20,
        [Match("shape", "depth", 2), Absent("shape", "pattern", ANY)],
        [Put("shape", "pattern", "hierarchical")],
    ),
    rule(
        "pattern-central",
        10,
        [Match("shape", "depth", 1), Absent("shape", "pattern", ANY)],
        [Put("shape", "pattern", "central")],
    ),
    rule(
        "pattern-none",
        0,
        [Match("shape", "connected", 0), Absent("shape", "pattern", ANY)],
        [Put("shape", "pattern", "none")],
    ),
)


def seed_limits(wm: WorkingMemory, limits) -> None:
    wm.put("limits", "mcc_max_links", limits.mcc_max_links)
    wm.put("limits", "leader_max_followers", limits.leader_max_followers)


def seed_shape(wm: WorkingMemory, topo: Topology) -> None:
    lateral = sum(
        1
        for link in topo.peer_links
        if all(topo.layers.get(uv) == 1 for uv in link)
    )
    wm.put("shape", "depth", max(topo.layers.values(), default=0))
    wm.put("shape", "lateral_links", lateral)
    wm.put("shape", "connected", len(topo.layers))
