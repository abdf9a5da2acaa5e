"""In-process message bus with agent directory and traffic accounting.

Agents register under unique names and receive address tokens; a service
directory maps service names to providers. Messages follow a small ACL
vocabulary (REQUEST, INFORM, AGREE, REFUSE, FAILURE) and are only
delivered along links that exist in the supplied topology:

* a master may command its direct slave,
* a slave may answer its master inside a conversation the master opened,
* peer-linked vehicles may initiate in either direction (or broadcast),
* the operator and the MCC share a supervision channel.

INFORM payloads are charged to a per-cycle ledger so that one full
telemetry cycle reproduces, link by link, the aggregate numbers of
``topology.compute_traffic``. Control frames (REQUEST/AGREE/REFUSE/
FAILURE) and supervision traffic are free.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from enum import Enum
from itertools import pairwise
from typing import Iterable, Mapping, Optional, Union

from .fleet import UvId
from .topology import MCC, CapacityLimits, Node, Topology


class Performative(str, Enum):
    REQUEST = "REQUEST"
    INFORM = "INFORM"
    AGREE = "AGREE"
    REFUSE = "REFUSE"
    FAILURE = "FAILURE"


_REPLIES = {Performative.AGREE, Performative.REFUSE, Performative.FAILURE}


class DuplicateName(ValueError):
    """An agent name was registered twice."""


class UnknownAgent(LookupError):
    """A message names an agent the directory has never seen."""


class LinkForbidden(Exception):
    """Delivery attempted across a link the topology does not provide."""


@dataclass(frozen=True)
class AgentId:
    name: str
    address: str

    def __str__(self) -> str:
        return self.name


@dataclass(frozen=True)
class ServiceEntry:
    agent: AgentId
    services: frozenset[str]


class _Broadcast:
    """Receiver sentinel: deliver to every peer-linked neighbor."""

    _instance = None

    def __new__(cls):
        if cls._instance is None:
            cls._instance = super().__new__(cls)
        return cls._instance

    def __repr__(self) -> str:
        return "BROADCAST"


BROADCAST = _Broadcast()

# Payload classes the traffic ledger distinguishes.
PAYLOAD_REPORT = "uv-telemetry"
PAYLOAD_EXCHANGE = "peer-exchange"


@dataclass(frozen=True)
class AclMessage:
    performative: Performative
    sender: AgentId
    receiver: Union[AgentId, _Broadcast]
    content: tuple[tuple[str, object], ...]
    conversation_id: str
    cycle: int

    def __post_init__(self):
        for key, _ in self.content:
            if not key:
                raise ValueError("content keys must be non-empty")

    @property
    def content_dict(self) -> dict[str, object]:
        return dict(self.content)


def message(
    performative: Performative,
    sender: AgentId,
    receiver: Union[AgentId, _Broadcast],
    conversation_id: str,
    cycle: int,
    **content: object,
) -> AclMessage:
    return AclMessage(
        performative=performative,
        sender=sender,
        receiver=receiver,
        content=tuple(sorted(content.items())),
        conversation_id=conversation_id,
        cycle=cycle,
    )


@dataclass(frozen=True)
class DeliveryReceipt:
    message: AclMessage
    delivered_to: tuple[AgentId, ...]
    charges: tuple[tuple[str, int], ...]


@dataclass
class _Conversation:
    contacted: set[str] = field(default_factory=set)
    awaiting: list[tuple[str, str]] = field(default_factory=list)


class Bus:
    """Deterministic single-threaded bus; delivery order is call order."""

    def __init__(self, limits: CapacityLimits = CapacityLimits()):
        self.limits = limits
        self._agents: dict[str, AgentId] = {}
        self._services: dict[str, frozenset[str]] = {}
        self._order: list[str] = []
        self._seq = 0
        self._log: list[AclMessage] = []
        self._ledger: dict[Node, int] = {MCC: 0}
        self._cycle = 0
        self._conversations: dict[str, _Conversation] = {}

    # -- directory -----------------------------------------------------

    def register_agent(self, name: str, services: Iterable[str] = ()) -> AgentId:
        if name in self._agents:
            raise DuplicateName(name)
        self._seq += 1
        agent = AgentId(name=name, address=f"addr-{self._seq:03d}")
        self._agents[name] = agent
        self._services[name] = frozenset(services)
        self._order.append(name)
        return agent

    def deregister(self, name: str) -> None:
        if name not in self._agents:
            raise UnknownAgent(name)
        del self._agents[name]
        del self._services[name]
        self._order.remove(name)

    def agent(self, name: str) -> AgentId:
        try:
            return self._agents[name]
        except KeyError:
            raise UnknownAgent(name) from None

    def directory(self) -> list[ServiceEntry]:
        return [ServiceEntry(self._agents[n], self._services[n]) for n in self._order]

    def lookup_service(self, service: str) -> list[AgentId]:
        return [self._agents[n] for n in self._order if service in self._services[n]]

    # -- cycle bookkeeping ---------------------------------------------

    def begin_cycle(self, cycle: int, topology: Optional[Topology] = None) -> None:
        """Reset the traffic ledger; zero-fill for every connected vehicle."""
        self._cycle = cycle
        self._ledger = {MCC: 0}
        if topology is not None:
            for uv in topology.layers:
                self._ledger[uv] = 0

    @property
    def cycle(self) -> int:
        return self._cycle

    def cycle_ledger(self) -> dict[Node, int]:
        return dict(self._ledger)

    def unanswered_requests(self) -> list[tuple[str, str, str]]:
        out = []
        for cid, conv in self._conversations.items():
            for requester, responder in conv.awaiting:
                out.append((cid, requester, responder))
        return out

    # -- delivery ------------------------------------------------------

    def send(self, msg: AclMessage, topology: Topology) -> DeliveryReceipt:
        self.agent(msg.sender.name)
        if isinstance(msg.receiver, _Broadcast):
            node = _node(msg.sender.name)
            targets = []
            if isinstance(node, UvId):
                targets = [self.agent(p.name) for p in topology.peers_of(node)]
        else:
            self.agent(msg.receiver.name)
            self._check_link(msg, topology)
            targets = [msg.receiver]

        charges: list[tuple[str, int]] = []
        for target in targets:
            charges.extend(self._account(msg, target, topology))
        self._track_conversation(msg, targets)
        self._log.append(msg)
        return DeliveryReceipt(msg, tuple(targets), tuple(charges))

    def _check_link(self, msg: AclMessage, topology: Topology) -> None:
        s, r = msg.sender.name, msg.receiver.name
        if self._supervision(s, r):
            return
        s_node, r_node = _node(s), _node(r)
        if isinstance(r_node, UvId) and topology.masters.get(r_node) == s_node:
            return  # command down a master-slave link
        if isinstance(s_node, UvId) and topology.masters.get(s_node) == r_node:
            # feedback up a master-slave link: only inside a conversation
            # the master side already joined (slaves never initiate)
            conv = self._conversations.get(msg.conversation_id)
            if conv is not None and s in conv.contacted:
                return
            raise LinkForbidden(f"{s} may not initiate toward master {r}")
        if (
            isinstance(s_node, UvId)
            and isinstance(r_node, UvId)
            and frozenset({s_node, r_node}) in topology.peer_links
        ):
            return
        raise LinkForbidden(f"no link {s} -> {r}")

    def _supervision(self, s: str, r: str) -> bool:
        s_op = "operator" in self._services.get(s, frozenset())
        r_op = "operator" in self._services.get(r, frozenset())
        return (s_op and r == "MCC") or (r_op and s == "MCC")

    def _account(
        self, msg: AclMessage, target: AgentId, topology: Topology
    ) -> list[tuple[str, int]]:
        """Ledger charges for one delivered payload over one link.

        Relay hops bill the forwarder (a vehicle's own report rides free)
        and the MCC on receipt. Lateral peer exchanges bill both endpoints
        and are mirrored twice at the MCC; cluster links bill the member
        endpoint only and stay invisible to the MCC.
        """
        if msg.performative is not Performative.INFORM:
            return []
        s, r = msg.sender.name, target.name
        if self._supervision(s, r):
            return []
        rate = self.limits.uplink_rate
        s_node, r_node = _node(s), _node(r)
        charges: list[tuple[str, int]] = []

        def charge(node: Node, amount: int) -> None:
            self._ledger[node] = self._ledger.get(node, 0) + amount
            charges.append((str(node), amount))

        # Billing class follows the payload, not just the link: a relayed
        # report crossing a cluster link on its first hop is still relay
        # traffic, not a peer exchange.
        exchange = msg.content_dict.get("payload") == PAYLOAD_EXCHANGE
        link = frozenset(n for n in (s_node, r_node) if isinstance(n, UvId))
        if exchange and len(link) == 2 and link in topology.peer_links:
            layers = {topology.layers.get(n) for n in link}
            if layers == {1}:
                charge(s_node, rate)
                charge(r_node, rate)
                charge(MCC, 2 * rate)
            else:
                (member,) = (n for n in link if topology.layers.get(n) == 3)
                charge(member, rate)
            return charges

        origin = msg.content_dict.get("origin", s)
        if isinstance(s_node, UvId) and s != origin:
            charge(s_node, rate)
        if r_node is MCC:
            charge(MCC, rate)
        return charges

    def _track_conversation(self, msg: AclMessage, targets: list[AgentId]) -> None:
        conv = self._conversations.setdefault(msg.conversation_id, _Conversation())
        if msg.performative is Performative.REQUEST:
            for target in targets:
                conv.awaiting.append((msg.sender.name, target.name))
        elif msg.performative in _REPLIES:
            for target in targets:
                pair = (target.name, msg.sender.name)
                if pair in conv.awaiting:
                    conv.awaiting.remove(pair)
        conv.contacted.add(msg.sender.name)
        for target in targets:
            conv.contacted.add(target.name)

    # -- log export ----------------------------------------------------

    def log(self) -> list[AclMessage]:
        return list(self._log)

    def export_log(self) -> str:
        lines = []
        for msg in self._log:
            receiver = "*" if isinstance(msg.receiver, _Broadcast) else msg.receiver.name
            lines.append(
                json.dumps(
                    {
                        "cycle": msg.cycle,
                        "performative": msg.performative.value,
                        "sender": msg.sender.name,
                        "receiver": receiver,
                        "content": {k: v for k, v in msg.content},
                        "conversation": msg.conversation_id,
                    },
                    sort_keys=True,
                )
            )
        return "\n".join(lines)


def _node(name: str) -> Node:
    return MCC if name == "MCC" else UvId(name)


def _uplink_path(topology: Topology, uv: UvId) -> list[Node]:
    """Hop sequence from a vehicle to the MCC, endpoints included."""
    path: list[Node] = [uv]
    node: Node = uv
    while node is not MCC:
        parent = topology.relay_parent(node)
        if parent is None or len(path) > len(topology.layers) + 1:
            raise ValueError(f"{uv} has no relay path to the MCC")
        path.append(parent)
        node = parent
    return path


def ensure_node_agents(bus: Bus, topology: Topology) -> None:
    """Register any topology participant the directory does not know yet."""
    if "MCC" not in bus._agents:
        bus.register_agent("MCC", {"mcc-control"})
    for uv in sorted(topology.layers):
        if uv.name not in bus._agents:
            bus.register_agent(uv.name, {"uv-telemetry"})


def run_telemetry_cycle(bus: Bus, topology: Topology, cycle: int) -> dict[Node, int]:
    """One full reporting round; returns the resulting traffic ledger.

    Every connected vehicle answers a relayed telemetry request with one
    uplink report, and every peer link carries one exchange per direction.
    The ledger of this cycle equals ``compute_traffic`` for the topology.
    """
    ensure_node_agents(bus, topology)
    bus.begin_cycle(cycle, topology)

    for uv in sorted(topology.layers):
        path = _uplink_path(topology, uv)
        cid = f"telemetry-{cycle}-{uv.name}"
        for a, b in pairwise(reversed(path)):
            bus.send(
                message(Performative.REQUEST, bus.agent(str(a)), bus.agent(str(b)),
                        cid, cycle, subject="uv-telemetry", target=uv.name),
                topology,
            )
        for a, b in pairwise(path):
            bus.send(
                message(Performative.AGREE, bus.agent(str(a)), bus.agent(str(b)),
                        cid, cycle, target=uv.name),
                topology,
            )
        for a, b in pairwise(path):
            bus.send(
                message(Performative.INFORM, bus.agent(str(a)), bus.agent(str(b)),
                        cid, cycle, origin=uv.name, payload=PAYLOAD_REPORT),
                topology,
            )

    links = sorted(topology.peer_links, key=lambda l: sorted(x.name for x in l))
    for link in links:
        a, b = sorted(link)
        cid = f"peer-{cycle}-{a.name}-{b.name}"
        for s, r in ((a, b), (b, a)):
            bus.send(
                message(Performative.INFORM, bus.agent(s.name), bus.agent(r.name),
                        cid, cycle, origin=s.name, payload=PAYLOAD_EXCHANGE),
                topology,
            )
    return bus.cycle_ledger()
