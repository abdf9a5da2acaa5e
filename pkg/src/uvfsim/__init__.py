"""Self-adaptive unmanned-vehicle-fleet simulator.

The package is organized around a mission control center (MCC) that picks a
fleet communication architecture (central, hierarchical, or holonic) with a
production-rule engine, plus the supporting pieces: the vehicle state
machine (:mod:`uvfsim.fleet`), the topology graph and traffic model
(:mod:`uvfsim.topology`), the rule engine (:mod:`uvfsim.engine`) and rule
catalog (:mod:`uvfsim.catalog`), the MCC supervisor (:mod:`uvfsim.mcc`), a
message bus with link-semantics enforcement (:mod:`uvfsim.bus`), the
deterministic simulation loop (:mod:`uvfsim.sim`), and the CLI / HTTP
gateway (:mod:`uvfsim.cli`, :mod:`uvfsim.server`).
"""

__version__ = "0.1.0"
