"""VNF placement lab: synthetic topologies, a constraint-respecting
delay-minimizing placement heuristic, a multi-output decision-tree placer,
and swarm-based depth optimization."""

__version__ = "0.1.0"
