"""In-process computational graph."""

from graphbus.graph.runtime import GraphRuntime, GraphStats, NodeId

__all__ = ["GraphRuntime", "GraphStats", "NodeId"]
