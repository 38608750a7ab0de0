"""Transform tree: rigid transforms between coordinate frames."""

from graphbus.transforms.tree import FrameTree, RigidTransform

__all__ = ["FrameTree", "RigidTransform"]
