"""
Transform tree: rigid transforms between named coordinate frames.

Each edge stores T_parent_child (p_parent = T @ p_child). A frame-to-frame query walks
both frames up to their lowest common ancestor and composes
inverse(chain(dst -> anc)) @ chain(src -> anc).
"""

from __future__ import annotations
import logging
from dataclasses import dataclass, field
from typing import Any, Dict, Iterable, List, Mapping, Optional, Tuple

import numpy as np

from graphbus.core.errors import (
    CycleError,
    DisconnectedFrames,
    InvalidTransform,
    ReparentError,
    UnknownFrame,
)
from graphbus.core.types import validate_name
from graphbus.utils.locks import ReadWriteLock

logger = logging.getLogger("graphbus.transforms")

TOLERANCE = 1e-9
RENORMALIZE_EVERY = 32
_BOTTOM_ROW = np.array([0.0, 0.0, 0.0, 1.0])


def _orthonormalize(rotation: np.ndarray) -> np.ndarray:
    u, _, vt = np.linalg.svd(rotation)
    r = u @ vt
    if np.linalg.det(r) < 0:
        u[:, -1] *= -1
        r = u @ vt
    return r


class RigidTransform:
    """4x4 homogeneous rigid transform. Immutable; the matrix is a read-only float64 array."""

    __slots__ = ("_matrix",)

    def __init__(self, matrix: Any, check: bool = True):
        m = np.array(matrix, dtype=np.float64)
        if check:
            _validate(m)
        m.flags.writeable = False
        self._matrix = m

    @property
    def matrix(self) -> np.ndarray:
        return self._matrix

    @property
    def rotation(self) -> np.ndarray:
        return self._matrix[:3, :3]

    @property
    def translation(self) -> np.ndarray:
        return self._matrix[:3, 3]

    @classmethod
    def identity(cls) -> "RigidTransform":
        return cls(np.eye(4), check=False)

    @classmethod
    def from_rotation_translation(cls, rotation: Any, translation: Any = (0.0, 0.0, 0.0)) -> "RigidTransform":
        m = np.eye(4)
        m[:3, :3] = np.asarray(rotation, dtype=np.float64)
        m[:3, 3] = np.asarray(translation, dtype=np.float64)
        return cls(m)

    @classmethod
    def from_row_major(cls, values: Iterable[float]) -> "RigidTransform":
        flat = np.asarray(list(values), dtype=np.float64)
        if flat.shape != (16,):
            raise InvalidTransform(f"Expected 16 matrix values, got {flat.size}")
        return cls(flat.reshape(4, 4))

    def inverse(self) -> "RigidTransform":
        r_t = self.rotation.T
        m = np.eye(4)
        m[:3, :3] = r_t
        m[:3, 3] = -r_t @ self.translation
        return RigidTransform(m, check=False)

    def __matmul__(self, other: "RigidTransform") -> "RigidTransform":
        if not isinstance(other, RigidTransform):
            return NotImplemented
        m = self._matrix @ other._matrix
        m[3] = _BOTTOM_ROW
        return RigidTransform(m, check=False)

    def orthonormalized(self) -> "RigidTransform":
        m = self._matrix.copy()
        m[:3, :3] = _orthonormalize(m[:3, :3])
        return RigidTransform(m, check=False)

    def apply(self, points: Any) -> np.ndarray:
        """Transform an (N, 3) or (3,) array of points."""
        pts = np.asarray(points, dtype=np.float64)
        return pts @ self.rotation.T + self.translation

    def is_close(self, other: "RigidTransform", tol: float = TOLERANCE) -> bool:
        return float(np.linalg.norm(self._matrix - other._matrix)) <= tol

    def __eq__(self, other: object) -> bool:
        if not isinstance(other, RigidTransform):
            return NotImplemented
        return bool(np.array_equal(self._matrix, other._matrix))

    __hash__ = None  # type: ignore[assignment]

    def __repr__(self) -> str:
        return f"RigidTransform({self._matrix.tolist()})"


def _validate(m: np.ndarray) -> None:
    if m.shape != (4, 4):
        raise InvalidTransform(f"Transform must be 4x4, got shape {m.shape}")
    if not np.all(np.isfinite(m)):
        raise InvalidTransform("Transform contains non-finite values")
    if not np.array_equal(m[3], _BOTTOM_ROW):
        raise InvalidTransform(f"Bottom row must be [0, 0, 0, 1], got {m[3].tolist()}")
    r = m[:3, :3]
    if np.max(np.abs(r.T @ r - np.eye(3))) > TOLERANCE:
        raise InvalidTransform("Rotation block is not orthonormal")
    if abs(np.linalg.det(r) - 1.0) > TOLERANCE:
        raise InvalidTransform("Rotation block determinant is not +1")


@dataclass
class _FrameNode:
    parent: Optional[str] = None
    to_parent: RigidTransform = field(default_factory=RigidTransform.identity)


class FrameTree:
    """Forest of coordinate frames. Concurrent lookups; mutations are exclusive."""

    def __init__(self) -> None:
        self._nodes: Dict[str, _FrameNode] = {}
        self._lock = ReadWriteLock()

    # mutation

    def set_transform(self, parent: str, child: str, transform: RigidTransform) -> None:
        """Add or update the parent -> child edge. Unknown frames are created."""
        validate_name(parent, "frame")
        validate_name(child, "frame")
        if not isinstance(transform, RigidTransform):
            transform = RigidTransform(transform)
        if parent == child:
            raise CycleError(f"Frame {child} cannot be its own parent")
        with self._lock.write():
            node = self._nodes.get(child)
            if node is not None and node.parent is not None and node.parent != parent:
                raise ReparentError(
                    f"Frame {child} already has parent {node.parent}; detach it before attaching to {parent}"
                )
            if child in self._ancestors(parent):
                raise CycleError(f"{child} is an ancestor of {parent}")
            self._nodes.setdefault(parent, _FrameNode())
            self._nodes[child] = _FrameNode(parent=parent, to_parent=transform)
        logger.debug("Transform %s -> %s set", parent, child)

    def detach(self, child: str) -> None:
        """Remove the edge to child's parent; child becomes a root."""
        with self._lock.write():
            node = self._require(child)
            node.parent = None
            node.to_parent = RigidTransform.identity()

    def load_transforms(self, entries: Iterable[Mapping[str, Any]]) -> int:
        """Bulk load [{parent, child, matrix: 16 row-major values}]. Returns edges loaded."""
        count = 0
        for i, entry in enumerate(entries):
            if not isinstance(entry, Mapping):
                raise InvalidTransform(f"transforms[{i}] must be a mapping")
            try:
                parent, child, values = entry["parent"], entry["child"], entry["matrix"]
            except KeyError as e:
                raise InvalidTransform(f"transforms[{i}] is missing {e.args[0]!r}") from e
            self.set_transform(parent, child, RigidTransform.from_row_major(values))
            count += 1
        logger.info("Loaded %d transforms", count)
        return count

    # queries

    def frames(self) -> List[str]:
        with self._lock.read():
            return sorted(self._nodes)

    def __contains__(self, frame: str) -> bool:
        with self._lock.read():
            return frame in self._nodes

    def parent_of(self, frame: str) -> Optional[str]:
        with self._lock.read():
            return self._require(frame).parent

    def lowest_common_ancestor(self, a: str, b: str) -> str:
        with self._lock.read():
            return self._lca(a, b)

    def lookup(self, src: str, dst: str) -> RigidTransform:
        """T_dst_src such that p_dst = T @ p_src."""
        with self._lock.read():
            anc = self._lca(src, dst)
            src_chain, src_edges = self._chain(src, anc)
            dst_chain, dst_edges = self._chain(dst, anc)
        result = dst_chain.inverse() @ src_chain
        if src_edges + dst_edges > RENORMALIZE_EVERY:
            result = result.orthonormalized()
        return result

    # internals (caller holds the lock)

    def _require(self, frame: str) -> _FrameNode:
        node = self._nodes.get(frame)
        if node is None:
            raise UnknownFrame(frame)
        return node

    def _ancestors(self, frame: str) -> List[str]:
        """frame, parent, grandparent, ..., root. Empty if frame is unknown."""
        out: List[str] = []
        cur: Optional[str] = frame
        while cur is not None and cur in self._nodes:
            out.append(cur)
            cur = self._nodes[cur].parent
        return out

    def _lca(self, a: str, b: str) -> str:
        self._require(a)
        self._require(b)
        on_a = set(self._ancestors(a))
        for frame in self._ancestors(b):
            if frame in on_a:
                return frame
        raise DisconnectedFrames(f"{a} and {b} have no common ancestor")

    def _chain(self, frame: str, ancestor: str) -> Tuple[RigidTransform, int]:
        """T_ancestor_frame and the number of edges walked."""
        result = RigidTransform.identity()
        edges = 0
        cur = frame
        while cur != ancestor:
            node = self._nodes[cur]
            result = node.to_parent @ result
            edges += 1
            if edges % RENORMALIZE_EVERY == 0:
                result = result.orthonormalized()
            cur = node.parent
        return result, edges
