"""k-d tree with insert, delete, box range search and nearest neighbour.

Points are coordinate tuples with an integer payload id.  Ties on the split
coordinate are broken by the full (coords, id) key so the ordering is a
strict total order and rebuilds are reproducible.  Every node tracks its
subtree bounding box, which lets queries prune and lets the clustering
partner search descend toward the best-scoring region directly.  ``probes``
counts visited nodes across queries.
"""

from __future__ import annotations

from typing import Iterable, Sequence


class _Node:
    __slots__ = ("coords", "pid", "axis", "left", "right", "bb_lo", "bb_hi")

    def __init__(self, coords, pid, axis):
        self.coords = coords
        self.pid = pid
        self.axis = axis
        self.left = None
        self.right = None
        self.bb_lo = list(coords)
        self.bb_hi = list(coords)


def _key(node_coords, pid):
    return (node_coords, pid)


class KdTree:
    def __init__(self, dims: int, points: Iterable[tuple[Sequence[float], int]] = ()):
        if dims < 1:
            raise ValueError("dims must be ≥ 1")
        self.dims = dims
        self.root: _Node | None = None
        self.size = 0
        self.probes = 0
        items = [(tuple(c), pid) for c, pid in points]
        if items:
            self.root = self._build(items, 0)
            self.size = len(items)

    def _build(self, items, depth):
        if not items:
            return None
        axis = depth % self.dims
        items.sort(key=lambda it: (it[0][axis], it[0], it[1]))
        mid = len(items) // 2
        coords, pid = items[mid]
        node = _Node(coords, pid, axis)
        node.left = self._build(items[:mid], depth + 1)
        node.right = self._build(items[mid + 1:], depth + 1)
        self._refresh(node)
        return node

    @staticmethod
    def _refresh(node: _Node) -> None:
        lo = list(node.coords)
        hi = list(node.coords)
        for child in (node.left, node.right):
            if child is not None:
                for d in range(len(lo)):
                    if child.bb_lo[d] < lo[d]:
                        lo[d] = child.bb_lo[d]
                    if child.bb_hi[d] > hi[d]:
                        hi[d] = child.bb_hi[d]
        node.bb_lo = lo
        node.bb_hi = hi

    def _goes_left(self, node: _Node, coords, pid) -> bool:
        a = node.axis
        return (coords[a], coords, pid) < (node.coords[a], node.coords, node.pid)

    def insert(self, coords: Sequence[float], pid: int) -> None:
        coords = tuple(coords)
        if len(coords) != self.dims:
            raise ValueError("point dimension mismatch")
        self.root = self._insert(self.root, coords, pid, 0)
        self.size += 1

    def _insert(self, node, coords, pid, depth):
        if node is None:
            return _Node(coords, pid, depth % self.dims)
        if self._goes_left(node, coords, pid):
            node.left = self._insert(node.left, coords, pid, depth + 1)
        else:
            node.right = self._insert(node.right, coords, pid, depth + 1)
        self._refresh(node)
        return node

    def delete(self, coords: Sequence[float], pid: int) -> bool:
        coords = tuple(coords)
        self.root, removed = self._delete(self.root, coords, pid)
        if removed:
            self.size -= 1
        return removed

    def _delete(self, node, coords, pid):
        if node is None:
            return None, False
        if node.coords == coords and node.pid == pid:
            return self._remove_node(node), True
        if self._goes_left(node, coords, pid):
            node.left, removed = self._delete(node.left, coords, pid)
        else:
            node.right, removed = self._delete(node.right, coords, pid)
        if removed:
            self._refresh(node)
        return node, removed

    def _remove_node(self, node):
        # Classic kd delete: replace by the axis-minimum of the right
        # subtree; with no right subtree, move the left one across first.
        if node.right is None and node.left is None:
            return None
        if node.right is None:
            node.right, node.left = node.left, None
        repl = self._find_min(node.right, node.axis)
        node.coords, node.pid = repl.coords, repl.pid
        node.right, _ = self._delete_exact(node.right, repl)
        self._refresh(node)
        return node

    def _delete_exact(self, node, target):
        if node is None:
            return None, False
        if node is target:
            return self._remove_node(node), True
        if self._goes_left(node, target.coords, target.pid):
            node.left, removed = self._delete_exact(node.left, target)
        else:
            node.right, removed = self._delete_exact(node.right, target)
        if removed:
            self._refresh(node)
        return node, removed

    def _find_min(self, node, axis):
        best = node
        stack = [node]
        while stack:
            cur = stack.pop()
            key = (cur.coords[axis], cur.coords, cur.pid)
            if key < (best.coords[axis], best.coords, best.pid):
                best = cur
            if cur.left is not None:
                stack.append(cur.left)
            # The right subtree can hold the minimum only off the split axis.
            if cur.right is not None and (cur.axis != axis or
                                          cur.right.bb_lo[axis] <= best.coords[axis]):
                stack.append(cur.right)
        return best

    def range_search(self, lo: Sequence[float], hi: Sequence[float]) -> list[int]:
        """Payload ids of all points inside the closed box [lo, hi]."""
        out: list[int] = []
        if self.root is None:
            return out
        stack = [self.root]
        while stack:
            node = stack.pop()
            self.probes += 1
            if any(node.bb_hi[d] < lo[d] or node.bb_lo[d] > hi[d] for d in range(self.dims)):
                continue
            if all(lo[d] <= node.coords[d] <= hi[d] for d in range(self.dims)):
                out.append(node.pid)
            if node.left is not None:
                stack.append(node.left)
            if node.right is not None:
                stack.append(node.right)
        return out

    def nearest(self, point: Sequence[float]) -> int | None:
        """Euclidean-nearest payload id; ties pick the lowest id."""
        if self.root is None:
            return None
        best: list = [float("inf"), None]

        def visit(node):
            if node is None:
                return
            self.probes += 1
            gap = 0.0
            for d in range(self.dims):
                if point[d] < node.bb_lo[d]:
                    gap += (node.bb_lo[d] - point[d]) ** 2
                elif point[d] > node.bb_hi[d]:
                    gap += (point[d] - node.bb_hi[d]) ** 2
            if gap > best[0]:
                return
            dist = sum((point[d] - node.coords[d]) ** 2 for d in range(self.dims))
            if (dist, node.pid) < (best[0], best[1] if best[1] is not None else float("inf")):
                best[0], best[1] = dist, node.pid
            a = node.axis
            first, second = (node.left, node.right) if point[a] < node.coords[a] \
                else (node.right, node.left)
            visit(first)
            visit(second)

        visit(self.root)
        return best[1]

    def best_in_box(self, lo: Sequence[float], hi: Sequence[float], score_axis: int,
                    exclude: frozenset[int] | set[int] = frozenset()) -> int | None:
        """Id of the in-box point maximizing one coordinate, ties by lowest id.

        Descends high-score subtrees first and prunes any subtree whose box
        misses the query or cannot beat the incumbent score, so a probe
        count near the tree depth replaces a full in-box enumeration.
        """
        if self.root is None:
            return None
        best: list = [None, None]  # score, pid

        def visit(node):
            if node is None:
                return
            self.probes += 1
            if any(node.bb_hi[d] < lo[d] or node.bb_lo[d] > hi[d] for d in range(self.dims)):
                return
            if best[0] is not None and node.bb_hi[score_axis] < best[0]:
                return
            if node.pid not in exclude and \
                    all(lo[d] <= node.coords[d] <= hi[d] for d in range(self.dims)):
                score = node.coords[score_axis]
                if best[0] is None or score > best[0] or (score == best[0] and node.pid < best[1]):
                    best[0], best[1] = score, node.pid
            children = [c for c in (node.left, node.right) if c is not None]
            children.sort(key=lambda c: -c.bb_hi[score_axis])
            for child in children:
                visit(child)

        visit(self.root)
        return best[1]
