"""Pure-Python putative-time queue and prefix-sum tree.

Reference implementations of the two per-event data structures.  The
compiled twin in `_structs_cy.pyx` mirrors this module exactly;
`clocksim.structs` picks one at import time.

PutativeQueue: indexed min-pairing-heap over (time, clock id).  Ordering is
lexicographic, so equal times break toward the smallest clock id and pop
order is deterministic.  decrease-key is a cut-and-meld; increase-key is
delete-and-reinsert.

PrefixSumTree: Fenwick tree over nonnegative float weights with point
update, total, and find-by-prefix (smallest index whose inclusive prefix
sum strictly exceeds the target -- zero-weight slots are never returned).
Updates are deltas, so float error can drift; the tree is rebuilt from the
exact leaf array every `rebuild_every` updates to bound it.
"""

from __future__ import annotations


class _Node:
    __slots__ = ("time", "cid", "child", "sibling", "prev")

    def __init__(self, time, cid):
        self.time = time
        self.cid = cid
        self.child = None
        self.sibling = None
        self.prev = None


def _meld(a, b):
    if a is None:
        return b
    if b is None:
        return a
    if (a.time, a.cid) < (b.time, b.cid):
        parent, child = a, b
    else:
        parent, child = b, a
    child.sibling = parent.child
    if parent.child is not None:
        parent.child.prev = child
    child.prev = parent
    parent.child = child
    return parent


def _combine_siblings(first):
    """Two-pass pairing of a detached child list; returns the new root."""
    if first is None:
        return None
    pairs = []
    node = first
    while node is not None:
        a = node
        b = a.sibling
        node = b.sibling if b is not None else None
        a.prev = a.sibling = None
        if b is not None:
            b.prev = b.sibling = None
        pairs.append(_meld(a, b))
    root = pairs[-1]
    for i in range(len(pairs) - 2, -1, -1):
        root = _meld(pairs[i], root)
    return root


class PutativeQueue:
    """Indexed min-priority queue over clock putative times."""

    def __init__(self):
        self._root = None
        self._nodes = {}

    def __len__(self):
        return len(self._nodes)

    def __contains__(self, cid):
        return cid in self._nodes

    def members(self):
        return list(self._nodes)

    def time_of(self, cid):
        return self._nodes[cid].time

    def insert(self, cid, time):
        if cid in self._nodes:
            raise KeyError(f"clock {cid} already queued")
        node = _Node(time, cid)
        self._nodes[cid] = node
        self._root = _meld(self._root, node)

    def peek(self):
        if self._root is None:
            return None
        return (self._root.cid, self._root.time)

    def pop(self):
        root = self._root
        if root is None:
            raise IndexError("pop from empty queue")
        self._root = _combine_siblings(root.child)
        root.child = None
        del self._nodes[root.cid]
        return (root.cid, root.time)

    def _cut(self, node):
        # Unlink a non-root node from its parent/sibling chain.
        if node.prev.child is node:
            node.prev.child = node.sibling
        else:
            node.prev.sibling = node.sibling
        if node.sibling is not None:
            node.sibling.prev = node.prev
        node.prev = None
        node.sibling = None

    def delete(self, cid):
        node = self._nodes.pop(cid)
        if node is self._root:
            self._root = _combine_siblings(node.child)
        else:
            self._cut(node)
            self._root = _meld(self._root, _combine_siblings(node.child))
        node.child = None

    def update(self, cid, time):
        node = self._nodes[cid]
        if time == node.time:
            return
        if time < node.time:
            node.time = time
            if node is not self._root:
                self._cut(node)
                self._root = _meld(self._root, node)
        else:
            self.delete(cid)
            self.insert(cid, time)


class PrefixSumTree:
    """Fenwick tree over clock hazard weights with find-by-prefix."""

    def __init__(self, capacity=16, rebuild_every=4096):
        n = 1
        while n < max(capacity, 1):
            n *= 2
        self._n = n
        self._leaves = [0.0] * n
        self._tree = [0.0] * (n + 1)
        self._rebuild_every = rebuild_every
        self._ops = 0

    @property
    def capacity(self):
        return self._n

    def get(self, index):
        return self._leaves[index]

    def _grow(self, needed):
        n = self._n
        while n < needed:
            n *= 2
        self._leaves.extend([0.0] * (n - self._n))
        self._n = n
        self.rebuild()

    def rebuild(self):
        n = self._n
        tree = [0.0] * (n + 1)
        for i, v in enumerate(self._leaves):
            j = i + 1
            tree[j] += v
            parent = j + (j & -j)
            if parent <= n:
                tree[parent] += tree[j]
        self._tree = tree
        self._ops = 0

    def set(self, index, value):
        if value < 0.0:
            raise ValueError(f"weights must be >= 0, got {value}")
        if index >= self._n:
            self._grow(index + 1)
        delta = value - self._leaves[index]
        if delta == 0.0:
            return
        self._leaves[index] = value
        j = index + 1
        tree = self._tree
        n = self._n
        while j <= n:
            tree[j] += delta
            j += j & -j
        self._ops += 1
        if self._ops >= self._rebuild_every:
            self.rebuild()

    def prefix(self, index):
        """Inclusive prefix sum of leaves[0..index]."""
        j = index + 1
        s = 0.0
        tree = self._tree
        while j > 0:
            s += tree[j]
            j -= j & -j
        return s

    def total(self):
        return self.prefix(self._n - 1)

    def find(self, x):
        """Smallest index with inclusive prefix sum > x; -1 if x >= total."""
        pos = 0
        bit = self._n
        rem = x
        tree = self._tree
        n = self._n
        while bit:
            nxt = pos + bit
            if nxt <= n and tree[nxt] <= rem:
                pos = nxt
                rem -= tree[nxt]
            bit >>= 1
        if pos >= n:
            return -1
        return pos
