# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled putative-time queue and prefix-sum tree.

Mirror of `_structs_py` with the same semantics and tie-breaking; see that
module for the contracts.  Built as `clocksim._structs`.
"""

from libc.stdlib cimport free, malloc


cdef class _Node:
    cdef double time
    cdef long cid
    cdef _Node child
    cdef _Node sibling
    cdef _Node prev

    def __cinit__(self, double time, long cid):
        self.time = time
        self.cid = cid
        self.child = None
        self.sibling = None
        self.prev = None


cdef inline bint _less(_Node a, _Node b):
    if a.time != b.time:
        return a.time < b.time
    return a.cid < b.cid


cdef _Node _meld(_Node a, _Node b):
    cdef _Node parent, child
    if a is None:
        return b
    if b is None:
        return a
    if _less(a, b):
        parent = a
        child = b
    else:
        parent = b
        child = a
    child.sibling = parent.child
    if parent.child is not None:
        parent.child.prev = child
    child.prev = parent
    parent.child = child
    return parent


cdef _Node _combine_siblings(_Node first):
    cdef list pairs
    cdef _Node node, a, b, root
    cdef Py_ssize_t i
    if first is None:
        return None
    pairs = []
    node = first
    while node is not None:
        a = node
        b = a.sibling
        node = b.sibling if b is not None else None
        a.prev = None
        a.sibling = None
        if b is not None:
            b.prev = None
            b.sibling = None
        pairs.append(_meld(a, b))
    root = <_Node> pairs[len(pairs) - 1]
    for i in range(len(pairs) - 2, -1, -1):
        root = _meld(<_Node> pairs[i], root)
    return root


cdef class PutativeQueue:
    """Indexed min-priority queue over clock putative times."""

    cdef _Node _root
    cdef dict _nodes

    def __cinit__(self):
        self._root = None
        self._nodes = {}

    def __len__(self):
        return len(self._nodes)

    def __contains__(self, cid):
        return cid in self._nodes

    def members(self):
        return list(self._nodes)

    def time_of(self, cid):
        return (<_Node> self._nodes[cid]).time

    def insert(self, long cid, double time):
        if cid in self._nodes:
            raise KeyError(f"clock {cid} already queued")
        cdef _Node node = _Node(time, cid)
        self._nodes[cid] = node
        self._root = _meld(self._root, node)

    def peek(self):
        if self._root is None:
            return None
        return (self._root.cid, self._root.time)

    def pop(self):
        cdef _Node root = self._root
        if root is None:
            raise IndexError("pop from empty queue")
        self._root = _combine_siblings(root.child)
        root.child = None
        del self._nodes[root.cid]
        return (root.cid, root.time)

    cdef void _cut(self, _Node node):
        if node.prev.child is node:
            node.prev.child = node.sibling
        else:
            node.prev.sibling = node.sibling
        if node.sibling is not None:
            node.sibling.prev = node.prev
        node.prev = None
        node.sibling = None

    def delete(self, long cid):
        cdef _Node node = <_Node> self._nodes.pop(cid)
        if node is self._root:
            self._root = _combine_siblings(node.child)
        else:
            self._cut(node)
            self._root = _meld(self._root, _combine_siblings(node.child))
        node.child = None

    def update(self, long cid, double time):
        cdef _Node node = <_Node> self._nodes[cid]
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


cdef class PrefixSumTree:
    """Fenwick tree over clock hazard weights with find-by-prefix."""

    cdef Py_ssize_t _n
    cdef double * _leaves
    cdef double * _tree
    cdef Py_ssize_t _rebuild_every
    cdef Py_ssize_t _ops

    def __cinit__(self, Py_ssize_t capacity=16, Py_ssize_t rebuild_every=4096):
        cdef Py_ssize_t n = 1
        if capacity < 1:
            capacity = 1
        while n < capacity:
            n *= 2
        self._n = n
        self._leaves = <double *> malloc(n * sizeof(double))
        self._tree = <double *> malloc((n + 1) * sizeof(double))
        if self._leaves == NULL or self._tree == NULL:
            raise MemoryError()
        cdef Py_ssize_t i
        for i in range(n):
            self._leaves[i] = 0.0
        for i in range(n + 1):
            self._tree[i] = 0.0
        self._rebuild_every = rebuild_every
        self._ops = 0

    def __dealloc__(self):
        if self._leaves != NULL:
            free(self._leaves)
        if self._tree != NULL:
            free(self._tree)

    @property
    def capacity(self):
        return self._n

    def get(self, Py_ssize_t index):
        if index < 0 or index >= self._n:
            raise IndexError(index)
        return self._leaves[index]

    cdef void _grow(self, Py_ssize_t needed):
        cdef Py_ssize_t n = self._n
        while n < needed:
            n *= 2
        cdef double * leaves = <double *> malloc(n * sizeof(double))
        cdef double * tree = <double *> malloc((n + 1) * sizeof(double))
        if leaves == NULL or tree == NULL:
            if leaves != NULL:
                free(leaves)
            if tree != NULL:
                free(tree)
            raise MemoryError()
        cdef Py_ssize_t i
        for i in range(self._n):
            leaves[i] = self._leaves[i]
        for i in range(self._n, n):
            leaves[i] = 0.0
        free(self._leaves)
        free(self._tree)
        self._leaves = leaves
        self._tree = tree
        self._n = n
        self._rebuild()

    cdef void _rebuild(self):
        cdef Py_ssize_t n = self._n
        cdef Py_ssize_t i, j, parent
        for i in range(n + 1):
            self._tree[i] = 0.0
        for i in range(n):
            j = i + 1
            self._tree[j] += self._leaves[i]
            parent = j + (j & -j)
            if parent <= n:
                self._tree[parent] += self._tree[j]
        self._ops = 0

    def rebuild(self):
        self._rebuild()

    def set(self, Py_ssize_t index, double value):
        if value < 0.0:
            raise ValueError(f"weights must be >= 0, got {value}")
        if index < 0:
            raise IndexError(index)
        if index >= self._n:
            self._grow(index + 1)
        cdef double delta = value - self._leaves[index]
        if delta == 0.0:
            return
        self._leaves[index] = value
        cdef Py_ssize_t j = index + 1
        while j <= self._n:
            self._tree[j] += delta
            j += j & -j
        self._ops += 1
        if self._ops >= self._rebuild_every:
            self._rebuild()

    def prefix(self, Py_ssize_t index):
        cdef Py_ssize_t j = index + 1
        cdef double s = 0.0
        while j > 0:
            s += self._tree[j]
            j -= j & -j
        return s

    def total(self):
        return self.prefix(self._n - 1)

    def find(self, double x):
        cdef Py_ssize_t pos = 0
        cdef Py_ssize_t bit = self._n
        cdef Py_ssize_t nxt
        cdef double rem = x
        while bit:
            nxt = pos + bit
            if nxt <= self._n and self._tree[nxt] <= rem:
                pos = nxt
                rem -= self._tree[nxt]
            bit >>= 1
        if pos >= self._n:
            return -1
        return pos
