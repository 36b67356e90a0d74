"""Symbolic IR for finite measure-preserving single-cycle permutations.

A system is a DAG of four node kinds over labeled atoms of equal mass
1/L (L = total atom count):

  Tower(h, label)            one column; the stream emits `label` h times.
  Loop(children)             towers concatenated and closed into a cycle.
  Refine(child, r)           r-fold lift: the child stream repeated r
                             times, length r * L_child.
  Splice(left, right, pl, pr)
                             transposition merge of two cycles: with x the
                             left atom at position pl and y the right atom
                             at position pr, the successor map is changed
                             only at x (-> successor of y in right) and at
                             y (-> successor of x in left).  Always a
                             single cycle of length L_left + L_right; the
                             changed set is exactly {x, y}.

Positions are cycle order from the canonical start (first atom of the
left/first child).  In that order a Splice visits

    left[0 .. pl],  right[pr+1 ..],  right[.. pr],  left[pl+1 ..]

which is what `_arcs` below encodes.  Atoms are never materialized:
streams are lazy run-length generators, so cycles of length 10^8+ are
traversable in O(depth) memory.
"""
import logging
import weakref
from bisect import bisect_right
from fractions import Fraction

import numpy as np

logger = logging.getLogger(__name__)

MATERIALIZE_LIMIT = 2_000_000


class IRError(Exception):
    """Malformed IR construction or document."""


def _check_position(p, length, what):
    if not isinstance(p, int) or isinstance(p, bool):
        raise IRError(f"{what} must be an integer, got {p!r}")
    if not 0 <= p < length:
        raise IRError(f"{what} {p} out of range [0, {length})")


class Node:
    """Base class; subclasses are immutable after construction."""

    __slots__ = ("length", "_counts", "__weakref__")

    def label_counts(self) -> dict:
        if self._counts is None:
            self._counts = self._count_labels()
        return dict(self._counts)

    def label_mass(self, labels) -> Fraction:
        """Total mass of atoms whose label lies in `labels`."""
        counts = self.label_counts()
        want = {labels} if isinstance(labels, int) else set(labels)
        return Fraction(sum(counts.get(l, 0) for l in want), self.length)

    def runs_from(self, start):
        """Infinite (label, runlength) generator from cycle position `start`.

        Runs are constant-label but not necessarily maximal (adjacent runs
        may share a label); consumers must not rely on maximality.
        """
        _check_position(start, self.length, "start")
        return self._runs_from(start)


class Tower(Node):
    __slots__ = ("height", "label")

    def __init__(self, height, label):
        if not isinstance(height, int) or height < 1:
            raise IRError(f"tower height must be a positive integer, got {height!r}")
        if not isinstance(label, int) or isinstance(label, bool) or label < 0:
            raise IRError(f"label must be a nonnegative integer, got {label!r}")
        self.height = height
        self.label = label
        self.length = height
        self._counts = None

    def _count_labels(self):
        return {self.label: self.height}

    def _runs_from(self, start):
        yield (self.label, self.height - start)
        while True:
            yield (self.label, self.height)

    def __repr__(self):
        return f"Tower({self.height}, label={self.label})"


class Loop(Node):
    __slots__ = ("children", "_ends")

    def __init__(self, children):
        children = tuple(children)
        if not children:
            raise IRError("loop needs at least one tower")
        for ch in children:
            if not isinstance(ch, Tower):
                raise IRError(f"loop children must be towers, got {type(ch).__name__}")
        self.children = children
        ends = []
        total = 0
        for ch in children:
            total += ch.height
            ends.append(total)
        self._ends = ends
        self.length = total
        self._counts = None

    def _count_labels(self):
        counts = {}
        for ch in self.children:
            counts[ch.label] = counts.get(ch.label, 0) + ch.height
        return counts

    def _runs_from(self, start):
        i = bisect_right(self._ends, start)
        off = start - (self._ends[i - 1] if i else 0)
        first = self.children[i]
        yield (first.label, first.height - off)
        n = len(self.children)
        i += 1
        while True:
            if i == n:
                i = 0
            ch = self.children[i]
            yield (ch.label, ch.height)
            i += 1

    def __repr__(self):
        return f"Loop(<{len(self.children)} towers, L={self.length}>)"


class Refine(Node):
    __slots__ = ("child", "factor")

    def __init__(self, child, factor):
        if not isinstance(child, Node):
            raise IRError("refine child must be a node")
        if not isinstance(factor, int) or factor < 1:
            raise IRError(f"refine factor must be a positive integer, got {factor!r}")
        self.child = child
        self.factor = factor
        self.length = factor * child.length
        self._counts = None

    def _count_labels(self):
        return {l: self.factor * c for l, c in self.child.label_counts().items()}

    def _runs_from(self, start):
        # The child stream is periodic with period L_child, so repeating it
        # r times is the same infinite stream started at start mod L_child.
        return self.child._runs_from(start % self.child.length)

    def __repr__(self):
        return f"Refine({self.child!r}, r={self.factor})"


def _clipped_runs(node, start, count):
    """Finite prefix of node's run stream: exactly `count` atoms."""
    if count <= 0:
        return
    for label, run in node._runs_from(start % node.length):
        if run >= count:
            yield (label, count)
            return
        yield (label, run)
        count -= run


class Splice(Node):
    __slots__ = ("left", "right", "p_left", "p_right", "_arcs")

    def __init__(self, left, right, p_left, p_right):
        if not isinstance(left, Node) or not isinstance(right, Node):
            raise IRError("splice sides must be nodes")
        _check_position(p_left, left.length, "p_left")
        _check_position(p_right, right.length, "p_right")
        self.left = left
        self.right = right
        self.p_left = p_left
        self.p_right = p_right
        self.length = left.length + right.length
        lb = right.length
        arcs = [
            (left, 0, p_left + 1),
            (right, (p_right + 1) % lb, lb),
            (left, p_left + 1, left.length - p_left - 1),
        ]
        self._arcs = tuple(a for a in arcs if a[2] > 0)
        self._counts = None

    def _count_labels(self):
        counts = self.left.label_counts()
        for l, c in self.right.label_counts().items():
            counts[l] = counts.get(l, 0) + c
        return counts

    def _runs_from(self, start):
        arcs = self._arcs
        i = 0
        off = start
        while off >= arcs[i][2]:
            off -= arcs[i][2]
            i += 1
        while True:
            node, s0, cnt = arcs[i]
            yield from _clipped_runs(node, s0 + off, cnt - off)
            off = 0
            i = (i + 1) % len(arcs)

    def __repr__(self):
        return (f"Splice(L={self.left.length}+{self.right.length}, "
                f"p_left={self.p_left}, p_right={self.p_right})")


def splice(left, right, p_left, p_right) -> Splice:
    return Splice(left, right, p_left, p_right)


def refine(node, factor) -> Node:
    """r-fold lift; the identity refinement is canonicalized away."""
    if factor == 1:
        return node
    return Refine(node, factor)


# ---------------------------------------------------------------------------
# position transport
#
# Construction steps move atoms to new cycle positions; the builders track
# protected positions (earlier splice atoms) through these maps.

def splice_left_position(q: int, p_left: int, right_len: int) -> int:
    """New position of the left-side atom that sat at position q."""
    return q if q <= p_left else q + right_len


def splice_right_position(u: int, p_left: int, p_right: int, right_len: int) -> int:
    """New position of the right-side atom that sat at position u."""
    return p_left + ((u - p_right - 1) % right_len) + 1


def refine_positions(p: int, child_len: int, factor: int) -> list:
    """All positions of the r copies of the child atom at position p."""
    return [p + t * child_len for t in range(factor)]


# ---------------------------------------------------------------------------
# stream evaluation helpers

def stream(ir, start, count):
    """Yield `count` labels along the cycle from position `start`."""
    if count <= 0:
        return
    for label, run in ir.runs_from(start):
        if run >= count:
            for _ in range(count):
                yield label
            return
        for _ in range(run):
            yield label
        count -= run


def runs_one_period(ir, start=0):
    """Maximal-run decomposition of one full period from `start`.

    Returns a list of (label, runlength) with adjacent labels distinct,
    summing to L.  The first and last runs may share a label (cyclic
    adjacency is the caller's business).
    """
    out = []
    remaining = ir.length
    for label, run in ir.runs_from(start):
        run = min(run, remaining)
        if out and out[-1][0] == label:
            out[-1] = (label, out[-1][1] + run)
        else:
            out.append((label, run))
        remaining -= run
        if remaining == 0:
            return out


_run_array_cache = {}


def _clip_arrays(labels, lens, starts, a, b):
    """Runs covering positions [a, b), with the boundary runs trimmed."""
    i0 = int(np.searchsorted(starts, a, side="right")) - 1
    i1 = int(np.searchsorted(starts, b - 1, side="right")) - 1
    out_labels = labels[i0:i1 + 1]
    out_lens = lens[i0:i1 + 1].copy()
    out_lens[-1] = b - starts[i1]
    out_lens[0] -= a - starts[i0]
    return out_labels, out_lens


def _run_arrays(ir, memo):
    hit = memo.get(id(ir))
    if hit is not None:
        return hit
    if isinstance(ir, Tower):
        out = (np.array([ir.label], np.int64),
               np.array([ir.height], np.int64))
    elif isinstance(ir, Loop):
        parts = [_run_arrays(child, memo) for child in ir.children]
        out = (np.concatenate([p[0] for p in parts]),
               np.concatenate([p[1] for p in parts]))
    elif isinstance(ir, Refine):
        labels, lens = _run_arrays(ir.child, memo)
        out = (np.tile(labels, ir.factor), np.tile(lens, ir.factor))
    elif isinstance(ir, Splice):
        parts = []
        for node, src, count in ir._arcs:
            labels, lens = _run_arrays(node, memo)
            starts = np.concatenate(([0], np.cumsum(lens)))
            end = src + count
            if end <= node.length:
                parts.append(_clip_arrays(labels, lens, starts, src, end))
            else:  # the arc wraps around the child's period
                parts.append(_clip_arrays(labels, lens, starts, src,
                                          node.length))
                parts.append(_clip_arrays(labels, lens, starts, 0,
                                          end - node.length))
        out = (np.concatenate([p[0] for p in parts]),
               np.concatenate([p[1] for p in parts]))
    else:  # pragma: no cover - the node types above are exhaustive
        raise IRError(f"unknown node type {type(ir).__name__}")
    memo[id(ir)] = out
    return out


def run_arrays(ir):
    """One period from position 0 as (labels, runlengths) int64 arrays.

    Built bottom-up with array tiling/slicing rather than by walking the
    run stream, so the cost is proportional to the stored run structure,
    not to r * runs(child) generator steps per refinement.  Adjacent
    runs may share a label (boundaries are not re-merged); lengths sum
    to ir.length.  Memoized per node object: repeated sweeps over one
    system build the arrays once.
    """
    hit = _run_array_cache.get(id(ir))
    if hit is not None and hit[0]() is ir:
        return hit[1]
    out = _run_arrays(ir, {})
    ref = weakref.ref(ir, lambda _, key=id(ir): _run_array_cache.pop(key, None))
    _run_array_cache[id(ir)] = (ref, out)
    return out


def materialize(ir, limit=MATERIALIZE_LIMIT):
    """Full label list; refuses systems beyond `limit` atoms."""
    if ir.length > limit:
        raise IRError(f"refusing to materialize {ir.length} atoms (limit {limit})")
    return list(stream(ir, 0, ir.length))


# ---------------------------------------------------------------------------
# serialization: JSON-safe DAG document, children by index, numbers that can
# exceed 2^53 (heights, positions, factors) as decimal strings.

_FORMAT = "ergolab-ir"


def serialize(ir) -> dict:
    nodes = []
    index = {}

    def visit(node):
        key = id(node)
        if key in index:
            return index[key]
        if isinstance(node, Tower):
            doc = {"kind": "tower", "height": str(node.height),
                   "label": node.label}
        elif isinstance(node, Loop):
            doc = {"kind": "loop",
                   "children": [visit(ch) for ch in node.children]}
        elif isinstance(node, Refine):
            doc = {"kind": "refine", "child": visit(node.child),
                   "factor": str(node.factor)}
        elif isinstance(node, Splice):
            doc = {"kind": "splice", "left": visit(node.left),
                   "right": visit(node.right),
                   "p_left": str(node.p_left), "p_right": str(node.p_right)}
        else:
            raise IRError(f"cannot serialize {type(node).__name__}")
        nodes.append(doc)
        idx = len(nodes) - 1
        index[key] = idx
        return idx

    root = visit(ir)
    return {"format": _FORMAT, "version": 1, "root": root, "nodes": nodes}


def _parse_posint(doc, key, path, minimum=1):
    raw = doc.get(key)
    try:
        value = int(raw)
    except (TypeError, ValueError):
        raise IRError(f"{path}.{key}: expected integer string, got {raw!r}") from None
    if value < minimum:
        raise IRError(f"{path}.{key}: {value} below minimum {minimum}")
    return value


def deserialize(doc: dict):
    if not isinstance(doc, dict) or doc.get("format") != _FORMAT:
        raise IRError("not an IR document")
    if doc.get("version") != 1:
        raise IRError(f"unsupported IR version {doc.get('version')!r}")
    raw_nodes = doc.get("nodes")
    if not isinstance(raw_nodes, list) or not raw_nodes:
        raise IRError("IR document has no nodes")

    built = []

    def child_index(node_doc, key, path):
        idx = node_doc.get(key)
        if not isinstance(idx, int) or not 0 <= idx < len(built):
            raise IRError(f"{path}.{key}: invalid child index {idx!r} "
                          "(children must precede parents)")
        return built[idx]

    for i, node_doc in enumerate(raw_nodes):
        path = f"nodes[{i}]"
        if not isinstance(node_doc, dict):
            raise IRError(f"{path}: expected object")
        kind = node_doc.get("kind")
        try:
            if kind == "tower":
                label = node_doc.get("label")
                node = Tower(_parse_posint(node_doc, "height", path), label)
            elif kind == "loop":
                idxs = node_doc.get("children")
                if not isinstance(idxs, list):
                    raise IRError(f"{path}.children: expected list")
                children = []
                for j in idxs:
                    if not isinstance(j, int) or not 0 <= j < len(built):
                        raise IRError(f"{path}.children: invalid child index {j!r}")
                    children.append(built[j])
                node = Loop(children)
            elif kind == "refine":
                node = Refine(child_index(node_doc, "child", path),
                              _parse_posint(node_doc, "factor", path))
            elif kind == "splice":
                left = child_index(node_doc, "left", path)
                right = child_index(node_doc, "right", path)
                node = Splice(left, right,
                              _parse_posint(node_doc, "p_left", path, minimum=0),
                              _parse_posint(node_doc, "p_right", path, minimum=0))
            else:
                raise IRError(f"{path}: unknown node kind {kind!r}")
        except IRError as exc:
            msg = str(exc)
            raise IRError(msg if msg.startswith(path) else f"{path}: {msg}") from None
        built.append(node)

    root = doc.get("root")
    if not isinstance(root, int) or not 0 <= root < len(built):
        raise IRError(f"invalid root index {root!r}")
    return built[root]
