"""Hamming-distance graphs over basis indices and their minimum spanning trees."""
from __future__ import annotations

import itertools
import math
from collections import Counter
from dataclasses import dataclass

import numpy as np

from .errors import DomainError

# above this many vertices, candidate edges come from flipping bit masks
# instead of a dense pairwise distance matrix
_PAIRWISE_MAX = 1024


def hamming_distance(i: int, j: int) -> int:
    return (int(i) ^ int(j)).bit_count()


@dataclass(frozen=True)
class HammingGraph:
    """Complete graph on distinct basis indices, weighted by Hamming distance."""

    n: int
    vertices: tuple

    def __post_init__(self):
        verts = tuple(sorted(int(v) for v in self.vertices))
        if len(set(verts)) != len(verts):
            raise DomainError("vertices must be distinct")
        if verts and not (0 <= verts[0] and verts[-1] < 1 << self.n):
            raise DomainError(f"vertex out of range for {self.n} bits")
        object.__setattr__(self, "vertices", verts)

    @property
    def k(self) -> int:
        return len(self.vertices)

    def weight(self, u: int, v: int) -> int:
        return hamming_distance(u, v)


@dataclass(frozen=True)
class SpanningTree:
    vertices: tuple
    edges: tuple  # (u, v, w) with u < v, in the order Kruskal accepted them

    @property
    def total_weight(self) -> int:
        return sum(w for _, _, w in self.edges)

    @property
    def weight_hist(self) -> dict[int, int]:
        """``{j: p_j}``, the number of tree edges of each weight."""
        return dict(sorted(Counter(w for _, _, w in self.edges).items()))

    @property
    def max_weight(self) -> int:
        return max((w for _, _, w in self.edges), default=0)


class _DisjointSet:
    def __init__(self, size):
        self.parent = list(range(size))

    def find(self, a):
        parent = self.parent
        while parent[a] != a:
            parent[a] = parent[parent[a]]
            a = parent[a]
        return a

    def union(self, a, b) -> bool:
        ra, rb = self.find(a), self.find(b)
        if ra == rb:
            return False
        self.parent[max(ra, rb)] = min(ra, rb)
        return True


def _masks_of_weight(n: int, w: int) -> np.ndarray:
    out = [sum(1 << b for b in bits) for bits in itertools.combinations(range(n), w)]
    return np.array(out, dtype=np.int64)


def _candidates(graph: HammingGraph):
    """Yield ``(w, pos_u, pos_v)`` arrays, one weight class at a time, sorted by endpoints."""
    verts = np.array(graph.vertices, dtype=np.int64)
    k = verts.shape[0]
    if k <= _PAIRWISE_MAX:
        iu, ju = np.triu_indices(k, 1)
        w = np.bitwise_count(verts[iu] ^ verts[ju]).astype(np.int64)
        order = np.lexsort((ju, iu, w))
        w, iu, ju = w[order], iu[order], ju[order]
        bounds = np.flatnonzero(np.diff(w)) + 1
        for lo, hi in zip(np.r_[0, bounds], np.r_[bounds, w.shape[0]]):
            yield int(w[lo]), iu[lo:hi], ju[lo:hi]
        return
    position = np.full(1 << graph.n, -1, dtype=np.int64)
    position[verts] = np.arange(k)
    for weight in range(1, graph.n + 1):
        other = verts[:, None] ^ _masks_of_weight(graph.n, weight)[None, :]
        pu = np.broadcast_to(np.arange(k)[:, None], other.shape)
        pv = position[other]
        keep = pv > pu
        pu, pv = pu[keep], pv[keep]
        order = np.lexsort((pv, pu))
        yield weight, pu[order], pv[order]


def build_mst(graph: HammingGraph) -> SpanningTree:
    """Kruskal's algorithm with edges taken in ``(weight, min end, max end)`` order."""
    k = graph.k
    if k == 0:
        raise DomainError("graph has no vertices")
    verts = graph.vertices
    edges = []
    if k > 1:
        ds = _DisjointSet(k)
        for w, pu, pv in _candidates(graph):
            for a, b in zip(pu.tolist(), pv.tolist()):
                if ds.union(a, b):
                    edges.append((verts[a], verts[b], w))
                    if len(edges) == k - 1:
                        break
            if len(edges) == k - 1:
                break
    return SpanningTree(verts, tuple(edges))


def mst_of(indices, n: int) -> SpanningTree:
    return build_mst(HammingGraph(n, tuple(indices)))


def cnot_upper_bound(tree: SpanningTree) -> int:
    """``2 * sum_j (j - 1) p_j``: two settings per edge, ``w - 1`` CNOTs each."""
    return 2 * sum((w - 1) * p for w, p in tree.weight_hist.items())


def forest_partition(tree: SpanningTree, max_weight: int) -> list[list[int]]:
    """Connected components after dropping tree edges heavier than ``max_weight``."""
    pos = {v: i for i, v in enumerate(tree.vertices)}
    ds = _DisjointSet(len(pos))
    for u, v, w in tree.edges:
        if w <= max_weight:
            ds.union(pos[u], pos[v])
    groups: dict[int, list[int]] = {}
    for v in tree.vertices:
        groups.setdefault(ds.find(pos[v]), []).append(v)
    return sorted(groups.values(), key=lambda g: g[0])


def theorem_a_subsets(n: int):
    """Every vertex set of the ``n``-cube with more than ``2**n - n`` elements."""
    size = 1 << n
    for k in range(size - n + 1, size + 1):
        yield from itertools.combinations(range(size), k)


def theorem_a_check(n: int) -> bool:
    """Exhaustively confirm that large supports always have an all-weight-1 MST."""
    if n not in (2, 3, 4):
        raise DomainError("exhaustive check is limited to n in {2, 3, 4}")
    return all(mst_of(s, n).total_weight == len(s) - 1 for s in theorem_a_subsets(n))


def adversarial_decomposition(n: int, k: int) -> tuple[int, int]:
    """``(q, r)`` with ``n = k q + r`` and ``0 <= r < q``; raises if none exists."""
    if not 3 <= k <= n:
        raise DomainError(f"need 3 <= k <= n, got k={k}, n={n}")
    q, r = divmod(n, k)
    if r >= q:
        raise DomainError(f"n={n} has no decomposition k*q + r with r < q for k={k}")
    return q, r


def adversarial_vertex_set(n: int, k: int) -> HammingGraph:
    """``k`` vertices whose MST weighs ``2q(k-1) + r``.

    The first ``k - 1`` vertices hold disjoint blocks of ``q`` ones; the last
    one fills the top ``q + r`` bits, so pairwise distances are ``2q`` among the
    blocks and ``2q + r`` to the last vertex.
    """
    q, r = adversarial_decomposition(n, k)
    block = (1 << q) - 1
    verts = [block << (j * q) for j in range(k - 1)]
    verts.append(((1 << (q + r)) - 1) << ((k - 1) * q))
    return HammingGraph(n, tuple(verts))


def adversarial_weight(n: int, k: int) -> int:
    q, r = adversarial_decomposition(n, k)
    return 2 * q * (k - 1) + r


def hamming_bound(n: int, d: int) -> int:
    """Largest code size allowed by sphere packing for length ``n``, distance ``d``."""
    if not 1 <= d <= n:
        raise DomainError(f"need 1 <= d <= n, got d={d}, n={n}")
    t = (d - 1) // 2
    return (1 << n) // sum(math.comb(n, j) for j in range(t + 1))
