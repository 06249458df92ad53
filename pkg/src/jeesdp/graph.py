"""Shortest-path machinery over the undirected dependency graph.

All-pairs BFS feeds the per-pair shortest-dependency-path (SDP) masks and
lengths used by the argument stage, and the pairwise argument path-length
matrix is decomposed into one 0/1 adjacency matrix per length for the
graph-convolution layer. The sentinel length for "no path / skipped pair"
is the token count n_w.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass

import numpy as np

from .corpus import ROOT, Sentence

MAX_SDP_LEN = 10


@dataclass(frozen=True)
class DepGraph:
    """Symmetric 0/1 adjacency with zero diagonal; pad tokens are isolated."""

    adjacency: np.ndarray

    def __post_init__(self):
        a = self.adjacency
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise ValueError(f"adjacency must be square, got {a.shape}")
        if not np.array_equal(a, a.T):
            raise ValueError("adjacency must be symmetric")
        if np.any(np.diag(a) != 0):
            raise ValueError("adjacency diagonal must be zero")

    @property
    def n(self) -> int:
        return self.adjacency.shape[0]

    def neighbors(self, i: int) -> np.ndarray:
        return np.flatnonzero(self.adjacency[i])


def dep_graph_from_sentence(s: Sentence) -> DepGraph:
    """Undirected arcs token<->head; pads (head = self) and arcs cut off by
    truncation contribute nothing."""
    n = len(s.tokens)
    a = np.zeros((n, n), dtype=np.int8)
    for i, tok in enumerate(s.tokens):
        h = tok.dep_head
        if h == ROOT or h == i or not (0 <= h < n):
            continue
        a[i, h] = 1
        a[h, i] = 1
    return DepGraph(adjacency=a)


def candidate_mask(spans, n_w: int) -> np.ndarray:
    """Rows of 0/1 position vectors, one per candidate span."""
    rows = np.zeros((len(spans), n_w), dtype=np.int8)
    for r, (start, end) in enumerate(spans):
        if not (0 <= start < end <= n_w):
            raise ValueError(f"candidate span [{start},{end}) out of range for {n_w} tokens")
        rows[r, start:end] = 1
    return rows


@dataclass(frozen=True)
class SdpResult:
    """Per (trigger, argument) pair: path-membership vector and hop count."""

    sdp: np.ndarray  # (n_t, n_e, n_w) 0/1
    sdp_len: np.ndarray  # (n_t, n_e) ints, sentinel n_w


def bfs_all_pairs(g: DepGraph):
    """Hop counts and one shortest path (as a membership vector) per pair.

    Neighbors are explored in ascending token index, so the reported path is
    deterministic. Unreachable pairs keep length n (the sentinel) and an
    all-zero path vector.
    """
    n = g.n
    paths = np.zeros((n, n, n), dtype=np.int8)
    lengths = np.full((n, n), n, dtype=np.int64)
    adj_lists = [g.neighbors(i) for i in range(n)]
    for src in range(n):
        parent = np.full(n, -1, dtype=np.int64)
        dist = np.full(n, -1, dtype=np.int64)
        dist[src] = 0
        queue = deque([src])
        while queue:
            u = queue.popleft()
            for v in adj_lists[u]:
                if dist[v] < 0:
                    dist[v] = dist[u] + 1
                    parent[v] = u
                    queue.append(v)
        for dst in range(n):
            if dist[dst] < 0:
                continue
            lengths[src, dst] = dist[dst]
            node = dst
            while node != -1:
                paths[src, dst, node] = 1
                node = parent[node]
    return paths, lengths


def compute_sdp(g: DepGraph, trigger_rows: np.ndarray, argument_rows: np.ndarray,
                bfs=None) -> SdpResult:
    """Shortest paths between candidate pairs, minimized over span tokens.

    Pairs that share a token are skipped and keep the sentinel length; every
    pair's membership vector includes both candidate spans regardless (so
    even skipped pairs yield a usable mask), clipped to 0/1. Pass a cached
    ``bfs_all_pairs`` result as ``bfs`` to avoid recomputing it.
    """
    n_w = g.n
    n_t = trigger_rows.shape[0]
    n_e = argument_rows.shape[0]
    paths, lengths = bfs if bfs is not None else bfs_all_pairs(g)
    sdp = np.zeros((n_t, n_e, n_w), dtype=np.int8)
    sdp_len = np.full((n_t, n_e), n_w, dtype=np.int64)
    for i in range(n_t):
        v = trigger_rows[i]
        v_tokens = np.flatnonzero(v)
        for j in range(n_e):
            u = argument_rows[j]
            if not np.any(v & u):  # overlapping pairs are skipped
                for k in v_tokens:
                    for z in np.flatnonzero(u):
                        if sdp_len[i, j] > lengths[k, z]:
                            sdp_len[i, j] = lengths[k, z]
                            sdp[i, j] = paths[k, z]
            sdp[i, j] = np.minimum(sdp[i, j] + u + v, 1)
    return SdpResult(sdp=sdp, sdp_len=sdp_len)


def compute_argument_sdp_l(g: DepGraph, argument_rows: np.ndarray, bfs=None) -> np.ndarray:
    """Pairwise path lengths between argument candidates.

    Diagonal is defined as zero; distinct overlapping candidates get the
    sentinel, like skipped pairs.
    """
    n_w = g.n
    n_e = argument_rows.shape[0]
    _, lengths = bfs if bfs is not None else bfs_all_pairs(g)
    out = np.full((n_e, n_e), n_w, dtype=np.int64)
    np.fill_diagonal(out, 0)
    for i in range(n_e):
        for j in range(i + 1, n_e):
            if np.any(argument_rows[i] & argument_rows[j]):
                continue
            best = n_w
            for k in np.flatnonzero(argument_rows[i]):
                for z in np.flatnonzero(argument_rows[j]):
                    if best > lengths[k, z]:
                        best = lengths[k, z]
            out[i, j] = best
            out[j, i] = best
    return out


def decompose_sdp_l(m: np.ndarray, n_s: int = MAX_SDP_LEN) -> list:
    """Split a pairwise length matrix into adjacency matrices M_0..M_{n_s}.

    M_0 is the identity; M_d marks exactly the pairs at distance d; entries
    beyond n_s (including the sentinel) appear in no matrix.
    """
    n_e = m.shape[0]
    if m.shape != (n_e, n_e):
        raise ValueError(f"expected a square matrix, got {m.shape}")
    if np.any(np.diag(m) != 0):
        raise ValueError("length matrix must have a zero diagonal")
    if not np.array_equal(m, m.T):
        raise ValueError("length matrix must be symmetric")
    mats = [np.eye(n_e)]
    off_diag = ~np.eye(n_e, dtype=bool)
    for d in range(1, n_s + 1):
        mats.append(((m == d) & off_diag).astype(np.float64))
    return mats
