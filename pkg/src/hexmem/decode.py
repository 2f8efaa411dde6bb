"""Uncorrelated minimum-weight perfect-matching decoding.

Detection events are paired up (or matched to the virtual boundary) with
minimum total path weight over the matching graph; the predicted logical
flip is the XOR of the matched paths' observable parities. Matching is
exact: a blossom-algorithm maximum-weight matching over the dense
event-distance graph (integer weights, so optima compare exactly), with an
exhaustive pairing oracle for small syndromes as the independent check.
"""

from __future__ import annotations

from dataclasses import dataclass
from functools import lru_cache
from heapq import heappush, heappop

import networkx as nx
import numpy as np

from .dem import BOUNDARY, MatchingGraph
from .sim import ShotBatch

_INF = float("inf")


@dataclass(frozen=True)
class Correction:
    """Predicted observable-flip parities and the matching's total weight."""

    observable_mask: int
    weight: int

    def parity(self, observable: int = 0) -> int:
        return (self.observable_mask >> observable) & 1


class MatchingDecoder:
    """Shortest-path + blossom decoder over a matching graph.

    Per-source shortest-path maps are cached, so decoding many shots from
    the same circuit amortizes the graph searches.
    """

    def __init__(self, graph: MatchingGraph):
        self.graph = graph
        for node in graph.adjacency:
            graph.adjacency[node].sort()
        self._cache: dict[int, dict[int, tuple[int, int]]] = {}

    def _paths_from(self, source: int) -> dict[int, tuple[int, int]]:
        """Dijkstra map node -> (distance, path observable mask).

        Ties resolve toward the lexicographically first shortest path, so
        decoding is deterministic.
        """
        cached = self._cache.get(source)
        if cached is not None:
            return cached
        dist: dict[int, tuple[int, int]] = {}
        heap = [(0, source, 0)]
        while heap:
            d, node, mask = heappop(heap)
            if node in dist:
                continue
            dist[node] = (d, mask)
            for nbr, w, emask in self.graph.adjacency.get(node, ()):
                if nbr not in dist:
                    heappush(heap, (d + w, nbr, mask ^ emask))
        self._cache[source] = dist
        return dist

    def decode(self, events) -> Correction:
        """Match the detection-event set; exact minimum total weight."""
        events = sorted(set(events))
        if not events:
            return Correction(0, 0)
        k = len(events)
        maps = [self._paths_from(e) for e in events]
        boundary = [maps[i].get(BOUNDARY) for i in range(k)]
        pair = [[None] * k for _ in range(k)]
        for i in range(k):
            for j in range(i + 1, k):
                pair[i][j] = maps[i].get(events[j])

        # Perfect matching over events plus one virtual partner per event:
        # event-event edges use path distances, event-partner edges the
        # boundary distance, partner-partner edges are free.
        g = nx.Graph()
        big = 1
        entries = [p for row in pair for p in row if p] + [b for b in boundary if b]
        if entries:
            big = sum(w for w, _ in entries) + 1
        for i in range(k):
            if boundary[i] is not None:
                g.add_edge(i, k + i, weight=big - boundary[i][0])
            for j in range(i + 1, k):
                if pair[i][j] is not None:
                    g.add_edge(i, j, weight=big - pair[i][j][0])
                g.add_edge(k + i, k + j, weight=big)
        matching = nx.max_weight_matching(g, maxcardinality=True)
        mask = 0
        weight = 0
        covered = set()
        for a, b in matching:
            a, b = min(a, b), max(a, b)
            if a < k and b < k:
                weight += pair[a][b][0]
                mask ^= pair[a][b][1]
                covered.update((a, b))
            elif a < k and b == k + a:
                weight += boundary[a][0]
                mask ^= boundary[a][1]
                covered.add(a)
            elif a < k:
                raise ValueError("odd detection-event set cannot be matched")
        if len(covered) != k:
            raise ValueError(
                "odd detection-event set with unreachable boundary")
        return Correction(mask, weight)

    # -- exhaustive reference --------------------------------------------

    def exhaustive_oracle(self, events, max_events: int = 12) -> Correction:
        """Brute-force minimum over all pairings (boundary allowed)."""
        events = sorted(set(events))
        if len(events) > max_events:
            raise ValueError(f"oracle limited to {max_events} events")
        maps = {e: self._paths_from(e) for e in events}

        @lru_cache(maxsize=None)
        def best(rest: frozenset) -> tuple[int, int]:
            if not rest:
                return (0, 0)
            items = sorted(rest)
            first = items[0]
            outcomes = []
            b = maps[first].get(BOUNDARY)
            if b is not None:
                w, m = best(frozenset(items[1:]))
                outcomes.append((b[0] + w, b[1] ^ m))
            for other in items[1:]:
                p = maps[first].get(other)
                if p is None:
                    continue
                w, m = best(frozenset(x for x in items[1:] if x != other))
                outcomes.append((p[0] + w, p[1] ^ m))
            if not outcomes:
                return (1 << 60, 0)
            return min(outcomes)

        w, m = best(frozenset(events))
        if w >= 1 << 60:
            raise ValueError("odd detection-event set cannot be matched")
        return Correction(m, w)


def decode_mwpm(graph: MatchingGraph, events) -> Correction:
    return MatchingDecoder(graph).decode(events)


def exhaustive_oracle(graph: MatchingGraph, events) -> Correction:
    return MatchingDecoder(graph).exhaustive_oracle(events)


def _events_of_row(words: np.ndarray, n_detectors: int):
    out = []
    for w, word in enumerate(words):
        word = int(word)
        while word:
            low = word & -word
            out.append(64 * w + low.bit_length() - 1)
            word ^= low
    return out


def logical_error_count(decoder: MatchingDecoder, batch: ShotBatch,
                        observable: int = 0) -> tuple[int, int]:
    """(shots, errors): shots whose decoded parity misses the actual flip."""
    errors = 0
    det_words = batch.detector_words
    obs = batch.observable_bools()[:, observable]
    for s in range(batch.n_shots):
        events = _events_of_row(det_words[s], batch.n_detectors)
        predicted = decoder.decode(events).parity(observable)
        if predicted != int(obs[s]):
            errors += 1
    return batch.n_shots, errors
