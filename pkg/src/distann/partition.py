"""Neuron-to-worker mapping policies and partition quality statistics."""
from __future__ import annotations

import heapq
from dataclasses import dataclass
from typing import Mapping

from .graph import NeuronGraph

POLICIES = ("round_robin", "layer_block", "balanced_fanin")


class InvalidP(ValueError):
    pass


class UnknownPolicy(ValueError):
    pass


class InvalidAssignment(ValueError):
    pass


@dataclass(frozen=True)
class Assignment:
    worker_of: Mapping[int, int]
    policy_name: str
    P: int

    def owned_by(self, worker: int) -> list[int]:
        return [i for i, w in self.worker_of.items() if w == worker]

    def check(self, g: NeuronGraph):
        missing = [i for i in g.neurons if i not in self.worker_of]
        if missing:
            raise InvalidAssignment(f"neurons {missing[:10]} have no worker")
        bad = {i: w for i, w in self.worker_of.items() if not 0 <= w < self.P}
        if bad:
            raise InvalidAssignment(f"worker ids out of range 0..{self.P - 1}: {bad}")


@dataclass(frozen=True)
class PartitionStats:
    per_worker_macs: tuple[int, ...]
    cut_edges: int
    imbalance: float

    def as_dict(self) -> dict:
        return {"per_worker_macs": list(self.per_worker_macs), "cut_edges": self.cut_edges,
                "imbalance": self.imbalance}


def _round_robin(g, P):
    return {i: k % P for k, i in enumerate(sorted(g.neurons))}


def _layer_block(g, P):
    worker_of = {}
    for layer in g.layers:
        # first (n mod P) blocks get one extra neuron
        q, r = divmod(len(layer), P)
        start = 0
        for w in range(P):
            size = q + (w < r)
            for i in layer[start:start + size]:
                worker_of[i] = w
            start += size
    return worker_of


def _balanced_fanin(g, P):
    order = sorted(g.neurons.values(), key=lambda n: (-n.fan_in, n.id))
    heap = [(0, w) for w in range(P)]
    worker_of = {}
    for n in order:
        load, w = heapq.heappop(heap)
        worker_of[n.id] = w
        heapq.heappush(heap, (load + n.fan_in, w))
    return worker_of


_POLICY_FUNCS = {
    "round_robin": _round_robin,
    "layer_block": _layer_block,
    "balanced_fanin": _balanced_fanin,
}


def map_nodes(g: NeuronGraph, P: int, policy: str = "layer_block") -> Assignment:
    """Assign every neuron of ``g`` to one of ``P`` workers.

    round_robin
        ascending ids dealt out cyclically.
    layer_block
        each layer (ids ascending) cut into ``P`` contiguous blocks whose
        sizes differ by at most one; block ``i`` goes to worker ``i``.
    balanced_fanin
        neurons by descending fan-in (ties: lower id first) each go to the
        least-loaded worker (ties: lower worker id).
    """
    if not isinstance(P, int) or P < 1:
        raise InvalidP(f"worker count must be >= 1, got {P!r}")
    try:
        func = _POLICY_FUNCS[policy]
    except KeyError:
        raise UnknownPolicy(f"unknown policy {policy!r}; choose from {', '.join(POLICIES)}") from None
    return Assignment(dict(sorted(func(g, P).items())), policy, P)


def stats(g: NeuronGraph, a: Assignment) -> PartitionStats:
    macs = [0] * a.P
    for n in g.neurons.values():
        macs[a.worker_of[n.id]] += n.fan_in
    cut = sum(1 for u, v in g.edges() if a.worker_of[u] != a.worker_of[v])
    mean = sum(macs) / a.P
    imbalance = max(macs) / mean if mean else 1.0
    return PartitionStats(tuple(macs), cut, imbalance)
