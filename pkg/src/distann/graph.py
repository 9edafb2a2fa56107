"""Executable layered neuron DAG built from parsed documents."""
from __future__ import annotations

from collections import defaultdict
from dataclasses import dataclass, field
from typing import Iterable, Mapping, Optional, Union

from . import expr
from .xml_model import (
    ArchitectureDoc,
    InputValuesDoc,
    NodeDecl,
    OutputSelectionDoc,
    PreNodeRef,
    WeightValuesDoc,
)

DEFAULT_WEIGHT = 1.0


class GraphError(Exception):
    code = "GraphError"


class CycleDetected(GraphError):
    code = "CycleDetected"

    def __init__(self, cycle: list[int]):
        path = " -> ".join(str(n) for n in cycle + cycle[:1])
        super().__init__(f"network contains a cycle: {path}")
        self.cycle = cycle


class SlotGap(GraphError):
    code = "SlotGap"


class EmptyOutputs(GraphError):
    code = "EmptyOutputs"


class UnknownNeuron(GraphError):
    code = "UnknownNeuron"


@dataclass(frozen=True)
class Edge:
    source: int
    weight: float = DEFAULT_WEIGHT


@dataclass(frozen=True)
class External:
    weight: float = DEFAULT_WEIGHT


Slot = Union[Edge, External]


@dataclass(frozen=True)
class Neuron:
    id: int
    bias: float
    transfer: expr.TransferExpr
    slots: tuple[Slot, ...] = ()

    @property
    def fan_in(self) -> int:
        return len(self.slots)

    @property
    def sources(self) -> list[int]:
        return [s.source for s in self.slots if isinstance(s, Edge)]


@dataclass(frozen=True, eq=False)
class NeuronGraph:
    """Immutable feed-forward network with longest-path layers.

    Build with :func:`build_graph` from documents or :meth:`from_neurons`
    from neurons directly; both validate the structure.
    """

    neurons: Mapping[int, Neuron]
    layers: tuple[tuple[int, ...], ...]
    outputs: tuple[int, ...]
    layer_of: Mapping[int, int] = field(repr=False)
    successors: Mapping[int, tuple[int, ...]] = field(repr=False)

    @classmethod
    def from_neurons(cls, neurons: Iterable[Neuron], outputs: Optional[Iterable[int]] = None):
        by_id: dict[int, Neuron] = {}
        for n in neurons:
            if n.id in by_id:
                raise GraphError(f"duplicate neuron id {n.id}")
            by_id[n.id] = n
        by_id = dict(sorted(by_id.items()))
        succ: dict[int, set[int]] = {i: set() for i in by_id}
        for n in by_id.values():
            for src in n.sources:
                if src not in by_id:
                    raise UnknownNeuron(f"neuron {n.id} reads from unknown neuron {src}")
                if src == n.id:
                    raise CycleDetected([n.id])
                succ[src].add(n.id)
        layers = _longest_path_layers(by_id, succ)
        layer_of = {i: k for k, layer in enumerate(layers) for i in layer}
        if outputs is None:
            outputs = tuple(i for i in by_id if not succ[i])
        else:
            outputs = tuple(outputs)
            for i in outputs:
                if i not in by_id:
                    raise UnknownNeuron(f"output selection names unknown neuron {i}")
        if not outputs:
            raise EmptyOutputs("network has no output neurons")
        return cls(by_id, layers, outputs, layer_of,
                   {i: tuple(sorted(s)) for i, s in succ.items()})

    def __eq__(self, other):
        if not isinstance(other, NeuronGraph):
            return NotImplemented
        return (dict(self.neurons) == dict(other.neurons) and self.layers == other.layers
                and self.outputs == other.outputs)

    __hash__ = None

    def __len__(self):
        return len(self.neurons)

    def edges(self) -> list[tuple[int, int]]:
        """All ``(source, target)`` pairs, ordered by target id then slot."""
        return [(src, n.id) for n in self.neurons.values() for src in n.sources]

    @property
    def total_macs(self) -> int:
        return sum(n.fan_in for n in self.neurons.values())

    @property
    def external_slots(self) -> list[tuple[int, int]]:
        return [(n.id, k) for n in self.neurons.values()
                for k, s in enumerate(n.slots) if isinstance(s, External)]


def _longest_path_layers(neurons, succ) -> tuple[tuple[int, ...], ...]:
    indeg = {i: len(set(n.sources)) for i, n in neurons.items()}
    depth = {i: 0 for i in neurons}
    ready = [i for i, d in indeg.items() if d == 0]
    done = 0
    while ready:
        nxt = []
        for u in ready:
            done += 1
            for v in succ[u]:
                depth[v] = max(depth[v], depth[u] + 1)
                indeg[v] -= 1
                if indeg[v] == 0:
                    nxt.append(v)
        ready = nxt
    if done < len(neurons):
        raise CycleDetected(_find_cycle(neurons, {i for i, d in indeg.items() if d > 0}))
    by_layer = defaultdict(list)
    for i, d in depth.items():
        by_layer[d].append(i)
    return tuple(tuple(sorted(by_layer[d])) for d in range(len(by_layer)))


def _find_cycle(neurons, remaining: set[int]) -> list[int]:
    # every leftover neuron has a leftover predecessor, so walking backwards must repeat
    node = min(remaining)
    order: list[int] = []
    seen: dict[int, int] = {}
    while node not in seen:
        seen[node] = len(order)
        order.append(node)
        node = min(s for s in neurons[node].sources if s in remaining)
    cycle = order[seen[node]:]
    cycle.reverse()
    k = cycle.index(min(cycle))
    return cycle[k:] + cycle[:k]


def assign_layers(g: NeuronGraph) -> tuple[tuple[int, ...], ...]:
    """Recompute longest-path layers; ids ascend within each layer."""
    succ = {i: set() for i in g.neurons}
    for src, dst in g.edges():
        succ[src].add(dst)
    return _longest_path_layers(g.neurons, succ)


def build_graph(arch: ArchitectureDoc, weights: WeightValuesDoc, inputs: InputValuesDoc,
                outputs: Optional[OutputSelectionDoc] = None) -> NeuronGraph:
    """Interpret parsed documents into a :class:`NeuronGraph`.

    External slots are exactly the ``(node, slot)`` pairs listed in
    ``inputs``; slots without a weight get ``DEFAULT_WEIGHT``.
    """
    w = weights.as_dict()
    ext: dict[int, set[int]] = defaultdict(set)
    for index, items in inputs.entries:
        ext[index].update(s for s, _ in items)

    neurons = []
    for decl in arch.nodes:
        i = decl.node_index
        feeds: dict[int, Slot] = {}
        for ref in decl.pre_nodes:
            feeds[ref.input_index] = Edge(ref.source_node_index, w.get((i, ref.input_index), DEFAULT_WEIGHT))
        for s in sorted(ext.get(i, ())):
            if s in feeds:
                raise SlotGap(f"node {i} slot {s} is both a preNode slot and an external input")
            feeds[s] = External(w.get((i, s), DEFAULT_WEIGHT))
        if sorted(feeds) != list(range(len(feeds))):
            raise SlotGap(f"node {i} slots {sorted(feeds)} are not exactly 0..{len(feeds) - 1}")
        neurons.append(Neuron(i, expr.eval_const(decl.bias_expr),
                              expr.parse_function(decl.function_text),
                              tuple(feeds[k] for k in range(len(feeds)))))
    unknown = set(ext) - set(arch.node_indices)
    if unknown:
        raise UnknownNeuron(f"input values given for unknown node(s) {sorted(unknown)}")
    return NeuronGraph.from_neurons(neurons, outputs.node_indices if outputs else None)


def to_documents(g: NeuronGraph, input_values: Optional[Mapping[tuple[int, int], float]] = None):
    """Inverse of :func:`build_graph`: ``(arch, weights, inputs, outputs)`` documents.

    External slots without an entry in ``input_values`` are written as 0.0.
    """
    input_values = input_values or {}
    nodes, weights, inputs = [], [], []
    for n in g.neurons.values():
        refs = tuple(PreNodeRef(s.source, k) for k, s in enumerate(n.slots) if isinstance(s, Edge))
        nodes.append(NodeDecl(n.id, refs, repr(n.bias), str(n.transfer)))
        if n.slots:
            weights.append((n.id, tuple((k, s.weight) for k, s in enumerate(n.slots))))
        ext = tuple((k, input_values.get((n.id, k), 0.0))
                    for k, s in enumerate(n.slots) if isinstance(s, External))
        if ext:
            inputs.append((n.id, ext))
    return (ArchitectureDoc(tuple(nodes)), WeightValuesDoc(tuple(weights)),
            InputValuesDoc(tuple(inputs)), OutputSelectionDoc(g.outputs))


_PALETTE = ["lightblue", "lightsalmon", "palegreen", "khaki", "plum", "lightgray",
            "lightpink", "aquamarine"]


def to_dot(g: NeuronGraph, worker_of: Optional[Mapping[int, int]] = None) -> str:
    """Graphviz text: one node per neuron labelled with its layer, weighted edges.

    With ``worker_of`` nodes are filled with a per-worker colour.
    """
    lines = ["digraph network {", "  rankdir=LR;"]
    outputs = set(g.outputs)
    for i in g.neurons:
        attrs = [f'label="{i}\\nL{g.layer_of[i]}"']
        if i in outputs:
            attrs.append("shape=doublecircle")
        if worker_of is not None:
            w = worker_of[i]
            attrs += ["style=filled", f'fillcolor="{_PALETTE[w % len(_PALETTE)]}"',
                      f'xlabel="w{w}"']
        lines.append(f"  n{i} [{', '.join(attrs)}];")
    for n in g.neurons.values():
        for k, s in enumerate(n.slots):
            if isinstance(s, Edge):
                lines.append(f'  n{s.source} -> n{n.id} [label="{s.weight!r}", headlabel="{k}"];')
    lines.append("}")
    return "\n".join(lines) + "\n"
