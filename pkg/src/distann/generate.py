"""Seeded network generators for benchmarks and randomized testing."""
from __future__ import annotations

import random
from typing import Optional, Union

from .expr import parse_function
from .graph import Edge, External, Neuron, NeuronGraph

MIXED_TRANSFERS = (
    "f(x)=x",
    "f(x)=sigmoid(x)",
    "f(x)=1/(1+exp(-x))",
    "f(x)=tanh(x)",
    "f(x)=relu(x)",
    "f(x)=step(x)",
    "f(x)=abs(x)-0.5",
    "f(x)=0.5*x+1",
)


def layered_network(width: int, depth: int, transfer: str = "f(x)=x",
                    weight: Union[float, str] = 1.0, bias: float = 0.0,
                    rng: Optional[random.Random] = None) -> NeuronGraph:
    """Fully connected feed-forward net, ``depth`` layers of ``width`` neurons.

    Layer 0 neurons each take one external input; neuron ``k`` of every
    later layer reads neuron ``j`` of the previous layer on slot ``j``.
    Ids run 1..width*depth layer by layer.  ``weight="random"`` draws
    weights uniformly from [-1, 1] with ``rng``.
    """
    if width < 1 or depth < 1:
        raise ValueError("width and depth must be >= 1")
    f = parse_function(transfer)
    rng = rng or random.Random(0)

    def w():
        return rng.uniform(-1.0, 1.0) if weight == "random" else float(weight)

    neurons = []
    prev: list[int] = []
    for d in range(depth):
        ids = list(range(d * width + 1, (d + 1) * width + 1))
        for i in ids:
            slots = tuple(Edge(p, w()) for p in prev) if prev else (External(w()),)
            neurons.append(Neuron(i, bias, f, slots))
        prev = ids
    return NeuronGraph.from_neurons(neurons)


def random_inputs(g: NeuronGraph, rng: random.Random, low: float = -1.0,
                  high: float = 1.0) -> dict[tuple[int, int], float]:
    return {key: rng.uniform(low, high) for key in g.external_slots}


def random_network(seed: int, max_neurons: int = 64, max_slots: int = 4,
                   transfers=MIXED_TRANSFERS, edge_prob: float = 0.75):
    """Random DAG plus matching input values, fully determined by ``seed``.

    Neuron ids are a random sample so that id order and topological order
    disagree.  Returns ``(graph, inputs)``.
    """
    rng = random.Random(seed)
    n = rng.randint(1, max_neurons)
    ids = rng.sample(range(1, 4 * max_neurons + 1), n)
    fns = {t: parse_function(t) for t in transfers}
    neurons = []
    for k, i in enumerate(ids):
        slots = []
        for _ in range(rng.randint(0, max_slots)):
            if k and rng.random() < edge_prob:
                slots.append(Edge(ids[rng.randrange(k)], round(rng.uniform(-1.5, 1.5), 6)))
            else:
                slots.append(External(round(rng.uniform(-1.5, 1.5), 6)))
        neurons.append(Neuron(i, round(rng.uniform(-0.5, 0.5), 6), fns[rng.choice(transfers)],
                              tuple(slots)))
    g = NeuronGraph.from_neurons(neurons)
    return g, random_inputs(g, rng, -2.0, 2.0)
