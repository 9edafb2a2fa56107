"""Forward propagation: serial reference and layer-synchronous SPMD simulation.

The distributed run is a bulk-synchronous simulation.  Every simulated
worker executes the same per-layer program on the neurons it owns, reading
only values it computed itself or received in a message.  After each layer
the workers send one aggregated :class:`ValueMsg` per destination, and a
barrier delivers them.  Time comes from a :class:`CostModel`, not the wall
clock, so results are reproducible.
"""
from __future__ import annotations

import json
import math
import time
from collections import defaultdict
from dataclasses import asdict, dataclass, field
from typing import Mapping, Optional, Union

from . import expr
from .graph import Edge, Neuron, NeuronGraph
from .partition import Assignment, PartitionStats, map_nodes, stats
from .xml_model import InputValuesDoc

Inputs = Union[InputValuesDoc, Mapping[tuple[int, int], float]]


class EngineError(Exception):
    code = "EngineError"


class MissingInput(EngineError):
    code = "MissingInput"

    def __init__(self, neuron: int, slot: int):
        super().__init__(f"no input value for neuron {neuron} slot {slot}")
        self.neuron = neuron
        self.slot = slot


class NodeEvalError(EngineError):
    code = "NodeEvalError"

    def __init__(self, neuron: int, cause: Exception):
        super().__init__(f"neuron {neuron}: {cause}")
        self.neuron = neuron


@dataclass(frozen=True)
class CostModel:
    """Seconds per unit of work; ``value_size`` is bytes per transmitted value."""

    mac_cost: float = 0.0
    transfer_eval_cost: float = 0.0
    msg_latency: float = 0.0
    byte_cost: float = 0.0
    value_size: int = 8

    def __post_init__(self):
        for name, v in asdict(self).items():
            if isinstance(v, bool) or not isinstance(v, (int, float)):
                raise ValueError(f"cost model field {name} must be a number, got {v!r}")
            if not math.isfinite(v) or v < 0:
                raise ValueError(f"cost model field {name} must be finite and >= 0, got {v!r}")
        if int(self.value_size) != self.value_size:
            raise ValueError(f"value_size must be a whole number of bytes, got {self.value_size!r}")
        for name in ("mac_cost", "transfer_eval_cost", "msg_latency", "byte_cost"):
            object.__setattr__(self, name, float(getattr(self, name)))
        object.__setattr__(self, "value_size", int(self.value_size))

    def message_time(self, n_values: int) -> float:
        return self.msg_latency + n_values * self.value_size * self.byte_cost

    def compute_time(self, macs: int, evals: int) -> float:
        return macs * self.mac_cost + evals * self.transfer_eval_cost


@dataclass(frozen=True)
class ValueMsg:
    src_worker: int
    dst_worker: int
    layer: int
    payload: tuple[tuple[int, float], ...]


@dataclass(frozen=True)
class SimReport:
    outputs: tuple[tuple[int, float], ...]
    sim_time: float
    serial_time: float
    messages: int
    bytes: int
    per_layer_time: tuple[float, ...]
    stats: Optional[PartitionStats] = None
    mode: str = "serial"
    workers: int = 1
    policy: Optional[str] = None
    wall_time: float = field(default=0.0, compare=False)

    def to_dict(self) -> dict:
        # wall_time is deliberately absent: reports must be byte-reproducible
        return {
            "mode": self.mode,
            "workers": self.workers,
            "policy": self.policy,
            "outputs": [[i, v] for i, v in self.outputs],
            "sim_time": self.sim_time,
            "serial_time": self.serial_time,
            "messages": self.messages,
            "bytes": self.bytes,
            "per_layer_time": list(self.per_layer_time),
            "stats": self.stats.as_dict() if self.stats else None,
        }

    def to_json(self, indent: Optional[int] = 2) -> str:
        return json.dumps(self.to_dict(), indent=indent)


# -- shared arithmetic ----------------------------------------------------------


def fire(neuron: Neuron, values: Mapping[int, float], external: Mapping[tuple[int, int], float]) -> float:
    """Output of one neuron: ``f(sum_j w_j * x_j + b)``, slots in ascending order.

    Both execution modes go through this function, which is what makes
    their outputs bit-identical.
    """
    acc = 0.0
    for k, slot in enumerate(neuron.slots):
        x = values[slot.source] if isinstance(slot, Edge) else external[(neuron.id, k)]
        acc += slot.weight * x
    acc += neuron.bias
    try:
        return neuron.transfer(acc)
    except expr.DomainError as exc:
        raise NodeEvalError(neuron.id, exc) from None


def _input_map(g: NeuronGraph, inputs: Inputs) -> dict[tuple[int, int], float]:
    given = inputs.as_dict() if isinstance(inputs, InputValuesDoc) else dict(inputs)
    for key in g.external_slots:
        if key not in given:
            raise MissingInput(*key)
    return given


def _serial_layer_times(g: NeuronGraph, cm: CostModel) -> list[float]:
    return [cm.compute_time(sum(g.neurons[i].fan_in for i in layer), len(layer))
            for layer in g.layers]


def serial_time(g: NeuronGraph, cm: CostModel) -> float:
    """Simulated single-worker time: every MAC and every transfer evaluation.

    Summed layer by layer so a one-worker distributed run reproduces it
    to the last bit.
    """
    return sum(_serial_layer_times(g, cm))


def run_serial(g: NeuronGraph, inputs: Inputs, cm: Optional[CostModel] = None) -> SimReport:
    cm = cm or CostModel()
    start = time.perf_counter()
    ext = _input_map(g, inputs)
    values: dict[int, float] = {}
    for layer in g.layers:
        for i in layer:
            values[i] = fire(g.neurons[i], values, ext)
    per_layer = _serial_layer_times(g, cm)
    total = sum(per_layer)
    return SimReport(
        outputs=tuple((i, values[i]) for i in g.outputs),
        sim_time=total, serial_time=total, messages=0, bytes=0,
        per_layer_time=tuple(per_layer), stats=None, mode="serial", workers=1,
        wall_time=time.perf_counter() - start,
    )


# -- simulated fabric -----------------------------------------------------------


class Fabric:
    """In-process message fabric with a barrier per superstep."""

    def __init__(self, P: int, cm: CostModel):
        self.P = P
        self.cm = cm
        self.pending: list[ValueMsg] = []
        self.inboxes: list[list[ValueMsg]] = [[] for _ in range(P)]
        self.messages = 0
        self.bytes = 0
        self.sent: list[ValueMsg] = []

    def send(self, msg: ValueMsg):
        if msg.src_worker == msg.dst_worker:
            raise ValueError("a worker never messages itself")
        self.pending.append(msg)
        self.sent.append(msg)
        self.messages += 1
        self.bytes += len(msg.payload) * int(self.cm.value_size)

    def barrier(self) -> float:
        """Deliver everything sent this superstep; return its communication time."""
        busy = [0.0] * self.P
        # senders are independent links; each pays for its own messages in turn
        for msg in sorted(self.pending, key=lambda m: (m.src_worker, m.dst_worker)):
            busy[msg.src_worker] += self.cm.message_time(len(msg.payload))
            self.inboxes[msg.dst_worker].append(msg)
        self.pending = []
        return max(busy)

    def receive(self, rank: int) -> list[ValueMsg]:
        msgs, self.inboxes[rank] = self.inboxes[rank], []
        return msgs


class Worker:
    """One SPMD rank: owns some neurons and a private value store."""

    def __init__(self, rank: int, g: NeuronGraph, a: Assignment, ext):
        self.rank = rank
        self.g = g
        self.owned_by_layer: list[list[int]] = [
            [i for i in layer if a.worker_of[i] == rank] for layer in g.layers]
        owned = {i for layer in self.owned_by_layer for i in layer}
        self.ext = {k: v for k, v in ext.items() if k[0] in owned}
        self.store: dict[int, float] = {}
        self.destinations = {
            i: sorted({a.worker_of[v] for v in g.successors[i]} - {rank}) for i in owned}

    def compute(self, layer: int) -> tuple[int, int]:
        macs = 0
        for i in self.owned_by_layer[layer]:
            n = self.g.neurons[i]
            self.store[i] = fire(n, self.store, self.ext)
            macs += n.fan_in
        return macs, len(self.owned_by_layer[layer])

    def send_values(self, layer: int, fabric: Fabric):
        outgoing: dict[int, list[tuple[int, float]]] = defaultdict(list)
        for i in self.owned_by_layer[layer]:
            for dst in self.destinations[i]:
                outgoing[dst].append((i, self.store[i]))
        for dst in sorted(outgoing):
            fabric.send(ValueMsg(self.rank, dst, layer, tuple(outgoing[dst])))

    def absorb(self, msgs: list[ValueMsg]):
        for msg in msgs:
            self.store.update(msg.payload)


def run_distributed(g: NeuronGraph, a: Assignment, inputs: Inputs,
                    cm: Optional[CostModel] = None, trace: Optional[list] = None) -> SimReport:
    """Run ``g`` on ``a.P`` simulated workers, one barrier per layer.

    Per layer the time is the slowest worker's compute plus the slowest
    sender's communication.  ``trace``, when given, collects every
    :class:`ValueMsg` sent.
    """
    cm = cm or CostModel()
    a.check(g)
    start = time.perf_counter()
    ext = _input_map(g, inputs)
    fabric = Fabric(a.P, cm)
    workers = [Worker(r, g, a, ext) for r in range(a.P)]
    per_layer = []
    for L in range(len(g.layers)):
        compute = 0.0
        for w in workers:
            compute = max(compute, cm.compute_time(*w.compute(L)))
        for w in workers:
            w.send_values(L, fabric)
        comm = fabric.barrier()
        for w in workers:
            w.absorb(fabric.receive(w.rank))
        per_layer.append(compute + comm)
    if trace is not None:
        trace.extend(fabric.sent)
    outputs = tuple((i, workers[a.worker_of[i]].store[i]) for i in g.outputs)
    return SimReport(
        outputs=outputs, sim_time=sum(per_layer), serial_time=serial_time(g, cm),
        messages=fabric.messages, bytes=fabric.bytes, per_layer_time=tuple(per_layer),
        stats=stats(g, a), mode="distributed", workers=a.P, policy=a.policy_name,
        wall_time=time.perf_counter() - start,
    )


# -- comparison -----------------------------------------------------------------


def outputs_identical(x, y) -> bool:
    """Bit-level equality of two ``(id, value)`` sequences (distinguishes -0.0)."""
    return len(x) == len(y) and all(
        i == j and float(u).hex() == float(v).hex() for (i, u), (j, v) in zip(x, y))


def time_ratio(sim: float, serial: float) -> float:
    if serial == 0:
        return 1.0 if sim == 0 else math.inf
    return sim / serial


@dataclass(frozen=True)
class ComparisonRecord:
    serial_time: float
    sim_time: float
    ratio: float
    outputs_equal: bool
    messages: int
    bytes: int
    cut_edges: int
    neurons: int
    macs: int
    workers: int
    policy: str
    width: Optional[int] = None
    depth: Optional[int] = None

    FIELDS = ("width", "depth", "workers", "policy", "neurons", "macs", "cut_edges", "messages",
              "bytes", "serial_time", "sim_time", "ratio", "outputs_equal")

    def to_dict(self) -> dict:
        return {k: getattr(self, k) for k in self.FIELDS}


def compare_runs(g: NeuronGraph, a: Assignment, inputs: Inputs, cm: CostModel,
                 **labels) -> ComparisonRecord:
    serial = run_serial(g, inputs, cm)
    dist = run_distributed(g, a, inputs, cm)
    return ComparisonRecord(
        serial_time=serial.serial_time, sim_time=dist.sim_time,
        ratio=time_ratio(dist.sim_time, serial.serial_time),
        outputs_equal=outputs_identical(serial.outputs, dist.outputs),
        messages=dist.messages, bytes=dist.bytes, cut_edges=dist.stats.cut_edges,
        neurons=len(g), macs=g.total_macs, workers=a.P, policy=a.policy_name, **labels,
    )


def run(g: NeuronGraph, inputs: Inputs, cm: Optional[CostModel] = None, *, workers: int = 1,
        policy: str = "layer_block", mode: str = "distributed") -> SimReport:
    """Convenience wrapper: serial run, or map then distributed run."""
    if mode == "serial":
        return run_serial(g, inputs, cm)
    if mode != "distributed":
        raise ValueError(f"unknown mode {mode!r}")
    return run_distributed(g, map_nodes(g, workers, policy), inputs, cm)
