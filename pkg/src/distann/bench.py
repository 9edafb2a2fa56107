"""Parameter sweeps comparing simulated distributed time against serial time.

A sweep config is a JSON object::

    {
      "widths": [4, 16, 64, 256],
      "depth": 3,
      "workers": [4],                  # int or list
      "policy": "layer_block",         # str or list
      "mac_cost": 1e-9,
      "transfer_eval_cost": 1e-9,
      "msg_latency": 1e-4,
      "byte_cost": 1e-9,
      "value_size": 8,
      "seed": 0,
      "transfer": "f(x)=x",            # optional
      "weight": 1.0,                   # optional, number or "random"
      "bias": 0.0                      # optional
    }
"""
from __future__ import annotations

import csv
import io
import json
import random
from dataclasses import dataclass, fields
from typing import Union

from . import expr
from .engine import ComparisonRecord, CostModel, compare_runs
from .generate import layered_network, random_inputs
from .partition import POLICIES, map_nodes


class InvalidSpec(ValueError):
    pass


_COST_KEYS = tuple(f.name for f in fields(CostModel))


@dataclass(frozen=True)
class SweepSpec:
    widths: tuple[int, ...]
    depth: int
    workers: tuple[int, ...] = (1,)
    policies: tuple[str, ...] = ("layer_block",)
    cost: CostModel = CostModel()
    seed: int = 0
    transfer: str = "f(x)=x"
    weight: Union[float, str] = 1.0
    bias: float = 0.0

    def __post_init__(self):
        if not self.widths:
            raise InvalidSpec("widths must be a non-empty list")
        if not self.workers:
            raise InvalidSpec("workers must be non-empty")
        for name, values in (("widths", self.widths), ("workers", self.workers),
                             ("depth", (self.depth,))):
            for v in values:
                if isinstance(v, bool) or not isinstance(v, int) or v < 1:
                    raise InvalidSpec(f"{name} entries must be positive integers, got {v!r}")
        for p in self.policies:
            if p not in POLICIES:
                raise InvalidSpec(f"unknown policy {p!r}; choose from {', '.join(POLICIES)}")
        if not self.policies:
            raise InvalidSpec("policy list is empty")
        if not (self.weight == "random" or _is_number(self.weight)):
            raise InvalidSpec(f"weight must be a number or 'random', got {self.weight!r}")
        if not _is_number(self.bias):
            raise InvalidSpec(f"bias must be a number, got {self.bias!r}")
        if isinstance(self.seed, bool) or not isinstance(self.seed, int):
            raise InvalidSpec(f"seed must be an integer, got {self.seed!r}")
        try:
            expr.parse_function(self.transfer)
        except expr.ExprError as exc:
            raise InvalidSpec(f"bad transfer {self.transfer!r}: {exc}") from None

    @classmethod
    def from_dict(cls, data: dict) -> "SweepSpec":
        if not isinstance(data, dict):
            raise InvalidSpec("sweep config must be a JSON object")
        allowed = {"widths", "depth", "workers", "policy", "seed", "transfer", "weight", "bias",
                   *_COST_KEYS}
        unknown = sorted(set(data) - allowed)
        if unknown:
            raise InvalidSpec(f"unknown key(s): {', '.join(unknown)}")
        for key in ("widths", "depth"):
            if key not in data:
                raise InvalidSpec(f"missing required key {key!r}")
        try:
            cost = CostModel(**{k: data[k] for k in _COST_KEYS if k in data})
        except ValueError as exc:
            raise InvalidSpec(str(exc)) from None
        kwargs = {k: data[k] for k in ("seed", "transfer", "weight", "bias") if k in data}
        return cls(widths=tuple(_as_list(data["widths"])), depth=data["depth"],
                   workers=tuple(_as_list(data.get("workers", 1))),
                   policies=tuple(_as_list(data.get("policy", "layer_block"))),
                   cost=cost, **kwargs)


def _is_number(v) -> bool:
    return isinstance(v, (int, float)) and not isinstance(v, bool)


def _as_list(v) -> list:
    return list(v) if isinstance(v, list) else [v]


def load_sweep_spec(path) -> SweepSpec:
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise InvalidSpec(f"{path}: not valid JSON ({exc})") from None
    return SweepSpec.from_dict(data)


def bench_sweep(spec: SweepSpec) -> list[ComparisonRecord]:
    """One record per (width, workers, policy), in that nesting order.

    Each width gets its own RNG derived from the seed, so adding a width
    to the list does not change the rows of the others.
    """
    records = []
    for width in spec.widths:
        rng = random.Random(f"{spec.seed}:{width}:{spec.depth}")
        g = layered_network(width, spec.depth, spec.transfer, spec.weight, spec.bias, rng)
        inputs = random_inputs(g, rng)
        for P in spec.workers:
            for policy in spec.policies:
                a = map_nodes(g, P, policy)
                records.append(compare_runs(g, a, inputs, spec.cost, width=width, depth=spec.depth))
    return records


def records_to_json(records: list[ComparisonRecord]) -> str:
    return json.dumps([r.to_dict() for r in records], indent=2) + "\n"


def records_to_csv(records: list[ComparisonRecord]) -> str:
    buf = io.StringIO()
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(ComparisonRecord.FIELDS)
    for r in records:
        writer.writerow([repr(v) if isinstance(v, float) else v for v in r.to_dict().values()])
    return buf.getvalue()
