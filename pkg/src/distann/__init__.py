"""Distributed feed-forward neural network simulation.

XML network documents are parsed (:mod:`distann.xml_model`), interpreted
into a layered neuron graph (:mod:`distann.graph`), mapped onto simulated
workers (:mod:`distann.partition`) and executed either serially or as a
layer-synchronous message-passing program (:mod:`distann.engine`).
"""
from .engine import (
    ComparisonRecord,
    CostModel,
    SimReport,
    compare_runs,
    run_distributed,
    run_serial,
)
from .expr import eval_const, evaluate, parse_function
from .graph import NeuronGraph, assign_layers, build_graph, to_dot
from .partition import POLICIES, Assignment, PartitionStats, map_nodes, stats
from .xml_model import (
    parse_architecture,
    parse_inputs,
    parse_outputs,
    parse_weights,
    validate_cross_refs,
)
from .bench import SweepSpec, bench_sweep

__version__ = "0.1.0"
