import functools

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import read_fixture
from distann import xml_model
from distann.expr import parse_function
from distann.generate import random_network
from distann.graph import (
    CycleDetected,
    Edge,
    EmptyOutputs,
    External,
    Neuron,
    NeuronGraph,
    SlotGap,
    UnknownNeuron,
    assign_layers,
    build_graph,
    to_documents,
    to_dot,
)
from distann.xml_model import (
    ArchitectureDoc,
    InputValuesDoc,
    NodeDecl,
    OutputSelectionDoc,
    PreNodeRef,
    WeightValuesDoc,
)

IDENT = parse_function("f(x)=x")


def oracle_layers(g: NeuronGraph) -> dict[int, int]:
    """Longest-path depth straight from the recursive definition."""
    @functools.lru_cache(maxsize=None)
    def depth(i):
        srcs = g.neurons[i].sources
        return 1 + max(depth(s) for s in srcs) if srcs else 0
    return {i: depth(i) for i in g.neurons}


def chain(n):
    neurons = [Neuron(1, 0.0, IDENT, (External(),))]
    neurons += [Neuron(i, 0.0, IDENT, (Edge(i - 1),)) for i in range(2, n + 1)]
    return NeuronGraph.from_neurons(neurons)


def test_sample(sample):
    assert len(sample) == 5
    assert sample.neurons[2].slots == (Edge(1, 1.0), Edge(3, 1.0))
    assert sample.neurons[1].slots == (External(1.0),)
    assert sample.neurons[3].slots == (External(1.0),)
    assert sample.outputs == (5,)
    assert [set(layer) for layer in assign_layers(sample)] == [{1, 3}, {2, 4}, {5}]
    assert sample.layers == ((1, 3), (2, 4), (5,))


def test_sample_bias_e(sample_docs):
    arch = xml_model.parse_architecture(read_fixture("sample/architecture_bias_e.xml"))
    g = build_graph(arch, sample_docs[2], sample_docs[1])
    assert all(n.bias == 2.718281828459045 for n in g.neurons.values())


def test_single_node():
    arch = ArchitectureDoc((NodeDecl(1),))
    inputs = InputValuesDoc(((1, ((0, 3.0),)),))
    g = build_graph(arch, WeightValuesDoc(), inputs)
    assert g.layers == ((1,),)
    assert g.outputs == (1,)


def test_chain_layers():
    assert assign_layers(chain(3)) == ((1,), (2,), (3,))


def test_shortcut_edge_keeps_longest_path(sample_docs):
    arch, inputs, weights, _ = sample_docs
    nodes = list(arch.nodes)
    n5 = nodes[4]
    nodes[4] = NodeDecl(5, n5.pre_nodes + (PreNodeRef(1, 2),), n5.bias_expr, n5.function_text)
    g = build_graph(ArchitectureDoc(tuple(nodes)), weights, inputs)
    assert g.layer_of[5] == 2
    assert g.neurons[5].sources == [2, 4, 1]


def test_two_cycle():
    arch = ArchitectureDoc((NodeDecl(1, (PreNodeRef(2, 0),)), NodeDecl(2, (PreNodeRef(1, 0),))))
    with pytest.raises(CycleDetected) as info:
        build_graph(arch, WeightValuesDoc(), InputValuesDoc())
    assert info.value.cycle == [1, 2]


def test_cycle_reports_a_real_cycle():
    # 1 -> 2 -> 3 -> 4 -> 2, plus 5 hanging off the cycle
    arch = ArchitectureDoc((
        NodeDecl(1), NodeDecl(2, (PreNodeRef(1, 0), PreNodeRef(4, 1))),
        NodeDecl(3, (PreNodeRef(2, 0),)), NodeDecl(4, (PreNodeRef(3, 0),)),
        NodeDecl(5, (PreNodeRef(4, 0),)),
    ))
    with pytest.raises(CycleDetected) as info:
        build_graph(arch, WeightValuesDoc(), InputValuesDoc(((1, ((0, 1.0),)),)))
    cycle = info.value.cycle
    assert sorted(cycle) == [2, 3, 4]
    edges = {(r.source_node_index, n.node_index) for n in arch.nodes for r in n.pre_nodes}
    assert all((cycle[k], cycle[(k + 1) % len(cycle)]) in edges for k in range(len(cycle)))


def test_slot_gap():
    arch = ArchitectureDoc((NodeDecl(1), NodeDecl(2, (PreNodeRef(1, 0), PreNodeRef(1, 2)))))
    with pytest.raises(SlotGap):
        build_graph(arch, WeightValuesDoc(), InputValuesDoc())


def test_slot_conflict_is_rejected():
    arch = ArchitectureDoc((NodeDecl(1), NodeDecl(2, (PreNodeRef(1, 0),))))
    with pytest.raises(SlotGap):
        build_graph(arch, WeightValuesDoc(), InputValuesDoc(((2, ((0, 1.0),)),)))


def test_external_slot_between_edges():
    arch = ArchitectureDoc((NodeDecl(1), NodeDecl(2, (PreNodeRef(1, 0), PreNodeRef(1, 2)))))
    g = build_graph(arch, WeightValuesDoc(((2, ((1, 0.25),)),)), InputValuesDoc(((2, ((1, 5.0),)),)))
    assert g.neurons[2].slots == (Edge(1), External(0.25), Edge(1))
    # same source twice still layers correctly
    assert g.layers == ((1,), (2,))


def test_zero_slot_neuron_allowed():
    g = build_graph(ArchitectureDoc((NodeDecl(1, (), "2", "f(x)=sigmoid(x)"),)),
                    WeightValuesDoc(), InputValuesDoc())
    assert g.neurons[1].slots == ()
    assert g.neurons[1].bias == 2.0


def test_weights_applied(sample_docs):
    arch, inputs, _, _ = sample_docs
    weights = WeightValuesDoc(((2, ((0, 0.5), (1, -1.0))),))
    g = build_graph(arch, weights, inputs)
    assert g.neurons[2].slots == (Edge(1, 0.5), Edge(3, -1.0))
    assert g.neurons[4].slots == (Edge(1, 1.0), Edge(3, 1.0))


def test_outputs_in_selection_order(sample_docs):
    arch, inputs, weights, _ = sample_docs
    g = build_graph(arch, weights, inputs, OutputSelectionDoc((4, 2)))
    assert g.outputs == (4, 2)


def test_default_outputs_are_sinks_ascending():
    g = NeuronGraph.from_neurons([Neuron(3, 0.0, IDENT), Neuron(1, 0.0, IDENT),
                                  Neuron(2, 0.0, IDENT, (Edge(1),))])
    assert g.outputs == (2, 3)


def test_empty_outputs():
    with pytest.raises(EmptyOutputs):
        NeuronGraph.from_neurons([Neuron(1, 0.0, IDENT)], outputs=[])


def test_unknown_source():
    with pytest.raises(UnknownNeuron):
        NeuronGraph.from_neurons([Neuron(1, 0.0, IDENT, (Edge(7),))])


def test_dot_sample(sample):
    dot = to_dot(sample)
    assert dot.startswith("digraph")
    assert sum("->" in line for line in dot.splitlines()) == 6
    assert 'label="5\\nL2"' in dot


def test_dot_single_and_chain():
    single = NeuronGraph.from_neurons([Neuron(1, 0.0, IDENT, (External(),))])
    assert sum("->" in line for line in to_dot(single).splitlines()) == 0
    edge_lines = [line for line in to_dot(chain(2)).splitlines() if "->" in line]
    assert len(edge_lines) == 1 and edge_lines[0].strip().startswith("n1 -> n2")


def test_dot_with_workers(sample):
    dot = to_dot(sample, {1: 0, 2: 1, 3: 0, 4: 1, 5: 0})
    assert dot.count('xlabel="w1"') == 2


# -- randomized properties -------------------------------------------------------


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_layers_match_definition(seed):
    g, _ = random_network(seed)
    depth = oracle_layers(g)
    assert g.layer_of == depth
    for u, v in g.edges():
        assert g.layer_of[u] < g.layer_of[v]
    for layer in g.layers:
        assert list(layer) == sorted(layer)
    assert assign_layers(g) == g.layers


@settings(max_examples=60)
@given(st.integers(0, 10_000))
def test_layer_count_bound(seed):
    g, _ = random_network(seed, max_neurons=12)
    assert len(g.layers) <= len(g)
    # equality exactly when every layer is a single neuron (a path through all of them)
    assert (len(g.layers) == len(g)) == all(len(layer) == 1 for layer in g.layers)


def test_chain_reaches_bound():
    g = chain(6)
    assert len(g.layers) == len(g)


@settings(max_examples=40)
@given(st.integers(0, 10_000))
def test_rebuild_from_xml(seed):
    g, inputs = random_network(seed)
    arch, weights, ins, outs = to_documents(g, inputs)
    docs = [xml_model.serialize(d) for d in (arch, weights, ins, outs)]
    again = build_graph(xml_model.parse_architecture(docs[0]), xml_model.parse_weights(docs[1]),
                        xml_model.parse_inputs(docs[2]), xml_model.parse_outputs(docs[3]))
    assert again == g
    assert dict(again.layer_of) == dict(g.layer_of)
    assert xml_model.parse_inputs(docs[2]).as_dict() == inputs
