"""Forward propagation of the five-neuron sample network.

Reads the XML documents next to this script, prints the layer schedule,
evaluates the network serially and on two simulated workers, then shows
that changing one weight changes the answer in the expected way.
"""
from pathlib import Path

from distann import build_graph, map_nodes, run_distributed, run_serial
from distann.xml_model import (
    WeightValuesDoc,
    parse_architecture,
    parse_inputs,
    parse_outputs,
    parse_weights,
)

DATA = Path(__file__).parent / "data"

arch = parse_architecture((DATA / "architecture.xml").read_bytes())
inputs = parse_inputs((DATA / "inputs.xml").read_bytes())
weights = parse_weights((DATA / "weights.xml").read_bytes())
outputs = parse_outputs((DATA / "outputs.xml").read_bytes())

g = build_graph(arch, weights, inputs, outputs)
print("neurons:", list(g.neurons))
for depth, layer in enumerate(g.layers):
    print(f"  layer {depth}: {list(layer)}")

# Inputs 1.0 and 2.0 enter neurons 1 and 3.  Neurons 2 and 4 both compute
# 1 + 2 = 3 and neuron 5 adds them.
serial = run_serial(g, inputs)
print("serial outputs:", dict(serial.outputs))

dist = run_distributed(g, map_nodes(g, 2, "layer_block"), inputs)
print("two workers:   ", dict(dist.outputs), f"({dist.messages} messages)")
assert dist.outputs == serial.outputs

# Halve the weight on neuron 5's first slot: 0.5 * 3 + 3 = 4.5.
halved = WeightValuesDoc(((5, ((0, 0.5),)),))
g2 = build_graph(arch, halved, inputs, outputs)
print("with w(5,0)=0.5:", dict(run_serial(g2, inputs).outputs))
