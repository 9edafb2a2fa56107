"""How the three mapping policies split a network across workers.

Round robin ignores structure, so almost every edge crosses workers.
Layer blocks keep each layer's neurons in contiguous runs.  Balanced
fan-in evens out multiply-accumulate work.
"""
from distann import POLICIES, map_nodes, stats
from distann.generate import layered_network, random_network

g = layered_network(width=6, depth=3)
print(f"layered network: {len(g)} neurons, {len(g.edges())} edges, {g.total_macs} MACs\n")

print(f"{'policy':<16}{'P':>3}{'cut':>6}{'imbalance':>11}  per-worker MACs")
for P in (2, 3, 4):
    for policy in POLICIES:
        s = stats(g, map_nodes(g, P, policy))
        print(f"{policy:<16}{P:>3}{s.cut_edges:>6}{s.imbalance:>11.3f}  {list(s.per_worker_macs)}")
    print()

a = map_nodes(g, 3, "layer_block")
for depth, layer in enumerate(g.layers):
    print(f"layer {depth}:", " ".join(f"{i}->w{a.worker_of[i]}" for i in layer))

# A fully connected net leaves little room to choose: every split cuts most
# edges.  On a sparse random DAG the policies separate more clearly.
sparse, _ = random_network(seed=3, max_neurons=40)
print(f"\nrandom network: {len(sparse)} neurons, {len(sparse.edges())} edges, "
      f"{len(sparse.layers)} layers")
for policy in POLICIES:
    s = stats(sparse, map_nodes(sparse, 4, policy))
    print(f"  {policy:<16} cut {s.cut_edges:>3}  imbalance {s.imbalance:.3f}")
