"""Communication overhead versus network width.

With a per-message latency far larger than the cost of one
multiply-accumulate, small networks run slower when distributed.  As the
layers widen, compute grows quadratically while the number of messages per
layer stays bounded by P*(P-1), so the ratio sim/serial falls.  The second
table lowers the latency to find where distribution starts to pay off.
"""
from distann import CostModel
from distann.bench import SweepSpec, bench_sweep

cost = CostModel(mac_cost=1e-9, transfer_eval_cost=1e-9, msg_latency=1e-4, byte_cost=1e-9)
spec = SweepSpec(widths=(4, 16, 64, 256), depth=3, workers=(4,), policies=("layer_block",),
                 cost=cost)

print(f"{'width':>6}{'MACs':>9}{'messages':>10}{'serial s':>12}{'sim s':>12}{'ratio':>10}")
for r in bench_sweep(spec):
    print(f"{r.width:>6}{r.macs:>9}{r.messages:>10}{r.serial_time:>12.3e}{r.sim_time:>12.3e}"
          f"{r.ratio:>10.3f}")

print("\nwidth 256, varying latency")
for latency in (1e-4, 1e-5, 1e-6, 1e-7):
    fast = SweepSpec((256,), 3, (4,), ("layer_block",),
                     CostModel(1e-9, 1e-9, latency, 1e-9))
    r = bench_sweep(fast)[0]
    print(f"  latency {latency:.0e}: ratio {r.ratio:.3f}")
