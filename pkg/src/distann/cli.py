"""Command-line front end: ``distann validate|run|partition|bench``.

Reports go to stdout, diagnostics to stderr.  Exit codes: 0 success,
1 the network (or its evaluation) is invalid, 2 usage, I/O, XML syntax or
sweep-config errors.
"""
from __future__ import annotations

import argparse
import contextlib
import csv
import dataclasses
import io
import json
import sys
from pathlib import Path

from . import bench, engine, expr, graph, partition, xml_model

EXIT_OK, EXIT_INVALID, EXIT_USAGE = 0, 1, 2


class _Usage(Exception):
    """Problems reading inputs; exit 2."""


class _Invalid(Exception):
    """The network itself is wrong; exit 1.  ``lines`` are diagnostics."""

    def __init__(self, lines):
        super().__init__("\n".join(lines))
        self.lines = lines


def _read(path) -> bytes:
    try:
        return Path(path).read_bytes()
    except OSError as exc:
        raise _Usage(f"cannot read {path}: {exc.strerror or exc}") from None


def _load_documents(args):
    """Parse the four documents named on the command line.

    Returns ``(arch, inputs, weights, outputs)``; missing optional
    documents become empty ones.
    """
    def parse(path, func, empty):
        if path is None:
            return empty
        try:
            return func(_read(path))
        except xml_model.XmlSyntax as exc:
            raise _Usage(f"{path}: XML syntax error at {exc}") from None
        except xml_model.SchemaViolation as exc:
            raise _Invalid([f"{exc.code}: {path}: {exc}"]) from None

    arch = parse(args.arch, xml_model.parse_architecture, None)
    inputs = parse(args.inputs, xml_model.parse_inputs, xml_model.InputValuesDoc())
    weights = parse(args.weights, xml_model.parse_weights, xml_model.WeightValuesDoc())
    outputs = parse(args.outputs, xml_model.parse_outputs, None)
    return arch, inputs, weights, outputs


def _build(args, out_err):
    """Load, cross-validate and interpret; returns the graph and input document."""
    arch, inputs, weights, outputs = _load_documents(args)
    report = xml_model.validate_cross_refs(arch, inputs, weights, outputs)
    if args.verbose:
        for w in report.warnings:
            print(f"warning: {w}", file=out_err)
    if not report.ok:
        raise _Invalid([str(v) for v in report.violations])
    return graph.build_graph(arch, weights, inputs, outputs), inputs


def _cost_model(args) -> engine.CostModel:
    try:
        return engine.CostModel(args.mac_cost, args.transfer_cost, args.latency, args.byte_cost,
                                args.value_size)
    except ValueError as exc:
        raise _Usage(str(exc)) from None


def _emit(text: str, args, out):
    if getattr(args, "out", None):
        Path(args.out).write_text(text, encoding="utf-8")
    else:
        out.write(text)


# -- subcommands ----------------------------------------------------------------


def cmd_validate(args, out, err) -> int:
    try:
        arch, inputs, weights, outputs = _load_documents(args)
    except _Invalid as exc:
        out.write("\n".join(exc.lines) + "\n")
        return EXIT_INVALID
    report = xml_model.validate_cross_refs(arch, inputs, weights, outputs)
    lines = [str(v) for v in report.violations]
    if args.verbose:
        lines += [f"warning: {w}" for w in report.warnings]
    if report.ok:
        # structural checks that need the interpreted graph (cycles, slot density)
        try:
            graph.build_graph(arch, weights, inputs, outputs)
        except (graph.GraphError, expr.ExprError) as exc:
            lines.insert(0, f"{getattr(exc, 'code', type(exc).__name__)}: {exc}")
            out.write("\n".join(lines) + "\n")
            return EXIT_INVALID
    if report.ok:
        lines.append("ok")
    out.write("\n".join(lines) + "\n")
    return EXIT_OK if report.ok else EXIT_INVALID


def cmd_run(args, out, err) -> int:
    g, inputs = _build(args, err)
    if args.dot:
        Path(args.dot).write_text(graph.to_dot(g), encoding="utf-8")
    cm = _cost_model(args)
    if args.mode == "serial":
        report = engine.run_serial(g, inputs, cm)
    else:
        report = engine.run_distributed(g, partition.map_nodes(g, args.workers, args.policy),
                                        inputs, cm)
    if args.verbose:
        print(f"wall time {report.wall_time:.6f}s", file=err)
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["neuron", "value"])
        w.writerows([i, repr(v)] for i, v in report.outputs)
        text = buf.getvalue()
    else:
        text = report.to_json() + "\n"
    _emit(text, args, out)
    return EXIT_OK


def cmd_partition(args, out, err) -> int:
    g, _ = _build(args, err)
    a = partition.map_nodes(g, args.workers, args.policy)
    st = partition.stats(g, a)
    if args.dot:
        Path(args.dot).write_text(graph.to_dot(g, a.worker_of), encoding="utf-8")
    if args.format == "csv":
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(["neuron", "layer", "worker", "fan_in"])
        w.writerows([i, g.layer_of[i], a.worker_of[i], g.neurons[i].fan_in] for i in g.neurons)
        text = buf.getvalue()
        print(f"cut_edges={st.cut_edges} imbalance={st.imbalance:.4g} "
              f"per_worker_macs={list(st.per_worker_macs)}", file=err)
    else:
        text = json.dumps({
            "policy": a.policy_name,
            "workers": a.P,
            "assignment": [[i, w] for i, w in a.worker_of.items()],
            "stats": st.as_dict(),
        }, indent=2) + "\n"
    _emit(text, args, out)
    return EXIT_OK


def cmd_bench(args, out, err) -> int:
    try:
        spec = bench.load_sweep_spec(args.config)
    except OSError as exc:
        raise _Usage(f"cannot read {args.config}: {exc.strerror or exc}") from None
    except bench.InvalidSpec as exc:
        raise _Usage(f"{args.config}: {exc}") from None
    if args.seed is not None:
        spec = dataclasses.replace(spec, seed=args.seed)
    records = bench.bench_sweep(spec)
    text = bench.records_to_csv(records) if args.format == "csv" else bench.records_to_json(records)
    _emit(text, args, out)
    return EXIT_OK


# -- argument parsing -----------------------------------------------------------


def _nonneg_float(text):
    try:
        v = float(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not a number: {text!r}") from None
    if not v >= 0 or v == float("inf"):
        raise argparse.ArgumentTypeError(f"must be finite and >= 0: {text!r}")
    return v


def _positive_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 1:
        raise argparse.ArgumentTypeError(f"must be >= 1: {text!r}")
    return v


def _nonneg_int(text):
    try:
        v = int(text)
    except ValueError:
        raise argparse.ArgumentTypeError(f"not an integer: {text!r}") from None
    if v < 0:
        raise argparse.ArgumentTypeError(f"must be >= 0: {text!r}")
    return v


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="distann",
        description="Distributed neural-network forward propagation over a simulated grid.")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    docs = argparse.ArgumentParser(add_help=False)
    docs.add_argument("--arch", required=True, metavar="XML", help="architecture document")
    docs.add_argument("--inputs", metavar="XML", help="input values document")
    docs.add_argument("--weights", metavar="XML", help="weight values document (default: all 1.0)")
    docs.add_argument("--outputs", metavar="XML", help="output selection (default: sink neurons)")
    docs.add_argument("-v", "--verbose", action="store_true", help="print warnings to stderr")

    mapping = argparse.ArgumentParser(add_help=False)
    mapping.add_argument("--workers", type=_positive_int, default=1, metavar="P",
                         help="number of simulated workers (default 1)")
    mapping.add_argument("--policy", choices=partition.POLICIES, default="layer_block",
                         help="neuron-to-worker mapping policy (default layer_block)")
    mapping.add_argument("--dot", metavar="PATH", help="also write a Graphviz rendering here")
    mapping.add_argument("--out", metavar="PATH", help="write the report here instead of stdout")

    costs = argparse.ArgumentParser(add_help=False)
    costs.add_argument("--mac-cost", type=_nonneg_float, default=1e-9, metavar="S",
                       help="seconds per multiply-accumulate (default 1e-9)")
    costs.add_argument("--transfer-cost", type=_nonneg_float, default=0.0, metavar="S",
                       help="seconds per transfer-function evaluation (default 0)")
    costs.add_argument("--latency", type=_nonneg_float, default=1e-4, metavar="S",
                       help="seconds per message (default 1e-4)")
    costs.add_argument("--byte-cost", type=_nonneg_float, default=1e-9, metavar="S",
                       help="seconds per transmitted byte (default 1e-9)")
    costs.add_argument("--value-size", type=_nonneg_int, default=8, metavar="BYTES",
                       help="bytes per transmitted value (default 8)")

    p = sub.add_parser("validate", parents=[docs], help="check documents and report violations")
    p.set_defaults(func=cmd_validate)

    p = sub.add_parser("run", parents=[docs, mapping, costs], help="forward-propagate the inputs")
    p.add_argument("--mode", choices=("serial", "distributed"), default="distributed")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_run)

    p = sub.add_parser("partition", parents=[docs, mapping],
                       help="show the neuron-to-worker mapping and its statistics")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.set_defaults(func=cmd_partition)

    p = sub.add_parser("bench", help="run a serial-vs-distributed sweep")
    p.add_argument("config", metavar="SWEEP_JSON", help="sweep configuration file")
    p.add_argument("--seed", type=int, help="override the seed in the config")
    p.add_argument("--format", choices=("json", "csv"), default="json")
    p.add_argument("--out", metavar="PATH", help="write the table here instead of stdout")
    p.set_defaults(func=cmd_bench)
    return parser


def main(argv=None, out=None, err=None) -> int:
    out = out or sys.stdout
    err = err or sys.stderr
    parser = build_parser()
    try:
        with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
            args = parser.parse_args(argv)
    except SystemExit as exc:
        return exc.code if isinstance(exc.code, int) else EXIT_USAGE
    try:
        return args.func(args, out, err)
    except _Usage as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE
    except _Invalid as exc:
        for line in exc.lines:
            print(line, file=err)
        return EXIT_INVALID
    except (graph.GraphError, engine.EngineError, expr.ExprError) as exc:
        print(f"error: {getattr(exc, 'code', type(exc).__name__)}: {exc}", file=err)
        return EXIT_INVALID
    except OSError as exc:
        print(f"error: {exc}", file=err)
        return EXIT_USAGE


if __name__ == "__main__":
    sys.exit(main())
