"""What malformed network descriptions produce.

Each snippet is broken in one way.  Problems inside a single document
surface while parsing; problems that need the whole network (missing
neurons, cycles, slot gaps) come from cross-checking or graph building.
"""
from distann import build_graph, validate_cross_refs
from distann.graph import GraphError
from distann.xml_model import InputValuesDoc, WeightValuesDoc, XmlError, parse_architecture


def node(index, *pre, fn="f(x)=x"):
    refs = "".join(f"<element><nodeIndex>{s}</nodeIndex><inputIndex>{k}</inputIndex></element>"
                   for s, k in pre)
    body = f"<preNodes>{refs}</preNodes>" if pre else ""
    return f"<node><nodeIndex>{index}</nodeIndex>{body}<function>{fn}</function></node>"


CASES = {
    "unclosed tag": "<architecture><node>",
    "duplicate index": f"<architecture>{node(1)}{node(1)}</architecture>",
    "self loop": f"<architecture>{node(1, (1, 0))}</architecture>",
    "unknown function": f"<architecture>{node(1, fn='f(x)=swish(x)')}</architecture>",
    "dangling preNode": f"<architecture>{node(1)}{node(2, (9, 0))}</architecture>",
    "cycle": f"<architecture>{node(1, (2, 0))}{node(2, (1, 0))}</architecture>",
    "slot gap": f"<architecture>{node(1)}{node(2, (1, 0), (1, 2))}</architecture>",
}

for label, text in CASES.items():
    try:
        arch = parse_architecture(text)
        report = validate_cross_refs(arch, InputValuesDoc(), WeightValuesDoc())
        if not report.ok:
            message = "; ".join(str(v) for v in report.violations)
        else:
            build_graph(arch, WeightValuesDoc(), InputValuesDoc())
            message = "accepted"
    except (XmlError, GraphError) as exc:
        message = f"{getattr(exc, 'code', type(exc).__name__)}: {exc}"
    print(f"{label:<18}{message}")
