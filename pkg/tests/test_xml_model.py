from pathlib import Path

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from conftest import FIXTURES, read_fixture
from distann.xml_model import (
    ArchitectureDoc,
    InputValuesDoc,
    NodeDecl,
    NonFiniteValue,
    OutputSelectionDoc,
    PreNodeRef,
    SchemaViolation,
    WeightValuesDoc,
    XmlError,
    XmlSyntax,
    parse_architecture,
    parse_inputs,
    parse_outputs,
    parse_weights,
    serialize,
    validate_cross_refs,
)

MINIMAL = "<architecture><node><nodeIndex>1</nodeIndex><b>0</b><function>f(x)=x</function></node></architecture>"


def _arch(*nodes: str) -> str:
    return "<architecture>" + "".join(nodes) + "</architecture>"


def _node(i, pre=(), b="0", fn="f(x)=x"):
    refs = "".join(f"<element><nodeIndex>{s}</nodeIndex><inputIndex>{k}</inputIndex></element>"
                   for s, k in pre)
    pre_xml = f"<preNodes>{refs}</preNodes>" if pre else ""
    return f"<node><nodeIndex>{i}</nodeIndex>{pre_xml}<b>{b}</b><function>{fn}</function></node>"


def _values(root, entries):
    body = "".join(
        f"<node><nodeIndex>{n}</nodeIndex><items>"
        + "".join(f"<item><inputIndex>{s}</inputIndex><value>{v}</value></item>" for s, v in items)
        + "</items></node>" for n, items in entries)
    return f"<{root}>{body}</{root}>"


# -- architecture --------------------------------------------------------------


def test_sample_architecture():
    doc = parse_architecture(read_fixture("sample/architecture_bias_e.xml"))
    assert [n.node_index for n in doc.nodes] == [1, 2, 3, 4, 5]
    n2 = doc.node(2)
    assert n2.pre_nodes == (PreNodeRef(1, 0), PreNodeRef(3, 1))
    assert n2.bias_expr == "e"
    assert n2.function_text == "f(x)=x"
    assert doc.node(1).pre_nodes == ()


def test_minimal_document():
    doc = parse_architecture(MINIMAL)
    assert doc == ArchitectureDoc((NodeDecl(1, (), "0", "f(x)=x"),))


def test_bias_is_optional():
    doc = parse_architecture(_arch("<node><nodeIndex>1</nodeIndex><function>f(x)=x</function></node>"))
    assert doc.nodes[0].bias_expr == "0"


def test_whitespace_trimmed_and_comments_ignored():
    doc = parse_architecture("""<?xml version="1.0" encoding="utf-8"?>
    <!-- leading comment -->
    <architecture>
      <node>
        <nodeIndex>
            7
        </nodeIndex>  <!-- inline -->
        <b>  e </b>
        <function> f(x)=x </function>
      </node>
    </architecture>""")
    assert doc.nodes[0] == NodeDecl(7, (), "e", "f(x)=x")


@pytest.mark.parametrize("xml, code", [
    (_arch(_node(1), _node(2, [(1, 0), (1, 0)])), "DuplicateSlot"),
    (_arch(_node(1), _node(1)), "DuplicateNodeIndex"),
    (_arch(_node(1, [(1, 0)])), "SelfLoop"),
    (_arch(), "EmptyArchitecture"),
    (_arch("<node><nodeIndex>1</nodeIndex><b>0</b></node>"), "MissingElement"),
    (_arch("<node><b>0</b><function>f(x)=x</function></node>"), "MissingElement"),
    (_arch("<node><nodeIndex>1</nodeIndex><function>f(x)=x</function><b>0</b></node>"), "UnexpectedElement"),
    (_arch("<node><nodeIndex>1</nodeIndex><weight>2</weight><function>f(x)=x</function></node>"),
     "MissingElement"),
    (_arch(_node(1), "<edge/>"), "UnexpectedElement"),
    (_arch(_node(0)), "BadInteger"),
    (_arch(_node(-1)), "BadInteger"),
    (_arch(_node("1.5")), "BadInteger"),
    (_arch(_node(2, [(1, -1)])), "BadInteger"),
    (_arch(_node(1, fn="")), "BadFunction"),
    (_arch(_node(1, fn="g(x)=x")), "BadFunction"),
    (_arch(_node(1, fn="f(x)=wobble(x)")), "BadFunction"),
    (_arch(_node(1, b="x")), "BadBias"),
    (_arch(_node(1, b="q")), "BadBias"),
    ('<architecture id="a">' + _node(1) + "</architecture>", "UnexpectedAttribute"),
    ('<a:architecture xmlns:a="urn:x">' + _node(1) + "</a:architecture>", "Namespace"),
    ("<inputValues/>", "UnexpectedElement"),
    (_arch("stray text", _node(1)), "UnexpectedText"),
])
def test_architecture_schema_violations(xml, code):
    with pytest.raises(SchemaViolation) as info:
        parse_architecture(xml)
    assert info.value.code == code


@pytest.mark.parametrize("xml", [
    "", "<architecture>", "<architecture></arch>", "not xml at all", "<a><b></a></b>",
    '<?xml version="1.0" encoding="ISO-8859-1"?><architecture/>',
    '<!DOCTYPE architecture [<!ENTITY a "aaaa">]><architecture/>',
])
def test_syntax_errors(xml):
    with pytest.raises(XmlSyntax):
        parse_architecture(xml)


def test_syntax_error_has_position():
    with pytest.raises(XmlSyntax) as info:
        parse_architecture("<architecture>\n  <node>\n</architecture>")
    assert info.value.line == 3
    assert "line 3" in str(info.value)


def test_invalid_utf8_bytes():
    with pytest.raises(XmlSyntax):
        parse_architecture(b"<architecture>\xff\xfe</architecture>")


def test_diagnostic_carries_path_and_node_index():
    xml = _arch(_node(1), _node(2, [(1, 0), (3, 0)]), _node(3))
    with pytest.raises(SchemaViolation) as info:
        parse_architecture(xml)
    err = info.value
    assert err.node_index == 2
    assert err.path == "/architecture/node[2]/preNodes/element[2]"
    assert "nodeIndex 2" in str(err) and "/architecture/node[2]" in str(err)


# -- value documents -------------------------------------------------------------


def test_sample_inputs():
    doc = parse_inputs(read_fixture("sample/inputs.xml"))
    assert doc.entries == ((1, ((0, 1.0),)), (3, ((0, 2.0),)))


def test_empty_inputs():
    assert parse_inputs("<inputValues></inputValues>") == InputValuesDoc(())


def test_literal_two_index_input_form_is_rejected():
    # a single <node> carrying two nodeIndex/items pairs
    xml = """<inputValues><node>
      <nodeIndex>1</nodeIndex><items><item><inputIndex>0</inputIndex><value>1</value></item></items>
      <nodeIndex>3</nodeIndex><items><item><inputIndex>0</inputIndex><value>2</value></item></items>
    </node></inputValues>"""
    with pytest.raises(SchemaViolation) as info:
        parse_inputs(xml)
    assert info.value.code == "DuplicateNodeIndexTag"
    assert "own <node>" in str(info.value)


@pytest.mark.parametrize("text", ["abc", "nan", "inf", "-Infinity", "1_000", "", "1.0.0", "0x10"])
def test_non_numeric_values(text):
    with pytest.raises(NonFiniteValue):
        parse_inputs(_values("inputValues", [(1, [(0, text)])]))


@pytest.mark.parametrize("text, value", [("1", 1.0), (" -2.5 ", -2.5), ("1e-3", 1e-3), ("+4", 4.0)])
def test_numeric_values(text, value):
    doc = parse_inputs(_values("inputValues", [(1, [(0, text)])]))
    assert doc.entries == ((1, ((0, value),)),)


def test_weights():
    doc = parse_weights(_values("weightValues", [(2, [(0, "0.5"), (1, "-1.0")])]))
    assert doc == WeightValuesDoc(((2, ((0, 0.5), (1, -1.0))),))
    assert parse_weights("<weightValues/>") == WeightValuesDoc(())


def test_duplicate_pairs_rejected_across_entries():
    xml = _values("weightValues", [(2, [(0, "1")]), (2, [(0, "2")])])
    with pytest.raises(SchemaViolation) as info:
        parse_weights(xml)
    assert info.value.code == "DuplicateSlot"
    # same node in two entries with distinct slots is fine
    assert parse_weights(_values("weightValues", [(2, [(0, "1")]), (2, [(1, "2")])])).as_dict() == {
        (2, 0): 1.0, (2, 1): 2.0}


def test_wrong_root_for_weights():
    with pytest.raises(SchemaViolation):
        parse_weights("<inputValues/>")


def test_outputs():
    assert parse_outputs(read_fixture("sample/outputs.xml")) == OutputSelectionDoc((5,))
    assert parse_outputs("") is None
    assert parse_outputs("<outputValues></outputValues>") is None
    with pytest.raises(SchemaViolation) as info:
        parse_outputs("<outputValues><node><nodeIndex>5</nodeIndex></node>"
                      "<node><nodeIndex>5</nodeIndex></node></outputValues>")
    assert info.value.code == "DuplicateOutput"


# -- cross references ------------------------------------------------------------


def test_sample_is_consistent(sample_docs):
    report = validate_cross_refs(*sample_docs)
    assert report.violations == ()
    assert report.ok
    # no weights given, so every node warns about the default
    assert len(report.warnings) == 5


def test_dangling_reference():
    arch = parse_architecture(_arch(_node(1), _node(2, [(1, 0), (99, 1)])))
    report = validate_cross_refs(arch, InputValuesDoc(), WeightValuesDoc())
    assert [v.kind for v in report.violations] == ["DanglingReference"]
    assert report.violations[0].node_index == 2


def test_unknown_slot_input(sample_docs):
    arch, _, weights, outputs = sample_docs
    inputs = parse_inputs(_values("inputValues", [(1, [(0, 1)]), (3, [(0, 2)]), (2, [(7, 1)])]))
    report = validate_cross_refs(arch, inputs, weights, outputs)
    assert [v.kind for v in report.violations] == ["UnknownSlot"]


@pytest.mark.parametrize("arch_nodes, inputs, weights, outputs, kinds", [
    ([_node(1), _node(2, [(1, 0), (1, 2)])], [], [], None, ["SlotGap"]),
    ([_node(1), _node(2, [(1, 1)])], [(2, [(0, 1)])], [], None, []),        # external fills slot 0
    ([_node(1), _node(2, [(1, 0)])], [(2, [(0, 1)])], [], None, ["SlotConflict"]),
    ([_node(1)], [(4, [(0, 1)])], [], None, ["UnknownNode"]),
    ([_node(1)], [(1, [(0, 1)])], [(1, [(1, 1)])], None, ["UnknownSlot"]),
    ([_node(1)], [], [(9, [(0, 1)])], None, ["UnknownNode"]),
    ([_node(1)], [], [], (1, 2), ["UnknownOutput"]),
    ([_node(1), _node(2, [(1, 1), (1, 2)])], [(2, [(5, 1)])], [], None, ["UnknownSlot", "SlotGap"]),
])
def test_cross_ref_kinds(arch_nodes, inputs, weights, outputs, kinds):
    report = validate_cross_refs(
        parse_architecture(_arch(*arch_nodes)),
        parse_inputs(_values("inputValues", inputs)),
        parse_weights(_values("weightValues", weights)),
        OutputSelectionDoc(outputs) if outputs else None,
    )
    assert [v.kind for v in report.violations] == kinds


def test_full_weights_suppress_warning():
    arch = parse_architecture(_arch(_node(1)))
    inputs = parse_inputs(_values("inputValues", [(1, [(0, 1)])]))
    weights = parse_weights(_values("weightValues", [(1, [(0, 2)])]))
    assert validate_cross_refs(arch, inputs, weights).warnings == ()


# -- round trip and totality -----------------------------------------------------

FIXTURE_DOCS = sorted(p.relative_to(FIXTURES).as_posix() for p in FIXTURES.rglob("*.xml"))
PARSERS = {"architecture": parse_architecture, "inputValues": parse_inputs,
           "weightValues": parse_weights, "outputValues": parse_outputs}


def _parser_for(text):
    for root, func in PARSERS.items():
        if f"<{root}" in text:
            return func
    raise AssertionError("unknown document kind")


@pytest.mark.parametrize("name", FIXTURE_DOCS)
def test_fixture_roundtrip(name):
    text = read_fixture(name)
    parse = _parser_for(text)
    try:
        doc = parse(text)
    except XmlError:
        return  # deliberately invalid fixtures
    assert parse(serialize(doc)) == doc


_ints = st.integers(1, 50)
_reals = st.floats(allow_nan=False, allow_infinity=False)


@st.composite
def architectures(draw):
    ids = draw(st.lists(_ints, min_size=1, max_size=8, unique=True))
    nodes = []
    for i in ids:
        others = [j for j in ids if j != i]
        slots = draw(st.lists(st.integers(0, 6), unique=True, max_size=min(4, len(others) * 4)))
        pre = tuple(PreNodeRef(draw(st.sampled_from(others)), s) for s in slots) if others else ()
        bias = draw(st.sampled_from(["0", "e", "-1.5", "2*pi", "1e-3"]))
        fn = draw(st.sampled_from(["f(x)=x", "f(x)=sigmoid(x)", "f(x)=-x^2", "f(x)=1/(1+exp(-x))"]))
        nodes.append(NodeDecl(i, pre, bias, fn))
    return ArchitectureDoc(tuple(nodes))


@st.composite
def slot_docs(draw, cls):
    keys = draw(st.lists(st.tuples(_ints, st.integers(0, 5)), unique=True, max_size=10))
    entries = tuple((n, ((s, draw(_reals)),)) for n, s in keys)
    return cls(entries)


@given(architectures())
def test_architecture_roundtrip(doc):
    assert parse_architecture(serialize(doc)) == doc


@given(st.one_of(slot_docs(InputValuesDoc), slot_docs(WeightValuesDoc)))
def test_values_roundtrip(doc):
    parse = parse_inputs if isinstance(doc, InputValuesDoc) else parse_weights
    assert parse(serialize(doc)) == doc


@given(st.lists(_ints, min_size=1, unique=True))
def test_outputs_roundtrip(indices):
    doc = OutputSelectionDoc(tuple(indices))
    assert parse_outputs(serialize(doc)) == doc


@settings(max_examples=300)
@given(st.binary(max_size=200))
def test_parsers_total_on_bytes(data):
    for parse in PARSERS.values():
        try:
            parse(data)
        except XmlError:
            pass


@settings(max_examples=300)
@given(st.data())
def test_parsers_total_on_mutated_fixtures(data):
    name = data.draw(st.sampled_from(FIXTURE_DOCS))
    text = read_fixture(name)
    start = data.draw(st.integers(0, len(text)))
    end = data.draw(st.integers(start, min(len(text), start + 20)))
    junk = data.draw(st.text(alphabet="<>/ab01-.x&;=\"' \n", max_size=10))
    mutated = text[:start] + junk + text[end:]
    for parse in PARSERS.values():
        try:
            parse(mutated)
        except XmlError:
            pass


def test_first_list_element_is_indexed():
    text = ("<architecture><node><nodeIndex>1</nodeIndex><function>f(x)=x</function></node>"
            "<node><nodeIndex>1</nodeIndex><function>f(x)=x</function></node></architecture>")
    with pytest.raises(SchemaViolation) as info:
        parse_architecture(text)
    assert info.value.path == "/architecture/node[2]"
    assert "first declared at /architecture/node[1]" in str(info.value)
