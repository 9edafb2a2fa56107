"""Reader, validator and writer for the XML network-description dialect.

Four document kinds share one parsing core.  Root elements are
``architecture``, ``inputValues``, ``weightValues`` and ``outputValues``::

    <architecture>
      <node>
        <nodeIndex>2</nodeIndex>
        <preNodes>
          <element><nodeIndex>1</nodeIndex><inputIndex>0</inputIndex></element>
        </preNodes>
        <b>0</b>
        <function>f(x)=x</function>
      </node>
    </architecture>

    <inputValues>                         <!-- weightValues has the same shape -->
      <node>
        <nodeIndex>1</nodeIndex>
        <items>
          <item><inputIndex>0</inputIndex><value>1.0</value></item>
        </items>
      </node>
    </inputValues>

    <outputValues>
      <node><nodeIndex>5</nodeIndex></node>
    </outputValues>

Child order inside every element is fixed; ``preNodes`` and ``b`` may be
omitted (``b`` then defaults to ``0``).  Text content is whitespace-trimmed.
"""
from __future__ import annotations

import math
import re
from collections import defaultdict
from dataclasses import dataclass, field
from typing import Optional, Union
from xml.parsers import expat

from . import expr

# -- errors --------------------------------------------------------------------


class XmlError(Exception):
    """Base class for document errors."""

    code = "XmlError"


class XmlSyntax(XmlError):
    code = "XmlSyntax"

    def __init__(self, message: str, line: int = 0, column: int = 0):
        super().__init__(f"line {line}, column {column}: {message}")
        self.line = line
        self.column = column


class SchemaViolation(XmlError):
    """The document is well-formed XML but breaks the dialect."""

    code = "SchemaViolation"

    def __init__(self, message, path="", node_index=None, line=0, code=None):
        where = path
        if node_index is not None:
            where += f" (nodeIndex {node_index})"
        if line:
            where += f" [line {line}]"
        super().__init__(f"{where}: {message}" if where else message)
        self.path = path
        self.node_index = node_index
        self.line = line
        if code is not None:
            self.code = code


class NonFiniteValue(SchemaViolation):
    code = "NonFiniteValue"


# -- document model ------------------------------------------------------------


@dataclass(frozen=True)
class PreNodeRef:
    source_node_index: int
    input_index: int


@dataclass(frozen=True)
class NodeDecl:
    node_index: int
    pre_nodes: tuple[PreNodeRef, ...] = ()
    bias_expr: str = "0"
    function_text: str = "f(x)=x"


@dataclass(frozen=True)
class ArchitectureDoc:
    nodes: tuple[NodeDecl, ...]

    def node(self, index: int) -> NodeDecl:
        for n in self.nodes:
            if n.node_index == index:
                return n
        raise KeyError(index)

    @property
    def node_indices(self) -> list[int]:
        return [n.node_index for n in self.nodes]


@dataclass(frozen=True)
class SlotValuesDoc:
    """``(node_index, ((input_index, value), ...))`` entries in document order."""

    entries: tuple[tuple[int, tuple[tuple[int, float], ...]], ...] = ()

    root = ""

    def as_dict(self) -> dict[tuple[int, int], float]:
        return {(n, s): v for n, items in self.entries for s, v in items}

    def slots_of(self, node_index: int) -> list[int]:
        return [s for n, items in self.entries if n == node_index for s, _ in items]


@dataclass(frozen=True)
class InputValuesDoc(SlotValuesDoc):
    root = "inputValues"


@dataclass(frozen=True)
class WeightValuesDoc(SlotValuesDoc):
    root = "weightValues"


@dataclass(frozen=True)
class OutputSelectionDoc:
    node_indices: tuple[int, ...]


Document = Union[ArchitectureDoc, InputValuesDoc, WeightValuesDoc, OutputSelectionDoc]


# -- mini DOM ------------------------------------------------------------------


@dataclass
class _Element:
    tag: str
    path: str
    line: int
    column: int
    text: str = ""
    children: list = field(default_factory=list)
    tag_counts: dict = field(default_factory=dict)


# list elements always carry a 1-based position so paths stay unambiguous
_REPEATED = frozenset({"node", "element", "item"})

_ENCODING_DECL = re.compile(rb"""^\s*<\?xml[^>]*encoding\s*=\s*["']([^"']+)["']""")


def _parse_dom(xml_text: Union[str, bytes]) -> _Element:
    if isinstance(xml_text, str):
        try:
            data = xml_text.encode("utf-8")
        except UnicodeEncodeError as exc:
            raise XmlSyntax(f"text is not encodable as UTF-8: {exc.reason}") from None
    else:
        data = bytes(xml_text)
    m = _ENCODING_DECL.match(data)
    if m and m.group(1).lower().replace(b"_", b"-") not in (b"utf-8", b"utf8"):
        raise XmlSyntax(f"unsupported encoding {m.group(1).decode('ascii', 'replace')!r}; only UTF-8", 1, 0)

    parser = expat.ParserCreate(encoding="UTF-8")
    stack: list[_Element] = []
    root: list[_Element] = []

    def fail(message):
        raise XmlSyntax(message, parser.CurrentLineNumber, parser.CurrentColumnNumber)

    def start(tag, attrs):
        if ":" in tag or "xmlns" in attrs or any(a.startswith("xmlns:") for a in attrs):
            raise SchemaViolation(f"namespaces are not supported (<{tag}>)",
                                  line=parser.CurrentLineNumber, code="Namespace")
        path = f"{stack[-1].path}/{tag}" if stack else f"/{tag}"
        if attrs:
            raise SchemaViolation(f"unexpected attribute(s) {sorted(attrs)}", path,
                                  line=parser.CurrentLineNumber, code="UnexpectedAttribute")
        el = _Element(tag, path, parser.CurrentLineNumber, parser.CurrentColumnNumber)
        if stack:
            parent = stack[-1]
            n = parent.tag_counts.get(tag, 0)
            parent.tag_counts[tag] = n + 1
            if n or tag in _REPEATED:
                el.path = f"{path}[{n + 1}]"
            parent.children.append(el)
        else:
            root.append(el)
        stack.append(el)

    def end(tag):
        stack.pop()

    def chars(data):
        if stack:
            stack[-1].text += data

    def doctype(*args):
        fail("DOCTYPE declarations are not allowed")

    parser.StartElementHandler = start
    parser.EndElementHandler = end
    parser.CharacterDataHandler = chars
    parser.StartDoctypeDeclHandler = doctype
    try:
        parser.Parse(data, True)
    except expat.ExpatError as exc:
        raise XmlSyntax(expat.errors.messages[exc.code], exc.lineno, exc.offset) from None
    except RecursionError:
        raise XmlSyntax("document nesting too deep") from None
    return root[0]


# -- structural helpers --------------------------------------------------------


def _expect_root(el: _Element, tag: str):
    if el.tag != tag:
        raise SchemaViolation(f"root element must be <{tag}>, found <{el.tag}>", el.path,
                              line=el.line, code="UnexpectedElement")


def _no_text(el: _Element, node_index=None):
    if el.text.strip():
        raise SchemaViolation(f"unexpected text {el.text.strip()[:40]!r} in <{el.tag}>",
                              el.path, node_index, el.line, code="UnexpectedText")


def _leaf_text(el: _Element, node_index=None) -> str:
    if el.children:
        c = el.children[0]
        raise SchemaViolation(f"unexpected element <{c.tag}> inside <{el.tag}>", c.path,
                              node_index, c.line, code="UnexpectedElement")
    return el.text.strip()


def _children_in_order(el: _Element, layout, node_index=None) -> dict:
    """Match ``el``'s children against ``layout``: ``(tag, required)`` pairs in order."""
    _no_text(el, node_index)
    found = {}
    i = 0
    kids = el.children
    for tag, required in layout:
        if i < len(kids) and kids[i].tag == tag:
            found[tag] = kids[i]
            i += 1
        elif required:
            got = f"<{kids[i].tag}>" if i < len(kids) else "end of element"
            line = kids[i].line if i < len(kids) else el.line
            raise SchemaViolation(f"expected <{tag}>, found {got}", el.path, node_index,
                                  line, code="MissingElement")
    if i < len(kids):
        extra = kids[i]
        known = [t for t, _ in layout]
        if extra.tag == "nodeIndex" and "nodeIndex" in found:
            msg = "more than one <nodeIndex> in one <node>; declare each node in its own <node>"
            code = "DuplicateNodeIndexTag"
        elif extra.tag in known:
            msg = f"<{extra.tag}> out of order or repeated (order is {', '.join(known)})"
            code = "UnexpectedElement"
        else:
            msg = f"unexpected element <{extra.tag}>"
            code = "UnexpectedElement"
        raise SchemaViolation(msg, extra.path, node_index, extra.line, code=code)
    return found


def _only_children(el: _Element, tag: str, node_index=None) -> list[_Element]:
    _no_text(el, node_index)
    for c in el.children:
        if c.tag != tag:
            raise SchemaViolation(f"unexpected element <{c.tag}> (expected <{tag}>)", c.path,
                                  node_index, c.line, code="UnexpectedElement")
    return el.children


_INT = re.compile(r"\+?[0-9]+\Z")


def _int(el: _Element, minimum: int, node_index=None) -> int:
    text = _leaf_text(el, node_index)
    if not _INT.match(text):
        raise SchemaViolation(f"<{el.tag}> must be an integer, got {text!r}", el.path,
                              node_index, el.line, code="BadInteger")
    value = int(text)
    if value < minimum:
        raise SchemaViolation(f"<{el.tag}> must be >= {minimum}, got {value}", el.path,
                              node_index, el.line, code="BadInteger")
    return value


def _real(el: _Element, node_index=None) -> float:
    text = _leaf_text(el, node_index)
    try:
        if "_" in text:
            raise ValueError(text)
        value = float(text)
    except ValueError:
        raise NonFiniteValue(f"<{el.tag}> is not a number: {text!r}", el.path, node_index,
                             el.line) from None
    if not math.isfinite(value):
        raise NonFiniteValue(f"<{el.tag}> is not finite: {text!r}", el.path, node_index, el.line)
    return value


# -- parsers -------------------------------------------------------------------


def parse_architecture(xml_text) -> ArchitectureDoc:
    root = _parse_dom(xml_text)
    _expect_root(root, "architecture")
    node_els = _only_children(root, "node")
    if not node_els:
        raise SchemaViolation("architecture declares no nodes", root.path, line=root.line,
                              code="EmptyArchitecture")
    layout = [("nodeIndex", True), ("preNodes", False), ("b", False), ("function", True)]
    nodes = []
    seen: dict[int, str] = {}
    for node_el in node_els:
        idx_el = node_el.children[0] if node_el.children else None
        if idx_el is None or idx_el.tag != "nodeIndex":
            raise SchemaViolation("<node> must start with <nodeIndex>", node_el.path,
                                  line=node_el.line, code="MissingElement")
        index = _int(idx_el, 1)
        if index in seen:
            raise SchemaViolation(f"duplicate nodeIndex {index} (first declared at {seen[index]})",
                                  node_el.path, index, idx_el.line, code="DuplicateNodeIndex")
        seen[index] = node_el.path
        parts = _children_in_order(node_el, layout, index)

        refs = []
        if "preNodes" in parts:
            slots: set[int] = set()
            for el in _only_children(parts["preNodes"], "element", index):
                sub = _children_in_order(el, [("nodeIndex", True), ("inputIndex", True)], index)
                src = _int(sub["nodeIndex"], 1, index)
                slot = _int(sub["inputIndex"], 0, index)
                if src == index:
                    raise SchemaViolation(f"node {index} lists itself as a preNode", el.path,
                                          index, el.line, code="SelfLoop")
                if slot in slots:
                    raise SchemaViolation(f"inputIndex {slot} used twice", el.path, index,
                                          el.line, code="DuplicateSlot")
                slots.add(slot)
                refs.append(PreNodeRef(src, slot))

        bias = "0"
        if "b" in parts:
            bias = _leaf_text(parts["b"], index)
            try:
                expr.parse_const(bias)
            except expr.ExprError as exc:
                raise SchemaViolation(f"bad bias expression {bias!r}: {exc}", parts["b"].path,
                                      index, parts["b"].line, code="BadBias") from None

        fn_el = parts["function"]
        fn = _leaf_text(fn_el, index)
        if not fn:
            raise SchemaViolation("empty <function>", fn_el.path, index, fn_el.line,
                                  code="BadFunction")
        try:
            expr.parse_function(fn)
        except expr.ExprError as exc:
            raise SchemaViolation(f"bad transfer function {fn!r}: {exc}", fn_el.path, index,
                                  fn_el.line, code="BadFunction") from None
        nodes.append(NodeDecl(index, tuple(refs), bias, fn))
    return ArchitectureDoc(tuple(nodes))


def _parse_slot_values(xml_text, cls):
    root = _parse_dom(xml_text)
    _expect_root(root, cls.root)
    entries = []
    seen = set()
    for node_el in _only_children(root, "node"):
        parts = _children_in_order(node_el, [("nodeIndex", True), ("items", True)])
        index = _int(parts["nodeIndex"], 1)
        items = []
        for item in _only_children(parts["items"], "item", index):
            sub = _children_in_order(item, [("inputIndex", True), ("value", True)], index)
            slot = _int(sub["inputIndex"], 0, index)
            value = _real(sub["value"], index)
            if (index, slot) in seen:
                raise SchemaViolation(f"duplicate entry for node {index} slot {slot}", item.path,
                                      index, item.line, code="DuplicateSlot")
            seen.add((index, slot))
            items.append((slot, value))
        entries.append((index, tuple(items)))
    return cls(tuple(entries))


def parse_inputs(xml_text) -> InputValuesDoc:
    return _parse_slot_values(xml_text, InputValuesDoc)


def parse_weights(xml_text) -> WeightValuesDoc:
    return _parse_slot_values(xml_text, WeightValuesDoc)


def parse_outputs(xml_text) -> Optional[OutputSelectionDoc]:
    """Parse an output selection; empty text or an empty root means "no selection"."""
    if xml_text is None:
        return None
    if not (xml_text.strip() if isinstance(xml_text, str) else bytes(xml_text).strip()):
        return None
    root = _parse_dom(xml_text)
    _expect_root(root, "outputValues")
    indices = []
    for node_el in _only_children(root, "node"):
        parts = _children_in_order(node_el, [("nodeIndex", True)])
        index = _int(parts["nodeIndex"], 1)
        if index in indices:
            raise SchemaViolation(f"node {index} selected twice", node_el.path, index,
                                  node_el.line, code="DuplicateOutput")
        indices.append(index)
    if not indices:
        return None
    return OutputSelectionDoc(tuple(indices))


# -- cross-document validation -------------------------------------------------


@dataclass(frozen=True)
class Violation:
    kind: str
    message: str
    node_index: Optional[int] = None

    def __str__(self):
        return f"{self.kind}: {self.message}"


@dataclass(frozen=True)
class ValidationReport:
    violations: tuple[Violation, ...] = ()
    warnings: tuple[str, ...] = ()

    @property
    def ok(self) -> bool:
        return not self.violations

    def lines(self) -> list[str]:
        return [str(v) for v in self.violations] + [f"warning: {w}" for w in self.warnings]


def validate_cross_refs(arch: ArchitectureDoc, inputs: InputValuesDoc,
                        weights: WeightValuesDoc,
                        outputs: Optional[OutputSelectionDoc] = None) -> ValidationReport:
    """Check references between documents.  Never raises; problems are returned.

    A node's slot set is the union of its preNode slots and the slots given
    values in ``inputs``; it must be exactly ``0..k-1``.  An input slot at or
    beyond ``k`` (the size of that union) is reported as UnknownSlot rather
    than as a gap.
    """
    out: list[Violation] = []
    warnings: list[str] = []
    known = set(arch.node_indices)

    for n in arch.nodes:
        for ref in n.pre_nodes:
            if ref.source_node_index not in known:
                out.append(Violation("DanglingReference",
                                     f"node {n.node_index} slot {ref.input_index} reads from "
                                     f"undeclared node {ref.source_node_index}", n.node_index))

    input_slots: dict[int, list[int]] = defaultdict(list)
    for index, items in inputs.entries:
        if index not in known:
            out.append(Violation("UnknownNode", f"input values given for undeclared node {index}",
                                 index))
            continue
        input_slots[index].extend(s for s, _ in items)

    slot_sets: dict[int, set[int]] = {}
    for n in arch.nodes:
        pre = {r.input_index for r in n.pre_nodes}
        ext = input_slots.get(n.node_index, [])
        k = len(pre | set(ext))
        valid = set(pre)
        for s in ext:
            if s in pre:
                out.append(Violation("SlotConflict", f"node {n.node_index} slot {s} is fed by a "
                                     "preNode and also given an input value", n.node_index))
            elif s >= k:
                out.append(Violation("UnknownSlot", f"input value for node {n.node_index} slot {s}"
                                     f" outside its slot range 0..{k - 1}", n.node_index))
            else:
                valid.add(s)
        if valid != set(range(len(valid))):
            missing = sorted(set(range(max(valid) + 1)) - valid)
            out.append(Violation("SlotGap", f"node {n.node_index} slots {sorted(valid)} are not "
                                 f"dense; missing {missing}", n.node_index))
        slot_sets[n.node_index] = valid

    weighted = defaultdict(set)
    for index, items in weights.entries:
        if index not in known:
            out.append(Violation("UnknownNode", f"weights given for undeclared node {index}", index))
            continue
        for s, _ in items:
            if s not in slot_sets[index]:
                out.append(Violation("UnknownSlot", f"weight for node {index} slot {s}, which "
                                     f"has slots {sorted(slot_sets[index])}", index))
            weighted[index].add(s)

    for n in arch.nodes:
        missing = sorted(slot_sets[n.node_index] - weighted[n.node_index])
        if missing:
            warnings.append(f"node {n.node_index} slots {missing} have no weight; using 1.0")

    if outputs is not None:
        for index in outputs.node_indices:
            if index not in known:
                out.append(Violation("UnknownOutput", f"output selection names undeclared node "
                                     f"{index}", index))
    return ValidationReport(tuple(out), tuple(warnings))


# -- serialization -------------------------------------------------------------


def _fmt_real(v: float) -> str:
    return repr(float(v))


def serialize_architecture(doc: ArchitectureDoc) -> str:
    lines = ["<architecture>"]
    for n in doc.nodes:
        lines += ["  <node>", f"    <nodeIndex>{n.node_index}</nodeIndex>"]
        if n.pre_nodes:
            lines.append("    <preNodes>")
            for r in n.pre_nodes:
                lines += ["      <element>",
                          f"        <nodeIndex>{r.source_node_index}</nodeIndex>",
                          f"        <inputIndex>{r.input_index}</inputIndex>",
                          "      </element>"]
            lines.append("    </preNodes>")
        lines += [f"    <b>{_escape(n.bias_expr)}</b>",
                  f"    <function>{_escape(n.function_text)}</function>",
                  "  </node>"]
    lines.append("</architecture>")
    return "\n".join(lines) + "\n"


def serialize_slot_values(doc: SlotValuesDoc) -> str:
    lines = [f"<{doc.root}>"]
    for index, items in doc.entries:
        lines += ["  <node>", f"    <nodeIndex>{index}</nodeIndex>", "    <items>"]
        for slot, value in items:
            lines += ["      <item>",
                      f"        <inputIndex>{slot}</inputIndex>",
                      f"        <value>{_fmt_real(value)}</value>",
                      "      </item>"]
        lines += ["    </items>", "  </node>"]
    lines.append(f"</{doc.root}>")
    return "\n".join(lines) + "\n"


def serialize_outputs(doc: OutputSelectionDoc) -> str:
    body = "".join(f"  <node><nodeIndex>{i}</nodeIndex></node>\n" for i in doc.node_indices)
    return f"<outputValues>\n{body}</outputValues>\n"


def serialize(doc: Document) -> str:
    if isinstance(doc, ArchitectureDoc):
        return serialize_architecture(doc)
    if isinstance(doc, SlotValuesDoc):
        return serialize_slot_values(doc)
    if isinstance(doc, OutputSelectionDoc):
        return serialize_outputs(doc)
    raise TypeError(f"cannot serialize {type(doc).__name__}")


def _escape(text: str) -> str:
    return text.replace("&", "&amp;").replace("<", "&lt;").replace(">", "&gt;")
