from pathlib import Path

import pytest

from distann import graph, xml_model

FIXTURES = Path(__file__).parent / "fixtures"
SAMPLE = FIXTURES / "sample"

# filled by test_acceptance, printed after the run
ACCEPTANCE_LINES: list[str] = []


def read_fixture(name: str) -> str:
    return (FIXTURES / name).read_text(encoding="utf-8")


@pytest.fixture
def sample_docs():
    return (
        xml_model.parse_architecture(read_fixture("sample/architecture.xml")),
        xml_model.parse_inputs(read_fixture("sample/inputs.xml")),
        xml_model.parse_weights(read_fixture("sample/weights.xml")),
        xml_model.parse_outputs(read_fixture("sample/outputs.xml")),
    )


@pytest.fixture
def sample(sample_docs):
    arch, inputs, weights, outputs = sample_docs
    return graph.build_graph(arch, weights, inputs, outputs)


@pytest.fixture
def sample_inputs(sample_docs):
    return sample_docs[1]


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in ACCEPTANCE_LINES:
            terminalreporter.write_line(line)
