from pathlib import Path

import pytest

HERE = Path(__file__).resolve().parent
MICRO = HERE / "data" / "micro"
GOLDEN = HERE / "golden"


@pytest.fixture
def micro_inputs():
    from tubeground.pipeline import PipelineInputs

    return PipelineInputs(
        detections=MICRO / "detections.jsonl",
        queries=MICRO / "queries.jsonl",
        annotations=MICRO / "annotations.jsonl",
        trm_spans=MICRO / "trm_spans.jsonl",
        videos=MICRO / "videos.jsonl",
    )


# one line per acceptance criterion, printed at the end of the run
ACCEPTANCE_LINES: list[str] = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda x: x.split()[1]):
            terminalreporter.write_line(line)
