from pathlib import Path

import pytest

from turklvc.conllu import read_conllu

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def corpus_path():
    return FIXTURES / "corpus.conllu"


@pytest.fixture
def corpus(corpus_path):
    return read_conllu(corpus_path, strict=True, name="fx")


def raw_token_rows(text):
    """Column lists of integer-id token lines, read without the parser."""
    rows = []
    for line in text.splitlines():
        if not line or line.startswith("#"):
            continue
        cols = line.split("\t")
        if cols[0].isdigit():
            rows.append(cols)
    return rows


# one PASS/FAIL line per acceptance criterion in the terminal summary
_ACCEPTANCE = []


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    if item.module.__name__.endswith("test_acceptance") and (rep.when == "call" or rep.failed):
        doc = (item.function.__doc__ or item.name).strip().splitlines()[0]
        _ACCEPTANCE.append((doc, "PASS" if rep.passed else "FAIL"))


def pytest_terminal_summary(terminalreporter):
    if not _ACCEPTANCE:
        return
    terminalreporter.section("acceptance criteria")
    for doc, status in _ACCEPTANCE:
        terminalreporter.write_line(f"[{status}] {doc}")
