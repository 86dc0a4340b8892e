import pathlib

import pytest

from modfault import Rewriter, parse

ROOT = pathlib.Path(__file__).resolve().parent.parent
CORPUS = ROOT / "corpus"

CORPUS_FILES = {
    "unprotected": CORPUS / "unprotected.fj",
    "vigilant-original": CORPUS / "vigilant-original.fj",
    "vigilant-coron": CORPUS / "vigilant-coron.fj",
    "vigilant-fixed": CORPUS / "vigilant-fixed.fj",
}


@pytest.fixture(scope="session")
def corpus_sources():
    return {name: path.read_text() for name, path in CORPUS_FILES.items()}


@pytest.fixture(scope="session")
def corpus_programs(corpus_sources):
    return {name: parse(src) for name, src in corpus_sources.items()}


@pytest.fixture(scope="session")
def pq_rewriter():
    return Rewriter(primes={"p", "q"})


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if not RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for criterion, ok, detail in RESULTS:
        status = "PASS" if ok else "FAIL"
        line = f"{status}  {criterion}"
        if detail:
            line += f"  [{detail}]"
        terminalreporter.write_line(line)
