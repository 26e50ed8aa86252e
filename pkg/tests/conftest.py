import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).parent))

import pytest

_acceptance_results = []


def pytest_runtest_logreport(report):
    if report.when == "call" and "test_acceptance" in report.nodeid:
        name = report.nodeid.split("::")[-1]
        _acceptance_results.append((name, report.outcome.upper(),
                                    report.duration))


def pytest_terminal_summary(terminalreporter):
    if not _acceptance_results:
        return
    terminalreporter.write_sep("-", "acceptance criteria")
    for name, outcome, duration in _acceptance_results:
        status = "PASS" if outcome == "PASSED" else outcome
        terminalreporter.write_line(f"ACCEPTANCE {name}: {status} "
                                    f"({duration:.1f}s)")

from stc.corpus import (SparseVector, build_vocabulary, parse_corpus,
                        parse_short_text)


def text(s: str):
    return parse_short_text(s)


def pair_line(pair_id, post_id, post, comment):
    return f"{pair_id}\t{post_id}\t{post}\t{comment}\n"


@pytest.fixture
def small_repo():
    """Six pairs over two crisp themes plus shared words."""
    lines = [
        pair_line(1, 10, "sun beach wave surf", "enjoy the beach sun"),
        pair_line(2, 10, "sun beach wave surf", "bring a surf board"),
        pair_line(3, 11, "rain code deploy bug", "fix the bug first"),
        pair_line(4, 11, "rain code deploy bug", "deploy on friday never"),
        pair_line(5, 12, "wave surf contest today", "the contest looks fun"),
        pair_line(6, 13, "bug tracker cleanup day", "close old tickets please"),
    ]
    return parse_corpus(lines).repository


@pytest.fixture
def small_vocab(small_repo):
    return build_vocabulary(small_repo)


def sparse(entries: dict) -> SparseVector:
    return SparseVector.from_dict(entries)


def random_sparse(rng, max_id=30, max_len=8, allow_empty=True) -> SparseVector:
    n = int(rng.integers(0 if allow_empty else 1, max_len + 1))
    ids = rng.choice(max_id, size=min(n, max_id), replace=False)
    entries = {int(i): float(rng.uniform(0.1, 3.0)) for i in ids}
    return SparseVector.from_dict(entries)
