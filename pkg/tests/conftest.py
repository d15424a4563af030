import datetime as dt

import pytest

from timeds.corpus import Gazetteer, Sentence, tokenize

DAY = dt.date(2016, 5, 26)


def make_gaz(entries, case_sensitive=True):
    gaz = Gazetteer(case_sensitive=case_sensitive)
    for surface, etype, cid in entries:
        gaz.add(surface, etype, cid)
    return gaz


def make_sentence(text, gaz, doc="d1", index=0, day=DAY):
    tokens = tokenize(text)
    return Sentence(doc, index, text, tuple(tokens), tuple(gaz.find(tokens)), day)


@pytest.fixture
def org_gaz():
    return make_gaz([
        ("Microsoft", "ORG", "msft"), ("Facebook", "ORG", "fb"), ("Google", "ORG", "goog"),
        ("Kevin", "PER", "kevin"), ("Jack", "PER", "jack"), ("Seattle", "LOC", "sea"),
    ])


# one line per acceptance criterion, collected by tests/test_acceptance.py
ACCEPTANCE: dict[int, str] = {}


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE:
        terminalreporter.section("acceptance criteria")
        for n in sorted(ACCEPTANCE):
            terminalreporter.write_line(ACCEPTANCE[n])
