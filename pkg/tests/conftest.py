from datetime import datetime, timedelta, timezone
from pathlib import Path

import pytest

from bugloc.corpus import (CodeBlock, CodeCharacteristics, Corpus, IngestMode, Language, Origin,
                           SourceUnit)
from bugloc.features import BugReport

FIXTURES = Path(__file__).parent / "fixtures"
EPOCH = datetime(2021, 1, 1, tzinfo=timezone.utc)


def make_unit(path, blocks, names=(), language=Language.C):
    chars = CodeCharacteristics.empty(language)
    if names:
        key = "identifier" if language is Language.C else "names"
        chars.categories[key] = list(names)
    return SourceUnit(path, language, [CodeBlock(tuple(b), Origin.FUNCTION) for b in blocks], chars)


def make_corpus(units):
    corpus = Corpus(Language.C, IngestMode.SRCML)
    for u in units:
        corpus.units[u.path] = u
    return corpus


def make_bug(i, text, fixed=(), days=None, summary=None):
    when = EPOCH + timedelta(days=7 * i if days is None else days)
    return BugReport(f"B{i:04d}", summary if summary is not None else text, "" if summary is None
                     else text, when, frozenset(fixed))


@pytest.fixture
def fixtures():
    return FIXTURES


def pytest_terminal_summary(terminalreporter):
    import sys

    module = sys.modules.get("test_acceptance")
    results = getattr(module, "RESULTS", None)
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for number in sorted(results):
        title, verdict = results[number]
        terminalreporter.write_line(f"criterion {number:>2}: {verdict}  {title}")
