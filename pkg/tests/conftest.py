import pytest

from dnapool import corpus as corpus_mod
from dnapool import methods, poolsim, primers

METHOD_TOKENS = ("1-1cs", "m-1ci", "1-mci")
_ACCEPTANCE_LINES: list[str] = []


@pytest.fixture(scope="session")
def corpus():
    return corpus_mod.acceptance_corpus()


@pytest.fixture(scope="session")
def library():
    lib = primers.PrimerLibrary()
    primers.extend_library(lib, 9, seed=7, universal=True)
    return lib


@pytest.fixture(scope="session")
def pools(corpus, library, tmp_path_factory):
    """One written pool per method over the acceptance corpus."""
    out = {}
    for m in METHOD_TOKENS:
        plan = methods.plan(m, corpus.files, corpus.tools, library=library)
        pool, manifest = poolsim.pool_write(plan, tmp_path_factory.mktemp(m))
        out[m] = (plan, pool, manifest, poolsim.pool_stats(pool, manifest))
    return out


@pytest.fixture(scope="session")
def acceptance_report():
    def report(number: int, ok: bool, detail: str) -> None:
        line = f"criterion {number:>2}: {'PASS' if ok else 'FAIL'}  {detail}"
        _ACCEPTANCE_LINES.append(line)
        print(line)
    return report


def pytest_terminal_summary(terminalreporter):
    if _ACCEPTANCE_LINES:
        terminalreporter.write_sep("=", "acceptance criteria")
        for line in sorted(_ACCEPTANCE_LINES, key=lambda s: int(s.split(":")[0].split()[1])):
            terminalreporter.write_line(line)
