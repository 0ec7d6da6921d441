import numpy as np
import pytest

from qxfer.model import derive_seeds, paper_figure_model

PAPER_SEED = 7
PAPER_C = 1 / 400


def random_hermitian(dim, rng):
    z = rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))
    return (z + z.conj().T) / 2


def random_state(dim, rng):
    v = rng.standard_normal(dim) + 1j * rng.standard_normal(dim)
    return v / np.linalg.norm(v)


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


@pytest.fixture(scope="session")
def paper_seeds():
    return derive_seeds(PAPER_SEED)


@pytest.fixture(scope="session")
def paper_model(paper_seeds):
    return paper_figure_model(PAPER_C, *paper_seeds)


def pytest_runtest_makereport(item, call):
    marker = item.get_closest_marker("criterion")
    if marker is not None and call.when == "call":
        item.user_properties.append(("criterion", marker.args))


def pytest_terminal_summary(terminalreporter):
    outcome = {}
    for key in ("passed", "failed", "xfailed", "error"):
        for rep in terminalreporter.stats.get(key, []):
            props = dict(getattr(rep, "user_properties", ()))
            if "criterion" not in props:
                continue
            n, title = props["criterion"]
            ok = key == "passed" and rep.when == "call"
            prev = outcome.get(n, (title, True, []))
            notes = prev[2] + [v for k, v in getattr(rep, "user_properties", ()) if k == "measured"]
            outcome[n] = (title, prev[1] and ok, notes)
    if not outcome:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(outcome):
        title, ok, notes = outcome[n]
        line = f"{'PASS' if ok else 'FAIL'}  criterion {n}: {title}"
        if notes:
            line += "  [" + "; ".join(notes) + "]"
        terminalreporter.write_line(line)
