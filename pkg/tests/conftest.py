import numpy as np
import pytest
from hypothesis import HealthCheck, settings, strategies as st

from dpparser.corpus import ParseTree
from dpparser.neural import ModelConfig
from dpparser.transition import SystemKind, apply, initial, is_terminal, legal, sequence_to_tree

settings.register_profile("default", max_examples=50, deadline=None,
                          suppress_health_check=[HealthCheck.too_slow])
settings.load_profile("default")

TINY = ModelConfig(word_dim=5, pos_dim=3, lstm_hidden=4, mlp_hidden=6, biaffine_dim=4)
TINY64 = ModelConfig(word_dim=5, pos_dim=3, lstm_hidden=4, mlp_hidden=6, biaffine_dim=4,
                     dtype="float64")


@st.composite
def legal_sequences(draw, system="hybrid", min_n=1, max_n=10):
    """A random complete sequence, built by drawing among the legal transitions."""
    system = SystemKind(system)
    n = draw(st.integers(min_n, max_n))
    c = initial(n)
    seq = []
    while not is_terminal(c):
        options = [t for t in legal(c, system)
                   if system is not SystemKind.ARC_EAGER or _completable(apply(c, t, system))]
        t = draw(st.sampled_from(options))
        seq.append(t)
        c = apply(c, t, system)
    return n, tuple(seq)


def _completable(c):
    from dpparser.transition import is_viable
    return is_viable(c, SystemKind.ARC_EAGER)


@st.composite
def projective_trees(draw, min_n=1, max_n=12):
    n, seq = draw(legal_sequences("hybrid", min_n, max_n))
    return sequence_to_tree(seq, n, "hybrid")


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def pytest_configure(config):
    config.acceptance_lines = []


@pytest.fixture
def acceptance(request):
    """Record one pass/fail line per acceptance criterion for the terminal summary."""
    lines = request.config.acceptance_lines

    def record(number, title, passed, detail=""):
        status = "SKIP" if passed is None else "PASS" if passed else "FAIL"
        line = f"criterion {number:>2} {status}  {title}" + (f"  [{detail}]" if detail else "")
        lines.append(line)
        print(line)
        return passed

    return record


def pytest_terminal_summary(terminalreporter, exitstatus, config):
    lines = getattr(config, "acceptance_lines", [])
    if lines:
        terminalreporter.section("acceptance criteria")
        for line in sorted(lines, key=lambda l: int(l.split()[1])):
            terminalreporter.write_line(line)
