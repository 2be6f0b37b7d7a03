import numpy as np
import pytest

from dfskit import KrausChannel
from dfskit.constructions import example_channel
from dfskit.numerics import SubspaceBasis


def sector(x: int, levels=(0, 1)) -> SubspaceBasis:
    """``|x>_A (x) span{|l>_B : l in levels}`` inside the 12-dimensional example."""
    cols = np.zeros((12, len(levels)), dtype=complex)
    for j, lv in enumerate(levels):
        cols[3 * x + lv, j] = 1.0
    return SubspaceBasis(cols)


def kron_oracle(left, right) -> np.ndarray:
    """``sum_k L_k (x) conj(R_k)`` through ``np.kron``, independent of the kernels."""
    return sum(np.kron(a, np.conj(b)) for a, b in zip(left, right))


def diag_unitary_channel(phases) -> KrausChannel:
    return KrausChannel((np.diag(np.exp(1j * np.asarray(phases, dtype=float))),))


def block_diag_channel(*kraus_sets) -> KrausChannel:
    """Direct sum of channels with the same number of Kraus operators."""
    n = len(kraus_sets[0])
    dims = [k[0].shape[0] for k in kraus_sets]
    out = []
    for i in range(n):
        e = np.zeros((sum(dims), sum(dims)), dtype=complex)
        off = 0
        for ks, d in zip(kraus_sets, dims):
            e[off:off + d, off:off + d] = ks[i]
            off += d
        out.append(e)
    return KrausChannel(tuple(out))


@pytest.fixture
def example():
    return example_channel()


@pytest.fixture
def example_aperiodic():
    return example_channel(aperiodic=True)


@pytest.fixture
def rng():
    return np.random.default_rng(20240611)


def pytest_terminal_summary(terminalreporter):
    import sys

    mod = sys.modules.get("test_acceptance")
    if mod is None or not mod.RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(mod.RESULTS):
        terminalreporter.write_line(mod.summary_line(n))
