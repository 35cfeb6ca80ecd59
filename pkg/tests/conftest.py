import numpy as np
import pytest

from skewguard import _kernels
from skewguard.dataio import Dataset
from skewguard.numkit import RngStream

BACKENDS = [_kernels.python_backend]
if _kernels.compiled_backend is not None:
    BACKENDS.append(_kernels.compiled_backend)


@pytest.fixture(params=BACKENDS, ids=lambda b: b.__name__.rsplit(".", 1)[-1])
def backend(request, monkeypatch):
    """Run a test once per available kernel backend."""
    b = request.param
    for name in ("mahalanobis_sq_rows", "csteps", "elemental_stage"):
        monkeypatch.setattr(_kernels, name, getattr(b, name))
    return b


@pytest.fixture
def rng():
    return RngStream(12345)


def make_dataset(X1, X0, **kw):
    X1 = np.asarray(X1, dtype=float)
    X0 = np.asarray(X0, dtype=float)
    X = np.vstack([X0, X1])
    y = np.concatenate([np.zeros(len(X0)), np.ones(len(X1))])
    return Dataset(X=X, y=y, **kw)


ACCEPTANCE_LINES = []


def pytest_terminal_summary(terminalreporter):
    if ACCEPTANCE_LINES:
        terminalreporter.section("acceptance criteria")
        for line in sorted(ACCEPTANCE_LINES, key=lambda s: int(s.split()[1].rstrip(":"))):
            terminalreporter.write_line(line)
