import numpy as np
import pytest

from qmb import SystemParams

# realistic parameter set: half-detuning 102, exchange 3.8, probe amplitude 2
FIG2 = dict(delta0=102.0, J=3.8, alpha=2.0, n_max=40)
# amplitude-sweep parameter set: half-detuning 80, exchange 10, shift 20
FIG4 = dict(delta0=80.0, J=10.0, chi=20.0, n_max=40)


@pytest.fixture(scope="session")
def fig2_params():
    return SystemParams.from_delta0(chi=5.0, **FIG2)


@pytest.fixture(scope="session")
def rng():
    return np.random.default_rng(202408)
