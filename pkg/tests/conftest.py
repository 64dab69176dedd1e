import numpy as np
import pytest

from raformer.config import RaformerConfig
from raformer.weights import init_layer_weights, init_model_weights


@pytest.fixture
def small_cfg():
    # 16x16 feature grid, 4x4 windows -> n = 16, k = 8
    return RaformerConfig(T=2, H=64, W=64, C=8, h=4, w=4, layers=2, heads=2)


@pytest.fixture
def small_layer(small_cfg):
    return init_layer_weights(small_cfg, 0)


@pytest.fixture
def small_model(small_cfg):
    return init_model_weights(small_cfg)


@pytest.fixture
def rng():
    return np.random.default_rng(1234)


def pytest_terminal_summary(terminalreporter):
    from test_acceptance import RESULTS

    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for line in RESULTS:
            terminalreporter.write_line(line)
