from pathlib import Path

import numpy as np
import pytest

FIXTURES = Path(__file__).parent / "fixtures"


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def random_operator(rng, m, n, scale=1.0):
    from tikmor import as_operator

    return as_operator(scale * rng.standard_normal((m, n)))
