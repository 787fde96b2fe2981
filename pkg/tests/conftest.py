import numpy as np
import pytest

from flowmatrix import Family, make_schedule

ALL_FAMILIES = list(Family)


@pytest.fixture(params=ALL_FAMILIES, ids=lambda f: f.value)
def any_schedule(request):
    return make_schedule(request.param)


def rng_for(seed: int) -> np.random.Generator:
    return np.random.Generator(np.random.Philox(key=seed))
