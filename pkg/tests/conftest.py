import os

import numpy as np
import pytest
from hypothesis import HealthCheck, settings

# deterministic by default; HYPOTHESIS_PROFILE=random explores new seeds
settings.register_profile("default", derandomize=True, deadline=None, max_examples=60,
                          suppress_health_check=[HealthCheck.too_slow])
settings.register_profile("random", deadline=None, max_examples=200,
                          suppress_health_check=[HealthCheck.too_slow], print_blob=True)
settings.load_profile(os.environ.get("HYPOTHESIS_PROFILE", "default"))


@pytest.fixture
def rng():
    seed = int(os.environ.get("CBSHELL_SEED", 20240611))
    print(f"seed = {seed}")
    return np.random.default_rng(seed)
