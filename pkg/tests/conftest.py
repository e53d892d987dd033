import sys
from pathlib import Path

import pytest

from rfhnet.core import NetworkParams, NumericPolicy, per_km2_to_per_m2

# make the sibling oracle module importable regardless of invocation dir
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture
def baseline_params():
    """Reference operating point used throughout: 100 stations and 450
    users per km^2, unit transmit power, alpha 3, 50% conversion
    efficiency, 10 uJ activation energy, interference-limited."""
    return NetworkParams(lambda_b=per_km2_to_per_m2(100.0),
                         lambda_u=per_km2_to_per_m2(450.0),
                         p_s=1.0, alpha=3.0, a_eff=0.5, e_th=1e-5,
                         sigma2=0.0)


@pytest.fixture
def policy():
    return NumericPolicy()
