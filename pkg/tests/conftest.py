import json
from pathlib import Path

import pytest

from bngop import reference_params


@pytest.fixture(scope="session")
def params():
    return reference_params()


@pytest.fixture(scope="session")
def params_lam0():
    return reference_params(lambda_star=0.0)


@pytest.fixture(scope="session")
def golden():
    path = Path(__file__).parent / "golden" / "golden.json"
    with open(path) as fh:
        return json.load(fh)
