import sys
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from eprb.core import PhysicalConfig, derive_params


@pytest.fixture(scope="session")
def cfg():
    return PhysicalConfig()


@pytest.fixture(scope="session")
def d(cfg):
    return derive_params(cfg)
