import sys
import warnings
from pathlib import Path

import pytest

sys.path.insert(0, str(Path(__file__).parent))

from szgraph.regularity import EpsilonRangeWarning  # noqa: E402


@pytest.fixture(autouse=True)
def _quiet_eps_warning():
    # most tests deliberately run with eps above the proof range
    with warnings.catch_warnings():
        warnings.simplefilter("ignore", EpsilonRangeWarning)
        yield
