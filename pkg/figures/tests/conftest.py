import sys
from pathlib import Path

import pytest

FIG_DIR = Path(__file__).resolve().parents[1]
if str(FIG_DIR) not in sys.path:
    sys.path.insert(0, str(FIG_DIR))

FIXTURES = Path(__file__).resolve().parent / "fixtures"


@pytest.fixture
def fixtures():
    return FIXTURES


@pytest.fixture
def copy_fixture(tmp_path):
    """Copy a fixture run directory into tmp_path for mutation."""
    import shutil

    def _copy(name):
        dst = tmp_path / name
        shutil.copytree(FIXTURES / name, dst)
        return dst

    return _copy
