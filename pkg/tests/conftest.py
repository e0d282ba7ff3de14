import os
import sys
from pathlib import Path

import pytest

# Repository root on sys.path so `engine` and `client` import without installation
ROOT = Path(__file__).resolve().parent.parent
sys.path.insert(0, str(ROOT))

# Keep the CLI log out of the repository during test runs
os.environ.setdefault("NORMCHAR_LOG_FILE", str(Path(os.environ.get("TMPDIR", "/tmp")) / "normchar-tests.log"))


@pytest.fixture
def fixtures_dir() -> Path:
    return ROOT / "fixtures"
