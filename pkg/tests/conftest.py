import pytest
import sys
import os
from unittest.mock import patch

sys.path.insert(0, os.path.abspath(os.path.join(os.path.dirname(__file__), "..")))


@pytest.fixture(autouse=True)
def mock_env_vars(tmp_path):
    test_env = {
        "QIEBENCH_LOG_FILE": str(tmp_path / "bench.log"),
        "QIEBENCH_LOG_LEVEL": "INFO",
        "QIEBENCH_JOBS": "1",
        "QIEBENCH_OUT_DIR": str(tmp_path / "results"),
    }

    with patch.dict("os.environ", test_env):
        yield
