import sys
from pathlib import Path

import pytest

REPO_ROOT = Path(__file__).resolve().parent.parent
DATA_DIR = REPO_ROOT / "data"
FIXTURES_DIR = DATA_DIR / "fixtures"
SCHEMAS_DIR = REPO_ROOT / "schemas"

# Make tests/oracle.py and tests/helpers.py importable as plain modules.
sys.path.insert(0, str(Path(__file__).resolve().parent))


@pytest.fixture(scope="session")
def published_sample_text() -> str:
    """The verbatim serialized trip-planning conversation shipped as a fixture."""
    return (FIXTURES_DIR / "trip_sample.txt").read_text(encoding="utf-8")


@pytest.fixture()
def tmp_jsonl(tmp_path):
    def write(name: str, lines):
        import json

        path = tmp_path / name
        with path.open("w", encoding="utf-8") as f:
            for line in lines:
                f.write(json.dumps(line, ensure_ascii=False) + "\n")
        return path

    return write
