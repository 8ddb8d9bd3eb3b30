import json
from pathlib import Path

import pytest

from surfsim.config import from_dict


def make_config(**overrides):
    """Small scenario with every default overridable from a flat dict."""
    base = {
        "node_count": 10,
        "channel_count": 3,
        "radius": 0.4,
        "strategy": "surf",
        "pr": {"total_load": 0.9},
        "observation_window": 5,
        "max_slots": 120,
    }
    base.update(overrides)
    return from_dict(base)


@pytest.fixture
def write_config(tmp_path):
    def _write(name: str, raw: dict) -> Path:
        path = tmp_path / name
        path.write_text(json.dumps(raw), encoding="utf-8")
        return path
    return _write
