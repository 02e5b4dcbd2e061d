import os

import pytest

REPO_ROOT = os.path.dirname(os.path.dirname(os.path.abspath(__file__)))

os.environ.setdefault("HBPC_REF_CACHE", os.path.join(REPO_ROOT, "refcache"))


def pytest_collection_modifyitems(config, items):
    if os.environ.get("HBPC_RUN_SLOW") == "1":
        return
    skip = pytest.mark.skip(reason="long-running; set HBPC_RUN_SLOW=1")
    for item in items:
        if "slow" in item.keywords:
            item.add_marker(skip)
