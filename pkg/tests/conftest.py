import hashlib
import os

import numpy as np
import pytest

from garmentwarp.landmarks import ControlPairs


def random_config(rng, n, min_sep=0.05, jitter=0.05):
    """Well-spread control points in the unit square plus jittered targets."""
    while True:
        src = rng.uniform(0.05, 0.95, size=(n, 2))
        d = np.linalg.norm(src[:, None] - src[None], axis=-1) + np.eye(n)
        centered = src - src.mean(axis=0)
        if d.min() >= min_sep and np.linalg.svd(centered, compute_uv=False)[-1] > 0.05:
            break
    return ControlPairs(src, src + rng.normal(0.0, jitter, size=(n, 2)))


@pytest.fixture
def rng():
    return np.random.default_rng(12345)


def tree_digest(root):
    """SHA-256 over every file's relative path and bytes, in sorted order."""
    h = hashlib.sha256()
    for dirpath, dirnames, files in os.walk(root):
        dirnames.sort()
        for name in sorted(files):
            path = os.path.join(dirpath, name)
            h.update(os.path.relpath(path, root).encode())
            with open(path, "rb") as fh:
                h.update(fh.read())
    return h.hexdigest()


# acceptance criteria report: one line per criterion, printed after the run
ACCEPTANCE_RESULTS = {}


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for num in sorted(ACCEPTANCE_RESULTS):
        terminalreporter.write_line(ACCEPTANCE_RESULTS[num])
