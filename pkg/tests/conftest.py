"""Shared test configuration.

Checks against the published MLQE-PE/HJQE datasets need the tag files on
disk. Point QE_DATA_DIR at a directory laid out as::

    $QE_DATA_DIR/
        mlqe-pe/{en-de,en-zh}/{train,dev}.mt       one MT sentence per line
        mlqe-pe/{en-de,en-zh}/{train,dev}.tags     matching OK/BAD tag lines
        hjqe/{en-de,en-zh}/{train,dev,test}.mt
        hjqe/{en-de,en-zh}/{train,dev,test}.tags

Tag lines may be token-only (n tags) or interleaved with gap tags
(2n + 1 tags); the gap-level statistics require the interleaved form.
Without QE_DATA_DIR those tests are skipped and report the reason.
"""

import os
from pathlib import Path

import pytest

QE_DATA_DIR_HELP = (
    "set QE_DATA_DIR to a directory containing "
    "{mlqe-pe,hjqe}/{en-de,en-zh}/<split>.mt and <split>.tags files "
    "(splits: train/dev for mlqe-pe, train/dev/test for hjqe; "
    "tags interleaved with gap tags, 2n+1 per line)"
)


def require_qe_data() -> Path:
    """Return the external dataset root or skip the calling test."""
    root = os.environ.get("QE_DATA_DIR", "")
    if not root:
        pytest.skip(f"QE_DATA_DIR not set; {QE_DATA_DIR_HELP}")
    path = Path(root)
    if not path.is_dir():
        pytest.skip(f"QE_DATA_DIR={root} is not a directory; {QE_DATA_DIR_HELP}")
    return path
