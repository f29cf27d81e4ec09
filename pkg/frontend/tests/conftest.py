"""Generate real input CSVs once per session via the producing CLI."""

import subprocess
import sys

import pytest


def _run_kvlink(*args):
    subprocess.run(
        [sys.executable, "-m", "kvlink.cli", *args],
        check=True,
        capture_output=True,
        text=True,
    )


@pytest.fixture(scope="session")
def corpus(tmp_path_factory):
    """Directory holding one CSV of every schema the renderers accept."""
    root = tmp_path_factory.mktemp("corpus")
    _run_kvlink("compare", "--axis", "snr", "--grid=-10:30:9",
                "--out", str(root / "ratio.csv"))
    _run_kvlink("jmsra", "--agents", "4", "--seed", "7",
                "--out", str(root / "run"))
    _run_kvlink("sweep", "--axis", "bandwidth", "--grid", "1e9,2e9",
                "--agents", "4", "--trials", "1", "--seed", "3",
                "--out", str(root / "sweep.csv"))
    _run_kvlink("multiround", "--rounds", "3", "--agents", "4",
                "--policy", "all", "--seed", "2", "--out", str(root / "mr"))
    return root
