"""The bbw command line on the bundled figure configs.

Writes its outputs to a temporary directory and prints a short summary.
Run: python3 demos/04_command_line.py
"""

import subprocess
import sys
import tempfile
from pathlib import Path

import numpy as np


def bbw(*args):
    res = subprocess.run([sys.executable, "-m", "bbw.cli", *args], capture_output=True, text=True)
    print(f"$ bbw {' '.join(args)}  -> exit {res.returncode}")
    if res.stderr:
        print("  " + res.stderr.strip().replace("\n", "\n  "))
    return res


with tempfile.TemporaryDirectory() as tmp:
    out = Path(tmp)
    bbw("basis", "--config", "figure1", "--out", str(out / "basis.csv"))
    bbw("project", "--config", "figure1", "--out", str(out / "error.csv"))
    bbw("wavelets", "--config", "figure2", "--out", str(out / "wavelets.csv"))
    data = out / "data.csv"
    np.savetxt(data, np.random.default_rng(1).standard_normal(15), header="value", comments="")
    bbw("forward", "--config", "figure2", "--family", "trig", "--data", str(data), "--out", str(out / "pyr.json"))
    bbw("inverse", "--config", "figure2", "--family", "trig", "--data", str(out / "pyr.json"), "--out", str(out / "back.csv"))
    back = np.loadtxt(out / "back.csv", skiprows=1)
    print(f"round trip through files: {np.max(np.abs(back - np.loadtxt(data, skiprows=1))):.1e}")
    print(bbw("check", "--config", "figure2").stdout.splitlines()[-1])
