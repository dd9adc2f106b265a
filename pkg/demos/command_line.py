"""
The same pipeline through the command line
==========================================

Writes synthetic PGM images and manifests, then runs extract, pairs,
select and eval as subprocesses. Every step leaves its resolved settings
next to its output as JSON.
"""

import subprocess
import sys
import tempfile
from pathlib import Path


def sparsesel(*args):
    cmd = [sys.executable, "-m", "sparsesel.cli", *map(str, args)]
    print("$ sparsesel", " ".join(map(str, args)))
    print(subprocess.run(cmd, check=True, capture_output=True, text=True).stdout.strip())


work = Path(tempfile.mkdtemp())
sparsesel("synth", "--instances", 0, "--faces-out", work / "faces")
sparsesel("extract", "--manifest", work / "faces/train.csv", "--out", work / "train")
sparsesel("extract", "--manifest", work / "faces/probe.csv", "--out", work / "probe")
sparsesel("pairs", "--features", work / "train", "--ratio", "1:7", "--out", work / "pairs.sppm")
sparsesel("select", "--pairs", work / "pairs.sppm", "--method", "shk", "--solver", "omp",
          "--max-atoms", 100, "--max-outer", 20, "--out", work / "model.txt")
sparsesel("eval", "--model", work / "model.txt", "--gallery", work / "train",
          "--probe", work / "probe", "--out", work / "predictions.csv")
print((work / "model.txt").read_text().splitlines()[:4])
