"""The command line end to end in a scratch directory.

gen -> pretrain -> train (from the pre-trained checkpoint) -> decode -> eval.

Run: python3 demos/05_cli_roundtrip.py
"""

import subprocess
import sys
import tempfile
from pathlib import Path


def segword(*args):
    cmd = [sys.executable, "-m", "segword.cli", *map(str, args)]
    print("$ segword " + " ".join(map(str, args)))
    out = subprocess.run(cmd, capture_output=True, text=True)
    lines = out.stdout.strip().splitlines()
    shown = [line for line in lines[:-6] if line.startswith("corpus")] + lines[-6:]
    if shown:
        print("\n".join(shown))
    if out.returncode:
        print(out.stderr, file=sys.stderr)
        sys.exit(out.returncode)
    return out.stdout


with tempfile.TemporaryDirectory() as tmp:
    root = Path(tmp)
    data = root / "data"
    segword("gen", "--out", data, "--vocab-size", "8", "--n-train", "120", "--n-dev", "30", "--noise", "0.1", "--seed", "2")
    conf = data / "run.conf"
    segword("pretrain", "--config", conf, "--set", f"out={root / 'emb.sgw'}", "--set", "pretrain.max_steps=300")
    segword("train", "--config", conf, "--init", root / "emb.sgw", "--agwe-reg", "0.03",
            "--set", f"out={root / 'rec.sgw'}", "--set", "epochs=8", "--set", "lr=0.01")
    segword("decode", "--model", root / "rec.sgw", "--data", data / "test.manifest", "--out", root / "test.hyp")
    segword("eval", "--hyp", root / "test.hyp", "--ref", data / "test.ref", "--counts", data / "vocab.txt")
