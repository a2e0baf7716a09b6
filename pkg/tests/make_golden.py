"""Regenerate the DP table dumps in ``golden/`` (run by hand, not by pytest)."""

from pathlib import Path

import numpy as np

from segword.dp import dp_tables, format_tables

CASES = {
    "zeros_T3_S2_V2": (np.zeros((3, 2, 2)), [0, 1]),
    "ramp_T4_S2_V3": (np.arange(24, dtype=float).reshape(4, 2, 3) / 10 - 1, [2, 0]),
    "random_T5_S3_V2": (np.random.default_rng(7).standard_normal((5, 3, 2)), [1, 0, 1]),
}


def main():
    out = Path(__file__).parent / "golden"
    out.mkdir(exist_ok=True)
    for name, (W, L) in CASES.items():
        np.save(out / f"{name}.W.npy", W)
        (out / f"{name}.labels").write_text(" ".join(map(str, L)) + "\n")
        (out / f"{name}.tables").write_text(format_tables(dp_tables(W, L)))


if __name__ == "__main__":
    main()
