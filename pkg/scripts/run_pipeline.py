"""Run the full scoring experiment on the bundled drift dataset.

Equivalent to:
    dyngram pipeline --input data/drift_toy.txt --window unit \
        --mu 4 --seed 0 --trials 10 --baseline er --output-dir runs/drift

Artifacts land in runs/drift: ranking.csv plus serialized grammars and
update reports per transition.
"""

from __future__ import annotations

import os
import sys

from dyngram.cli import main

HERE = os.path.dirname(__file__)


def run(argv: list[str] | None = None) -> int:
    args = argv if argv is not None else sys.argv[1:]
    out_dir = args[0] if args else os.path.join(HERE, "..", "runs", "drift")
    return main(
        [
            "pipeline",
            "--input", os.path.join(HERE, "..", "data", "drift_toy.txt"),
            "--window", "unit",
            "--mu", "4",
            "--seed", "0",
            "--trials", "10",
            "--baseline", "er",
            "--output-dir", out_dir,
        ]
    )


if __name__ == "__main__":
    sys.exit(run())
