"""COT distance from the uniform law along von Mises and Stephens families.

Usage: python scripts/cot_curves.py [--full] [--seed S] [--threads T] [--out PATH]
Writes results/cot_curves.csv unless --out is given.
"""

import sys

from circot.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "results/cot_curves.csv"]
    sys.exit(main(["experiment", "--id", "cot_curves", *args]))
