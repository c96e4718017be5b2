"""Power curves of COTT, Rayleigh, Kuiper and Watson on von Mises and Stephens alternatives.

Usage: python scripts/power.py [--full] [--seed S] [--threads T] [--out PATH]
Writes results/power.csv unless --out is given.
"""

import sys

from circot.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "results/power.csv"]
    sys.exit(main(["experiment", "--id", "power", *args]))
