"""Critical values of the COT test for von Mises nulls.

Usage: python scripts/table1.py [--full] [--seed S] [--threads T] [--out PATH]
Writes results/table1.csv unless --out is given.
"""

import sys

from circot.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "results/table1.csv"]
    sys.exit(main(["experiment", "--id", "table1", *args]))
