"""KS distance between the scaled empirical COT law and its limit, with the m-out-of-n bootstrap arm.

Usage: python scripts/clt_convergence.py [--full] [--seed S] [--threads T] [--out PATH]
Writes results/clt.csv unless --out is given.
"""

import sys

from circot.cli import main

if __name__ == "__main__":
    args = sys.argv[1:]
    if "--out" not in args:
        args += ["--out", "results/clt.csv"]
    sys.exit(main(["experiment", "--id", "clt", *args]))
