"""Write the CSV/JSON data behind every figure into one directory."""
import argparse
import sys

from darboux_lattice.cli import main

if __name__ == "__main__":
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out-dir", default="figdata")
    ap.add_argument("--only", default="all", help="single figure id, e.g. fig1a")
    args = ap.parse_args()
    sys.exit(main(["figdata", args.only, "--out-dir", args.out_dir]))
