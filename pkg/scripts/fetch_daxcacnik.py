#!/usr/bin/env python3
"""
Fetch the daily DAX / CAC40 / NIKKEI series (10 Oct 1991 to 30 Dec 1997,
1627 observations) and write them as a returns CSV usable by ``bayesdcc fit``.

The public source is a plain-text table. Its layout is not pinned down, so the
parser keeps every row whose fields are all numeric and lets you choose the
columns. If the selected columns look like index levels (all positive and
large) they are turned into percent log-returns, ``100 * diff(log(level))``.

Without network access, export the dataset elsewhere (for example
``write.csv(DaxCacNik, "DaxCacNik.csv", row.names = FALSE)`` in R) and pass it
with ``--from-file``.

Examples
--------
    python scripts/fetch_daxcacnik.py
    python scripts/fetch_daxcacnik.py --from-file ~/Downloads/DaxCacNik.csv
    python scripts/fetch_daxcacnik.py --columns 0 2 3 --output data/DaxCacNik.csv
"""
import argparse
import re
import sys
import urllib.request
from pathlib import Path

import numpy as np

URL = "http://robjhyndman.com/tsdldata/data/FVD1.dat"
DEFAULT_OUTPUT = Path(__file__).resolve().parents[1] / "data" / "DaxCacNik.csv"
EXPECTED_ROWS = 1627
NAMES = ["DAX", "CAC", "NIKKEI"]


def parse_table(text: str) -> np.ndarray:
    """Rows made only of numbers, split on commas, semicolons or whitespace."""
    rows = []
    for line in text.splitlines():
        fields = [f.strip().strip('"') for f in re.split(r"[,;\s]+", line.strip()) if f.strip()]
        if not fields:
            continue
        try:
            rows.append([float(f) for f in fields])
        except ValueError:
            continue  # header or comment line
    if not rows:
        raise ValueError("no numeric rows found")
    width = max(set(map(len, rows)), key=[len(r) for r in rows].count)
    return np.array([r for r in rows if len(r) == width])


def to_returns(table: np.ndarray, levels: str = "auto") -> np.ndarray:
    looks_like_levels = bool(np.all(table > 0) and table.min() > 50)
    if levels == "yes" or (levels == "auto" and looks_like_levels):
        return 100.0 * np.diff(np.log(table), axis=0)
    return table


def main(argv=None) -> int:
    ap = argparse.ArgumentParser(description=__doc__.split("\n\n")[0])
    ap.add_argument("--url", default=URL)
    ap.add_argument("--from-file", help="read a local copy instead of downloading")
    ap.add_argument("--columns", type=int, nargs=3, help="0-based columns for DAX, CAC, NIKKEI")
    ap.add_argument("--levels", choices=("auto", "yes", "no"), default="auto",
                    help="whether the source holds index levels (converted to returns)")
    ap.add_argument("--output", default=str(DEFAULT_OUTPUT))
    args = ap.parse_args(argv)

    if args.from_file:
        text = Path(args.from_file).expanduser().read_text(encoding="utf-8", errors="replace")
    else:
        try:
            with urllib.request.urlopen(args.url, timeout=30) as resp:
                text = resp.read().decode("utf-8", errors="replace")
        except OSError as exc:
            print(f"download failed ({exc}); use --from-file with a local copy", file=sys.stderr)
            return 1

    table = parse_table(text)
    if args.columns:
        table = table[:, args.columns]
    elif table.shape[1] != 3:
        print(f"source has {table.shape[1]} numeric columns; choose three with --columns", file=sys.stderr)
        return 1
    returns = to_returns(table, args.levels)
    if returns.shape[0] != EXPECTED_ROWS:
        print(f"warning: {returns.shape[0]} rows, expected {EXPECTED_ROWS}", file=sys.stderr)

    out = Path(args.output)
    out.parent.mkdir(parents=True, exist_ok=True)
    np.savetxt(out, returns, delimiter=",", header=",".join(NAMES), comments="", fmt="%.17g")
    print(f"wrote {returns.shape[0]} x {returns.shape[1]} returns to {out}")
    return 0


if __name__ == "__main__":
    sys.exit(main())
