"""Print a study CSV as a markdown table with one column per mesh.

    python scripts/csv_to_table.py results/exm1_regular/study.csv
"""
from __future__ import annotations

import argparse
import csv
from pathlib import Path

ROWS = [
    ("l2_u", "order_u", "‖u − u_h‖"),
    ("h1_u", "order_h1", "‖∇u − ∇u_h‖"),
    ("l2_rg", "order_rg", "‖∇u − G(∇u_h)‖"),
    ("l2_rl", "order_rl", "‖Δu − ∇·G(∇u_h)‖"),
]


def _order(text: str) -> str:
    try:
        return f"{float(text):.2f}"
    except ValueError:
        return text  # "--" or "exact"


def markdown(path: Path, title: str | None = None) -> str:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    lines = []
    if title:
        lines += [f"**{title}**", ""]
    lines.append("| Dof | " + " | ".join(r["dof"] for r in rows) + " |")
    lines.append("|---" * (len(rows) + 1) + "|")
    for err, order, label in ROWS:
        lines.append(f"| {label} | " + " | ".join(f"{float(r[err]):.5f}" for r in rows) + " |")
        lines.append("| order | " + " | ".join(_order(r[order]) for r in rows) + " |")
    return "\n".join(lines)


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("csv", type=Path, nargs="+")
    args = parser.parse_args(argv)
    print("\n\n".join(markdown(p, str(p)) for p in args.csv))


if __name__ == "__main__":
    main()
