"""Run the adaptive examples (L-shape, slit, f = 1 polygon) and summarise
each history.

    python scripts/run_adaptive.py [--out results/adaptive] [--max-dof 50000]

Every run writes ``history.csv``, VTK snapshots at the requested levels and
``final.vtk`` into its own directory.
"""
from __future__ import annotations

import argparse
import csv
import time
from pathlib import Path

from rfem.cli import main as rfem

ROOT = Path(__file__).resolve().parents[1]
PROBLEMS = ("lshape", "slit", "polygon")


def summarise(path: Path) -> str:
    with open(path, newline="") as fh:
        rows = list(csv.DictReader(fh))
    first, last = rows[0], rows[-1]
    eta0, eta1 = float(first["eta"]), float(last["eta"])
    text = (f"{len(rows)} levels, dof {first['dof']} -> {last['dof']}, "
            f"eta {eta0:.3e} -> {eta1:.3e} (x{eta0 / eta1:.1f})")
    if last["exact_laplacian_error"]:
        e0, e1 = float(first["exact_laplacian_error"]), float(last["exact_laplacian_error"])
        eff = [float(r["eta"]) / float(r["exact_laplacian_error"])
               for r in rows if int(r["dof"]) > 2000]
        text += f", error {e0:.3e} -> {e1:.3e} (x{e0 / e1:.1f})"
        if eff:
            text += f", effectivity past 2000 dof in [{min(eff):.2f}, {max(eff):.2f}]"
    return text


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=ROOT / "results" / "adaptive")
    parser.add_argument("--max-dof", type=int, default=50_000)
    parser.add_argument("--snapshots", default="0,20,40")
    parser.add_argument("--problems", nargs="*", choices=PROBLEMS, default=list(PROBLEMS))
    args = parser.parse_args(argv)
    for name in args.problems:
        out = args.out / name
        t0 = time.perf_counter()
        code = rfem(["adapt", "--problem", name, "--max-dof", str(args.max_dof),
                     "--levels", args.snapshots, "--out", str(out)])
        if code:
            raise SystemExit(code)
        print(f"{name}: {summarise(out / 'history.csv')}; {time.perf_counter() - t0:.0f} s")


if __name__ == "__main__":
    main()
