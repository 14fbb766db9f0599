"""Run the four convergence studies (two examples, regular and unstructured
meshes) and write ``results/<name>/study.csv`` plus ``results/tables.md``.

    python scripts/run_studies.py [--out results] [--sigma 1.0]

Regular studies use grids 20, 40, 80, 160 (441 to 25921 dof); unstructured
ones read ``data/meshes/unstructured{1..4}.msh``
(see ``make_unstructured_meshes.py``).
"""
from __future__ import annotations

import argparse
from pathlib import Path

from csv_to_table import markdown

from rfem.cli import main as rfem

ROOT = Path(__file__).resolve().parents[1]
MESHES = ",".join(str(ROOT / "data" / "meshes" / f"unstructured{k}.msh") for k in range(1, 5))

STUDIES = {
    "exm1_regular": ("exm1", "regular:20,40,80,160", "Example 1, regular mesh"),
    "exm1_unstructured": ("exm1", f"import:{MESHES}", "Example 1, unstructured mesh"),
    "exm2_regular": ("exm2", "regular:20,40,80,160", "Example 2, regular mesh"),
    "exm2_unstructured": ("exm2", f"import:{MESHES}", "Example 2, unstructured mesh"),
}


def main(argv=None):
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", type=Path, default=ROOT / "results")
    parser.add_argument("--sigma", type=float, default=1.0)
    parser.add_argument("--only", choices=sorted(STUDIES), nargs="*")
    args = parser.parse_args(argv)
    sections = []
    for name in args.only or STUDIES:
        problem, mesh, title = STUDIES[name]
        out = args.out / name
        code = rfem(["study", "--problem", problem, "--mesh", mesh,
                     "--sigma", str(args.sigma), "--out", str(out)])
        if code:
            raise SystemExit(code)
        sections.append(markdown(out / "study.csv", title))
    text = "\n\n".join(sections) + "\n"
    (args.out / "tables.md").write_text(text)
    print(text)


if __name__ == "__main__":
    main()
