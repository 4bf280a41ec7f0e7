"""Solve exported MPS programs with HiGHS and record the optimal values.

Usage: python3 scripts/highs_crosscheck.py OUT.json NAME=FILE.mps [NAME=FILE.mps ...]

Needs the `highspy` package. The output maps each name to its objective value in the
program's own sense, plus the HiGHS version used.
"""

import json
import sys

import highspy


def solve(path):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    h.setOptionValue("dual_feasibility_tolerance", 1e-9)
    if h.readModel(path) != highspy.HighsStatus.kOk:
        raise SystemExit(f"cannot read {path}")
    h.run()
    status = h.modelStatusToString(h.getModelStatus())
    if status != "Optimal":
        raise SystemExit(f"{path}: {status}")
    return h.getInfo().objective_function_value


def main():
    if len(sys.argv) < 3:
        raise SystemExit(__doc__)
    values = {}
    for arg in sys.argv[2:]:
        name, path = arg.split("=", 1)
        values[name] = solve(path)
        print(f"{name} {values[name]:.12f}")
    doc = {"solver": "HiGHS " + highspy.Highs().version(), "objective": values}
    with open(sys.argv[1], "w") as f:
        json.dump(doc, f, indent=2)
        f.write("\n")


if __name__ == "__main__":
    main()
