#!/usr/bin/env python3
"""Solve a CPLEX LP file with HiGHS and write a plain solution file.

Usage: highs_lp.py MODEL.lp SOLUTION.txt [time_limit_seconds]

The solution file starts with a status word (optimal, infeasible or
unknown) followed by one `name value` line per column.
"""
import sys

import highspy


def main() -> int:
    if len(sys.argv) < 3:
        print(__doc__, file=sys.stderr)
        return 2
    model, solution = sys.argv[1], sys.argv[2]
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    if len(sys.argv) > 3:
        h.setOptionValue("time_limit", float(sys.argv[3]))
    if h.readModel(model) != highspy.HighsStatus.kOk:
        print(f"cannot read {model}", file=sys.stderr)
        return 1
    h.run()
    status = h.getModelStatus()
    with open(solution, "w") as out:
        if status == highspy.HighsModelStatus.kOptimal:
            out.write("optimal\n")
            names = h.getLp().col_names_
            values = h.getSolution().col_value
            for name, value in zip(names, values):
                out.write(f"{name} {value:.10g}\n")
        elif status == highspy.HighsModelStatus.kInfeasible:
            out.write("infeasible\n")
        else:
            out.write(f"unknown {h.modelStatusToString(status)}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
