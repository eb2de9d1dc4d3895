#!/usr/bin/env python3
"""Solve an LP-format MILP with HiGHS and write an h2grid solution file.

Usage: highs_solve.py MODEL.lp SOLUTION.sol [--time-limit S] [--gap G]

Output format:
    status <optimal|feasible|infeasible|unbounded|error>
    objective <float>
    v<id> <float>        (one line per column)

After the MIP solve the integer columns are fixed at their rounded values and
the remaining LP is re-solved with tight tolerances, so the continuous part
satisfies every row to well below 1e-6 once the binaries are exact.
"""

import argparse
import sys

import highspy


def main() -> int:
    ap = argparse.ArgumentParser()
    ap.add_argument("lp")
    ap.add_argument("sol")
    ap.add_argument("--time-limit", type=float, default=600.0)
    ap.add_argument("--gap", type=float, default=1e-6)
    args = ap.parse_args()

    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("threads", 1)
    h.setOptionValue("random_seed", 0)
    h.setOptionValue("time_limit", args.time_limit)
    h.setOptionValue("mip_rel_gap", args.gap)
    h.setOptionValue("mip_feasibility_tolerance", 1e-9)
    h.setOptionValue("primal_feasibility_tolerance", 1e-9)
    if h.readModel(args.lp) == highspy.HighsStatus.kError:
        print(f"cannot read {args.lp}", file=sys.stderr)
        return 1
    h.run()
    ms = h.getModelStatus()
    S = highspy.HighsModelStatus
    if ms == S.kUnboundedOrInfeasible:
        h.setOptionValue("presolve", "off")
        h.run()
        ms = h.getModelStatus()

    lp = h.getLp()
    names = list(lp.col_names_)
    n = lp.num_col_
    has_sol = h.getInfo().primal_solution_status == 2  # feasible

    if ms == S.kOptimal:
        status = "optimal"
    elif ms == S.kInfeasible:
        status = "infeasible"
    elif ms == S.kUnbounded:
        status = "unbounded"
    elif has_sol and ms in (S.kTimeLimit, S.kIterationLimit, S.kSolutionLimit, S.kInterrupt):
        status = "feasible"
    else:
        status = "error"
        print(f"solver status: {h.modelStatusToString(ms)}", file=sys.stderr)

    with open(args.sol, "w") as out:
        out.write(f"status {status}\n")
        if status not in ("optimal", "feasible"):
            out.write("objective 0\n")
            return 0
        values = list(h.getSolution().col_value)
        objective = h.getInfo().objective_function_value

        integrality = list(lp.integrality_) if len(lp.integrality_) == n else []
        ints = [j for j in range(n) if integrality and integrality[j] != highspy.HighsVarType.kContinuous]
        if ints:
            for j in ints:
                v = float(round(values[j]))
                h.changeColBounds(j, v, v)
                h.changeColIntegrality(j, highspy.HighsVarType.kContinuous)
            h.setOptionValue("presolve", "off")
            h.run()
            if h.getModelStatus() == S.kOptimal:
                values = list(h.getSolution().col_value)
                objective = h.getInfo().objective_function_value
            else:
                print("polish step failed; keeping the MIP point", file=sys.stderr)

        out.write(f"objective {objective!r}\n")
        for name, v in zip(names, values):
            out.write(f"{name} {v!r}\n")
    return 0


if __name__ == "__main__":
    sys.exit(main())
