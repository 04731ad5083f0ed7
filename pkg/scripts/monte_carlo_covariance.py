"""Monte Carlo check of the BLUE covariance at an optimal exact design.

    python3 scripts/monte_carlo_covariance.py --problem problems/line_intercept_A.json
"""

import argparse

import numpy as np

from rcrdesign import io as dio
from rcrdesign.estimate import covariance_check
from rcrdesign.solver import round_to_exact, solve


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--problem", required=True)
    parser.add_argument("--reps", type=int, default=100_000)
    parser.add_argument("--seed", type=int, default=0)
    args = parser.parse_args()
    prob, config = dio.load_problem(args.problem)
    report = solve(prob, config)
    counts = [round_to_exact(d, g.m) for g, d in zip(prob.groups, report.designs)]
    chk = covariance_check(list(prob.groups), counts, args.reps, args.seed)
    np.set_printoptions(precision=6, suppress=True)
    print("exact designs (counts per grid point):", [c.tolist() for c in counts])
    print("analytic covariance\n", chk.analytic)
    print("empirical covariance\n", chk.empirical)
    print("z-scores\n", chk.z_scores)
    worst = float(np.abs(chk.z_scores).max())
    print(f"largest |z| = {worst:.2f} ({'ok' if worst < 5 else 'FAIL'} at 5 standard errors)")


if __name__ == "__main__":
    main()
