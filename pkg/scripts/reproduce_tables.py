"""Solve both straight-line tables and compare with the reference optima.

    python3 scripts/reproduce_tables.py [--out results/]
"""

import argparse
import os
import time

from rcrdesign import io as dio
from rcrdesign.straight_line import TABLE_HEADER, TABLES, reproduce_table


def main():
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--out", help="directory for tableN.csv")
    args = parser.parse_args()
    worst = 0.0
    for table_id in sorted(TABLES):
        start = time.perf_counter()
        rows = reproduce_table(table_id)
        elapsed = time.perf_counter() - start
        text = dio.table_csv(TABLE_HEADER, [r.columns() for r in rows])
        print(f"# table {table_id}  ({elapsed:.2f} s)")
        print(text, end="")
        for r in rows:
            dev = max(abs(r.w1 - r.reference_w1), abs(r.w2 - r.reference_w2))
            worst = max(worst, dev)
            if dev > 5e-4 or r.status != "converged":
                print(f"  case {r.case}: {r.status}, deviation {dev:.4f}")
        if args.out:
            os.makedirs(args.out, exist_ok=True)
            dio.write_atomic(os.path.join(args.out, f"table{table_id}.csv"), text)
    print(f"largest deviation from the reference optima: {worst:.2e}")


if __name__ == "__main__":
    main()
