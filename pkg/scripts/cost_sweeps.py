"""Write the cost-model sweeps (n = 1..10 and L_s/L_p = 5..20) as CSV files."""

import argparse
from pathlib import Path

from dnapool import analytics


def main() -> None:
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("--out", type=Path, default=Path("sweeps"))
    args = ap.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)
    p = analytics.REFERENCE_PARAMS
    jobs = {"sweep_n.csv": analytics.sweep(p, "n", range(1, 11)),
            "sweep_ratio.csv": analytics.sweep(p.with_(n=3), "ratio", range(5, 21))}
    for name, rows in jobs.items():
        (args.out / name).write_text(analytics.to_csv(rows))
        print(args.out / name)


if __name__ == "__main__":
    main()
