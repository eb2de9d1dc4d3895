#!/usr/bin/env python3
"""Regenerate data/ieee13_forecast.csv (kW, 15-minute steps from 16:00).

Wind: hand-drawn ramp from evening lows to a plateau and back down, which
leaves a deficit window at the end where stored hydrogen is needed.
Loads: base kW times 0.38 + 0.10 sin(pi t / 23).
"""

import argparse
import csv
import math

LOADS = [("load_632", 200), ("load_634", 400), ("load_645", 170), ("load_646", 230), ("load_652", 128),
         ("load_671", 1155), ("load_675", 843), ("load_692", 170), ("load_611", 170)]

WIND_633 = [260, 240, 250, 280, 520, 800, 1050, 1120, 1150, 1180, 1160, 1140,
            1170, 1190, 1180, 1150, 1120, 900, 700, 520, 330, 300, 280, 270]
WIND_680 = [240, 230, 220, 250, 480, 760, 1000, 1080, 1110, 1140, 1120, 1100,
            1130, 1150, 1140, 1110, 1080, 880, 680, 500, 310, 290, 270, 250]


def main() -> None:
    ap = argparse.ArgumentParser()
    ap.add_argument("out")
    args = ap.parse_args()
    with open(args.out, "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(["timestamp", "wind_633", "wind_680"] + [name for name, _ in LOADS])
        for t in range(24):
            stamp = f"2024-01-15T{16 + t // 4:02d}:{15 * (t % 4):02d}:00"
            factor = 0.38 + 0.10 * math.sin(math.pi * t / 23)
            w.writerow([stamp, WIND_633[t], WIND_680[t]] + [round(factor * p, 1) for _, p in LOADS])


if __name__ == "__main__":
    main()
