"""Writes sample_day.csv: one synthetic day of household demand at 6 s
resolution, with a morning and an evening peak. Deterministic."""

import csv
import math
import random
from pathlib import Path

SAMPLES = 24 * 3600 // 6


def bump(h, centre, width, height):
    return height * math.exp(-0.5 * ((h - centre) / width) ** 2)


def main():
    rng = random.Random(20140301)
    kettle = []
    for start_h in (7.1, 8.3, 13.0, 17.6, 20.4):
        kettle.append((start_h, start_h + 3 / 60))
    cooker = (17.9, 19.1)

    rows = []
    fridge_on = False
    for i in range(SAMPLES):
        h = i * 6 / 3600
        if i % 50 == 0 and rng.random() < 0.5:
            fridge_on = not fridge_on
        kw = 0.12 + (0.09 if fridge_on else 0.0)
        kw += bump(h, 7.8, 0.6, 0.9) + bump(h, 19.0, 1.3, 1.1) + bump(h, 12.8, 0.5, 0.3)
        if any(a <= h < b for a, b in kettle):
            kw += 2.6
        if cooker[0] <= h < cooker[1] and (i // 40) % 3 != 0:
            kw += 1.8
        kw *= 1.0 + 0.05 * (rng.random() - 0.5)
        rows.append((i, round(kw, 4)))

    out = Path(__file__).with_name("sample_day.csv")
    with out.open("w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow(("index", "kw"))
        w.writerows(rows)


if __name__ == "__main__":
    main()
