#!/usr/bin/env python3
"""Generate the bundled honey-production table.

The table mirrors the column layout of the public US honey production
dataset (state, numcol, yieldpercol, totalprod, stocks, priceperlb,
prodvalue, year) for 44 states over 1998-2012. Values are synthetic and
seeded; a handful of outliers are planted so the anomaly detector has
something to find.

Usage: python3 scripts/gen_honey.py > crates/core/data/honey.csv
"""
import csv
import random
import sys

STATES = [
    "Alabama", "Arizona", "Arkansas", "California", "Colorado", "Florida",
    "Georgia", "Hawaii", "Idaho", "Illinois", "Indiana", "Iowa", "Kansas",
    "Kentucky", "Louisiana", "Maine", "Maryland", "Michigan", "Minnesota",
    "Mississippi", "Missouri", "Montana", "Nebraska", "Nevada", "New Jersey",
    "New Mexico", "New York", "North Carolina", "North Dakota", "Ohio",
    "Oklahoma", "Oregon", "Pennsylvania", "South Carolina", "South Dakota",
    "Tennessee", "Texas", "Utah", "Vermont", "Virginia", "Washington",
    "West Virginia", "Wisconsin", "Wyoming",
]
YEARS = list(range(1998, 2013))

# (state, column, year) -> replacement value
PLANTED = {
    ("Alabama", "priceperlb", 2003): 5.85,
    ("Texas", "yieldpercol", 2006): 12,
    ("California", "yieldpercol", 2009): 9,
    ("Florida", "numcol", 2004): 610000,
    ("North Dakota", "stocks", 2011): 61000000,
}
PINNED = {
    ("Alabama", "priceperlb", 2010): 2.40,
}


def main():
    rng = random.Random(20200401)
    assert len(STATES) == 44
    out = csv.writer(sys.stdout, lineterminator="\n")
    out.writerow(["state", "numcol", "yieldpercol", "totalprod", "stocks",
                  "priceperlb", "prodvalue", "year"])
    for state in STATES:
        base_col = rng.choice([3, 5, 8, 12, 20, 35, 60, 110, 230, 420]) * 1000
        base_col += rng.randrange(0, 1000, 1000) + rng.randrange(0, 5) * 1000
        base_yield = rng.randint(40, 95)
        base_price = round(rng.uniform(0.55, 1.25), 2)
        growth = rng.uniform(0.055, 0.085)
        stock_frac = rng.uniform(0.15, 0.45)
        for i, year in enumerate(YEARS):
            numcol = int(round(base_col * rng.uniform(0.85, 1.15) / 1000.0)) * 1000
            numcol = PLANTED.get((state, "numcol", year), numcol)
            yieldpercol = max(20, int(round(base_yield + rng.uniform(-9, 9))))
            yieldpercol = PLANTED.get((state, "yieldpercol", year), yieldpercol)
            totalprod = numcol * yieldpercol
            stocks = int(round(totalprod * stock_frac * rng.uniform(0.8, 1.2) / 1000.0)) * 1000
            stocks = PLANTED.get((state, "stocks", year), stocks)
            price = base_price * (1.0 + growth) ** i * rng.uniform(0.95, 1.05)
            price = round(price, 2)
            price = PLANTED.get((state, "priceperlb", year), price)
            price = PINNED.get((state, "priceperlb", year), price)
            prodvalue = int(round(totalprod * price))
            out.writerow([state, numcol, yieldpercol, totalprod, stocks,
                          f"{price:.2f}", prodvalue, year])


if __name__ == "__main__":
    main()
