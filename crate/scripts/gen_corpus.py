#!/usr/bin/env python3
"""Regenerates crates/core/data/corpus.jsonl from the honey CSV.

Every expected value is computed here with pandas/numpy from the raw table, so
the corpus does not depend on the Rust executor.

    python3 scripts/gen_corpus.py [--check]
"""

import argparse
import json
import sys
from pathlib import Path

import numpy as np
import pandas as pd

ROOT = Path(__file__).resolve().parent.parent
DATA = ROOT / "crates" / "core" / "data"
OUT = DATA / "corpus.jsonl"

df = pd.read_csv(DATA / "honey.csv")
codes = {s["name"]: s["code"] for s in json.loads((DATA / "us_states.json").read_text())}
LAST_YEAR = int(df.year.max())
CURRENCY = {"priceperlb", "prodvalue"}


def tol(column):
    return {"abs": 0.005} if column in CURRENCY else {"rel": 1e-6}


def rows(state=None, year=None):
    d = df
    if state is not None:
        d = d[d.state == state]
    if year is not None:
        d = d[d.year == year]
    return d


def cell(state, year, column):
    d = rows(state, year)
    assert len(d) == 1, (state, year, len(d))
    return float(d[column].iloc[0])


def scalar(value, column):
    return {"kind": "scalar", "value": float(value), "tolerance": tol(column)}


def series(s):
    return {"kind": "series", "value": [[str(k), float(v)] for k, v in s.items()]}


def geo(s):
    return {"kind": "geo_series", "value": [[codes[k], float(v)] for k, v in s.items()]}


def table(d):
    cells = []
    for r in d.itertuples(index=False):
        cells.append([v if isinstance(v, str) else float(v) for v in r])
    return {"kind": "table", "value": cells}


def forecast(s, horizon, column):
    t = np.array([float(k) for k in s.index])
    y = s.to_numpy(dtype=float)
    slope, intercept = np.polyfit(t, y, 1)
    last = int(t.max())
    predicted = [[str(last + h), float(intercept + slope * (last + h))] for h in range(1, horizon + 1)]
    return {"kind": "forecast", "value": {"predicted": predicted}, "tolerance": tol(column)}


def anomalies(s, threshold=2.5):
    z = (s - s.mean()) / s.std(ddof=0)
    return {"kind": "anomaly_report", "value": {"flagged": [str(k) for k in s[z.abs() > threshold].index]}}


def by_year(state, column):
    return rows(state).set_index("year")[column].sort_index()


def top(s, k, descending=True):
    d = pd.DataFrame({"label": s.index, "value": s.to_numpy()})
    d = d.sort_values(["value", "label"], ascending=[not descending, True], kind="mergesort")
    return d.head(k).set_index("label")["value"]


def per_state(year, column, fn="sum"):
    return rows(year=year).groupby("state")[column].agg(fn).sort_index()


SIMPLE = [
    (
        [
            "What was the price of honey in Alabama in 2010?",
            "How much was honey in Alabama in 2010?",
            "What did honey cost in Alabama ten years ago?",
            "Show me the average price of honey in AL in 2010",
        ],
        scalar(cell("Alabama", 2010, "priceperlb"), "priceperlb"),
        ["text_answer", "kpi_card"],
        "lookup of one cell; 'ten years ago' resolves against reference year 2020",
    ),
    (
        [
            "How many honey bee colonies did Florida have in 2004?",
            "Number of colonies in Florida in 2004",
            "What was the colony count of Florida in 2004?",
            "How many colonies were there in FL in 2004?",
        ],
        scalar(cell("Florida", 2004, "numcol"), "numcol"),
        ["kpi_card", "text_answer"],
        "lookup of one cell",
    ),
    (
        [
            "What was the total honey production in 2010?",
            "How much honey was produced in 2010 in total?",
            "Total production of honey in 2010",
            "What is the sum of honey production across all states in 2010?",
        ],
        scalar(rows(year=2010).totalprod.sum(), "totalprod"),
        ["kpi_card", "text_answer"],
        "sum over all states",
    ),
    (
        [
            "What was the yield per colony in California in 2008?",
            "How much honey did a colony yield in California in 2008?",
            "Yield per colony of California in 2008",
            "What was the honey yield per colony in CA in 2008?",
        ],
        scalar(cell("California", 2008, "yieldpercol"), "yieldpercol"),
        ["kpi_card", "text_answer"],
        "lookup of one cell",
    ),
    (
        [
            "What were the honey stocks of North Dakota in 2011?",
            "How much honey did North Dakota hold in stock in 2011?",
            "Stocks of honey in North Dakota in 2011",
            "What was the stock of honey in ND in 2011?",
        ],
        scalar(cell("North Dakota", 2011, "stocks"), "stocks"),
        ["kpi_card", "text_answer"],
        "lookup of one cell",
    ),
    (
        [
            "What was the production value of honey in Texas in 2005?",
            "How much was the honey production of Texas worth in 2005?",
            "Value of honey production in Texas in 2005",
            "What was the value of the honey produced in TX in 2005?",
        ],
        scalar(cell("Texas", 2005, "prodvalue"), "prodvalue"),
        ["kpi_card", "text_answer"],
        "lookup of one cell",
    ),
    (
        [
            "What was the average price of honey across all states in 2010?",
            "What was the mean honey price in 2010?",
            "Average price per pound of honey in 2010",
            "How much did honey cost on average in 2010?",
        ],
        scalar(rows(year=2010).priceperlb.mean(), "priceperlb"),
        ["kpi_card", "text_answer"],
        "unweighted mean over states",
    ),
    (
        [
            "How did the honey price in Florida change over the years?",
            "Show the price of honey in Florida per year",
            "Honey price in Florida by year",
            "What was the price of honey in Florida each year?",
        ],
        series(by_year("Florida", "priceperlb")),
        ["line_chart", "bar_chart"],
        "one state, one column, every year",
    ),
    (
        [
            "How many colonies did Texas have each year?",
            "Show the number of colonies in Texas per year",
            "Number of honey bee colonies in Texas by year",
            "Colonies in Texas over the years",
        ],
        series(by_year("Texas", "numcol")),
        ["line_chart", "bar_chart"],
        "one state, one column, every year",
    ),
    (
        [
            "What was the average honey price per state in 2010?",
            "Show the price of honey for each state in 2010",
            "Honey price by state in 2010",
            "How much did honey cost in every state in 2010?",
        ],
        geo(per_state(2010, "priceperlb", "mean")),
        ["geo_heatmap", "bar_chart"],
        "one value per state",
    ),
    (
        [
            "What was the total honey production per state in 2012?",
            "Show honey production for each state in 2012",
            "Honey production by state in 2012",
            "How much honey did every state produce in 2012?",
        ],
        geo(per_state(2012, "totalprod", "sum")),
        ["geo_heatmap", "bar_chart"],
        "one value per state",
    ),
    (
        [
            "What was the total honey production per year?",
            "Show the total production of honey for each year",
            "Total honey production by year",
            "How much honey was produced in total each year?",
        ],
        series(df.groupby("year").totalprod.sum().sort_index()),
        ["line_chart", "bar_chart"],
        "national total per year",
    ),
    (
        [
            "Show all records of Hawaii in 2012",
            "List the data for Hawaii in 2012",
            "Show me the table for Hawaii in 2012",
            "Give me every entry of HI in 2012",
        ],
        table(rows("Hawaii", 2012)),
        ["table_view"],
        "one full row",
    ),
    (
        [
            "Which states produced more than 20000000 lb of honey in 2010?",
            "List the states with a production above 20000000 pounds in 2010",
            "Show states whose honey production exceeded 20000000 lb in 2010",
            "In 2010, which states had a total production greater than 20000000?",
        ],
        table(rows(year=2010)[lambda d: d.totalprod > 20_000_000]),
        ["table_view"],
        "numeric comparison filter keeps whole rows",
    ),
    (
        [
            "What was the average yield per colony in 2005?",
            "What was the mean yield per colony across all states in 2005?",
            "Average honey yield per colony in 2005",
            "How much honey did a colony yield on average in 2005?",
        ],
        scalar(rows(year=2005).yieldpercol.mean(), "yieldpercol"),
        ["kpi_card", "text_answer"],
        "unweighted mean over states",
    ),
    (
        [
            "What was the highest honey price in 2012?",
            "What was the maximum price of honey in 2012?",
            "Highest price per pound of honey in 2012",
            "What was the top honey price in 2012?",
        ],
        scalar(rows(year=2012).priceperlb.max(), "priceperlb"),
        ["kpi_card", "text_answer"],
        "maximum over states",
    ),
    (
        [
            "How many colonies did Minnesota have in 2009?",
            "Number of colonies in Minnesota in 2009",
            "What was the colony count in Minnesota in 2009?",
            "How many honey bee colonies were in MN in 2009?",
        ],
        scalar(cell("Minnesota", 2009, "numcol"), "numcol"),
        ["kpi_card", "text_answer"],
        "lookup of one cell",
    ),
    (
        [
            "What was the average honey price per year?",
            "Show the mean price of honey for each year",
            "Average price of honey by year",
            "How did the average honey price develop per year?",
        ],
        series(df.groupby("year").priceperlb.mean().sort_index()),
        ["line_chart", "bar_chart"],
        "national mean per year",
    ),
    (
        [
            "How large were the honey stocks in Iowa each year?",
            "Show the stocks of honey in Iowa per year",
            "Honey stocks in Iowa by year",
            "Stocks in Iowa over the years",
        ],
        series(by_year("Iowa", "stocks")),
        ["bar_chart", "line_chart"],
        "one state, one column, every year",
    ),
    (
        [
            "What was the total value of honey production in 2011?",
            "How much was all honey produced in 2011 worth?",
            "Total production value of honey in 2011",
            "What was the sum of the production value across all states in 2011?",
        ],
        scalar(rows(year=2011).prodvalue.sum(), "prodvalue"),
        ["kpi_card", "text_answer"],
        "sum over all states",
    ),
]

COMPLEX = [
    (
        [
            "What will the honey price in Florida be next year?",
            "Predict the price of honey in Florida for next year",
            "Forecast the honey price in Florida for 2013",
            "How much will honey cost in FL next year?",
        ],
        forecast(by_year("Florida", "priceperlb"), 1, "priceperlb"),
        ["line_chart", "scatter_plot"],
        "linear trend over years, one step past the last year",
    ),
    (
        [
            "Forecast the honey production in California for 2014",
            "What will California produce in honey in 2014?",
            "Predict the total production of honey in California for 2014",
            "How much honey will CA produce in 2014?",
        ],
        forecast(by_year("California", "totalprod"), 2014 - LAST_YEAR, "totalprod"),
        ["line_chart", "scatter_plot"],
        "linear trend, two steps past the last year",
    ),
    (
        [
            "How many colonies will Texas have next year?",
            "Predict the number of colonies in Texas for next year",
            "Forecast the colonies of Texas for 2013",
            "What will the colony count in TX be next year?",
        ],
        forecast(by_year("Texas", "numcol"), 1, "numcol"),
        ["line_chart", "scatter_plot"],
        "linear trend, one step",
    ),
    (
        [
            "Were there unusual honey prices in Alabama?",
            "Detect anomalies in the honey price of Alabama",
            "Show outliers in the price of honey in Alabama",
            "Which years had abnormal honey prices in AL?",
        ],
        anomalies(by_year("Alabama", "priceperlb")),
        ["line_chart", "scatter_plot"],
        "population z-score above 2.5",
    ),
    (
        [
            "Were there unusual yields per colony in Texas?",
            "Detect anomalies in the yield per colony of Texas",
            "Show outliers in the honey yield per colony in Texas",
            "Which years had an abnormal yield per colony in TX?",
        ],
        anomalies(by_year("Texas", "yieldpercol")),
        ["scatter_plot", "line_chart"],
        "population z-score above 2.5",
    ),
    (
        [
            "Were there unusual yields per colony in California?",
            "Detect anomalies in the yield per colony of California",
            "Show outliers in the yield per colony in California",
            "Which years had an abnormal colony yield in CA?",
        ],
        anomalies(by_year("California", "yieldpercol")),
        ["line_chart", "scatter_plot"],
        "population z-score above 2.5",
    ),
    (
        [
            "Were there unusual colony numbers in Florida?",
            "Detect anomalies in the number of colonies in Florida",
            "Show outliers in the colonies of Florida",
            "Which years had an abnormal number of colonies in FL?",
        ],
        anomalies(by_year("Florida", "numcol")),
        ["line_chart", "scatter_plot"],
        "population z-score above 2.5",
    ),
    (
        [
            "Were there unusual honey stocks in North Dakota?",
            "Detect anomalies in the stocks of North Dakota",
            "Show outliers in the honey stocks of North Dakota",
            "Which years had abnormal stocks in ND?",
        ],
        anomalies(by_year("North Dakota", "stocks")),
        ["scatter_plot", "line_chart"],
        "population z-score above 2.5",
    ),
    (
        [
            "How did the honey price in California change between 2005 and 2010?",
            "Compare the price of honey in California in 2005 and 2010",
            "What is the difference in the honey price of California between 2005 and 2010?",
            "By how much did the price of honey in CA change from 2005 to 2010?",
        ],
        scalar(cell("California", 2010, "priceperlb") - cell("California", 2005, "priceperlb"), "priceperlb"),
        ["kpi_card", "text_answer"],
        "second operand minus first",
    ),
    (
        [
            "Compare the honey price of Texas and Florida in 2011",
            "What was the difference in honey price between Texas and Florida in 2011?",
            "How did the price of honey in Texas compare to Florida in 2011?",
            "Difference between the honey prices of TX and FL in 2011",
        ],
        scalar(cell("Florida", 2011, "priceperlb") - cell("Texas", 2011, "priceperlb"), "priceperlb"),
        ["kpi_card", "text_answer"],
        "second operand minus first",
    ),
    (
        [
            "Which 5 states produced the most honey in 2012?",
            "Top 5 states by honey production in 2012",
            "Show the five states with the highest production in 2012",
            "What were the 5 largest honey producing states in 2012?",
        ],
        series(top(per_state(2012, "totalprod"), 5)),
        ["bar_chart", "pie_chart"],
        "ranking of per-state totals",
    ),
    (
        [
            "Which three states had the highest yield per colony in 2008?",
            "Top 3 states by yield per colony in 2008",
            "Show the 3 states with the largest yield per colony in 2008",
            "What were the three best states in yield per colony in 2008?",
        ],
        series(top(per_state(2008, "yieldpercol", "mean"), 3)),
        ["bar_chart", "pie_chart"],
        "ranking of per-state means",
    ),
    (
        [
            "Which state produced the most honey in 2010?",
            "What state had the highest honey production in 2010?",
            "Top honey producing state in 2010",
            "Which state was the largest producer of honey in 2010?",
        ],
        series(top(per_state(2010, "totalprod"), 1)),
        ["text_answer", "bar_chart"],
        "ranking truncated to one",
    ),
    (
        [
            "How did the honey production of Georgia change between 2000 and 2010?",
            "Compare the honey production of Georgia in 2000 and 2010",
            "What is the difference in production in Georgia between 2000 and 2010?",
            "By how much did honey production in GA change from 2000 to 2010?",
        ],
        scalar(cell("Georgia", 2010, "totalprod") - cell("Georgia", 2000, "totalprod"), "totalprod"),
        ["kpi_card", "text_answer"],
        "second operand minus first",
    ),
    (
        [
            "Were there unusual honey prices in Florida?",
            "Detect anomalies in the honey price of Florida",
            "Show outliers in the price of honey in Florida",
            "Which years had abnormal honey prices in FL?",
        ],
        anomalies(by_year("Florida", "priceperlb")),
        ["line_chart", "scatter_plot"],
        "population z-score above 2.5; no planted outlier",
    ),
    (
        [
            "Which 10 states had the most colonies in 2005?",
            "Top 10 states by number of colonies in 2005",
            "Show the ten states with the largest number of colonies in 2005",
            "What were the 10 states with the highest colony count in 2005?",
        ],
        series(top(per_state(2005, "numcol"), 10)),
        ["bar_chart", "pie_chart"],
        "ranking of per-state totals",
    ),
    (
        [
            "What will the average honey price be next year?",
            "Predict the mean price of honey for next year",
            "Forecast the average honey price for 2013",
            "How much will honey cost on average next year?",
        ],
        forecast(df.groupby("year").priceperlb.mean().sort_index(), 1, "priceperlb"),
        ["line_chart", "scatter_plot"],
        "trend of the national mean",
    ),
    (
        [
            "Which 3 states had the lowest honey price in 2010?",
            "Show the three cheapest states for honey in 2010",
            "Bottom 3 states by honey price in 2010",
            "What were the 3 states with the lowest price per pound in 2010?",
        ],
        series(top(per_state(2010, "priceperlb", "mean"), 3, descending=False)),
        ["bar_chart", "text_answer"],
        "ascending ranking",
    ),
    (
        [
            "How did the yield per colony in Michigan change between 2002 and 2012?",
            "Compare the yield per colony of Michigan in 2002 and 2012",
            "What is the difference in yield per colony in Michigan between 2002 and 2012?",
            "By how much did the colony yield in MI change from 2002 to 2012?",
        ],
        scalar(cell("Michigan", 2012, "yieldpercol") - cell("Michigan", 2002, "yieldpercol"), "yieldpercol"),
        ["kpi_card", "text_answer"],
        "second operand minus first",
    ),
    (
        [
            "Forecast the honey stocks of North Dakota for 2015",
            "What will the stocks in North Dakota be in 2015?",
            "Predict the honey stocks of North Dakota for 2015",
            "How large will the honey stocks in ND be in 2015?",
        ],
        forecast(by_year("North Dakota", "stocks"), 2015 - LAST_YEAR, "stocks"),
        ["line_chart", "scatter_plot"],
        "linear trend, three steps past the last year",
    ),
]


def records():
    out = []
    for prefix, cls, items in (("S", "simple", SIMPLE), ("C", "complex", COMPLEX)):
        for i, (variants, expected, viz, notes) in enumerate(items, 1):
            assert len(variants) == 4
            out.append(
                {
                    "id": f"{prefix}{i:02}",
                    "class": cls,
                    "variants": variants,
                    "expected_result": expected,
                    "expected_viz": viz,
                    "notes": notes,
                }
            )
    return out


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--check", action="store_true", help="fail if the file on disk differs")
    args = ap.parse_args()
    text = "".join(json.dumps(r) + "\n" for r in records())
    if args.check:
        if OUT.read_text() != text:
            sys.exit(f"{OUT} is stale; rerun scripts/gen_corpus.py")
        return
    OUT.write_text(text)
    print(f"wrote {text.count(chr(10))} records to {OUT}")


if __name__ == "__main__":
    main()
