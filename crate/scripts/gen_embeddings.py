#!/usr/bin/env python3
"""Generate the bundled 50-dimensional word-vector file.

Words are grouped into topical clusters. Every cluster gets an orthonormal
base direction; a word vector is its cluster base, optionally mixed with a
related cluster, plus seeded noise. Cosine similarity within a cluster is
roughly 0.75-0.85 and close to zero across clusters, which is the property
the matcher relies on. Words outside every cluster are absent (out of
vocabulary) except for a few distractors that get pure-noise vectors.

Usage: python3 scripts/gen_embeddings.py > crates/core/data/embeddings.txt
"""
import numpy as np

DIM = 50

CLUSTERS = {
    "average": ["average", "mean", "typical", "usual", "normal", "avg", "ordinary",
                "median", "averaged", "averages", "standard", "regular"],
    "sum": ["total", "sum", "overall", "combined", "aggregate", "altogether",
            "cumulative", "totals", "whole", "entire", "summed", "sums", "nationwide"],
    "max": ["highest", "maximum", "max", "largest", "biggest", "greatest", "peak",
            "most", "top", "best", "leading", "record", "high", "higher", "more"],
    "min": ["lowest", "minimum", "min", "smallest", "least", "fewest", "worst",
            "bottom", "low", "lower", "less", "fewer"],
    "price": ["price", "prices", "cost", "costs", "expensive", "pricey", "priced",
              "pricing", "charge", "paid", "pay", "dollar", "dollars", "cents", "sell"],
    "production": ["production", "produce", "produced", "producing", "output",
                   "harvest", "harvested", "made", "make", "makes", "generate",
                   "generated", "manufacture", "pounds", "amount", "quantity", "volume"],
    "yield": ["yield", "yields", "productivity", "efficiency", "per-colony", "rate"],
    "colonies": ["colonies", "colony", "hives", "hive", "bees", "beehives", "apiaries",
                 "swarms", "bee"],
    "stocks": ["stocks", "stock", "reserves", "inventory", "stored", "storage",
               "held", "stockpile", "leftover", "kept"],
    "value": ["value", "revenue", "worth", "earnings", "income", "sales", "money",
              "turnover", "proceeds", "valued", "earned"],
    "forecast": ["forecast", "predict", "prediction", "predicted", "projection",
                 "future", "expect", "expected", "estimate", "develop", "outlook",
                 "will", "anticipate", "extrapolate", "forecasting", "upcoming",
                 "coming", "next", "trend"],
    "anomaly": ["anomaly", "anomalies", "unusual", "outlier", "outliers", "abnormal",
                "strange", "odd", "weird", "irregular", "suspicious", "spike",
                "spikes", "unexpected", "deviation", "deviations", "extreme",
                "anomalous", "exceptional", "stand"],
    "change": ["compare", "change", "difference", "differ", "increase", "decrease",
               "rise", "drop", "grow", "growth", "changed", "compared", "shift",
               "gain", "rose", "fell", "differences"],
    "time": ["year", "years", "annual", "annually", "time", "period", "yearly",
             "decade", "evolution", "evolve", "evolved", "history", "historical"],
    "place": ["state", "states", "region", "regions", "location", "where",
              "place", "places", "map", "geographic", "geographically", "country"],
    "count": ["count", "number", "many", "tally", "howmany"],
    "table": ["list", "table", "rows", "records", "entries", "data", "details",
              "everything", "all"],
    "which": ["which", "who", "what"],
}

# (cluster, related cluster, mix weight)
RELATED = [
    ("yield", "production", 0.45),
    ("value", "price", 0.45),
    ("forecast", "time", 0.3),
    ("change", "time", 0.25),
]

DISTRACTORS = ["purple", "banana", "guitar", "happy", "blue", "quickly", "window",
               "elephant", "music", "river", "asdf", "qwer", "zebra", "violin"]


def main():
    rng = np.random.default_rng(7)
    names = list(CLUSTERS)
    q, _ = np.linalg.qr(rng.standard_normal((DIM, DIM)))
    base = {name: q[:, i] for i, name in enumerate(names)}
    for c, r, w in RELATED:
        v = base[c] + w * base[r]
        base[c] = v / np.linalg.norm(v)
    seen = set()
    lines = []
    for name in names:
        for word in CLUSTERS[name]:
            if word in seen:
                continue
            seen.add(word)
            noise = rng.standard_normal(DIM)
            noise *= 0.5 / np.linalg.norm(noise)
            vec = base[name] + noise
            lines.append((word, vec))
    for word in DISTRACTORS:
        vec = rng.standard_normal(DIM)
        vec /= np.linalg.norm(vec)
        lines.append((word, vec))
    for word, vec in lines:
        print(word + " " + " ".join(f"{x:.5f}" for x in vec))


if __name__ == "__main__":
    main()
