#!/usr/bin/env python3
"""Download the benchmark datasets and write them as headed CSV files.

Each file is checked against its expected shape and class balance before
it is written. WDBC falls back to the copy bundled with scikit-learn when
the download fails.
"""

import argparse
import csv
import io
import sys
import urllib.request
from pathlib import Path

UCI = "https://archive.ics.uci.edu/ml/machine-learning-databases"

DATASETS = {
    "flame": {
        "url": "https://cs.joensuu.fi/sipu/datasets/flame.txt",
        "instances": 240,
        "features": 2,
        "positives": 153,
    },
    "wdbc": {
        "url": f"{UCI}/breast-cancer-wisconsin/wdbc.data",
        "instances": 569,
        "features": 30,
        "positives": 212,
    },
    "ionosphere": {
        "url": f"{UCI}/ionosphere/ionosphere.data",
        "instances": 351,
        "features": 34,
        "positives": 225,
    },
    "sonar": {
        "url": f"{UCI}/undocumented/connectionist-bench/sonar/sonar.all-data",
        "instances": 208,
        "features": 60,
        "positives": 97,
    },
}


def fetch(url):
    with urllib.request.urlopen(url, timeout=30) as response:
        return response.read().decode("utf-8")


def parse_flame(text):
    rows = [line.split() for line in text.splitlines() if line.strip()]
    counts = {}
    for row in rows:
        counts[row[-1]] = counts.get(row[-1], 0) + 1
    # The larger cluster is class 1.
    positive = max(counts, key=counts.get)
    return [[float(v) for v in row[:-1]] + [int(row[-1] == positive)] for row in rows]


def parse_wdbc(text):
    rows = list(csv.reader(io.StringIO(text)))
    return [[float(v) for v in row[2:]] + [row[1]] for row in rows if row]


def parse_trailing_label(text):
    rows = list(csv.reader(io.StringIO(text)))
    return [[float(v) for v in row[:-1]] + [row[-1]] for row in rows if row]


PARSERS = {
    "flame": parse_flame,
    "wdbc": parse_wdbc,
    "ionosphere": parse_trailing_label,
    "sonar": parse_trailing_label,
}

POSITIVE = {"flame": 1, "wdbc": "M", "ionosphere": "g", "sonar": "R"}


def wdbc_from_sklearn():
    from sklearn.datasets import load_breast_cancer

    bunch = load_breast_cancer()
    # scikit-learn encodes malignant as 0.
    return [list(map(float, x)) + ["M" if y == 0 else "B"] for x, y in zip(bunch.data, bunch.target)]


def check(name, rows):
    info = DATASETS[name]
    if len(rows) != info["instances"]:
        raise ValueError(f"{name}: {len(rows)} instances, expected {info['instances']}")
    if any(len(r) != info["features"] + 1 for r in rows):
        raise ValueError(f"{name}: expected {info['features']} features per row")
    positives = sum(1 for r in rows if r[-1] == POSITIVE[name])
    if positives != info["positives"]:
        raise ValueError(f"{name}: {positives} positives, expected {info['positives']}")


def write(path, rows, features):
    with open(path, "w", newline="") as f:
        w = csv.writer(f)
        w.writerow([f"x{i + 1}" for i in range(features)] + ["label"])
        for row in rows:
            w.writerow([repr(v) if isinstance(v, float) else v for v in row])


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("names", nargs="*", default=list(DATASETS))
    parser.add_argument("--out", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    args = parser.parse_args()
    args.out.mkdir(parents=True, exist_ok=True)

    failed = []
    for name in args.names:
        try:
            rows = PARSERS[name](fetch(DATASETS[name]["url"]))
        except Exception as err:
            if name != "wdbc":
                print(f"{name}: download failed ({err})", file=sys.stderr)
                failed.append(name)
                continue
            print(f"{name}: download failed ({err}); using scikit-learn copy", file=sys.stderr)
            rows = wdbc_from_sklearn()
        try:
            check(name, rows)
        except ValueError as err:
            print(err, file=sys.stderr)
            failed.append(name)
            continue
        write(args.out / f"{name}.csv", rows, DATASETS[name]["features"])
        print(f"{name}: wrote {args.out / (name + '.csv')}")
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())
