#!/usr/bin/env python3
"""Fetch the SUPPORT right-heart-catheterization teaching extract and derive
the analysis columns the acceptance battery expects.

Reads the public rhc.csv (Connors et al. 1996 teaching extract, hosted at
hbiostat.org) and writes a six-column CSV:

    death_d30, rhc, gender, age, edu, race, carcinoma

Derivations, with every judgement call documented and overridable:

  * death_d30   dth30 == "Yes" -> 1. Thirty-day mortality, not overall
                follow-up death.
  * rhc         swang1 == "RHC" -> 1.
  * gender      sex == "Male" -> 1 (use --female-one to flip). The published
                balance numbers do not identify the reference level; a flip
                only changes the sign of gender's standardized difference.
  * age         copied through (years, continuous).
  * edu         copied through (years of education, continuous).
  * race        three levels entered as one integer column. Default coding is
                alphabetical: black=1, other=2, white=3. Pick
                --race-coding white-first for white=1, black=2, other=3.
  * carcinoma   ca in {"Yes", "Metastatic"} -> 1 (any solid tumour, localized
                or spread); ca == "No" -> 0.

Rows missing any required source field are dropped and counted.
"""

import argparse
import csv
import io
import os
import sys
import urllib.request

DEFAULT_URL = "https://hbiostat.org/data/repo/rhc.csv"
REQUIRED = ("dth30", "swang1", "sex", "age", "edu", "race", "ca")

RACE_CODINGS = {
    "alpha": {"black": 1, "other": 2, "white": 3},
    "white-first": {"white": 1, "black": 2, "other": 3},
}


def fetch(url: str) -> str:
    request = urllib.request.Request(url, headers={"User-Agent": "fetch_rhc/1.0"})
    with urllib.request.urlopen(request, timeout=60) as response:
        return response.read().decode("utf-8", errors="replace")


def derive_rows(text: str, race_coding: str, female_one: bool):
    reader = csv.DictReader(io.StringIO(text))
    missing_headers = [h for h in REQUIRED if h not in (reader.fieldnames or [])]
    if missing_headers:
        raise SystemExit(f"source file lacks expected columns: {', '.join(missing_headers)}")

    race_map = RACE_CODINGS[race_coding]
    rows, dropped = [], 0
    for raw in reader:
        values = {k: (raw.get(k) or "").strip() for k in REQUIRED}
        if any(v == "" or v.upper() == "NA" for v in values.values()):
            dropped += 1
            continue
        race_key = values["race"].lower()
        if race_key not in race_map:
            raise SystemExit(f"unexpected race level {values['race']!r}")
        if values["ca"] not in ("Yes", "No", "Metastatic"):
            raise SystemExit(f"unexpected ca level {values['ca']!r}")
        male = values["sex"] == "Male"
        rows.append(
            {
                "death_d30": 1 if values["dth30"] == "Yes" else 0,
                "rhc": 1 if values["swang1"] == "RHC" else 0,
                "gender": int(male != female_one),
                "age": values["age"],
                "edu": values["edu"],
                "race": race_map[race_key],
                "carcinoma": 0 if values["ca"] == "No" else 1,
            }
        )
    return rows, dropped


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__.splitlines()[0])
    parser.add_argument("--url", default=DEFAULT_URL, help="source CSV location")
    parser.add_argument(
        "--out",
        default=os.path.join(os.path.dirname(__file__), "..", "tests", "fixtures", "rhc.csv"),
        help="output path (default tests/fixtures/rhc.csv)",
    )
    parser.add_argument(
        "--race-coding",
        choices=sorted(RACE_CODINGS),
        default="alpha",
        help="integer coding for the race column (default alphabetical)",
    )
    parser.add_argument(
        "--female-one",
        action="store_true",
        help="code gender as female=1 instead of male=1",
    )
    args = parser.parse_args()

    text = fetch(args.url)
    rows, dropped = derive_rows(text, args.race_coding, args.female_one)
    if not rows:
        raise SystemExit("no usable rows derived")

    out_path = os.path.abspath(args.out)
    os.makedirs(os.path.dirname(out_path), exist_ok=True)
    with open(out_path, "w", newline="") as handle:
        writer = csv.DictWriter(
            handle,
            fieldnames=["death_d30", "rhc", "gender", "age", "edu", "race", "carcinoma"],
        )
        writer.writeheader()
        writer.writerows(rows)

    treated = sum(r["rhc"] for r in rows)
    print(f"wrote {out_path}: {len(rows)} rows ({treated} treated), {dropped} dropped")


if __name__ == "__main__":
    main()
