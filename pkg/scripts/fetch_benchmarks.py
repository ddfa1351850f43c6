#!/usr/bin/env python3
"""Fetch the published VRPTW benchmark instances (Solomon 100-customer set
and the Gehring-Homberger 200-customer set) into data/benchmarks/.

These files are published data and are not bundled with this repository;
the acceptance tests that score against best-known solutions skip until the
files are present.  Run this script on a machine with internet access, or
drop the files in manually (plain text, one instance per file, e.g.
data/benchmarks/c101.txt).  Any layout under data/benchmarks/ works; tests
search recursively and match on the lowercase file stem.
"""

import argparse
import os
import sys
import urllib.request

NAMES_SOLOMON = ["c101", "c201", "r101", "rc101", "r201", "rc201",
                 "c104", "r103", "rc102", "rc207"]
NAMES_HOMBERGER = ["c1_2_1", "c2_2_1", "r1_2_1", "r2_2_1", "rc1_2_1", "rc2_2_1"]

# Widely used mirrors of the published files; tried in order.
MIRRORS = [
    "https://raw.githubusercontent.com/Kuifje02/vrpy/master/benchmarks/data/cvrptw/{upper}.txt",
    "https://raw.githubusercontent.com/rafaelcaue/solomon-vrptw-benchmark/master/{lower}.txt",
    "https://www.sintef.no/contentassets/solomon/{lower}.txt",
]


def fetch(name: str, out_dir: str, template: str = None) -> bool:
    targets = [template] if template else MIRRORS
    for url_t in targets:
        url = url_t.format(lower=name.lower(), upper=name.upper())
        try:
            with urllib.request.urlopen(url, timeout=30) as resp:
                text = resp.read().decode("utf-8", errors="replace")
        except Exception as exc:
            print(f"  {url}: {exc}")
            continue
        if "VEHICLE" not in text.upper() or "CUSTOMER" not in text.upper():
            print(f"  {url}: response does not look like a benchmark file")
            continue
        path = os.path.join(out_dir, f"{name.lower()}.txt")
        with open(path, "w") as fh:
            fh.write(text)
        print(f"  wrote {path}")
        return True
    return False


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=os.path.join(os.path.dirname(__file__),
                                                      "..", "data", "benchmarks"))
    parser.add_argument("--url-template", default=None,
                        help="custom mirror, e.g. 'https://host/path/{lower}.txt'")
    parser.add_argument("--names", nargs="*", default=NAMES_SOLOMON + NAMES_HOMBERGER)
    args = parser.parse_args()

    os.makedirs(args.out, exist_ok=True)
    missing = []
    for name in args.names:
        print(f"fetching {name} ...")
        if not fetch(name, args.out, args.url_template):
            missing.append(name)
    if missing:
        print(f"\ncould not fetch: {', '.join(missing)}")
        print("Download them manually (SINTEF TOP hosts the canonical listing) and")
        print(f"place them under {os.path.normpath(args.out)}/ as <name>.txt")
        return 1
    print("all instances fetched")
    return 0


if __name__ == "__main__":
    sys.exit(main())
