#!/usr/bin/env python3
# Copyright 2026 The citycd Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Adds a city column to the global-scale Foursquare POI file.

Each POI goes to the nearest listed city of its own country (great-circle
distance). POIs of countries without a listed city are dropped and counted on
stderr. Output: venue_id, lat, lon, city, tab-separated, on stdout.
"""

import argparse
import csv
import sys
from collections import defaultdict

import numpy as np

EARTH_RADIUS_KM = 6371.0


def read_cities(path):
    by_country = defaultdict(list)
    with open(path, newline="", encoding="utf-8") as f:
        for row in csv.reader(f, delimiter="\t"):
            if len(row) < 4:
                continue
            by_country[row[3]].append((row[0], float(row[1]), float(row[2])))
    return {
        cc: (
            [c[0] for c in cities],
            np.radians(np.array([[c[1], c[2]] for c in cities])),
        )
        for cc, cities in by_country.items()
    }


def nearest(lat, lon, coords):
    """Index of the nearest city; haversine against every candidate."""
    la, lo = np.radians(lat), np.radians(lon)
    dlat = coords[:, 0] - la
    dlon = coords[:, 1] - lo
    h = np.sin(dlat / 2) ** 2 + np.cos(la) * np.cos(coords[:, 0]) * np.sin(dlon / 2) ** 2
    return int(np.argmin(h))  # monotone in distance


def main():
    ap = argparse.ArgumentParser(description=__doc__)
    ap.add_argument("pois", help="POI file: venue_id, lat, lon, category, country_code")
    ap.add_argument("cities", help="city file: name, lat, lon, country_code, ...")
    args = ap.parse_args()

    cities = read_cities(args.cities)
    out = csv.writer(sys.stdout, delimiter="\t", lineterminator="\n")
    kept = dropped = 0
    with open(args.pois, newline="", encoding="utf-8") as f:
        for row in csv.reader(f, delimiter="\t", quoting=csv.QUOTE_NONE):
            if len(row) < 5 or row[4] not in cities:
                dropped += 1
                continue
            lat, lon = float(row[1]), float(row[2])
            names, coords = cities[row[4]]
            out.writerow([row[0], row[1], row[2], names[nearest(lat, lon, coords)]])
            kept += 1
    print(f"{kept} venues assigned, {dropped} dropped", file=sys.stderr)


if __name__ == "__main__":
    main()
