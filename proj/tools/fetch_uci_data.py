#!/usr/bin/env python3
"""Download and convert the two benchmark datasets used by the acceptance runs.

Produces, under --dest (default: <repo>/data):
  spambase.csv / spambase.schema.json             (4601 rows, 57 numerical features)
  seismic_bumps.csv / seismic_bumps.schema.json   (2584 rows, 18 mixed features)

Both come from the UCI repository:
  https://archive.ics.uci.edu/static/public/94/spambase.zip
  https://archive.ics.uci.edu/static/public/266/seismic+bumps.zip

If this machine has no network access, download the zips elsewhere and pass
--spambase-zip / --seismic-zip.
"""

from __future__ import annotations

import argparse
import io
import json
import re
import sys
import urllib.request
import zipfile
from pathlib import Path

SPAMBASE_URL = "https://archive.ics.uci.edu/static/public/94/spambase.zip"
SEISMIC_URL = "https://archive.ics.uci.edu/static/public/266/seismic+bumps.zip"


def download(url: str) -> bytes:
    print(f"downloading {url} ...")
    req = urllib.request.Request(url, headers={"User-Agent": "dataset-fetch/1.0"})
    with urllib.request.urlopen(req, timeout=120) as resp:
        return resp.read()


def load_zip(url: str, local: Path | None) -> zipfile.ZipFile:
    if local is not None:
        return zipfile.ZipFile(local)
    return zipfile.ZipFile(io.BytesIO(download(url)))


def zip_member(zf: zipfile.ZipFile, suffix: str) -> str:
    names = [n for n in zf.namelist() if n.lower().endswith(suffix)]
    if not names:
        raise SystemExit(f"error: no '*{suffix}' member in {zf.filename or 'archive'}")
    return names[0]


# --- Spambase ---------------------------------------------------------------


def spambase_feature_names(names_text: str) -> list[str]:
    """The .names file lists the 57 attributes as 'name: continuous.' lines."""
    found = []
    for line in names_text.splitlines():
        m = re.match(r"^\s*([A-Za-z0-9_;!$#()\[\]]+)\s*:\s*continuous", line)
        if m:
            found.append(m.group(1))
    if len(found) != 57:
        print(f"warning: parsed {len(found)} names from spambase.names; using f0..f56")
        return [f"f{i}" for i in range(57)]
    return found


def convert_spambase(zf: zipfile.ZipFile, dest: Path) -> None:
    data = zf.read(zip_member(zf, "spambase.data")).decode("utf-8")
    names = spambase_feature_names(zf.read(zip_member(zf, "spambase.names")).decode("utf-8", "replace"))

    rows = [line.strip() for line in data.splitlines() if line.strip()]
    out = dest / "spambase.csv"
    with out.open("w", newline="") as f:
        f.write(",".join(names + ["spam"]) + "\n")
        for line in rows:
            f.write(line + "\n")

    schema = {
        "features": [{"name": n, "kind": "numerical"} for n in names],
        "label": {"name": "spam", "classes": ["0", "1"]},
    }
    (dest / "spambase.schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    print(f"wrote {out} ({len(rows)} rows, {len(names)} features)")
    if len(rows) != 4601:
        print(f"warning: expected 4601 rows, got {len(rows)}")


# --- SeismicBumps (ARFF) ----------------------------------------------------


def parse_arff(text: str) -> tuple[list[tuple[str, list[str] | None]], list[list[str]]]:
    """Returns ([(attribute name, nominal values or None)], data rows)."""
    attributes: list[tuple[str, list[str] | None]] = []
    rows: list[list[str]] = []
    in_data = False
    for raw in text.splitlines():
        line = raw.strip()
        if not line or line.startswith("%"):
            continue
        if in_data:
            rows.append([v.strip().strip("'\"") for v in line.split(",")])
            continue
        low = line.lower()
        if low.startswith("@attribute"):
            m = re.match(r"@attribute\s+'?([^\s']+)'?\s+(.*)", line, re.IGNORECASE)
            if not m:
                raise SystemExit(f"error: unparseable attribute line: {line}")
            name, kind = m.group(1), m.group(2).strip()
            if kind.startswith("{"):
                values = [v.strip().strip("'\"") for v in kind.strip("{}").split(",")]
                attributes.append((name, values))
            else:
                attributes.append((name, None))
        elif low.startswith("@data"):
            in_data = True
    return attributes, rows


def convert_seismic(zf: zipfile.ZipFile, dest: Path) -> None:
    text = zf.read(zip_member(zf, ".arff")).decode("utf-8", "replace")
    attributes, rows = parse_arff(text)
    if not attributes or attributes[-1][0].lower() != "class":
        raise SystemExit("error: expected the last ARFF attribute to be 'class'")

    features = attributes[:-1]
    class_values = attributes[-1][1] or ["0", "1"]
    # Keep "0" (non-hazardous) at index 0 so "1" is the positive class.
    classes = sorted(class_values)

    out = dest / "seismic_bumps.csv"
    with out.open("w", newline="") as f:
        f.write(",".join(name for name, _ in features) + ",class\n")
        for row in rows:
            if len(row) != len(attributes):
                raise SystemExit(f"error: ARFF row arity {len(row)} != {len(attributes)}")
            f.write(",".join("" if v == "?" else v for v in row) + "\n")

    schema = {
        "features": [
            {"name": name, "kind": "numerical" if values is None else "categorical"}
            for name, values in features
        ],
        "label": {"name": "class", "classes": classes},
    }
    (dest / "seismic_bumps.schema.json").write_text(json.dumps(schema, indent=2) + "\n")
    n_cat = sum(1 for _, v in features if v is not None)
    print(f"wrote {out} ({len(rows)} rows, {len(features)} features, {n_cat} categorical)")
    if len(rows) != 2584:
        print(f"warning: expected 2584 rows, got {len(rows)}")


def main() -> None:
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("--dest", type=Path, default=Path(__file__).resolve().parent.parent / "data")
    parser.add_argument("--spambase-zip", type=Path, help="use a pre-downloaded spambase.zip")
    parser.add_argument("--seismic-zip", type=Path, help="use a pre-downloaded seismic+bumps.zip")
    args = parser.parse_args()

    args.dest.mkdir(parents=True, exist_ok=True)
    try:
        convert_spambase(load_zip(SPAMBASE_URL, args.spambase_zip), args.dest)
        convert_seismic(load_zip(SEISMIC_URL, args.seismic_zip), args.dest)
    except (urllib.error.URLError, OSError) as e:
        print(f"error: download failed: {e}", file=sys.stderr)
        print("fetch the zips manually and rerun with --spambase-zip/--seismic-zip:", file=sys.stderr)
        print(f"  {SPAMBASE_URL}", file=sys.stderr)
        print(f"  {SEISMIC_URL}", file=sys.stderr)
        sys.exit(1)


if __name__ == "__main__":
    main()
