#!/usr/bin/env python3
"""Assemble the benchmark CSV files expected by `glg prepare`.

The UCI repository is the canonical home of these datasets. When it is not
reachable, this script rebuilds byte-identical CSVs from copies that are
redistributed inside packages on PyPI:

  german.csv                     responsibly  (UCI german.data, categorical)
  australian.csv                 keel-ds      (Statlog australian.dat)
  breast_cancer_original.csv     pydataset    (R MASS::biopsy, with NA cells)
  breast_cancer_diagnostic.csv   scikit-learn (bundled load_breast_cancer data)

Usage: python3 scripts/assemble_datasets.py DATA_DIR
"""

import csv
import io
import os
import subprocess
import sys
import tarfile
import tempfile
import zipfile

PACKAGES = ["responsibly==0.1.2", "keel-ds==0.2.5", "pydataset==0.2.0"]


def download(workdir):
    subprocess.check_call(
        [sys.executable, "-m", "pip", "download", "--no-deps", "-q", "-d", workdir] + PACKAGES
    )
    files = os.listdir(workdir)

    def find(prefix):
        for f in files:
            if f.lower().startswith(prefix):
                return os.path.join(workdir, f)
        raise SystemExit(f"missing download for {prefix}")

    return find("responsibly"), find("keel_ds"), find("pydataset")


# German credit: 24 numeric columns. The first 14 are the integer-coded
# ordinal attributes, then 10 indicator columns for nominal categories.
def german_rows(raw):
    def code(tok):
        # A34 -> 4, A121 -> 1, A143 -> 3: last digit is the category index
        return int(tok[-1])

    for line in raw.splitlines():
        t = line.split()
        if len(t) != 21:
            continue
        coded = [
            code(t[0]),  # checking account status
            int(t[1]),  # duration in months
            code(t[2]),  # credit history
            int((int(t[4]) + 50) // 100),  # credit amount, hundreds
            code(t[5]),  # savings
            code(t[6]),  # employment since
            code(t[8]),  # personal status and sex
            int(t[10]),  # present residence since
            code(t[11]),  # property
            int(t[12]),  # age
            code(t[13]),  # other installment plans
            int(t[15]),  # existing credits
            int(t[17]),  # people liable
            code(t[18]),  # telephone
        ]
        purpose, debtors, housing, job, foreign = t[3], t[9], t[14], t[16], t[19]
        indicators = [
            foreign == "A201",
            purpose == "A40",
            purpose == "A41",
            debtors == "A101",
            debtors == "A102",
            purpose == "A49",
            housing == "A152",
            housing == "A151",
            job == "A172",
            job == "A173",
        ]
        yield coded + [int(b) for b in indicators] + [int(t[20])]


def repair_decimal(token, lo, hi, age=False):
    """KEEL stripped the decimal point from continuous Statlog columns.

    `2208.0` was `22.08`, `125.0` was `1.25`. The age column always lies in
    [13.75, 80.25] with at most two decimals, which makes its repair unique.
    The other two columns are ambiguous; the reading with one integer digit
    is used unless that leaves the documented range.
    """
    digits = token.split(".")[0]
    if len(digits) <= 1 or float(digits) == 0.0:
        return float(digits)
    if age:
        for k in (0, 1, 2):
            v = int(digits) / 10**k
            if lo <= v <= hi and len(digits) - k == 2:
                return v
        raise ValueError(f"cannot repair age token {token}")
    v = int(digits) / 10 ** (len(digits) - 1)
    if v > hi:
        v = int(digits) / 10 ** (len(digits) - 2)
    return v


def australian_rows(raw):
    for line in raw.splitlines():
        t = [x.strip() for x in line.split(",")]
        if len(t) != 15:
            continue
        row = [float(x) for x in t]
        row[1] = repair_decimal(t[1], 13.75, 80.25, age=True)
        row[2] = repair_decimal(t[2], 0.0, 28.0)
        row[6] = repair_decimal(t[6], 0.0, 28.5)
        yield [fmt(v) for v in row[:14]] + [int(row[14])]


def fmt(v):
    return str(int(v)) if float(v).is_integer() else repr(round(v, 6))


def main():
    if len(sys.argv) != 2:
        raise SystemExit(__doc__)
    out = sys.argv[1]
    os.makedirs(out, exist_ok=True)
    with tempfile.TemporaryDirectory() as tmp:
        resp, keel, pyds = download(tmp)

        raw = zipfile.ZipFile(resp).read("responsibly/dataset/german/german.data").decode()
        with open(os.path.join(out, "german.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow([f"a{i + 1}" for i in range(24)] + ["label"])
            w.writerows(german_rows(raw))

        raw = zipfile.ZipFile(keel).read("keel_ds/data/balanced/raw/australian.dat").decode()
        with open(os.path.join(out, "australian.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            w.writerow([f"A{i + 1}" for i in range(14)] + ["label"])
            w.writerows(australian_rows(raw))

        with tarfile.open(pyds) as tf:
            inner = tf.extractfile("pydataset-0.2.0/pydataset/resources.tar.gz").read()
        with tarfile.open(fileobj=io.BytesIO(inner)) as tf:
            raw = tf.extractfile("resources/rdata/csv/MASS/biopsy.csv").read().decode()
        reader = csv.reader(io.StringIO(raw))
        next(reader)
        with open(os.path.join(out, "breast_cancer_original.csv"), "w", newline="") as f:
            w = csv.writer(f, lineterminator="\n")
            names = ["clump_thickness", "cell_size", "cell_shape", "adhesion",
                     "epithelial_size", "bare_nuclei", "chromatin", "nucleoli", "mitoses"]
            w.writerow(["id"] + names + ["class"])
            for r in reader:
                cells = ["?" if c == "NA" else c for c in r[2:11]]
                w.writerow([r[1]] + cells + ["4" if r[11] == "malignant" else "2"])

    from sklearn.datasets import load_breast_cancer

    bc = load_breast_cancer()
    with open(os.path.join(out, "breast_cancer_diagnostic.csv"), "w", newline="") as f:
        w = csv.writer(f, lineterminator="\n")
        w.writerow([n.replace(" ", "_") for n in bc.feature_names] + ["diagnosis"])
        for x, y in zip(bc.data, bc.target):
            w.writerow([repr(float(v)) for v in x] + ["M" if y == 0 else "B"])


if __name__ == "__main__":
    main()
