"""Convert the AG News CSV release to labeled text files.

Each CSV row is (class, title, description) with classes 1-4. Output lines
are "__label__<class> <text>", lowercased, with punctuation split off the
way fastText's classification example does it.

    python3 tools/prepare_ag_news.py <dir with train.csv, test.csv> <out dir>
"""

import argparse
import csv
import os
import re
import sys

_SPLIT = re.compile(r"([.,()!?'])")
_DROP = re.compile(r"[\";:]|<br\s*/?>")


def normalize(text):
    text = text.replace("\\n", " ").replace("\\", " ")
    text = _DROP.sub(" ", text)
    text = _SPLIT.sub(r" \1 ", text)
    return " ".join(text.lower().split())


def convert(src, dst):
    rows = 0
    with open(src, newline="", encoding="utf-8") as fin, open(dst, "w", encoding="utf-8") as fout:
        for record in csv.reader(fin):
            if not record:
                continue
            if len(record) < 2 or not record[0].strip().isdigit():
                raise SystemExit(f"{src}:{rows + 1}: expected class,title,description")
            text = normalize(" ".join(record[1:]))
            fout.write(f"__label__{record[0].strip()} {text}\n")
            rows += 1
    return rows


def main():
    parser = argparse.ArgumentParser(description=__doc__, formatter_class=argparse.RawDescriptionHelpFormatter)
    parser.add_argument("csv_dir")
    parser.add_argument("out_dir")
    args = parser.parse_args()
    os.makedirs(args.out_dir, exist_ok=True)
    for split in ("train", "test"):
        src = os.path.join(args.csv_dir, f"{split}.csv")
        if not os.path.exists(src):
            sys.exit(f"missing {src}")
        n = convert(src, os.path.join(args.out_dir, f"{split}.txt"))
        print(f"{split}: {n} lines")


if __name__ == "__main__":
    main()
