#!/usr/bin/env python3
"""Write a schema + corpus pair to disk for seeding a store.

Default is the small scenario corpus; --count N switches to the bulk
workload. Output: <out>/schema.json and <out>/corpus.jsonl, ready for
`cqms ingest corpus.jsonl --schema schema.json`.
"""
import argparse
import json
import sys
from pathlib import Path

sys.path.insert(0, str(Path(__file__).resolve().parents[1] / "src"))

from cqms.synth import lakes_schema, scenario_corpus, workload  # noqa: E402


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--out", default=".", help="output directory")
    parser.add_argument("--count", type=int, help="bulk record count (omit for scenario corpus)")
    parser.add_argument("--distinct", type=int, default=1500)
    parser.add_argument("--users", type=int, default=40)
    parser.add_argument("--seed", type=int, default=90125)
    args = parser.parse_args()

    out = Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    if args.count:
        schema = lakes_schema()
        records = workload(
            count=args.count, distinct_texts=args.distinct, users=args.users, seed=args.seed
        )
    else:
        schema, records = scenario_corpus()
    (out / "schema.json").write_text(json.dumps(schema, indent=2) + "\n", encoding="utf-8")
    n = 0
    with open(out / "corpus.jsonl", "w", encoding="utf-8") as fh:
        for record in records:
            fh.write(json.dumps(record, ensure_ascii=False) + "\n")
            n += 1
    print("wrote %d records to %s" % (n, out / "corpus.jsonl"))
    return 0


if __name__ == "__main__":
    sys.exit(main())
