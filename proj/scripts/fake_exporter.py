#!/usr/bin/env python3
"""Stand-in for a model exporter: scores a prompts file without a model.

Reads the JSONL written by `tcal export --emit-prompts` and writes a record
store whose log-probabilities are a deterministic function of the text, so the
offline pipeline can be exercised end to end. A real exporter computes the same
records from model logits.

Usage: fake_exporter.py PROMPTS.jsonl STORE.jsonl
"""

import hashlib
import json
import sys


def prompt_hash(model_id, prompt, candidate):
    parts = [model_id, prompt, candidate]
    key = "".join(f"{len(p.encode('utf-8'))}:{p}" for p in parts)
    return hashlib.sha256(key.encode("utf-8")).hexdigest()


def fake_logprob(prompt, candidate):
    digest = hashlib.sha256((prompt + "\x00" + candidate).encode("utf-8")).digest()
    return -0.05 - int.from_bytes(digest[:4], "big") % 3000 / 1000.0


def main(argv):
    if len(argv) != 3:
        print(__doc__.strip().splitlines()[-1], file=sys.stderr)
        return 2
    records = {}
    with open(argv[1], encoding="utf-8") as f:
        for line in f:
            req = json.loads(line)
            for cand in req["candidates"]:
                h = prompt_hash(req["model_id"], req["prompt"], cand)
                records[h] = {
                    "model_id": req["model_id"],
                    "prompt_hash": h,
                    "prompt": req["prompt"],
                    "candidate": cand,
                    "logprob": fake_logprob(req["prompt"], cand),
                    "token_count": 1,
                }
    with open(argv[2], "w", encoding="utf-8", newline="\n") as out:
        for h in sorted(records):
            out.write(json.dumps(records[h], ensure_ascii=False, separators=(",", ":")) + "\n")
    print(f"wrote {len(records)} records to {argv[2]}")
    return 0


if __name__ == "__main__":
    sys.exit(main(sys.argv))
