"""Drive the whole pipeline through the command-line surface.

Writes a toy JSON-lines corpus to a scratch directory, then runs
fit-importance -> rank-eval -> train -> decode -> evaluate exactly as a
shell user would (one global seed; every artifact lands under out_dir).
"""

import json
import tempfile
from pathlib import Path

from opinesum.cli import main

CORPUS = [
    {
        "id": "m0",
        "entity": "Red Planet",
        "summary": "a smart thrilling ride",
        "units": [
            {"text": "Red Planet is a smart movie"},
            {"text": "utterly dull and boring"},
            {"text": "thrilling space ride"},
        ],
    },
    {
        "id": "m1",
        "entity": None,
        "summary": "funny heartfelt comedy",
        "units": [
            {"text": "a funny comedy indeed"},
            {"text": "plodding mess"},
            {"text": "heartfelt and warm story"},
        ],
    },
    {
        "id": "m2",
        "entity": None,
        "summary": "gritty crime drama",
        "units": [
            {"text": "gritty drama about crime"},
            {"text": "slow first act"},
            {"text": "crime story with grit"},
        ],
    },
]

root = Path(tempfile.mkdtemp(prefix="opinesum_demo_"))
corpus = root / "corpus.jsonl"
corpus.write_text("\n".join(json.dumps(c) for c in CORPUS) + "\n")
print(f"scratch directory: {root}\n")


def run(*args):
    print("$ opinesum " + " ".join(args))
    code = main(list(args))
    assert code == 0, f"exit code {code}"
    print()


run("fit-importance",
    "--set", f"corpus.train={corpus}", "--set", f"corpus.dev={corpus}",
    "--set", f"out_dir={root/'salience'}")

run("rank-eval",
    "--set", f"corpus={corpus}",
    "--set", f"salience_model={root/'salience'/'salience.model'}",
    "--set", f"salience_registry={root/'salience'/'salience.registry'}",
    "--set", f"out_dir={root/'rank'}")

run("train",
    "--set", f"corpus.train={corpus}", "--set", f"corpus.dev={corpus}",
    "--set", f"salience_model={root/'salience'/'salience.model'}",
    "--set", f"salience_registry={root/'salience'/'salience.registry'}",
    "--set", f"out_dir={root/'model'}",
    "--set", "d_emb=16", "--set", "d_h=16", "--set", "d_a=8",
    "--set", "K=2", "--set", "max_epochs=40", "--set", "patience=40",
    "--set", "max_len=8")

run("decode",
    "--set", f"corpus={corpus}",
    "--set", f"model={root/'model'/'model.txt'}",
    "--set", f"salience_model={root/'salience'/'salience.model'}",
    "--set", f"salience_registry={root/'salience'/'salience.registry'}",
    "--set", f"out_dir={root/'decode'}",
    "--set", "K=2", "--set", "beam_width=5", "--set", "max_len=8")

run("evaluate",
    "--set", f"corpus={corpus}",
    "--set", f"decode={root/'decode'/'decode.jsonl'}",
    "--set", f"out_dir={root/'eval'}")

print("decoded summaries:")
for line in (root / "decode" / "decode.jsonl").read_text().splitlines():
    record = json.loads(line)
    print(f"   {record['id']}: {record['summary']!r}")

print("\nevaluation report:")
print("   " + (root / "eval" / "eval.json").read_text().replace("\n", "\n   "))
