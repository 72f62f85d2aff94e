#!/usr/bin/env python3
"""Smoke test for the bugbrief_py extension module.

Builds the cdylib with cargo, imports it, and exercises tokenization,
chunk planning, the metrics, and a mock end-to-end summarize/evaluate
round trip over the shipped fixture corpus.

Usage: python3 python/smoke_test.py [--release]
"""

import json
import math
import shutil
import subprocess
import sys
import tempfile
from pathlib import Path

REPO = Path(__file__).resolve().parent.parent
FIXTURES = REPO / "crates" / "core" / "fixtures"


def build_extension(release: bool) -> Path:
    profile = "release" if release else "debug"
    cmd = ["cargo", "build", "-p", "bugbrief-py", "--features", "extension-module"]
    if release:
        cmd.append("--release")
    subprocess.run(cmd, cwd=REPO, check=True)
    return REPO / "target" / profile / "libbugbrief_py.so"


def main() -> int:
    release = "--release" in sys.argv
    built = build_extension(release)

    staging = Path(tempfile.mkdtemp(prefix="bugbrief_py_"))
    shutil.copy2(built, staging / "bugbrief_py.so")
    sys.path.insert(0, str(staging))
    import bugbrief_py as bb

    # tokenizer
    assert bb.tokenize_text("int x=0;") == ["int", "x", "=", "0", ";"]
    tokens = bb.tokenize_text("App crashes on save. Steps follow.")
    assert bb.detokenize(tokens) == "App crashes on save. Steps follow."
    assert bb.tokenize_code("a\nb") == ["a", "\n", "b"]

    # chunk planning: ceil(n / L) segments, exact cover
    toks = [f"t{i}" for i in range(2500)]
    segments = bb.plan_chunks(toks, 1024, snap="none")
    assert [length for (_, length) in segments] == [1024, 1024, 452]
    assert bb.chunk_tokens(toks, 1024, 0, snap="none") == toks[:1024]
    for n in (0, 1, 64, 100, 1000):
        segs = bb.plan_chunks(toks[:n], 64, snap="none")
        assert len(segs) == math.ceil(n / 64)
        assert sum(length for (_, length) in segs) == n

    # hand-derived metric values
    ref = ["parser", "crashes", "on", "empty", "input"]
    cand = ["parser", "crashes", "when", "input", "empty"]
    p, r, f1 = bb.rouge_n(cand, ref, 1)
    assert abs(p - 0.8) < 1e-9 and abs(r - 0.8) < 1e-9
    _, r2, _ = bb.rouge_n(cand, ref, 2)
    assert abs(r2 - 0.25) < 1e-9
    _, rl_recall, _ = bb.rouge_l(["a", "c", "b", "d"], ["a", "b", "c", "d"])
    assert abs(rl_recall - 0.75) < 1e-9
    bp, br_, bf = bb.bert_score_one_hot(["a", "b"], ["a", "c"])
    assert abs(bp - 0.5) < 1e-9 and abs(br_ - 0.5) < 1e-9 and abs(bf - 0.5) < 1e-9
    d, sufficient = bb.sufficiency_one_hot(["a", "b"], [], ["a"], epsilon=0.3)
    assert abs(d - (1.0 - 1.0 / math.sqrt(2.0))) < 1e-9
    assert sufficient

    # mock end-to-end over the fixture corpus
    results = bb.summarize_corpus(
        str(FIXTURES / "fixture5.jsonl"),
        condition="report_plus_code",
        strategy="zero",
        ordering="report_first",
        chunk_limit=64,
        provider="mock",
        parallelism=2,
    )
    assert len(results) == 5
    assert all(rec["summary"] for rec in results)
    assert any(len(rec["chunks"]) > 1 for rec in results), "expected a multi-chunk instance"

    with tempfile.TemporaryDirectory() as tmp:
        results_path = Path(tmp) / "results.jsonl"
        with open(results_path, "w") as f:
            for rec in results:
                f.write(json.dumps(rec) + "\n")
        report = bb.evaluate_files(str(FIXTURES / "fixture5.jsonl"), str(results_path))
        assert set(report["per_pair"]) == {f"demo-00{i}" for i in range(1, 6)}
        corpus_level = report["corpus"]
        assert 0.0 <= corpus_level["rouge1_micro"] <= 1.0
        assert 0.0 <= corpus_level["bert_macro"]["f1"] <= 1.0

        # fine-tune export: 9/1 split on the 10-instance fixture
        out = Path(tmp) / "ft.jsonl"
        train, valid = bb.export_finetune(str(FIXTURES / "finetune10.jsonl"), str(out), variant="br")
        assert (train, valid) == (9, 1)
        assert bb.finetune_split("ft-001") == "valid"

    print("bugbrief_py smoke test: OK")
    return 0


if __name__ == "__main__":
    sys.exit(main())
