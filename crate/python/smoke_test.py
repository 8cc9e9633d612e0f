"""Smoke test for the `revrec` extension module against the bundled fixture.

    pip install --no-build-isolation ./crates/py
    python3 python/smoke_test.py
"""

import tempfile
from pathlib import Path

import revrec

FIXTURES = Path(__file__).resolve().parent.parent / "crates" / "cli" / "tests" / "fixtures"


def main():
    store = revrec.CorpusStore()
    for app in ("firefox", "brave"):
        store.register_app(app, "browser")
        store.ingest_reports(FIXTURES / f"{app}_reports.jsonl", app)
        summary = store.ingest_reviews(FIXTURES / f"{app}_reviews.jsonl", app)
        print(app, summary["accepted"], "reviews accepted")
    print(store)

    with tempfile.TemporaryDirectory() as tmp:
        store.save(tmp)
        store = revrec.CorpusStore.load(tmp)

    engine = revrec.Engine(store, threshold=0.9, top_n=3)
    recs = engine.recommend("firefox", "brave")
    decided = [r for r in recs if r["decided"]]
    dups = [r for r in recs if r["duplicate_of"]]
    print(len(recs), "reports,", len(decided), "recommended,", len(dups), "duplicates")
    assert len(recs) == 12 and len(decided) == 4 and len(dups) == 2

    golden = (FIXTURES / "golden_recommend_firefox_brave.jsonl").read_text().splitlines()
    import json
    assert recs == [json.loads(line) for line in golden]

    pairs = engine.ground_truth("firefox", "brave")
    assert [(p["report_a"]["report_id"], p["report_b"]["report_id"]) for p in pairs] == [
        ("ff-102", "br-1"),
        ("ff-105", "br-2"),
    ]

    ranks = [1] * 21 + [2] * 11 + [3] * 6 + [None] * 43
    print("Acc@1..3", [round(100 * revrec.acc_at_n(ranks, n), 2) for n in (1, 2, 3)])
    print("MRR@1..3", [round(100 * revrec.mrr_at_n(ranks, n), 2) for n in (1, 2, 3)])
    print("ok")


if __name__ == "__main__":
    main()
