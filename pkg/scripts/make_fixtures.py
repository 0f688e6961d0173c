"""One-time generator for the committed test fixtures and golden files.

Golden values are produced by the independent oracle implementations in
tests/oracles.py (scoring, embeddings) and by the system `patch` utility
(diff application), never by the code under test. Re-running overwrites
the fixtures in place; outputs are committed.
"""

from __future__ import annotations

import json
import subprocess
import sys
from pathlib import Path

REPO = Path(__file__).resolve().parents[1]
FIX = REPO / "tests" / "fixtures"
sys.path.insert(0, str(REPO / "tests"))
sys.path.insert(0, str(REPO / "src"))

import oracles  # noqa: E402
from crscore import textproc  # noqa: E402  (plumbing only: sentence split)

TAU = 0.7314
SEED, DIM = 0, 256
PROVIDER_TAG = f"hashbag-d{DIM}-s{SEED}"


def jsonl(path: Path, records: list[dict]) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        for rec in records:
            f.write(json.dumps(rec, sort_keys=True) + "\n")


# ---------------------------------------------------------------------------
# Corpus fixtures
# ---------------------------------------------------------------------------

C1_OLD = """def add(a, b):
    return a+b


def sub(a, b):
    return a - b
"""
C1_NEW = """def add(a, b):
    return a + b


def sub(a, b):
    return a - b
"""
C1_PATCH = """@@ -1,3 +1,3 @@
 def add(a, b):
-    return a+b
+    return a + b

"""

C2_PATCH = """@@ -1,3 +1,4 @@
 function f(x) {
-  return x * 2;
+  const factor = 2;
+  return x * factor;
 }
"""

C3_OLD = """class Greeter {
    String greet(String name) {
        return "Hello " + name;
    }

    int twice(int x) {
        return x * 2;
    }
}
"""
C3_NEW = """class Greeter {
    String greet(String name) {
        if (name == null) {
            throw new IllegalArgumentException("name");
        }
        return "Hello " + name;
    }

    int twice(int x) {
        return 2 * x;
    }
}
"""
C3_PATCH = """@@ -1,5 +1,8 @@
 class Greeter {
     String greet(String name) {
+        if (name == null) {
+            throw new IllegalArgumentException("name");
+        }
         return "Hello " + name;
     }
 
@@ -6,4 +9,4 @@
     int twice(int x) {
-        return x * 2;
+        return 2 * x;
     }
 }
"""

C4_PATCH = """@@ -1,2 +1,2 @@
-func Add(a int, b int) int { return a+b }
+func Add(a, b int) int { return a + b }
 // end
"""

CHANGES = [
    {"id": "c1", "lang": "py", "patch": C1_PATCH, "oldf": C1_OLD, "newf": C1_NEW,
     "meta": {"repo": "demo/calc", "path": "calc.py", "split": "test"}},
    {"id": "c2", "lang": "js", "patch": C2_PATCH,
     "meta": {"repo": "demo/webapp", "path": "scale.js", "split": "test"}},
    {"id": "c3", "lang": "java", "patch": C3_PATCH, "oldf": C3_OLD, "newf": C3_NEW,
     "meta": {"repo": "demo/greeter", "path": "Greeter.java", "split": "test"}},
    {"id": "c4", "lang": "Go", "patch": C4_PATCH,
     "meta": {"repo": "demo/mathgo", "path": "add.go", "split": "test"}},
]

REVIEWS = [
    {"change_id": "c1", "system_id": "ground-truth",
     "text": "Use spaces around the plus operator. The rest looks fine."},
    {"change_id": "c1", "system_id": "sysA",
     "text": "Spaces were added around the plus operator in the add function. Nice cleanup."},
    {"change_id": "c1", "system_id": "sysB",
     "text": "Consider renaming this function to something clearer."},
    {"change_id": "c2", "system_id": "ground-truth",
     "text": "The factor constant is introduced. Why do we need this variable?"},
    {"change_id": "c2", "system_id": "sysA",
     "text": "A constant named factor was introduced in function f. The function now returns x times factor."},
    {"change_id": "c2", "system_id": "sysB", "text": ""},
    {"change_id": "c3", "system_id": "ground-truth",
     "text": "The method now validates its argument before use."},
    {"change_id": "c3", "system_id": "sysA",
     "text": "Argument validation was added to the method. This prevents a null pointer exception."},
    {"change_id": "c3", "system_id": "sysB", "text": "Looks good to me."},
    {"change_id": "c4", "system_id": "ground-truth",
     "text": "Parameter list was shortened using a combined type declaration."},
    {"change_id": "c4", "system_id": "sysA",
     "text": "The two int parameters are now declared together. Formatting of the return expression improved."},
    {"change_id": "c4", "system_id": "sysB", "text": "I like turtles."},
]

PSEUDOREFS = [
    {"id": "c1#0", "change_id": "c1", "kind": "claim",
     "text": "Spaces were added around the plus operator in the add function.",
     "source": "llm:stub-model"},
    {"id": "c1#1", "change_id": "c1", "kind": "implication",
     "text": "The add function becomes easier to read.",
     "source": "llm:stub-model"},
    {"id": "c1#2", "change_id": "c1", "kind": "smell",
     "text": "python-smells: function add is flagged for complexity at lines 1–2 of calc.py",
     "source": "analyzer:python-smells"},
    {"id": "c2#0", "change_id": "c2", "kind": "claim",
     "text": "A constant named factor was introduced in function f.",
     "source": "llm:stub-model"},
    {"id": "c2#1", "change_id": "c2", "kind": "implication",
     "text": "The return value now depends on the factor constant.",
     "source": "llm:stub-model"},
    {"id": "c3#0", "change_id": "c3", "kind": "claim",
     "text": "Argument validation was added to the method.",
     "source": "llm:stub-model"},
    {"id": "c3#1", "change_id": "c3", "kind": "implication",
     "text": "The method throws an exception for invalid input.",
     "source": "llm:stub-model"},
]

ANNOTATIONS = [
    {"change_id": "c1", "system_id": "ground-truth", "con": 5, "comp": 3, "rel": 4,
     "covered_ref_ids": ["c1#0"], "unnecessary_ref_ids": []},
    {"change_id": "c1", "system_id": "sysA", "con": 5, "comp": 4, "rel": 5,
     "covered_ref_ids": ["c1#0", "c1#1"], "unnecessary_ref_ids": []},
    {"change_id": "c1", "system_id": "sysB", "con": 1, "comp": 1, "rel": 1,
     "covered_ref_ids": [], "unnecessary_ref_ids": ["c1#2"]},
    {"change_id": "c2", "system_id": "ground-truth", "con": 4, "comp": 3, "rel": 3,
     "covered_ref_ids": ["c2#0"], "unnecessary_ref_ids": []},
    {"change_id": "c2", "system_id": "sysA", "con": 5, "comp": 5, "rel": 5,
     "covered_ref_ids": ["c2#0", "c2#1"], "unnecessary_ref_ids": []},
    {"change_id": "c2", "system_id": "sysB", "con": 1, "comp": 1, "rel": 1,
     "covered_ref_ids": [], "unnecessary_ref_ids": []},
    {"change_id": "c3", "system_id": "ground-truth", "con": 4, "comp": 3, "rel": 3,
     "covered_ref_ids": ["c3#0"], "unnecessary_ref_ids": []},
    {"change_id": "c3", "system_id": "sysA", "con": 4, "comp": 5, "rel": 4,
     "covered_ref_ids": ["c3#0", "c3#1"], "unnecessary_ref_ids": []},
    {"change_id": "c3", "system_id": "sysB", "con": 2, "comp": 1, "rel": 1,
     "covered_ref_ids": [], "unnecessary_ref_ids": []},
    {"change_id": "c4", "system_id": "ground-truth", "con": 4, "comp": 4, "rel": 4,
     "covered_ref_ids": [], "unnecessary_ref_ids": []},
    {"change_id": "c4", "system_id": "sysA", "con": 4, "comp": 4, "rel": 4,
     "covered_ref_ids": [], "unnecessary_ref_ids": []},
    {"change_id": "c4", "system_id": "sysB", "con": 1, "comp": 1, "rel": 1,
     "covered_ref_ids": [], "unnecessary_ref_ids": []},
]


# ---------------------------------------------------------------------------
# Golden score file (oracle embeddings + oracle scoring + CLI line format)
# ---------------------------------------------------------------------------

def golden_scores() -> list[dict]:
    lexicon = textproc.load_default_lexicon()
    prefs_by_change: dict[str, list[dict]] = {}
    for ref in PSEUDOREFS:
        prefs_by_change.setdefault(ref["change_id"], []).append(ref)
    records = []
    for review in REVIEWS:
        prefs = prefs_by_change.get(review["change_id"], [])
        sents = textproc.sentence_set("doc", review["text"], lexicon)
        sent_texts = sents.embed_texts()
        pref_texts = []
        for p in prefs:
            toks = textproc.filter_stopwords(p["text"], lexicon)
            pref_texts.append(" ".join(toks) if toks else p["text"].lower())
        values = [
            [
                oracles.cosine_oracle(
                    oracles.hashbag_vector(pt, SEED, DIM),
                    oracles.hashbag_vector(s, SEED, DIM),
                )
                for s in sent_texts
            ]
            for pt in pref_texts
        ]
        con, comp, rel = oracles.brute_force_score(values, TAU)
        flags = []
        if not prefs:
            flags.append("empty_prefs")
        if not sent_texts:
            flags.append("empty_sents")
        records.append({
            "change_id": review["change_id"],
            "system_id": review["system_id"],
            "con": con, "comp": comp, "rel": rel,
            "n_prefs": len(prefs), "n_sents": len(sent_texts),
            "tau": TAU, "provider_tag": PROVIDER_TAG,
            "flags": flags,
        })
    records.sort(key=lambda r: (r["change_id"], r["system_id"]))
    return records


# ---------------------------------------------------------------------------
# Materialization fixture (golden produced by patch(1))
# ---------------------------------------------------------------------------

MAT_BEFORE = """#!/usr/bin/env python3
import sys


def parse(argv):
    if not argv:
        return None
    return argv[0]


def run(name):
    print("hello", name)
    return 0


def main():
    name = parse(sys.argv[1:])
    run(name)


if __name__ == "__main__":
    main()
"""

MAT_DIFF = """--- a/app.py
+++ b/app.py
@@ -1,5 +1,6 @@
 #!/usr/bin/env python3
 import sys
+import logging


 def parse(argv):
@@ -8,9 +9,10 @@
     return argv[0]


-def run(name):
-    print("hello", name)
-    return 0
+def run(name, greeting="hello"):
+    logging.info("greeting %s", name)
+    print(greeting, name)
+    return 0 if name else 1


 def main():
@@ -18,5 +20,6 @@
     run(name)


+
 if __name__ == "__main__":
     main()
"""


def make_materialize_fixture(root: Path) -> None:
    mat = root / "materialize"
    mat.mkdir(parents=True, exist_ok=True)
    (mat / "before.txt").write_text(MAT_BEFORE, encoding="utf-8")
    (mat / "change.diff").write_text(MAT_DIFF, encoding="utf-8")
    work = mat / "_work"
    work.mkdir(exist_ok=True)
    target = work / "app.py"
    target.write_text(MAT_BEFORE, encoding="utf-8")
    subprocess.run(
        ["patch", "--quiet", str(target), "-i", str(mat / "change.diff")],
        check=True,
    )
    (mat / "golden_after.txt").write_text(target.read_text(), encoding="utf-8")
    target.unlink()
    work.rmdir()


GOLDEN_TEXTS = [
    "",
    "a b",
    "b a",
    "Use `foo.bar()`. Then test.",
    "The quick brown fox jumps over the lazy dog",
]


def main() -> None:
    jsonl(FIX / "changes.jsonl", CHANGES)
    jsonl(FIX / "reviews.jsonl", REVIEWS)
    jsonl(FIX / "pseudorefs.jsonl", PSEUDOREFS)
    jsonl(FIX / "annotations.jsonl", ANNOTATIONS)
    jsonl(FIX / "golden" / "score-golden.jsonl", golden_scores())
    make_materialize_fixture(FIX)
    vectors = {
        "seed": SEED,
        "dim": DIM,
        "texts": GOLDEN_TEXTS,
        "vectors": [oracles.hashbag_vector(t, SEED, DIM).tolist() for t in GOLDEN_TEXTS],
    }
    (FIX / "golden").mkdir(parents=True, exist_ok=True)
    (FIX / "golden" / "hashbag-vectors.json").write_text(
        json.dumps(vectors), encoding="utf-8"
    )
    print(f"fixtures written under {FIX}")


if __name__ == "__main__":
    main()
