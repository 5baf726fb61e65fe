"""Independent reference computation for the corpus10 / classes12 / onto5
fixtures.

Recounts the vocabulary (stopwords removed, Snowball English stems), the
label histograms, the year filter, the per-level class projections and the
brute-force set distances, without touching the Rust code.

    python3 corpus_oracle.py            # print everything
    python3 corpus_oracle.py --write    # refresh the expected files
"""

import os
import sys
from collections import Counter, deque

from enrichment_oracle import FIXTURES, load_jsonl, load_stopwords, tokenize


def doc_text(doc):
    parts = [p for p in (doc.get("title", ""), doc.get("abstract", "")) if p]
    return "\n".join(parts)


def vocabulary(docs, stop):
    df = Counter()
    for d in docs:
        df.update(set(tokenize(doc_text(d), stop, True)))
    lines = [f"#docs\t{len(docs)}"]
    for i, term in enumerate(sorted(df)):
        lines.append(f"{term}\t{i}\t{df[term]}")
    return lines


def histogram(docs, field):
    counts = Counter()
    for d in docs:
        counts.update(set(d[field]))
    rows = sorted(counts.items(), key=lambda kv: (-kv[1], kv[0]))
    return [f"{label}\t{n}" for label, n in rows]


def projection(docs, classes):
    parent = {c["id"]: c.get("parent") for c in classes}
    level = {c["id"]: c["level"] for c in classes}
    lines = []
    for d in docs:
        for target in (1, 2, 3):
            out = set()
            for c in d["gold_classes"]:
                if level[c] < target:
                    continue
                while level[c] > target:
                    c = parent[c]
                out.add(c)
            lines.append(f"{d['doc_id']}\t{target}\t{','.join(sorted(out))}")
    return lines


def hop_table(concepts):
    adj = {c["id"]: set() for c in concepts}
    for c in concepts:
        for other in c["broader"] + c["related"]:
            adj[c["id"]].add(other)
            adj[other].add(c["id"])
    table = {}
    for s in adj:
        dist = {s: 0}
        queue = deque([s])
        while queue:
            n = queue.popleft()
            for m in adj[n]:
                if m not in dist:
                    dist[m] = dist[n] + 1
                    queue.append(m)
        table[s] = dist
    return table


def set_distances(concepts, cases_path):
    hops = hop_table(concepts)

    def d(a, b):
        h = hops[a].get(b)
        return 1.0 if h is None else h / (h + 1)

    lines = []
    with open(cases_path, encoding="utf-8") as fh:
        for line in fh:
            if not line.strip() or line.startswith("#"):
                continue
            name, a, b = line.rstrip("\n").split("\t")
            A, B = sorted(set(a.split(","))), sorted(set(b.split(",")))
            a_side = sum(min(d(x, y) for y in B) for x in A) / len(A)
            b_side = sum(min(d(x, y) for x in A) for y in B) / len(B)
            lines.append(f"{name}\t{0.5 * (a_side + b_side)!r}")
    return lines


def main():
    docs = load_jsonl(os.path.join(FIXTURES, "corpus10.jsonl"))
    classes = load_jsonl(os.path.join(FIXTURES, "classes12.jsonl"))
    concepts = load_jsonl(os.path.join(FIXTURES, "onto5.jsonl"))
    stop = load_stopwords()

    out = {
        "corpus10.vocabulary.expected.tsv": vocabulary(docs, stop),
        "corpus10.classes_histogram.expected.tsv": histogram(docs, "gold_classes"),
        "corpus10.concepts_histogram.expected.tsv": histogram(docs, "gold_concepts"),
        "corpus10.after2003.expected.txt": [d["doc_id"] for d in docs if d.get("year") is not None and d["year"] > 2003],
        "corpus10.projection.expected.tsv": projection(docs, classes),
        "onto5.set_distance.expected.tsv": set_distances(concepts, os.path.join(FIXTURES, "onto5.set_distance.cases.tsv")),
    }
    for name, lines in out.items():
        body = "\n".join(lines) + "\n"
        if "--write" in sys.argv:
            with open(os.path.join(FIXTURES, name), "w", encoding="utf-8") as fh:
                fh.write(body)
        print(f"== {name}")
        print(body)


if __name__ == "__main__":
    main()
