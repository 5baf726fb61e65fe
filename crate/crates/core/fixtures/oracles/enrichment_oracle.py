"""Independent reference computation for the onto5 x encyc8 fixture.

Recomputes the concept mapping table, the 1-hop neighborhoods, the
neighborhood term bags, the matcher pattern dictionary and all pairwise hop
distances (ontology only and union graph) directly from the JSONL files, without touching the Rust code. Outputs are frozen into the
*.expected.* files next to the fixtures.

    python3 enrichment_oracle.py            # print everything
    python3 enrichment_oracle.py --write    # refresh the expected files
"""

import json
import os
import sys
import unicodedata
from collections import Counter, deque

import snowballstemmer

HERE = os.path.dirname(os.path.abspath(__file__))
FIXTURES = os.path.dirname(HERE)
STOPWORDS = os.path.join(FIXTURES, "..", "data", "stopwords_en.txt")

STEM = snowballstemmer.stemmer("english")


def load_jsonl(path):
    with open(path, encoding="utf-8") as fh:
        return [json.loads(line) for line in fh if line.strip()]


def load_stopwords():
    words = set()
    with open(STOPWORDS, encoding="utf-8") as fh:
        for line in fh:
            line = line.strip()
            if line and not line.startswith("#"):
                words.add(line)
    return words


def letter_runs(text):
    runs, cur = [], []
    for ch in text:
        if unicodedata.category(ch).startswith("L"):
            cur.append(ch)
        elif cur:
            runs.append("".join(cur))
            cur = []
    if cur:
        runs.append("".join(cur))
    return runs


def tokenize(text, stopwords, stem):
    out = []
    for run in letter_runs(text):
        tok = run.lower()
        if tok in stopwords:
            continue
        out.append(STEM.stemWord(tok) if stem else tok)
    return out


def norm(text):
    return " ".join(tokenize(text, set(), False))


def jaccard(a, b):
    a, b = set(a), set(b)
    if not a and not b:
        return 0.0
    return len(a & b) / len(a | b)


def mapping(concepts, entries, min_jaccard):
    by_title = {}
    for e in sorted(entries, key=lambda e: e["entry_id"]):
        by_title.setdefault(norm(e["title"]), e["entry_id"])
    table = {}
    for c in concepts:
        pref = norm(c["prefLabel"])
        if pref in by_title:
            table[c["id"]] = ("exact", [by_title[pref]])
            continue
        alias = [by_title[norm(a)] for a in c["altLabels"] if norm(a) in by_title]
        if alias:
            table[c["id"]] = ("alias", [sorted(alias)[0]])
            continue
        label = pref.split()
        cands = []
        for e in entries:
            j = jaccard(label, norm(e["title"]).split())
            if j > 0 and j >= min_jaccard:
                cands.append((-j, e["entry_id"]))
        cands.sort()
        if cands:
            table[c["id"]] = ("multi", [eid for _, eid in cands[:5]])
        else:
            table[c["id"]] = ("unmapped", [])
    return table


def neighborhood(seeds, entries, k, cap):
    ids = {e["entry_id"] for e in entries}
    adj = {eid: set() for eid in ids}
    links = set()
    for e in entries:
        for t in e["outlinks"]:
            if t in ids:
                adj[e["entry_id"]].add(t)
                adj[t].add(e["entry_id"])
                links.add((e["entry_id"], t))
    hop = {s: 0 for s in seeds}
    frontier = sorted(seeds)
    for h in range(1, k + 1):
        fresh = sorted({n for f in frontier for n in adj[f] if n not in hop})[:cap]
        for n in fresh:
            hop[n] = h
        frontier = fresh
    rels = sorted((a, b) for (a, b) in links if a in hop and b in hop)
    return hop, rels


def bfs(adj, source):
    dist = {source: 0}
    queue = deque([source])
    while queue:
        n = queue.popleft()
        for m in adj[n]:
            if m not in dist:
                dist[m] = dist[n] + 1
                queue.append(m)
    return dist


def main():
    concepts = load_jsonl(os.path.join(FIXTURES, "onto5.jsonl"))
    entries = load_jsonl(os.path.join(FIXTURES, "encyc8.jsonl"))
    abstracts = {e["entry_id"]: e["abstract"] for e in entries}
    stop = load_stopwords()

    table = mapping(concepts, entries, 0.4)
    mapping_lines = []
    bags = {}
    for c in sorted(concepts, key=lambda c: c["id"]):
        kind, eids = table[c["id"]]
        mapping_lines.append(f"{c['id']}\t{kind}\t{','.join(eids)}")
        hop, _ = neighborhood(eids, entries, 1, 50)
        bag = Counter()
        for eid in hop:
            bag.update(tokenize(abstracts[eid], stop, True))
        bags[c["id"]] = bag

    # Pattern dictionary at min_term_weight = 0.2 and 0.05.
    dictionaries = {}
    for thr in (0.2, 0.05):
        rows = set()
        for c in concepts:
            for label in [c["prefLabel"]] + c["altLabels"]:
                rows.add((" ".join(tokenize(label, stop, True)), c["id"], "1.0"))
            bag = bags[c["id"]]
            total = sum(bag.values())
            for term, n in bag.items():
                if total and n / total >= thr:
                    rows.add((term, c["id"], "0.5"))
        # a label pattern supersedes a neighborhood pattern on the same tokens
        best = {}
        for pat, cid, w in rows:
            key = (pat, cid)
            best[key] = max(best.get(key, "0"), w)
        dictionaries[thr] = sorted(f"{p}\t{c}\t{w}" for (p, c), w in best.items())

    # Hop distances on the ontology alone and on the union graph.
    base_adj = {c["id"]: set() for c in concepts}
    for c in concepts:
        for other in c["broader"] + c["related"]:
            base_adj[c["id"]].add(other)
            base_adj[other].add(c["id"])
    union_adj = {n: set(v) for n, v in base_adj.items()}

    def link(a, b):
        union_adj.setdefault(a, set()).add(b)
        union_adj.setdefault(b, set()).add(a)

    for c in concepts:
        _, eids = table[c["id"]]
        hop, rels = neighborhood(eids, entries, 1, 50)
        for eid in hop:
            union_adj.setdefault("entry:" + eid, set())
        for eid, h in hop.items():
            if h == 0:
                link(c["id"], "entry:" + eid)
        for a, b in rels:
            link("entry:" + a, "entry:" + b)

    distance_lines = []
    ids = sorted(base_adj)
    for a in ids:
        base_h = bfs(base_adj, a)
        union_h = bfs(union_adj, a)
        for b in ids:
            fmt = lambda h: "-" if h is None else str(h)
            distance_lines.append(f"{a}\t{b}\t{fmt(base_h.get(b))}\t{fmt(union_h.get(b))}")

    bag_lines = []
    for cid in sorted(bags):
        total = sum(bags[cid].values())
        for term in sorted(bags[cid]):
            bag_lines.append(f"{cid}\t{term}\t{bags[cid][term]}\t{total}")

    out = {
        "onto5_encyc8.mapping.expected.tsv": mapping_lines,
        "onto5_encyc8.termbags.expected.tsv": bag_lines,
        "onto5_encyc8.dictionary_0.2.expected.tsv": dictionaries[0.2],
        "onto5_encyc8.dictionary_0.05.expected.tsv": dictionaries[0.05],
        "onto5_encyc8.distances.expected.tsv": distance_lines,
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
