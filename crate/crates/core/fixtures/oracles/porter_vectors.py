"""Reference stems for the porter-en stemmer, produced by the Python
snowballstemmer package (Snowball English). Words come from every fixture
text plus a list of morphologically varied English words.

    python3 porter_vectors.py --write
"""

import json
import os
import sys

import snowballstemmer

from enrichment_oracle import FIXTURES, letter_runs

EXTRA = """
caresses ponies ties caress cats feed agreed plastered bled motoring sing
conflated troubled sized hopping tanned falling hissing fizzed failing filing
happy sky relational conditional rational valenci hesitanci digitizer
conformabli radicalli differentli vileli analogousli vietnamization
predication operator feudalism decisiveness hopefulness callousness formaliti
sensitiviti sensibiliti triplicate formative formalize electriciti electrical
hopeful goodness revival allowance inference airliner gyroscopic adjustable
defensible irritant replacement adjustment dependent adoption homologou
communism activate angulariti homologous effective bowdlerize probate rate
cease controll roll generously generous generalization generalizations
running runner runs ran easily fairly dying lying tying news innings
outing canning herring earring proceed exceed succeed skies dying
knightly arguing argued argues argus consign consigned consigning
consignment consist consisted consistency consistent consistently
consisting consists consolation consolations consolatory console
consoled consoles consolidate consolidated consolidating consoling
international internationalization nationalism nationality nations
unemployment unemployed employers employment employees employing
migration migrants migrated migrating immigration emigration
policies policy political politics politician welfare
""".split()


def words():
    seen = set(EXTRA)
    for name in sorted(os.listdir(FIXTURES)):
        if not name.endswith(".jsonl"):
            continue
        with open(os.path.join(FIXTURES, name), encoding="utf-8") as fh:
            for line in fh:
                if not line.strip():
                    continue
                rec = json.loads(line)
                for key in ("title", "abstract", "prefLabel"):
                    for run in letter_runs(rec.get(key, "")):
                        seen.add(run.lower())
                for alt in rec.get("altLabels", []):
                    for run in letter_runs(alt):
                        seen.add(run.lower())
    return sorted(seen)


def main():
    stem = snowballstemmer.stemmer("english")
    lines = [f"{w}\t{stem.stemWord(w)}" for w in words()]
    body = "\n".join(lines) + "\n"
    if "--write" in sys.argv:
        with open(os.path.join(FIXTURES, "porter_en.vectors.tsv"), "w", encoding="utf-8") as fh:
            fh.write(body)
    print(body, end="")


if __name__ == "__main__":
    main()
