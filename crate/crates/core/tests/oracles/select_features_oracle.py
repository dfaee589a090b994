"""Mean Spearman rho between gold substitute counts and each score file.

Reads tests/fixtures/trial.tsv and tests/fixtures/scores/*.tsv. Words missing
from a score file tie for last place. Instances whose gold counts are all
equal are skipped; a feature constant over an instance contributes 0.
"""
import collections
import pathlib
import statistics as st

root = pathlib.Path(__file__).resolve().parents[1] / "fixtures"


def avg_ranks(vals):
    # Higher is better; None sorts after every present value.
    key = [(-v if v is not None else float("inf")) for v in vals]
    order = sorted(range(len(vals)), key=lambda i: key[i])
    ranks = [0.0] * len(vals)
    i = 0
    while i < len(order):
        j = i
        while j + 1 < len(order) and key[order[j + 1]] == key[order[i]]:
            j += 1
        for t in order[i : j + 1]:
            ranks[t] = (i + j + 2) / 2
        i = j + 1
    return ranks


def pearson(a, b):
    ma, mb = st.mean(a), st.mean(b)
    sab = sum((x - ma) * (y - mb) for x, y in zip(a, b))
    saa = sum((x - ma) ** 2 for x in a)
    sbb = sum((y - mb) ** 2 for y in b)
    if saa == 0 or sbb == 0:
        return 0.0
    return sab / (saa * sbb) ** 0.5


instances = []
for line in (root / "trial.tsv").read_text().splitlines():
    cols = line.split("\t")
    counts = collections.Counter(c.lower() for c in cols[2:])
    words = sorted(counts)
    if len(words) < 2 or len(set(counts.values())) == 1:
        continue
    instances.append((words, [float(counts[w]) for w in words]))

results = []
for path in sorted((root / "scores").glob("*.tsv")):
    table = {}
    for line in path.read_text().splitlines():
        w, v = line.split("\t")
        table[w.lower()] = float(v)
    rhos = [
        pearson(avg_ranks(g), avg_ranks([table.get(w) for w in words]))
        for words, g in instances
    ]
    results.append((path.stem, st.mean(rhos), len(rhos)))

for name, rho, n in sorted(results, key=lambda r: (-r[1], r[0])):
    print(f"{name}\t{rho:.4f}\t{n}")
# wp_crowd	0.8726	5
# wp_corp	0.5835	5
# freq	0.2564	5
# aoa	-0.4111	5
