"""Independent reference values for the hash-based stub providers.

Run with `python3 stub_oracle.py`; the printed values are frozen into the
Rust unit and integration tests.
"""
import math


def fnv1a64(s: str) -> int:
    h = 0xCBF29CE484222325
    for b in s.encode("utf-8"):
        h ^= b
        h = (h * 0x100000001B3) & 0xFFFFFFFFFFFFFFFF
    return h


def score(s: str) -> float:
    return (fnv1a64(s) % 1000) / 1000


def topk(vocab, k):
    return sorted(((w, score(w)) for w in vocab), key=lambda t: (-t[1], t[0]))[:k]


def embed(word, d=8):
    w = word.lower()
    return [(fnv1a64(f"{w}#{i}") % 2001) / 1000 - 1 for i in range(d)]


def cosine(u, v):
    dot = sum(a * b for a, b in zip(u, v))
    nu = math.sqrt(sum(a * a for a in u))
    nv = math.sqrt(sum(b * b for b in v))
    return 0.0 if nu == 0 or nv == 0 else dot / (nu * nv)


if __name__ == "__main__":
    print("topk(big,large,huge,vast;3) =", topk(["big", "large", "huge", "vast"], 3))
    print("entail('a b','a c') =", score("a b→a c"))
    print("entail('a c','a b') =", score("a c→a b"))
    print("entail('x','x') raw =", score("x→x"))
    print("embed('Big') =", embed("Big"))
    print("wp_crowd:mandatory =", score("wp_crowd:mandatory"))

    # 50-word vocabulary generation example
    vocab50 = [f"w{chr(97 + i // 26)}{chr(97 + i % 26)}" for i in range(50)]
    vocab50 = ["zq" + w for w in vocab50]
    print("vocab50 top30 =", [w for w, _ in topk(vocab50, 30)])

    # context loss: sentence "the cat sat" with candidate at index 1 ("dog"), m=5
    ctx = ["the", "sat"]
    losses = [-math.log(max(score(w), 1e-12)) for w in ctx]
    print("loss('the dog sat') =", sum(losses) / len(losses))
    # 3-word context: "a b dog c" candidate index 2, m=2 -> context a, b, c
    ctx = ["a", "b", "c"]
    losses = [-math.log(max(score(w), 1e-12)) for w in ctx]
    print("loss('a b dog c', m=2) =", repr(sum(losses) / len(losses)))
    print("sim(compulsory, mandatory) =", repr(cosine(embed("compulsory"), embed("mandatory"))))
