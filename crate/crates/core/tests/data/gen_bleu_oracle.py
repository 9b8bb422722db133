"""Regenerates bleu_oracle.json with sacrebleu as the reference implementation.

Sentence-level BLEU, whitespace tokens, lowercased, no smoothing, n-gram order
capped by the candidate length (sacrebleu's effective order).
"""
import json
import random

from sacrebleu.metrics import BLEU

VOCAB = ("write a text that expresses joy the felt i when because sad angry "
         "happy day Joy TEXT sentence describe situation person of in").split()

def sentence(rng, lo, hi):
    return " ".join(rng.choice(VOCAB) for _ in range(rng.randint(lo, hi)))

def main():
    rng = random.Random(20240417)
    pairs = [("the text expresses joy", "write a text that expresses joy")]
    while len(pairs) < 100:
        ref = sentence(rng, 1, 14)
        mode = rng.random()
        if mode < 0.5:
            toks = ref.split()
            i = rng.randint(0, len(toks) - 1)
            j = rng.randint(i, len(toks) - 1)
            cand = " ".join(toks[i:j + 1] + sentence(rng, 0, 4).split())
        elif mode < 0.85:
            toks = ref.split()
            cand = " ".join(t.upper() if rng.random() < 0.3 else t for t in toks + toks[: rng.randint(0, 3)])
        else:
            cand = sentence(rng, 1, 14)
        if cand.strip():
            pairs.append((cand, ref))
    bleu = BLEU(tokenize="none", lowercase=True, smooth_method="none", effective_order=True)
    out = [
        {"candidate": c, "reference": r, "bleu": bleu.sentence_score(c, [r]).score / 100.0}
        for c, r in pairs
    ]
    with open("bleu_oracle.json", "w") as f:
        json.dump(out, f, indent=1)
        f.write("\n")

if __name__ == "__main__":
    main()
