#!/usr/bin/env python3
"""Writes data/fixtures/fixture200.jsonl, a 200-clip corpus of movie-description
style sentences used by the generation tests, plus a small stoplist."""

import json
import random
from pathlib import Path

ROOT = Path(__file__).resolve().parent.parent
OUT = ROOT / "data" / "fixtures"

SUBJECTS = ["SOMEONE", "He", "She", "They", "The man", "The woman", "His friend", "The boy", "The girl"]
VERBS = ["opens", "closes", "grabs", "watches", "drops", "lifts", "pushes", "holds", "turns", "reaches for",
         "stares at", "looks at", "picks up", "puts down", "slams"]
ADJS = ["old", "small", "dark", "heavy", "red", "empty", "broken", "wooden", "bright", "quiet"]
NOUNS = ["door", "phone", "car", "letter", "glass", "book", "bag", "window", "table", "gun", "hand", "head",
         "face", "box", "key", "chair", "bottle", "photo", "envelope", "café"]
ADVERBS = ["slowly", "quickly", "quietly", "carefully", "suddenly", "gently", "angrily"]
TAILS = ["and walks away", "then smiles", "and leaves the room", "as the rain falls", "in the hallway",
         "near the window", "with a sigh", "before turning around", "while someone's dog barks"]
TAGS = {"the": "OTHER", "a": "OTHER", "and": "OTHER", "his": "OTHER", "her": "OTHER", ".": "OTHER",
        ",": "OTHER", "he": "OTHER", "she": "OTHER", "they": "OTHER", "at": "OTHER", "for": "OTHER",
        "up": "OTHER", "down": "OTHER", "someone": "NOUN"}


def zipf_choice(rng, items, s=1.1):
    weights = [1.0 / (i + 1) ** s for i in range(len(items))]
    return rng.choices(items, weights=weights, k=1)[0]


def sentence(rng):
    words = [rng.choice(SUBJECTS)]
    if rng.random() < 0.4:
        words.append(zipf_choice(rng, ADVERBS))
    words.append(zipf_choice(rng, VERBS))
    words.append(rng.choice(["the", "a", "his", "her"]))
    if rng.random() < 0.5:
        words.append(zipf_choice(rng, ADJS))
    words.append(zipf_choice(rng, NOUNS))
    if rng.random() < 0.6:
        words.append(rng.choice(TAILS))
    text = " ".join(words) + rng.choice([".", ".", ".", "!", "..."])
    if rng.random() < 0.15:
        text = text.replace(" the ", " the \"", 1) + "\""
    return text


def pretag(text):
    out = []
    for tok in text.replace(".", " .").replace("!", " !").replace('"', " ").split():
        low = tok.lower()
        if low in TAGS:
            tag = TAGS[low]
        elif low in [v.split()[0] for v in VERBS]:
            tag = "VERB"
        elif low in ADJS:
            tag = "ADJ"
        elif low in ADVERBS:
            tag = "ADV"
        elif low.isalpha():
            tag = "NOUN"
        else:
            tag = "OTHER"
        out.append(f"{tok}/{tag}")
    return out


def main():
    rng = random.Random(20161205)
    OUT.mkdir(parents=True, exist_ok=True)
    with open(OUT / "fixture200.jsonl", "w", encoding="utf-8") as f:
        for i in range(200):
            split = "train" if i % 10 < 8 else ("val" if i % 10 == 8 else "test")
            text = sentence(rng)
            rec = {"clip_id": f"movie{i // 25:02d}_clip{i:03d}", "split": split}
            rec["annotation"] = pretag(text) if i % 13 == 5 else text
            rec["duration_s"] = round(rng.uniform(1.5, 12.0), 2)
            f.write(json.dumps(rec, ensure_ascii=False) + "\n")
    with open(OUT / "stoplist.txt", "w", encoding="utf-8") as f:
        f.write("# words never blanked\nsomeone\nhand\nHead\n")


if __name__ == "__main__":
    main()
