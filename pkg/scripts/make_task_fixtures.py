"""Build the synthetic similarity-task fixtures shipped under data/tasks/.

The published task sentences are not available, so the fixtures are
stand-ins that reproduce the published size statistics exactly:

    references: 30 sentences, 246 tokens, 189 types
    candidates: 150 sentences, 1026 tokens, 599 types

Every candidate of rank k (1 = closest) shares 5 - k content words with its
reference and nothing else except the four stopwords, so with orthogonal
word vectors the cosine ranking equals the stored human ranking.

Usage: python scripts/make_task_fixtures.py [output_dir]
"""

import math
import random
import sys
from pathlib import Path

STOPWORDS = ["in", "iwan", "tlen", "ipan"]

NOUNS = """
ichpochtli telpochtli kuawtli koltzin ilamah weweh tlakatl tlamatini tonatih
momachtiani temachtiani posolli xochitl siwatl tlahtolli tatzin nantzin tototl
koyotl tateh mapachin yolkatl miston elotl xokotl tochin nakatl kalli atl
tepetl kuawitl tlaxkalli milli tetl metl tlalli chichi totolin masatl ayotl
etl chilli awakatl tomatl kakawatl oselotl kowatl michin papalotl amatl
kuikatl tekitl ohtli altepetl ilwikatl metstli sitlalin ehekatl kiawitl tlitl
sintli tlakwalli pahtli tepostli kamatl
""".split()

VERBS = """
nehnemi kwa kaki toka ahsikamati itta chiwa chiya pia mati maka ixpantilia
machtia welitta neki tlasohtla paka paktia miki ixpoliwi kochi choka wetska
kuika ahsi yawi mitotia tekiti tlahtoa ichteki kowa namaka pano kalaki kisa
temoa ilwia nemi ewa
""".split()

PARTICLES = """
amo axkeman axkan aman niman nochi miyak seki achi kanah ompa nikan keman
kampa ika pampa ihkon yewa newa tewa noihki san ok maski tonalli yalwa nama
""".split()

NOUN_PREFIXES = ["", "no", "mo", "i", "to"]
VERB_PREFIXES = ["", "ni", "ti", "ki", "nik", "tik", "tla", "nitla", "titla"]


def _stem(noun):
    for suffix in ("tli", "tl", "li", "in"):
        if noun.endswith(suffix) and len(noun) > len(suffix) + 1:
            return noun[: -len(suffix)]
    return noun


def vocabulary():
    words = list(PARTICLES)
    for n in NOUNS:
        words.append(n)
        words.extend(p + _stem(n) for p in NOUN_PREFIXES if p)
    for v in VERBS:
        words.extend(p + v for p in VERB_PREFIXES)
    seen, out = set(), []
    for w in words:
        if w not in seen and w not in STOPWORDS:
            seen.add(w)
            out.append(w)
    return out


def split_total(rng, total, parts, low, high):
    """Random integers in [low, high] summing to total."""
    values = [low] * parts
    remaining = total - low * parts
    if remaining < 0 or remaining > (high - low) * parts:
        raise ValueError("infeasible split")
    while remaining:
        i = rng.randrange(parts)
        if values[i] < high:
            values[i] += 1
            remaining -= 1
    return values


def sentence(rng, tokens):
    tokens = list(tokens)
    rng.shuffle(tokens)
    return " ".join([tokens[0].capitalize()] + tokens[1:]) + "."


def build(seed=20250609):
    rng = random.Random(seed)
    pool = vocabulary()
    rng.shuffle(pool)
    n_tasks = 30

    ref_content = split_total(rng, 185, n_tasks, 5, 8)
    ref_stop = split_total(rng, 61, n_tasks, 1, 3)
    cand_new = split_total(rng, 475, n_tasks * 5, 1, 6)
    cand_stop = split_total(rng, 251, n_tasks * 5, 0, 3)

    # Rank-k candidates hold 5 - k shared words; the rank-5 candidate holds
    # none. Keep the cosine order strict: overlap / sqrt(content) decreasing.
    for t in range(n_tasks):
        block = cand_new[5 * t: 5 * t + 5]
        while True:
            sizes = [4 - k + block[k] for k in range(5)]
            scores = [(4 - k) / math.sqrt(sizes[k]) for k in range(4)]
            if all(a > b for a, b in zip(scores, scores[1:])):
                break
            rng.shuffle(block)
        cand_new[5 * t: 5 * t + 5] = block

    words = iter(pool)
    references, candidates, suite_rows = [], [], []
    for t in range(n_tasks):
        content = [next(words) for _ in range(ref_content[t])]
        stop = [STOPWORDS[(t + i) % 4] for i in range(ref_stop[t])]
        ref = sentence(rng, content + stop)
        shared = content[:4]
        cands = []
        for k in range(5):
            i = 5 * t + k
            own = [next(words) for _ in range(cand_new[i])]
            cstop = [rng.choice(STOPWORDS) for _ in range(cand_stop[i])]
            cands.append((k + 1, sentence(rng, shared[: 4 - k] + own + cstop)))
        rng.shuffle(cands)
        task_id = f"T{t + 1:02d}"
        references.append(ref)
        suite_rows.append(f"{task_id}\treference\t-\t-\t{ref}")
        for pos, (rank, text) in enumerate(cands, start=1):
            candidates.append(text)
            suite_rows.append(f"{task_id}\tcandidate\t{pos}\t{rank}\t{text}")

    return references, candidates, suite_rows


def main(out_dir):
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    refs, cands, rows = build()
    (out / "references.txt").write_text("\n".join(refs) + "\n", encoding="utf-8")
    (out / "candidates.txt").write_text("\n".join(cands) + "\n", encoding="utf-8")
    header = "task_id\trole\tposition\thuman_rank\tsentence"
    (out / "suite.tsv").write_text("\n".join([header] + rows) + "\n", encoding="utf-8")


if __name__ == "__main__":
    default = Path(__file__).resolve().parents[1] / "src" / "nawatl_cfg" / "data" / "tasks"
    main(sys.argv[1] if len(sys.argv) > 1 else default)
