"""Independent reference implementations used as test oracles.

These are deliberately written from the procedure descriptions with plain
loops and no calls into the modules under test (other than tokenisation,
stopword lists and the embedding provider, which are inputs).
"""

from __future__ import annotations

import math
from collections import Counter

import numpy as np

from refgen.corpus.scoring import load_stopwords
from refgen.textprep import tokenize


# --- chain extraction --------------------------------------------------------------


def _content(text):
    stop = load_stopwords("scoring")
    return [t for t in tokenize(text) if t not in stop and any(c.isalnum() for c in t)]


def _greedy_f1(provider, cand, ref):
    if not cand or not ref:
        return 0.0
    a = provider.embed(cand)
    b = provider.embed(ref)
    a = a / np.linalg.norm(a, axis=1, keepdims=True)
    b = b / np.linalg.norm(b, axis=1, keepdims=True)
    sims = [[float(np.dot(x, y)) for y in b] for x in a]
    p = sum(max(row) for row in sims) / len(a)
    r = sum(max(sims[i][j] for i in range(len(a))) for j in range(len(b))) / len(b)
    return 0.0 if p + r == 0 else 2 * p * r / (p + r)


def _meteor(hyp, ref):
    matches = 0
    pool = list(ref)
    for t in hyp:
        if t in pool:
            pool.remove(t)
            matches += 1
    if matches == 0:
        return 0.0
    p, r = matches / len(hyp), matches / len(ref)
    return 10 * p * r / (r + 9 * p)


def brute_force_chains(game, captions, vg, provider, top_n=4):
    """Replay a game round by round and return {image: [(round, message_id), ...]}."""
    images = set()
    for rnd in game.rounds:
        for view in rnd.views.values():
            images.update(view)
    retained = {img: (set(vg[img].attribute_tokens) & set(vg[img].relationship_tokens)) if img in vg else set()
                for img in images}
    dynamic = {img: [] for img in images}
    chains = {img: [] for img in images}
    seen_together = set()

    for rnd in game.rounds:
        for img in images:
            if len(rnd.views) >= 2 and all(img in v for v in rnd.views.values()):
                seen_together.add(img)
        round_images = set()
        for view in rnd.views.values():
            round_images.update(view)
        # replay events: which messages precede the first 'common' mark of each image
        scores = {}
        for img in sorted(images):
            if img not in seen_together:
                continue
            first_mark = None
            for sel in rnd.selections:
                if sel.image_id == img and sel.label == "common":
                    first_mark = sel
                    break
            if first_mark is None or first_mark.position is None:
                continue
            cands = []
            for msg in rnd.messages:
                if msg.message_id > first_mark.position:
                    break
                if img in rnd.views.get(msg.speaker, ()):
                    cands.append(msg)
            if not cands:
                continue
            others = set()
            for o in round_images:
                if o != img:
                    others |= retained[o]
            distinct = retained[img] - others
            caption_tokens = [_content(c) for c in list(captions[img]) + dynamic[img]]
            scores[img] = {}
            for msg in cands:
                toks = _content(msg.text)
                cap = max([_greedy_f1(provider, toks, c) for c in caption_tokens if c] or [0.0]) if toks else 0.0
                met = _meteor(toks, sorted(distinct)) if retained[img] and toks and distinct else 0.0
                scores[img][msg.message_id] = (cap + met, msg)

        kept = {}
        for img, table in scores.items():
            ordered = sorted(table.items(), key=lambda kv: (-kv[1][0], kv[0]))
            kept[img] = [mid for mid, _ in ordered[:top_n]]
        winners = {}
        for img in sorted(kept):
            for mid in kept[img]:
                mine = scores[img][mid][0]
                beaten = False
                for other in kept:
                    if other == img or mid not in kept[other]:
                        continue
                    theirs = scores[other][mid][0]
                    if theirs > mine or (theirs == mine and other < img):
                        beaten = True
                if not beaten:
                    winners[img] = mid
                    break
        for img, mid in winners.items():
            chains[img].append((rnd.round_index, mid))
            dynamic[img].append(scores[img][mid][1].text)
    return {img: links for img, links in chains.items() if links}


# --- n-gram metrics --------------------------------------------------------------


def hand_bleu2(hyps, refs):
    """Corpus BLEU-2 from clipped counts, written out longhand."""
    clipped = [0, 0]
    totals = [0, 0]
    c = r = 0
    for hyp, rs in zip(hyps, refs):
        c += len(hyp)
        best = None
        for ref in rs:
            if best is None or abs(len(ref) - len(hyp)) < abs(best - len(hyp)) or (
                    abs(len(ref) - len(hyp)) == abs(best - len(hyp)) and len(ref) < best):
                best = len(ref)
        r += best
        for n in (1, 2):
            grams = [tuple(hyp[i:i + n]) for i in range(len(hyp) - n + 1)]
            totals[n - 1] += len(grams)
            for g in set(grams):
                most = max(sum(1 for i in range(len(ref) - n + 1) if tuple(ref[i:i + n]) == g) for ref in rs)
                clipped[n - 1] += min(grams.count(g), most)
    if 0 in clipped:
        return 0.0
    bp = 1.0 if c > r else math.exp(1 - r / c)
    return 100 * bp * math.sqrt(clipped[0] / totals[0] * clipped[1] / totals[1])


def hand_lcs(a, b):
    best = 0
    table = {}
    for i in range(len(a)):
        for j in range(len(b)):
            if a[i] == b[j]:
                table[i, j] = table.get((i - 1, j - 1), 0) + 1
            else:
                table[i, j] = max(table.get((i - 1, j), 0), table.get((i, j - 1), 0))
            best = max(best, table[i, j])
    return best


def hand_rouge(hyps, refs, beta=1.2):
    total = 0.0
    for hyp, rs in zip(hyps, refs):
        p = max(hand_lcs(hyp, r) / len(hyp) for r in rs)
        rc = max(hand_lcs(hyp, r) / len(r) for r in rs)
        total += 0.0 if p == 0 or rc == 0 else (1 + beta ** 2) * p * rc / (rc + beta ** 2 * p)
    return 100 * total / len(hyps)


def hand_cider(hyps, refs):
    n_docs = len(refs)

    def grams(tokens, n):
        return Counter(tuple(tokens[i:i + n]) for i in range(len(tokens) - n + 1))

    df = Counter()
    for rs in refs:
        present = set()
        for ref in rs:
            for n in range(1, 5):
                present |= set(grams(ref, n))
        for g in present:
            df[g] += 1

    def tfidf(tokens, n):
        return {g: c * (math.log(n_docs) - math.log(max(1.0, df[g]))) for g, c in grams(tokens, n).items()}

    scores = []
    for hyp, rs in zip(hyps, refs):
        total = 0.0
        for ref in rs:
            for n in range(1, 5):
                vh, vr = tfidf(hyp, n), tfidf(ref, n)
                nh = math.sqrt(sum(v * v for v in vh.values()))
                nr = math.sqrt(sum(v * v for v in vr.values()))
                if nh and nr:
                    total += sum(v * vr.get(g, 0.0) for g, v in vh.items()) / (nh * nr) / 4
        scores.append(10 * total / len(rs))
    return sum(scores) / len(scores)


# --- beam search ---------------------------------------------------------------------


class TableDecoder:
    """Toy decoder whose next-token log-probabilities are a lookup on the prefix.

    ``table`` maps a prefix tuple to a log-probability vector.  Token ``eos``
    ends a sequence; the start token is never emitted.
    """

    def __init__(self, table, sos=-1):
        self.table = table
        self.sos = sos

    def initial(self):
        return [()]

    def step(self, state, tokens):
        prefixes = [p if int(t) == self.sos else p + (int(t),) for p, t in zip(state, tokens)]
        return np.array([self.table[p] for p in prefixes]), prefixes

    def reorder(self, state, idx):
        return [state[i] for i in idx]


def random_table(rng, vocab=3, depth=3):
    table = {}
    frontier = [()]
    for _ in range(depth):
        nxt = []
        for p in frontier:
            logits = rng.normal(0, 2, vocab)
            table[p] = logits - np.log(np.exp(logits).sum())
            nxt.extend(p + (t,) for t in range(vocab))
        frontier = nxt
    return table


def exhaustive_best(table, vocab, eos, max_len, length_norm=True):
    """Best sequence over every path of at most ``max_len`` tokens.

    Returns (tokens, log_prob, finished).  Unfinished paths are candidates
    only when no path reaches ``eos``.
    """
    done, partial = [], []

    def walk(prefix, lp):
        if len(prefix) == max_len:
            partial.append((prefix, lp))
            return
        for t in range(vocab):
            step = table[prefix][t]
            if not np.isfinite(step):
                continue
            if t == eos:
                done.append((prefix + (t,), lp + step))
            else:
                walk(prefix + (t,), lp + step)

    walk((), 0.0)
    pool, finished = (done, True) if done else (partial, False)
    best = max(pool, key=lambda s: s[1] / len(s[0]) if length_norm else s[1])
    return list(best[0]), best[1], finished


def greedy_path(table, eos, max_len):
    prefix, lp = (), 0.0
    for _ in range(max_len):
        t = int(np.argmax(table[prefix]))
        lp += table[prefix][t]
        prefix += (t,)
        if t == eos:
            return list(prefix), lp, True
    return list(prefix), lp, False
