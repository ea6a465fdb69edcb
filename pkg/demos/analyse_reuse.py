"""Profile first and later mentions and measure how much of the first is reused."""

from refgen.linganalysis import compare, profile, reuse

chain = [["the", "guy", "with", "the", "camera"], ["camera", "guy", "again"], ["camera", "guy"]]
for i, utt in enumerate(chain, 1):
    p = profile(utt)
    print(f"mention {i}: {' '.join(utt):28s} tokens {p.length_tokens}  content {p.length_content}  "
          f"givenness {p.givenness_prop:.2f}")

for later in chain[1:]:
    r = reuse(chain[0], later)
    print(f"reuse of first mention in '{' '.join(later)}': {r.reuse_c:.2f}")

firsts = [5, 6, 4, 7, 5, 6]
laters = [3, 2, 3, 2, 4, 2]
res = compare(firsts, laters)
print(f"length first vs later: d = {res.d:.2f}, p = {res.p:.4f}")
