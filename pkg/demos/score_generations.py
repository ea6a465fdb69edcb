"""Score a toy set of generated mentions with the overlap metrics and ranking scores."""

from refgen.metrics import accuracy_mrr, bleu2, cider, repetition_and_vocab, rouge

hyps = [["the", "guy", "with", "the", "camera"], ["a", "red", "cake", "on", "a", "table"], ["blue", "bowl"]]
refs = [[["guy", "with", "camera"], ["the", "camera", "guy", "again"]],
        [["red", "cake", "on", "the", "table"]],
        [["the", "blue", "bowl", "of", "rice"], ["bowl", "blue"]]]

print(f"BLEU-2  {bleu2(hyps, refs):6.2f}")
print(f"ROUGE-L {rouge(hyps, refs):6.2f}")
print(f"CIDEr   {cider(hyps, refs):6.3f}")
acc, mrr = accuracy_mrr([1, 2, 1])
print(f"resolution accuracy {acc:.2f}, MRR {mrr:.2f}")
rate, size = repetition_and_vocab(hyps)
print(f"repeated content words in {rate:.0%} of utterances; vocabulary {size}")
