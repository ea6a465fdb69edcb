"""Extract reference chains from the bundled three-game fixture and score them against gold."""

import tempfile
from pathlib import Path

from refgen.corpus.extraction import evaluate_extraction, extract_chains
from refgen.corpus.schema import load_captions, load_games, load_vg
from refgen.corpus.scoring import EmbeddingSimilarity
from refgen.embeddings import HashEmbeddingProvider
from refgen.fixtures import fixture_gold, write_fixture

paths = write_fixture(Path(tempfile.mkdtemp()) / "fx")
chains = extract_chains(load_games(paths["games"]), load_captions(paths["captions"]), load_vg(paths["vg"]),
                        EmbeddingSimilarity(HashEmbeddingProvider()))

for chain in chains[:4]:
    print(f"{chain.game_id} {chain.image_id}:")
    for e in chain.entries:
        print(f"   round {e.round_index}: {e.text}  (score {e.score:.2f})")

extracted = {(c.game_id, e.round_index, e.message_id, c.image_id) for c in chains for e in c.entries}
p, r = evaluate_extraction(extracted, fixture_gold())
print(f"\n{len(chains)} chains; precision {p:.3f}, recall {r:.3f}")
