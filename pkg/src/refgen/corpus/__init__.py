"""Game-log ingestion and reference-chain extraction."""

from .extraction import (
    DEFAULT_TOP_N,
    Scored,
    chain_links,
    chain_statistics,
    evaluate_extraction,
    extract_chains,
    extract_game_chains,
    extract_segments,
    first_covisible_round,
    select_chain_utterances,
)
from .schema import (
    ChainEntry,
    CorpusError,
    GameLog,
    Message,
    ReferenceChain,
    ReferenceSet,
    RoundLog,
    SelectionEvent,
    VisualGenomeTokens,
    load_captions,
    load_chains,
    load_games,
    load_vg,
    save_chains,
    save_games,
)
from .scoring import (
    EmbeddingSimilarity,
    caption_similarity,
    filter_tokens,
    load_stopwords,
    meteor_fmean,
    prepare,
    score_components,
    score_utterance,
)
