"""A small lexicon + suffix-rule part-of-speech tagger.

Any callable ``tokens -> tags`` can stand in for it; tags follow the
universal tagset (NOUN, VERB, ADJ, ADV, DET, PRON, ADP, CONJ, NUM, PRT,
PUNCT, X).
"""

from __future__ import annotations

from typing import Callable, Sequence

Tagger = Callable[[Sequence[str]], list[str]]

_CLOSED = {
    "DET": "the a an this that these those some any each every no another all both either neither",
    "PRON": "i me my mine you your yours he him his she her hers it its we us our they them their "
            "myself yourself himself herself itself ourselves themselves who whom whose which what "
            "someone something anyone anything everyone everything nobody nothing",
    "ADP": "of in on at by with from to into onto over under above below behind beside between "
           "near next through across along around about against among inside outside without "
           "within after before during until upon toward towards off like than",
    "CONJ": "and or but nor so yet because if while although though whereas",
    "PRT": "not n't 's to up out down",
    "ADV": "again also very too just only really still already here there now then maybe "
           "almost quite rather probably definitely either perhaps back ever never always once",
    "NUM": "one two three four five six seven eight nine ten eleven twelve first second third last",
    "VERB": "is are was were be been being am have has had having do does did done see saw seen "
            "got get gets go goes went think thought look looks looking sitting standing holding "
            "taking take took make made say said know knew want wanted guess mean meant find found "
            "wearing riding eating flying reading playing walking carrying catching sleeping "
            "can could will would should may might must",
    "ADJ": "red blue green yellow white black brown pink orange purple gray grey dark light big "
           "small little large tall short long old young new same other different wooden funny "
           "fresh hot cold wet rainy sunny happy cute nice good bad glazed grassy tiny huge",
    "X": "yes yeah yep yup ok okay no nope hi hello hey lol haha thanks",
}

LEXICON: dict[str, str] = {}
for _tag, _words in _CLOSED.items():
    for _w in _words.split():
        LEXICON.setdefault(_w, _tag)

NOUNS = set(
    """
    guy man men woman women lady girl boy kid child person people photographer picture photo camera
    umbrella rain street skateboard ramp trick park basket fruit market arm runway model dress catwalk
    fashion show kite beach ocean string headband tattoo tattoos tennis pizza slice piece table bench
    newspaper paper dog dogs puppy glass wine frisbee mouth couch sofa car window head seat collar grass
    field sunglasses glasses shades snow cake candles hat party bike bicycle bowl bowls rice broccoli salad
    plate sandwich fries soup bread strawberries strawberry top donuts donut box hot hotdog mustard bun
    napkin tomatoes tomato lettuce pasta spaghetti noodles fork wood board cheese vegetables one image
    shirt face side thing stuff food cat cats tree frisbee bag horse train bus truck motorcycle
    """.split()
)

_ADJ_SUFFIXES = ("ous", "ful", "ive", "able", "ible", "ic", "ical", "ish", "less", "y")
_VERB_SUFFIXES = ("ing", "ed", "ize", "ise")


def tag_token(tok: str) -> str:
    if not any(ch.isalnum() for ch in tok):
        return "PUNCT"
    if any(ch.isdigit() for ch in tok):
        return "NUM"
    if tok in NOUNS:
        return "NOUN"
    if tok in LEXICON:
        return LEXICON[tok]
    if "'" in tok:
        return "VERB" if tok.endswith("n't") else "PRON"
    if tok.endswith("ly") and len(tok) > 4:
        return "ADV"
    if tok.endswith(_VERB_SUFFIXES) and len(tok) > 4:
        return "VERB"
    if tok.endswith(_ADJ_SUFFIXES) and len(tok) > 4:
        return "ADJ"
    return "NOUN"


def lexicon_tagger(tokens: Sequence[str]) -> list[str]:
    return [tag_token(t) for t in tokens]
