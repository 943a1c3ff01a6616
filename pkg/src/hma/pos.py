"""Rule-based coarse part-of-speech tagger.

Tags come from a fixed 17-entry universal-style tagset.  Id 0 is ``PAD``
so that the padding row of the tag embedding table lines up with the
padding id used everywhere else.  Input is already lower-cased and
stripped of punctuation, so ``PUNCT``/``SYM``/``PROPN`` are only reachable
through tags supplied in the corpus file.
"""

from __future__ import annotations

import re
from typing import Sequence

from .errors import SchemaError

TAGS = ("PAD", "NOUN", "VERB", "ADJ", "ADV", "PRON", "DET", "ADP", "NUM",
        "CONJ", "PRT", "AUX", "PROPN", "INTJ", "SYM", "PUNCT", "X")
TAG_ID = {t: i for i, t in enumerate(TAGS)}

_LEXICON: dict[str, str] = {}


def _lex(tag: str, words: str) -> None:
    for w in words.split():
        _LEXICON[w] = tag


_lex("DET", "the a an this that these those some any every each no all both "
            "another either neither which whatever such")
_lex("PRON", "i you he she it we they me him her us them my your his its our "
             "their mine yours hers ours theirs myself yourself himself herself "
             "itself ourselves themselves what who whom whose someone something "
             "anyone anything everyone everything nobody nothing none")
_lex("ADP", "in on at by for with from of about into onto over under after "
            "before during through between without within across behind along "
            "around near up down out off against among upon since until toward "
            "towards like inside outside above below beside past via per")
_lex("CONJ", "and or but nor so yet because if while although though whereas "
             "unless than whether")
_lex("AUX", "be am is are was were been being do does did have has had will "
            "would shall should can could may might must dont doesnt didnt "
            "isnt arent wasnt werent havent hasnt hadnt wont wouldnt cant "
            "couldnt shouldnt im ive id ill youre theyre were weve")
_lex("PRT", "to not nt")
_lex("ADV", "very also then just now there here too again always never often "
            "soon still already really well only even back away usually "
            "sometimes later today tomorrow yesterday tonight ago once twice "
            "almost quite rather enough instead maybe perhaps when where why how "
            "first next finally else ever together home")
_lex("NUM", "zero one two three four five six seven eight nine ten eleven twelve "
            "thirteen fourteen fifteen sixteen seventeen eighteen nineteen "
            "twenty thirty forty fifty sixty seventy eighty ninety hundred "
            "thousand million")
_lex("INTJ", "oh yes hello hi hey wow ok okay yeah please thanks ah um uh")
_lex("ADJ", "good bad new old big small little long short hot cold warm clean "
            "dirty high low full empty ready sure own other same different "
            "last few many much more most less several great nice happy sad "
            "hard easy early late right wrong dry wet young large fresh "
            "red blue green white black yellow brown")
_lex("VERB", "go went gone get got make made take took put see saw seen want "
             "need know knew think thought come came give gave find found tell "
             "told say said use wash buy bought pay paid eat ate drink drank "
             "sit sat stand stood leave left bring brought keep kept let run "
             "ran cut read write wrote drive drove begin began try call ask "
             "feel felt look turn start open close help fill pour wait grab "
             "pick place rinse dry clean set hold held send sent")
_lex("NOUN", "thing morning evening king ring ceiling building bed "
             "shed seed hundred sled wedding clothing time day car water "
             "soap bucket sponge driveway house room kitchen store friend "
             "family people money food dog cat door table bag")

_NUMERIC = re.compile(r"^[0-9]+$")
_ALNUM_MIX = re.compile(r"^(?=.*[0-9])(?=.*[a-z])[a-z0-9]+$")

# checked in order; the first matching suffix decides
_SUFFIX_RULES = (
    ("ing", "VERB"), ("ed", "VERB"), ("ly", "ADV"),
    ("tion", "NOUN"), ("sion", "NOUN"), ("ment", "NOUN"), ("ness", "NOUN"),
    ("ity", "NOUN"), ("ship", "NOUN"), ("ism", "NOUN"), ("ist", "NOUN"),
    ("ance", "NOUN"), ("ence", "NOUN"), ("er", "NOUN"), ("or", "NOUN"),
    ("ous", "ADJ"), ("ful", "ADJ"), ("able", "ADJ"), ("ible", "ADJ"),
    ("less", "ADJ"), ("ive", "ADJ"), ("ic", "ADJ"), ("ish", "ADJ"), ("al", "ADJ"),
    ("ize", "VERB"), ("ise", "VERB"), ("ify", "VERB"),
)


def tag_token(token: str) -> str:
    if token in _LEXICON:
        return _LEXICON[token]
    if _NUMERIC.match(token):
        return "NUM"
    if _ALNUM_MIX.match(token):
        return "X"
    for suffix, tag in _SUFFIX_RULES:
        if len(token) > len(suffix) + 2 and token.endswith(suffix):
            return tag
    return "NOUN"


def pos_tag(tokens: Sequence[str]) -> list[int]:
    """Tag ids for a preprocessed token list."""
    return [TAG_ID[tag_token(t)] for t in tokens]


def tag_ids_from_strings(tags: Sequence[str], where: str = "") -> list[int]:
    """Convert user-supplied tag strings, rejecting anything outside the tagset."""
    out = []
    for t in tags:
        key = str(t).upper()
        if key not in TAG_ID:
            loc = f" in {where}" if where else ""
            raise SchemaError(f"unknown POS tag {t!r}{loc}; valid tags: {', '.join(TAGS)}")
        out.append(TAG_ID[key])
    return out
