"""Tweet normalization, tokenization and emoticon-based weak labeling.

All functions here are pure and deterministic: the same input bytes always
produce the same output, regardless of platform or locale."""

import re
from importlib import resources

URL_TOKEN = "<url>"
USER_TOKEN = "<user>"

_URL_RE = re.compile(r"(?:https?://|www\.)\S+", re.IGNORECASE)
_MENTION_RE = re.compile(r"@\w+")
_SPECIAL_RE = re.compile(r"(<url>|<user>)")


def _load_lexicon():
    pos, neg = [], []
    bucket = None
    text = resources.files("tweetcnn").joinpath("resources/emoticons.txt").read_text("utf-8")
    for line in text.splitlines():
        if not line.strip():
            continue
        if line.strip() == "[positive]":
            bucket = pos
            continue
        if line.strip() == "[negative]":
            bucket = neg
            continue
        if bucket is None:
            raise ValueError("emoticon lexicon: entry before section header")
        bucket.append(line)
    return pos, neg


_POS_RAW, _NEG_RAW = _load_lexicon()


def _canonical(entry):
    # tokens are matched after lowercasing and with internal spaces removed
    return entry.replace(" ", "").lower()


POSITIVE_EMOTICONS = frozenset(_canonical(e) for e in _POS_RAW)
NEGATIVE_EMOTICONS = frozenset(_canonical(e) for e in _NEG_RAW)
ALL_EMOTICONS = POSITIVE_EMOTICONS | NEGATIVE_EMOTICONS

# multi-chunk entries like ": )" appear as separate tokens after whitespace
# splitting; a merge pass glues them back into the canonical form
_MULTI_ENTRIES = sorted(
    {tuple(e.lower().split()): _canonical(e) for e in _POS_RAW + _NEG_RAW if " " in e}.items(),
    key=lambda kv: -len(kv[0]),
)

_KEEP_INTACT = ALL_EMOTICONS | {URL_TOKEN, USER_TOKEN}


def normalize(text):
    """Replace URLs and @-mentions, then lowercase.

    The replacement tokens ``<url>`` and ``<user>`` are already lowercase,
    so the blanket lowercasing leaves them intact.  Idempotent."""
    text = _URL_RE.sub(URL_TOKEN, text)
    text = _MENTION_RE.sub(USER_TOKEN, text)
    return text.lower()


def _is_wordchar(ch):
    return ch.isalnum() or ch in "_'"


def _split_piece(piece):
    """Split a whitespace-free chunk into word runs and punctuation runs.

    Runs of the *same* punctuation mark stay together ("!!!"); differing
    marks separate; punctuation detaches from adjoining word characters."""
    out = []
    i = 0
    n = len(piece)
    while i < n:
        j = i + 1
        if _is_wordchar(piece[i]):
            while j < n and _is_wordchar(piece[j]):
                j += 1
        else:
            while j < n and piece[j] == piece[i]:
                j += 1
        out.append(piece[i:j])
        i = j
    return out


def tokenize(text):
    """Tokenize normalized text.

    Whitespace split first; chunks equal to a lexicon emoticon or to the
    ``<url>``/``<user>`` tokens are kept whole, everything else is split
    into word/punctuation runs.  Multi-chunk lexicon emoticons (": )") are
    merged back into their canonical single-token form."""
    tokens = []
    for chunk in text.split():
        for piece in _SPECIAL_RE.split(chunk):
            if not piece:
                continue
            if piece in _KEEP_INTACT:
                tokens.append(piece)
            else:
                tokens.extend(_split_piece(piece))
    if _MULTI_ENTRIES:
        merged = []
        i = 0
        n = len(tokens)
        while i < n:
            for parts, canon in _MULTI_ENTRIES:
                k = len(parts)
                if tuple(tokens[i : i + k]) == parts:
                    merged.append(canon)
                    i += k
                    break
            else:
                merged.append(tokens[i])
                i += 1
        tokens = merged
    return tokens


def weak_label(tokens):
    """Infer a weak polarity label from emoticons.

    Returns ``(polarity, tokens_without_emoticons)`` where polarity is
    ``"positive"`` or ``"negative"``, or ``None`` when the sequence carries
    both polarities or neither (such tweets are discarded for distant
    training)."""
    has_pos = any(t in POSITIVE_EMOTICONS for t in tokens)
    has_neg = any(t in NEGATIVE_EMOTICONS for t in tokens)
    if has_pos == has_neg:
        return None
    stripped = [t for t in tokens if t not in ALL_EMOTICONS]
    return ("positive" if has_pos else "negative", stripped)
