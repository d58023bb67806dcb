"""Normalization, tokenization, and weak labeling."""

import re

from hypothesis import given, strategies as st

from tweetcnn import textprep


class TestNormalize:
    def test_url_mention_lowercase(self):
        assert textprep.normalize("Check http://t.co/Ab1 @Bob NOW") == "check <url> <user> now"

    def test_empty(self):
        assert textprep.normalize("") == ""

    def test_identity_when_no_patterns(self):
        assert textprep.normalize("no urls here") == "no urls here"

    def test_https_and_www(self):
        assert textprep.normalize("see https://x.y/z and www.a.b") == "see <url> and <url>"

    def test_replacement_before_lowercasing(self):
        # uppercase URL hosts must still be caught
        assert textprep.normalize("HTTP://EXAMPLE.COM rocks") == "<url> rocks"

    def test_idempotent_on_examples(self):
        for text in ["Check http://t.co/Ab1 @Bob NOW", "", "no urls here", "@a @b www.c.d"]:
            once = textprep.normalize(text)
            assert textprep.normalize(once) == once

    @given(st.text(max_size=80))
    def test_idempotent_property(self, text):
        once = textprep.normalize(text)
        assert textprep.normalize(once) == once


class TestTokenize:
    def test_emoticon_kept(self):
        assert textprep.tokenize("great day :)") == ["great", "day", ":)"]

    def test_punctuation_run(self):
        assert textprep.tokenize("wow!!!") == ["wow", "!!!"]

    def test_split_at_comma(self):
        assert textprep.tokenize("<user> hi,there") == ["<user>", "hi", ",", "there"]

    def test_replacement_tokens_intact(self):
        assert textprep.tokenize("<url> <user>") == ["<url>", "<user>"]

    def test_no_empty_or_whitespace_tokens(self):
        for text in ["a  b", "  :) ", "a...b!! c", "x:-)y"]:
            for tok in textprep.tokenize(text):
                assert tok and not any(ch.isspace() for ch in tok)

    def test_deterministic(self):
        text = "so good :-) !!! @ok, http fine"
        assert textprep.tokenize(text) == textprep.tokenize(text)

    @given(st.text(alphabet=st.characters(blacklist_categories=("Cs",)), max_size=60))
    def test_no_raw_url_or_mention_tokens(self, text):
        for tok in textprep.tokenize(textprep.normalize(text)):
            if tok in ("<url>", "<user>"):
                continue
            assert not re.match(r"(?:https?://|www\.)\S", tok)
            assert not re.match(r"@\w", tok)


class TestWeakLabel:
    def test_positive(self):
        assert textprep.weak_label([":)", "great", "day"]) == ("positive", ["great", "day"])

    def test_negative(self):
        assert textprep.weak_label(["bad", ":("]) == ("negative", ["bad"])

    def test_mixed_discarded(self):
        assert textprep.weak_label([":)", ":("]) is None

    def test_no_emoticon_discarded(self):
        assert textprep.weak_label(["just", "words"]) is None

    def test_all_emoticons_removed(self):
        result = textprep.weak_label([":)", "nice", ":d", "day", "<3"])
        assert result is not None
        polarity, tokens = result
        assert polarity == "positive"
        assert tokens == ["nice", "day"]

    def test_emoticon_only_tweet_yields_empty_sequence(self):
        assert textprep.weak_label([":)"]) == ("positive", [])

    def test_never_neutral(self):
        for toks in [[":)"], [":("], ["hey", ";)"], [":'(", "oh"]]:
            result = textprep.weak_label(toks)
            assert result is None or result[0] in ("positive", "negative")
