"""Tokenizer, vocabulary, encoding, keyword filtering, fusion, skip-gram."""
import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from floordesc.textprep import (
    BOS,
    DEFAULT_KEYWORDS,
    EOS,
    PAD,
    SPECIALS,
    UNK,
    build_vocab,
    decode_ids,
    detokenize,
    encode,
    fuse_captions,
    keyword_filter,
    load_embeddings,
    load_keywords,
    load_vocab,
    save_embeddings,
    save_vocab,
    sequence_length_report,
    split_sentences,
    tokenize,
    train_skipgram,
)

# ---------------------------------------------------------------------------
# tokenize


def test_tokenize_numbers_and_punctuation():
    assert tokenize("3 Bedrooms,  2 Baths.") == ["3", "bedrooms", "2", "baths"]


def test_tokenize_empty():
    assert tokenize("") == []


def test_tokenize_contraction_s():
    assert tokenize("It's large") == ["it", "'s", "large"]


def test_tokenize_contraction_nt():
    assert tokenize("don't") == ["do", "n't"]


def test_tokenize_collapses_whitespace_and_lines():
    assert tokenize("a  house\n\twith   stairs") == ["a", "house", "with", "stairs"]


def test_tokenize_drops_symbols():
    assert tokenize("room #2 (big) & sunny!") == ["room", "2", "big", "sunny"]


_WORD = st.text(alphabet="abcdefghijklmnopqrstuvwxyz0123456789", min_size=1, max_size=8)


@given(st.lists(_WORD, min_size=0, max_size=20))
@settings(max_examples=150, deadline=None)
def test_tokenize_roundtrips_plain_words(words):
    assert tokenize(" ".join(words)) == words


# ---------------------------------------------------------------------------
# build_vocab


def test_vocab_cutoff_drops_rare():
    vocab = build_vocab([["a", "a", "b"]], min_count=2)
    assert "a" in vocab.token_to_id
    assert "b" not in vocab.token_to_id
    assert vocab.id_of("b") == UNK


def test_vocab_min_count_one_keeps_all():
    vocab = build_vocab([["x", "y"], ["z"]], min_count=1)
    assert {"x", "y", "z"} <= set(vocab.token_to_id)


def test_vocab_tie_break_lexicographic():
    vocab = build_vocab([["beta", "alpha"]], min_count=1)
    assert vocab.id_of("alpha") < vocab.id_of("beta")


def test_vocab_frequency_rank():
    vocab = build_vocab([["rare", "common", "common"]], min_count=1)
    assert vocab.id_of("common") < vocab.id_of("rare")


def test_vocab_specials_front():
    vocab = build_vocab([["a"]], min_count=1)
    assert vocab.id_to_token[:4] == list(SPECIALS)
    assert (PAD, UNK, BOS, EOS) == (0, 1, 2, 3)


def test_vocab_empty_corpus_errors():
    with pytest.raises(ValueError):
        build_vocab([], min_count=1)


def test_vocab_bijection():
    vocab = build_vocab([["a", "b", "c", "a"]], min_count=1)
    for idx, tok in enumerate(vocab.id_to_token):
        assert vocab.token_to_id[tok] == idx


@given(
    st.lists(st.lists(_WORD, min_size=0, max_size=10), min_size=1, max_size=6),
    st.integers(min_value=1, max_value=4),
)
@settings(max_examples=150, deadline=None)
def test_vocab_monotone_in_cutoff(corpus, cut):
    lo = build_vocab(corpus, min_count=cut)
    hi = build_vocab(corpus, min_count=cut + 1)
    assert hi.size <= lo.size
    assert set(hi.token_to_id) <= set(lo.token_to_id)


# ---------------------------------------------------------------------------
# encode / decode


def _tiny_vocab():
    return build_vocab([["a", "a", "b"]], min_count=1)


def test_encode_pads():
    vocab = _tiny_vocab()
    seq = encode(["a", "b"], vocab, fixed_len=4)
    assert seq.ids == [vocab.id_of("a"), vocab.id_of("b"), PAD, PAD]
    assert seq.length == 4
    assert seq.content_length() == 2


def test_encode_oov_maps_to_unk():
    vocab = _tiny_vocab()
    assert encode(["zzz"], vocab, fixed_len=2).ids == [UNK, PAD]


def test_encode_truncates_to_fixed_len():
    vocab = _tiny_vocab()
    seq = encode(["a"] * 100, vocab, fixed_len=80)
    assert seq.length == 80
    assert seq.ids == [vocab.id_of("a")] * 80


def test_encode_bos_eos_placement():
    vocab = _tiny_vocab()
    seq = encode(["a", "b"], vocab, fixed_len=6, add_bos_eos=True)
    assert seq.ids == [BOS, vocab.id_of("a"), vocab.id_of("b"), EOS, PAD, PAD]
    # EOS sits at the last non-pad slot
    assert seq.ids[seq.content_length() - 1] == EOS


def test_encode_bos_eos_truncation_leaves_room():
    vocab = _tiny_vocab()
    seq = encode(["a"] * 10, vocab, fixed_len=5, add_bos_eos=True)
    assert seq.ids[0] == BOS
    assert seq.ids[-1] == EOS
    assert seq.length == 5


def test_encode_rejects_bad_lengths():
    vocab = _tiny_vocab()
    with pytest.raises(ValueError):
        encode(["a"], vocab, fixed_len=0)
    with pytest.raises(ValueError):
        encode(["a"], vocab, fixed_len=1, add_bos_eos=True)


@given(st.lists(st.sampled_from(["a", "b", "c"]), min_size=0, max_size=10), st.booleans())
@settings(max_examples=200, deadline=None)
def test_encode_decode_identity(tokens, flag):
    vocab = build_vocab([["a", "b", "c"]], min_count=1)
    seq = encode(tokens, vocab, fixed_len=16, add_bos_eos=flag)
    assert decode_ids(seq.ids, vocab) == tokens


# ---------------------------------------------------------------------------
# sentence splitting and keyword filtering


def test_split_sentences_pairs():
    assert split_sentences("A house. It is big!") == [("A house", "."), ("It is big", "!")]


def test_split_sentences_trailing_fragment():
    assert split_sentences("One. two")[-1] == ("two", "")


def test_keyword_filter_keeps_matching_sentence():
    out = keyword_filter("The sky is blue. The kitchen is open.", DEFAULT_KEYWORDS.all_keywords)
    assert out == "The kitchen is open."


def test_keyword_filter_no_match_empty():
    assert keyword_filter("The sky is blue.", DEFAULT_KEYWORDS.all_keywords) == ""


def test_keyword_filter_identity_when_all_match():
    text = "The bedroom is wide. A bedroom has a closet."
    assert keyword_filter(text, ["bedroom"]) == text


def test_keyword_filter_boundary_not_substring():
    # "bedrooms" is a different token than the keyword "bedroom"
    assert keyword_filter("Three bedrooms here.", ["bedroom"]) == ""
    assert keyword_filter("One bedroom here.", ["bedroom"]) == "One bedroom here."


def test_keyword_filter_case_insensitive():
    assert keyword_filter("KITCHEN with a view.", ["kitchen"]) != ""


def test_keyword_filter_multiword():
    assert keyword_filter("A kitchen  bar sits here.", ["kitchen bar"]) != ""


def test_keyword_filter_empty_keywords():
    assert keyword_filter("Anything at all.", []) == ""


_FILLER = ["sky", "blue", "wall", "tall", "white", "wide"]


@given(
    st.lists(
        st.lists(st.sampled_from(_FILLER + ["kitchen", "bedroom", "stairs"]), min_size=1, max_size=6),
        min_size=1,
        max_size=6,
    )
)
@settings(max_examples=200, deadline=None)
def test_keyword_filter_idempotent(sentences):
    paragraph = " ".join(" ".join(s) + "." for s in sentences)
    keywords = DEFAULT_KEYWORDS.all_keywords
    once = keyword_filter(paragraph, keywords)
    assert keyword_filter(once, keywords) == once


def test_load_keywords_sections(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("# comment\n[rooms]\nBedroom\n[objects]\nstairs\n", encoding="utf-8")
    ks = load_keywords(path)
    assert ks.room_keywords == ["bedroom"]
    assert ks.object_keywords == ["stairs"]
    assert ks.all_keywords == ["bedroom", "stairs"]


def test_load_keywords_requires_section(tmp_path):
    path = tmp_path / "kw.txt"
    path.write_text("bedroom\n", encoding="utf-8")
    with pytest.raises(ValueError, match="outside a section"):
        load_keywords(path)


# ---------------------------------------------------------------------------
# caption fusion


def test_fuse_selects_top_k_by_score():
    captions = [(["a", "b"], 0.9), (["c"], 0.2), (["d", "e"], 0.8)]
    assert fuse_captions(captions, k=2) == ["a", "b", "d", "e"]


def test_fuse_k_one_is_argmax():
    captions = [(["low"], 0.1), (["high"], 0.7)]
    assert fuse_captions(captions, k=1) == ["high"]


def test_fuse_length_is_sum_of_parts():
    captions = [(["w"] * n, 1.0 - 0.1 * i) for i, n in enumerate([3, 4, 2, 5, 1])]
    assert len(fuse_captions(captions, k=5)) == 15


def test_fuse_tie_keeps_input_order():
    captions = [(["first"], 0.5), (["second"], 0.5)]
    assert fuse_captions(captions, k=2) == ["first", "second"]


def test_fuse_warns_when_short():
    with pytest.warns(UserWarning, match="only 2"):
        out = fuse_captions([(["a"], 0.1), (["b"], 0.9)], k=5)
    assert out == ["b", "a"]


def test_fuse_rejects_bad_k():
    with pytest.raises(ValueError):
        fuse_captions([(["a"], 1.0)], k=0)


@given(
    st.lists(
        st.tuples(st.lists(_WORD, min_size=0, max_size=5), st.floats(0, 1, allow_nan=False)),
        min_size=1,
        max_size=8,
    ),
    st.integers(min_value=1, max_value=8),
)
@settings(max_examples=150, deadline=None)
def test_fuse_length_property(captions, k):
    import warnings as _warnings

    with _warnings.catch_warnings():
        _warnings.simplefilter("ignore")
        fused = fuse_captions(captions, k=k)
    ranked = sorted(range(len(captions)), key=lambda i: (-captions[i][1], i))[:k]
    assert len(fused) == sum(len(captions[i][0]) for i in ranked)


# ---------------------------------------------------------------------------
# detokenize


def test_detokenize_capitalizes_and_terminates():
    assert detokenize(["the", "kitchen", "is", "open"]) == "The kitchen is open."


def test_detokenize_glues_contractions():
    assert detokenize(["it", "'s", "large"]) == "It's large."


def test_detokenize_multiple_sentences():
    out = detokenize(["a", "hall", ".", "a", "porch", "."])
    assert out == "A hall. A porch."


def test_detokenize_empty():
    assert detokenize([]) == ""


# ---------------------------------------------------------------------------
# vocabulary and embedding files


def test_vocab_file_roundtrip(tmp_path):
    vocab = build_vocab([["door", "door", "wall"]], min_count=1)
    path = tmp_path / "vocab.txt"
    save_vocab(path, vocab)
    again = load_vocab(path)
    assert again.id_to_token == vocab.id_to_token
    assert again.token_to_id == vocab.token_to_id


def test_vocab_file_requires_specials_header(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("door\nwall\n", encoding="utf-8")
    with pytest.raises(ValueError, match="specials header"):
        load_vocab(path)


def test_vocab_file_rejects_duplicates(tmp_path):
    path = tmp_path / "vocab.txt"
    path.write_text("\n".join(SPECIALS) + "\ndoor\ndoor\n", encoding="utf-8")
    with pytest.raises(ValueError, match="duplicate"):
        load_vocab(path)


def test_embedding_roundtrip(tmp_path):
    table = train_skipgram([[4, 5, 6, 4, 5]], vocab_size=8, embed_dim=7, epochs=1, negatives=3, seed=1)
    path = tmp_path / "emb.txt"
    save_embeddings(path, table, seed=1)
    loaded, seed = load_embeddings(path)
    assert seed == 1
    assert loaded.embed_dim == 7
    np.testing.assert_array_equal(loaded.matrix, table.matrix.astype(np.float32))


def test_embedding_blob_size_checked(tmp_path):
    table = train_skipgram([[4, 5, 4, 5]], vocab_size=8, embed_dim=4, epochs=0, negatives=3)
    path = tmp_path / "emb.txt"
    save_embeddings(path, table)
    blob = path.with_name(path.name + ".blob")
    blob.write_bytes(blob.read_bytes()[:-4])
    with pytest.raises(ValueError, match="bytes"):
        load_embeddings(path)


def test_embedding_bad_format_tag(tmp_path):
    path = tmp_path / "emb.txt"
    path.write_text("format = something-else\n", encoding="utf-8")
    with pytest.raises(ValueError, match="manifest"):
        load_embeddings(path)


# ---------------------------------------------------------------------------
# skip-gram


def test_skipgram_shape_150():
    table = train_skipgram([[4, 5, 6]], vocab_size=7, embed_dim=150, epochs=0, negatives=3)
    assert table.matrix.shape == (7, 150)
    assert table.embed_dim == 150


def test_skipgram_epochs_zero_is_seeded_init():
    a = train_skipgram([[4, 5, 6]], vocab_size=7, embed_dim=5, epochs=0, negatives=3, seed=3)
    b = train_skipgram([[4, 5, 6]], vocab_size=7, embed_dim=5, epochs=0, negatives=3, seed=3)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.epoch_losses == []
    assert np.all(np.abs(a.matrix) <= 0.5 / 5)


def test_skipgram_deterministic():
    corpus = [[4, 5, 4, 6, 5, 4], [6, 4, 5]]
    a = train_skipgram(corpus, vocab_size=8, embed_dim=6, epochs=3, negatives=3, seed=11)
    b = train_skipgram(corpus, vocab_size=8, embed_dim=6, epochs=3, negatives=3, seed=11)
    np.testing.assert_array_equal(a.matrix, b.matrix)
    assert a.epoch_losses == b.epoch_losses


def test_skipgram_rejects_small_vocab():
    with pytest.raises(ValueError, match="exceed"):
        train_skipgram([[0, 1]], vocab_size=4, embed_dim=4, negatives=5)


def test_skipgram_rejects_out_of_range_ids():
    with pytest.raises(ValueError, match="out of range"):
        train_skipgram([[9]], vocab_size=8, embed_dim=4, negatives=3)


def test_skipgram_rejects_empty_pairs():
    with pytest.raises(ValueError, match="pairs"):
        train_skipgram([[4]], vocab_size=8, embed_dim=4, negatives=3)


def _cosine(u, v):
    # plain-python dot/norms, independent of the trainer's numpy path
    dot = sum(float(a) * float(b) for a, b in zip(u, v))
    nu = math.sqrt(sum(float(a) ** 2 for a in u))
    nv = math.sqrt(sum(float(b) ** 2 for b in v))
    return dot / (nu * nv)


def test_skipgram_cooccurrence_beats_random():
    # three disjoint co-occurrence clusters: 4 shares contexts only with 5
    corpus = []
    for _ in range(60):
        corpus.append([4, 5, 4, 5])
        corpus.append([6, 7, 6, 7])
        corpus.append([8, 9, 8, 9])
    table = train_skipgram(corpus, vocab_size=10, embed_dim=16, epochs=8, negatives=4, seed=2)
    close = _cosine(table.matrix[4], table.matrix[5])
    far = max(_cosine(table.matrix[4], table.matrix[j]) for j in (6, 7, 8, 9))
    assert close > far


def test_skipgram_loss_non_increasing_within_tolerance():
    corpus = [[4, 5, 6, 7, 4, 5], [5, 4, 7, 6]]
    table = train_skipgram(corpus, vocab_size=8, embed_dim=8, epochs=6, negatives=3, seed=5)
    assert len(table.epoch_losses) == 6
    for prev, cur in zip(table.epoch_losses, table.epoch_losses[1:]):
        assert cur <= prev * 1.05


def test_sequence_length_report():
    report = sequence_length_report([[1, 2, 3], [1]])
    assert report == {"count": 2, "min": 1, "max": 3, "mean": 2.0}
    assert sequence_length_report([])["count"] == 0
