"""Grammar engine tests: parsing, context checks, two-stage equivalence.

The centerpiece is a randomized corpus (1000+ documents, keys up to 32
bytes, nesting up to depth 4) on which the two-stage fast path must agree
with the full-parse context oracle, plus named regressions for the quoted
reflection attack and the bare-value boundary attack.
"""

import random

import pytest

from tlsoracle.kvparse import (
    GET_QUERY,
    JSON_LIKE,
    AmbiguousScopeError,
    ContextSpec,
    KvGrammar,
    ParseError,
    TargetNotFoundError,
    UniquenessError,
    ctx_eval,
    escape_text,
    format_decimal_4,
    get_redaction_consistent,
    grammar_from_toml,
    grammar_to_toml,
    key_occurrences,
    locally_unique_reveal,
    pair_paths,
    pair_redaction_consistent,
    parse_decimal_4,
    parse_kv,
    parse_pair_exact,
    redact_get_params,
    redact_pair,
    two_stage_reveal,
    two_stage_verify,
    unescape_text,
)

QUOTE = b'{"01. symbol": "TSLA", "05. price": "1157.7500", "07. latest trading day": "2026-08-19"}'

BANK = (
    b'{"accounts": {"checking a/c": {"balance": "2000.0000"}, '
    b'"savings a/c": {"balance": "5000.0000"}}, '
    b'"messages": "thanks for the transfer!"}'
)


# -- parsing ------------------------------------------------------------------------


def test_parse_yield_equals_input():
    tree = parse_kv(JSON_LIKE, QUOTE)
    assert tree.text(tree.root) == QUOTE
    assert (tree.root.start, tree.root.end) == (0, len(QUOTE))


def test_parse_is_deterministic():
    assert parse_kv(JSON_LIKE, BANK) == parse_kv(JSON_LIKE, BANK)


def test_parse_nested_paths():
    tree = parse_kv(JSON_LIKE, BANK)
    found = [(path, tree.key_of(pair)) for path, pair in tree.pairs()]
    assert (("object", "pair"), b"accounts") in found
    assert (("object", "pair", "value", "object", "pair"), b"checking a/c") in found
    deep = ("object", "pair", "value", "object", "pair", "value", "object", "pair")
    assert sum(1 for path, key in found if path == deep and key == b"balance") == 2


def test_get_query_parse():
    tree = parse_kv(GET_QUERY, b"?symbol=TSLA&apikey=SECRET123")
    pairs = [(tree.key_of(p), tree.text(p)) for _, p in tree.pairs()]
    assert pairs == [(b"symbol", b"symbol=TSLA"), (b"apikey", b"apikey=SECRET123")]


def test_empty_object_rejected():
    with pytest.raises(ParseError) as err:
        parse_kv(JSON_LIKE, b"{}")
    assert err.value.position == 1


def test_error_positions_are_exact():
    with pytest.raises(ParseError) as err:
        parse_kv(JSON_LIKE, b'{"a" 1}')
    assert err.value.position == 3  # the separator was expected at the closing quote


def test_unescaped_middle_inside_key_rejected():
    # the quote after "bad" ends the key; "key" is not a separator
    with pytest.raises(ParseError) as err:
        parse_kv(JSON_LIKE, b'{"bad"key": "v"}')
    assert err.value.position == 5


def test_unquoted_value_rejected():
    with pytest.raises(ParseError):
        parse_kv(JSON_LIKE, b'{"balance": $5000}')


def test_unescaped_delimiter_in_bare_value_rejected():
    with pytest.raises(ParseError) as err:
        parse_kv(GET_QUERY, b"?a=b=c")
    assert err.value.position == 4


def test_trailing_bytes_rejected():
    with pytest.raises(ParseError):
        parse_kv(JSON_LIKE, b'{"a": "1"} extra')


def test_dummy_byte_in_source_rejected():
    with pytest.raises(ParseError):
        parse_kv(JSON_LIKE, b'{"a": "\x00"}')


def test_dangling_escape_rejected():
    with pytest.raises(ParseError):
        parse_kv(JSON_LIKE, b'{"a": "x\\')


# -- escaping ---------------------------------------------------------------------


def test_escape_round_trip_random():
    rng = random.Random(0x5E1)
    for grammar in (JSON_LIKE, GET_QUERY):
        for _ in range(200):
            raw = bytes(rng.randrange(1, 256) for _ in range(rng.randrange(0, 60)))
            encoded = escape_text(grammar, raw)
            assert unescape_text(grammar, encoded) == raw
            # canonical encodings survive a decode/encode cycle unchanged
            assert escape_text(grammar, unescape_text(grammar, encoded)) == encoded


def test_escaped_content_parses():
    nasty = escape_text(JSON_LIKE, b'he said "hi", {ok}: \\done')
    doc = b'{"note": "' + nasty + b'"}'
    tree = parse_kv(JSON_LIKE, doc)
    ((_, pair),) = list(tree.pairs())
    assert tree.key_of(pair) == b"note"


def test_unescape_rejects_dangling_escape():
    with pytest.raises(ParseError):
        unescape_text(JSON_LIKE, b"abc\\")


# -- grammar configuration -----------------------------------------------------------


def test_grammar_toml_round_trip():
    for grammar in (JSON_LIKE, GET_QUERY):
        assert grammar_from_toml(grammar_to_toml(grammar)) == grammar


def test_grammar_invariants_enforced():
    with pytest.raises(ValueError):
        KvGrammar(name="bad", open=b"{", close=b"}", start=b'"', middle=b"",
                  end=b",", escape=b"\\")
    with pytest.raises(ValueError):
        KvGrammar(name="bad", open=b"{", close=b"}", start=b"", middle=b"=",
                  end=b"", escape=b"\\")
    with pytest.raises(ValueError):
        KvGrammar(name="bad", open=b"{", close=b"}", start=b"\x00", middle=b"=",
                  end=b",", escape=b"\\")


# -- context evaluation ----------------------------------------------------------------


def test_ctx_eval_price_pair():
    spec = ContextSpec(pair_paths(1), key=b"05. price")
    assert ctx_eval(JSON_LIKE, spec, QUOTE, b'"05. price": "1157.7500"')
    assert not ctx_eval(JSON_LIKE, spec, QUOTE, b'"05. price": "9999.0000"')


def test_ctx_eval_empty_path_set_is_false():
    spec = ContextSpec(())
    assert not ctx_eval(JSON_LIKE, spec, QUOTE, b'"05. price": "1157.7500"')


def test_ctx_eval_wrong_depth_is_false():
    deep_only = ContextSpec(pair_paths(3)[2:], key=b"05. price")
    assert not ctx_eval(JSON_LIKE, deep_only, QUOTE, b'"05. price": "1157.7500"')


def test_ctx_eval_not_in_grammar_is_an_error_not_false():
    spec = ContextSpec(pair_paths(1), key=b"a")
    with pytest.raises(ParseError):
        ctx_eval(JSON_LIKE, spec, b"this is not a document", b'"a": "1"')


def test_ctx_eval_key_restriction():
    spec = ContextSpec(pair_paths(1), key=b"01. symbol")
    assert not ctx_eval(JSON_LIKE, spec, QUOTE, b'"05. price": "1157.7500"')


def test_context_spec_validates_paths():
    with pytest.raises(ValueError):
        ContextSpec((("pair",),))
    with pytest.raises(ValueError):
        ContextSpec((("object", "value"),))


# -- two-stage fast path ------------------------------------------------------------------


def test_two_stage_reveal_matches_direct_eval():
    spec = ContextSpec(pair_paths(1), key=b"05. price")
    cut, r_open = two_stage_reveal(JSON_LIKE, spec, QUOTE)
    assert cut == b'"05. price": "1157.7500"'
    assert two_stage_verify(JSON_LIKE, spec, QUOTE, cut, r_open)
    assert ctx_eval(JSON_LIKE, spec, QUOTE, r_open)


def test_two_stage_missing_key():
    spec = ContextSpec(pair_paths(1), key=b"absent")
    with pytest.raises(TargetNotFoundError):
        two_stage_reveal(JSON_LIKE, spec, QUOTE)


def test_two_stage_duplicate_key_is_a_uniqueness_error():
    doc = b'{"k": "1", "nest": {"k": "2"}}'
    spec = ContextSpec(pair_paths(2), key=b"k")
    with pytest.raises(UniquenessError):
        two_stage_reveal(JSON_LIKE, spec, doc)
    assert not two_stage_verify(JSON_LIKE, spec, doc, b'"k": "1"', b'"k": "1"')


def test_two_stage_verify_rejects_foreign_cut():
    spec = ContextSpec(pair_paths(1), key=b"05. price")
    assert not two_stage_verify(JSON_LIKE, spec, QUOTE,
                                b'"05. price": "8888.0000"', b'"05. price": "8888.0000"')


def test_two_stage_verify_rejects_other_pair():
    spec = ContextSpec(pair_paths(1), key=b"05. price")
    other = b'"01. symbol": "TSLA"'
    assert not two_stage_verify(JSON_LIKE, spec, QUOTE, other, other)


def test_reflection_attack_escaped_quotes():
    # Attacker-chosen text is escaped by the honest serializer, so the
    # planted pair never occurs unescaped and the fast path cannot see it.
    doc = b'{"owner": "alice", "messages": "note \\"balance\\": $5000 credited"}'
    parse_kv(JSON_LIKE, doc)
    spec = ContextSpec(pair_paths(2), key=b"balance")
    assert key_occurrences(JSON_LIKE, doc, b"balance") == []
    with pytest.raises(TargetNotFoundError):
        two_stage_reveal(JSON_LIKE, spec, doc)
    forged = b'"balance": $5000'
    assert not two_stage_verify(JSON_LIKE, spec, doc, forged, forged)
    assert not ctx_eval(JSON_LIKE, spec, doc, forged)


def test_reflection_attack_unescaped_quotes_breaks_the_document():
    # A server that failed to escape the reflection is out of the grammar
    # entirely: the oracle errors rather than answering, and the forged cut
    # still fails the pair parse.
    doc = b'{"messages": "note "balance": $5000"}'
    spec = ContextSpec(pair_paths(2), key=b"balance")
    with pytest.raises(ParseError):
        ctx_eval(JSON_LIKE, spec, doc, b'"balance": $5000')
    assert not two_stage_verify(JSON_LIKE, spec, doc, b'"balance": $5000', b'"balance": $5000')


def test_bare_value_prefix_cut_rejected():
    # "symbol=TSLA" is a prefix of the real pair "symbol=TSLAX"; the
    # boundary check must refuse it, matching the full-parse answer.
    doc = b"?symbol=TSLAX&k=1"
    spec = ContextSpec(pair_paths(1), key=b"symbol")
    forged = b"symbol=TSLA"
    assert not two_stage_verify(GET_QUERY, spec, doc, forged, forged)
    assert not ctx_eval(GET_QUERY, spec, doc, forged)
    honest, _ = two_stage_reveal(GET_QUERY, spec, doc)
    assert honest == b"symbol=TSLAX"
    assert two_stage_verify(GET_QUERY, spec, doc, honest, honest)


def test_unique_key_stays_unique_in_the_cut():
    spec = ContextSpec(pair_paths(1), key=b"05. price")
    cut, _ = two_stage_reveal(JSON_LIKE, spec, QUOTE)
    assert len(key_occurrences(JSON_LIKE, cut, b"05. price")) == 1


# -- randomized corpus: two-stage == full parse -----------------------------------------------


_KEY_BYTES = (b"abcdefghijklmnopqrstuvwxyz"
              b"ABCDEFGHIJKLMNOPQRSTUVWXYZ0123456789 ._-/")


def _gen_document(rng: random.Random):
    """A random nested document with globally unique keys; returns the doc
    and its pair list [(key, pair text)] in derivation order."""
    used: set[bytes] = set()

    def gen_key() -> bytes:
        while True:
            size = rng.randint(1, 32)
            key = bytes(rng.choice(_KEY_BYTES) for _ in range(size))
            if key not in used:
                used.add(key)
                return key

    def gen_value_text() -> bytes:
        raw = bytes(rng.randrange(0x20, 0x7F) for _ in range(rng.randint(0, 40)))
        return escape_text(JSON_LIKE, raw)

    def gen_object(depth: int) -> bytes:
        chunks = []
        for _ in range(rng.randint(1, 4)):
            key = gen_key()
            if depth < 4 and rng.random() < 0.35:
                value = gen_object(depth + 1)
            else:
                value = b'"' + gen_value_text() + b'"'
            pad = b" " * rng.randint(0, 2)
            chunks.append(b'"' + escape_text(JSON_LIKE, key) + b'":' + pad + value)
        return b"{" + b", ".join(chunks) + b"}"

    doc = gen_object(1)
    tree = parse_kv(JSON_LIKE, doc)
    return doc, [(tree.key_of(p), tree.text(p)) for _, p in tree.pairs()]


def test_two_stage_equals_full_parse_on_random_corpus():
    rng = random.Random(0x2A9E)
    spec_paths = pair_paths(4)
    docs = 0
    while docs < 1000:
        doc, pairs = _gen_document(rng)
        docs += 1
        key, text = pairs[rng.randrange(len(pairs))]
        spec = ContextSpec(spec_paths, key=key)

        cut, r_open = two_stage_reveal(JSON_LIKE, spec, doc)
        assert cut == text
        assert two_stage_verify(JSON_LIKE, spec, doc, cut, r_open) is True
        assert ctx_eval(JSON_LIKE, spec, doc, r_open) is True

        # adversarial variation: another pair's text, or a corrupted cut
        if len(pairs) > 1 and rng.random() < 0.5:
            other = rng.choice([t for k, t in pairs if k != key])
            assert two_stage_verify(JSON_LIKE, spec, doc, other, other) \
                == ctx_eval(JSON_LIKE, spec, doc, other) == False  # noqa: E712
        else:
            corrupt = bytearray(cut)
            corrupt[rng.randrange(len(corrupt))] ^= 0x01
            corrupt = bytes(corrupt)
            assert two_stage_verify(JSON_LIKE, spec, doc, corrupt, corrupt) \
                == ctx_eval(JSON_LIKE, spec, doc, corrupt) == False  # noqa: E712
    assert docs >= 1000


# -- locally unique keys ------------------------------------------------------------------


def test_locally_unique_prefix_true():
    # prefix ends right after the checking balance pair: scope fully known
    end = BANK.index(b'"2000.0000"') + len(b'"2000.0000"')
    prefix = BANK[:end]
    spec = ContextSpec((pair_paths(3)[2],), key=b"balance")
    assert locally_unique_reveal(JSON_LIKE, spec, BANK, prefix) is True


def test_locally_unique_prefix_false():
    # a top-level pair named balance is NOT at the permissible depth
    doc = b'{"balance": "9.0000", "accounts": {"x": "1"}}'
    end = doc.index(b'"9.0000"') + len(b'"9.0000"')
    spec = ContextSpec((pair_paths(3)[2],), key=b"balance")
    assert locally_unique_reveal(JSON_LIKE, spec, doc, doc[:end]) is False


def test_locally_unique_matches_full_eval():
    tree = parse_kv(JSON_LIKE, BANK)
    spec_paths = (pair_paths(3)[2],)
    for path, pair in tree.pairs():
        if tree.key_of(pair) != b"balance":
            continue
        prefix = BANK[: pair.end]
        spec = ContextSpec(spec_paths, key=b"balance")
        assert locally_unique_reveal(JSON_LIKE, spec, BANK, prefix) \
            == ctx_eval(JSON_LIKE, spec, BANK, tree.text(pair))


def test_locally_unique_wrong_scope_is_an_error():
    spec = ContextSpec(pair_paths(2), key=b"balance")
    with pytest.raises(ValueError):
        locally_unique_reveal(JSON_LIKE, spec, BANK, b'{"unrelated": "1"}')


def test_locally_unique_ambiguous_prefix_is_an_error():
    doc = b'{"a": "x\\"b"}'
    prefix = doc[: doc.index(b"\\") + 1]
    spec = ContextSpec(pair_paths(1), key=b"a")
    with pytest.raises(AmbiguousScopeError):
        locally_unique_reveal(JSON_LIKE, spec, doc, prefix)


def test_locally_unique_incomplete_target_not_counted():
    # prefix stops inside the balance value: the pair never completed
    cutpoint = BANK.index(b'"2000.0000"') + 3
    spec = ContextSpec((pair_paths(3)[2],), key=b"balance")
    assert locally_unique_reveal(JSON_LIKE, spec, BANK, BANK[:cutpoint]) is False


# -- redaction ----------------------------------------------------------------------------


REQUEST = b"GET /query?symbol=TSLA&apikey=SECRET123 HTTP/1.1"


def test_redact_get_params_masks_value():
    begin = REQUEST.index(b"SECRET123")
    masked, ok = redact_get_params(REQUEST, [(begin, begin + 9)])
    assert ok is True
    assert masked == REQUEST[:begin] + b"\x00" * 9 + REQUEST[begin + 9 :]
    assert get_redaction_consistent(REQUEST, masked) is True


def test_redact_get_params_refuses_delimiters():
    amp = REQUEST.index(b"&")
    masked, ok = redact_get_params(REQUEST, [(amp, amp + 1)])
    assert ok is False
    assert get_redaction_consistent(REQUEST, masked) is False
    eq = REQUEST.index(b"=")
    _, ok = redact_get_params(REQUEST, [eq])
    assert ok is False


def test_redact_get_params_empty_mask_is_identity():
    masked, ok = redact_get_params(REQUEST, [])
    assert masked == REQUEST and ok is True


def test_redact_get_params_out_of_range():
    with pytest.raises(ValueError):
        redact_get_params(REQUEST, [(0, len(REQUEST) + 1)])


def test_get_redaction_consistent_rejects_edits():
    begin = REQUEST.index(b"SECRET123")
    masked, _ = redact_get_params(REQUEST, [(begin, begin + 9)])
    tampered = masked.replace(b"TSLA", b"NVDA")
    assert get_redaction_consistent(REQUEST, tampered) is False
    assert get_redaction_consistent(REQUEST, masked[:-1]) is False


def test_redact_pair_masks_whole_subtree():
    spec = ContextSpec((pair_paths(3)[1],), key=b"savings a/c")
    redaction = redact_pair(JSON_LIKE, spec, BANK)
    begin, end = redaction.span
    assert BANK[begin:end] == redaction.hidden
    assert redaction.hidden.startswith(b'"savings a/c":')
    assert b"5000" not in redaction.masked
    assert len(redaction.masked) == len(BANK)
    assert redaction.masked[begin:end] == bytes(end - begin)
    assert pair_redaction_consistent(BANK, redaction.masked) is True


def test_redact_pair_commitment_hook():
    spec = ContextSpec((pair_paths(3)[1],), key=b"savings a/c")
    redaction = redact_pair(JSON_LIKE, spec, BANK)
    blind = b"\x07" * 32
    from tlsoracle.sha256core import sha256

    assert redaction.commit(blind) == sha256(redaction.hidden + blind)


def test_redact_pair_target_not_found():
    spec = ContextSpec(pair_paths(3), key=b"no such key")
    with pytest.raises(TargetNotFoundError):
        redact_pair(JSON_LIKE, spec, BANK)


def test_redact_pair_ambiguous_target():
    spec = ContextSpec(pair_paths(3), key=b"balance")
    with pytest.raises(AmbiguousScopeError):
        redact_pair(JSON_LIKE, spec, BANK)


def test_pair_redaction_consistent_rejects_edits():
    spec = ContextSpec((pair_paths(3)[1],), key=b"savings a/c")
    redaction = redact_pair(JSON_LIKE, spec, BANK)
    tampered = redaction.masked.replace(b"2000", b"9000")
    assert pair_redaction_consistent(BANK, tampered) is False


# -- fixed-point decimals -----------------------------------------------------------------


def test_parse_decimal_4_examples():
    assert parse_decimal_4("1157.7500") == 11577500
    assert parse_decimal_4(b"1157.7500") == 11577500
    assert parse_decimal_4("1000") == 10000000
    assert parse_decimal_4("$1,000") == 10000000
    assert parse_decimal_4("0.0001") == 1
    assert parse_decimal_4("-2.5") == -25000
    assert parse_decimal_4("+3.25") == 32500


def test_parse_decimal_4_rejects_junk():
    for bad in ("", "abc", "1.2.3", "12.34567", "1..2", ".", "$"):
        with pytest.raises(ValueError):
            parse_decimal_4(bad)


def test_format_decimal_4_round_trip():
    rng = random.Random(0xDEC)
    for _ in range(300):
        scaled = rng.randrange(-10**9, 10**9)
        assert parse_decimal_4(format_decimal_4(scaled)) == scaled


# -- exact pair parsing --------------------------------------------------------------------


def test_parse_pair_exact_checks_key_and_bounds():
    pair = parse_pair_exact(JSON_LIKE, b'"a": "1"', key=b"a")
    assert (pair.start, pair.end) == (0, 8)
    with pytest.raises(ParseError):
        parse_pair_exact(JSON_LIKE, b'"a": "1"', key=b"b")
    with pytest.raises(ParseError):
        parse_pair_exact(JSON_LIKE, b'"a": "1",', key=b"a")
    with pytest.raises(ParseError):
        parse_pair_exact(JSON_LIKE, b' "a": "1"', key=b"a")
