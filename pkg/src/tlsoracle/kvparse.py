"""Key-value grammar engine: parsing, context integrity, two-stage checks.

A *key-value grammar* describes documents of the shape

    noPairsString  open  pair  (end pair)*  close

where each pair is ``start key middle value end-or-nothing`` and special
characters inside keys and values appear only behind the escape byte. Two
instances ship here: a JSON-like grammar (quoted keys and values, nested
objects) and a GET-query grammar (``?a=1&b=2``). Both are LL(1): one byte of
lookahead decides every production, so parsing is a single left-to-right
scan.

The interesting consumer is the selective-reveal flow. A response document R
stays hidden; the prover reveals one pair R_open and must show it sits in the
right *context* — revealing that ``"balance": "5000"`` is an account field,
not a quoted string inside someone's chat message. The ground truth is
``ctx_eval`` (full parse, path check). The cheap route is two-stage parsing:
extract the minimal substring R' that parses as a pair with the agreed key,
then check only that R' occurs in R and equals R_open. For grammars with
globally unique keys the two answers provably coincide; the property tests
brute-force that equivalence on randomized corpora, and the classic
quoted-pair reflection attack is a named regression.

Spans everywhere are byte offsets into the source document, so parse trees
never copy text and redaction is positional.
"""

from __future__ import annotations

try:
    import tomllib
except ModuleNotFoundError:  # Python 3.10
    import tomli as tomllib

from dataclasses import dataclass

from .sha256core import sha256

__all__ = [
    "AmbiguousScopeError",
    "ContextSpec",
    "DUMMY_BYTE",
    "GET_QUERY",
    "JSON_LIKE",
    "KvGrammar",
    "ParseError",
    "ParseNode",
    "ParseTree",
    "RedactedPair",
    "TargetNotFoundError",
    "UniquenessError",
    "ctx_eval",
    "escape_text",
    "format_decimal_4",
    "get_redaction_consistent",
    "grammar_from_toml",
    "grammar_to_toml",
    "key_occurrences",
    "locally_unique_reveal",
    "pair_paths",
    "pair_redaction_consistent",
    "parse_decimal_4",
    "parse_kv",
    "parse_pair_exact",
    "redact_get_params",
    "redact_pair",
    "two_stage_reveal",
    "two_stage_verify",
    "unescape_text",
]

DUMMY_BYTE = 0x00  # the redaction filler; source documents must not contain it
DECIMAL_SCALE = 4  # statement numbers are fixed-point with 4 fractional digits


class ParseError(Exception):
    """Input not in the grammar; carries the offending byte position."""

    def __init__(self, message: str, position: int):
        super().__init__(f"{message} (at byte {position})")
        self.position = position


class UniquenessError(Exception):
    """A key the fast path assumed unique occurs more than once."""


class TargetNotFoundError(Exception):
    """The requested key or pair does not occur in the document."""


class AmbiguousScopeError(Exception):
    """A scope prefix ends where the target's context cannot be decided."""


# -- grammars --------------------------------------------------------------------


@dataclass(frozen=True)
class KvGrammar:
    """Delimiter configuration for one key-value language.

    ``start`` may be empty (pairs begin at the previous separator), ``end``
    is the inter-pair separator and may only be absent before ``close``;
    ``middle`` must be non-empty or keys and values would be inseparable.
    ``value_quote`` non-empty means values are quote-delimited strings (or
    nested objects); empty means bare values scanned up to the next
    delimiter. An empty ``close`` ends the document at EOF and forbids
    nesting.
    """

    name: str
    open: bytes
    close: bytes
    start: bytes
    middle: bytes
    end: bytes
    escape: bytes
    value_quote: bytes = b""
    ws: bytes = b""

    def __post_init__(self):
        if not self.middle:
            raise ValueError("middle delimiter cannot be empty")
        if not self.start and not self.end:
            raise ValueError("start and end delimiters cannot both be empty")
        if len(self.escape) != 1:
            raise ValueError("escape must be a single byte")
        if not self.open:
            raise ValueError("open delimiter cannot be empty")
        for name in ("open", "close", "start", "middle", "end", "escape", "value_quote", "ws"):
            if DUMMY_BYTE in getattr(self, name):
                raise ValueError("the dummy byte cannot be a delimiter")

    @property
    def specials(self) -> bytes:
        """Bytes that must be escaped inside keys and values."""
        seen = []
        for chunk in (self.open, self.close, self.start, self.middle, self.end,
                      self.escape, self.value_quote):
            for byte in chunk:
                if byte not in seen:
                    seen.append(byte)
        return bytes(seen)


JSON_LIKE = KvGrammar(
    name="json-like",
    open=b"{",
    close=b"}",
    start=b'"',
    middle=b'":',
    end=b",",
    escape=b"\\",
    value_quote=b'"',
    ws=b" \t\r\n",
)

GET_QUERY = KvGrammar(
    name="get-query",
    open=b"?",
    close=b"",
    start=b"",
    middle=b"=",
    end=b"&",
    escape=b"%",
)

_TOML_FIELDS = ("name", "open", "close", "start", "middle", "end", "escape", "value_quote", "ws")


def grammar_from_toml(text: str) -> KvGrammar:
    """Load a grammar from its TOML description (string-valued delimiters)."""
    data = tomllib.loads(text)
    table = data.get("grammar", data)
    kwargs = {}
    for name in _TOML_FIELDS:
        if name not in table:
            continue
        value = table[name]
        kwargs[name] = value if name == "name" else value.encode()
    return KvGrammar(**kwargs)


def grammar_to_toml(grammar: KvGrammar) -> str:
    lines = ["[grammar]"]
    for name in _TOML_FIELDS:
        value = getattr(grammar, name)
        text = value if isinstance(value, str) else value.decode()
        escaped = "".join(
            _TOML_STRING_ESCAPES.get(ch, ch) if ch >= " " or ch in _TOML_STRING_ESCAPES
            else f"\\u{ord(ch):04x}"
            for ch in text
        )
        lines.append(f'{name} = "{escaped}"')
    return "\n".join(lines) + "\n"


_TOML_STRING_ESCAPES = {
    "\\": "\\\\",
    '"': '\\"',
    "\t": "\\t",
    "\r": "\\r",
    "\n": "\\n",
}


# -- escaping ---------------------------------------------------------------------


def escape_text(grammar: KvGrammar, raw: bytes) -> bytes:
    """Encode raw content so it can sit inside a key or value."""
    specials = grammar.specials
    out = bytearray()
    for byte in raw:
        if byte in specials:
            out += grammar.escape
        out.append(byte)
    return bytes(out)


def unescape_text(grammar: KvGrammar, encoded: bytes) -> bytes:
    """Inverse of escape_text; rejects dangling escape bytes."""
    out = bytearray()
    escape = grammar.escape[0]
    i = 0
    while i < len(encoded):
        byte = encoded[i]
        if byte == escape:
            if i + 1 >= len(encoded):
                raise ParseError("dangling escape byte", i)
            out.append(encoded[i + 1])
            i += 2
        else:
            out.append(byte)
            i += 1
    return bytes(out)


# -- parse trees --------------------------------------------------------------------


@dataclass(frozen=True)
class ParseNode:
    """One derivation node; spans index the source document."""

    label: str
    start: int
    end: int
    children: tuple["ParseNode", ...] = ()


@dataclass(frozen=True)
class ParseTree:
    grammar: KvGrammar
    source: bytes
    root: ParseNode

    def text(self, node: ParseNode) -> bytes:
        return self.source[node.start : node.end]

    def pairs(self):
        """Yield (path, pair node) over the whole tree, derivation order."""
        yield from _iter_pairs(self.root, (self.root.label,))

    def key_of(self, pair: ParseNode) -> bytes:
        """The pair's key with escapes removed."""
        key_node = pair.children[0]
        return unescape_text(self.grammar, self.source[key_node.start : key_node.end])


def _iter_pairs(node: ParseNode, path: tuple[str, ...]):
    for child in node.children:
        child_path = path + (child.label,)
        if child.label == "pair":
            yield child_path, child
        yield from _iter_pairs(child, child_path)


# -- the LL(1) parser ---------------------------------------------------------------


class _Parser:
    """Recursive-descent scan; one byte of lookahead decides everything."""

    def __init__(self, grammar: KvGrammar, data: bytes):
        self.g = grammar
        self.data = data
        self.pos = 0

    # -- low-level helpers ------------------------------------------------------

    def error(self, message: str) -> ParseError:
        return ParseError(message, self.pos)

    def peek(self) -> int | None:
        return self.data[self.pos] if self.pos < len(self.data) else None

    def at(self, literal: bytes) -> bool:
        return bool(literal) and self.data.startswith(literal, self.pos)

    def expect(self, literal: bytes, what: str) -> None:
        if not self.at(literal):
            raise self.error(f"expected {what}")
        self.pos += len(literal)

    def skip_ws(self) -> None:
        ws = self.g.ws
        while self.pos < len(self.data) and self.data[self.pos] in ws:
            self.pos += 1

    def scan_until(
        self, stops: bytes, what: str, allow_eof: bool = False, quoted: bool = False
    ) -> int:
        """Advance over escaped content until an unescaped stop byte; returns
        the stop position (or EOF when allowed). Quote-delimited regions are
        bounded by their stop byte, so only the escape byte and the stop are
        special inside them; bare regions must escape every delimiter."""
        escape = self.g.escape[0]
        while True:
            byte = self.peek()
            if byte is None:
                if allow_eof:
                    return self.pos
                raise self.error(f"unexpected end of input in {what}")
            if byte == DUMMY_BYTE:
                raise self.error("dummy byte in source document")
            if byte == escape:
                if self.pos + 1 >= len(self.data):
                    raise self.error("dangling escape byte")
                self.pos += 2
                continue
            if byte in stops:
                return self.pos
            if not quoted and byte in self.g.specials:
                raise self.error(f"unescaped special byte in {what}")
            self.pos += 1

    # -- productions --------------------------------------------------------------

    def parse_document(self) -> ParseNode:
        """noPairsString, the root object, optional trailing whitespace."""
        opener = self.data.find(self.g.open)
        if opener < 0:
            self.pos = len(self.data)
            raise self.error("no object opener in document")
        self.pos = opener
        root = self.parse_object()
        self.skip_ws()
        if self.pos != len(self.data):
            raise self.error("trailing bytes after the document")
        return ParseNode(root.label, 0, len(self.data), root.children)

    def parse_object(self) -> ParseNode:
        begin = self.pos
        self.expect(self.g.open, "object opener")
        pairs = [self.parse_pair_node()]
        while True:
            self.skip_ws()
            if self.g.close and self.at(self.g.close):
                self.pos += len(self.g.close)
                break
            if not self.g.close and self.peek() is None:
                break
            if self.g.end and self.at(self.g.end):
                self.pos += len(self.g.end)
                self.skip_ws()
                pairs.append(self.parse_pair_node())
                continue
            raise self.error("expected a pair separator or object closer")
        return ParseNode("object", begin, self.pos, tuple(pairs))

    def parse_pair_node(self) -> ParseNode:
        self.skip_ws()
        begin = self.pos
        if self.g.start:
            self.expect(self.g.start, "pair start delimiter")
        key_begin = self.pos
        # a quote-opened key is bounded by middle's first byte (the quote)
        key_end = self.scan_until(self.g.middle[:1], "key", quoted=bool(self.g.start))
        self.expect(self.g.middle, "key-value separator")
        key_node = ParseNode("key", key_begin, key_end)
        self.skip_ws()
        value_node = self.parse_value()
        return ParseNode("pair", begin, value_node.end, (key_node, value_node))

    def parse_value(self) -> ParseNode:
        quote = self.g.value_quote
        if quote and self.at(quote):
            begin = self.pos
            self.pos += len(quote)
            self.scan_until(quote[:1], "value", quoted=True)
            self.pos += len(quote)
            return ParseNode("value", begin, self.pos)
        if self.g.close and self.at(self.g.open):
            inner = self.parse_object()
            return ParseNode("value", inner.start, inner.end, (inner,))
        if quote:
            raise self.error("expected a quoted value or nested object")
        begin = self.pos
        stops = self.g.end[:1] + self.g.close[:1]
        end = self.scan_until(stops, "value", allow_eof=True)
        return ParseNode("value", begin, end)


def parse_kv(grammar: KvGrammar, data: bytes) -> ParseTree:
    """Parse a whole document; raises ParseError with a position otherwise."""
    parser = _Parser(grammar, data)
    root = parser.parse_document()
    return ParseTree(grammar, data, root)


def pair_value_text(grammar: KvGrammar, pair: bytes, key: bytes | None = None) -> bytes:
    """The unescaped value content of a standalone pair string (quotes
    stripped for quoted values; nested-object values returned verbatim)."""
    node = parse_pair_exact(grammar, pair, key=key)
    value = node.children[1]
    raw = pair[value.start : value.end]
    quote = grammar.value_quote
    if quote and raw.startswith(quote) and raw.endswith(quote) and len(raw) >= 2 * len(quote):
        return unescape_text(grammar, raw[len(quote) : -len(quote)])
    if not quote:
        return unescape_text(grammar, raw)
    return raw


def parse_pair_exact(grammar: KvGrammar, data: bytes, key: bytes | None = None) -> ParseNode:
    """Parse data as exactly one pair (no leading or trailing bytes); when a
    key is given, the pair's key must equal it."""
    parser = _Parser(grammar, data)
    pair = parser.parse_pair_node()
    if parser.pos != len(data):
        raise parser.error("trailing bytes after the pair")
    if pair.start != 0:
        raise ParseError("pair does not start at the first byte", 0)
    if key is not None:
        key_node = pair.children[0]
        if unescape_text(grammar, data[key_node.start : key_node.end]) != key:
            raise ParseError("pair key differs from the required key", key_node.start)
    return pair


# -- context integrity ----------------------------------------------------------------


@dataclass(frozen=True)
class ContextSpec:
    """Permissible root-to-pair paths, plus an optional key restriction.

    Paths are label sequences from the root; the element ``*`` matches any
    single label. Parse trees flatten sibling chains, so the path set for
    bounded nesting is finite.
    """

    paths: tuple[tuple[str, ...], ...]
    key: bytes | None = None

    def __post_init__(self):
        for path in self.paths:
            if not path or path[0] not in ("object", "*"):
                raise ValueError("permissible paths start at the root object")
            if path[-1] not in ("pair", "*"):
                raise ValueError("permissible paths end at a pair")

    def admits(self, path: tuple[str, ...]) -> bool:
        return any(
            len(want) == len(path) and all(w in ("*", have) for w, have in zip(want, path))
            for want in self.paths
        )


def pair_paths(max_depth: int) -> tuple[tuple[str, ...], ...]:
    """Paths to pairs at nesting depth 1..max_depth — the usual 'anywhere a
    pair legitimately lives' permissible set."""
    paths = []
    path = ("object", "pair")
    for _ in range(max_depth):
        paths.append(path)
        path = path + ("value", "object", "pair")
    return tuple(paths)


def ctx_eval(grammar: KvGrammar, spec: ContextSpec, doc: bytes, r_open: bytes) -> bool:
    """Ground truth: does r_open occur in doc as a pair on a permissible
    path (with the right key, when restricted)? Raises ParseError when doc
    is not in the grammar — deliberately distinct from returning False."""
    tree = parse_kv(grammar, doc)
    for path, pair in _iter_pairs(tree.root, (tree.root.label,)):
        if tree.text(pair) != r_open:
            continue
        if not spec.admits(path):
            continue
        if spec.key is not None and tree.key_of(pair) != spec.key:
            continue
        return True
    return False


# -- two-stage parsing (unique keys) -----------------------------------------------------


def key_occurrences(grammar: KvGrammar, doc: bytes, key: bytes) -> list[int]:
    """Positions where ``start ∥ escaped-key ∥ middle`` occurs unescaped.

    The uniqueness predicate of the fast path: exactly one occurrence means
    any substring parsing as a pair with this key is THE pair. Escaped
    matches (the pattern quoted inside a value) do not count, which is
    precisely why reflected text cannot spoof an occurrence.
    """
    pattern = grammar.start + escape_text(grammar, key) + grammar.middle
    escape = grammar.escape[0]
    positions = []
    i = 0
    while i < len(doc):
        if doc[i] == escape:
            i += 2
            continue
        if doc.startswith(pattern, i):
            # reject pseudo-matches that continue a longer run of content
            if grammar.start or i == 0 or doc[i - 1] in (grammar.end + grammar.open):
                positions.append(i)
        i += 1
    return positions


def two_stage_reveal(grammar: KvGrammar, spec: ContextSpec, doc: bytes) -> tuple[bytes, bytes]:
    """Trans: cut the minimal substring parsing as a pair with spec.key.

    Returns (R', R_open), equal by construction; the verifier checks the
    consistency predicate rather than re-deriving the cut.
    """
    if spec.key is None:
        raise ValueError("the two-stage fast path needs a key restriction")
    positions = key_occurrences(grammar, doc, spec.key)
    if not positions:
        raise TargetNotFoundError(f"key {spec.key!r} does not occur")
    if len(positions) > 1:
        raise UniquenessError(f"key {spec.key!r} occurs {len(positions)} times")
    parser = _Parser(grammar, doc)
    parser.pos = positions[0]
    pair = parser.parse_pair_node()
    revealed = doc[pair.start : pair.end]
    return revealed, revealed


def two_stage_verify(
    grammar: KvGrammar, spec: ContextSpec, doc: bytes, cut: bytes, r_open: bytes
) -> bool:
    """cons ∧ CTX on the cut string, without parsing the whole document.

    cons: the cut occurs in the document, parses as exactly one pair with
    the agreed key, and that key occurs exactly once overall (the verifier
    re-checks the uniqueness the fast path rests on). CTX on the transformed
    string degenerates to equality with r_open.
    """
    if spec.key is None:
        raise ValueError("the two-stage fast path needs a key restriction")
    try:
        parse_pair_exact(grammar, cut, key=spec.key)
    except ParseError:
        return False
    positions = key_occurrences(grammar, doc, spec.key)
    if len(positions) != 1:
        return False
    # The cut must sit exactly at the one key occurrence and stop at a pair
    # boundary; otherwise a prefix of a bare value ("symbol=TSLA" cut from
    # "symbol=TSLAX&...") would pass as the whole pair.
    begin = positions[0]
    if not doc.startswith(cut, begin):
        return False
    after = doc[begin + len(cut) : begin + len(cut) + 1]
    boundary = grammar.end[:1] + grammar.close[:1] + grammar.ws
    if after and after[0] not in boundary:
        return False
    return cut == r_open


# -- two-stage parsing (locally unique keys) ----------------------------------------------


def _partial_pairs(grammar: KvGrammar, prefix: bytes):
    """Parse a document prefix, returning every pair completed before EOF
    with its root path. EOF inside a structure simply ends the walk; EOF
    inside an escape sequence is ambiguous and raises."""
    trailing_escapes = len(prefix) - len(prefix.rstrip(grammar.escape))
    if trailing_escapes % 2:
        raise AmbiguousScopeError("scope prefix ends inside an escape sequence")
    parser = _Parser(grammar, prefix)
    completed: list[tuple[tuple[str, ...], bytes, ParseNode]] = []

    def walk_object(path):
        parser.expect(grammar.open, "object opener")
        walk_pair(path)
        while True:
            parser.skip_ws()
            if grammar.close and parser.at(grammar.close):
                parser.pos += len(grammar.close)
                return
            if not grammar.close and parser.peek() is None:
                return
            if grammar.end and parser.at(grammar.end):
                parser.pos += len(grammar.end)
                parser.skip_ws()
                walk_pair(path)
                continue
            raise parser.error("expected a pair separator or object closer")

    def walk_pair(path):
        parser.skip_ws()
        begin = parser.pos
        if grammar.start:
            parser.expect(grammar.start, "pair start delimiter")
        key_begin = parser.pos
        key_end = parser.scan_until(grammar.middle[:1], "key", quoted=bool(grammar.start))
        parser.expect(grammar.middle, "key-value separator")
        key = unescape_text(grammar, prefix[key_begin:key_end])
        parser.skip_ws()
        quote = grammar.value_quote
        if quote and parser.at(quote):
            parser.pos += len(quote)
            parser.scan_until(quote[:1], "value", quoted=True)
            parser.pos += len(quote)
        elif grammar.close and parser.at(grammar.open):
            walk_object(path + ("pair", "value", "object"))
        elif quote:
            raise parser.error("expected a quoted value or nested object")
        else:
            parser.scan_until(grammar.end[:1] + grammar.close[:1], "value", allow_eof=True)
        node = ParseNode("pair", begin, parser.pos)
        completed.append((path + ("pair",), key, node))

    opener = prefix.find(grammar.open)
    if opener < 0:
        raise ParseError("no object opener in scope prefix", len(prefix))
    parser.pos = opener
    # A parse error at or just before EOF is mere truncation: the prefix ran
    # out mid-token. Anything earlier is a genuine syntax error.
    slack = max(len(grammar.middle), len(grammar.close), len(grammar.end),
                len(grammar.start), len(grammar.value_quote), 1)
    try:
        walk_object(("object",))
    except ParseError as err:
        if err.position < len(prefix) - slack:
            raise
    return completed


def locally_unique_reveal(
    grammar: KvGrammar, spec: ContextSpec, doc: bytes, scope_prefix: bytes
) -> bool:
    """Decide context for spec.key from a document *prefix* alone.

    Works when keys are unique within their enclosing scope: every scope
    the target sits in was already opened inside the prefix, so the path is
    fully determined without reading the rest of the document.
    """
    if spec.key is None:
        raise ValueError("the scoped fast path needs a key restriction")
    if not doc.startswith(scope_prefix):
        raise ValueError("scope prefix is not a prefix of the document")
    matches = [
        (path, node)
        for path, key, node in _partial_pairs(grammar, scope_prefix)
        if key == spec.key
    ]
    return any(spec.admits(path) for path, _node in matches)


# -- redaction ---------------------------------------------------------------------------


def redact_get_params(request: bytes, mask) -> tuple[bytes, bool]:
    """Blank the masked byte positions of a GET request with the dummy byte.

    Returns the masked string plus the delimiter-safety verdict: True iff no
    masked position held a pair delimiter (``&``) or key-value separator
    (``=``) — masking those would let a redacted request parse differently
    than the real one.
    """
    if DUMMY_BYTE in request:
        raise ValueError("source request already contains the dummy byte")
    positions = _mask_positions(mask, len(request))
    masked = bytearray(request)
    ok = True
    for position in positions:
        if request[position] in b"&=":
            ok = False
        masked[position] = DUMMY_BYTE
    return bytes(masked), ok


def _mask_positions(mask, length: int) -> set[int]:
    positions: set[int] = set()
    for item in mask:
        if isinstance(item, int):
            span = (item, item + 1)
        else:
            span = (item[0], item[1])
        if not 0 <= span[0] <= span[1] <= length:
            raise ValueError("mask position out of range")
        positions.update(range(span[0], span[1]))
    return positions


def get_redaction_consistent(original: bytes, masked: bytes) -> bool:
    """The verifier's side of GET redaction: equal lengths, every dummy
    position hides a non-delimiter, every other byte matches exactly."""
    if len(original) != len(masked):
        return False
    if DUMMY_BYTE in original:
        raise ValueError("source request already contains the dummy byte")
    for byte_r, byte_m in zip(original, masked):
        if byte_m == DUMMY_BYTE:
            if byte_r in b"&=":
                return False
        elif byte_r != byte_m:
            return False
    return True


@dataclass(frozen=True)
class RedactedPair:
    """A length-preserving pair redaction plus its commitment hook."""

    masked: bytes
    span: tuple[int, int]
    hidden: bytes

    def commit(self, blind: bytes) -> bytes:
        """Hash commitment to the hidden pair, openable through the
        commitment-opening relation."""
        return sha256(self.hidden + blind)


def redact_pair(grammar: KvGrammar, spec: ContextSpec, doc: bytes) -> RedactedPair:
    """Replace the pair selected by spec with dummy bytes, in place."""
    if DUMMY_BYTE in doc:
        raise ValueError("source document already contains the dummy byte")
    tree = parse_kv(grammar, doc)
    matches = []
    for path, pair in _iter_pairs(tree.root, (tree.root.label,)):
        if not spec.admits(path):
            continue
        if spec.key is not None and tree.key_of(pair) != spec.key:
            continue
        matches.append(pair)
    if not matches:
        raise TargetNotFoundError("no pair matches the redaction spec")
    if len(matches) > 1:
        raise AmbiguousScopeError("redaction spec matches more than one pair")
    pair = matches[0]
    masked = doc[: pair.start] + bytes(pair.end - pair.start) + doc[pair.end :]
    return RedactedPair(masked, (pair.start, pair.end), doc[pair.start : pair.end])


def pair_redaction_consistent(original: bytes, masked: bytes) -> bool:
    """Equal lengths and every difference is a dummy byte in the masked copy."""
    if len(original) != len(masked):
        return False
    return all(m == DUMMY_BYTE or m == o for o, m in zip(original, masked))


# -- fixed-point decimals ------------------------------------------------------------------


def parse_decimal_4(text: bytes | str) -> int:
    """Parse a decimal like '1157.7500' or '$1,000' to 4-digit fixed point."""
    if isinstance(text, bytes):
        text = text.decode("ascii", errors="strict")
    cleaned = text.strip().lstrip("$").replace(",", "")
    if not cleaned:
        raise ValueError("empty decimal")
    sign = 1
    if cleaned[0] in "+-":
        sign = -1 if cleaned[0] == "-" else 1
        cleaned = cleaned[1:]
    whole, dot, frac = cleaned.partition(".")
    if not whole.isdigit() or (dot and not frac.isdigit()) or (dot and len(frac) > DECIMAL_SCALE):
        raise ValueError(f"not a fixed-point decimal: {text!r}")
    frac = frac.ljust(DECIMAL_SCALE, "0")
    return sign * (int(whole) * 10**DECIMAL_SCALE + int(frac or 0))


def format_decimal_4(scaled: int) -> str:
    sign = "-" if scaled < 0 else ""
    scaled = abs(scaled)
    return f"{sign}{scaled // 10**DECIMAL_SCALE}.{scaled % 10**DECIMAL_SCALE:04d}"
