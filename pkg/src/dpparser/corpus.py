"""Treebank I/O, vocabularies, tree checks and attachment-score evaluation."""
from __future__ import annotations

import io
from dataclasses import dataclass, field
from typing import Iterable, Iterator, NamedTuple, Sequence, TextIO

import numpy as np

# Stanford-dependencies convention for PTB; CTB marks all punctuation as PU.
PUNCT_TAGS = {
    "ptb": frozenset({"``", "''", ":", ",", "."}),
    "ctb": frozenset({"PU"}),
    "none": frozenset(),
}


class ConllError(ValueError):
    """Malformed CoNLL input; carries the offending line number."""

    def __init__(self, lineno: int, message: str):
        super().__init__(f"line {lineno}: {message}")
        self.lineno = lineno


def punct_tags(rule: str) -> frozenset:
    try:
        return PUNCT_TAGS[rule]
    except KeyError:
        raise ValueError(f"unknown punctuation rule {rule!r}; expected one of {sorted(PUNCT_TAGS)}")


@dataclass(frozen=True)
class Token:
    form: str
    pos: str
    head: int | None = None
    columns: tuple[str, ...] | None = field(default=None, compare=False, repr=False)

    def __post_init__(self):
        if not self.form:
            raise ValueError("token form must be non-empty")
        if not self.pos:
            raise ValueError("token POS must be non-empty")

    def is_punct(self, rule: str = "ptb") -> bool:
        return self.pos in punct_tags(rule)


@dataclass(frozen=True)
class ParseTree:
    """Head array for tokens 1..n; ``heads[m - 1]`` is the head of token m (0 = ROOT)."""

    heads: tuple[int, ...]

    def __post_init__(self):
        heads = tuple(int(h) for h in self.heads)
        object.__setattr__(self, "heads", heads)
        n = len(heads)
        if n < 1:
            raise ValueError("a tree needs at least one token")
        for m, h in enumerate(heads, start=1):
            if not 0 <= h <= n:
                raise ValueError(f"head {h} of token {m} out of range 0..{n}")
            if h == m:
                raise ValueError(f"token {m} heads itself")
        for m in range(1, n + 1):
            seen = set()
            node = m
            while node != 0:
                if node in seen:
                    raise ValueError(f"cycle through token {m}")
                seen.add(node)
                node = heads[node - 1]

    @property
    def n(self) -> int:
        return len(self.heads)

    def head(self, m: int) -> int:
        return self.heads[m - 1]

    @property
    def arcs(self) -> frozenset[tuple[int, int]]:
        return frozenset((h, m) for m, h in enumerate(self.heads, start=1))

    def dependents(self, h: int) -> list[int]:
        return [m for m, hh in enumerate(self.heads, start=1) if hh == h]


@dataclass(frozen=True)
class Sentence:
    """Tokens at positions 1..n. Position 0 is ROOT and n+1 the end marker;
    neither is stored."""

    tokens: tuple[Token, ...]

    def __post_init__(self):
        object.__setattr__(self, "tokens", tuple(self.tokens))
        if not self.tokens:
            raise ValueError("a sentence needs at least one token")

    @property
    def n(self) -> int:
        return len(self.tokens)

    def __len__(self) -> int:
        return len(self.tokens)

    def __getitem__(self, i: int) -> Token:
        """1-based token access."""
        if not 1 <= i <= self.n:
            raise IndexError(i)
        return self.tokens[i - 1]

    @property
    def forms(self) -> list[str]:
        return [t.form for t in self.tokens]

    @property
    def tags(self) -> list[str]:
        return [t.pos for t in self.tokens]

    @property
    def is_annotated(self) -> bool:
        return all(t.head is not None for t in self.tokens)

    @property
    def gold_tree(self) -> ParseTree:
        if not self.is_annotated:
            raise ValueError("sentence has tokens without gold heads")
        return ParseTree(tuple(t.head for t in self.tokens))

    def with_heads(self, heads: Sequence[int]) -> Sentence:
        if len(heads) != self.n:
            raise ValueError("head array length does not match sentence")
        return Sentence(tuple(
            Token(t.form, t.pos, int(h), t.columns) for t, h in zip(self.tokens, heads)))


def _sentence_from_rows(rows, pos_column):
    tokens = []
    for expected, (lineno, cols) in enumerate(rows, start=1):
        try:
            tid = int(cols[0])
        except ValueError:
            raise ConllError(lineno, f"non-integer token id {cols[0]!r}")
        if tid != expected:
            raise ConllError(lineno, f"expected token id {expected}, got {tid}")
        if len(cols) <= pos_column - 1:
            raise ConllError(lineno, f"missing POS column {pos_column}")
        head = None
        if len(cols) >= 7 and cols[6] != "_":
            try:
                head = int(cols[6])
            except ValueError:
                raise ConllError(lineno, f"non-integer head {cols[6]!r}")
        try:
            tokens.append(Token(cols[1], cols[pos_column - 1], head, tuple(cols)))
        except ValueError as exc:
            raise ConllError(lineno, str(exc))
    n = len(tokens)
    for (lineno, _), tok in zip(rows, tokens):
        if tok.head is not None and not 0 <= tok.head <= n:
            raise ConllError(lineno, f"head {tok.head} out of range 0..{n}")
    return Sentence(tuple(tokens))


def iter_conll(stream: TextIO, pos_column: int = 4) -> Iterator[Sentence]:
    rows = []
    for lineno, line in enumerate(stream, start=1):
        line = line.rstrip("\r\n")
        if not line.strip():
            if rows:
                yield _sentence_from_rows(rows, pos_column)
                rows = []
            continue
        if line.startswith("#"):
            continue
        cols = line.split("\t")
        # multiword ranges and empty nodes (CoNLL-U) carry no attachment
        if "-" in cols[0] or "." in cols[0]:
            continue
        if len(cols) < 2:
            raise ConllError(lineno, "expected tab-separated columns")
        rows.append((lineno, cols))
    if rows:
        yield _sentence_from_rows(rows, pos_column)


def read_conll(stream: TextIO | str, pos_column: int = 4) -> list[Sentence]:
    """Read CoNLL-X style records. ``pos_column`` is 1-based (4 or 5)."""
    if isinstance(stream, str):
        stream = io.StringIO(stream)
    return list(iter_conll(stream, pos_column))


def load_conll(path, pos_column: int = 4) -> list[Sentence]:
    with open(path, encoding="utf-8") as f:
        return read_conll(f, pos_column)


def write_conll(trees: Sequence[ParseTree | Sequence[int]], sentences: Sequence[Sentence],
                stream: TextIO) -> None:
    if len(trees) != len(sentences):
        raise ValueError(f"{len(trees)} trees for {len(sentences)} sentences")
    for tree, sent in zip(trees, sentences):
        heads = tree.heads if isinstance(tree, ParseTree) else tuple(tree)
        if len(heads) != sent.n:
            raise ValueError("tree and sentence lengths differ")
        for i, (tok, h) in enumerate(zip(sent.tokens, heads), start=1):
            if tok.columns is not None and len(tok.columns) >= 7:
                cols = list(tok.columns)
            else:
                cols = [str(i), tok.form, "_", tok.pos, tok.pos, "_", "_", "_", "_", "_"]
            cols[6] = str(h)
            stream.write("\t".join(cols) + "\n")
        stream.write("\n")


def is_projective(tree: ParseTree | Sequence[int]) -> bool:
    """True iff every arc spans only descendants of its head.

    With ROOT at position 0 this is equivalent to no two arcs crossing."""
    heads = (0,) + tuple(tree.heads if isinstance(tree, ParseTree) else tree)
    n = len(heads) - 1
    for m in range(1, n + 1):
        h = heads[m]
        lo, hi = min(h, m), max(h, m)
        for k in range(lo + 1, hi):
            node = k
            while node != 0 and node != h:
                node = heads[node]
            if node != h:
                return False
    return True


class Evaluation(NamedTuple):
    uas: float
    uem: float
    correct: int
    total: int
    exact: int
    sentences: int


def evaluate(pred: Sequence[ParseTree | Sequence[int]], gold: Sequence[Sentence],
             punct: str = "ptb") -> Evaluation:
    """Unlabeled attachment score and exact match, punctuation excluded by gold POS."""
    if len(pred) != len(gold):
        raise ValueError(f"{len(pred)} predictions for {len(gold)} gold sentences")
    tags = punct_tags(punct)
    correct = total = exact = 0
    for tree, sent in zip(pred, gold):
        heads = tree.heads if isinstance(tree, ParseTree) else tuple(tree)
        if len(heads) != sent.n:
            raise ValueError("prediction and gold sentence lengths differ")
        if not sent.is_annotated:
            raise ValueError("gold sentence lacks heads")
        ok = True
        for tok, h in zip(sent.tokens, heads):
            if tok.pos in tags:
                continue
            total += 1
            if h == tok.head:
                correct += 1
            else:
                ok = False
        exact += ok
    uas = correct / total if total else 1.0
    uem = exact / len(gold) if gold else 1.0
    return Evaluation(uas, uem, correct, total, exact, len(gold))


class Vocabulary:
    """Dense word and POS ids with reserved rows for UNK, ROOT and the end marker."""

    UNK, ROOT, END = 0, 1, 2
    RESERVED = ("<unk>", "<root>", "<end>")

    def __init__(self, words: Iterable[str] = (), tags: Iterable[str] = ()):
        self.words = list(self.RESERVED)
        self.tags = list(self.RESERVED)
        self.word_index = {w: i for i, w in enumerate(self.words)}
        self.tag_index = {t: i for i, t in enumerate(self.tags)}
        for w in words:
            self._add(w, self.words, self.word_index)
        for t in tags:
            self._add(t, self.tags, self.tag_index)

    @staticmethod
    def _add(item, items, index):
        if item not in index:
            index[item] = len(items)
            items.append(item)

    @classmethod
    def build(cls, sentences: Iterable[Sentence]) -> Vocabulary:
        vocab = cls()
        for sent in sentences:
            for tok in sent.tokens:
                cls._add(tok.form, vocab.words, vocab.word_index)
                cls._add(tok.pos, vocab.tags, vocab.tag_index)
        return vocab

    @property
    def n_words(self) -> int:
        return len(self.words)

    @property
    def n_tags(self) -> int:
        return len(self.tags)

    def word_id(self, form: str) -> int:
        return self.word_index.get(form, self.UNK)

    def tag_id(self, pos: str) -> int:
        return self.tag_index.get(pos, self.UNK)

    def numericalize(self, sentence: Sentence) -> tuple[np.ndarray, np.ndarray]:
        """Word and tag ids for positions 0..n+1, ROOT and end marker included."""
        words = [self.ROOT] + [self.word_id(t.form) for t in sentence.tokens] + [self.END]
        tags = [self.ROOT] + [self.tag_id(t.pos) for t in sentence.tokens] + [self.END]
        return np.asarray(words, dtype=np.int64), np.asarray(tags, dtype=np.int64)

    def to_dict(self) -> dict:
        return {"words": self.words[len(self.RESERVED):], "tags": self.tags[len(self.RESERVED):]}

    @classmethod
    def from_dict(cls, data: dict) -> Vocabulary:
        return cls(data["words"], data["tags"])

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.words == other.words and self.tags == other.tags


def read_embeddings(stream: TextIO) -> Iterator[tuple[str, np.ndarray]]:
    """Whitespace-delimited text vectors: a word followed by its floats, one per line."""
    for lineno, line in enumerate(stream, start=1):
        parts = line.split()
        if not parts:
            continue
        # word2vec text files open with a "<count> <dim>" header
        if lineno == 1 and len(parts) == 2 and all(p.isdigit() for p in parts):
            continue
        try:
            vec = np.asarray([float(x) for x in parts[1:]], dtype=np.float64)
        except ValueError:
            raise ValueError(f"embedding line {lineno}: non-numeric value")
        yield parts[0], vec
