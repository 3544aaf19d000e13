"""Alphabets, words in free groups, and substitution endomorphisms.

A word is stored as a tuple of nonzero signed integers: letter ``k > 0``
means generator ``k-1``, and ``-k`` means its inverse.  All operations
return freely reduced words.
"""

from __future__ import annotations

import re
from dataclasses import dataclass
from typing import Iterable, Optional, Sequence

_NAME_RE = re.compile(r"[a-z][a-zA-Z0-9_]*$")


class WordError(ValueError):
    """Raised for malformed words, alphabets, or endomorphisms."""


@dataclass(frozen=True)
class Alphabet:
    """An ordered list of distinct generator names."""

    names: tuple[str, ...]

    def __post_init__(self):
        if len(set(self.names)) != len(self.names):
            raise WordError("generator names must be pairwise distinct")
        for n in self.names:
            if not _NAME_RE.match(n):
                raise WordError(f"bad generator name {n!r}")
        object.__setattr__(self, "_index", {n: i for i, n in enumerate(self.names)})

    def __len__(self):
        return len(self.names)

    def index(self, name: str) -> int:
        try:
            return self._index[name]
        except KeyError:
            raise WordError(f"unknown generator {name!r}") from None

    def __contains__(self, name: str) -> bool:
        return name in self._index

    def extend(self, extra: Iterable[str]) -> "Alphabet":
        return Alphabet(self.names + tuple(extra))


def alphabet(spec: str | Sequence[str]) -> Alphabet:
    """Build an Alphabet from a space-separated string or a name sequence."""
    if isinstance(spec, str):
        names = tuple(spec.split())
    else:
        names = tuple(spec)
    return Alphabet(names)


def free_reduce_letters(letters: Iterable[int]) -> tuple[int, ...]:
    """Freely reduce a signed-letter sequence (stack cancellation)."""
    out: list[int] = []
    for x in letters:
        if out and out[-1] == -x:
            out.pop()
        else:
            out.append(x)
    return tuple(out)


class Word:
    """A freely reduced word over an :class:`Alphabet`.

    >>> ab = alphabet("a b")
    >>> w = Word(ab, [1, 2, -2, 1])
    >>> str(w)
    'a a'
    >>> str(w * w.inverse())
    '1'
    """

    __slots__ = ("alphabet", "letters")

    def __init__(self, alpha: Alphabet, letters: Iterable[int], reduced: bool = False):
        self.alphabet = alpha
        lets = tuple(letters) if reduced else free_reduce_letters(letters)
        n = len(alpha)
        for x in lets:
            if x == 0 or abs(x) > n:
                raise WordError(f"letter {x} outside alphabet of size {n}")
        self.letters = lets

    # -- basic protocol ----------------------------------------------------
    def __len__(self):
        return len(self.letters)

    def __eq__(self, other):
        return (
            isinstance(other, Word)
            and self.letters == other.letters
            and self.alphabet == other.alphabet
        )

    def __hash__(self):
        return hash((self.alphabet.names, self.letters))

    def __bool__(self):
        return bool(self.letters)

    def __repr__(self):
        return f"Word({str(self)!r})"

    def __str__(self):
        return format_word(self)

    # -- group operations --------------------------------------------------
    def __mul__(self, other: "Word") -> "Word":
        if other.alphabet != self.alphabet:
            raise WordError("alphabet mismatch")
        return Word(self.alphabet, self.letters + other.letters)

    def inverse(self) -> "Word":
        return Word(self.alphabet, tuple(-x for x in reversed(self.letters)), reduced=True)

    def __pow__(self, n: int) -> "Word":
        if n < 0:
            return self.inverse() ** (-n)
        return Word(self.alphabet, self.letters * n)

    def is_reduced(self) -> bool:
        return all(self.letters[i] != -self.letters[i + 1] for i in range(len(self.letters) - 1))

    def is_cyclically_reduced(self) -> bool:
        lets = self.letters
        return self.is_reduced() and not (lets and lets[0] == -lets[-1])

    def is_positive(self) -> bool:
        return all(x > 0 for x in self.letters)

    def shift(self, k: int) -> "Word":
        """Cyclic rotation by k positions (left)."""
        lets = self.letters
        if not lets:
            return self
        k %= len(lets)
        return Word(self.alphabet, lets[k:] + lets[:k], reduced=True)


def word(alpha: Alphabet, text: str) -> Word:
    """Parse a word in the standard text syntax over ``alpha``."""
    return Word(alpha, parse_word_letters(alpha, text))


def empty_word(alpha: Alphabet) -> Word:
    return Word(alpha, (), reduced=True)


def free_reduce(w: Word) -> Word:
    """Return the freely reduced form of ``w`` (words are kept reduced, so
    this is the identity; provided as the public contract point)."""
    return Word(w.alphabet, w.letters)


def conjugate(w: Word, g: Word) -> Word:
    """g^-1 w g, freely reduced."""
    return g.inverse() * w * g


def commutator(u: Word, v: Word) -> Word:
    return u.inverse() * v.inverse() * u * v


def cyclic_reduce(w: Word) -> tuple[Word, Word]:
    """Split ``w`` as conjugator^-1 * core * conjugator with the core
    cyclically reduced and the conjugator of minimal length."""
    lets = list(w.letters)
    i, j = 0, len(lets)
    while j - i >= 2 and lets[i] == -lets[j - 1]:
        i += 1
        j -= 1
    core = Word(w.alphabet, tuple(lets[i:j]), reduced=True)
    conj = Word(w.alphabet, tuple(lets[j:]), reduced=True)
    return core, conj


def proper_power(w: Word) -> Optional[tuple[Word, int]]:
    """Maximal-exponent decomposition root^e (e >= 2) of the cyclic core of
    ``w``, or None if the core is not a proper power.

    The test happens on the cyclically reduced core: a word is a proper
    power exactly when its core is, and powers only matter up to conjugacy
    here.
    """
    if not w.letters:
        raise WordError("empty input")
    core, _ = cyclic_reduce(w)
    lets = core.letters
    n = len(lets)
    for d in range(1, n // 2 + 1):
        if n % d:
            continue
        if lets == lets[d:] + lets[:d]:
            return Word(w.alphabet, lets[:d], reduced=True), n // d
    return None


# -- canonical cyclic words ------------------------------------------------

def _letter_key(x: int) -> tuple[int, int]:
    # alphabet order first, then + before -
    return (abs(x) - 1, 0 if x > 0 else 1)


def canonical_rotation(letters: tuple[int, ...]) -> tuple[int, ...]:
    """Lexicographically least rotation under (generator, sign) order."""
    n = len(letters)
    if n == 0:
        return letters
    keys = [_letter_key(x) for x in letters]
    best = min(range(n), key=lambda i: [keys[(i + j) % n] for j in range(n)])
    return letters[best:] + letters[:best]


class CyclicWord:
    """Conjugacy-class representative: cyclically reduced, canonical rotation."""

    __slots__ = ("alphabet", "letters")

    def __init__(self, w: Word):
        core, _ = cyclic_reduce(w)
        self.alphabet = w.alphabet
        self.letters = canonical_rotation(core.letters)

    def word(self) -> Word:
        return Word(self.alphabet, self.letters, reduced=True)

    def __eq__(self, other):
        return (
            isinstance(other, CyclicWord)
            and self.letters == other.letters
            and self.alphabet == other.alphabet
        )

    def __hash__(self):
        return hash((self.alphabet.names, self.letters))

    def __len__(self):
        return len(self.letters)

    def __repr__(self):
        return f"CyclicWord({format_word(self.word())!r})"


# -- endomorphisms ---------------------------------------------------------

class EndomorphismSpec:
    """A map generator -> word, applied by substitution then reduction."""

    __slots__ = ("domain", "images")

    def __init__(self, domain: Alphabet, images: Sequence[Word]):
        if len(images) != len(domain):
            raise WordError("one image per generator required")
        for im in images:
            if im.alphabet != domain:
                raise WordError("image over a different alphabet")
        self.domain = domain
        self.images = tuple(images)

    def __eq__(self, other):
        return (
            isinstance(other, EndomorphismSpec)
            and self.domain == other.domain
            and self.images == other.images
        )

    def __hash__(self):
        return hash((self.domain.names, tuple(im.letters for im in self.images)))

    def __repr__(self):
        parts = ", ".join(
            f"{n} -> {format_word(im)}" for n, im in zip(self.domain.names, self.images)
        )
        return f"EndomorphismSpec({parts})"

    def __call__(self, w: Word) -> Word:
        return apply_endo(self, w)

    def is_identity(self) -> bool:
        return all(im.letters == (i + 1,) for i, im in enumerate(self.images))


def endo(alpha: Alphabet, mapping: dict[str, str] | Sequence[str]) -> EndomorphismSpec:
    """Convenience builder: images given as word texts, by name or in order."""
    if isinstance(mapping, dict):
        images = [word(alpha, mapping[n]) for n in alpha.names]
    else:
        images = [word(alpha, t) for t in mapping]
    return EndomorphismSpec(alpha, images)


def identity_endo(alpha: Alphabet) -> EndomorphismSpec:
    return EndomorphismSpec(alpha, [Word(alpha, (i + 1,), reduced=True) for i in range(len(alpha))])


def apply_endo(e: EndomorphismSpec, w: Word) -> Word:
    """Substitute each letter by its image (inverting on negative letters)."""
    if w.alphabet != e.domain:
        raise WordError("word not over the endomorphism's domain")
    out: list[int] = []
    for x in w.letters:
        img = e.images[abs(x) - 1].letters
        if x < 0:
            img = tuple(-t for t in reversed(img))
        for t in img:
            if out and out[-1] == -t:
                out.pop()
            else:
                out.append(t)
    return Word(e.domain, tuple(out), reduced=True)


def compose_endos(outer: EndomorphismSpec, inner: EndomorphismSpec) -> EndomorphismSpec:
    """outer after inner, as a new spec (images substituted and reduced)."""
    if outer.domain != inner.domain:
        raise WordError("alphabet mismatch")
    return EndomorphismSpec(outer.domain, [apply_endo(outer, im) for im in inner.images])


def endo_power(e: EndomorphismSpec, k: int) -> EndomorphismSpec:
    """k-fold composition of ``e`` with itself (k >= 0)."""
    if k < 0:
        raise WordError("negative powers of an endomorphism are not defined here")
    result = identity_endo(e.domain)
    for _ in range(k):
        result = compose_endos(e, result)
    return result


# -- positive subsemigroup membership ---------------------------------------

def positive_subsemigroup_member(w: Word, gens: Sequence[Word]) -> bool:
    """Is ``w`` a nonempty concatenation of the positive words ``gens``?

    Since the generators are positive no cancellation can occur, so this is
    string factorization, solved by dynamic programming over prefixes.
    """
    for g in gens:
        if not g.is_positive() or not g:
            raise WordError("positive generators required")
    target = w.letters
    n = len(target)
    if n == 0:
        return False
    gl = [g.letters for g in gens]
    ok = [False] * (n + 1)
    ok[0] = True
    for i in range(1, n + 1):
        for g in gl:
            m = len(g)
            if m <= i and ok[i - m] and target[i - m:i] == g:
                ok[i] = True
                break
    return ok[n]


# -- text syntax -------------------------------------------------------------
#
# Words are whitespace-separated letters with optional integer exponents and
# parentheses: ``a^6``, ``(a b)^6``, ``a b^-1 (a^2 b^-1)^3``.  An exponent
# binds to the preceding letter or parenthesized group.  The empty word is
# spelled ``1``.

_TOKEN_RE = re.compile(r"\s*([a-z][a-zA-Z0-9_]*|\(|\)|\^|-?\d+|1)")


class WordSyntaxError(WordError):
    def __init__(self, message: str, pos: int):
        super().__init__(f"{message} (at position {pos})")
        self.pos = pos


def _tokenize(text: str):
    tokens = []
    pos = 0
    while pos < len(text):
        m = _TOKEN_RE.match(text, pos)
        if not m:
            if text[pos:].strip() == "":
                break
            raise WordSyntaxError(f"unexpected character {text[pos:].lstrip()[0]!r}", pos)
        tokens.append((m.group(1), m.start(1)))
        pos = m.end()
    return tokens


def parse_word_letters(alpha: Alphabet, text: str) -> tuple[int, ...]:
    tokens = _tokenize(text)
    out: list[int] = []
    stack: list[int] = []  # indices into out where open groups start

    def read_exponent(i):
        if i < len(tokens) and tokens[i][0] == "^":
            if i + 1 >= len(tokens):
                raise WordSyntaxError("missing exponent after '^'", tokens[i][1])
            tok, p = tokens[i + 1]
            try:
                return int(tok), i + 2
            except ValueError:
                raise WordSyntaxError(f"malformed exponent {tok!r}", p) from None
        return None, i

    i = 0
    while i < len(tokens):
        tok, p = tokens[i]
        if tok == "(":
            stack.append(len(out))
            i += 1
        elif tok == ")":
            if not stack:
                raise WordSyntaxError("unbalanced ')'", p)
            start = stack.pop()
            exp, i = read_exponent(i + 1)
            if exp is not None:
                seg = out[start:]
                del out[start:]
                if exp < 0:
                    seg = [-x for x in reversed(seg)]
                    exp = -exp
                out.extend(seg * exp)
        elif tok == "^":
            raise WordSyntaxError("'^' must follow a letter or group", p)
        elif tok == "1":
            i += 1  # empty word marker
        elif re.match(r"-?\d", tok):
            raise WordSyntaxError(f"unexpected number {tok!r}", p)
        else:
            if tok not in alpha:
                raise WordSyntaxError(f"unknown generator {tok!r}", p)
            letter = alpha.index(tok) + 1
            exp, i = read_exponent(i + 1)
            if exp is None:
                exp = 1
            if exp < 0:
                out.extend([-letter] * (-exp))
            else:
                out.extend([letter] * exp)
    if stack:
        raise WordSyntaxError("unbalanced '('", len(text))
    return free_reduce_letters(out)


def format_word(w: Word) -> str:
    """Render a word in the text syntax: letter runs get exponents, and a
    word that is a whole-word power prints as a parenthesized group."""
    lets = w.letters
    if not lets:
        return "1"
    n = len(lets)
    if len(set(lets)) > 1:  # single-letter runs read better as a^n
        for d in range(2, n // 2 + 1):
            if n % d == 0 and lets == lets[:d] * (n // d):
                inner = format_word(Word(w.alphabet, lets[:d], reduced=True))
                return f"({inner})^{n // d}"
    parts = []
    run_letter, run_len = lets[0], 1
    for x in lets[1:]:
        if x == run_letter:
            run_len += 1
        else:
            parts.append(_fmt_run(w.alphabet, run_letter, run_len))
            run_letter, run_len = x, 1
    parts.append(_fmt_run(w.alphabet, run_letter, run_len))
    return " ".join(parts)


def _fmt_run(alpha: Alphabet, letter: int, count: int) -> str:
    name = alpha.names[abs(letter) - 1]
    exp = count if letter > 0 else -count
    return name if exp == 1 else f"{name}^{exp}"


def parse_word_list(alpha: Alphabet, text: str) -> list[Word]:
    """Parse a comma-separated list of words."""
    text = text.strip()
    if not text:
        return []
    return [word(alpha, chunk) for chunk in text.split(",")]
