"""Symmetrised relator sets, pieces, small cancellation conditions, and
Dehn's algorithm.

Pieces are common initial segments of two distinct elements of the
symmetrised closure (the closure is a *set*: coinciding shifts of a proper
power are one element).  All metric comparisons use exact rational
arithmetic.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from typing import Optional, Sequence

from .words import Alphabet, EndomorphismSpec, Word, apply_endo, cyclic_reduce, free_reduce_letters


class SmallCancelError(ValueError):
    pass


def _rotations(letters: tuple[int, ...]):
    n = len(letters)
    for i in range(n):
        yield letters[i:] + letters[:i]


def _encode(letters: tuple[int, ...]) -> bytes:
    """Signed letters as bytes (supports alphabets up to 128 generators)."""
    return bytes(2 * (x - 1) if x > 0 else -2 * x - 1 for x in letters)


def _inv(letters: tuple[int, ...]) -> tuple[int, ...]:
    return tuple(-x for x in reversed(letters))


class RelatorSet:
    """A finite relator list with its symmetrised closure and piece table."""

    def __init__(self, alpha: Alphabet, relators: Sequence[Word]):
        self.alphabet = alpha
        cores = []
        for r in relators:
            if r.alphabet != alpha:
                raise SmallCancelError("relator over a different alphabet")
            core, _ = cyclic_reduce(r)
            if not core:
                raise SmallCancelError("trivial relator")
            cores.append(core)
        self.relators = tuple(cores)
        sym: set[tuple[int, ...]] = set()
        shift_class: dict[tuple[int, ...], set[int]] = {}
        for idx, r in enumerate(self.relators):
            for base in (r.letters, _inv(r.letters)):
                for rot in _rotations(base):
                    sym.add(rot)
                    shift_class.setdefault(rot, set()).add(idx)
        self.symmetrised: tuple[tuple[int, ...], ...] = tuple(sorted(sym))
        self._shift_class = shift_class
        self._pieces: Optional[PieceTable] = None
        self._dehn_patterns = None
        self._admissible = None

    def __len__(self):
        return len(self.relators)

    def symmetrised_words(self) -> list[Word]:
        return [Word(self.alphabet, t, reduced=True) for t in self.symmetrised]

    def pieces(self) -> "PieceTable":
        if self._pieces is None:
            self._pieces = compute_pieces(self)
        return self._pieces

    # -- Dehn machinery ------------------------------------------------------
    def _patterns(self):
        """Minimal Dehn violations: for each symmetrised element of length L,
        its cyclic subwords of length L//2+1.  Stored as byte strings so
        scanning uses C-speed substring search; each pattern keeps its
        occurrences (element, offset) for the replacement step."""
        if self._dehn_patterns is None:
            occ: dict[bytes, list[tuple[tuple[int, ...], int]]] = {}
            for w in self.symmetrised:
                L = len(w)
                h = L // 2 + 1
                doubled = _encode(w + w)
                for p in range(L):
                    occ.setdefault(doubled[p:p + h], []).append((w, p))
            self._dehn_patterns = (sorted(occ), occ)
        return self._dehn_patterns

    def dehn_admissible(self) -> tuple[bool, Optional[str]]:
        """Dehn's algorithm applies under C'(1/6), or C'(1/4) plus T(4)."""
        if self._admissible is None:
            if check_metric(self, Fraction(1, 6)).ok:
                self._admissible = (True, "C'(1/6)")
            elif check_metric(self, Fraction(1, 4)).ok and check_T(self, 4).ok:
                self._admissible = (True, "C'(1/4)-T(4)")
            else:
                self._admissible = (False, None)
        return self._admissible


def symmetrise(alpha: Alphabet, relators: Sequence[Word]) -> RelatorSet:
    return RelatorSet(alpha, relators)


# -- piece tables ----------------------------------------------------------------

@dataclass
class PieceTable:
    max_piece_per_relator: list[int]
    max_piece_words: list[Optional[Word]]
    min_factorization_per_relator: list[int]  # over all shifts; big number = no cover
    maximal_pieces: list[Word]
    prefix_piece_len: dict[tuple[int, ...], int]

    NO_COVER = 10 ** 9


def _lcp(a: tuple[int, ...], b: tuple[int, ...]) -> int:
    n = min(len(a), len(b))
    i = 0
    while i < n and a[i] == b[i]:
        i += 1
    return i


def compute_pieces(rs: RelatorSet) -> PieceTable:
    """Maximal piece per position via sorted-neighbour common prefixes.

    In sorted order the longest common prefix of an element with any other
    distinct element is attained at an adjacent element, so one pass gives,
    for every symmetrised element, the longest piece that is a prefix of it.
    """
    elems = rs.symmetrised
    n = len(elems)
    prefix_len: dict[tuple[int, ...], int] = {}
    lcp_next = [0] * n
    for i in range(n - 1):
        lcp_next[i] = _lcp(elems[i], elems[i + 1])
    for i, w in enumerate(elems):
        left = lcp_next[i - 1] if i > 0 else 0
        right = lcp_next[i] if i < n - 1 else 0
        prefix_len[w] = max(left, right)

    max_per_rel = []
    max_word: list[Optional[Word]] = []
    min_fact = []
    for r in rs.relators:
        best = 0
        best_w: Optional[Word] = None
        fact = PieceTable.NO_COVER
        for base in (r.letters, _inv(r.letters)):
            rots = list(_rotations(base))
            jump = [prefix_len[rot] for rot in rots]
            for i, rot in enumerate(rots):
                pl = jump[i]
                if pl > best:
                    best = pl
                    best_w = Word(rs.alphabet, rot[:pl], reduced=True)
                fact = min(fact, _min_cover_at(jump, i))
        max_per_rel.append(best)
        max_word.append(best_w)
        min_fact.append(fact)

    maximal = sorted(
        {elems[i][: prefix_len[elems[i]]] for i in range(n) if prefix_len[elems[i]] > 0}
    )
    return PieceTable(
        max_piece_per_relator=max_per_rel,
        max_piece_words=max_word,
        min_factorization_per_relator=min_fact,
        maximal_pieces=[Word(rs.alphabet, t, reduced=True) for t in maximal],
        prefix_piece_len=prefix_len,
    )


def _min_cover_at(jump: list[int], start: int) -> int:
    """Minimum number of pieces concatenating to the rotation starting at
    ``start``, given the piece-prefix length of every rotation.

    A subword starting at position i is a piece exactly when its length is
    at most the longest piece-prefix of the shift starting at i (prefixes
    of pieces are pieces), so this is minimum jumps with a jump table."""
    L = len(jump)
    if L == 0:
        return 0
    count = 0
    frontier = 0
    farthest = 0
    i = 0
    while frontier < L:
        while i <= frontier:
            j = i + jump[(start + i) % L]
            if j > farthest:
                farthest = j
            i += 1
        if farthest <= frontier:
            return PieceTable.NO_COVER
        count += 1
        frontier = farthest
    return count


# -- verdicts ------------------------------------------------------------------

@dataclass
class MetricVerdict:
    ok: bool
    lam: Fraction
    failing_relator: Optional[Word] = None
    failing_piece: Optional[Word] = None

    def __bool__(self):
        return self.ok


@dataclass
class CVerdict:
    ok: bool
    m: int
    failing_relator: Optional[Word] = None
    pieces_needed: Optional[int] = None

    def __bool__(self):
        return self.ok


@dataclass
class TVerdict:
    ok: bool
    q: int
    triple: Optional[tuple[Word, Word, Word]] = None

    def __bool__(self):
        return self.ok


def check_metric(rs: RelatorSet, lam: Fraction) -> MetricVerdict:
    """C'(lam): every piece inside a relator R has length < lam*|R|, strictly."""
    lam = Fraction(lam)
    if not (0 < lam < 1):
        raise SmallCancelError("lambda must lie in (0, 1)")
    pt = rs.pieces()
    for r, plen, pw in zip(rs.relators, pt.max_piece_per_relator, pt.max_piece_words):
        if plen * lam.denominator >= lam.numerator * len(r):
            return MetricVerdict(False, lam, failing_relator=r, failing_piece=pw)
    return MetricVerdict(True, lam)


def check_C(rs: RelatorSet, m: int) -> CVerdict:
    """C(m): no symmetrised relator concatenates from fewer than m pieces."""
    if m < 2:
        raise SmallCancelError("m must be at least 2")
    pt = rs.pieces()
    for r, fact in zip(rs.relators, pt.min_factorization_per_relator):
        if fact < m:
            return CVerdict(False, m, failing_relator=r, pieces_needed=fact)
    return CVerdict(True, m)


def check_T(rs: RelatorSet, q: int) -> TVerdict:
    """T(q) for q in {3, 4}.  T(3) is vacuous.  T(4): among any cyclically
    non-inverse triple from the symmetrised set, some consecutive product
    is reduced without cancellation."""
    if q == 3:
        return TVerdict(True, q)
    if q != 4:
        raise SmallCancelError("only T(3) and T(4) are implemented")
    # group elements by (first, last) letter; three exemplars per class are
    # enough to decide the non-inverse side conditions
    classes: dict[tuple[int, int], list[tuple[int, ...]]] = {}
    for w in rs.symmetrised:
        key = (w[0], w[-1])
        lst = classes.setdefault(key, [])
        if len(lst) < 3:
            lst.append(w)
    letters = [s for i in range(1, len(rs.alphabet) + 1) for s in (i, -i)]
    for a in letters:
        for b in letters:
            e1 = classes.get((a, -b))
            if not e1:
                continue
            for c in letters:
                e2 = classes.get((b, -c))
                if not e2:
                    continue
                e3 = classes.get((c, -a))
                if not e3:
                    continue
                for r1 in e1:
                    for r2 in e2:
                        if r2 == _inv(r1):
                            continue
                        for r3 in e3:
                            if r3 == _inv(r2) or r1 == _inv(r3):
                                continue
                            triple = tuple(
                                Word(rs.alphabet, t, reduced=True) for t in (r1, r2, r3)
                            )
                            return TVerdict(False, q, triple=triple)
    return TVerdict(True, q)


# -- Dehn reduction ---------------------------------------------------------------

def _find_violation(rs: RelatorSet, letters: tuple[int, ...], start: int = 0):
    """Leftmost position carrying a subword W of some symmetrised relator R
    with |W| > |R|/2; returns (pos, matched length, element, offset).  At
    the leftmost position the match is extended maximally; ties go to the
    least (element, offset)."""
    pattern_list, occ = rs._patterns()
    wb = _encode(letters)
    n = len(letters)
    # leftmost hit over all patterns (C substring search per pattern)
    leftmost = None
    for pb in pattern_list:
        pos = wb.find(pb, start)
        if pos != -1 and (leftmost is None or pos < leftmost):
            leftmost = pos
            if leftmost == start:
                break
    if leftmost is None:
        return None
    i = leftmost
    best = None
    for pb in pattern_list:
        h = len(pb)
        if wb[i:i + h] != pb:
            continue
        for (elem, off) in occ[pb]:
            L = len(elem)
            doubled = elem + elem
            ln = h
            while ln < L and i + ln < n and letters[i + ln] == doubled[off + ln]:
                ln += 1
            cand = (-ln, elem, off)
            if best is None or cand < best:
                best = cand
    return (i, -best[0], best[1], best[2])


def dehn_reduce(rs: RelatorSet, w: Word) -> Word:
    """Replace any subword longer than half a relator by the inverse of the
    complement, leftmost-longest first, until no such subword remains."""
    letters = w.letters
    while True:
        hit = _find_violation(rs, letters)
        if hit is None:
            return Word(rs.alphabet, letters, reduced=True)
        i, ln, elem, off = hit
        rotated = elem[off:] + elem[:off]
        complement = _inv(rotated[ln:])
        letters = free_reduce_letters(letters[:i] + complement + letters[i + ln:])


def is_dehn_reduced(rs: RelatorSet, w: Word) -> bool:
    return w.is_reduced() and _find_violation(rs, w.letters) is None


def is_cyclically_dehn_reduced(rs: RelatorSet, w: Word) -> bool:
    """Every free reduction of every cyclic shift of w is nonempty and
    Dehn reduced over the symmetrised set.

    For w = A^-1 M A with M the cyclic core, the shift reductions are
    exactly the rotations of M together with the nested conjugates
    (A[:p])^-1 M A[:p] - and the latter are subwords of w itself.  So one
    scan of w plus one scan of the doubled core decide the question."""
    if not w:
        return False
    core, _conj = cyclic_reduce(w)
    if not core:
        return False
    pattern_list, _ = rs._patterns()
    wb = _encode(w.letters)
    m = len(core.letters)
    doubled = _encode(core.letters + core.letters)
    for pb in pattern_list:
        if pb in wb:
            return False
        if len(pb) <= m:
            pos = doubled.find(pb)
            if pos != -1 and pos < m:
                return False
    return True


def word_problem(rs: RelatorSet, w: Word) -> bool:
    """Is w trivial in the group presented by the relators?  Requires a
    Dehn-admissible presentation (C'(1/6) or C'(1/4)-T(4))."""
    ok, _route = rs.dehn_admissible()
    if not ok:
        raise SmallCancelError("presentation not Dehn-admissible")
    return len(dehn_reduce(rs, w)) == 0


def endo_order_in_quotient(
    rs: RelatorSet, e: EndomorphismSpec, max_k: int
) -> Optional[int]:
    """Least k <= max_k with e^k acting as the identity on the quotient's
    generators; None if no such k.  e must preserve the relators."""
    for r in rs.relators:
        if not word_problem(rs, apply_endo(e, r)):
            raise SmallCancelError("does not preserve relators")
    from .words import compose_endos

    alpha = rs.alphabet
    gens = [Word(alpha, (i + 1,), reduced=True) for i in range(len(alpha))]
    current = e
    for k in range(1, max_k + 1):
        if all(word_problem(rs, current(g) * g.inverse()) for g in gens):
            return k
        if k < max_k:
            current = compose_endos(e, current)
    return None
