"""Todd-Coxeter coset enumeration and Schreier kernel generators.

HLT-style relator tracing with immediate deduction filling and standard
coincidence merging (union-find on cosets).  Overflow - exceeding the
coset cap - is a distinguished outcome, not an error: callers legitimately
probe for finiteness.
"""

from __future__ import annotations

from collections import deque
from dataclasses import dataclass
from typing import Optional, Sequence

from .words import Alphabet, Word, free_reduce_letters

DEFAULT_MAX_COSETS = 10 ** 5


class CosetEnumError(ValueError):
    pass


@dataclass(frozen=True)
class Overflow:
    max_cosets: int
    live_cosets: int


def _code(letter: int) -> int:
    return 2 * (letter - 1) if letter > 0 else -2 * letter - 1


def _inv_code(code: int) -> int:
    return code ^ 1


class CosetTable:
    """Complete coset table with a Schreier transversal.

    Cosets are numbered 0..n-1 internally with 0 the subgroup coset;
    public coset ids are 1-based (1 = trivial/subgroup coset)."""

    def __init__(self, alpha: Alphabet, relators: Sequence[Word], subgroup: Sequence[Word],
                 table: list[list[int]], reps: list[tuple[int, ...]]):
        self.alphabet = alpha
        self.relators = tuple(relators)
        self.subgroup = tuple(subgroup)
        self.table = table
        self.reps = reps

    @property
    def index(self) -> int:
        return len(self.table)

    def trace(self, letters: Sequence[int], start: int = 0) -> int:
        v = start
        tbl = self.table
        for x in letters:
            v = tbl[v][_code(x)]
        return v

    def image_in_quotient(self, w: Word) -> int:
        """1-based coset id of the image of w; 1 means trivial image."""
        if w.alphabet != self.alphabet:
            raise CosetEnumError("word over a different alphabet")
        return self.trace(w.letters) + 1

    def rep_word(self, coset_id: int) -> Word:
        """Schreier representative of a 1-based coset id."""
        return Word(self.alphabet, self.reps[coset_id - 1], reduced=True)


def todd_coxeter(
    alpha: Alphabet,
    relators: Sequence[Word],
    subgroup_gens: Sequence[Word] = (),
    max_cosets: int = DEFAULT_MAX_COSETS,
) -> CosetTable | Overflow:
    """Enumerate cosets of <subgroup_gens> in the presented group.

    Returns a complete, standardized CosetTable if the index is discovered
    within ``max_cosets`` live cosets, else an Overflow marker."""
    ncols = 2 * len(alpha)
    table: list[list[Optional[int]]] = [[None] * ncols]
    p = [0]
    live = 1

    def rep(k: int) -> int:
        r = k
        while p[r] != r:
            r = p[r]
        while p[k] != r:
            p[k], k = r, p[k]
        return r

    def define(a: int, c: int) -> int:
        nonlocal live
        b = len(table)
        table.append([None] * ncols)
        p.append(b)
        table[a][c] = b
        table[b][_inv_code(c)] = a
        live += 1
        return b

    def coincidence(a: int, b: int):
        nonlocal live
        q = deque()

        def merge(x: int, y: int):
            nonlocal live
            x, y = rep(x), rep(y)
            if x != y:
                x, y = min(x, y), max(x, y)
                p[y] = x
                live -= 1
                q.append(y)

        merge(a, b)
        while q:
            g = q.popleft()
            row = table[g]
            for c in range(ncols):
                d = row[c]
                if d is None:
                    continue
                table[d][_inv_code(c)] = None
                mu, nu = rep(g), rep(d)
                t = table[mu][c]
                if t is not None:
                    merge(nu, rep(t))
                else:
                    t2 = table[nu][_inv_code(c)]
                    if t2 is not None:
                        merge(mu, rep(t2))
                    else:
                        table[mu][c] = nu
                        table[nu][_inv_code(c)] = mu

    def scan_and_fill(a: int, codes: tuple[int, ...]):
        i, j = 0, len(codes) - 1
        f = b = a
        while True:
            while i <= j and table[f][codes[i]] is not None:
                f = rep(table[f][codes[i]])
                i += 1
            if i > j:
                if f != b:
                    coincidence(f, b)
                return
            while j >= i and table[b][_inv_code(codes[j])] is not None:
                b = rep(table[b][_inv_code(codes[j])])
                j -= 1
            if j < i:
                coincidence(f, b)
                return
            if j == i:
                table[f][codes[i]] = b
                table[b][_inv_code(codes[i])] = f
                return
            define(f, codes[i])

    rel_codes = [tuple(_code(x) for x in r.letters) for r in relators if r.letters]
    sub_codes = [tuple(_code(x) for x in g.letters) for g in subgroup_gens if g.letters]

    for codes in sub_codes:
        scan_and_fill(0, codes)
        if live > max_cosets:
            return Overflow(max_cosets, live)

    a = 0
    while a < len(table):
        if rep(a) != a:
            a += 1
            continue
        for codes in rel_codes:
            scan_and_fill(a, codes)
            if rep(a) != a:
                break
        if rep(a) == a:
            for c in range(ncols):
                if table[a][c] is None:
                    define(a, c)
        if live > max_cosets:
            return Overflow(max_cosets, live)
        a += 1

    # compact live cosets and standardize by BFS from coset 0
    return _standardize(alpha, relators, subgroup_gens, table, p, rep)


def _standardize(alpha, relators, subgroup_gens, table, p, rep) -> CosetTable:
    ncols = 2 * len(alpha)
    number: dict[int, int] = {rep(0): 0}
    reps_letters: list[tuple[int, ...]] = [()]
    order = [rep(0)]
    q = deque(order)
    while q:
        v = q.popleft()
        for gen in range(len(alpha)):
            for code, letter in ((2 * gen, gen + 1), (2 * gen + 1, -(gen + 1))):
                wv = table[v][code]
                if wv is None:
                    raise CosetEnumError("internal: incomplete table after enumeration")
                wv = rep(wv)
                if wv not in number:
                    number[wv] = len(order)
                    reps_letters.append(reps_letters[number[v]] + (letter,))
                    order.append(wv)
                    q.append(wv)
    new_table = [[0] * ncols for _ in order]
    for old, new in number.items():
        for c in range(ncols):
            new_table[new][c] = number[rep(table[old][c])]
    return CosetTable(alpha, relators, subgroup_gens, new_table, reps_letters)


def schreier_kernel_generators(
    alpha: Alphabet,
    relators: Sequence[Word],
    killed: Sequence[int] = (),
    max_cosets: int = DEFAULT_MAX_COSETS,
) -> tuple[list[Word], CosetTable]:
    """Generators of the kernel of F(gens) -> Q, where Q is presented by
    the relators together with the killed generators.

    Schreier generators rep(c) * g * rep(c*g)^-1 over all cosets of the
    trivial subgroup, freely reduced, trivial entries dropped, deduplicated.
    Requires the quotient to be finite within the cap."""
    killed_words = [Word(alpha, (i + 1,), reduced=True) for i in killed]
    outcome = todd_coxeter(alpha, list(relators) + killed_words, (), max_cosets)
    if isinstance(outcome, Overflow):
        raise CosetEnumError("finite quotient required")
    gens: list[Word] = []
    seen = set()
    for c in range(outcome.index):
        rep_c = outcome.reps[c]
        for gen in range(len(alpha)):
            target = outcome.table[c][2 * gen]
            letters = free_reduce_letters(
                rep_c + (gen + 1,) + tuple(-x for x in reversed(outcome.reps[target]))
            )
            if letters and letters not in seen:
                seen.add(letters)
                gens.append(Word(alpha, letters, reduced=True))
    for g in gens:
        assert outcome.image_in_quotient(g) == 1
    return gens, outcome


def image_in_quotient(table: CosetTable, w: Word) -> int:
    return table.image_in_quotient(w)
