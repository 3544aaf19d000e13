import itertools
import random

import pytest
from hypothesis import given, strategies as st

from malkit.words import (
    CyclicWord,
    Word,
    WordError,
    alphabet,
    apply_endo,
    compose_endos,
    conjugate,
    cyclic_reduce,
    endo,
    endo_power,
    format_word,
    free_reduce_letters,
    identity_endo,
    parse_word_list,
    positive_subsemigroup_member,
    proper_power,
    word,
)

AB = alphabet("a b")


def w(text):
    return word(AB, text)


class TestFreeReduce:
    def test_simple_cancellation(self):
        assert w("a b b^-1 a") == w("a a")

    def test_identity_case(self):
        assert w("a a^-1") == w("1")
        assert len(w("a a^-1")) == 0

    def test_nested_cancellation(self):
        assert w("b b^-1 a^-1 a") == w("1")

    def test_idempotent_and_nonincreasing_random(self):
        rng = random.Random(7)
        for _ in range(200):
            raw = [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(12))]
            red = free_reduce_letters(raw)
            assert free_reduce_letters(red) == red
            assert len(red) <= len(raw)
            assert all(red[i] != -red[i + 1] for i in range(len(red) - 1))

    @given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=30))
    def test_no_cancelling_pair_property(self, raw):
        red = free_reduce_letters(raw)
        assert all(red[i] != -red[i + 1] for i in range(len(red) - 1))


class TestCyclicReduce:
    def test_single_conjugation_layer(self):
        core, conj = cyclic_reduce(w("b^-1 a b"))
        assert core == w("a") and conj == w("b")

    def test_already_cyclically_reduced(self):
        core, conj = cyclic_reduce(w("a b"))
        assert core == w("a b") and conj == w("1")

    def test_peel_and_check(self):
        v = w("b^-1 a^-1 b a b")
        core, conj = cyclic_reduce(v)
        assert core.is_cyclically_reduced()
        assert conj.inverse() * core * conj == v

    def test_reassembly_random(self):
        rng = random.Random(11)
        for _ in range(100):
            raw = Word(AB, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(14))])
            core, conj = cyclic_reduce(raw)
            assert conj.inverse() * core * conj == raw
            assert core.is_cyclically_reduced()


class TestProperPower:
    def test_period_two(self):
        assert proper_power(w("a b a b")) == (w("a b"), 2)

    def test_power_of_letter(self):
        assert proper_power(w("a^6")) == (w("a"), 6)

    def test_primitive(self):
        assert proper_power(w("a b")) is None

    def test_empty_errors(self):
        with pytest.raises(WordError):
            proper_power(w("1"))

    def test_core_convention(self):
        # decomposition happens on the cyclic core
        root, e = proper_power(w("b (a b) (a b) b^-1"))
        assert e == 2
        assert root ** e == cyclic_reduce(w("b (a b)^2 b^-1"))[0]

    def test_exponent_maximal(self):
        root, e = proper_power(w("a^12"))
        assert (root, e) == (w("a"), 12)
        for d in range(2, 12):
            if 12 % d == 0:
                assert root ** 12 == (root ** d) ** (12 // d)


PHI = endo(AB, {"a": "b", "b": "b^-1 a^-1"})


class TestEndomorphisms:
    def test_hand_substitution(self):
        assert apply_endo(PHI, w("a b")) == w("a^-1")

    def test_identity(self):
        ident = identity_endo(AB)
        for text in ["a b", "a^6", "b^-1 a b"]:
            assert apply_endo(ident, w(text)) == w(text)

    def test_image_of_power(self):
        assert apply_endo(PHI, w("a^6")) == w("b^6")

    def test_cube_is_identity(self):
        assert endo_power(PHI, 3) == identity_endo(AB)

    def test_first_power(self):
        assert endo_power(PHI, 1) == PHI

    def test_square_by_hand(self):
        assert endo_power(PHI, 2) == endo(AB, {"a": "b^-1 a^-1", "b": "a"})

    def test_distributes_over_concatenation(self):
        rng = random.Random(3)
        for _ in range(50):
            u = Word(AB, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(8))])
            v = Word(AB, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(8))])
            assert apply_endo(PHI, u * v) == apply_endo(PHI, u) * apply_endo(PHI, v)

    def test_power_additivity(self):
        for j, k in itertools.product(range(4), repeat=2):
            lhs = endo_power(PHI, j + k)
            rhs = compose_endos(endo_power(PHI, j), endo_power(PHI, k))
            assert lhs == rhs

    def test_letter_outside_domain(self):
        abc = alphabet("a b c")
        with pytest.raises(WordError):
            apply_endo(PHI, word(abc, "c"))


class TestConjugate:
    def test_basic(self):
        assert conjugate(w("a"), w("b")) == w("b^-1 a b")

    def test_identity_conjugator(self):
        assert conjugate(w("a"), w("1")) == w("a")

    def test_cancellation(self):
        assert conjugate(w("a b"), w("a")) == w("b a")


class TestPositiveSubsemigroup:
    GENS = [w("a^2"), w("a^3"), w("b^2"), w("b^3")]

    def test_paper_style_member(self):
        assert positive_subsemigroup_member(w("a^3 b^3"), self.GENS)

    def test_lone_a_not_member(self):
        assert not positive_subsemigroup_member(w("a b^2"), self.GENS)

    def test_a5_member(self):
        assert positive_subsemigroup_member(w("a^5"), self.GENS)

    def test_negative_generator_rejected(self):
        with pytest.raises(WordError):
            positive_subsemigroup_member(w("a"), [w("a^-1")])

    def test_agrees_with_bruteforce(self):
        gens = self.GENS

        def brute(target):
            # enumerate all factorizations up to the target length
            frontier = {()}
            glets = [g.letters for g in gens]
            seen = set()
            stack = [()]
            while stack:
                cur = stack.pop()
                if cur == target:
                    return True
                if len(cur) >= len(target) or cur in seen:
                    continue
                seen.add(cur)
                for g in glets:
                    nxt = cur + g
                    if nxt == target[: len(nxt)]:
                        stack.append(nxt)
            return bool(target == ())

        rng = random.Random(5)
        for _ in range(60):
            tgt = Word(AB, [rng.choice([1, 2]) for _ in range(rng.randrange(1, 13))])
            assert positive_subsemigroup_member(tgt, gens) == brute(tgt.letters)


class TestTextSyntax:
    def test_exponent_forms(self):
        assert word(AB, "a^6") == Word(AB, [1] * 6)
        assert word(AB, "(a b)^6") == Word(AB, [1, 2] * 6)
        assert word(AB, "a b^-1 (a^2 b^-1)^3") == Word(
            AB, [1, -2] + [1, 1, -2] * 3
        )

    def test_empty_word(self):
        assert word(AB, "1") == Word(AB, [])

    def test_unknown_generator(self):
        with pytest.raises(WordError):
            word(AB, "a c")

    def test_unbalanced_parens(self):
        with pytest.raises(WordError):
            word(AB, "(a b")
        with pytest.raises(WordError):
            word(AB, "a b)")

    def test_word_list(self):
        assert parse_word_list(AB, "a^6, b^6, (a b)^6") == [
            w("a^6"),
            w("b^6"),
            w("(a b)^6"),
        ]

    @given(st.lists(st.sampled_from([1, -1, 2, -2]), max_size=25))
    def test_round_trip(self, raw):
        v = Word(AB, raw)
        assert word(AB, format_word(v)) == v

    def test_multichar_names(self):
        big = alphabet("x1 y_two")
        v = word(big, "x1 y_two^-2")
        assert v.letters == (1, -2, -2)
        assert word(big, format_word(v)) == v


class TestCyclicWord:
    def test_canonical_rotation_least(self):
        assert CyclicWord(w("b a")) == CyclicWord(w("a b"))
        assert CyclicWord(w("b a")).letters == (1, 2)

    def test_sign_order(self):
        # + sorts before - for the same generator
        assert CyclicWord(w("a^-1 b a")).letters[0] == 2  # reduces to b as cyclic word?
        # b^-1 a b reduces to a
        assert CyclicWord(w("b^-1 a b")).letters == (1,)

    def test_conjugacy_invariance(self):
        rng = random.Random(13)
        for _ in range(60):
            u = Word(AB, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(1, 10))])
            g = Word(AB, [rng.choice([1, -1, 2, -2]) for _ in range(rng.randrange(6))])
            assert CyclicWord(u) == CyclicWord(conjugate(u, g))
