import itertools

import pytest

from malkit.malchar import (
    HypothesesViolated,
    MalcharError,
    decide_malcharacteristic_free,
    decide_malcharacteristic_triangle,
    length_preserving_autos,
    malcharlem_hypotheses,
    psi_maps,
    psi_transversal,
    rank_n_family,
    seed_block_substitution,
    seed_words_free,
    seed_words_triangle,
    triangle_relators,
    verify_psi_images,
)
from malkit.smallcancel import symmetrise, word_problem
from malkit.stallings import build_and_fold, contains
from malkit.words import alphabet, apply_endo, compose_endos, conjugate, identity_endo, word

AB = alphabet("a b")


def w(text):
    return word(AB, text)


class TestLengthPreservingAutos:
    def test_count(self):
        autos = length_preserving_autos(AB)
        assert len(autos) == 8
        assert sum(1 for a in autos if not a.is_identity()) == 7

    def test_contains_swap_and_inversion(self):
        autos = set(length_preserving_autos(AB))
        from malkit.words import endo

        assert endo(AB, {"a": "b", "b": "a"}) in autos
        assert endo(AB, {"a": "a^-1", "b": "b^-1"}) in autos

    def test_group_of_order_eight(self):
        autos = length_preserving_autos(AB)
        closure = set(autos)
        for f, g in itertools.product(autos, repeat=2):
            closure.add(compose_endos(f, g))
        assert len(closure) == 8

    def test_each_has_inverse(self):
        autos = length_preserving_autos(AB)
        ident = identity_endo(AB)
        for f in autos:
            assert any(compose_endos(f, g) == ident for g in autos)


class TestHypotheses:
    def test_a3b3_passes(self):
        assert malcharlem_hypotheses(AB, [w("a^3 b^3")]).ok

    def test_a2b2_circuit_fails(self):
        verdict = malcharlem_hypotheses(AB, [w("a^2 b^2")])
        assert not verdict.ok
        assert "a^3" in verdict.reason

    def test_negative_letters_fail(self):
        verdict = malcharlem_hypotheses(AB, [w("a^3 b^-3")])
        assert not verdict.ok

    def test_duplicates_fail(self):
        assert not malcharlem_hypotheses(AB, [w("a^3 b^3"), w("a^3 b^3")]).ok

    def test_seed_words_pass(self):
        seeds = seed_words_free(AB, 6)
        assert malcharlem_hypotheses(AB, list(seeds.pair)).ok


class TestDecideFree:
    def test_seed_words_certified(self):
        for rho in (6, 8):
            seeds = seed_words_free(AB, rho)
            assert decide_malcharacteristic_free(AB, list(seeds.pair)).malcharacteristic

    def test_a3b3_rejected_with_witness(self):
        verdict = decide_malcharacteristic_free(AB, [w("a^3 b^3")])
        assert not verdict.malcharacteristic
        assert verdict.failing_auto is not None
        # the witness element lies in C and conjugates into the image
        u, g = verdict.witness.element, verdict.witness.conjugator
        c = build_and_fold(AB, [w("a^3 b^3")])
        image = build_and_fold(AB, [apply_endo(verdict.failing_auto, w("a^3 b^3"))])
        assert contains(c, u)
        assert contains(image, conjugate(u, g.inverse()))

    def test_a3b3_swap_witness_from_spec_worked_example(self):
        # the a<->b swap in particular defeats <a^3 b^3>: b^3 a^3 lies in
        # the swapped image and in the a^3-conjugate
        from malkit.stallings import trivial_intersection_all_conjugates
        from malkit.words import endo

        swap = endo(AB, {"a": "b", "b": "a"})
        image = [apply_endo(swap, w("a^3 b^3"))]
        verdict = trivial_intersection_all_conjugates(AB, image, [w("a^3 b^3")])
        assert not verdict.trivial

    def test_a2b2_refused(self):
        with pytest.raises(HypothesesViolated):
            decide_malcharacteristic_free(AB, [w("a^2 b^2")])


class TestSeedWords:
    def test_free_rho2_closed_form(self):
        seeds = seed_words_free(AB, 2)
        assert seeds.pair[0] == w("a^3 b^3 a^3 b^4")
        assert seeds.pair[1] == w("a^3 b^5 a^3 b^6")

    def test_free_rho3_first_word(self):
        assert seed_words_free(AB, 3).pair[0] == w("a^3 b^3 a^3 b^4 a^3 b^5")

    def test_length_formula(self):
        for rho in (2, 5, 9):
            wx, wy = seed_words_free(AB, rho).pair
            assert len(wx) == 3 * rho + sum(range(3, rho + 3))
            assert len(wy) == 3 * rho + sum(range(rho + 3, 2 * rho + 3))

    def test_triangle_rho2_closed_form(self):
        seeds = seed_words_triangle(AB, 2)
        assert seeds.pair[0] == w("(a b^-1)^3 (a^2 b^-1)^3 (a b^-1)^3 (a^2 b^-1)^4")

    def test_triangle_rho3_second_word(self):
        expected = w(
            "(a b^-1)^3 (a^2 b^-1)^6 (a b^-1)^3 (a^2 b^-1)^7 (a b^-1)^3 (a^2 b^-1)^8"
        )
        assert seed_words_triangle(AB, 3).pair[1] == expected

    def test_block_substitution_identity(self):
        sub = seed_block_substitution(AB)
        for rho in (2, 4, 8):
            free = seed_words_free(AB, rho)
            tri = seed_words_triangle(AB, rho)
            assert tuple(apply_endo(sub, v) for v in free.pair) == tri.pair

    def test_rho_below_two_rejected(self):
        with pytest.raises(MalcharError):
            seed_words_free(AB, 1)
        with pytest.raises(MalcharError):
            seed_words_triangle(AB, 0)


class TestRankNFamily:
    def test_first_natural_factor(self):
        seed = seed_words_free(AB, 2)
        fam = rank_n_family(seed, 1)
        u, v = seed.pair
        assert fam.words == [u * v * (u * v * v)]

    def test_requested_rank_achieved(self):
        seed = seed_words_free(AB, 2)
        for n in (1, 2, 3, 4):
            fam = rank_n_family(seed, n)
            assert build_and_fold(AB, fam.words).rank() == n

    def test_no_proper_powers(self):
        from malkit.words import proper_power

        fam = rank_n_family(seed_words_free(AB, 2), 3)
        for v in fam.abstract:
            assert proper_power(v) is None

    def test_quotient_coupled_check_records(self):
        fam = rank_n_family(seed_words_triangle(AB, 2), 2, r=triangle_relators(AB, 6, 6, 6))
        assert fam.checks["cyclically_reduced_in_quotient"]

    def test_bad_n(self):
        with pytest.raises(MalcharError):
            rank_n_family(seed_words_free(AB, 2), 0)


class TestPsiMaps:
    def test_twelve_maps(self):
        assert len(psi_maps(AB)) == 12

    def test_transversal_sizes(self):
        assert len(psi_transversal(AB, 6, 7, 8)) == 2
        assert len(psi_transversal(AB, 6, 6, 7)) == 4
        assert len(psi_transversal(AB, 7, 6, 6)) == 4
        assert len(psi_transversal(AB, 6, 7, 6)) == 4
        assert len(psi_transversal(AB, 6, 6, 6)) == 12

    def test_transversal_maps_preserve_relators(self):
        # re-assert outside the internal check: image of each relator trivial
        for (i, j, k) in [(6, 6, 6), (6, 6, 7), (6, 7, 8)]:
            rs = symmetrise(AB, triangle_relators(AB, i, j, k))
            for m in psi_transversal(AB, i, j, k):
                for rel in rs.relators:
                    assert word_problem(rs, apply_endo(m.spec, rel))

    def test_selection_matches_exhaustive_relator_scan(self):
        # the transversal is exactly the set of maps preserving the relators
        for (i, j, k) in [(6, 7, 8), (6, 6, 7), (6, 7, 6), (7, 6, 6), (6, 6, 6)]:
            rs = symmetrise(AB, triangle_relators(AB, i, j, k))
            surviving = {
                m.name
                for m in psi_maps(AB)
                if all(word_problem(rs, apply_endo(m.spec, r)) for r in rs.relators)
            }
            selected = {m.name for m in psi_transversal(AB, i, j, k)}
            assert selected == surviving, (i, j, k)

    def test_below_six_rejected(self):
        with pytest.raises(MalcharError):
            psi_transversal(AB, 5, 6, 6)


class TestVerifyPsiImages:
    def test_equilateral_rho8_all_ok(self):
        reports = verify_psi_images(AB, 6, 6, 6, 8, 3)
        assert len(reports) == 12
        assert all(r.ok for r in reports)
        assert all(r.unconditional for r in reports)
        assert all(not r.forbidden_hits for r in reports)

    def test_identity_map_reduces_to_seed_check(self):
        reports = verify_psi_images(AB, 6, 6, 6, 8, 3)
        ident = [r for r in reports if r.psi.is_identity()][0]
        assert ident.images == list(seed_words_triangle(AB, 8).pair)

    def test_small_rho_recorded_either_way(self):
        reports = verify_psi_images(AB, 6, 6, 6, 3, 3)
        assert len(reports) == 12  # outcome recorded, whatever it is
        for r in reports:
            assert isinstance(r.ok, bool)


class TestTriangleCertificate:
    def test_structure_at_paper_scale(self):
        cert = decide_malcharacteristic_triangle(AB, 6, 6, 6, 8)
        # the exact-definition metric hypothesis fails (known defect of the
        # stated joint condition); everything the run-length arguments
        # cover is green
        assert not cert.certified
        stage1 = cert.data["stage1"]
        assert not stage1["certified"]
        assert any("stage 2" in h.name and h.ok for h in cert.hypotheses)
        for entry in cert.data["stage3"]:
            assert entry["family_ok"] and not entry["forbidden_hits"]
            if "free_verdict" in entry:
                assert entry["free_verdict"] == "trivial"
                assert entry["transfer_certified"] is False

    def test_below_six_rejected(self):
        with pytest.raises(MalcharError):
            decide_malcharacteristic_triangle(AB, 5, 5, 5, 8)

    @pytest.mark.slow
    def test_fully_certified_where_hypotheses_hold(self):
        # at exponent 13 with long seeds the joint set genuinely satisfies
        # C'(1/6), and the whole composite certificate goes green
        cert = decide_malcharacteristic_triangle(AB, 13, 13, 13, 19)
        assert cert.certified
        assert cert.data["stage1"]["route"] == "C'(1/6)"
