from math import comb

import pytest
from hypothesis import given, strategies as st

from supersingular import motives as mo
from supersingular.errors import PreconditionError
from supersingular.motives import H1, UNIT, ZERO, Partition, SSMotive, tate

from oracles import brute_multiset_sym, hilbert_betti_by_series, kummer_euler, ssyt_count

motives_st = st.builds(
    SSMotive,
    st.dictionaries(st.integers(0, 4), st.integers(0, 3), max_size=3),
    st.dictionaries(st.integers(0, 4), st.integers(0, 3), max_size=3),
)


class TestAlgebra:
    def test_examples(self):
        assert tate(1) * tate(2) == tate(3)
        assert H1 * H1 == tate(1, 4)
        assert (UNIT + H1) * H1 == H1 + tate(1, 4)

    def test_zero_and_unit(self):
        assert ZERO.is_zero() and ZERO.rank() == 0
        assert UNIT * H1 == H1 and ZERO * H1 == ZERO

    def test_rejects_negative(self):
        with pytest.raises(PreconditionError):
            SSMotive({-1: 1})
        with pytest.raises(PreconditionError):
            tate(0).twist(-1)

    @given(motives_st, motives_st, motives_st)
    def test_ring_laws(self, a, b, c):
        assert a * b == b * a
        assert (a * b) * c == a * (b * c)
        assert a * (b + c) == a * b + a * c
        assert (a * b).rank() == a.rank() * b.rank()

    @given(motives_st)
    def test_betti_round_trip(self, m):
        assert mo.canonical_from_betti(mo.betti_vector(m)) == m

    def test_json(self):
        assert (tate(2, 3) + H1).to_json() == {"tate": {"2": 3}, "h1e": {"0": 1}}


class TestSchur:
    def test_sym_examples(self):
        assert mo.sym_h1e(2) == tate(1, 3)
        assert mo.sym_h1e(0) == UNIT
        assert mo.sym_h1e(1) == H1
        # rank 4 forces multiplicity 2 here
        assert mo.sym_h1e(3) == SSMotive(h1e={1: 2})

    @pytest.mark.parametrize("k", range(13))
    def test_sym_rank(self, k):
        assert mo.sym_h1e(k).rank() == k + 1

    def test_literal_multiplicity_audit(self):
        rows = mo.sym_rank_audit(12)
        assert all(r["implemented_rank"] == r["expected_rank"] for r in rows)
        bad = [r["k"] for r in rows if not r["literal_ok"]]
        assert bad == [0] + list(range(3, 13))
        assert mo.literal_sym_multiplicity(2) == 3 and mo.literal_sym_multiplicity(3) == 6

    def test_wedge(self):
        assert mo.wedge_h1e(0) == UNIT and mo.wedge_h1e(1) == H1
        assert mo.wedge_h1e(2) == tate(1) and mo.wedge_h1e(3) == ZERO
        with pytest.raises(PreconditionError):
            mo.wedge_h1e(-1)

    def test_schur_examples(self):
        assert mo.schur_h1e(Partition((1,))) == H1
        assert mo.schur_h1e(Partition((1, 1))) == tate(1)
        assert mo.schur_h1e(Partition((2, 1))) == SSMotive(h1e={1: 1})
        assert mo.schur_h1e(Partition((1, 1, 1))) == ZERO

    @pytest.mark.parametrize("n", range(1, 8))
    def test_schur_rank_is_tableau_count(self, n):
        for lam in mo.partitions_of(n):
            assert mo.schur_h1e(lam).rank() == ssyt_count(lam.parts, 2)

    @pytest.mark.parametrize("g", range(0, 6))
    def test_hook_content_against_tableaux(self, g):
        for n in range(1, 7):
            for lam in mo.partitions_of(n):
                assert mo.schur_dimension(lam, g) == ssyt_count(lam.parts, g)


class TestPartition:
    def test_derived(self):
        lam = Partition((1, 3, 1, 2))
        assert lam.parts == (3, 2, 1, 1)
        assert lam.size == 7 and lam.length == 4
        assert lam.multiplicities == {3: 1, 2: 1, 1: 2}
        assert lam.transpose == Partition((4, 2, 1))
        assert Partition((4, 2)).gcd == 2

    def test_counts(self):
        assert [len(mo.partitions_of(n)) for n in range(8)] == [1, 1, 2, 3, 5, 7, 11, 15]
        assert mo.partitions_of(3)[0] == Partition((3,))

    def test_rejects_nonpositive(self):
        with pytest.raises(PreconditionError):
            Partition((2, 0))


class TestAbelianVarieties:
    def test_direct_examples(self):
        assert mo.ssav_motive_direct(0) == UNIT
        assert mo.ssav_motive_direct(1) == UNIT + H1 + tate(1)
        want = UNIT + SSMotive(h1e={0: 2}) + tate(1, 6) + SSMotive(h1e={1: 2}) + tate(2)
        assert mo.ssav_motive_direct(2) == want

    @pytest.mark.parametrize("g", range(6))
    def test_two_routes_agree(self, g):
        assert mo.ssav_motive_schur(g) == mo.ssav_motive_direct(g)
        assert mo.betti_vector(mo.ssav_motive_direct(g)) == [comb(2 * g, i) for i in range(2 * g + 1)]

    def test_schur_degree_two_split(self):
        # g = 2, degree 2: each of (2) and (1,1) contributes 1(-1)^3
        two = Partition((2,))
        one_one = Partition((1, 1))
        assert mo.schur_dimension(one_one, 2) == 1 and mo.schur_dimension(two, 2) == 3
        assert mo.schur_h1e(two) == tate(1, 3) and mo.schur_h1e(one_one) == tate(1)


class TestBetti:
    def test_canonical(self):
        assert mo.canonical_from_betti([1, 0, 22, 0, 1]) == UNIT + tate(1, 22) + tate(2)
        assert mo.canonical_from_betti([1, 4, 6, 4, 1]) == mo.ssav_motive_direct(2)
        with pytest.raises(PreconditionError, match="odd"):
            mo.canonical_from_betti([1, 1, 1])
        with pytest.raises(PreconditionError):
            mo.canonical_from_betti([1, -2, 1])

    def test_poincare(self):
        assert mo.is_poincare_dual([1, 0, 22, 0, 1])
        assert not mo.is_poincare_dual([1, 0, 2])


class TestHilbert:
    def test_n1(self):
        assert mo.hilb_motive(mo.SS_K3_MOTIVE, 1) == mo.SS_K3_MOTIVE

    def test_n2_betti(self):
        assert mo.betti_vector(mo.hilb_motive(mo.SS_K3_MOTIVE, 2)) == [1, 0, 23, 0, 276, 0, 23, 0, 1]

    @pytest.mark.parametrize("n", range(1, 9))
    def test_against_gottsche(self, n):
        b = mo.betti_vector(mo.hilb_motive(mo.SS_K3_MOTIVE, n))
        assert b == mo.gottsche_poincare(mo.K3_BETTI, n) == hilbert_betti_by_series(mo.K3_BETTI, n)
        if n >= 2:
            assert b[2] == 23

    def test_gottsche_examples(self):
        assert mo.gottsche_poincare(mo.K3_BETTI, 1) == [1, 0, 22, 0, 1]
        assert mo.gottsche_poincare(mo.K3_BETTI, 2)[4] == 276
        assert mo.gottsche_poincare(mo.K3_BETTI, 3)[2] == 23

    def test_other_tate_surface(self):
        # P^2 blown up: b = (1,0,2,0,1)
        for n in range(1, 5):
            b = mo.betti_vector(mo.hilb_motive(SSMotive({0: 1, 1: 2, 2: 1}), n))
            assert b == hilbert_betti_by_series((1, 0, 2, 0, 1), n)

    def test_rejects_odd_surface(self):
        with pytest.raises(PreconditionError):
            mo.hilb_motive(mo.ssav_motive_direct(2), 2)
        with pytest.raises(PreconditionError):
            mo.gottsche_poincare([1, 4, 6, 4, 1], 2)

    @given(st.dictionaries(st.integers(0, 3), st.integers(1, 3), min_size=1, max_size=3),
           st.integers(0, 4))
    def test_tate_sym_multisets(self, counts, k):
        assert mo._tate_sym(counts, k) == brute_multiset_sym(counts, k)


class TestKummer:
    def test_inventory_n1(self):
        inv = mo.kummer_inventory(1)
        assert [(s.partition.parts, s.copies, s.power) for s in inv] == [((2,), 16, 0), ((1, 1), 1, 1)]

    def test_inventory_n2(self):
        inv = mo.kummer_inventory(2)
        assert [(s.partition.parts, s.copies, s.power) for s in inv] == [
            ((3,), 81, 0), ((2, 1), 1, 1), ((1, 1, 1), 1, 2)]

    @pytest.mark.parametrize("n", range(1, 7))
    def test_copies_fourth_powers(self, n):
        for s in mo.kummer_inventory(n):
            root = round(s.copies ** 0.25)
            assert root ** 4 == s.copies == s.partition.gcd ** 4
            assert s.twist == s.partition.length - n

    def test_betti_small(self):
        assert mo.kummer_betti(1) == [1, 0, 22, 0, 1]
        assert mo.kummer_betti(2) == [1, 0, 7, 8, 108, 8, 7, 0, 1]

    @pytest.mark.parametrize("n", range(1, 7))
    def test_betti_properties(self, n):
        b = mo.kummer_betti(n)
        assert len(b) == 4 * n + 1 and b[0] == 1 and mo.is_poincare_dual(b)
        assert sum((-1) ** i * x for i, x in enumerate(b)) == kummer_euler(n)
        if n >= 2:
            assert b[2] == 7

    def test_dimension_audit_flags_n1(self):
        audit = mo.kummer_dimension_audit(1)
        assert audit["inventory_total"] == 32 and audit["betti_total"] == 24
        assert not audit["consistent"] and "32" in audit["flag"]

    def test_rejects_n0(self):
        with pytest.raises(PreconditionError):
            mo.kummer_inventory(0)


class TestChow:
    def test_hilbert_scheme(self):
        rep = mo.chow_rank_report(mo.betti_vector(mo.hilb_motive(mo.SS_K3_MOTIVE, 2)))
        assert rep["tate_type"] and all(r["ab_dim"] == 0 for r in rep["rows"])
        assert [r["ch0_rank"] for r in rep["rows"]] == [1, 23, 276, 23, 1]

    def test_kummer_k3(self):
        assert mo.chow_rank_report([1, 0, 22, 0, 1])["tate_type"]

    def test_abelian_surface(self):
        rep = mo.chow_rank_report([1, 4, 6, 4, 1])
        assert not rep["tate_type"]
        assert [r["ab_dim"] for r in rep["rows"]] == [0, 2, 2]

    def test_odd_rejected(self):
        with pytest.raises(PreconditionError):
            mo.chow_rank_report([1, 3, 1])
