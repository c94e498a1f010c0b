"""Closed-form angular-momentum oracles, cross-checked against an
independent highest-weight/lowering construction written in this file."""

import itertools
import math
from fractions import Fraction

import numpy as np
import pytest

from spinzx import (
    clebsch_gordan,
    couple,
    coupling_tree_state,
    injection_matrix,
    leaf,
    permutation_unitary,
    pqc_amplitude_oracle,
    random_su2,
    spin,
    swap_perm,
    symmetriser_dense,
    tree,
    triple,
    wigner_3jm,
    wigner_D_oracle,
)
from spinzx.errors import NotSU2
from spinzx.oracles import angular_momentum


# ---------------------------------------------------------------------------
# Independent Clebsch-Gordan construction: build coupled states by finding
# the highest-weight vector in each magnetisation sector (kernel of J+,
# orthogonal to higher-spin towers) and applying the lowering operator,
# with the Condon-Shortley sign fixed on the largest-m1 component.


def _jminus(twice_j):
    d = twice_j + 1
    M = np.zeros((d, d))
    for k in range(d - 1):
        m = Fraction(twice_j, 2) - k
        j = Fraction(twice_j, 2)
        M[k + 1, k] = math.sqrt(float(j * (j + 1) - m * (m - 1)))
    return M


def cg_table(twice_j1, twice_j2):
    """dict[(twice_j3, twice_m3)] -> vector in the (m1, m2) product basis."""
    d1, d2 = twice_j1 + 1, twice_j2 + 1
    Jm = np.kron(_jminus(twice_j1), np.eye(d2)) + np.kron(np.eye(d1),
                                                          _jminus(twice_j2))
    # magnetisation of product basis state i1*d2+i2
    tm = np.array([(twice_j1 - 2 * i1) + (twice_j2 - 2 * i2)
                   for i1 in range(d1) for i2 in range(d2)])
    table = {}
    for twice_j3 in range(twice_j1 + twice_j2, abs(twice_j1 - twice_j2) - 1,
                          -2):
        sector = np.flatnonzero(tm == twice_j3)
        basis = np.eye(d1 * d2)[:, sector]
        # project out towers coming from higher j3
        for (tj, tm3), v in table.items():
            if tm3 == twice_j3:
                basis = basis - np.outer(v, v @ basis)
        q, _ = np.linalg.qr(basis)
        # the orthogonal complement within the sector is one-dimensional
        norms = np.linalg.norm(basis, axis=0)
        top = basis[:, np.argmax(norms)]
        top = top / np.linalg.norm(top)
        # Condon-Shortley: the component with the largest m1 is positive
        lead = np.flatnonzero(np.abs(top) > 1e-12)[0]
        if top[lead] < 0:
            top = -top
        table[(twice_j3, twice_j3)] = top
        v = top
        for twice_m3 in range(twice_j3 - 2, -twice_j3 - 1, -2):
            v = Jm @ v
            v = v / np.linalg.norm(v)
            table[(twice_j3, twice_m3)] = v
    return table


def halves(max_twice):
    return [Fraction(t, 2) for t in range(max_twice + 1)]


@pytest.mark.parametrize("tj1,tj2",
                         [(t1, t2) for t1 in range(5) for t2 in range(t1 + 1)])
def test_clebsch_gordan_matches_ladder_construction(tj1, tj2):
    table = cg_table(tj1, tj2)
    d2 = tj2 + 1
    for (tj3, tm3), v in table.items():
        for i1 in range(tj1 + 1):
            for i2 in range(tj2 + 1):
                m1 = Fraction(tj1 - 2 * i1, 2)
                m2 = Fraction(tj2 - 2 * i2, 2)
                got = clebsch_gordan(Fraction(tj1, 2), m1, Fraction(tj2, 2),
                                     m2, Fraction(tj3, 2), Fraction(tm3, 2))
                assert got == pytest.approx(v[i1 * d2 + i2], abs=1e-12)


def test_threej_relates_to_clebsch_gordan():
    # (j1 j2 j3; m1 m2 -m3) = (-1)^(j1-j2+m3) / sqrt(2j3+1) * CG
    for tj1, tj2, tj3 in [(1, 1, 2), (2, 2, 2), (1, 2, 3), (2, 4, 4),
                          (3, 3, 4)]:
        t = triple(Fraction(tj1, 2), Fraction(tj2, 2), Fraction(tj3, 2))
        for tm1 in range(-tj1, tj1 + 1, 2):
            for tm2 in range(-tj2, tj2 + 1, 2):
                tm3 = tm1 + tm2
                if abs(tm3) > tj3:
                    continue
                cg = clebsch_gordan(Fraction(tj1, 2), Fraction(tm1, 2),
                                    Fraction(tj2, 2), Fraction(tm2, 2),
                                    Fraction(tj3, 2), Fraction(tm3, 2))
                sign = (-1.0) ** ((tj1 - tj2 + tm3) // 2)
                expect = sign * cg / math.sqrt(tj3 + 1)
                got = wigner_3jm(t, Fraction(tm1, 2), Fraction(tm2, 2),
                                 Fraction(-tm3, 2))
                assert got == pytest.approx(expect, abs=1e-12)


def test_threej_frozen_values():
    # (j j 0; m -m 0) = (-1)^(j-m)/sqrt(2j+1)
    assert wigner_3jm(triple("1/2", "1/2", 0), "1/2", "-1/2", 0) == \
        pytest.approx(1 / math.sqrt(2), abs=1e-12)
    assert wigner_3jm(triple(1, 1, 0), 1, -1, 0) == \
        pytest.approx(1 / math.sqrt(3), abs=1e-12)
    assert wigner_3jm(triple(1, 1, 2), 0, 0, 0) == \
        pytest.approx(math.sqrt(2.0 / 15.0), abs=1e-12)


def test_inadmissible_triple_and_magnetics():
    assert not triple("1/2", "1/2", "1/2").admissible()
    # violated triangle or magnetic selection rule -> 0
    assert clebsch_gordan("1/2", "1/2", "1/2", "1/2", 0, 0) == 0
    assert clebsch_gordan("1/2", "1/2", "1/2", "-1/2", 1, 1) == 0


def test_cg_unitarity():
    # rows of the full CG matrix for j1=j2=1 form an orthonormal basis
    vecs = []
    for tj3 in (4, 2, 0):
        for tm3 in range(tj3, -tj3 - 1, -2):
            v = np.array([
                clebsch_gordan(1, 1 - i1, 1, 1 - i2, Fraction(tj3, 2),
                               Fraction(tm3, 2))
                for i1 in range(3) for i2 in range(3)])
            vecs.append(v)
    V = np.array(vecs)
    np.testing.assert_allclose(V @ V.T, np.eye(9), atol=1e-12)


def test_symmetriser_dense_properties():
    for n in range(1, 5):
        S = symmetriser_dense(n)
        np.testing.assert_allclose(S @ S, S, atol=1e-12)
        np.testing.assert_allclose(S, S.conj().T, atol=1e-12)
        assert np.trace(S).real == pytest.approx(n + 1)
        for a in range(n):
            for b in range(a + 1, n):
                P = permutation_unitary(swap_perm(n, a, b), n)
                np.testing.assert_allclose(P @ S, S, atol=1e-12)


def test_permutation_unitary_homomorphism():
    rng = np.random.default_rng(0)
    for _ in range(10):
        p = list(rng.permutation(4))
        q = list(rng.permutation(4))
        pq = [p[q[i]] for i in range(4)]
        np.testing.assert_allclose(
            permutation_unitary(p, 4) @ permutation_unitary(q, 4),
            permutation_unitary(pq, 4), atol=1e-12)


def test_random_su2_and_wigner_D():
    rng = np.random.default_rng(5)
    u = random_su2(rng)
    np.testing.assert_allclose(u @ u.conj().T, np.eye(2), atol=1e-12)
    assert np.linalg.det(u) == pytest.approx(1, abs=1e-12)
    # spin-1/2 representation is the matrix itself
    np.testing.assert_allclose(wigner_D_oracle("1/2", u), u, atol=1e-12)
    # homomorphism at spin 1 and 3/2
    v = random_su2(rng)
    for j in (1, "3/2"):
        np.testing.assert_allclose(
            wigner_D_oracle(j, u @ v),
            wigner_D_oracle(j, u) @ wigner_D_oracle(j, v), atol=1e-9)
    np.testing.assert_allclose(wigner_D_oracle(2, np.eye(2)), np.eye(5),
                               atol=1e-12)


def test_wigner_D_rejects_non_su2():
    with pytest.raises(NotSU2):
        wigner_D_oracle(1, np.array([[2.0, 0], [0, 0.5]]))


def test_angular_momentum_algebra():
    for j in ("1/2", 1, "3/2"):
        ops = angular_momentum(j)
        Jp, Jm, Jz = ops["Jplus"], ops["Jminus"], ops["J3"]
        np.testing.assert_allclose(Jp @ Jm - Jm @ Jp, 2 * Jz, atol=1e-12)
        np.testing.assert_allclose(Jz @ Jp - Jp @ Jz, Jp, atol=1e-12)


def test_injection_matrix_is_isometry():
    for (j1, j2, j3) in [("1/2", "1/2", 1), (1, 1, 2), (1, "1/2", "3/2"),
                         (1, 1, 0)]:
        W = injection_matrix(j1, j2, j3)
        np.testing.assert_allclose(W.conj().T @ W, np.eye(spin(j3).dim),
                                   atol=1e-12)


def test_coupling_tree_state_normalised():
    h = "1/2"
    t = tree(couple(couple(leaf(h), leaf(h), 1), leaf(h), h), "1/2")
    psi = coupling_tree_state(t)
    assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)


def test_pqc_amplitude_oracle_value():
    h = "1/2"
    bra = tree(couple(couple(leaf(h), leaf(h), 1), leaf(h), h), "1/2")
    ket = tree(couple(couple(leaf(h), leaf(h), 0), leaf(h), h), "1/2")
    amp = pqc_amplitude_oracle(bra, ket, swap_perm(3, 1, 2))
    assert amp == pytest.approx(math.sqrt(3) / 2, abs=1e-12)
