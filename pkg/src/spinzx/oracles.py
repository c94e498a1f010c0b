"""Closed-form SU(2) computations, independent of the diagram evaluator.

These are the oracles every diagrammatic construction is checked against:
Wigner 3jm symbols and Clebsch-Gordan coefficients from the alternating
factorial sum, symmetrisers from explicit permutation averages, ladder
operators from the magnetic-basis action, and Wigner D matrices from the
closed-form entry sum.

All factorial arithmetic runs in log space with separate sign tracking;
basis ordering everywhere is index 0 <-> m = +j, descending to m = -j.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from itertools import permutations

import numpy as np

from .errors import (
    InadmissibleTree,
    InadmissibleTriple,
    InvalidPermutation,
    LeafCountMismatch,
    NotSU2,
    SizeExceeded,
)
from .spins import Magnetic, Spin, check_magnetic, magnetic, magnetic_index, magnetic_range, spin

PERMUTATION_CAP = 8
SPIN_MATRIX_CAP = 17  # twice_j cap for dense spin matrices (j <= 8)


def ln_factorial(n: int) -> float:
    if n < 0:
        raise ValueError(f"ln_factorial of negative {n}")
    return math.lgamma(n + 1)


def sqrt_factorial_ratio(numerators, denominators) -> float:
    """sqrt(prod(n_i!) / prod(d_i!)) via log-gamma."""
    ln = sum(ln_factorial(n) for n in numerators) - sum(
        ln_factorial(d) for d in denominators
    )
    return math.exp(0.5 * ln)


@dataclass(frozen=True)
class SpinTriple:
    j1: Spin
    j2: Spin
    j3: Spin

    def admissible(self) -> bool:
        t1, t2, t3 = self.j1.twice_j, self.j2.twice_j, self.j3.twice_j
        return (t1 + t2 + t3) % 2 == 0 and abs(t1 - t2) <= t3 <= t1 + t2

    def require_admissible(self) -> None:
        if not self.admissible():
            raise InadmissibleTriple(f"({self.j1}, {self.j2}, {self.j3})")


def triple(j1, j2, j3) -> SpinTriple:
    return SpinTriple(spin(j1), spin(j2), spin(j3))


def triangle_ok(t: SpinTriple) -> bool:
    return t.admissible()


def wigner_3jm(t: SpinTriple, m1, m2, m3) -> float:
    """Wigner 3jm symbol by the alternating factorial sum; total function."""
    m1, m2, m3 = magnetic(m1), magnetic(m2), magnetic(m3)
    for j, m in zip((t.j1, t.j2, t.j3), (m1, m2, m3)):
        check_magnetic(j, m)
    if not t.admissible():
        return 0.0
    if m1.twice_m + m2.twice_m + m3.twice_m != 0:
        return 0.0
    t1, t2, t3 = t.j1.twice_j, t.j2.twice_j, t.j3.twice_j
    u1, u2, u3 = m1.twice_m, m2.twice_m, m3.twice_m
    # All of these are integers when the triple is admissible.
    x12 = (t1 + t2 - t3) // 2
    x13 = (t1 + t3 - t2) // 2
    x23 = (t2 + t3 - t1) // 2
    jm = [(t1 - u1) // 2, (t1 + u1) // 2, (t2 - u2) // 2, (t2 + u2) // 2,
          (t3 - u3) // 2, (t3 + u3) // 2]
    pref = sqrt_factorial_ratio([x12, x13, x23] + jm, [(t1 + t2 + t3) // 2 + 1])
    k_lo = max(0, (t2 - t3 - u1) // 2, (t1 - t3 + u2) // 2)
    k_hi = min((t1 - u1) // 2, (t2 + u2) // 2, x12)
    total = 0.0
    for k in range(k_lo, k_hi + 1):
        denom = (
            ln_factorial(k)
            + ln_factorial(x12 - k)
            + ln_factorial((t1 - u1) // 2 - k)
            + ln_factorial((t3 - t2 + u1) // 2 + k)
            + ln_factorial((t3 - t1 - u2) // 2 + k)
            + ln_factorial((t2 + u2) // 2 - k)
        )
        total += (-1.0) ** k * math.exp(-denom)
    phase_exp = (t1 - t2 - u3) // 2
    return (-1.0) ** (phase_exp % 2) * pref * total


def clebsch_gordan(j1, m1, j2, m2, j3, m3) -> float:
    """<j1 m1, j2 m2 | j3 m3> via the 3jm phase-and-scale relation."""
    j1, j2, j3 = spin(j1), spin(j2), spin(j3)
    m1, m2, m3 = magnetic(m1), magnetic(m2), magnetic(m3)
    for j, m in zip((j1, j2, j3), (m1, m2, m3)):
        check_magnetic(j, m)
    if m1.twice_m + m2.twice_m != m3.twice_m:
        return 0.0
    t = SpinTriple(j1, j2, j3)
    if not t.admissible():
        return 0.0
    phase_exp = (-j1.twice_j + j2.twice_j - m3.twice_m) // 2
    return (
        (-1.0) ** (phase_exp % 2)
        * math.sqrt(j3.twice_j + 1)
        * wigner_3jm(t, m1, m2, Magnetic(-m3.twice_m))
    )


def normalisation_N(t: SpinTriple) -> float:
    """The 3j-state normalisation N(j1,j2,j3) (positive real)."""
    t.require_admissible()
    t1, t2, t3 = t.j1.twice_j, t.j2.twice_j, t.j3.twice_j
    inv = sqrt_factorial_ratio(
        [t1, t2, t3],
        [(t1 + t2 + t3) // 2 + 1, (t2 + t3 - t1) // 2, (t1 + t3 - t2) // 2,
         (t1 + t2 - t3) // 2],
    )
    return 1.0 / inv


# ---------------------------------------------------------------------------
# Permutations and symmetrisers


def permutation_unitary(perm, n: int) -> np.ndarray:
    """2^n x 2^n unitary sending qubit factor i to slot perm[i]."""
    perm = tuple(perm)
    if sorted(perm) != list(range(n)):
        raise InvalidPermutation(f"{perm} is not a permutation of range({n})")
    if n > PERMUTATION_CAP + 2:
        raise SizeExceeded(f"n={n} exceeds permutation cap")
    U = np.zeros((2**n, 2**n), dtype=complex)
    for b in range(2**n):
        bits = [(b >> (n - 1 - i)) & 1 for i in range(n)]
        target = [0] * n
        for i, bit in enumerate(bits):
            target[perm[i]] = bit
        y = 0
        for bit in target:
            y = (y << 1) | bit
        U[y, b] = 1
    return U


def swap_perm(n: int, a: int, b: int):
    """Transposition of slots a and b (0-based) as a permutation tuple."""
    perm = list(range(n))
    perm[a], perm[b] = perm[b], perm[a]
    return tuple(perm)


def symmetriser_dense(n: int) -> np.ndarray:
    """(1/n!) sum of all qubit permutation unitaries."""
    if n > PERMUTATION_CAP:
        raise SizeExceeded(f"n={n} exceeds symmetriser cap {PERMUTATION_CAP}")
    S = np.zeros((2**n, 2**n), dtype=complex)
    for perm in permutations(range(n)):
        S += permutation_unitary(perm, n)
    return S / math.factorial(n)


# ---------------------------------------------------------------------------
# Angular momentum


def angular_momentum(j) -> dict:
    """Spin-j matrices in the descending-m basis: J1, J2, J3, Jplus, Jminus."""
    j = spin(j)
    if j.twice_j > SPIN_MATRIX_CAP:
        raise SizeExceeded(f"2j={j.twice_j} exceeds cap {SPIN_MATRIX_CAP}")
    d = j.dim
    Jp = np.zeros((d, d), dtype=complex)
    J3 = np.zeros((d, d), dtype=complex)
    for i, m in enumerate(magnetic_range(j)):
        J3[i, i] = m.twice_m / 2.0
        if i >= 1:
            # J+ |j;m> = sqrt((j-m)(j+m+1)) |j;m+1>, index i -> i-1
            jm = (j.twice_j - m.twice_m) // 2
            jp1 = (j.twice_j + m.twice_m) // 2 + 1
            Jp[i - 1, i] = math.sqrt(jm * jp1)
    Jm = Jp.conj().T
    return {
        "J1": (Jp + Jm) / 2,
        "J2": (Jp - Jm) / 2j,
        "J3": J3,
        "Jplus": Jp,
        "Jminus": Jm,
    }


def check_su2(u, tol: float = 1e-9) -> np.ndarray:
    u = np.asarray(u, dtype=complex)
    if u.shape != (2, 2):
        raise NotSU2(f"shape {u.shape}")
    if np.max(np.abs(u @ u.conj().T - np.eye(2))) > tol:
        raise NotSU2("not unitary")
    det = u[0, 0] * u[1, 1] - u[0, 1] * u[1, 0]
    if abs(det - 1) > tol:
        raise NotSU2(f"determinant {det} != 1")
    return u


def random_su2(rng) -> np.ndarray:
    """Haar-ish random SU(2) element from a random unit quaternion."""
    q = rng.normal(size=4)
    q /= np.linalg.norm(q)
    a = complex(q[0], q[1])
    b = complex(q[2], q[3])
    return np.array([[a, b], [-b.conjugate(), a.conjugate()]])


def wigner_D_oracle(j, u, tol: float = 1e-9) -> np.ndarray:
    """D^j(u) by the closed-form entry sum, descending-m basis."""
    j = spin(j)
    u = check_su2(u, tol)
    a, b = u[0, 0], u[0, 1]
    c, d = u[1, 0], u[1, 1]
    tj = j.twice_j
    D = np.zeros((j.dim, j.dim), dtype=complex)
    for r, mm in enumerate(magnetic_range(j)):
        for s, nn in enumerate(magnetic_range(j)):
            tm, tn = mm.twice_m, nn.twice_m
            pref = sqrt_factorial_ratio(
                [(tj - tm) // 2, (tj + tm) // 2, (tj - tn) // 2, (tj + tn) // 2], []
            )
            total = 0j
            for k in range(0, tj + 1):
                e_a = (tj + tn) // 2 - k
                e_b = (tm - tn) // 2 + k
                e_c = k
                e_d = (tj - tm) // 2 - k
                if min(e_a, e_b, e_c, e_d) < 0:
                    continue
                denom = (
                    ln_factorial(k) + ln_factorial(e_d) + ln_factorial(e_a)
                    + ln_factorial(e_b)
                )
                total += (
                    math.exp(-denom) * a**e_a * b**e_b * c**e_c * d**e_d
                )
            D[r, s] = pref * total
    return D


# ---------------------------------------------------------------------------
# Coupling trees


@dataclass(frozen=True)
class Leaf:
    j: Spin


@dataclass(frozen=True)
class Couple:
    left: object
    right: object
    j: Spin


@dataclass(frozen=True)
class CouplingTree:
    root: object  # Leaf or Couple
    m: Magnetic

    def __post_init__(self):
        check_magnetic(self.root.j, self.m)


def leaf(j) -> Leaf:
    return Leaf(spin(j))


def couple(left, right, j) -> Couple:
    node = Couple(left, right, spin(j))
    if not SpinTriple(left.j, right.j, node.j).admissible():
        raise InadmissibleTree(
            f"cannot couple {left.j} x {right.j} -> {node.j}"
        )
    return node


def tree(root, m) -> CouplingTree:
    return CouplingTree(root, magnetic(m))


def tree_leaves(node):
    if isinstance(node, Leaf):
        return [node.j]
    return tree_leaves(node.left) + tree_leaves(node.right)


def injection_matrix(j1, j2, j3) -> np.ndarray:
    """CG isometry H_{j3} -> H_{j1} (x) H_{j2}; rows (m1,m2) row-major."""
    j1, j2, j3 = spin(j1), spin(j2), spin(j3)
    SpinTriple(j1, j2, j3).require_admissible()
    M = np.zeros((j1.dim * j2.dim, j3.dim))
    for i1, m1 in enumerate(magnetic_range(j1)):
        for i2, m2 in enumerate(magnetic_range(j2)):
            for i3, m3 in enumerate(magnetic_range(j3)):
                M[i1 * j2.dim + i2, i3] = clebsch_gordan(j1, m1, j2, m2, j3, m3)
    return M


def _tree_isometry(node) -> np.ndarray:
    if isinstance(node, Leaf):
        return np.eye(node.j.dim)
    L = _tree_isometry(node.left)
    R = _tree_isometry(node.right)
    return np.kron(L, R) @ injection_matrix(node.left.j, node.right.j, node.j)


def coupling_tree_state(t: CouplingTree) -> np.ndarray:
    """Normalized statevector of the tree in the leaf product space."""
    V = _tree_isometry(t.root)
    return V[:, magnetic_index(t.root.j, t.m)].astype(complex)


def pqc_amplitude_oracle(bra: CouplingTree, ket: CouplingTree, perm) -> complex:
    """<bra| U_perm |ket> on normalized coupling-tree states (spin-1/2 leaves)."""
    bl, kl = tree_leaves(bra.root), tree_leaves(ket.root)
    if len(bl) != len(kl):
        raise LeafCountMismatch(f"{len(bl)} vs {len(kl)} leaves")
    if any(j.twice_j != 1 for j in bl + kl):
        raise InadmissibleTree("permutation amplitudes need spin-1/2 leaves")
    n = len(bl)
    U = permutation_unitary(perm, n)
    vb = coupling_tree_state(bra)
    vk = coupling_tree_state(ket)
    return complex(vb.conj() @ U @ vk)
