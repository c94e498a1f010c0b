"""Application pipelines: permutational amplitudes, AKLT chains, equivariant
ansatz gradients, and the quantised-volume eigenvalue.

Each pipeline is computed two ways -- by constructing and evaluating a
diagram, and by an independent dense-matrix oracle -- and the two routes are
compared at the configured tolerance.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .diagram import (
    Diagram,
    adjoint,
    compose,
    compose_all,
    cup,
    empty_diagram,
    identity,
    matrix_box,
    permutation_diagram,
    tensor,
    tensor_all,
    x_spider,
    z_spider,
)
from .errors import LeafCountMismatch, ValidationError, InadmissibleTree
from .evaluate import DEFAULT_CONFIG, EvalConfig, evaluate, evaluate_scalar
from .constructors import (
    HALF,
    controlled_pauli,
    dim_splitter,
    embed_isometry,
    magnetic_state,
    symmetriser,
    vertex_gate,
    wire_reverser,
)
from .oracles import (
    Couple,
    CouplingTree,
    Leaf,
    clebsch_gordan,
    permutation_unitary,
    pqc_amplitude_oracle,
    tree_leaves,
)
from .spins import Spin, magnetic_range, spin


# ---------------------------------------------------------------------------
# Shared small pieces


def _mat(D: Diagram, cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Matrix form of a diagram: rows = outputs, columns = inputs."""
    T = evaluate(D, cfg)
    di = int(np.prod(D.input_dims)) if D.n_in else 1
    do = int(np.prod(D.output_dims)) if D.n_out else 1
    return T.reshape(di, do).T


def singlet_state() -> Diagram:
    """0-in/2-out qubit state |01> - |10> (unnormalised singlet)."""
    return compose(cup(2), tensor(identity(2), wire_reverser(HALF)))


_PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
_PAULI_Y = np.array([[0, -1j], [1j, 0]], dtype=complex)
_PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)


# ---------------------------------------------------------------------------
# Permutational quantum computing


def strand_tree_diagram(node) -> Diagram:
    """Unnormalised coupling vertex tree in qubit-strand form.

    A spin-j edge is carried by 2j qubit strands passed through the
    symmetric-subspace projector.  At each coupling vertex with children of
    spins (j_l, j_r) and parent spin j, x = j_l + j_r - j singlet pairs
    bridge the two child bundles and the parent strands are routed to the
    children.  Inputs: 2j parent strands; outputs: one strand per leaf.
    """
    if isinstance(node, Leaf):
        if node.j.twice_j != 1:
            raise InadmissibleTree("strand trees require spin-1/2 leaves")
        return identity(2)
    a, b, tw = node.left.j.twice_j, node.right.j.twice_j, node.j.twice_j
    x = (a + b - tw) // 2
    pre = [identity(2, tw)] if tw else []
    pre += [singlet_state() for _ in range(x)]
    pre_d = tensor_all(pre) if pre else empty_diagram()
    targets = []
    for i in range(tw):
        targets.append(i if i < a - x else a + (i - (a - x)))
    for k in range(x):
        targets.append((a - x) + k)  # left leg of singlet k
        targets.append(a + (tw - (a - x)) + k)  # right leg
    route = permutation_diagram([2] * (tw + 2 * x), targets)
    syms = []
    if a:
        syms.append(symmetriser(a))
    if b:
        syms.append(symmetriser(b))
    sym_d = tensor_all(syms) if syms else empty_diagram()
    kids = tensor(strand_tree_diagram(node.left), strand_tree_diagram(node.right))
    return compose_all([pre_d, route, sym_d, kids])


def coupling_tree_diagram(t: CouplingTree) -> Diagram:
    """Unnormalised 0-in/n-out diagram of a coupling-tree basis state."""
    root = t.root
    j = root.j
    if j.twice_j == 0:
        seed = empty_diagram()
    elif j.twice_j == 1:
        seed = magnetic_state(j, t.m)
    else:
        seed = compose(magnetic_state(j, t.m), embed_isometry(j))
    body = strand_tree_diagram(root)
    return compose(seed, body) if j.twice_j else body


@dataclass(frozen=True)
class PqcReport:
    diagram_value: complex
    oracle_value: complex
    bra_norm_sq: float
    ket_norm_sq: float
    tolerance: float

    @property
    def agree(self) -> bool:
        return abs(self.diagram_value - self.oracle_value) <= self.tolerance

    @property
    def value(self) -> complex:
        return self.diagram_value


def _tree_norm_sq(T: Diagram, cfg: EvalConfig) -> float:
    return evaluate_scalar(compose(T, adjoint(T)), cfg).real


def pqc_amplitude(bra: CouplingTree, ket: CouplingTree, perm, mode="both",
                  cfg: EvalConfig = DEFAULT_CONFIG):
    """<bra| U_perm |ket> between coupling-tree basis states over qubits.

    Diagram mode closes the network of the two unnormalised tree states
    around the permutation and divides by the square root of the two
    diagrammatic norms; oracle mode contracts normalised Clebsch-Gordan
    isometries.  Both-mode returns a PqcReport asserting agreement.
    """
    bl, kl = tree_leaves(bra.root), tree_leaves(ket.root)
    if len(bl) != len(kl):
        raise LeafCountMismatch(f"{len(bl)} vs {len(kl)} leaves")
    if mode not in ("diagram", "oracle", "both"):
        raise ValidationError(f"mode must be diagram/oracle/both, got {mode!r}")
    if mode == "oracle":
        return pqc_amplitude_oracle(bra, ket, perm)
    n = len(bl)
    Tb = coupling_tree_diagram(bra)
    Tk = coupling_tree_diagram(ket)
    nb = _tree_norm_sq(Tb, cfg)
    nk = _tree_norm_sq(Tk, cfg)
    U = permutation_diagram([2] * n, list(perm))
    raw = evaluate_scalar(compose_all([Tk, U, adjoint(Tb)]), cfg)
    value = raw / math.sqrt(nb * nk)
    if mode == "diagram":
        return value
    oracle = pqc_amplitude_oracle(bra, ket, perm)
    report = PqcReport(value, oracle, nb, nk, cfg.tolerance)
    if not report.agree:
        raise AssertionError(
            f"diagram/oracle disagreement: {value} vs {oracle}"
        )
    return report


# ---------------------------------------------------------------------------
# AKLT chains


@dataclass(frozen=True)
class AKLTConfig:
    length: int
    boundary: str = "open"
    site_labels: tuple | None = None

    def __post_init__(self):
        if self.length < 2:
            raise ValidationError("AKLT chain needs at least 2 sites")
        if self.boundary != "open":
            raise ValidationError("only open boundary conditions are supported")
        if self.site_labels is not None:
            if len(self.site_labels) != self.length:
                raise ValidationError("site_labels length must equal chain length")
            if any(s not in (1, 0, -1) for s in self.site_labels):
                raise ValidationError("site labels must be +1, 0 or -1")


# Site matrices of the bond-dimension-2 matrix product form, indexed by the
# physical label m = +1, 0, -1.
AKLT_MPS_MATRICES = {
    1: math.sqrt(2.0 / 3.0) * np.array([[0, 0], [1, 0]], dtype=complex),
    0: (1.0 / math.sqrt(3.0)) * np.array([[1, 0], [0, -1]], dtype=complex),
    -1: math.sqrt(2.0 / 3.0) * np.array([[0, -1], [0, 0]], dtype=complex),
}


def _site_projector() -> Diagram:
    """Two virtual qubits projected onto their spin-1 part (2-in/1-out)."""
    return adjoint(embed_isometry(1))


def aklt_site() -> Diagram:
    """Single site with the edge gauge applied: equals the standard
    matrix-product site matrices up to one global factor.

    The X/Z pair on the virtual legs is the same boundary gauge the chain
    applies at its two open ends.
    """
    gauge = tensor(x_spider(1, 1, 2, 1), z_spider(1, 1, 2, params=(-1.0,)))
    return compose(gauge, _site_projector())


def aklt_chain(cfg: AKLTConfig) -> Diagram:
    """Chain diagram: 2 input edge qubits, N output spin-1 wires.

    Virtual qubits of neighbouring sites are joined by singlets; the
    outermost virtual qubit on each end is exposed as an input wire, behind
    a fixed X (left) / Z (right) gauge that aligns the evaluated tensor
    with the matrix-product oracle up to one global factor.
    """
    N = cfg.length
    pre = tensor_all(
        [x_spider(1, 1, 2, 1)]
        + [singlet_state() for _ in range(N - 1)]
        + [z_spider(1, 1, 2, params=(-1.0,))]
    )
    sites = tensor_all([_site_projector()] * N)
    return compose(pre, sites)


def aklt_mps_oracle(cfg: AKLTConfig) -> np.ndarray:
    """Dense tensor T[alpha, j1..jN, beta] of the matrix-product form."""
    N = cfg.length
    T = np.zeros((2,) + (3,) * N + (2,), dtype=complex)
    labels = [1, 0, -1]  # physical index order: m = +1, 0, -1
    for idx in np.ndindex(*(3,) * N):
        M = np.eye(2, dtype=complex)
        for i in idx:
            M = M @ AKLT_MPS_MATRICES[labels[i]]
        T[(slice(None),) + idx + (slice(None),)] = M
    return T


def aklt_state_tensor(cfg: AKLTConfig, cfg_eval: EvalConfig = DEFAULT_CONFIG):
    """Evaluate the chain diagram into T[alpha, j1..jN, beta]."""
    D = aklt_chain(cfg)
    T = evaluate(D, cfg_eval)  # axes: in qL, in qR, out j1..jN
    return np.moveaxis(T, 1, -1)


def spin2_projector() -> np.ndarray:
    """Projector of two spin-1 sites onto total spin 2 (9 x 9)."""
    P = np.zeros((9, 9), dtype=complex)
    two = spin(2)
    one = spin(1)
    for m in magnetic_range(two):
        v = np.zeros(9, dtype=complex)
        for i1, m1 in enumerate(magnetic_range(one)):
            for i2, m2 in enumerate(magnetic_range(one)):
                v[i1 * 3 + i2] = clebsch_gordan(one, m1, one, m2, two, m)
        P += np.outer(v, v.conj())
    return P


def aklt_ground_check(cfg: AKLTConfig, cfg_eval: EvalConfig = DEFAULT_CONFIG) -> float:
    """Max norm of the spin-2 projector applied to any neighbouring pair.

    Edge qubits are kept as free tensor axes, so the bound holds for every
    boundary state simultaneously.  The expected value is 0.
    """
    T = aklt_state_tensor(cfg, cfg_eval)
    N = cfg.length
    P = spin2_projector()
    worst = 0.0
    for k in range(N - 1):
        # physical axes k+1, k+2 of T (axis 0 is the left edge)
        M = np.tensordot(
            P.reshape(3, 3, 3, 3), T, axes=([2, 3], [k + 1, k + 2])
        )
        worst = max(worst, float(np.linalg.norm(M)))
    return worst


def aklt_config_amplitude(cfg: AKLTConfig, edge_states=None, normalised=True,
                          cfg_eval: EvalConfig = DEFAULT_CONFIG) -> complex:
    """Overlap of the chain with a product of |1;m> site states.

    Edge qubits are contracted with the uniform vector (1, 1) on each end
    unless edge_states supplies two length-2 vectors; this default keeps
    every allowed antiferromagnetic configuration visible while forbidden
    ones vanish for any edge choice.  With normalised=True the result is
    divided by the norm of the edge-contracted chain state.
    """
    if cfg.site_labels is None:
        raise ValidationError("aklt_config_amplitude needs site_labels")
    T = aklt_state_tensor(cfg, cfg_eval)
    if edge_states is None:
        eL = eR = np.array([1.0, 1.0], dtype=complex)
    else:
        eL, eR = (np.asarray(e, dtype=complex) for e in edge_states)
    state = np.tensordot(np.tensordot(eL, T, axes=([0], [0])), eR,
                         axes=([-1], [0]))
    idx = tuple(1 - s for s in cfg.site_labels)  # m=+1 -> 0, 0 -> 1, -1 -> 2
    value = complex(state[idx])
    if normalised:
        value /= float(np.linalg.norm(state))
    return value


def aklt_hamiltonian_identity_residual() -> float:
    """Residual of the bond identity S.S + (S.S)^2/3 = 2(P2 - 1/3)."""
    from .oracles import angular_momentum

    ops = angular_momentum(1)
    I3 = np.eye(3)
    SS = sum(
        np.kron(ops[k], I3) @ np.kron(I3, ops[k]) for k in ("J1", "J2", "J3")
    )
    lhs = SS + (SS @ SS) / 3.0
    rhs = 2.0 * (spin2_projector() - np.eye(9) / 3.0)
    return float(np.max(np.abs(lhs - rhs)))


# ---------------------------------------------------------------------------
# Equivariant ansatz expectations and gradient variance


@dataclass(frozen=True)
class AnsatzSpec:
    n_qubits: int
    layers: int
    theta: tuple = ()

    def __post_init__(self):
        if self.n_qubits < 2 or self.n_qubits % 2 != 0:
            raise ValidationError("n_qubits must be even and >= 2")
        if self.layers < 0:
            raise ValidationError("layers must be non-negative")
        if self.theta and len(self.theta) != self.gate_count:
            raise ValidationError(
                f"theta has {len(self.theta)} entries, tiling needs {self.gate_count}"
            )

    @property
    def gate_count(self) -> int:
        n = self.n_qubits
        full, half = n // 2, (n - 1) // 2
        return sum(full if layer % 2 == 0 else half for layer in range(self.layers))

    def gate_positions(self):
        """(qubit, qubit+1) pairs of the brick-wall tiling, in theta order."""
        out = []
        for layer in range(self.layers):
            start = 0 if layer % 2 == 0 else 1
            out.extend((i, i + 1) for i in range(start, self.n_qubits - 1, 2))
        return out


def _apply_two_qubit(state: np.ndarray, gate: np.ndarray, pos: int) -> np.ndarray:
    n = state.ndim
    T = np.tensordot(gate.reshape(2, 2, 2, 2), state, axes=([2, 3], [pos, pos + 1]))
    return np.moveaxis(T, (0, 1), (pos, pos + 1))


def singlet_product_state(n: int) -> np.ndarray:
    """Normalised product of singlets on qubit pairs (0,1), (2,3), ..."""
    s = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)
    psi = s.reshape(2, 2)
    for _ in range(n // 2 - 1):
        psi = np.tensordot(psi, s.reshape(2, 2), axes=0)
    return psi


_VERTEX_SINGLET_PROJ = None


def _vertex_matrix_fast(theta: float) -> np.ndarray:
    """V(theta) from the singlet projector extracted once from the diagram.

    V(theta) = I - P0 + e^{i theta} P0, where P0 = (I - V(pi)) / 2 is read
    off two diagram evaluations.  Agreement with evaluate(vertex_gate)
    elementwise is part of the verification suite.
    """
    global _VERTEX_SINGLET_PROJ
    if _VERTEX_SINGLET_PROJ is None:
        Vpi = _mat(vertex_gate(math.pi))
        _VERTEX_SINGLET_PROJ = (np.eye(4) - Vpi) / 2.0
    P0 = _VERTEX_SINGLET_PROJ
    return np.eye(4) + (np.exp(1j * theta) - 1.0) * P0


def qml_expectation(spec: AnsatzSpec, perm, theta=None, fast=False,
                    cfg: EvalConfig = DEFAULT_CONFIG) -> float:
    """<psi| W(theta) U_perm W(theta)^dag |psi> with psi a singlet product.

    By default each gate matrix comes from evaluating the vertex-gate
    diagram; fast=True uses the cached singlet-projector form instead.
    """
    thetas = tuple(spec.theta if theta is None else theta)
    if len(thetas) != spec.gate_count:
        raise ValidationError(
            f"need {spec.gate_count} angles, got {len(thetas)}"
        )
    n = spec.n_qubits
    if sorted(perm) != list(range(n)):
        raise ValidationError(f"perm {perm} is not a permutation of {n} qubits")
    psi = singlet_product_state(n)
    chi = psi
    # chi = W^dag psi: adjoint gates in reverse tiling order.
    positions = spec.gate_positions()
    for th, pos in reversed(list(zip(thetas, positions))):
        gate = _vertex_matrix_fast(th) if fast else _mat(vertex_gate(th), cfg)
        chi = _apply_two_qubit(chi, gate.conj().T, pos[0])
    # U_perm chi: factor i moves to slot perm[i], i.e. axis perm[i] <- axis i.
    inv = [0] * n
    for i, t in enumerate(perm):
        inv[t] = i
    s_chi = np.transpose(chi, inv)
    return float(np.real(np.vdot(chi, s_chi)))


def qml_gradient(spec: AnsatzSpec, perm, theta, index: int, step: float = 1e-5,
                 fast=True) -> float:
    """Central finite difference of the expectation in one parameter."""
    theta = list(theta)
    up, dn = list(theta), list(theta)
    up[index] += step
    dn[index] -= step
    return (
        qml_expectation(spec, perm, up, fast=fast)
        - qml_expectation(spec, perm, dn, fast=fast)
    ) / (2 * step)


@dataclass(frozen=True)
class GradVarianceReport:
    estimate: float
    std_error: float
    n_samples: int
    seed: int
    mean_gradient: float


def qml_grad_variance(spec: AnsatzSpec, perm, theta_index: int,
                      n_samples: int, seed: int) -> GradVarianceReport:
    """Monte-Carlo variance of one gradient component over uniform angles.

    Angles are drawn uniformly from [0, 2 pi)^m; the standard error of the
    variance estimate uses the fourth-moment formula.
    """
    if n_samples < 2:
        raise ValidationError("need at least 2 samples")
    rng = np.random.default_rng(seed)
    m = spec.gate_count
    grads = np.empty(n_samples)
    for s in range(n_samples):
        theta = rng.uniform(0.0, 2 * math.pi, size=m)
        grads[s] = qml_gradient(spec, perm, theta, theta_index)
    var = float(np.var(grads, ddof=1))
    centred = grads - grads.mean()
    n = n_samples
    m4 = float(np.mean(centred**4))
    se = math.sqrt(max(m4 - (n - 3) / (n - 1) * var**2, 0.0) / n)
    return GradVarianceReport(var, se, n_samples, seed, float(grads.mean()))


# ---------------------------------------------------------------------------
# Quantised volume


def _levi_civita(i: int, j: int, k: int) -> int:
    return {
        (1, 2, 3): 1, (2, 3, 1): 1, (3, 1, 2): 1,
        (1, 3, 2): -1, (3, 2, 1): -1, (2, 1, 3): -1,
    }.get((i, j, k), 0)


def lqg_vtilde2_oracle() -> np.ndarray:
    """(i/8) sum_{ijk} eps_{ijk} sigma_i (x) sigma_j (x) sigma_k."""
    paulis = {1: _PAULI_X, 2: _PAULI_Y, 3: _PAULI_Z}
    out = np.zeros((8, 8), dtype=complex)
    for i, j, k in itertools.permutations((1, 2, 3)):
        out += _levi_civita(i, j, k) * np.kron(
            np.kron(paulis[i], paulis[j]), paulis[k]
        )
    return (1j / 8.0) * out


def _pauli_select_block() -> Diagram:
    """Selected Pauli on one target: control dim-4 wire picks Z^a X^b.

    The control splits into qubits (a, b); a controlled X (control b) then a
    controlled Z (control a) act on the target, and both control qubits are
    consumed by all-ones effects so control amplitudes become coefficients.
    """
    spl = tensor(dim_splitter(2, 2), identity(2))
    cx = tensor(identity(2), controlled_pauli("x"))
    flip = permutation_diagram([2, 2, 2], [1, 0, 2])
    cz = tensor(identity(2), controlled_pauli("z"))
    discard = tensor_all([z_spider(1, 0, 2), z_spider(1, 0, 2), identity(2)])
    return compose_all([spl, cx, flip, cz, discard])


def lqg_vtilde2() -> Diagram:
    """3-qubit diagram of the volume-squared core element.

    A coefficient state over three dim-4 wires carries the Levi-Civita signs
    in the basis I, X, Z, ZX (sigma_y = -i ZX absorbs the overall i); each
    wire drives a selected-Pauli block on one target qubit.
    """
    pmap = {1: 1, 2: 3, 3: 2}  # pauli index -> Z^a X^b code 2a+b
    core = np.zeros((4, 4, 4), dtype=complex)
    for i, j, k in itertools.permutations((1, 2, 3)):
        core[pmap[i], pmap[j], pmap[k]] = _levi_civita(i, j, k) / 8.0
    core_box = matrix_box(core.reshape(64, 1), [], [4, 4, 4])
    interleave = permutation_diagram([4, 4, 4, 2, 2, 2], [0, 2, 4, 1, 3, 5])
    blocks = tensor_all([_pauli_select_block()] * 3)
    return compose_all([tensor(core_box, identity(2, 3)), interleave, blocks])


def lqg_intertwiner_state() -> np.ndarray:
    """The minimal-volume 4-qubit state, from its 4 x 4 matrix form.

    Matrix rows index the first qubit pair and columns the second, both
    row-major; the state is sum_ab M[a,b] |a>|b>.
    """
    w = np.exp(1j * math.pi / 3)
    M = (1j / math.sqrt(3)) * np.array(
        [
            [0, 0, 0, 1],
            [0, -w, w**2, 0],
            [0, w**2, -w, 0],
            [1, 0, 0, 0],
        ],
        dtype=complex,
    )
    return M.reshape(16)


@dataclass(frozen=True)
class MinVolumeReport:
    eigenvalue: complex
    residual: float

    @property
    def modulus(self) -> float:
        return abs(self.eigenvalue)

    @property
    def hermitian_part_eigenvalue(self) -> float:
        """Eigenvalue in the Hermitian epsilon-sum convention (divide by i)."""
        return float((self.eigenvalue / 1j).real)


def lqg_min_volume_check(cfg: EvalConfig = DEFAULT_CONFIG) -> MinVolumeReport:
    """Least-squares eigenvalue of I (x) Vtilde^2 on the minimal state."""
    psi = lqg_intertwiner_state()
    V = _mat(lqg_vtilde2(), cfg)
    A = np.kron(np.eye(2, dtype=complex), V)
    Ap = A @ psi
    lam = complex(np.vdot(psi, Ap) / np.vdot(psi, psi))
    res = float(np.linalg.norm(Ap - lam * psi) / np.linalg.norm(psi))
    return MinVolumeReport(lam, res)


@dataclass(frozen=True)
class LQGConstants:
    gamma: float = 1.0
    hbar_G_over_c3: float = 1.0

    def __post_init__(self):
        if self.gamma <= 0 or self.hbar_G_over_c3 <= 0:
            raise ValidationError("LQG constants must be positive")


def area_eigenvalue(j, constants: LQGConstants | None = None,
                    dimensionless: bool = False) -> float:
    """Area eigenvalue 8 pi gamma (hbar G / c^3) sqrt(j (j + 1))."""
    j = spin(j)
    jj = j.twice_j / 2.0
    root = math.sqrt(jj * (jj + 1.0))
    if dimensionless:
        return root
    c = constants or LQGConstants()
    return 8.0 * math.pi * c.gamma * c.hbar_G_over_c3 * root
