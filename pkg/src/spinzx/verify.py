"""Named verification suites over the diagram constructors and rewrite rules.

Each suite returns a list of CheckResult records; suites are pure given the
seed and are shared between the command-line `verify` command and the test
suite.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .diagram import (
    adjoint,
    compose,
    compose_all,
    identity,
    matrix_box,
    tensor,
    tensor_all,
    wires_diagram,
    x_spider,
    z_spider,
    hadamard,
    dualiser,
)
from .evaluate import DEFAULT_CONFIG, EvalConfig, evaluate, evaluate_scalar
from .constructors import (
    binor_antisym,
    binor_cap,
    binor_cross,
    binor_cup,
    binor_trace,
    j1_diagram,
    j2_diagram,
    j3_diagram,
    ladder_diagram,
    symmetriser,
    three_j_state,
    wigner_diagram,
)
from .oracles import (
    SpinTriple,
    random_su2,
    symmetriser_dense,
    wigner_3jm,
    wigner_D_oracle,
)
from .rewrite import builtin_rules, certify_rule, partial_trace
from .spins import Spin, magnetic_range, spin


@dataclass(frozen=True)
class CheckResult:
    suite: str
    name: str
    residual: float
    tolerance: float

    @property
    def ok(self) -> bool:
        return self.residual <= self.tolerance

    def line(self) -> str:
        status = "PASS" if self.ok else "FAIL"
        return (
            f"[{status}] {self.suite}/{self.name}: "
            f"residual {self.residual:.3e} (tol {self.tolerance:.1e})"
        )


def _mat(D, cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    T = evaluate(D, cfg)
    di = int(np.prod(D.input_dims)) if D.n_in else 1
    do = int(np.prod(D.output_dims)) if D.n_out else 1
    return T.reshape(di, do).T


def _maxdiff(A, B) -> float:
    return float(np.max(np.abs(np.asarray(A) - np.asarray(B))))


# ---------------------------------------------------------------------------
# 3j suite


def admissible_triples(max_twice: int):
    """All admissible ordered (j1, j2, j3) with every 2j <= max_twice."""
    out = []
    for t1 in range(max_twice + 1):
        for t2 in range(max_twice + 1):
            for t3 in range(max_twice + 1):
                t = SpinTriple(Spin(t1), Spin(t2), Spin(t3))
                if t.admissible():
                    out.append(t)
    return out


def three_j_tensor(t: SpinTriple, builder=three_j_state,
                   cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Evaluate the 3j diagram into a full (d1, d2, d3) array.

    Legs of spin 0 are omitted from the diagram boundary; the length-1 axes
    are reinserted here.
    """
    T = evaluate(builder(t), cfg)
    dims = [t.j1.dim, t.j2.dim, t.j3.dim]
    return T.reshape(dims)


def three_j_oracle_tensor(t: SpinTriple) -> np.ndarray:
    O = np.zeros((t.j1.dim, t.j2.dim, t.j3.dim))
    for i1, m1 in enumerate(magnetic_range(t.j1)):
        for i2, m2 in enumerate(magnetic_range(t.j2)):
            for i3, m3 in enumerate(magnetic_range(t.j3)):
                if m1.twice_m + m2.twice_m + m3.twice_m == 0:
                    O[i1, i2, i3] = wigner_3jm(t, m1, m2, m3)
    return O


def threej_suite(max_twice: int = 4, tolerance: float = 1e-9,
                 cfg: EvalConfig = DEFAULT_CONFIG):
    checks = []
    triples = admissible_triples(max_twice)
    worst = 0.0
    for t in triples:
        worst = max(worst, _maxdiff(three_j_tensor(t, cfg=cfg),
                                    three_j_oracle_tensor(t)))
    checks.append(CheckResult(
        "threej", f"diagram-vs-closed-form ({len(triples)} triples, 2j<={max_twice})",
        worst, tolerance))

    # Symmetry phases on the evaluated tensors.
    even_worst = odd_worst = neg_worst = 0.0
    for t in triples:
        T = three_j_oracle_tensor(t)
        phase = (-1.0) ** (((t.j1.twice_j + t.j2.twice_j + t.j3.twice_j) // 2) % 2)
        # cyclic (even): (j2, j3, j1)
        Tc = three_j_oracle_tensor(SpinTriple(t.j2, t.j3, t.j1))
        even_worst = max(even_worst, _maxdiff(Tc, np.transpose(T, (1, 2, 0))))
        # transposition (odd): (j2, j1, j3)
        To = three_j_oracle_tensor(SpinTriple(t.j2, t.j1, t.j3))
        odd_worst = max(odd_worst, _maxdiff(To, phase * np.transpose(T, (1, 0, 2))))
        # negating every magnetic label reverses every axis.
        neg_worst = max(neg_worst, _maxdiff(T[::-1, ::-1, ::-1], phase * T))
    checks.append(CheckResult("threej", "even-permutation invariance", even_worst, tolerance))
    checks.append(CheckResult("threej", "odd-permutation phase", odd_worst, tolerance))
    checks.append(CheckResult("threej", "magnetic-negation phase", neg_worst, tolerance))
    return checks


# ---------------------------------------------------------------------------
# Symmetriser suite


def singlet_effect_vector() -> np.ndarray:
    return np.array([0, 1, -1, 0], dtype=complex)


def symmetriser_suite(max_n: int = 6, tolerance: float = 1e-9,
                      oracle_tolerance: float = 1e-12, seed: int = 42,
                      cfg: EvalConfig = DEFAULT_CONFIG):
    checks = []
    rng = np.random.default_rng(seed)
    mats = {n: _mat(symmetriser(n), cfg) for n in range(1, max_n + 1)}

    worst = max(_maxdiff(M @ M, M) for M in mats.values())
    checks.append(CheckResult("symmetriser", f"idempotence n<={max_n}", worst, tolerance))

    worst = max(_maxdiff(M.conj().T, M) for M in mats.values())
    checks.append(CheckResult("symmetriser", f"self-adjointness n<={max_n}", worst, tolerance))

    worst = 0.0
    for n, M in mats.items():
        for _ in range(20):
            u = random_su2(rng)
            U = u
            for _ in range(n - 1):
                U = np.kron(U, u)
            worst = max(worst, _maxdiff(U @ M, M @ U))
    checks.append(CheckResult(
        "symmetriser", "unitary invariance (20 random u per n)", worst, tolerance))

    worst = 0.0
    for n in range(2, max_n + 1):
        for k in range(1, n):
            stack = np.kron(mats[k], np.eye(2 ** (n - k))) @ mats[n]
            worst = max(worst, _maxdiff(stack, mats[n]))
    checks.append(CheckResult("symmetriser", "stacking absorption", worst, tolerance))

    worst = 0.0
    s = singlet_effect_vector()
    for n in range(2, max_n + 1):
        M = mats[n].reshape((2,) * (2 * n))
        capped = np.tensordot(s.reshape(2, 2), M, axes=([0, 1], [0, 1]))
        worst = max(worst, float(np.max(np.abs(capped))))
    checks.append(CheckResult("symmetriser", "singlet capping to zero", worst, tolerance))

    # Regression-pinned partial-trace constants (n+1)/n.
    worst = 0.0
    for n in range(2, max_n + 1):
        traced = _mat(partial_trace(symmetriser(n), n - 1, n - 1), cfg)
        expected = ((n + 1) / n) * mats[n - 1]
        worst = max(worst, _maxdiff(traced, expected))
    checks.append(CheckResult(
        "symmetriser", "looping constants (n+1)/n", worst, tolerance))

    worst = max(_maxdiff(mats[n], symmetriser_dense(n)) for n in mats)
    checks.append(CheckResult(
        "symmetriser", "equals permutation-average oracle", worst, oracle_tolerance))
    return checks


# ---------------------------------------------------------------------------
# Lie-algebra suite


def lie_suite(tolerance: float = 1e-9, seed: int = 42, n_pairs: int = 100,
              cfg: EvalConfig = DEFAULT_CONFIG):
    checks = []
    worst_comm = 0.0
    for tw in range(1, 7):  # j <= 3
        j = Spin(tw)
        Jp = _mat(ladder_diagram(j, "+"), cfg)
        Jm = _mat(ladder_diagram(j, "-"), cfg)
        J3 = _mat(j3_diagram(j), cfg)
        worst_comm = max(
            worst_comm,
            _maxdiff(J3 @ Jp - Jp @ J3, Jp),
            _maxdiff(J3 @ Jm - Jm @ J3, -Jm),
            _maxdiff(Jp @ Jm - Jm @ Jp, 2 * J3),
        )
    checks.append(CheckResult("lie", "ladder commutators j<=3", worst_comm, tolerance))

    worst = 0.0
    for tw in range(1, 9):  # j <= 4
        j = Spin(tw)
        ops = [_mat(j1_diagram(j), cfg), _mat(j2_diagram(j), cfg), _mat(j3_diagram(j), cfg)]
        cas = sum(O @ O for O in ops)
        jj = tw / 2.0
        worst = max(worst, _maxdiff(cas, jj * (jj + 1) * np.eye(j.dim)))
    checks.append(CheckResult("lie", "Casimir j(j+1) for j<=4", worst, tolerance))

    rng = np.random.default_rng(seed)
    pairs = [(random_su2(rng), random_su2(rng)) for _ in range(n_pairs)]
    worst_rep = worst_hom = 0.0
    for tw in range(1, 5):  # j <= 2
        j = Spin(tw)
        for u, v in pairs:
            Du = _mat(wigner_diagram(j, u), cfg)
            worst_rep = max(worst_rep, _maxdiff(Du, wigner_D_oracle(j, u)))
            Dv = wigner_D_oracle(j, v)
            worst_hom = max(worst_hom, _maxdiff(Du @ Dv, wigner_D_oracle(j, u @ v)))
    checks.append(CheckResult(
        "lie", f"representation matrices j<=2 ({n_pairs} pairs)", worst_rep, tolerance))
    checks.append(CheckResult(
        "lie", f"homomorphism j<=2 ({n_pairs} pairs)", worst_hom, tolerance))
    return checks


# ---------------------------------------------------------------------------
# Binor suite


def binor_suite(tolerance: float = 1e-12, cfg: EvalConfig = DEFAULT_CONFIG):
    checks = []
    loop = evaluate_scalar(binor_trace(identity(2)), cfg)
    checks.append(CheckResult("binor", "closed loop equals -2", abs(loop + 2.0), tolerance))

    cross = _mat(binor_cross(), cfg)
    capcup = _mat(compose(binor_cup(), binor_cap()), cfg)
    skein = cross + np.eye(4) + capcup
    checks.append(CheckResult(
        "binor", "skein relation", float(np.max(np.abs(skein))), tolerance))

    worst = 0.0
    for n in range(1, 4):  # 2j <= 3
        val = evaluate_scalar(binor_trace(binor_antisym(n)), cfg)
        expected = ((-1.0) ** n) * (n + 1)
        worst = max(worst, abs(val - expected))
    checks.append(CheckResult(
        "binor", "traced antisymmetriser (-1)^{2j}(2j+1)", worst, tolerance))
    return checks


# ---------------------------------------------------------------------------
# Rewrite-rule suite


def random_rule_diagram(rng):
    """Small random diagram over mixed dims for soundness sweeps (<= 8 wires)."""
    dims = [int(rng.integers(2, 4)) for _ in range(int(rng.integers(1, 4)))]
    D = wires_diagram(dims)
    for _ in range(int(rng.integers(1, 6))):
        i = int(rng.integers(0, len(dims)))
        d = dims[i]
        choice = int(rng.integers(0, 6))
        if choice == 0:
            params = tuple(rng.normal(size=d - 1) + 1j * rng.normal(size=d - 1))
            g = z_spider(1, 1, d, params=params)
        elif choice == 1:
            g = x_spider(1, 1, d, int(rng.integers(0, d)))
        elif choice == 2:
            g = hadamard(d)
        elif choice == 3:
            g = dualiser(d)
        elif choice == 4:
            g = z_spider(1, 1, d)
        else:
            g = x_spider(1, 1, d, 0)
        layer = [identity(dd) for dd in dims]
        layer[i] = g
        D = compose(D, tensor_all(layer))
    return D


def rules_suite(tolerance: float = 1e-9, seed: int = 42, n_random: int = 1000,
                cfg: EvalConfig = DEFAULT_CONFIG):
    checks = []
    rules = builtin_rules(cfg)
    worst_name, cert_fail = "", 0
    for name, rule in sorted(rules.items()):
        try:
            certify_rule(rule, cfg, seed=seed)
        except Exception:
            cert_fail += 1
            worst_name = name
    label = f"certification grid ({len(rules)} rules)"
    checks.append(CheckResult(
        "rules", label if not cert_fail else f"{label}: first failure {worst_name}",
        float(cert_fail), 0.5))

    rng = np.random.default_rng(seed)
    kinds = [rules[k] for k in sorted(rules)]
    applied, worst = 0, 0.0
    while applied < n_random:
        D = random_rule_diagram(rng)
        rule = kinds[int(rng.integers(0, len(kinds)))]
        sites = rule.find(D)
        if not sites:
            continue
        site = sites[int(rng.integers(0, len(sites)))]
        D2 = rule.apply(D, site)
        A, B = evaluate(D, cfg), evaluate(D2, cfg)
        scale = max(1.0, float(np.max(np.abs(A))) if A.size else 0.0)
        worst = max(worst, _maxdiff(A, B) / scale)
        applied += 1
    checks.append(CheckResult(
        "rules", f"{n_random} random rewrite applications", worst, tolerance))
    return checks


SUITES = {
    "rules": rules_suite,
    "symmetriser": symmetriser_suite,
    "threej": threej_suite,
    "lie": lie_suite,
    "binor": binor_suite,
}


def run_suite(name: str, **kwargs):
    if name == "all":
        out = []
        for key in ("rules", "symmetriser", "threej", "lie", "binor"):
            out.extend(SUITES[key](**kwargs))
        return out
    return SUITES[name](**kwargs)
