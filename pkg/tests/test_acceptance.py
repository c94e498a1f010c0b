"""Acceptance gate: one test (one pass/fail line under pytest -v) per
headline criterion, each at its stated tolerance and time budget."""

import math
import time

import numpy as np
import pytest

from spinzx import (
    couple,
    evaluate,
    leaf,
    swap_perm,
    tree,
    vertex_gate,
)
from spinzx.apps import (
    AKLTConfig,
    AnsatzSpec,
    aklt_config_amplitude,
    aklt_ground_check,
    aklt_mps_oracle,
    aklt_state_tensor,
    lqg_min_volume_check,
    pqc_amplitude,
    qml_gradient,
    qml_grad_variance,
)
from spinzx.evaluate import proportional
from spinzx.oracles import injection_matrix, random_su2
from spinzx.verify import (
    binor_suite,
    lie_suite,
    rules_suite,
    symmetriser_suite,
    threej_suite,
)

H = "1/2"


def _timed(budget):
    start = time.perf_counter()

    def check():
        elapsed = time.perf_counter() - start
        assert elapsed < budget, f"took {elapsed:.2f}s, budget {budget}s"

    return check


def _all_ok(checks):
    bad = [c.line() for c in checks if not c.ok]
    assert not bad, "failed checks:\n" + "\n".join(bad)


def test_criterion_1_pqc_amplitude_both_routes():
    done = _timed(1.0)
    bra = tree(couple(couple(leaf(H), leaf(H), 1), leaf(H), H), H)
    ket = tree(couple(couple(leaf(H), leaf(H), 0), leaf(H), H), H)
    report = pqc_amplitude(bra, ket, swap_perm(3, 1, 2))
    assert abs(report.diagram_value - report.oracle_value) <= 1e-9
    assert abs(report.diagram_value - 0.8660254038) <= 1e-9
    assert abs(report.bra_norm_sq - 1.5) <= 1e-9
    assert abs(report.ket_norm_sq - 2.0) <= 1e-9
    done()


def test_criterion_2_lqg_minimal_volume():
    done = _timed(1.0)
    report = lqg_min_volume_check()
    assert report.residual <= 1e-9
    assert abs(report.modulus - math.sqrt(3) / 4) <= 1e-9
    # documented unit phase: the raw fit gives -i sqrt(3)/4; dividing out
    # the i of the antisymmetrised operator recovers the real target
    assert abs(report.hermitian_part_eigenvalue + math.sqrt(3) / 4) <= 1e-9
    done()


def test_criterion_3_threej_grand_cross_check():
    done = _timed(60.0)
    _all_ok(threej_suite(max_twice=4, tolerance=1e-9))
    done()


def test_criterion_4_symmetriser_suite():
    done = _timed(60.0)
    _all_ok(symmetriser_suite(max_n=6, tolerance=1e-9,
                              oracle_tolerance=1e-12))
    done()


def test_criterion_5_lie_algebra_suite():
    _all_ok(lie_suite(tolerance=1e-9, n_pairs=100))


def test_criterion_6_aklt_chains():
    done = _timed(30.0)
    for n in range(3, 7):
        cfg = AKLTConfig(n)
        assert aklt_ground_check(cfg) <= 1e-9
        T = aklt_state_tensor(cfg).reshape(-1)
        O = aklt_mps_oracle(cfg).reshape(-1)
        lam = proportional(T / np.linalg.norm(T), O / np.linalg.norm(O))
        assert lam is not None and abs(abs(lam) - 1) <= 1e-9
    forbidden = [
        (4, (1, 0, 1, -1)),
        (4, (-1, 0, 0, -1)),
        (3, (1, 1, -1)),
    ]
    for n, labels in forbidden:
        amp = aklt_config_amplitude(AKLTConfig(n, site_labels=labels))
        assert abs(amp) <= 1e-12
    allowed = [(4, (1, 0, -1, 1)), (4, (1, -1, 1, -1)), (3, (1, 0, -1))]
    for n, labels in allowed:
        amp = aklt_config_amplitude(AKLTConfig(n, site_labels=labels))
        assert abs(amp) > 1e-12
    done()


def test_criterion_7_qml_vertex_gate_and_gradients():
    # dual closed forms of the gate over a 16-point grid
    W1 = injection_matrix(H, H, 1)
    W0 = injection_matrix(H, H, 0)
    P1 = W1 @ W1.conj().T
    P0 = W0 @ W0.conj().T
    for theta in np.linspace(0.0, 2 * math.pi, 16):
        V = evaluate(vertex_gate(float(theta))).reshape(4, 4).T
        projector_sum = P1 + np.exp(1j * theta) * P0
        assert np.max(np.abs(V - projector_sum)) <= 1e-12
    # equivariance: commutes with u (x) u for 20 random SU(2) elements
    rng = np.random.default_rng(42)
    V = evaluate(vertex_gate(0.9)).reshape(4, 4).T
    for _ in range(20):
        u = random_su2(rng)
        uu = np.kron(u, u)
        assert np.max(np.abs(V @ uu - uu @ V)) <= 1e-9
    # gradient variance: seed-reproducible, and consistent with an
    # independent re-simulation through the unfused evaluation path
    spec = AnsatzSpec(4, 2)
    perm = (0, 2, 1, 3)
    r1 = qml_grad_variance(spec, perm, theta_index=2, n_samples=400, seed=42)
    r2 = qml_grad_variance(spec, perm, theta_index=2, n_samples=400, seed=42)
    assert r1.estimate == r2.estimate and r1.std_error == r2.std_error
    rng = np.random.default_rng(271828)
    grads = np.array([
        qml_gradient(spec, perm,
                     rng.uniform(0.0, 2 * math.pi, spec.gate_count), 2,
                     fast=False)
        for _ in range(400)])
    var2 = float(np.var(grads, ddof=1))
    centred = grads - grads.mean()
    n = len(grads)
    m4 = float(np.mean(centred**4))
    se2 = math.sqrt(max(m4 - (n - 3) / (n - 1) * var2**2, 0.0) / n)
    joint_se = math.hypot(r1.std_error, se2)
    assert abs(r1.estimate - var2) <= 3 * joint_se


def test_criterion_8_rewrite_soundness():
    _all_ok(rules_suite(tolerance=1e-9, n_random=1000))


def test_criterion_9_binor_layer():
    _all_ok(binor_suite(tolerance=1e-12))
