"""Worked application pipelines: tree overlaps, AKLT chains, equivariant
circuits, and the volume-operator eigenproblem."""

import math

import numpy as np
import pytest

from spinzx import couple, evaluate, leaf, spin, swap_perm, tree
from spinzx.apps import (
    AKLTConfig,
    AnsatzSpec,
    LQGConstants,
    aklt_chain,
    aklt_config_amplitude,
    aklt_ground_check,
    aklt_hamiltonian_identity_residual,
    aklt_mps_oracle,
    aklt_state_tensor,
    area_eigenvalue,
    lqg_intertwiner_state,
    lqg_min_volume_check,
    lqg_vtilde2,
    lqg_vtilde2_oracle,
    pqc_amplitude,
    qml_expectation,
    qml_grad_variance,
    singlet_product_state,
)
from spinzx.errors import LeafCountMismatch, ValidationError
from spinzx.evaluate import proportional
from spinzx.oracles import random_su2, wigner_D_oracle


H = "1/2"


def three_qubit_trees():
    bra = tree(couple(couple(leaf(H), leaf(H), 1), leaf(H), H), H)
    ket = tree(couple(couple(leaf(H), leaf(H), 0), leaf(H), H), H)
    return bra, ket


# ---------------------------------------------------------------------------
# tree-overlap amplitudes


def test_pqc_both_routes_agree_on_reference_amplitude():
    bra, ket = three_qubit_trees()
    report = pqc_amplitude(bra, ket, swap_perm(3, 1, 2))
    assert report.agree
    assert report.value == pytest.approx(math.sqrt(3) / 2, abs=1e-9)
    assert report.bra_norm_sq == pytest.approx(1.5, abs=1e-9)
    assert report.ket_norm_sq == pytest.approx(2.0, abs=1e-9)


def test_pqc_single_route_modes():
    bra, ket = three_qubit_trees()
    d = pqc_amplitude(bra, ket, swap_perm(3, 1, 2), mode="diagram")
    o = pqc_amplitude(bra, ket, swap_perm(3, 1, 2), mode="oracle")
    assert d == pytest.approx(o, abs=1e-9)
    with pytest.raises(ValidationError):
        pqc_amplitude(bra, ket, swap_perm(3, 1, 2), mode="nope")


def test_pqc_orthogonality_without_permutation():
    # different intermediate spins couple to orthogonal states
    bra, ket = three_qubit_trees()
    report = pqc_amplitude(bra, ket, (0, 1, 2))
    assert abs(report.value) < 1e-9


def test_pqc_identity_overlap_is_one():
    bra, _ = three_qubit_trees()
    report = pqc_amplitude(bra, bra, (0, 1, 2))
    assert report.value == pytest.approx(1, abs=1e-9)


def test_pqc_leaf_count_mismatch():
    bra, _ = three_qubit_trees()
    two = tree(couple(leaf(H), leaf(H), 0), 0)
    with pytest.raises(LeafCountMismatch):
        pqc_amplitude(bra, two, (0, 1, 2))


# ---------------------------------------------------------------------------
# AKLT chains


@pytest.mark.parametrize("n", [2, 3, 4, 5])
def test_aklt_diagram_proportional_to_mps(n):
    cfg = AKLTConfig(n)
    T = aklt_state_tensor(cfg)
    O = aklt_mps_oracle(cfg)
    O = np.moveaxis(O, 1, -1) if O.shape != T.shape else O
    lam = proportional(T.reshape(-1), O.reshape(-1))
    assert lam is not None
    assert abs(lam) == pytest.approx(1.5 ** (n / 2), rel=1e-9)


@pytest.mark.parametrize("n", [3, 4, 5, 6])
def test_aklt_every_bond_annihilated_by_spin2_projector(n):
    assert aklt_ground_check(AKLTConfig(n)) <= 1e-9


def test_aklt_forbidden_configurations_vanish():
    # two consecutive +1 labels (total bond spin 2) are forbidden
    amp = aklt_config_amplitude(AKLTConfig(4, site_labels=(1, 1, 0, -1)))
    assert abs(amp) <= 1e-12
    amp = aklt_config_amplitude(AKLTConfig(3, site_labels=(-1, -1, 0)))
    assert abs(amp) <= 1e-12


def test_aklt_allowed_configuration_nonzero():
    amp = aklt_config_amplitude(AKLTConfig(4, site_labels=(1, 0, 0, -1)))
    assert abs(amp) > 1e-6


def test_aklt_hamiltonian_projector_identity():
    assert aklt_hamiltonian_identity_residual() <= 1e-12


def test_aklt_rejects_short_chain():
    with pytest.raises(ValidationError):
        AKLTConfig(1)


# ---------------------------------------------------------------------------
# permutation-equivariant circuits


def test_singlet_product_state_normalised():
    for n in (2, 4, 6):
        psi = singlet_product_state(n)
        assert np.linalg.norm(psi) == pytest.approx(1, abs=1e-12)


def test_qml_expectation_fast_and_slow_agree():
    spec = AnsatzSpec(4, 2, theta=(0.3, 1.1, -0.7))
    perm = (0, 2, 1, 3)
    slow = qml_expectation(spec, perm, fast=False)
    fast = qml_expectation(spec, perm, fast=True)
    assert slow == pytest.approx(fast, abs=1e-12)


def test_qml_swap_observable_is_constant_one():
    # swap (x) swap preserves every singlet product state for any angles
    rng = np.random.default_rng(2)
    spec = AnsatzSpec(4, 2)
    for _ in range(5):
        theta = tuple(rng.uniform(0, 2 * math.pi, spec.gate_count))
        val = qml_expectation(spec, (1, 0, 3, 2), theta=theta, fast=True)
        assert val == pytest.approx(1, abs=1e-9)


def test_qml_grad_variance_seed_reproducible():
    spec = AnsatzSpec(4, 2)
    r1 = qml_grad_variance(spec, (0, 2, 1, 3), theta_index=2,
                           n_samples=200, seed=42)
    r2 = qml_grad_variance(spec, (0, 2, 1, 3), theta_index=2,
                           n_samples=200, seed=42)
    assert r1.estimate == r2.estimate
    assert r1.std_error == r2.std_error
    r3 = qml_grad_variance(spec, (0, 2, 1, 3), theta_index=2,
                           n_samples=200, seed=7)
    assert r3.estimate != r1.estimate


# ---------------------------------------------------------------------------
# volume operator


def test_lqg_diagram_matches_oracle():
    D = evaluate(lqg_vtilde2()).reshape(8, 8)
    np.testing.assert_allclose(D.T, lqg_vtilde2_oracle(), atol=1e-12)


def test_lqg_oracle_is_antihermitian():
    M = lqg_vtilde2_oracle()
    np.testing.assert_allclose(M, -M.conj().T, atol=1e-12)


def test_lqg_intertwiner_state_norm():
    # unnormalised map-as-state; the eigenvalue fit normalises internally
    psi = lqg_intertwiner_state()
    assert np.linalg.norm(psi) == pytest.approx(math.sqrt(2), abs=1e-12)


def test_lqg_min_volume_eigenvalue():
    report = lqg_min_volume_check()
    assert report.residual <= 1e-9
    assert report.modulus == pytest.approx(math.sqrt(3) / 4, abs=1e-9)
    assert report.hermitian_part_eigenvalue == pytest.approx(
        -math.sqrt(3) / 4, abs=1e-9)


def test_area_eigenvalue():
    assert area_eigenvalue(H, dimensionless=True) == pytest.approx(
        math.sqrt(0.75), abs=1e-12)
    # prefactor 8*pi*gamma*hbar*G/c^3 in chosen units
    c = LQGConstants(gamma=0.5, hbar_G_over_c3=2.0)
    assert area_eigenvalue(1, constants=c) == pytest.approx(
        8 * math.pi * math.sqrt(2), abs=1e-9)
