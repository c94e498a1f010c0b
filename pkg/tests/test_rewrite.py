"""Rewrite engine: rule certification, application, soundness, strategies."""

import numpy as np
import pytest

from spinzx import (
    compose,
    compose_all,
    evaluate,
    identity,
    matrix_box,
    partial_trace,
    symmetriser,
    tensor,
    tensors_close,
    z_spider,
)
from spinzx.errors import SoundnessFailure, StaleSite
from spinzx.oracles import symmetriser_dense
from spinzx.rewrite import (
    ZFusionRule,
    apply_rule,
    builtin_rules,
    certify_rule,
    find_matches,
    simplify,
)


def phased_chain(k):
    import math
    return compose_all([
        z_spider(1, 1, 2, params=(complex(math.cos(0.4 * i),
                                          math.sin(0.4 * i)),))
        for i in range(1, k + 1)])


def test_builtin_rules_all_certified():
    registry = builtin_rules()
    assert len(registry) >= 10
    for rule in registry.values():
        assert getattr(rule, "_certified", False)


def test_unsound_rule_rejected_by_certification():
    class DroppedScalarFusion(ZFusionRule):
        # deliberately wrong: forgets a factor when merging spiders
        def apply(self, D, site):
            out = super().apply(D, site)
            return type(out)(out.nodes, out.wires, out.n_in, out.n_out,
                             out.scalar * 2.0, out.tags)

    with pytest.raises(SoundnessFailure):
        certify_rule(DroppedScalarFusion())


def test_uncertified_rule_cannot_match():
    with pytest.raises(SoundnessFailure):
        find_matches(identity(2), ZFusionRule())


def test_z_fusion_counts_and_semantics():
    registry = builtin_rules()
    D = phased_chain(4)
    fusion = registry["z-fusion"]
    sites = find_matches(D, fusion)
    assert len(sites) == 3
    out = apply_rule(D, fusion, sites[0], check=True)
    assert len(out.nodes) == len(D.nodes) - 1
    assert tensors_close(evaluate(out), evaluate(D))


def test_stale_site_detected():
    registry = builtin_rules()
    D = phased_chain(3)
    fusion = registry["z-fusion"]
    sites = find_matches(D, fusion)
    out = apply_rule(D, fusion, sites[0])
    with pytest.raises(StaleSite):
        apply_rule(out, fusion, sites[1])


def test_simplify_fuse_chain_to_single_spider():
    D = phased_chain(5)
    S, trace = simplify(D, "fuse")
    assert len(S.nodes) == 1
    assert any("z-fusion" in line for line in trace)
    assert tensors_close(evaluate(S), evaluate(D))


def test_simplify_removes_trivial_identities():
    D = compose_all([z_spider(1, 1, 2) for _ in range(4)])
    S, _ = simplify(D, "fuse")
    assert len(S.nodes) == 0
    assert tensors_close(evaluate(S), evaluate(D))


def test_simplify_trace_deterministic():
    D = tensor(phased_chain(4), phased_chain(3))
    S1, t1 = simplify(D, "full")
    S2, t2 = simplify(D, "full")
    assert t1 == t2
    np.testing.assert_allclose(evaluate(S1), evaluate(S2), atol=1e-12)


def test_simplify_step_cap():
    D = phased_chain(6)
    S, trace = simplify(D, "fuse", max_steps=2)
    assert trace[-1].startswith("cap reached")


def test_partial_trace_is_matrix_trace():
    M = np.array([[1, 2j], [3, 4]])
    D = matrix_box(M, [2], [2])
    closed = partial_trace(D, 0, 0)
    assert closed.n_in == 0 and closed.n_out == 0
    assert complex(evaluate(closed)) == pytest.approx(np.trace(M))


def test_symmetriser_partial_trace_recursion():
    # tracing the last strand of S_n yields ((n+1)/n) S_{n-1}
    for n in (2, 3, 4):
        traced = partial_trace(symmetriser(n), n - 1, n - 1)
        T = evaluate(traced)
        d = 2 ** (n - 1)
        got = T.reshape(d, d).T
        np.testing.assert_allclose(got, (n + 1) / n * symmetriser_dense(n - 1),
                                   atol=1e-12)


def test_symmetriser_idempotence_via_spin_strategy():
    D = compose(symmetriser(3), symmetriser(3))
    S, trace = simplify(D, "spin")
    assert any("symmetriser-merge" in line for line in trace)
    assert tensors_close(evaluate(S), evaluate(D))


def test_closed_component_folds_to_scalar():
    loop = partial_trace(z_spider(1, 1, 2, params=(0.5,)), 0, 0)
    S, _ = simplify(loop, "full")
    assert len(S.nodes) == 0
    assert complex(evaluate(S)) == pytest.approx(1.5)


def test_random_rewrites_preserve_semantics():
    from spinzx.verify import rules_suite
    checks = rules_suite(n_random=120, seed=9)
    assert all(c.ok for c in checks)
