"""The interpretation functor: diagrams to dense complex tensors.

Ground truth for every verification in the package.  Axis order of the
result is inputs-then-outputs, each in boundary order.  Contraction is
greedy pairwise, minimizing the size of the produced intermediate, with
ties broken by the lowest involved wire id.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .diagram import (
    Diagram,
    DimSplit,
    Dualiser,
    Hadamard,
    MatrixBox,
    Triangle,
    WNode,
    XSpider,
    ZSpider,
    IN,
    OUT,
    is_node_end,
)
from .errors import NotClosed, ShapeMismatch, SizeExceeded, UnsupportedKind


@dataclass(frozen=True)
class EvalConfig:
    tolerance: float = 1e-9
    max_total_entries: int = 2**26

    def __post_init__(self):
        if self.tolerance <= 0:
            raise ValueError("tolerance must be positive")


DEFAULT_CONFIG = EvalConfig()


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def node_tensor(kind, n_in: int, n_out: int, leg_dims) -> np.ndarray:
    """Dense tensor of a single generator, axes ordered inputs then outputs."""
    leg_dims = list(leg_dims)
    legs = n_in + n_out
    if isinstance(kind, ZSpider):
        if legs == 0:
            if kind.params is None:
                return np.array(complex(kind.dim))
            return np.array(1 + sum(kind.params, 0j))
        min_dim = min(leg_dims)
        if kind.params is None:
            amps = np.ones(min_dim, dtype=complex)
        else:
            amps = np.zeros(min_dim, dtype=complex)
            amps[0] = 1
            amps[1 : 1 + len(kind.params)] = kind.params
        T = np.zeros(leg_dims, dtype=complex)
        for j in range(min_dim):
            T[(j,) * legs] = amps[j]
        return T
    if isinstance(kind, XSpider):
        d = kind.dim
        T = np.zeros(leg_dims, dtype=complex)
        if legs == 0:
            return np.array(complex(d if kind.phase % d == 0 else 0))
        grids = np.indices(leg_dims)
        total = -sum(grids[:n_in]) + sum(grids[n_in:]) + kind.phase
        T[total % d == 0] = 1
        return T
    if isinstance(kind, Hadamard):
        d = kind.dim
        j, k = np.indices((d, d))
        H = np.exp(2j * np.pi * j * k / d) / np.sqrt(d)
        return H.conj() if kind.dagger else H
    if isinstance(kind, Dualiser):
        d = kind.dim
        T = np.zeros((d, d), dtype=complex)
        for i in range(d):
            T[i, (d - i) % d] = 1
        return T
    if isinstance(kind, WNode):
        d = kind.dim
        T = np.zeros((d, d, d), dtype=complex)
        T[0, 0, 0] = 1
        for i in range(1, d):
            T[i, 0, i] = 1
            T[i, i, 0] = 1
        if kind.dagger:
            T = np.transpose(T, (1, 2, 0))
        return T
    if isinstance(kind, Triangle):
        d = kind.dim
        M = np.eye(d, dtype=complex)
        M[1:, 0] += 1
        if kind.dagger:
            M = M.T
        return M.T  # axes (in, out): T[i, o] = M[o, i]
    if isinstance(kind, DimSplit):
        d1, d2 = kind.d1, kind.d2
        T = np.zeros((d1 * d2, d1, d2), dtype=complex)
        for i in range(d1):
            for k in range(d2):
                T[i * d2 + k, i, k] = 1
        if kind.dagger:
            T = np.transpose(T, (1, 2, 0))
        return T
    if isinstance(kind, MatrixBox):
        M = np.array(kind.entries, dtype=complex)
        out_dims, in_dims = list(kind.out_dims), list(kind.in_dims)
        T = M.reshape(out_dims + in_dims)
        n_o, n_i = len(out_dims), len(in_dims)
        return np.transpose(T, list(range(n_o, n_o + n_i)) + list(range(n_o)))
    raise UnsupportedKind(f"no tensor semantics for {kind!r}")


def _trace_duplicates(T, labels):
    """Contract repeated labels within a single tensor (self-loops)."""
    while True:
        dup = None
        for i, lab in enumerate(labels):
            if lab in labels[i + 1 :]:
                dup = (i, labels.index(lab, i + 1))
                break
        if dup is None:
            return T, labels
        i, j = dup
        T = np.trace(T, axis1=i, axis2=j)
        labels = [lab for k, lab in enumerate(labels) if k not in (i, j)]


def _label_sort_key(lab):
    return lab if isinstance(lab, int) else 10**9


def evaluate(D: Diagram, cfg: EvalConfig = DEFAULT_CONFIG) -> np.ndarray:
    """Dense tensor of D; axes: inputs then outputs, in boundary order."""
    cap = cfg.max_total_entries

    # Per-wire labels; free labels are ("free", side, pos).
    free_of = {}
    pool = []  # list of [tensor, labels]
    wire_label = {}
    for idx, w in enumerate(D.wires):
        wire_label[idx] = idx
        for end in w.ends():
            if not is_node_end(end):
                free_of.setdefault(idx, []).append(("free", end[0], end[1]))

    port_wire = {}
    for idx, w in enumerate(D.wires):
        for end in w.ends():
            if is_node_end(end):
                port_wire[(end[1], end[2])] = idx

    for idx, w in enumerate(D.wires):
        a, b = w.ends()
        if not is_node_end(a) and not is_node_end(b):
            labs = free_of[idx]
            pool.append([np.eye(w.dim, dtype=complex), list(labs)])

    for nid, node in sorted(D.nodes.items()):
        dims = [D.wires[port_wire[(nid, p)]].dim for p in range(node.n_legs)]
        T = node_tensor(node.kind, node.n_in, node.n_out, dims)
        if T.size > cap:
            raise SizeExceeded(f"node {nid} tensor has {T.size} entries (cap {cap})")
        labels = []
        for p in range(node.n_legs):
            widx = port_wire[(nid, p)]
            free = free_of.get(widx)
            if free:
                labels.append(free[0])
            else:
                labels.append(widx)
        T, labels = _trace_duplicates(T, labels)
        pool.append([T, labels])

    # Greedy pairwise contraction.
    while len(pool) > 1:
        best = None
        for i in range(len(pool)):
            for j in range(i + 1, len(pool)):
                shared = [lab for lab in pool[i][1] if lab in pool[j][1]]
                if not shared:
                    continue
                keep_i = [d for d, lab in zip(pool[i][0].shape, pool[i][1]) if lab not in shared]
                keep_j = [d for d, lab in zip(pool[j][0].shape, pool[j][1]) if lab not in shared]
                size = _prod(keep_i) * _prod(keep_j)
                tie = min(_label_sort_key(lab) for lab in shared)
                key = (size, tie, i, j)
                if best is None or key < best[0]:
                    best = (key, i, j, shared)
        if best is None:
            # Disconnected components: outer product of the two smallest.
            order = sorted(range(len(pool)), key=lambda k: pool[k][0].size)
            i, j = sorted(order[:2])
            Ti, labi = pool[i]
            Tj, labj = pool[j]
            size = Ti.size * Tj.size
            if size > cap:
                raise SizeExceeded(f"intermediate of {size} entries exceeds cap {cap}")
            T = np.tensordot(Ti, Tj, axes=0)
            labels = labi + labj
        else:
            _, i, j, shared = best
            Ti, labi = pool[i]
            Tj, labj = pool[j]
            axes_i = [labi.index(lab) for lab in shared]
            axes_j = [labj.index(lab) for lab in shared]
            keep_i = [lab for lab in labi if lab not in shared]
            keep_j = [lab for lab in labj if lab not in shared]
            size = _prod(
                [d for d, lab in zip(Ti.shape, labi) if lab not in shared]
                + [d for d, lab in zip(Tj.shape, labj) if lab not in shared]
            )
            if size > cap:
                raise SizeExceeded(f"intermediate of {size} entries exceeds cap {cap}")
            T = np.tensordot(Ti, Tj, axes=(axes_i, axes_j))
            labels = keep_i + keep_j
        pool = [pool[k] for k in range(len(pool)) if k not in (i, j)]
        T, labels = _trace_duplicates(T, labels)
        pool.append([T, labels])

    if not pool:
        result = np.array(complex(D.scalar))
        return result

    T, labels = pool[0]
    T, labels = _trace_duplicates(T, labels)
    target = [("free", IN, p) for p in range(D.n_in)] + [
        ("free", OUT, p) for p in range(D.n_out)
    ]
    if sorted(map(repr, labels)) != sorted(map(repr, target)):
        raise AssertionError(f"internal label mismatch: {labels} vs {target}")
    perm = [labels.index(lab) for lab in target]
    T = np.transpose(T, perm) if perm else T
    return T * D.scalar


def evaluate_scalar(D: Diagram, cfg: EvalConfig = DEFAULT_CONFIG) -> complex:
    if D.n_in != 0 or D.n_out != 0:
        raise NotClosed(f"diagram has boundary {D.n_in}->{D.n_out}")
    return complex(evaluate(D, cfg))


def _norm_scale(*tensors) -> float:
    peak = max((float(np.max(np.abs(t))) if t.size else 0.0) for t in tensors)
    return max(1.0, peak)


def tensors_close(A, B, cfg: EvalConfig = DEFAULT_CONFIG) -> bool:
    A, B = np.asarray(A), np.asarray(B)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} vs {B.shape}")
    if A.size == 0:
        return True
    return float(np.max(np.abs(A - B))) <= cfg.tolerance * _norm_scale(A, B)


def proportional(A, B, cfg: EvalConfig = DEFAULT_CONFIG):
    """Return lambda with ||A - lambda*B||_max <= tol*||B||_max, or None."""
    A, B = np.asarray(A, dtype=complex), np.asarray(B, dtype=complex)
    if A.shape != B.shape:
        raise ShapeMismatch(f"shapes {A.shape} vs {B.shape}")
    b_max = float(np.max(np.abs(B))) if B.size else 0.0
    if b_max == 0.0:
        a_max = float(np.max(np.abs(A))) if A.size else 0.0
        return 1.0 + 0j if a_max == 0.0 else None
    idx = np.unravel_index(np.argmax(np.abs(B)), B.shape)
    lam = complex(A[idx]) / complex(B[idx])
    if float(np.max(np.abs(A - lam * B))) <= cfg.tolerance * max(b_max, 1.0):
        return lam
    return None
