"""Mixed-dimensional ZX diagram data model.

A diagram is an undirected open graph: nodes (generators) with numbered
ports, wires connecting ports or boundary slots, an ordered input/output
boundary, and a global complex scalar.  Diagrams are immutable values
after construction; every constructor validates well-formedness.

Wire dimensions are integers >= 2.  Node ports are numbered with inputs
first: ports 0..n_in-1 are inputs, n_in..n_in+n_out-1 are outputs.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace

from .errors import (
    ArityMismatch,
    BoundaryMismatch,
    DimMismatch,
    ParamLengthMismatch,
    ParseError,
    ValidationError,
)

# ---------------------------------------------------------------------------
# Endpoints

IN = "in"
OUT = "out"


def node_end(node_id: int, port: int):
    return ("node", node_id, port)


def boundary_end(side: str, pos: int):
    return (side, pos)


def is_node_end(end) -> bool:
    return end[0] == "node"


@dataclass(frozen=True)
class Wire:
    a: tuple
    b: tuple
    dim: int

    def ends(self):
        return (self.a, self.b)

    def other(self, end):
        if end == self.a:
            return self.b
        if end == self.b:
            return self.a
        raise ValueError(f"{end} not on wire {self}")

    def normalized(self) -> "Wire":
        if _end_key(self.b) < _end_key(self.a):
            return Wire(self.b, self.a, self.dim)
        return self


def _end_key(end):
    return (0 if end[0] == "node" else 1, end[1:] if end[0] == "node" else (end[0], end[1]))


# ---------------------------------------------------------------------------
# Node kinds


@dataclass(frozen=True)
class ZSpider:
    """Z spider: sum_j a_j |j..j><j..j| with implicit a_0 = 1.

    params is the explicit tail (a_1, ..., a_L); entries beyond the stored
    length count as 0; params=None means the all-ones (trivial) vector.
    A legless spider needs an explicit dim; its value is 1 + sum(params).
    """

    params: tuple | None = None
    dim: int | None = None

    def __post_init__(self):
        if self.params is not None:
            object.__setattr__(self, "params", tuple(complex(p) for p in self.params))


@dataclass(frozen=True)
class XSpider:
    """X spider K_k: sum over sum(outs) + k = sum(ins) (mod dim)."""

    dim: int
    phase: int = 0

    def __post_init__(self):
        object.__setattr__(self, "phase", self.phase % self.dim)


@dataclass(frozen=True)
class Hadamard:
    dim: int
    dagger: bool = False


@dataclass(frozen=True)
class Dualiser:
    dim: int


@dataclass(frozen=True)
class WNode:
    """|00><0| + sum_{i>=1} (|0i>+|i0>)<i| (canonical 1-in/2-out)."""

    dim: int
    dagger: bool = False


@dataclass(frozen=True)
class Triangle:
    """I_d + sum_{i>=1} |i><0| (canonical 1-in/1-out)."""

    dim: int
    dagger: bool = False


@dataclass(frozen=True)
class DimSplit:
    """C^{d1*d2} -> C^{d1} x C^{d2}, |i*d2 + k> -> |i>|k> (row-major)."""

    d1: int
    d2: int
    dagger: bool = False


@dataclass(frozen=True)
class MatrixBox:
    """Injected linear map with explicit entries.

    entries[r][c] maps flattened (row-major) input index c to output
    index r.  Excluded from rewrite-rule matching.
    """

    in_dims: tuple
    out_dims: tuple
    entries: tuple

    def __post_init__(self):
        object.__setattr__(self, "in_dims", tuple(int(d) for d in self.in_dims))
        object.__setattr__(self, "out_dims", tuple(int(d) for d in self.out_dims))
        object.__setattr__(
            self,
            "entries",
            tuple(tuple(complex(x) for x in row) for row in self.entries),
        )


NODE_KINDS = (ZSpider, XSpider, Hadamard, Dualiser, WNode, Triangle, DimSplit, MatrixBox)


@dataclass(frozen=True)
class Node:
    kind: object
    n_in: int
    n_out: int

    @property
    def n_legs(self) -> int:
        return self.n_in + self.n_out


@dataclass(frozen=True)
class Tag:
    """Marks a set of nodes as a named composite (e.g. a symmetriser)."""

    name: str
    nodes: frozenset
    meta: tuple = ()


def _prod(xs):
    out = 1
    for x in xs:
        out *= x
    return out


def expected_port_dims(node: Node):
    """Fixed per-port dims for a node, or None where any dim is allowed."""
    kind, n_in, n_out = node.kind, node.n_in, node.n_out
    if isinstance(kind, ZSpider):
        return [None] * (n_in + n_out)
    if isinstance(kind, XSpider):
        return [kind.dim] * (n_in + n_out)
    if isinstance(kind, (Hadamard, Dualiser, Triangle)):
        return [kind.dim, kind.dim]
    if isinstance(kind, WNode):
        return [kind.dim] * 3
    if isinstance(kind, DimSplit):
        merged, parts = kind.d1 * kind.d2, [kind.d1, kind.d2]
        return parts + [merged] if kind.dagger else [merged] + parts
    if isinstance(kind, MatrixBox):
        return list(kind.in_dims) + list(kind.out_dims)
    raise ValidationError(f"unknown node kind {kind!r}")


def check_node_arity(node: Node) -> None:
    kind = node.kind
    shape = (node.n_in, node.n_out)
    if isinstance(kind, ZSpider):
        return
    if isinstance(kind, XSpider):
        return
    if isinstance(kind, (Hadamard, Dualiser, Triangle)):
        if isinstance(kind, (Hadamard, Triangle)) and getattr(kind, "dagger", False):
            pass  # still 1-in/1-out
        if shape != (1, 1):
            raise ArityMismatch(f"{type(kind).__name__} must be 1-in/1-out, got {shape}")
        return
    if isinstance(kind, WNode):
        want = (2, 1) if kind.dagger else (1, 2)
        if shape != want:
            raise ArityMismatch(f"WNode(dagger={kind.dagger}) must be {want}, got {shape}")
        return
    if isinstance(kind, DimSplit):
        want = (2, 1) if kind.dagger else (1, 2)
        if shape != want:
            raise ArityMismatch(f"DimSplit(dagger={kind.dagger}) must be {want}, got {shape}")
        return
    if isinstance(kind, MatrixBox):
        if shape != (len(kind.in_dims), len(kind.out_dims)):
            raise ArityMismatch("MatrixBox arity must match its dim lists")
        rows, cols = _prod(kind.out_dims), _prod(kind.in_dims)
        if len(kind.entries) != rows or any(len(r) != cols for r in kind.entries):
            raise DimMismatch("MatrixBox entries shape must be (prod out, prod in)")
        return
    raise ValidationError(f"unknown node kind {kind!r}")


# ---------------------------------------------------------------------------
# Diagram


class Diagram:
    """An immutable open diagram."""

    __slots__ = ("nodes", "wires", "n_in", "n_out", "scalar", "tags", "_frozen")

    def __init__(self, nodes, wires, n_in, n_out, scalar=1.0, tags=(), validate=True):
        object.__setattr__(self, "nodes", dict(nodes))
        object.__setattr__(self, "wires", tuple(w.normalized() for w in wires))
        object.__setattr__(self, "n_in", int(n_in))
        object.__setattr__(self, "n_out", int(n_out))
        object.__setattr__(self, "scalar", complex(scalar))
        object.__setattr__(self, "tags", tuple(tags))
        if validate:
            self.validate()
        object.__setattr__(self, "_frozen", True)

    def __setattr__(self, name, value):
        if getattr(self, "_frozen", False):
            raise AttributeError("Diagram is immutable")
        object.__setattr__(self, name, value)

    # -- validation ---------------------------------------------------------

    def validate(self) -> None:
        seen_node_ports = {}
        seen_boundary = {}
        for w in self.wires:
            if w.dim < 2:
                raise ValidationError(f"wire dim must be >= 2, got {w.dim}")
            for end in w.ends():
                if is_node_end(end):
                    _, nid, port = end
                    if nid not in self.nodes:
                        raise ValidationError(f"wire references unknown node {nid}")
                    node = self.nodes[nid]
                    if not 0 <= port < node.n_legs:
                        raise ValidationError(f"port {port} out of range for node {nid}")
                    if end in seen_node_ports:
                        raise ValidationError(f"port {end} used by two wires")
                    seen_node_ports[end] = w.dim
                else:
                    side, pos = end
                    if side not in (IN, OUT):
                        raise ValidationError(f"bad boundary side {side!r}")
                    count = self.n_in if side == IN else self.n_out
                    if not 0 <= pos < count:
                        raise ValidationError(f"boundary slot {end} out of range")
                    if end in seen_boundary:
                        raise ValidationError(f"boundary slot {end} used twice")
                    seen_boundary[end] = w.dim
        for pos in range(self.n_in):
            if (IN, pos) not in seen_boundary:
                raise ValidationError(f"input slot {pos} unwired")
        for pos in range(self.n_out):
            if (OUT, pos) not in seen_boundary:
                raise ValidationError(f"output slot {pos} unwired")
        for nid, node in self.nodes.items():
            check_node_arity(node)
            dims = []
            for port in range(node.n_legs):
                end = ("node", nid, port)
                if end not in seen_node_ports:
                    raise ValidationError(f"port {port} of node {nid} unwired")
                dims.append(seen_node_ports[end])
            expected = expected_port_dims(node)
            for port, (got, want) in enumerate(zip(dims, expected)):
                if want is not None and got != want:
                    raise DimMismatch(
                        f"node {nid} port {port}: wire dim {got} != expected {want}"
                    )
            kind = node.kind
            if isinstance(kind, ZSpider):
                if node.n_legs == 0:
                    if kind.dim is None:
                        raise ValidationError("legless Z spider needs an explicit dim")
                    if kind.dim < 2:
                        raise ValidationError("Z spider dim must be >= 2")
                    min_dim = kind.dim
                else:
                    if kind.dim is not None:
                        raise ValidationError("legged Z spider must not carry a dim field")
                    min_dim = min(dims)
                if kind.params is not None and len(kind.params) > min_dim - 1:
                    raise ParamLengthMismatch(
                        f"Z spider params length {len(kind.params)} exceeds min leg dim"
                        f" {min_dim} - 1"
                    )
            if isinstance(kind, (XSpider, Hadamard, Dualiser, WNode, Triangle)):
                if kind.dim < 2:
                    raise ValidationError(f"{type(kind).__name__} dim must be >= 2")
            if isinstance(kind, DimSplit) and (kind.d1 < 2 or kind.d2 < 2):
                raise ValidationError("DimSplit dims must be >= 2")
        node_ids = set(self.nodes)
        for tag in self.tags:
            if not tag.nodes <= node_ids:
                raise ValidationError(f"tag {tag.name!r} references unknown nodes")

    # -- queries ------------------------------------------------------------

    def boundary_dims(self, side: str):
        count = self.n_in if side == IN else self.n_out
        dims = [None] * count
        for w in self.wires:
            for end in w.ends():
                if not is_node_end(end) and end[0] == side:
                    dims[end[1]] = w.dim
        return dims

    @property
    def input_dims(self):
        return self.boundary_dims(IN)

    @property
    def output_dims(self):
        return self.boundary_dims(OUT)

    def wire_at(self, end):
        for w in self.wires:
            if end in w.ends():
                return w
        raise KeyError(f"no wire at {end}")

    def node_leg_dims(self, nid: int):
        node = self.nodes[nid]
        return [self.wire_at(("node", nid, p)).dim for p in range(node.n_legs)]

    def fresh_id(self) -> int:
        return max(self.nodes, default=-1) + 1

    # -- equality -----------------------------------------------------------

    def __eq__(self, other):
        if not isinstance(other, Diagram):
            return NotImplemented
        return (
            self.nodes == other.nodes
            and sorted(self.wires, key=lambda w: (_end_key(w.a), _end_key(w.b), w.dim))
            == sorted(other.wires, key=lambda w: (_end_key(w.a), _end_key(w.b), w.dim))
            and self.n_in == other.n_in
            and self.n_out == other.n_out
            and self.scalar == other.scalar
        )

    def __hash__(self):
        return hash((frozenset(self.nodes.items()), frozenset(self.wires), self.n_in, self.n_out))

    def __repr__(self):
        return (
            f"Diagram(nodes={len(self.nodes)}, wires={len(self.wires)}, "
            f"{self.n_in}->{self.n_out}, scalar={self.scalar})"
        )

    # -- rebuilding helpers --------------------------------------------------

    def with_scalar(self, scalar) -> "Diagram":
        return Diagram(self.nodes, self.wires, self.n_in, self.n_out, scalar, self.tags,
                       validate=False)

    def scaled(self, factor) -> "Diagram":
        return self.with_scalar(self.scalar * complex(factor))

    def with_tag(self, tag: Tag) -> "Diagram":
        return Diagram(self.nodes, self.wires, self.n_in, self.n_out, self.scalar,
                       self.tags + (tag,), validate=False)


# ---------------------------------------------------------------------------
# Constructors


def empty_diagram(scalar=1.0) -> Diagram:
    return Diagram({}, (), 0, 0, scalar)


def identity(d: int, n: int = 1) -> Diagram:
    """n parallel wires of dim d."""
    wires = [Wire((IN, i), (OUT, i), d) for i in range(n)]
    return Diagram({}, wires, n, n)


def wires_diagram(dims) -> Diagram:
    wires = [Wire((IN, i), (OUT, i), d) for i, d in enumerate(dims)]
    return Diagram({}, wires, len(wires), len(wires))


def permutation_diagram(dims, targets) -> Diagram:
    """Route input slot i to output slot targets[i]; dims indexed by input."""
    if sorted(targets) != list(range(len(dims))):
        raise ValidationError(f"targets {targets} is not a permutation")
    wires = [Wire((IN, i), (OUT, t), d) for i, (d, t) in enumerate(zip(dims, targets))]
    return Diagram({}, wires, len(dims), len(dims))


def make_generator(kind, n_in: int, n_out: int, leg_dims) -> Diagram:
    """Single-node diagram with boundary wires on every leg (inputs first)."""
    leg_dims = list(leg_dims)
    if len(leg_dims) != n_in + n_out:
        raise ArityMismatch(
            f"got {len(leg_dims)} leg dims for {n_in}-in/{n_out}-out generator"
        )
    node = Node(kind, n_in, n_out)
    wires = []
    for i in range(n_in):
        wires.append(Wire((IN, i), ("node", 0, i), leg_dims[i]))
    for o in range(n_out):
        wires.append(Wire(("node", 0, n_in + o), (OUT, o), leg_dims[n_in + o]))
    return Diagram({0: node}, wires, n_in, n_out)


def z_spider(n_in: int, n_out: int, dims, params=None, dim=None) -> Diagram:
    """Z spider generator; dims may be a single dim or a per-leg list."""
    if isinstance(dims, int):
        dims = [dims] * (n_in + n_out)
    kind = ZSpider(params=None if params is None else tuple(params),
                   dim=dim if (n_in + n_out) == 0 else None)
    return make_generator(kind, n_in, n_out, dims)


def x_spider(n_in: int, n_out: int, d: int, phase: int = 0) -> Diagram:
    return make_generator(XSpider(d, phase), n_in, n_out, [d] * (n_in + n_out))


def hadamard(d: int = 2) -> Diagram:
    return make_generator(Hadamard(d), 1, 1, [d, d])


def dualiser(d: int) -> Diagram:
    return make_generator(Dualiser(d), 1, 1, [d, d])


def w_node(d: int) -> Diagram:
    return make_generator(WNode(d), 1, 2, [d, d, d])


def triangle(d: int) -> Diagram:
    return make_generator(Triangle(d), 1, 1, [d, d])


def matrix_box(matrix, in_dims, out_dims) -> Diagram:
    in_dims, out_dims = tuple(in_dims), tuple(out_dims)
    entries = tuple(tuple(complex(x) for x in row) for row in matrix)
    kind = MatrixBox(in_dims, out_dims, entries)
    return make_generator(kind, len(in_dims), len(out_dims), list(in_dims) + list(out_dims))


def cup(d: int) -> Diagram:
    """0-in/2-out state sum_i |ii> (trivial Z spider)."""
    return z_spider(0, 2, d)


def cap(d: int) -> Diagram:
    """2-in/0-out effect sum_i <ii|."""
    return z_spider(2, 0, d)


def swap(d1: int, d2: int) -> Diagram:
    return permutation_diagram([d1, d2], [1, 0])


def multiplier(m: int, d: int) -> Diagram:
    """x -> m*x mod d, built as m parallel wires between a Z and an X spider."""
    if m < 0:
        raise ValidationError("multiplier requires m >= 0")
    copy = Node(ZSpider(), 1, m)
    add = Node(XSpider(d, 0), m, 1)
    wires = [Wire((IN, 0), ("node", 0, 0), d)]
    for k in range(m):
        wires.append(Wire(("node", 0, 1 + k), ("node", 1, k), d))
    wires.append(Wire(("node", 1, m), (OUT, 0), d))
    if m == 0:
        # (Mu) edge case: disconnected effect-then-state pair.
        copy = Node(ZSpider(), 1, 0)
        add = Node(XSpider(d, 0), 0, 1)
        wires = [Wire((IN, 0), ("node", 0, 0), d), Wire(("node", 1, 0), (OUT, 0), d)]
    return Diagram({0: copy, 1: add}, wires, 1, 1)


# ---------------------------------------------------------------------------
# Composition


def _remap_end(end, node_map):
    if is_node_end(end):
        return ("node", node_map[end[1]], end[2])
    return end


def compose(top: Diagram, bottom: Diagram) -> Diagram:
    """Sequential composite: top's outputs feed bottom's inputs."""
    top_out = top.output_dims
    bot_in = bottom.input_dims
    if len(top_out) != len(bot_in) or top_out != bot_in:
        raise BoundaryMismatch(
            f"cannot compose: top outputs {top_out} vs bottom inputs {bot_in}"
        )
    offset = top.fresh_id()
    bot_map = {nid: nid + offset for nid in bottom.nodes}
    nodes = dict(top.nodes)
    nodes.update({bot_map[nid]: node for nid, node in bottom.nodes.items()})

    # Junction p joins top's output slot p with bottom's input slot p.
    edges = []  # (endA, endB, dim) with junction ends as ("junction", p)
    for w in top.wires:
        a, b = w.ends()
        a = ("junction", a[1]) if (not is_node_end(a) and a[0] == OUT) else a
        b = ("junction", b[1]) if (not is_node_end(b) and b[0] == OUT) else b
        edges.append((a, b, w.dim))
    for w in bottom.wires:
        a, b = (_remap_end(e, bot_map) for e in w.ends())
        a = ("junction", a[1]) if (not is_node_end(a) and a[0] == IN) else a
        b = ("junction", b[1]) if (not is_node_end(b) and b[0] == IN) else b
        # Bottom's outputs stay outputs; bottom node ends remapped above.
        edges.append((a, b, w.dim))

    # Walk maximal paths through junctions; closed junction cycles give a
    # scalar factor equal to the wire dimension (a closed d-loop traces I_d).
    incident = {}
    for idx, (a, b, _) in enumerate(edges):
        for e in (a, b):
            if e[0] == "junction":
                incident.setdefault(e, []).append(idx)
    for junc, idxs in incident.items():
        if len(idxs) != 2:
            raise BoundaryMismatch(f"junction {junc} touched {len(idxs)} wires")

    used = [False] * len(edges)
    wires = []
    scalar = top.scalar * bottom.scalar

    def walk(start_idx, start_end):
        """Follow the path from start_end through junctions; return terminal."""
        idx, end = start_idx, start_end
        while end[0] == "junction":
            used[idx] = True
            nxt = [i for i in incident[end] if i != idx]
            if not nxt:  # self-loop edge handled by caller
                return None
            idx = nxt[0]
            a, b, _ = edges[idx]
            end = b if a == end else a
        used[idx] = True
        return end

    for idx, (a, b, dim) in enumerate(edges):
        if used[idx]:
            continue
        if a[0] != "junction" and b[0] != "junction":
            used[idx] = True
            wires.append(Wire(a, b, dim))
            continue
        if a[0] != "junction":
            used[idx] = True
            term = walk(idx, b)
            wires.append(Wire(a, term, dim))
        elif b[0] != "junction":
            used[idx] = True
            term = walk(idx, a)
            wires.append(Wire(b, term, dim))
    # Remaining unused edges are pure junction cycles.
    for idx, (a, b, dim) in enumerate(edges):
        if used[idx]:
            continue
        # Trace the cycle to mark it used once.
        used[idx] = True
        end = b
        cur = idx
        while True:
            nxt = [i for i in incident[end] if i != cur and not used[i]]
            if not nxt:
                break
            cur = nxt[0]
            used[cur] = True
            ea, eb, _ = edges[cur]
            end = eb if ea == end else ea
        scalar *= dim

    tags = list(top.tags)
    for tag in bottom.tags:
        tags.append(Tag(tag.name, frozenset(bot_map[n] for n in tag.nodes), tag.meta))
    return Diagram(nodes, wires, top.n_in, bottom.n_out, scalar, tags)


def tensor(left: Diagram, right: Diagram) -> Diagram:
    offset = left.fresh_id()
    right_map = {nid: nid + offset for nid in right.nodes}
    nodes = dict(left.nodes)
    nodes.update({right_map[nid]: node for nid, node in right.nodes.items()})
    wires = list(left.wires)
    for w in right.wires:
        ends = []
        for e in w.ends():
            if is_node_end(e):
                ends.append(_remap_end(e, right_map))
            elif e[0] == IN:
                ends.append((IN, e[1] + left.n_in))
            else:
                ends.append((OUT, e[1] + left.n_out))
        wires.append(Wire(ends[0], ends[1], w.dim))
    tags = list(left.tags)
    for tag in right.tags:
        tags.append(Tag(tag.name, frozenset(right_map[n] for n in tag.nodes), tag.meta))
    return Diagram(nodes, wires, left.n_in + right.n_in, left.n_out + right.n_out,
                   left.scalar * right.scalar, tags)


def tensor_all(diagrams) -> Diagram:
    out = empty_diagram()
    for d in diagrams:
        out = tensor(out, d)
    return out


def compose_all(diagrams) -> Diagram:
    it = iter(diagrams)
    out = next(it)
    for d in it:
        out = compose(out, d)
    return out


def adjoint_kind(kind):
    if isinstance(kind, ZSpider):
        params = None if kind.params is None else tuple(p.conjugate() for p in kind.params)
        return ZSpider(params, kind.dim)
    if isinstance(kind, XSpider):
        return XSpider(kind.dim, (-kind.phase) % kind.dim)
    if isinstance(kind, Hadamard):
        return Hadamard(kind.dim, not kind.dagger)
    if isinstance(kind, Dualiser):
        return kind
    if isinstance(kind, WNode):
        return WNode(kind.dim, not kind.dagger)
    if isinstance(kind, Triangle):
        return Triangle(kind.dim, not kind.dagger)
    if isinstance(kind, DimSplit):
        return DimSplit(kind.d1, kind.d2, not kind.dagger)
    if isinstance(kind, MatrixBox):
        rows = len(kind.entries)
        cols = len(kind.entries[0]) if rows else 0
        transposed = tuple(
            tuple(kind.entries[r][c].conjugate() for r in range(rows)) for c in range(cols)
        )
        return MatrixBox(kind.out_dims, kind.in_dims, transposed)
    raise ValidationError(f"unknown node kind {kind!r}")


def adjoint(D: Diagram) -> Diagram:
    """Vertical flip: evaluate(adjoint(D)) is the conjugate transpose."""
    nodes = {}
    port_maps = {}
    for nid, node in D.nodes.items():
        new_kind = adjoint_kind(node.kind)
        nodes[nid] = Node(new_kind, node.n_out, node.n_in)
        pm = {}
        for i in range(node.n_in):
            pm[i] = node.n_out + i  # input becomes output, same relative slot
        for o in range(node.n_out):
            pm[node.n_in + o] = o  # output becomes input
        port_maps[nid] = pm
    wires = []
    for w in D.wires:
        ends = []
        for e in w.ends():
            if is_node_end(e):
                _, nid, port = e
                ends.append(("node", nid, port_maps[nid][port]))
            elif e[0] == IN:
                ends.append((OUT, e[1]))
            else:
                ends.append((IN, e[1]))
        wires.append(Wire(ends[0], ends[1], w.dim))
    return Diagram(nodes, wires, D.n_out, D.n_in, D.scalar.conjugate(), D.tags)


# ---------------------------------------------------------------------------
# Serialization (.zxd)


def _c2j(z: complex):
    return [z.real, z.imag]


def _end_to_json(end):
    if is_node_end(end):
        return {"node": end[1], "port": end[2]}
    return {"boundary": end[0], "pos": end[1]}


def _kind_to_json(kind):
    if isinstance(kind, ZSpider):
        rec = {"kind": "zspider"}
        if kind.params is not None:
            rec["params"] = [_c2j(p) for p in kind.params]
        if kind.dim is not None:
            rec["dim"] = kind.dim
        return rec
    if isinstance(kind, XSpider):
        return {"kind": "xspider", "dim": kind.dim, "phase": kind.phase}
    if isinstance(kind, Hadamard):
        return {"kind": "hadamard", "dim": kind.dim, "dagger": kind.dagger}
    if isinstance(kind, Dualiser):
        return {"kind": "dualiser", "dim": kind.dim}
    if isinstance(kind, WNode):
        return {"kind": "wnode", "dim": kind.dim, "dagger": kind.dagger}
    if isinstance(kind, Triangle):
        return {"kind": "triangle", "dim": kind.dim, "dagger": kind.dagger}
    if isinstance(kind, DimSplit):
        return {"kind": "dimsplit", "d1": kind.d1, "d2": kind.d2, "dagger": kind.dagger}
    if isinstance(kind, MatrixBox):
        return {
            "kind": "matrixbox",
            "in_dims": list(kind.in_dims),
            "out_dims": list(kind.out_dims),
            "matrix": [[_c2j(x) for x in row] for row in kind.entries],
        }
    raise ValidationError(f"unknown node kind {kind!r}")


def serialize(D: Diagram) -> str:
    doc = {
        "nodes": [
            dict(id=nid, n_in=node.n_in, n_out=node.n_out, **_kind_to_json(node.kind))
            for nid, node in sorted(D.nodes.items())
        ],
        "wires": [
            {"a": _end_to_json(w.a), "b": _end_to_json(w.b), "dim": w.dim}
            for w in D.wires
        ],
        "inputs": [{"boundary": IN, "pos": p} for p in range(D.n_in)],
        "outputs": [{"boundary": OUT, "pos": p} for p in range(D.n_out)],
        "scalar": _c2j(D.scalar),
    }
    if D.tags:
        doc["tags"] = [
            {"name": t.name, "nodes": sorted(t.nodes), "meta": [list(kv) for kv in t.meta]}
            for t in D.tags
        ]
    return json.dumps(doc, indent=1)


def _j2c(pair) -> complex:
    if not (isinstance(pair, (list, tuple)) and len(pair) == 2):
        raise ParseError(f"complex value must be [re, im], got {pair!r}")
    return complex(float(pair[0]), float(pair[1]))


def _end_from_json(rec):
    if not isinstance(rec, dict):
        raise ParseError(f"endpoint must be an object, got {rec!r}")
    if "node" in rec:
        return ("node", int(rec["node"]), int(rec["port"]))
    if "boundary" in rec:
        side = rec["boundary"]
        if side not in (IN, OUT):
            raise ParseError(f"bad boundary side {side!r}")
        return (side, int(rec["pos"]))
    raise ParseError(f"unrecognized endpoint {rec!r}")


def _kind_from_json(rec):
    k = rec.get("kind")
    try:
        if k == "zspider":
            params = rec.get("params")
            return ZSpider(
                None if params is None else tuple(_j2c(p) for p in params),
                rec.get("dim"),
            )
        if k == "xspider":
            return XSpider(int(rec["dim"]), int(rec["phase"]))
        if k == "hadamard":
            return Hadamard(int(rec["dim"]), bool(rec.get("dagger", False)))
        if k == "dualiser":
            return Dualiser(int(rec["dim"]))
        if k == "wnode":
            return WNode(int(rec["dim"]), bool(rec.get("dagger", False)))
        if k == "triangle":
            return Triangle(int(rec["dim"]), bool(rec.get("dagger", False)))
        if k == "dimsplit":
            return DimSplit(int(rec["d1"]), int(rec["d2"]), bool(rec.get("dagger", False)))
        if k == "matrixbox":
            return MatrixBox(
                tuple(int(d) for d in rec["in_dims"]),
                tuple(int(d) for d in rec["out_dims"]),
                tuple(tuple(_j2c(x) for x in row) for row in rec["matrix"]),
            )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed node record {rec!r}: {exc}") from exc
    raise ParseError(f"unknown node kind {k!r}")


def deserialize(text: str) -> Diagram:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise ParseError(f"invalid document at line {exc.lineno} column {exc.colno}: {exc.msg}") from exc
    if not isinstance(doc, dict):
        raise ParseError("top-level document must be an object")
    try:
        nodes = {}
        for rec in doc.get("nodes", []):
            nodes[int(rec["id"])] = Node(_kind_from_json(rec), int(rec["n_in"]), int(rec["n_out"]))
        wires = [
            Wire(_end_from_json(rec["a"]), _end_from_json(rec["b"]), int(rec["dim"]))
            for rec in doc.get("wires", [])
        ]
        n_in = len(doc.get("inputs", []))
        n_out = len(doc.get("outputs", []))
        scalar = _j2c(doc.get("scalar", [1.0, 0.0]))
        tags = tuple(
            Tag(t["name"], frozenset(int(n) for n in t["nodes"]),
                tuple(tuple(kv) for kv in t.get("meta", [])))
            for t in doc.get("tags", [])
        )
    except (KeyError, TypeError, ValueError, AttributeError) as exc:
        raise ParseError(f"malformed document: {exc}") from exc
    return Diagram(nodes, wires, n_in, n_out, scalar, tags)


_DOT_COLORS = {
    "ZSpider": "green3",
    "XSpider": "lightpink",
    "Hadamard": "yellow",
    "Dualiser": "orange",
    "WNode": "black",
    "Triangle": "gray80",
    "DimSplit": "skyblue",
    "MatrixBox": "white",
}


def to_dot(D: Diagram) -> str:
    lines = ["graph diagram {", "  rankdir=TB;"]
    lines.append("  { rank=source;")
    for p in range(D.n_in):
        lines.append(f'    in{p} [shape=plaintext, label="in {p}"];')
    lines.append("  }")
    lines.append("  { rank=sink;")
    for p in range(D.n_out):
        lines.append(f'    out{p} [shape=plaintext, label="out {p}"];')
    lines.append("  }")
    for nid, node in sorted(D.nodes.items()):
        name = type(node.kind).__name__
        color = _DOT_COLORS.get(name, "white")
        label = name
        if isinstance(node.kind, XSpider):
            label = f"X k={node.kind.phase}"
        elif isinstance(node.kind, ZSpider):
            label = "Z" if node.kind.params is None else "Z(params)"
        lines.append(
            f'  n{nid} [shape=circle, style=filled, fillcolor={color}, label="{label}"];'
        )
    for w in D.wires:
        names = []
        for e in w.ends():
            if is_node_end(e):
                names.append(f"n{e[1]}")
            else:
                names.append(f"{e[0]}{e[1]}")
        lines.append(f'  {names[0]} -- {names[1]} [label="{w.dim}"];')
    if D.scalar != 1:
        lines.append(f'  scalar [shape=plaintext, label="scalar = {D.scalar}"];')
    lines.append("}")
    return "\n".join(lines)
