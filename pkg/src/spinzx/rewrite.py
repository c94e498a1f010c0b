"""Numerically certified diagram rewriting.

Every rule must pass a certification grid — evaluation equality between
host diagrams before and after rewriting, over all wire-dimension
assignments in {2, 3, 4} compatible with the rule's pattern with five
random parameter bindings each — before it can be applied.  Matching is
exact-structural; composite symmetrisers are matched through their tags.
"""

from __future__ import annotations

import cmath
import math
from dataclasses import dataclass, field

import numpy as np

from .diagram import (
    IN,
    OUT,
    Diagram,
    Dualiser,
    Hadamard,
    Node,
    Tag,
    Wire,
    XSpider,
    ZSpider,
    compose,
    hadamard,
    identity,
    is_node_end,
    tensor,
    x_spider,
    z_spider,
    dualiser,
)
from .errors import SoundnessFailure, StaleSite, ValidationError
from .evaluate import DEFAULT_CONFIG, EvalConfig, evaluate, node_tensor, tensors_close
from .constructors import symmetriser


# ---------------------------------------------------------------------------
# Sites and shared plumbing


@dataclass(frozen=True)
class MatchSite:
    """An embedding of a rule's left-hand side into a host diagram."""

    rule_name: str
    nodes: tuple
    wires: tuple = ()
    detail: tuple = ()
    fingerprint: int = 0

    def summary(self) -> str:
        return f"nodes {sorted(self.nodes)}"


def _fingerprint(D: Diagram) -> int:
    nodes = tuple(sorted((nid, repr(n.kind), n.n_in, n.n_out) for nid, n in D.nodes.items()))
    return hash((nodes, D.wires, D.n_in, D.n_out, D.scalar))


def _port_wires(D: Diagram):
    """Map (node_id, port) -> wire index."""
    pw = {}
    for idx, w in enumerate(D.wires):
        for e in w.ends():
            if is_node_end(e):
                pw[(e[1], e[2])] = idx
    return pw


def _keep_tags(D: Diagram, removed_nodes):
    return tuple(t for t in D.tags if not (t.nodes & removed_nodes))


def _zamp(params, k: int) -> complex:
    """Amplitude a_k of a Z spider's parameter vector (a_0 = 1)."""
    if k == 0:
        return 1.0 + 0j
    if params is None:
        return 1.0 + 0j
    if k - 1 < len(params):
        return complex(params[k - 1])
    return 0.0 + 0j


def _is_trivial_z(kind) -> bool:
    if not isinstance(kind, ZSpider):
        return False
    return kind.params is None or all(p == 1 for p in kind.params)


def _resolve(host_edges, D_scalar):
    """Resolve junction-labelled edges into plain wires plus loop scalars.

    ``host_edges`` is a list of (endA, endB, dim) where junction ends are
    tuples starting with "junction"; each junction label must occur exactly
    twice.  Returns (wires, scalar_factor).
    """
    incident = {}
    for idx, (a, b, _) in enumerate(host_edges):
        for e in (a, b):
            if e[0] == "junction":
                incident.setdefault(e, []).append(idx)
    for junc, idxs in incident.items():
        if len(idxs) != 2:
            raise ValidationError(f"junction {junc} touched {len(idxs)} wire ends")
    used = [False] * len(host_edges)
    wires = []
    scalar = 1.0 + 0j

    def walk(idx, end):
        while end[0] == "junction":
            used[idx] = True
            nxt = None
            for i in incident[end]:
                if i != idx:
                    nxt = i
                    break
            if nxt is None:
                return None
            idx = nxt
            a, b, _ = host_edges[idx]
            end = b if a == end else a
        used[idx] = True
        return end

    for idx, (a, b, dim) in enumerate(host_edges):
        if used[idx]:
            continue
        if a[0] != "junction" and b[0] != "junction":
            used[idx] = True
            wires.append(Wire(a, b, dim))
        elif a[0] != "junction":
            used[idx] = True
            term = walk(idx, b)
            wires.append(Wire(a, term, dim))
        elif b[0] != "junction":
            used[idx] = True
            term = walk(idx, a)
            wires.append(Wire(b, term, dim))
    for idx, (a, b, dim) in enumerate(host_edges):
        if used[idx]:
            continue
        used[idx] = True
        end = b
        cur = idx
        while True:
            nxt = [i for i in incident[end] if i != cur and not used[i]]
            if not nxt:
                break
            cur = nxt[0]
            used[cur] = True
            ea, eb, _ = host_edges[cur]
            end = eb if ea == end else ea
        scalar *= dim
    return wires, D_scalar * scalar


def _splice(D: Diagram, node_set, crossing_in, crossing_out, R: Diagram,
            scalar_factor=1.0) -> Diagram:
    """Replace ``node_set`` (and every wire touching it) by diagram R.

    ``crossing_in[i]`` / ``crossing_out[o]`` give (wire_index, inside_end)
    assigning host wires to R's boundary slots; a wire appearing in both
    lists (a trace wire) gets junctions at both ends.
    """
    node_set = set(node_set)
    if len(crossing_in) != R.n_in or len(crossing_out) != R.n_out:
        raise ValidationError("replacement boundary does not match crossing wires")
    jin = {}
    jout = {}
    for i, (widx, end) in enumerate(crossing_in):
        jin.setdefault(widx, []).append((end, ("junction", "in", i)))
    for o, (widx, end) in enumerate(crossing_out):
        jout.setdefault(widx, []).append((end, ("junction", "out", o)))

    edges = []
    for idx, w in enumerate(D.wires):
        ends = list(w.ends())
        subs = (jin.get(idx) or []) + (jout.get(idx) or [])
        if subs:
            for end, label in subs:
                if end not in ends:
                    raise ValidationError("crossing end not on wire")
                ends[ends.index(end)] = label
            edges.append((ends[0], ends[1], w.dim))
            continue
        touches = [e for e in w.ends() if is_node_end(e) and e[1] in node_set]
        if len(touches) == 2:
            continue  # fully internal to the replaced fragment
        if touches:
            raise ValidationError("wire touching replaced nodes was not assigned")
        edges.append((w.a, w.b, w.dim))

    nodes = {nid: n for nid, n in D.nodes.items() if nid not in node_set}
    offset = max(nodes, default=-1) + 1
    rmap = {nid: nid + offset for nid in R.nodes}
    nodes.update({rmap[nid]: n for nid, n in R.nodes.items()})
    for w in R.wires:
        ends = []
        for e in w.ends():
            if is_node_end(e):
                ends.append(("node", rmap[e[1]], e[2]))
            elif e[0] == IN:
                ends.append(("junction", "in", e[1]))
            else:
                ends.append(("junction", "out", e[1]))
        edges.append((ends[0], ends[1], w.dim))

    wires, scalar = _resolve(edges, D.scalar * R.scalar * scalar_factor)
    tags = list(_keep_tags(D, node_set))
    for t in R.tags:
        tags.append(Tag(t.name, frozenset(rmap[n] for n in t.nodes), t.meta))
    return Diagram(nodes, wires, D.n_in, D.n_out, scalar, tags)


def partial_trace(D: Diagram, in_pos: int, out_pos: int) -> Diagram:
    """Connect input slot ``in_pos`` to output slot ``out_pos`` directly."""
    win = wout = None
    for idx, w in enumerate(D.wires):
        if (IN, in_pos) in w.ends():
            win = idx
        if (OUT, out_pos) in w.ends():
            wout = idx
    if win is None or wout is None:
        raise ValidationError("boundary slot not found")

    def shift(end):
        if is_node_end(end):
            return end
        side, pos = end
        if side == IN and pos > in_pos:
            return (IN, pos - 1)
        if side == OUT and pos > out_pos:
            return (OUT, pos - 1)
        return end

    wires = []
    scalar = D.scalar
    if win == wout:
        # The slot pair was one straight wire: closing it traces a loop.
        scalar *= D.wires[win].dim
        for idx, w in enumerate(D.wires):
            if idx != win:
                wires.append(Wire(shift(w.a), shift(w.b), w.dim))
    else:
        wa = D.wires[win]
        wb = D.wires[wout]
        if wa.dim != wb.dim:
            raise ValidationError("cannot trace wires of different dims")
        enda = wa.other((IN, in_pos))
        endb = wb.other((OUT, out_pos))
        for idx, w in enumerate(D.wires):
            if idx in (win, wout):
                continue
            wires.append(Wire(shift(w.a), shift(w.b), w.dim))
        wires.append(Wire(shift(enda), shift(endb), wa.dim))
    return Diagram(D.nodes, wires, D.n_in - 1, D.n_out - 1, scalar, D.tags)


# ---------------------------------------------------------------------------
# Rule framework


class RewriteRule:
    """Base class: structural matcher + applier + certification hosts."""

    name = "abstract"
    anchor = ""

    def find(self, D: Diagram):
        raise NotImplementedError

    def apply(self, D: Diagram, site: MatchSite) -> Diagram:
        raise NotImplementedError

    def certification_hosts(self, rng):
        """Yield (binding description, host diagram) pairs for the grid."""
        raise NotImplementedError

    def _sites(self, D, raw):
        fp = _fingerprint(D)
        sites = [
            MatchSite(self.name, tuple(nodes), tuple(wires), tuple(detail), fp)
            for nodes, wires, detail in raw
        ]
        return sorted(sites, key=lambda s: (sorted(s.nodes), s.wires))


def _rand_params(rng, length):
    if length <= 0:
        return None
    r = rng.uniform(0, 1, length) ** 0.5
    th = rng.uniform(0, 2 * math.pi, length)
    return tuple(r * np.exp(1j * th))


GRID_DIMS = (2, 3, 4)
GRID_SAMPLES = 5


class ZFusionRule(RewriteRule):
    """Two connected Z spiders merge; parameter vectors multiply pointwise,
    truncated at the smallest leg dimension of either spider."""

    name = "z-fusion"
    anchor = "same-colour spider fusion (Z family)"

    def find(self, D):
        raw = []
        seen = set()
        for idx, w in enumerate(D.wires):
            a, b = w.ends()
            if not (is_node_end(a) and is_node_end(b)):
                continue
            na, nb = a[1], b[1]
            if na == nb:
                continue
            if not (isinstance(D.nodes[na].kind, ZSpider) and isinstance(D.nodes[nb].kind, ZSpider)):
                continue
            pair = tuple(sorted((na, nb)))
            if pair in seen:
                continue
            seen.add(pair)
            conns = tuple(
                i
                for i, ww in enumerate(D.wires)
                if all(is_node_end(e) and e[1] in pair for e in ww.ends())
            )
            raw.append((pair, conns, ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        na, nb = site.nodes
        conns = set(site.wires)
        pw = _port_wires(D)
        node_a, node_b = D.nodes[na], D.nodes[nb]

        def leg_dims(nid, node):
            return [D.wires[pw[(nid, p)]].dim for p in range(node.n_legs)]

        min_a = min(leg_dims(na, node_a))
        min_b = min(leg_dims(nb, node_b))
        M = min(min_a, min_b)
        pa, pb = node_a.kind.params, node_b.kind.params
        merged = tuple(_zamp(pa, k) * _zamp(pb, k) for k in range(1, M))

        def remaining(nid, node, want_input):
            out = []
            for p in range(node.n_legs):
                if (p < node.n_in) != want_input:
                    continue
                widx = pw[(nid, p)]
                if widx in conns:
                    continue
                out.append((widx, ("node", nid, p)))
            return out

        ins = remaining(na, node_a, True) + remaining(nb, node_b, True)
        outs = remaining(na, node_a, False) + remaining(nb, node_b, False)
        new_id = D.fresh_id()
        legless = not ins and not outs
        kind = ZSpider(params=merged, dim=M if legless else None)
        new_node = Node(kind, len(ins), len(outs))

        end_map = {}
        for slot, (widx, end) in enumerate(ins + outs):
            end_map[(widx, end)] = ("node", new_id, slot)
        nodes = {nid: n for nid, n in D.nodes.items() if nid not in (na, nb)}
        nodes[new_id] = new_node
        wires = []
        for idx, w in enumerate(D.wires):
            if idx in conns:
                continue
            ends = [end_map.get((idx, e), e) for e in w.ends()]
            wires.append(Wire(ends[0], ends[1], w.dim))
        return Diagram(nodes, wires, D.n_in, D.n_out, D.scalar, _keep_tags(D, {na, nb}))

    def certification_hosts(self, rng):
        for da in GRID_DIMS:
            for dc in GRID_DIMS:
                for db in GRID_DIMS:
                    for _ in range(GRID_SAMPLES):
                        pa = _rand_params(rng, min(da, dc) - 1)
                        pb = _rand_params(rng, min(dc, db) - 1)
                        host = compose(
                            z_spider(1, 1, [da, dc], params=pa),
                            z_spider(1, 1, [dc, db], params=pb),
                        )
                        yield (f"dims=({da},{dc},{db})", host)
        for dc in GRID_DIMS:
            for _ in range(GRID_SAMPLES):
                pa = _rand_params(rng, dc - 1)
                pb = _rand_params(rng, dc - 1)
                # double connector
                host = compose(z_spider(1, 2, dc, params=pa), z_spider(2, 1, dc, params=pb))
                yield (f"double-wire d={dc}", host)
                # closed pair folding to a legless spider
                host = compose(z_spider(0, 1, dc, params=pa), z_spider(1, 0, dc, params=pb))
                yield (f"closed d={dc}", host)


class XFusionRule(RewriteRule):
    """Adjacent X spiders joined output-to-input fuse; phases add mod d."""

    name = "x-fusion"
    anchor = "same-colour spider fusion (X family)"

    def find(self, D):
        raw = []
        for idx, w in enumerate(D.wires):
            a, b = w.ends()
            if not (is_node_end(a) and is_node_end(b)):
                continue
            na, nb = a[1], b[1]
            if na == nb:
                continue
            node_a, node_b = D.nodes[na], D.nodes[nb]
            if not (isinstance(node_a.kind, XSpider) and isinstance(node_b.kind, XSpider)):
                continue
            if node_a.n_legs + node_b.n_legs <= 2:
                continue  # a legless result has different scalar semantics
            conn_count = sum(
                1
                for ww in D.wires
                if all(is_node_end(e) and e[1] in (na, nb) for e in ww.ends())
            )
            if conn_count != 1:
                continue
            a_is_out = a[2] >= node_a.n_in
            b_is_out = b[2] >= node_b.n_in
            if a_is_out == b_is_out:
                continue  # only output-to-input joins fuse plainly
            raw.append((tuple(sorted((na, nb))), (idx,), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        na, nb = site.nodes
        (conn,) = site.wires
        pw = _port_wires(D)
        node_a, node_b = D.nodes[na], D.nodes[nb]
        d = node_a.kind.dim
        phase = (node_a.kind.phase + node_b.kind.phase) % d

        def remaining(nid, node, want_input):
            return [
                (pw[(nid, p)], ("node", nid, p))
                for p in range(node.n_legs)
                if (p < node.n_in) == want_input and pw[(nid, p)] != conn
            ]

        ins = remaining(na, node_a, True) + remaining(nb, node_b, True)
        outs = remaining(na, node_a, False) + remaining(nb, node_b, False)
        new_id = D.fresh_id()
        nodes = {nid: n for nid, n in D.nodes.items() if nid not in (na, nb)}
        nodes[new_id] = Node(XSpider(d, phase), len(ins), len(outs))
        end_map = {}
        for slot, (widx, end) in enumerate(ins + outs):
            end_map[(widx, end)] = ("node", new_id, slot)
        wires = []
        for idx, w in enumerate(D.wires):
            if idx == conn:
                continue
            ends = [end_map.get((idx, e), e) for e in w.ends()]
            wires.append(Wire(ends[0], ends[1], w.dim))
        return Diagram(nodes, wires, D.n_in, D.n_out, D.scalar, _keep_tags(D, {na, nb}))

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            for _ in range(GRID_SAMPLES):
                p1, p2 = int(rng.integers(0, d)), int(rng.integers(0, d))
                yield (
                    f"d={d} chain",
                    compose(x_spider(1, 1, d, p1), x_spider(1, 1, d, p2)),
                )
                yield (
                    f"d={d} branch",
                    compose(x_spider(2, 1, d, p1), x_spider(1, 2, d, p2)),
                )


class _IdentityRule(RewriteRule):
    """Shared machinery for removing trivial 1-in/1-out spiders."""

    def _is_identity(self, D, nid, node):
        raise NotImplementedError

    def find(self, D):
        pw = _port_wires(D)
        raw = []
        for nid, node in sorted(D.nodes.items()):
            if node.n_in != 1 or node.n_out != 1:
                continue
            if not self._is_identity(D, nid, node):
                continue
            w_in, w_out = pw[(nid, 0)], pw[(nid, 1)]
            if D.wires[w_in].dim != D.wires[w_out].dim:
                continue
            raw.append(((nid,), tuple(sorted({w_in, w_out})), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        (nid,) = site.nodes
        pw = _port_wires(D)
        w_in, w_out = pw[(nid, 0)], pw[(nid, 1)]
        nodes = {k: n for k, n in D.nodes.items() if k != nid}
        scalar = D.scalar
        wires = [w for i, w in enumerate(D.wires) if i not in (w_in, w_out)]
        if w_in == w_out:
            scalar *= D.wires[w_in].dim
        else:
            fa = D.wires[w_in].other(("node", nid, 0))
            fb = D.wires[w_out].other(("node", nid, 1))
            wires.append(Wire(fa, fb, D.wires[w_in].dim))
        return Diagram(nodes, wires, D.n_in, D.n_out, scalar, _keep_tags(D, {nid}))


class ZIdentityRule(_IdentityRule):
    """A trivially-parameterized 1-in/1-out Z spider is a plain wire."""

    name = "z-identity"
    anchor = "identity-spider removal (Z family)"

    def _is_identity(self, D, nid, node):
        if not isinstance(node.kind, ZSpider):
            return False
        if not _is_trivial_z(node.kind):
            return False
        if node.kind.params is not None:
            pw = _port_wires(D)
            dims = [D.wires[pw[(nid, p)]].dim for p in range(2)]
            if len(node.kind.params) < min(dims) - 1:
                return False  # implicit zero tail: not the identity
        return True

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            yield (f"d={d} open", z_spider(1, 1, d))
            nodes = {0: Node(ZSpider(), 1, 1)}
            wires = [Wire(("node", 0, 0), ("node", 0, 1), d)]
            yield (f"d={d} loop", Diagram(nodes, wires, 0, 0))
            for _ in range(GRID_SAMPLES - 2):
                p = _rand_params(rng, d - 1)
                host = compose(z_spider(1, 1, d), z_spider(1, 1, d, params=p))
                yield (f"d={d} chained", host)


class XIdentityRule(_IdentityRule):
    """A phase-0 1-in/1-out X spider is a plain wire."""

    name = "x-identity"
    anchor = "identity-spider removal (X family)"

    def _is_identity(self, D, nid, node):
        k = node.kind
        return isinstance(k, XSpider) and k.phase % k.dim == 0

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            yield (f"d={d} open", x_spider(1, 1, d, 0))
            nodes = {0: Node(XSpider(d, 0), 1, 1)}
            wires = [Wire(("node", 0, 0), ("node", 0, 1), d)]
            yield (f"d={d} loop", Diagram(nodes, wires, 0, 0))
            for _ in range(GRID_SAMPLES - 2):
                p = int(rng.integers(0, d))
                yield (f"d={d} chained", compose(x_spider(1, 1, d, 0), x_spider(1, 1, d, p)))


class DualiserCancelRule(RewriteRule):
    """Two connected dualisers cancel to a plain wire."""

    name = "dualiser-cancel"
    anchor = "dualiser involution"

    def find(self, D):
        raw = []
        seen = set()
        for idx, w in enumerate(D.wires):
            a, b = w.ends()
            if not (is_node_end(a) and is_node_end(b)):
                continue
            na, nb = a[1], b[1]
            if na == nb:
                continue
            if not (
                isinstance(D.nodes[na].kind, Dualiser)
                and isinstance(D.nodes[nb].kind, Dualiser)
            ):
                continue
            pair = tuple(sorted((na, nb)))
            if pair in seen:
                continue
            seen.add(pair)
            raw.append((pair, (idx,), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        na, nb = site.nodes
        (conn,) = site.wires
        pw = _port_wires(D)
        d = D.nodes[na].kind.dim

        def other_leg(nid):
            # the connector occupies one port; pick the other port's wire
            for p in range(2):
                if pw[(nid, p)] != conn:
                    return pw[(nid, p)], p
            raise StaleSite("dualiser pair no longer matches")

        wa, pa = other_leg(na)
        wb, pb = other_leg(nb)
        nodes = {k: n for k, n in D.nodes.items() if k not in (na, nb)}
        scalar = D.scalar
        removed = {conn, wa, wb}
        wires = [w for i, w in enumerate(D.wires) if i not in removed]
        if wa == wb:
            scalar *= d  # the second wire also joins the pair: closed loop
        else:
            fa = D.wires[wa].other(("node", na, pa))
            fb = D.wires[wb].other(("node", nb, pb))
            wires.append(Wire(fa, fb, d))
        return Diagram(nodes, wires, D.n_in, D.n_out, scalar, _keep_tags(D, {na, nb}))

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            yield (f"d={d} chain", compose(dualiser(d), dualiser(d)))
            nodes = {0: Node(Dualiser(d), 1, 1), 1: Node(Dualiser(d), 1, 1)}
            wires = [
                Wire(("node", 0, 1), ("node", 1, 0), d),
                Wire(("node", 1, 1), ("node", 0, 0), d),
            ]
            yield (f"d={d} closed", Diagram(nodes, wires, 0, 0))
            host = compose(compose(dualiser(d), dualiser(d)), x_spider(1, 1, d, 1))
            yield (f"d={d} context", host)


class ScalarFoldRule(RewriteRule):
    """A legless node is folded into the global scalar."""

    name = "scalar-fold"
    anchor = "empty-spider elimination"

    def find(self, D):
        raw = []
        for nid, node in sorted(D.nodes.items()):
            if node.n_legs == 0:
                raw.append(((nid,), (), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        (nid,) = site.nodes
        value = complex(node_tensor(D.nodes[nid].kind, 0, 0, []))
        nodes = {k: n for k, n in D.nodes.items() if k != nid}
        return Diagram(
            nodes, D.wires, D.n_in, D.n_out, D.scalar * value, _keep_tags(D, {nid})
        )

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            for _ in range(GRID_SAMPLES):
                p = _rand_params(rng, d - 1)
                nodes = {0: Node(ZSpider(params=p, dim=d), 0, 0)}
                wires = [Wire((IN, 0), (OUT, 0), 2)]
                yield (f"d={d} legless-z", Diagram(nodes, wires, 1, 1))
            for phase in range(d):
                nodes = {0: Node(XSpider(d, phase), 0, 0)}
                yield (f"d={d} legless-x p={phase}", Diagram(nodes, [], 0, 0))


class BialgebraRule(RewriteRule):
    """X-adder followed by Z-copier commutes to copies-then-adders."""

    name = "copy-add-bialgebra"
    anchor = "Z/X bialgebra commutation"

    def find(self, D):
        raw = []
        for idx, w in enumerate(D.wires):
            a, b = w.ends()
            if not (is_node_end(a) and is_node_end(b)):
                continue
            for x_end, z_end in ((a, b), (b, a)):
                nx, nz = x_end[1], z_end[1]
                node_x, node_z = D.nodes[nx], D.nodes[nz]
                if not isinstance(node_x.kind, XSpider) or not isinstance(node_z.kind, ZSpider):
                    continue
                if (node_x.n_in, node_x.n_out) != (2, 1):
                    continue
                if (node_z.n_in, node_z.n_out) != (1, 2):
                    continue
                if not _is_trivial_z(node_z.kind):
                    continue
                if x_end[2] != 2 or z_end[2] != 0:
                    continue  # must join X's output to Z's input
                pw = _port_wires(D)
                dims = {D.wires[pw[(nx, p)]].dim for p in range(3)}
                dims |= {D.wires[pw[(nz, p)]].dim for p in range(3)}
                if dims != {node_x.kind.dim}:
                    continue
                raw.append(((nx, nz), (idx,), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        nx, nz = site.nodes
        (conn,) = site.wires
        pw = _port_wires(D)
        d = D.nodes[nx].kind.dim
        phase = D.nodes[nx].kind.phase
        wa, wb = pw[(nx, 0)], pw[(nx, 1)]
        wc, wd = pw[(nz, 1)], pw[(nz, 2)]
        base = D.fresh_id()
        z1, z2, x1, x2 = base, base + 1, base + 2, base + 3
        nodes = {k: n for k, n in D.nodes.items() if k not in (nx, nz)}
        nodes[z1] = Node(ZSpider(), 1, 2)
        nodes[z2] = Node(ZSpider(), 1, 2)
        nodes[x1] = Node(XSpider(d, phase), 2, 1)
        nodes[x2] = Node(XSpider(d, phase), 2, 1)
        end_map = {
            (wa, ("node", nx, 0)): ("node", z1, 0),
            (wb, ("node", nx, 1)): ("node", z2, 0),
            (wc, ("node", nz, 1)): ("node", x1, 2),
            (wd, ("node", nz, 2)): ("node", x2, 2),
        }
        wires = []
        for idx, w in enumerate(D.wires):
            if idx == conn:
                continue
            ends = [end_map.get((idx, e), e) for e in w.ends()]
            wires.append(Wire(ends[0], ends[1], w.dim))
        wires += [
            Wire(("node", z1, 1), ("node", x1, 0), d),
            Wire(("node", z1, 2), ("node", x2, 0), d),
            Wire(("node", z2, 1), ("node", x1, 1), d),
            Wire(("node", z2, 2), ("node", x2, 1), d),
        ]
        return Diagram(nodes, wires, D.n_in, D.n_out, D.scalar, _keep_tags(D, {nx, nz}))

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            for _ in range(GRID_SAMPLES):
                phase = int(rng.integers(0, d))
                host = compose(x_spider(2, 1, d, phase), z_spider(1, 2, d))
                yield (f"d={d} p={phase}", host)


class HadamardXStateRule(RewriteRule):
    """A Hadamard applied to an X basis state is a phase-vector Z state."""

    name = "hadamard-x-state"
    anchor = "Fourier transform of a basis state"

    def find(self, D):
        raw = []
        for idx, w in enumerate(D.wires):
            a, b = w.ends()
            if not (is_node_end(a) and is_node_end(b)):
                continue
            for x_end, h_end in ((a, b), (b, a)):
                nxid, nhid = x_end[1], h_end[1]
                node_x, node_h = D.nodes[nxid], D.nodes[nhid]
                if not isinstance(node_x.kind, XSpider) or not isinstance(node_h.kind, Hadamard):
                    continue
                if node_h.kind.dagger:
                    continue
                if (node_x.n_in, node_x.n_out) != (0, 1) or h_end[2] != 0:
                    continue
                raw.append(((nxid, nhid), (idx,), ()))
        return self._sites(D, raw)

    def apply(self, D, site):
        nxid, nhid = site.nodes
        if not isinstance(D.nodes[nxid].kind, XSpider):
            nxid, nhid = nhid, nxid
        (conn,) = site.wires
        pw = _port_wires(D)
        d = D.nodes[nxid].kind.dim
        k = D.nodes[nxid].kind.phase
        omega = cmath.exp(-2j * math.pi * k / d)
        params = tuple(omega**j for j in range(1, d))
        new_id = D.fresh_id()
        nodes = {nid: n for nid, n in D.nodes.items() if nid not in (nxid, nhid)}
        nodes[new_id] = Node(ZSpider(params=params), 0, 1)
        wires = []
        for idx, w in enumerate(D.wires):
            if idx == conn:
                continue
            ends = [
                ("node", new_id, 0) if e == ("node", nhid, 1) else e for e in w.ends()
            ]
            wires.append(Wire(ends[0], ends[1], w.dim))
        return Diagram(
            nodes,
            wires,
            D.n_in,
            D.n_out,
            D.scalar / math.sqrt(d),
            _keep_tags(D, {nxid, nhid}),
        )

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            for k in range(d):
                yield (f"d={d} k={k}", compose(x_spider(0, 1, d, k), hadamard(d)))


# ---------------------------------------------------------------------------
# Symmetriser macro rules


def _sym_views(D: Diagram):
    """Intact symmetriser composites: (all_nodes, input_half_nodes, n)."""
    present = set(D.nodes)
    halves = [t for t in D.tags if t.name == "symmetriser-half"]
    views = []
    for t in D.tags:
        if t.name != "symmetriser":
            continue
        if not t.nodes <= present:
            continue
        n = dict(t.meta).get("n")
        half = next((h for h in halves if h.nodes <= t.nodes), None)
        if half is None or n is None:
            continue
        views.append((t.nodes, half.nodes, n))
    views.sort(key=lambda v: min(v[0]))
    return views


_CANONICAL_INTERNALS = {}


def _canonical_internal_count(n: int) -> int:
    if n not in _CANONICAL_INTERNALS:
        S = symmetriser(n)
        _CANONICAL_INTERNALS[n] = sum(
            1 for w in S.wires if all(is_node_end(e) for e in w.ends())
        )
    return _CANONICAL_INTERNALS[n]


def _tag_wires(D, nodes):
    """(internal wire idxs, external (wire idx, inside end) pairs)."""
    internal, external = [], []
    for idx, w in enumerate(D.wires):
        inside = [e for e in w.ends() if is_node_end(e) and e[1] in nodes]
        if len(inside) == 2:
            internal.append(idx)
        elif len(inside) == 1:
            external.append((idx, inside[0]))
    return internal, external


class SymmetriserLoopRule(RewriteRule):
    """Tracing one leg pair of an n-strand symmetriser leaves an
    (n-1)-strand symmetriser scaled by (n+1)/n."""

    name = "symmetriser-loop"
    anchor = "partial trace of the symmetric projector"

    def find(self, D):
        raw = []
        for nodes, half, n in _sym_views(D):
            internal, _ = _tag_wires(D, nodes)
            extra = len(internal) - _canonical_internal_count(n)
            if extra <= 0:
                continue
            for idx in internal:
                w = D.wires[idx]
                if w.dim != 2 and n >= 2:
                    continue
                sides = {e[1] in half for e in w.ends()}
                if sides != {True, False}:
                    continue
                if n == 1 and len(internal) != 2:
                    continue
                raw.append((tuple(sorted(nodes)), (idx,), (("n", n),)))
                break  # one trace at a time per composite
        return self._sites(D, raw)

    def apply(self, D, site):
        n = dict(site.detail)["n"]
        nodes = set(site.nodes)
        half = next(v[1] for v in _sym_views(D) if set(v[0]) == nodes)
        (trace_idx,) = site.wires
        internal, external = _tag_wires(D, nodes)
        if n == 1:
            from .diagram import empty_diagram

            return _splice(D, nodes, [], [], empty_diagram(2.0))
        ins, outs = [], []
        for idx, end in external:
            if end[1] in half:
                ins.append((idx, end))
            else:
                outs.append((idx, end))
        # Any further trace wires are preserved: each occupies one input and
        # one output slot of the replacement, so junction resolution turns it
        # back into a trace wire on the smaller symmetriser.
        extra = len(internal) - _canonical_internal_count(n)
        kept = 0
        for idx in internal:
            if idx == trace_idx or kept >= extra - 1:
                continue
            w = D.wires[idx]
            if w.dim != 2:
                continue
            e_in = next((e for e in w.ends() if e[1] in half), None)
            if e_in is None or w.other(e_in)[1] in half:
                continue
            ins.append((idx, e_in))
            outs.append((idx, w.other(e_in)))
            kept += 1
        R = symmetriser(n - 1).scaled((n + 1) / n)
        return _splice(D, nodes, ins, outs, R)

    def certification_hosts(self, rng):
        for n in (1, 2, 3, 4):
            S = symmetriser(n)
            yield (f"n={n} trace-last", partial_trace(S, n - 1, n - 1))
            if n >= 2:
                yield (f"n={n} trace-cross", partial_trace(S, 0, n - 1))


class SymmetriserMergeRule(RewriteRule):
    """A k-strand symmetriser feeding k legs of one side of an n-strand
    symmetriser (k <= n) is absorbed."""

    name = "symmetriser-merge"
    anchor = "symmetriser idempotence and stacking absorption"

    def find(self, D):
        views = _sym_views(D)
        raw = []
        for ia, (nodes_a, half_a, n) in enumerate(views):
            internal_a, _ = _tag_wires(D, nodes_a)
            if len(internal_a) != _canonical_internal_count(n):
                continue
            for ib, (nodes_b, half_b, k) in enumerate(views):
                if ia == ib or k > n:
                    continue
                internal_b, _ = _tag_wires(D, nodes_b)
                if len(internal_b) != _canonical_internal_count(k):
                    continue
                between = [
                    idx
                    for idx, w in enumerate(D.wires)
                    if any(is_node_end(e) and e[1] in nodes_a for e in w.ends())
                    and any(is_node_end(e) and e[1] in nodes_b for e in w.ends())
                ]
                if len(between) != k:
                    continue
                a_sides = {
                    next(e for e in D.wires[i].ends() if e[1] in nodes_a)[1] in half_a
                    for i in between
                }
                b_sides = {
                    next(e for e in D.wires[i].ends() if e[1] in nodes_b)[1] in half_b
                    for i in between
                }
                if len(a_sides) != 1 or len(b_sides) != 1:
                    continue
                raw.append(
                    (
                        tuple(sorted(nodes_a | nodes_b)),
                        tuple(sorted(between)),
                        (("n", n), ("k", k), ("a", min(nodes_a)), ("b", min(nodes_b))),
                    )
                )
        return self._sites(D, raw)

    def apply(self, D, site):
        detail = dict(site.detail)
        n = detail["n"]
        views = _sym_views(D)
        nodes_a, half_a, _ = next(v for v in views if min(v[0]) == detail["a"])
        nodes_b, half_b, _ = next(v for v in views if min(v[0]) == detail["b"])
        between = set(site.wires)
        all_nodes = set(nodes_a) | set(nodes_b)
        _, external = _tag_wires(D, all_nodes)
        # B's free side and A's untouched legs on the consumed side join one
        # side of the new symmetriser; A's far side is the other.
        a_consumed_input = next(
            e for i in between for e in (D.wires[i].ends()) if e[1] in nodes_a
        )[1] in half_a
        new_side_a, far_side, b_free = [], [], []
        for idx, end in external:
            if end[1] in nodes_b:
                b_free.append((idx, end))
            elif (end[1] in half_a) == a_consumed_input:
                new_side_a.append((idx, end))
            else:
                far_side.append((idx, end))
        near = b_free + new_side_a
        R = symmetriser(n)
        if a_consumed_input:
            return _splice(D, all_nodes, near, far_side, R)
        return _splice(D, all_nodes, far_side, near, R)

    def certification_hosts(self, rng):
        for n in (1, 2, 3):
            yield (f"n={n} idempotence", compose(symmetriser(n), symmetriser(n)))
        for n, k in ((2, 1), (3, 2), (4, 2)):
            inner = tensor(symmetriser(k), identity(2, n - k))
            yield (f"n={n} k={k} below", compose(inner, symmetriser(n)))
            yield (f"n={n} k={k} above", compose(symmetriser(n), inner))
        yield ("n=3 k=2 offset", compose(tensor(identity(2, 1), symmetriser(2)), symmetriser(3)))


class FoldClosedComponentRule(RewriteRule):
    """A boundary-free connected component is evaluated into the scalar."""

    name = "fold-closed-component"
    anchor = "closed-subdiagram numeric folding"

    def __init__(self, cfg: EvalConfig = DEFAULT_CONFIG):
        self.cfg = cfg

    def find(self, D):
        parent = {nid: nid for nid in D.nodes}

        def root(x):
            while parent[x] != x:
                parent[x] = parent[parent[x]]
                x = parent[x]
            return x

        open_nodes = set()
        for w in D.wires:
            ends = w.ends()
            node_ends = [e for e in ends if is_node_end(e)]
            if len(node_ends) == 2:
                ra, rb = root(node_ends[0][1]), root(node_ends[1][1])
                parent[ra] = rb
            elif len(node_ends) == 1:
                open_nodes.add(node_ends[0][1])
        comps = {}
        for nid in D.nodes:
            comps.setdefault(root(nid), set()).add(nid)
        open_roots = {root(n) for n in open_nodes}
        raw = [
            (tuple(sorted(comp)), (), ())
            for r, comp in comps.items()
            if root(r) not in open_roots
        ]
        return self._sites(D, raw)

    def apply(self, D, site):
        comp = set(site.nodes)
        sub_nodes = {nid: D.nodes[nid] for nid in comp}
        sub_wires = []
        keep_wires = []
        for w in D.wires:
            inside = [e for e in w.ends() if is_node_end(e) and e[1] in comp]
            if len(inside) == 2:
                sub_wires.append(w)
            elif inside:
                raise StaleSite("component is no longer closed")
            else:
                keep_wires.append(w)
        sub = Diagram(sub_nodes, sub_wires, 0, 0)
        value = complex(evaluate(sub, self.cfg))
        nodes = {nid: n for nid, n in D.nodes.items() if nid not in comp}
        return Diagram(
            nodes,
            keep_wires,
            D.n_in,
            D.n_out,
            D.scalar * value,
            _keep_tags(D, comp),
        )

    def certification_hosts(self, rng):
        for d in GRID_DIMS:
            for _ in range(GRID_SAMPLES):
                pa = _rand_params(rng, d - 1)
                pb = _rand_params(rng, d - 1)
                closed = compose(z_spider(0, 1, d, params=pa), z_spider(1, 0, d, params=pb))
                yield (f"d={d} closed-pair", tensor(identity(2), closed))


# ---------------------------------------------------------------------------
# Certification and registry


def certify_rule(rule: RewriteRule, cfg: EvalConfig = DEFAULT_CONFIG, seed: int = 0):
    """Run the rule's certification grid; raise SoundnessFailure on the
    first counterexample, otherwise return the rule."""
    rng = np.random.default_rng(seed)
    matched_any = False
    for binding, host in rule.certification_hosts(rng):
        sites = rule.find(host)
        if not sites:
            continue
        matched_any = True
        before = evaluate(host, cfg)
        after = evaluate(rule.apply(host, sites[0]), cfg)
        diff = float(np.max(np.abs(before - after))) if before.size else 0.0
        scale = max(1.0, float(np.max(np.abs(before))) if before.size else 0.0)
        if diff > cfg.tolerance * scale:
            raise SoundnessFailure(
                rule_name=rule.name,
                binding=binding,
                lhs_tensor=before,
                rhs_tensor=after,
                max_diff=diff,
            )
    if not matched_any:
        raise SoundnessFailure(
            rule_name=rule.name,
            binding="<no certification host matched>",
            lhs_tensor=np.array(0.0),
            rhs_tensor=np.array(0.0),
            max_diff=float("inf"),
        )
    rule._certified = True
    return rule


def register_rule(rule: RewriteRule, registry: dict,
                  cfg: EvalConfig = DEFAULT_CONFIG, seed: int = 0):
    """Certify the rule and add it to the registry."""
    certify_rule(rule, cfg, seed)
    registry[rule.name] = rule
    return rule


_BUILTIN_CACHE = {}


def builtin_rules(cfg: EvalConfig = DEFAULT_CONFIG) -> dict:
    """The certified built-in rule registry (certification runs once)."""
    key = (cfg.tolerance, cfg.max_total_entries)
    if key not in _BUILTIN_CACHE:
        registry = {}
        for rule in (
            ScalarFoldRule(),
            ZIdentityRule(),
            XIdentityRule(),
            DualiserCancelRule(),
            ZFusionRule(),
            XFusionRule(),
            HadamardXStateRule(),
            BialgebraRule(),
            SymmetriserLoopRule(),
            SymmetriserMergeRule(),
            FoldClosedComponentRule(cfg),
        ):
            register_rule(rule, registry, cfg)
        _BUILTIN_CACHE[key] = registry
    return _BUILTIN_CACHE[key]


def find_matches(D: Diagram, rule: RewriteRule):
    """All sites of the rule in D, deterministically ordered."""
    if not getattr(rule, "_certified", False):
        raise SoundnessFailure(
            rule_name=rule.name,
            binding="<rule not certified>",
            lhs_tensor=np.array(0.0),
            rhs_tensor=np.array(0.0),
            max_diff=float("inf"),
        )
    return rule.find(D)


def apply_rule(D: Diagram, rule: RewriteRule, site: MatchSite,
               check: bool = False, cfg: EvalConfig = DEFAULT_CONFIG) -> Diagram:
    """Apply a previously matched site; StaleSite if D has changed."""
    if site.fingerprint != _fingerprint(D):
        raise StaleSite(f"site for rule {rule.name} no longer matches the diagram")
    out = rule.apply(D, site)
    if check and len(D.wires) <= 8:
        if not tensors_close(evaluate(D, cfg), evaluate(out, cfg), cfg):
            raise SoundnessFailure(
                rule_name=rule.name,
                binding=site.summary(),
                lhs_tensor=evaluate(D, cfg),
                rhs_tensor=evaluate(out, cfg),
                max_diff=float("nan"),
            )
    return out


_STRATEGIES = {
    "fuse": (
        "scalar-fold",
        "z-identity",
        "x-identity",
        "dualiser-cancel",
        "z-fusion",
        "x-fusion",
        "hadamard-x-state",
    ),
    "spin": (
        "symmetriser-loop",
        "symmetriser-merge",
        "scalar-fold",
        "z-identity",
        "x-identity",
        "dualiser-cancel",
        "z-fusion",
        "x-fusion",
        "hadamard-x-state",
    ),
    "full": (
        "symmetriser-loop",
        "symmetriser-merge",
        "scalar-fold",
        "z-identity",
        "x-identity",
        "dualiser-cancel",
        "z-fusion",
        "x-fusion",
        "hadamard-x-state",
        "fold-closed-component",
    ),
}


def simplify(D: Diagram, strategy: str = "full", max_steps: int = 1000,
             cfg: EvalConfig = DEFAULT_CONFIG):
    """Rewrite to fixpoint (or step cap) under the strategy's rule order.

    Returns (diagram, trace) where trace is a list of
    "step N: <rule-name> @ <site summary>" lines; a final "cap reached"
    line is appended if max_steps fired.
    """
    if strategy not in _STRATEGIES:
        raise ValidationError(f"unknown strategy {strategy!r}")
    registry = builtin_rules(cfg)
    order = [registry[name] for name in _STRATEGIES[strategy]]
    trace = []
    steps = 0
    while steps < max_steps:
        progressed = False
        for rule in order:
            sites = rule.find(D)
            if not sites:
                continue
            D = rule.apply(D, sites[0])
            steps += 1
            trace.append(f"step {steps}: {rule.name} @ {sites[0].summary()}")
            progressed = True
            break
        if not progressed:
            return D, trace
    trace.append(f"cap reached after {max_steps} steps")
    return D, trace
