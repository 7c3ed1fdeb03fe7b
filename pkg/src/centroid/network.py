"""Compile the analytic recursion into a static M-layer network.

The recursion only ever branches on data through gates of the form
1_+(t_l - a_1) where the shift vector a is an affine function of t, so the
whole computation unrolls into a fixed DAG once the measurement basis is
known.  Units are Threshold (0/1 with a half-value boundary band), ReLU,
and rectified polynomials (u_+)^d at the terminal layer.  Identical
subcomputations are shared by hash-consing on the symbolic term state.

Node semantics:  value = act(u(t)) * mult * sum_c sign_c * value(child_c),
with leaf nodes using an implicit sum of 1.  Head outputs are signed sums
of layer-0 node values.
"""

import itertools
import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CorruptDocument, SchemaMismatch, UnhandledPoleOrder, ZeroColumnEntry
from .exp_poly import ZERO_COL_TOL, root_terms_moment, root_terms_volume
from .ilt_engine import BOUNDARY_TOL, LDBL, Engine, _h_poly, _pole_groups, _split_rows

FORMAT_NAME = "slice-centroid-net"
FORMAT_VERSION = 1

ACT_THRESHOLD = "Threshold"
ACT_RELU = "ReLU"
ACT_RECTPOLY = "RectPoly"


@dataclass(frozen=True)
class Node:
    """One unit: activation over an affine form of t, scaled, summing children."""

    id: int
    layer: int
    act: str
    degree: int                 # polynomial degree; 1 for ReLU, 0 for Threshold
    u: np.ndarray               # length M+1: bias then per-coordinate weights
    mult: np.longdouble
    children: tuple             # tuple of (child_id, edge_weight)


@dataclass(frozen=True)
class NetStats:
    n_nodes: int
    nodes_per_layer: tuple
    n_edges: int
    n_requests: int             # subterm compilations requested before sharing
    dedup_ratio: float          # n_requests / n_nodes
    path_bound: int             # naive unshared leaf-path count (N+1)*N^(M-1) per head


@dataclass
class Network:
    """Static compiled network for one measurement basis."""

    N: int
    M: int
    V_s: np.ndarray
    basis_class: str
    perturbed: bool
    nodes: list
    heads: dict                 # "volume": ((id, sign), ...); "moments": tuple per k
    stats: NetStats = None
    _plans: dict = field(default_factory=dict, repr=False)
    _head_pos: dict = field(default=None, repr=False)

    def _layer_plan(self, dtype):
        """Per-layer vectorized evaluation plan, cached per dtype.

        Node parameters are compiled in extended precision; the float64
        plan is a cast-down copy used for high-throughput batch scoring.
        """
        key = np.dtype(dtype).char
        if key in self._plans:
            return self._plans[key]
        by_layer = [[] for _ in range(self.M)]
        for node in self.nodes:
            by_layer[node.layer].append(node)
        pos = {}
        plan = []
        for l, nodes in enumerate(by_layer):
            for i, node in enumerate(nodes):
                pos[node.id] = i
            U = (np.array([n.u for n in nodes], dtype=dtype)
                 if nodes else np.zeros((0, self.M + 1), dtype=dtype))
            mult = np.array([n.mult for n in nodes], dtype=dtype)
            deg = np.array([n.degree for n in nodes])
            is_thresh = np.array([n.act == ACT_THRESHOLD for n in nodes])
            plan.append({"nodes": nodes, "U": U, "mult": mult,
                         "deg": deg, "is_thresh": is_thresh})
        for l in range(self.M - 1):
            parents, childs, weights = [], [], []
            for i, node in enumerate(plan[l]["nodes"]):
                for cid, w in node.children:
                    parents.append(i)
                    childs.append(pos[cid])
                    weights.append(w)
            plan[l]["edges"] = (np.array(parents, dtype=int),
                                np.array(childs, dtype=int),
                                np.array(weights, dtype=dtype))
        if self._head_pos is None:
            self._head_pos = {
                name: tuple(tuple((pos[i], s) for i, s in head) for head in heads)
                if name == "moments" else tuple((pos[i], s) for i, s in heads)
                for name, heads in self.heads.items()
            }
        self._plans[key] = plan
        return plan

    def _forward_impl(self, T, dtype):
        plan = self._layer_plan(dtype)
        batch = T.shape[0]
        ones_T = np.hstack([np.ones((batch, 1), dtype=dtype), T.astype(dtype)])
        values = None
        for l in range(self.M - 1, -1, -1):
            layer = plan[l]
            u = layer["U"] @ ones_T.T            # (n_l, batch)
            act = np.where(u > 0.0, u, 0.0) ** np.maximum(layer["deg"], 1)[:, None]
            if np.any(layer["is_thresh"]):
                gate = np.where(u > BOUNDARY_TOL, 1.0,
                                np.where(u < -BOUNDARY_TOL, 0.0, 0.5)).astype(dtype)
                act = np.where(layer["is_thresh"][:, None], gate, act)
            if l == self.M - 1:
                values = act * layer["mult"][:, None]
            else:
                sums = np.zeros_like(u)
                par, chd, wgt = layer["edges"]
                if len(par):
                    np.add.at(sums, par, wgt[:, None] * values[chd])
                values = act * layer["mult"][:, None] * sums
        vol = np.zeros(batch, dtype=dtype)
        for i, s in self._head_pos["volume"]:
            vol += dtype(s) * values[i]
        mu = None
        if "moments" in self._head_pos:
            mu = np.zeros((batch, self.N), dtype=dtype)
            for k, head in enumerate(self._head_pos["moments"]):
                for i, s in head:
                    mu[:, k] += dtype(s) * values[i]
        return vol, mu

    def forward_batch(self, T):
        """Evaluate all heads for a batch of measurement vectors (float64).

        T has shape (batch, M).  Returns (vol, mu) with vol shape (batch,)
        and mu shape (batch, N) (mu is None when compiled without moments).
        """
        T = np.atleast_2d(np.asarray(T, dtype=float))
        vol, mu = self._forward_impl(T, np.float64)
        return vol, mu

    def forward(self, t):
        """Single-input evaluation at the network's native (extended)
        precision; returns (volume, moment vector or None) as float64."""
        t = np.asarray(t, dtype=float).reshape(1, -1)
        vol, mu = self._forward_impl(t, LDBL)
        return float(vol[0]), (None if mu is None else mu[0].astype(float))


# x86 extended precision occupies 10 of the 12/16 bytes per element; the
# rest is uninitialized padding that must not leak into memo keys
_LD_ITEM = np.dtype(LDBL).itemsize
_LD_VALID = 10 if _LD_ITEM in (12, 16) else _LD_ITEM


def _ld_bytes(arr):
    """Canonical bytes of a longdouble array (padding stripped)."""
    a = np.ascontiguousarray(arr, dtype=LDBL)
    raw = a.reshape(-1).view(np.uint8).reshape(-1, _LD_ITEM)
    return raw[:, :_LD_VALID].tobytes()


class _Compiler:
    def __init__(self, M):
        self.M = M
        self.nodes = []
        self.memo = {}
        self.requests = 0

    def _new_node(self, layer, act, degree, u, mult, children):
        node = Node(len(self.nodes), layer, act, degree,
                    np.asarray(u, dtype=LDBL), LDBL(mult), tuple(children))
        self.nodes.append(node)
        return node.id

    def compile_term(self, A_aff, B, depth):
        """Compile one symbolic term; returns its handles ((node_id, sign), ...).

        A_aff is m x (M+1): shift vector a(t) = A_aff[:, 0] + A_aff[:, 1:] @ t.
        """
        self.requests += 1
        # the term's value is invariant under permutation of B's rows, so
        # rows are sorted into a canonical order before memoization -- an
        # exact transformation that lets distinct recursion paths share
        # their common subterms
        if B.shape[0] > 1:
            order = sorted(range(B.shape[0]), key=lambda i: _ld_bytes(B[i]))
            B = B[order]
        # exact-byte keys: merging merely *nearly* equal subterms perturbs
        # node parameters, and on ill-conditioned instances that perturbation
        # is amplified past the 1e-12 forward contract
        key = (depth, _ld_bytes(A_aff), A_aff.shape, _ld_bytes(B), B.shape)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        # u(t) = t[depth] - a_1(t)
        u = -A_aff[0].copy()
        u[1 + depth] += 1.0
        if depth == self.M - 1:
            handles = (self._terminal(u, B, depth),)
        else:
            handles = self._step(u, A_aff, B, depth)
        self.memo[key] = handles
        return handles

    def _terminal(self, u, B, depth):
        b = B[:, 0]
        if np.any(np.abs(b) < ZERO_COL_TOL):
            raise ZeroColumnEntry("zero denominator entry in the final dimension")
        r = len(b)
        if r == 1:
            return (self._new_node(depth, ACT_THRESHOLD, 0, u, 1.0 / b[0], ()), 1.0)
        mult = 1.0 / (math.factorial(r - 1) * np.prod(b))
        return (self._new_node(depth, ACT_RECTPOLY, r - 1, u, mult, ()), 1.0)

    def _step(self, u, A_aff, B, depth):
        """One node per (pole group, pole order): the symbolic twin of
        `ilt_engine.ilt_step`, with the runtime gate and (u)_+^(m-1) factor
        left as the node activation and the residue-expansion coefficients
        placed on the edges."""
        active, aside = _split_rows(B)
        if len(active) == 0:
            raise UnhandledPoleOrder("no active denominator row at this layer")
        Bact = B[active]
        Baside_tail = B[aside][:, 1:]
        lead_mult = 1.0 / np.prod(Bact[:, 0])
        tails = (Bact / Bact[:, [0]])[:, 1:]
        groups = _pole_groups(tails)
        A_tail = A_aff[1:]
        handles = []
        for g in groups:
            cg = tails[g[0]]
            others = [j for j in range(tails.shape[0]) if j not in g]
            d = {j: tails[j] - cg for j in others}
            base = np.array([d[j] for j in others]).reshape(len(others), tails.shape[1])
            A_child = A_tail + np.outer(cg, u)
            k = len(g)
            for m in range(1, k + 1):
                s = k - m
                edges = []
                for mono in sorted(_h_poly(s)):
                    frac = _h_poly(s)[mono]
                    q = LDBL(frac.numerator) / LDBL(frac.denominator * math.factorial(s))
                    for jt in itertools.product(others, repeat=len(mono)):
                        extra = [d[j] for j, rep in zip(jt, mono) for _ in range(rep)]
                        rows = np.vstack([base, np.array(extra)]) if extra else base
                        Bc = np.vstack([rows, Baside_tail]) if len(aside) else rows
                        for cid, w in self.compile_term(A_child, Bc, depth + 1):
                            edges.append((cid, q * w))
                if m == 1:
                    act, deg = ACT_THRESHOLD, 0
                elif m == 2:
                    act, deg = ACT_RELU, 1
                else:
                    act, deg = ACT_RECTPOLY, m - 1
                mult = lead_mult / math.factorial(m - 1)
                handles.append((self._new_node(depth, act, deg, u, mult, edges), 1.0))
        return tuple(handles)


def _affine_const(a, M):
    A_aff = np.zeros((len(a), M + 1), dtype=LDBL)
    A_aff[:, 0] = a
    return A_aff


def compile_network(sys, moments=True, auto_perturb=True, max_retries=3):
    """Compile the volume (and optionally all moment) heads for one basis.

    Shares the engine's perturbation policy: degenerate pole structure in
    the unrolled recursion triggers the same seeded basis perturbation.
    """
    eng = Engine(sys, auto_perturb=auto_perturb, max_retries=max_retries)

    def build():
        s = eng.sys
        comp = _Compiler(s.M)
        heads = {}
        vol_edges = []
        for term in root_terms_volume(s):
            root_B = term.B.astype(LDBL)
            for cid, sgn in comp.compile_term(_affine_const(term.a, s.M), root_B, 0):
                vol_edges.append((cid, sgn * term.sign))
        heads["volume"] = tuple(vol_edges)
        if moments:
            mom_heads = []
            for k in range(1, s.N + 1):
                edges = []
                for term in root_terms_moment(s, k).terms:
                    root_B = term.B.astype(LDBL)
                    for cid, sgn in comp.compile_term(_affine_const(term.a, s.M), root_B, 0):
                        edges.append((cid, sgn * term.sign))
                mom_heads.append(tuple(edges))
            heads["moments"] = tuple(mom_heads)
        per_layer = [0] * s.M
        for node in comp.nodes:
            per_layer[node.layer] += 1
        n_edges = sum(len(n.children) for n in comp.nodes)
        n_heads = 1 + (s.N if moments else 0)
        stats = NetStats(
            n_nodes=len(comp.nodes),
            nodes_per_layer=tuple(per_layer),
            n_edges=n_edges,
            n_requests=comp.requests,
            dedup_ratio=comp.requests / max(len(comp.nodes), 1),
            path_bound=n_heads * (s.N + 1) * s.N ** max(s.M - 1, 0),
        )
        return Network(N=s.N, M=s.M, V_s=s.V_s.copy(),
                       basis_class=s.basis_class, perturbed=s.perturbed,
                       nodes=comp.nodes, heads=heads, stats=stats)

    return eng._retry(build)


def _hex_list(arr):
    # adding 0.0 canonicalizes -0.0, keeping repeated save/load byte-stable
    return [(float(v) + 0.0).hex() for v in np.asarray(arr, dtype=float).reshape(-1)]


def _from_hex(values, shape=None):
    arr = np.array([float.fromhex(v) for v in values])
    return arr.reshape(shape) if shape is not None else arr


def _dd_encode(x):
    """Exact hex encoding of an extended-precision scalar as a double-double
    pair: hi is the nearest float64, lo the (exactly representable) rest."""
    hi = float(x) + 0.0   # + 0.0 canonicalizes -0.0 for byte-stable saves
    lo = float(LDBL(x) - LDBL(hi)) + 0.0
    return [hi.hex(), lo.hex()]


def _dd_decode(pair):
    return LDBL(float.fromhex(pair[0])) + LDBL(float.fromhex(pair[1]))


def save_network(net, path):
    """Serialize to JSON with hexadecimal float sidecars for exact round-trips."""
    doc = {
        "format": FORMAT_NAME,
        "version": FORMAT_VERSION,
        "N": net.N,
        "M": net.M,
        "nodes": [
            {
                "id": n.id,
                "layer": n.layer,
                "act": {"kind": n.act, "degree": n.degree},
                "affine": [float(v) + 0.0 for v in n.u],
                "affine_dd": [_dd_encode(v) for v in n.u],
                "mult": {
                    "sign": (0 if n.mult == 0 else (1 if n.mult > 0 else -1)),
                    "log": (None if n.mult == 0 else float(np.log(np.abs(n.mult)))),
                },
                "mult_dd": _dd_encode(n.mult),
                "children": [[cid, float(w) + 0.0] for cid, w in n.children],
                "children_w_dd": [_dd_encode(w) for _, w in n.children],
            }
            for n in net.nodes
        ],
        "heads": {
            name: ([[[int(c), int(s)] for c, s in head] for head in heads]
                   if name == "moments" else [[int(c), int(s)] for c, s in heads])
            for name, heads in net.heads.items()
        },
        "meta": {
            "basis_class": net.basis_class,
            "perturbed": net.perturbed,
            "V_s": (net.V_s + 0.0).tolist(),
            "V_s_hex": _hex_list(net.V_s),
        },
    }
    with open(path, "w") as fh:
        json.dump(doc, fh)


def load_network(path):
    """Load a network saved by `save_network`, restoring exact float values."""
    try:
        with open(path) as fh:
            doc = json.load(fh)
    except (OSError, json.JSONDecodeError) as ex:
        raise CorruptDocument(f"cannot parse network file: {ex}") from ex
    if doc.get("format") != FORMAT_NAME:
        raise SchemaMismatch(f"unexpected format {doc.get('format')!r}")
    if doc.get("version") != FORMAT_VERSION:
        raise SchemaMismatch(f"unsupported version {doc.get('version')!r}")
    try:
        N, M = doc["N"], doc["M"]
        meta = doc["meta"]
        V_s = _from_hex(meta["V_s_hex"], (N, M))
        nodes = [
            Node(
                id=nd["id"],
                layer=nd["layer"],
                act=nd["act"]["kind"],
                degree=nd["act"]["degree"],
                u=np.array([_dd_decode(p) for p in nd["affine_dd"]], dtype=LDBL),
                mult=_dd_decode(nd["mult_dd"]),
                children=tuple(
                    (int(c), _dd_decode(w))
                    for (c, _), w in zip(nd["children"], nd["children_w_dd"])
                ),
            )
            for nd in doc["nodes"]
        ]
        heads = {}
        for name, head in doc["heads"].items():
            if name == "moments":
                heads[name] = tuple(
                    tuple((int(c), int(s)) for c, s in edges) for edges in head
                )
            else:
                heads[name] = tuple((int(c), int(s)) for c, s in head)
    except (KeyError, TypeError, ValueError) as ex:
        raise CorruptDocument(f"malformed network document: {ex}") from ex
    return Network(N=N, M=M, V_s=V_s,
                   basis_class=meta["basis_class"], perturbed=meta["perturbed"],
                   nodes=nodes, heads=heads)
