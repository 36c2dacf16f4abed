"""Tailbiting trellis, weight-enumerator, and free-distance computations.

The weight enumerator A(X) of a tailbiting code is the trace of the product
of per-section state transition matrices whose entries are weight monomials;
it is evaluated here by propagating truncated weight polynomials along the
trellis, one block of start states at a time, instead of materializing matrix
powers.
"""

from __future__ import annotations

import heapq
from dataclasses import dataclass
from functools import lru_cache

import numpy as np
from scipy.sparse import csr_matrix
from scipy.sparse.csgraph import connected_components

from .encoder import EncoderSpec, TailbitingCode, _layout, _tables

_OVERFLOW_GUARD = 1 << 62


class _Overflow(Exception):
    pass


@dataclass(frozen=True)
class SectionView:
    """Edge tables of one trellis section, restricted to its admissible inputs.

    Incoming edges of every state are stored in tie-break order: ascending
    input int (the input tuple read little-endian), then ascending source
    state.  in_* arrays have shape [2^m, A] with A the admissible input count.
    """

    inputs: np.ndarray    # [A] admissible input ints, ascending
    in_src: np.ndarray    # [S, A]
    in_u: np.ndarray      # [S, A]
    in_out: np.ndarray    # [S, A]
    in_w: np.ndarray      # [S, A] Hamming weight of in_out

    @property
    def out_degree(self) -> int:
        return len(self.inputs)


class TailbitingTrellis:
    """ell-section circular trellis of a TailbitingCode with 2^m states."""

    def __init__(self, code: TailbitingCode):
        self.code = code
        spec = code.spec
        self.S = 1 << spec.m
        self.n = spec.n
        self.k = spec.k
        self.ell = code.ell
        self.N = code.N
        self.K = code.K

        bu, du, state_out = _tables(spec)
        states = np.arange(self.S, dtype=np.int64)
        mask = self.S - 1
        # forward tables over the full input alphabet
        self.next_state = np.empty((self.S, 1 << spec.k), dtype=np.int64)
        self.out_int = np.empty((self.S, 1 << spec.k), dtype=np.int64)
        for u in range(1 << spec.k):
            self.next_state[:, u] = ((states << 1) & mask) ^ bu[u]
            self.out_int[:, u] = state_out ^ du[u]
        self.next_state.setflags(write=False)
        self.out_int.setflags(write=False)

        views: dict[tuple[int, ...], SectionView] = {}
        self.sections: list[SectionView] = []
        for t in range(self.ell):
            adm = tuple(
                u for u in range(1 << spec.k)
                if all((u >> i) & 1 == 0 for i in code.schedule.frozen[t])
            )
            if adm not in views:
                views[adm] = self._build_view(np.array(adm, dtype=np.int64))
            self.sections.append(views[adm])

        self.positions, self.offsets = _layout(code)

    def _build_view(self, inputs: np.ndarray) -> SectionView:
        S, A = self.S, len(inputs)
        states = np.arange(S, dtype=np.int64)
        src = np.repeat(states[None, :], A, axis=0).ravel()
        rank = np.repeat(np.arange(A, dtype=np.int64), S)
        u = inputs[rank]
        dst = self.next_state[src, u]
        out = self.out_int[src, u]
        order = np.lexsort((src, rank, dst))
        dst_sorted = dst[order]
        # every state has in-degree exactly A (the register tap makes the
        # first state bit a balanced function of the admissible inputs)
        if not np.array_equal(dst_sorted, np.repeat(states, A)):
            raise AssertionError("trellis in-degree is not uniform")
        def take(a: np.ndarray) -> np.ndarray:
            r = a[order].reshape(S, A)
            r.setflags(write=False)
            return r
        view = SectionView(
            inputs=inputs,
            in_src=take(src),
            in_u=take(u),
            in_out=take(out),
            in_w=take(np.bitwise_count(out.astype(np.uint64)).astype(np.int64)),
        )
        view.inputs.setflags(write=False)
        return view


@lru_cache(maxsize=64)
def build_trellis(code: TailbitingCode) -> TailbitingTrellis:
    """Build (and memoize) the tailbiting trellis of a code."""
    return TailbitingTrellis(code)


@dataclass(frozen=True)
class WeightSpectrum:
    """Coefficients A_d of the weight enumerator, possibly weight-truncated.

    When the encoder is non-injective the coefficients count tailbiting
    paths rather than distinct codewords; path_counts flags that case
    (detected via A_0 > 1).
    """

    coeffs: dict[int, int]
    d_max: int
    block_length: int
    dimension: int

    @property
    def truncated(self) -> bool:
        return self.d_max < self.block_length

    @property
    def path_counts(self) -> bool:
        return self.coeffs.get(0, 0) > 1

    def a(self, d: int) -> int:
        return self.coeffs.get(d, 0)

    def d_min(self) -> int | None:
        nz = [d for d, v in self.coeffs.items() if d >= 1 and v > 0]
        return min(nz) if nz else None

    def total(self) -> int:
        return sum(self.coeffs.values())

    def items(self) -> list[tuple[int, int]]:
        return sorted(self.coeffs.items())


def _propagate_block(
    trellis: TailbitingTrellis, starts: np.ndarray, L: int, dtype
) -> np.ndarray:
    """Propagate weight polynomials for a block of start states.

    Returns P[state, start, deg]: number of partial paths from each start
    state reaching `state` with accumulated output weight `deg` (< L).
    """
    S = trellis.S
    G = len(starts)
    guard = _OVERFLOW_GUARD // max(v.out_degree for v in trellis.sections)
    P = np.zeros((S, G, L), dtype=dtype)
    P[starts, np.arange(G), 0] = 1
    for view in trellis.sections:
        Pn = np.zeros_like(P)
        for j in range(view.out_degree):
            src = view.in_src[:, j]
            w = view.in_w[:, j]
            for wv in np.unique(w):
                wv = int(wv)
                if wv >= L:
                    continue
                m = w == wv
                if wv:
                    Pn[m, :, wv:] += P[src[m], :, : L - wv]
                else:
                    Pn[m] += P[src[m]]
        P = Pn
        if dtype is np.int64 and P.max(initial=0) > guard:
            raise _Overflow
    return P


def weight_enumerator(code: TailbitingCode, d_max: int | None = None) -> WeightSpectrum:
    """Distance spectrum of a tailbiting code, exact up to weight d_max.

    Coefficients are exact integers (int64 fast path, arbitrary precision on
    overflow).  d_max defaults to the full block length N.
    """
    trellis = build_trellis(code)
    if d_max is None:
        d_max = code.N
    if d_max > code.N:
        raise ValueError(f"d_max={d_max} exceeds block length N={code.N}")
    L = d_max + 1
    # block the start states so the [S, G, L] int64 tensor stays under ~64 MB
    G = int(max(1, min(trellis.S, (8 << 23) // max(1, trellis.S * L))))
    coeffs: dict[int, int] = {}
    for lo in range(0, trellis.S, G):
        starts = np.arange(lo, min(lo + G, trellis.S), dtype=np.int64)
        try:
            P = _propagate_block(trellis, starts, L, np.int64)
        except _Overflow:
            P = _propagate_block(trellis, starts, L, object)
        closed = P[starts, np.arange(len(starts)), :].sum(axis=0)
        for d in range(L):
            v = int(closed[d])
            if v:
                coeffs[d] = coeffs.get(d, 0) + v
    return WeightSpectrum(coeffs, d_max, code.N, code.K)


@dataclass(frozen=True)
class FreeDistanceReport:
    """Minimum detour weight of an encoder and its multiplicity.

    A detour leaves the zero state at a fixed time origin with a nonzero
    input tuple and is counted up to its first return to the zero state.
    degenerate: a nonzero input sequence with all-zero output exists
    (d_free = 0).  divergent: infinitely many minimum-weight detours exist
    (a zero-weight cycle lies on a minimal detour); A_free is None then.
    """

    d_free: int
    a_free: int | None
    degenerate: bool = False
    divergent: bool = False


def _dijkstra(S: int, relax_edges, sources: list[tuple[int, int]]) -> np.ndarray:
    """Plain Dijkstra over states 1..S-1; sources are (state, weight) seeds."""
    INF = np.iinfo(np.int64).max
    dist = np.full(S, INF, dtype=np.int64)
    heap = []
    for s, w in sources:
        if w < dist[s]:
            dist[s] = w
            heapq.heappush(heap, (w, s))
    while heap:
        w, s = heapq.heappop(heap)
        if w > dist[s]:
            continue
        for t, we in relax_edges(s):
            nw = w + we
            if nw < dist[t]:
                dist[t] = nw
                heapq.heappush(heap, (nw, int(t)))
    return dist


def free_distance(spec: EncoderSpec) -> FreeDistanceReport:
    """Exact d_free and A_free by weight-bounded search over the state graph."""
    bu, du, state_out = _tables(spec)
    S = 1 << spec.m
    mask = S - 1
    nu = 1 << spec.k
    states = np.arange(S, dtype=np.int64)
    nxt = np.empty((S, nu), dtype=np.int64)
    out_w = np.empty((S, nu), dtype=np.int64)
    for u in range(nu):
        nxt[:, u] = ((states << 1) & mask) ^ bu[u]
        out_w[:, u] = np.bitwise_count((state_out ^ du[u]).astype(np.uint64))

    if spec.C.is_zero() and spec.D_tilde.is_zero():
        return FreeDistanceReport(0, None, degenerate=True)

    # forward pass: cheapest way to reach each nonzero state after leaving 0
    seeds = []
    direct = []  # single-edge detours 0 -> 0 with u != 0
    for u in range(1, nu):
        t, w = int(nxt[0, u]), int(out_w[0, u])
        if t == 0:
            direct.append(w)
        else:
            seeds.append((t, w))

    def fwd_edges(s: int):
        for u in range(nu):
            t = int(nxt[s, u])
            if t != 0:
                yield t, int(out_w[s, u])

    dist_from = _dijkstra(S, fwd_edges, seeds)

    # backward pass: cheapest completion from each nonzero state back to 0
    radj: list[list[tuple[int, int]]] = [[] for _ in range(S)]
    for s in range(1, S):
        for u in range(nu):
            radj[int(nxt[s, u])].append((s, int(out_w[s, u])))

    def bwd_edges(s: int):
        for p, we in radj[s]:
            yield p, we

    dist_to = _dijkstra(S, bwd_edges, [(p, w) for p, w in radj[0]])

    INF = np.iinfo(np.int64).max
    best = min(direct, default=INF)
    for s in range(1, S):
        if dist_from[s] < INF and dist_to[s] < INF:
            best = min(best, int(dist_from[s] + dist_to[s]))
    d_free = int(best)
    if d_free == 0:
        return FreeDistanceReport(0, None, degenerate=True)

    # a zero-weight cycle on a minimal detour makes A_free infinite
    zr, zc = [], []
    zero_self = np.zeros(S, dtype=bool)
    for s in range(1, S):
        for u in range(nu):
            t = int(nxt[s, u])
            if t != 0 and out_w[s, u] == 0:
                if t == s:
                    zero_self[s] = True
                zr.append(s)
                zc.append(t)
    if zr:
        g = csr_matrix((np.ones(len(zr), dtype=np.int8), (zr, zc)), shape=(S, S))
        ncomp, labels = connected_components(g, directed=True, connection="strong")
        sizes = np.bincount(labels, minlength=ncomp)
        on_cycle = zero_self | (sizes[labels] >= 2)
        on_cycle[0] = False
        z = np.flatnonzero(on_cycle)
        if len(z) and np.any(
            (dist_from[z] < INF) & (dist_to[z] < INF)
            & (dist_from[z] + dist_to[z] <= d_free)
        ):
            return FreeDistanceReport(d_free, None, divergent=True)

    # count minimal first-return detours with a (state, weight)-bounded DP;
    # mass that cannot complete within the remaining budget is pruned, which
    # both keeps the count exact and guarantees the frontier dies out
    W = d_free
    wrange = np.arange(W + 1, dtype=np.int64)
    can_finish = dist_to[:, None] <= (W - wrange)[None, :]
    f = np.zeros((S, W + 1), dtype=np.int64)
    a_free = sum(1 for w in direct if w == d_free)
    for t, w in seeds:
        if w <= W:
            f[t, w] += 1
    f *= can_finish
    # pre-group inner edges by (input, branch weight) and completion edges
    inner_groups = []
    comp_src = []
    comp_rem = []
    for u in range(nu):
        s_all = np.arange(1, S, dtype=np.int64)
        to = nxt[s_all, u]
        w = out_w[s_all, u]
        done = to == 0
        rem = W - w[done]
        ok = rem >= 0
        comp_src.append(s_all[done][ok])
        comp_rem.append(rem[ok])
        s_in = s_all[~done]
        w_in = w[~done]
        for wv in np.unique(w_in):
            wv = int(wv)
            sel = s_in[w_in == wv]
            inner_groups.append((wv, sel, nxt[sel, u]))
    comp_src = np.concatenate(comp_src) if comp_src else np.empty(0, dtype=np.int64)
    comp_rem = np.concatenate(comp_rem) if comp_rem else np.empty(0, dtype=np.int64)
    max_steps = S * (W + 1) + 2
    for _ in range(max_steps):
        # completions into state 0 at exact weight d_free
        if len(comp_src):
            a_free += int(f[comp_src, comp_rem].sum())
        if not f.any():
            break
        fn = np.zeros_like(f)
        for wv, sel, dst in inner_groups:
            if wv > W:
                continue
            if wv:
                np.add.at(fn[:, wv:], dst, f[sel, : W + 1 - wv])
            else:
                np.add.at(fn, dst, f[sel])
        f = fn * can_finish
        if f.max(initial=0) > _OVERFLOW_GUARD // nu:
            raise RuntimeError("detour count exceeds the int64 budget")
    else:
        raise AssertionError("detour DP failed to terminate")
    return FreeDistanceReport(d_free, int(a_free))
