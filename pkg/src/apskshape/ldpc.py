"""eIRA LDPC codes: construction from degree distributions, systematic
encoding, and flooding sum-product decoding.

The parity-check matrix is [H1 | H2] where H2 is the dual-diagonal
accumulator over the last n-k columns (its final column has a single one, the
customary degree-1 node), every row has constant degree dc, and the
systematic columns realize a prescribed variable-degree histogram with
greedy local-girth (PEG-style) edge placement.

The decoder performs one variable->check->variable sweep per call, carrying
check-to-variable messages in an explicit state so an outer loop can
interleave single sweeps with demapper/shaping updates.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.sparse import csr_matrix

# atanh argument clamp; bounds check messages to ~ +/-28.3
_TANH_CLAMP = 1.0 - 1e-12


@dataclass(frozen=True)
class DegreeDistribution:
    """Variable-degree profile (node fractions) with a constant check degree.

    a[i] is the fraction of variable nodes with degree dv[i]; the induced
    edge fractions are b[i] = a[i] dv[i] / sum_j a[j] dv[j].
    """

    dv: tuple[int, ...]
    a: tuple[float, ...]
    dc: int

    def __post_init__(self):
        if len(self.dv) != len(self.a) or not self.dv:
            raise ValueError("dv and a must be equal-length and non-empty")
        if any(d <= 0 for d in self.dv) or len(set(self.dv)) != len(self.dv):
            raise ValueError("variable degrees must be positive and distinct")
        if abs(sum(self.a) - 1.0) > 1e-9:
            raise ValueError(f"node fractions sum to {sum(self.a)}, not 1")
        if any(f < 0 for f in self.a):
            raise ValueError("node fractions must be nonnegative")
        if self.dc < 2:
            raise ValueError("check degree must be at least 2")

    @property
    def mean_degree(self) -> float:
        return float(sum(f * d for f, d in zip(self.a, self.dv)))

    @property
    def b(self) -> tuple[float, ...]:
        mean = self.mean_degree
        return tuple(f * d / mean for f, d in zip(self.a, self.dv))

    @property
    def design_rate(self) -> float:
        return 1.0 - self.mean_degree / self.dc


def solve_three_degree(rate_num: int, rate_den: int, dv2: int, dv3: int,
                       dc: int) -> DegreeDistribution | None:
    """Three-degree distribution with dv=(2, dv2, dv3) for an eIRA code of
    rate rate_num/rate_den: a1 = 1 - R is pinned to the accumulator, a2 and
    a3 follow from the node-sum and edge-balance constraints.  None if the
    solution has a negative fraction."""
    r = rate_num / rate_den
    a1 = 1.0 - r
    # a2 + a3 = r ;  dv2*a2 + dv3*a3 = dc*(1-r) - 2*a1
    rhs = dc * (1.0 - r) - 2.0 * a1
    denom = dv3 - dv2
    a3 = (rhs - dv2 * r) / denom
    a2 = r - a3
    if a2 < -1e-12 or a3 < -1e-12:
        return None
    return DegreeDistribution(dv=(2, dv2, dv3), a=(a1, max(a2, 0.0), max(a3, 0.0)), dc=dc)


# Degree profiles used throughout: the three EXIT-optimized designs and
# DVB-S2-like baselines with matching check degrees.
def paper_distribution(name: str) -> DegreeDistribution:
    table = {
        "rate35-optimized": (3, 5, 4, 19, 11),
        "rate23-optimized": (2, 3, 3, 14, 10),
        "rate914-optimized": (9, 14, 3, 14, 10),
        "rate35-standard": (3, 5, 3, 12, 11),
        "rate23-standard": (2, 3, 3, 13, 10),
    }
    if name not in table:
        raise ValueError(f"unknown distribution {name!r}; choose from {sorted(table)}")
    num, den, dv2, dv3, dc = table[name]
    dist = solve_three_degree(num, den, dv2, dv3, dc)
    assert dist is not None
    return dist


class LdpcCode:
    """Sparse parity-check code.  H is stored row-major (checks x variables)."""

    def __init__(self, H: csr_matrix, k: int, structure: str = "external",
                 dist: DegreeDistribution | None = None):
        H = csr_matrix(H, dtype=np.int8)
        H.sum_duplicates()
        if H.data.size and not np.all(H.data == 1):
            raise ValueError("H must be a 0/1 matrix without duplicate edges")
        self.H = H
        self.n = H.shape[1]
        self.k = int(k)
        self.structure = structure
        self.dist = dist
        self._workspace = None
        self._H_sys = None
        if structure == "eira":
            self._check_eira()

    @property
    def rate(self) -> float:
        return self.k / self.n

    @property
    def n_checks(self) -> int:
        return self.H.shape[0]

    def _check_eira(self):
        m_r = self.n_checks
        csc = self.H.tocsc()
        for j in range(self.k, self.n):
            rows = csc.indices[csc.indptr[j]:csc.indptr[j + 1]]
            p = j - self.k
            want = [p] if p == m_r - 1 else [p, p + 1]
            if sorted(rows.tolist()) != want:
                raise ValueError("last n-k columns are not the dual-diagonal accumulator")

    def column_degrees(self):
        return np.diff(self.H.tocsc().indptr)

    def row_degrees(self):
        return np.diff(self.H.indptr)

    def workspace(self):
        if self._workspace is None:
            self._workspace = _DecoderWorkspace(self.H)
        return self._workspace


class _DecoderWorkspace:
    """Edge arrays and degree groupings for the flooding decoder."""

    def __init__(self, H: csr_matrix):
        self.n = H.shape[1]
        self.m = H.shape[0]
        self.row_deg = np.diff(H.indptr)
        self.var_of_edge = H.indices.astype(np.int64)
        self.chk_of_edge = np.repeat(np.arange(self.m), self.row_deg)
        self.n_edges = self.var_of_edge.size
        # edges grouped by check degree; rows of equal degree reshape to 2-D
        self.groups = []
        for d in np.unique(self.row_deg):
            rows = np.flatnonzero(self.row_deg == d)
            starts = H.indptr[rows]
            idx = (starts[:, None] + np.arange(d)[None, :]).ravel()
            self.groups.append((int(d), idx))


def build_eira(n: int, k: int, dist: DegreeDistribution, seed: int = 0,
               max_retries: int = 5) -> LdpcCode:
    """Construct a check-regular eIRA code realizing `dist` as closely as the
    integer edge-count constraints allow."""
    if not 0 < k < n:
        raise ValueError("need 0 < k < n")
    m_r = n - k
    if 2 not in dist.dv:
        raise ValueError("eIRA construction needs a degree-2 class for the accumulator")
    counts = _apportion(np.array(dist.a) * n, n)
    deg2 = dist.dv.index(2)
    if counts[deg2] < m_r:
        raise ValueError(
            f"degree-2 fraction {dist.a[deg2]:.4f} cannot cover the {m_r} accumulator columns"
        )
    sys_counts = counts.copy()
    sys_counts[deg2] -= m_r
    target_edges = (dist.dc - 2) * m_r + 1
    sys_counts = _repair_edge_count(sys_counts, np.array(dist.dv), deg2, target_edges)

    degrees = np.repeat(dist.dv, sys_counts)
    order = np.argsort(-degrees, kind="stable")
    degrees = degrees[order]

    last_err = None
    for attempt in range(max_retries):
        try:
            rows_sys, cols_sys = _place_edges(degrees, m_r, dist.dc, seed + attempt)
            break
        except RuntimeError as err:   # stuck placement; reshuffle and retry
            last_err = err
    else:
        raise ValueError(f"edge placement failed after {max_retries} retries: {last_err}")

    # dual-diagonal accumulator occupies columns k .. n-1
    acc_rows = np.concatenate([np.arange(m_r), np.arange(1, m_r)])
    acc_cols = np.concatenate([np.arange(k, n), np.arange(k, n - 1)])
    rows = np.concatenate([rows_sys, acc_rows])
    cols = np.concatenate([cols_sys, acc_cols])
    H = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(m_r, n))
    H = _break_four_cycles(H, k, np.random.default_rng(seed + 7919))
    code = LdpcCode(H, k, structure="eira", dist=dist)
    if not np.all(code.row_degrees() == dist.dc):
        raise AssertionError("construction produced an irregular check side")
    return code


def _apportion(targets, total: int):
    """Largest-remainder rounding of nonnegative targets to integers summing
    to `total`."""
    floors = np.floor(targets).astype(np.int64)
    short = total - floors.sum()
    order = np.argsort(-(targets - floors), kind="stable")
    floors[order[:short]] += 1
    return floors


def _repair_edge_count(sys_counts, dv, deg2, target: int):
    """Shift nodes between the middle degree class and its neighbors until
    the systematic edge total hits `target` exactly."""
    cur = int(np.sum(sys_counts * dv))
    delta = target - cur
    if delta == 0:
        return sys_counts
    if len(dv) < 2:
        raise ValueError(f"edge-count mismatch of {delta} cannot be repaired")
    mid = 1 if len(dv) == 3 else (1 - deg2 if deg2 < 2 else 0)
    others = [i for i in range(len(dv)) if i != mid]
    best = None
    span = abs(delta) + 2 * int(dv.max()) + 2
    for x in range(-span, span + 1):          # mid -> others[-1] transfers
        gain_x = x * (dv[others[-1]] - dv[mid])
        rem = delta - gain_x
        step = dv[others[0]] - dv[mid]
        if len(others) == 1:
            y = 0
            if rem != 0:
                continue
        else:
            if step == 0 or rem % step:
                continue
            y = rem // step
        cand = sys_counts.copy()
        cand[mid] -= x + y
        cand[others[-1]] += x
        if len(others) > 1:
            cand[others[0]] += y
        if np.all(cand >= 0):
            cost = abs(x) + abs(y)
            if best is None or cost < best[0]:
                best = (cost, cand)
    if best is None:
        raise ValueError(f"edge-count mismatch of {delta} is beyond rounding repair")
    return best[1]


def _place_edges(degrees, m_r: int, dc: int, seed: int):
    """Greedy PEG-style placement of systematic edges under per-row capacity.

    Row 0 takes dc-1 systematic edges (one accumulator neighbor), all other
    rows take dc-2.  Each new edge lands on a check not reachable from the
    column within two check levels (no length-4 and few length-6 cycles),
    drawn at random with probability proportional to remaining capacity.
    Randomized selection matters: deterministic fill rules repeat the same
    check patterns across columns and breed dense trapping sets.
    """
    rng = np.random.default_rng(seed)
    capacity = np.full(m_r, dc - 2, dtype=np.int64)
    capacity[0] = dc - 1
    if degrees.sum() != capacity.sum():
        raise ValueError(
            f"systematic edges {int(degrees.sum())} != row capacity {int(capacity.sum())}"
        )
    # adjacency is pre-seeded with the accumulator columns (virtual variable
    # ids past the systematic ones) so cycle avoidance sees the parity chain
    n_sys = len(degrees)
    chk_vars: list[list[int]] = [[] for _ in range(m_r)]
    var_chks: list[list[int]] = [[] for _ in range(n_sys + m_r)]
    for j in range(m_r):
        pv = n_sys + j
        var_chks[pv].append(j)
        chk_vars[j].append(pv)
        if j + 1 < m_r:
            var_chks[pv].append(j + 1)
            chk_vars[j + 1].append(pv)
    rows_out = np.empty(int(degrees.sum()), dtype=np.int64)
    cols_out = np.empty_like(rows_out)
    e = 0
    for v, d in enumerate(degrees):
        for _ in range(int(d)):
            adj = var_chks[v]
            blocked = np.zeros(m_r, dtype=bool)
            blocked[adj] = True
            level1 = blocked.copy()
            for c0 in adj:
                for v1 in chk_vars[c0]:
                    if v1 != v:
                        level1[var_chks[v1]] = True
            cand = np.flatnonzero((capacity > 0) & ~level1)
            if cand.size == 0:
                cand = np.flatnonzero((capacity > 0) & ~blocked)
            if cand.size == 0:
                raise RuntimeError(f"no capacity left for column {v}")
            weights = capacity[cand].astype(float)
            c = int(rng.choice(cand, p=weights / weights.sum()))
            capacity[c] -= 1
            chk_vars[c].append(v)
            var_chks[v].append(c)
            rows_out[e] = c
            cols_out[e] = v
            e += 1
    return rows_out, cols_out


def _break_four_cycles(H: csr_matrix, k: int, rng, max_passes: int = 8) -> csr_matrix:
    """Degree-preserving edge swaps that remove check pairs sharing two or
    more variables.  Capacity endgames in `_place_edges` occasionally force
    such pairs; a few swap passes normally clear them all.  Leaves any
    stubborn remainder in place."""
    m_r = H.shape[0]
    chk_sets = [set(H.indices[H.indptr[i]:H.indptr[i + 1]].tolist()) for i in range(m_r)]
    csc = H.tocsc()
    var_sets = [set(csc.indices[csc.indptr[j]:csc.indptr[j + 1]].tolist())
                for j in range(H.shape[1])]

    def bad_pairs():
        S = (H_cur @ H_cur.T).tocoo()
        return [(int(i), int(j)) for i, j, v in zip(S.row, S.col, S.data)
                if i < j and v > 1]

    def overlap_ok(c_mod, other_var):
        # after modification, c_mod must not share 2+ vars with any check of
        # other_var's neighborhood
        for c in var_sets[other_var]:
            if c != c_mod and len(chk_sets[c_mod] & chk_sets[c]) > 1:
                return False
        return True

    H_cur = H
    for _ in range(max_passes):
        pairs = bad_pairs()
        if not pairs:
            break
        progress = False
        for c1, c2 in pairs:
            shared = sorted(v for v in chk_sets[c1] & chk_sets[c2] if v < k)
            if len(chk_sets[c1] & chk_sets[c2]) < 2 or not shared:
                continue
            v = shared[-1]
            done = False
            for c3 in rng.permutation(m_r):
                if done:
                    break
                c3 = int(c3)
                if c3 in (c1, c2) or v in chk_sets[c3]:
                    continue
                for w in list(chk_sets[c3]):
                    if w >= k or w in chk_sets[c2]:
                        continue
                    # tentative swap: (c2, v) <-> (c3, w)
                    chk_sets[c2].remove(v); chk_sets[c2].add(w)
                    chk_sets[c3].remove(w); chk_sets[c3].add(v)
                    var_sets[v].remove(c2); var_sets[v].add(c3)
                    var_sets[w].remove(c3); var_sets[w].add(c2)
                    if overlap_ok(c2, w) and overlap_ok(c3, v) \
                            and overlap_ok(c2, v) and overlap_ok(c3, w):
                        done = progress = True
                        break
                    chk_sets[c2].remove(w); chk_sets[c2].add(v)
                    chk_sets[c3].remove(v); chk_sets[c3].add(w)
                    var_sets[v].remove(c3); var_sets[v].add(c2)
                    var_sets[w].remove(c2); var_sets[w].add(c3)
        rows = np.concatenate([np.full(len(s), i) for i, s in enumerate(chk_sets)])
        cols = np.concatenate([sorted(s) for s in chk_sets]).astype(np.int64)
        H_cur = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=H.shape)
        if not progress:
            break
    return H_cur


def encode(code: LdpcCode, message):
    """Systematic eIRA encoding: the accumulator turns per-check message
    parities into the parity suffix."""
    if code.structure != "eira":
        raise ValueError("encoding requires an eIRA-structured code")
    message = np.asarray(message, dtype=np.uint8)
    if message.shape != (code.k,):
        raise ValueError(f"message must have length {code.k}")
    if code._H_sys is None:
        code._H_sys = code.H[:, : code.k].tocsr()
    s = np.asarray((code._H_sys @ message.astype(np.int64)) % 2, dtype=np.uint8).ravel()
    parity = np.bitwise_and(np.cumsum(s), 1).astype(np.uint8)
    return np.concatenate([message, parity])


def decode_iteration(code: LdpcCode, La_u, state=None, n_iters: int = 1):
    """One (or n_iters) flooding sweeps of sum-product decoding.

    Parameters
    ----------
    La_u : (n,) a priori LLRs, log P(0)/P(1).
    state : check-to-variable messages from the previous call, or None.

    Returns (Le_u, state, syndrome_ok); Le_u excludes La_u componentwise.
    """
    ws = code.workspace()
    La_u = np.asarray(La_u, dtype=float)
    c2v = np.zeros(ws.n_edges) if state is None else state
    for _ in range(n_iters):
        varsum = np.bincount(ws.var_of_edge, weights=c2v, minlength=ws.n)
        v2c = La_u[ws.var_of_edge] + varsum[ws.var_of_edge] - c2v
        t = np.tanh(0.5 * v2c)
        c2v = np.empty(ws.n_edges)
        for d, idx in ws.groups:
            tg = t[idx].reshape(-1, d)
            pre = np.ones_like(tg)
            pre[:, 1:] = np.cumprod(tg[:, :-1], axis=1)
            suf = np.ones_like(tg)
            suf[:, :-1] = np.cumprod(tg[:, :0:-1], axis=1)[:, ::-1]
            loo = np.clip(pre * suf, -_TANH_CLAMP, _TANH_CLAMP)
            c2v[idx] = (2.0 * np.arctanh(loo)).ravel()
    Le_u = np.bincount(ws.var_of_edge, weights=c2v, minlength=ws.n)
    hard = (La_u + Le_u) < 0
    checks = np.bincount(ws.chk_of_edge, weights=hard[ws.var_of_edge], minlength=ws.m)
    syndrome_ok = bool(np.all(checks.astype(np.int64) % 2 == 0))
    return Le_u, c2v, syndrome_ok


def hard_decisions(La_u, Le_u):
    """Bit decisions from the posterior LLR (positive -> 0)."""
    return ((La_u + Le_u) < 0).astype(np.uint8)


def save_alist(code: LdpcCode, path) -> None:
    """Write H in the MacKay alist interchange format (1-based indices)."""
    csc = code.H.tocsc()
    col_deg = np.diff(csc.indptr)
    row_deg = code.row_degrees()
    with open(path, "w") as fh:
        fh.write(f"{code.n} {code.n_checks}\n")
        fh.write(f"{col_deg.max()} {row_deg.max()}\n")
        fh.write(" ".join(map(str, col_deg.tolist())) + "\n")
        fh.write(" ".join(map(str, row_deg.tolist())) + "\n")
        for j in range(code.n):
            rows = csc.indices[csc.indptr[j]:csc.indptr[j + 1]] + 1
            fh.write(" ".join(map(str, sorted(rows.tolist()))) + "\n")
        for i in range(code.n_checks):
            cols = code.H.indices[code.H.indptr[i]:code.H.indptr[i + 1]] + 1
            fh.write(" ".join(map(str, sorted(cols.tolist()))) + "\n")


def load_external(path, k: int | None = None) -> LdpcCode:
    """Load a parity-check matrix from an alist file.

    The message length defaults to n - (number of checks).  Duplicate edges
    and column/row list inconsistencies are rejected.
    """
    with open(path) as fh:
        tokens_per_line = [line.split() for line in fh if line.strip()]
    it = iter(tokens_per_line)
    try:
        n, m = map(int, next(it))
        next(it)  # max degrees, informational
        col_deg = list(map(int, next(it)))
        row_deg = list(map(int, next(it)))
        if len(col_deg) != n or len(row_deg) != m:
            raise ValueError("degree list lengths do not match the header")
        col_lists = []
        for j in range(n):
            entries = [int(tok) for tok in next(it) if int(tok) != 0]
            if len(entries) != col_deg[j]:
                raise ValueError(f"column {j}: {len(entries)} entries, degree says {col_deg[j]}")
            if len(set(entries)) != len(entries):
                raise ValueError(f"column {j}: duplicated edge")
            col_lists.append(entries)
        row_lists = []
        for i in range(m):
            entries = [int(tok) for tok in next(it) if int(tok) != 0]
            if len(entries) != row_deg[i]:
                raise ValueError(f"row {i}: {len(entries)} entries, degree says {row_deg[i]}")
            if len(set(entries)) != len(entries):
                raise ValueError(f"row {i}: duplicated edge")
            row_lists.append(entries)
    except StopIteration:
        raise ValueError("alist file truncated") from None

    rows = np.concatenate([np.full(len(c), i) for i, c in enumerate(row_lists)]) \
        if row_lists else np.empty(0, dtype=np.int64)
    cols = np.concatenate([np.array(c) - 1 for c in row_lists]) \
        if row_lists else np.empty(0, dtype=np.int64)
    if cols.size and (cols.min() < 0 or cols.max() >= n):
        raise ValueError("column index out of range")
    H = csr_matrix((np.ones(rows.size, dtype=np.int8), (rows, cols)), shape=(m, n))
    # cross-check the column lists against the row lists
    csc = H.tocsc()
    for j in range(n):
        got = (csc.indices[csc.indptr[j]:csc.indptr[j + 1]] + 1).tolist()
        if sorted(got) != sorted(col_lists[j]):
            raise ValueError(f"column {j}: row and column adjacency lists disagree")
    code = LdpcCode(H, n - m if k is None else k, structure="external")
    try:
        code._check_eira()
        code.structure = "eira"
    except ValueError:
        pass
    return code
