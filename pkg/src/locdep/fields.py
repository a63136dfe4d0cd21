"""Sampleable locally dependent random fields built from latent sources.

Every field value is a deterministic function of a small set of mutually
independent source variables:  X_i = ev_i(sources in supp(i)).  Dependence
neighborhoods are then *induced* by support overlap,

    A_i  = {j : supp(j) & supp(i) != {}},
    A_ij = {k : supp(k) & (supp(i) | supp(j)) != {}} = A_i | A_j,

which makes both local-dependence conditions hold by construction:
disjoint supports imply independence.

Builders cover the application families: iid fields, m-dependent moving
windows, dependency-graph fields, distributed U-statistic fields,
constrained U-statistic fields over m-dependent sequences (word and
pattern counting), and decorated injective homomorphism sums over random
edge variables.

Fields are immutable after construction.  Sampling is a pure function of
(master_seed, replication_index) through counter-based substreams, so
replications parallelize and reproduce bit-for-bit.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field as dc_field
from typing import Callable, Sequence

import numpy as np

from .errors import (
    BlockTooSmall,
    ComplexityCapExceeded,
    EmptyIndexSet,
    EnumerationCapExceeded,
    GraphTooLarge,
    InvalidSize,
)
from .neighborhood import NeighborhoodSystem, make_system
from .rng import STREAM_MEAN_PREPASS, STREAM_SAMPLE, substream

DEFAULT_ENUM_CAP = 2**24
DEFAULT_INDEX_CAP = 2**22
ENUM_BLOCK = 2**16


# ---------------------------------------------------------------------------
# Sources


@dataclass(frozen=True)
class DiscreteSource:
    """A finite-discrete source with numeric outcome values."""

    values: tuple[float, ...]
    probs: tuple[float, ...]

    def __post_init__(self):
        if len(self.values) != len(self.probs) or not self.values:
            raise ValueError("values and probs must be nonempty and same length")
        if abs(sum(self.probs) - 1.0) > 1e-12 or min(self.probs) < 0:
            raise ValueError("probs must be nonnegative and sum to 1")


@dataclass(frozen=True)
class ContinuousSource:
    """A continuous source; ``kind`` is 'uniform' (on (0,1)) or 'normal'."""

    kind: str

    def __post_init__(self):
        if self.kind not in ("uniform", "normal"):
            raise ValueError(f"unknown continuous source kind: {self.kind}")


Source = DiscreteSource | ContinuousSource


def rademacher() -> DiscreteSource:
    return DiscreteSource((-1.0, 1.0), (0.5, 0.5))


def bernoulli(p: float) -> DiscreteSource:
    return DiscreteSource((0.0, 1.0), (1.0 - p, p))


def three_point(spread: float = 1.0, p_zero: float = 0.5) -> DiscreteSource:
    """Symmetric three-point source on {-spread, 0, +spread}."""
    q = (1.0 - p_zero) / 2.0
    return DiscreteSource((-spread, 0.0, spread), (q, p_zero, q))


def uniform_letters(k: int) -> DiscreteSource:
    """Uniform source over an alphabet encoded as 0..k-1."""
    return DiscreteSource(tuple(float(a) for a in range(k)), (1.0 / k,) * k)


def _draw(source: Source, rng: np.random.Generator, size: int) -> np.ndarray:
    if isinstance(source, ContinuousSource):
        if source.kind == "uniform":
            return rng.random(size)
        return rng.standard_normal(size)
    cum = np.cumsum(source.probs)
    idx = np.searchsorted(cum, rng.random(size), side="right")
    return np.asarray(source.values)[np.minimum(idx, len(source.values) - 1)]


# ---------------------------------------------------------------------------
# The field type


@dataclass
class LatentSourceField:
    """A field X_1..X_n of evaluator outputs over independent sources.

    ``supports[i]`` lists the source ids evaluator i consumes, in argument
    order (overlap tests use the set of ids).  ``means`` holds E X_i before
    centering; sampled values are centered iff ``center`` is set.
    """

    sources: tuple[Source, ...]
    supports: tuple[tuple[int, ...], ...]
    evaluators: tuple[Callable, ...]
    center: bool = True
    means: np.ndarray | None = None
    metadata: dict = dc_field(default_factory=dict)

    @property
    def n(self) -> int:
        return len(self.supports)

    @property
    def n_sources(self) -> int:
        return len(self.sources)

    def is_enumerable(self) -> bool:
        return all(isinstance(s, DiscreteSource) for s in self.sources)

    def outcome_count(self) -> int | None:
        if not self.is_enumerable():
            return None
        count = 1
        for s in self.sources:
            count *= len(s.values)
        return count


@dataclass(frozen=True)
class Realization:
    """One sampled field vector with its seed lineage."""

    values: np.ndarray
    master_seed: int
    replication: int


def _values_of(x) -> np.ndarray:
    return x.values if isinstance(x, Realization) else np.asarray(x, dtype=float)


# ---------------------------------------------------------------------------
# Exact local grids and means


def local_grid(field: LatentSourceField, source_ids: Sequence[int]) -> tuple[np.ndarray, np.ndarray]:
    """Product grid over the given discrete sources.

    Returns (rows, probs): rows[k] holds one joint outcome of the sources
    in the order given; probs[k] its probability.
    """
    vals = []
    prbs = []
    for s in source_ids:
        src = field.sources[s]
        if not isinstance(src, DiscreteSource):
            raise EnumerationCapExceeded(f"source {s} is continuous; no exact grid")
        vals.append(np.asarray(src.values))
        prbs.append(np.asarray(src.probs))
    grids = np.meshgrid(*vals, indexing="ij") if vals else []
    rows = (
        np.stack([g.reshape(-1) for g in grids], axis=1)
        if vals
        else np.zeros((1, 0))
    )
    probs = np.ones(rows.shape[0])
    if vals:
        pgrids = np.meshgrid(*prbs, indexing="ij")
        for pg in pgrids:
            probs = probs * pg.reshape(-1)
    return rows, probs


def exact_index_mean(field: LatentSourceField, i: int) -> float:
    rows, probs = local_grid(field, field.supports[i])
    vals = field.evaluators[i](*(rows[:, k] for k in range(rows.shape[1])))
    return float(probs @ np.asarray(vals, dtype=float))


def compute_means(
    field: LatentSourceField,
    master_seed: int = 0,
    prepass: int = 10**6,
    cache_key: Callable[[int], object] | None = None,
) -> np.ndarray:
    """E X_i for every index: exact when the supporting sources are
    discrete, otherwise a Monte-Carlo pre-pass of ``prepass`` draws.

    ``cache_key`` maps an index to a hashable signature of its exact mean;
    indices sharing a signature share one enumeration (used by the
    stationary-sequence builders).
    """
    means = np.empty(field.n)
    exact = [
        all(isinstance(field.sources[s], DiscreteSource) for s in supp)
        for supp in field.supports
    ]
    cache: dict[object, float] = {}
    for i in range(field.n):
        if not exact[i]:
            continue
        key = cache_key(i) if cache_key is not None else None
        if key is not None and key in cache:
            means[i] = cache[key]
            continue
        means[i] = exact_index_mean(field, i)
        if key is not None:
            cache[key] = means[i]
    todo = [i for i in range(field.n) if not exact[i]]
    if todo:
        acc = np.zeros(len(todo))
        done = 0
        chunk = max(1, min(prepass, (1 << 25) // max(1, field.n_sources)))
        rng = substream(master_seed, STREAM_MEAN_PREPASS)
        while done < prepass:
            size = min(chunk, prepass - done)
            rows = np.empty((size, field.n_sources))
            for s, src in enumerate(field.sources):
                rows[:, s] = _draw(src, rng, size)
            for k, i in enumerate(todo):
                cols = (rows[:, s] for s in field.supports[i])
                acc[k] += float(np.sum(field.evaluators[i](*cols)))
            done += size
        for k, i in enumerate(todo):
            means[i] = acc[k] / prepass
        field.metadata["mean_prepass"] = {"draws": prepass, "indices": len(todo)}
    return means


# ---------------------------------------------------------------------------
# Sampling and evaluation


def _source_runs(field: LatentSourceField) -> list[tuple[slice, Source]]:
    runs = []
    start = 0
    for s, src in enumerate(field.sources):
        if s > 0 and src == field.sources[start]:
            continue
        if s > start:
            runs.append((slice(start, s), field.sources[start]))
        start = s
    runs.append((slice(start, field.n_sources), field.sources[start]))
    return runs


def draw_source_rows(
    field: LatentSourceField,
    master_seed: int,
    reps: Sequence[int],
    path: tuple[int, ...] = (),
) -> np.ndarray:
    """Source draws for the given replication indices, one substream each."""
    runs = field.metadata.setdefault("_source_runs", _source_runs(field))
    out = np.empty((len(reps), field.n_sources))
    for r_i, rep in enumerate(reps):
        rng = substream(master_seed, STREAM_SAMPLE, *path, int(rep))
        for sl, src in runs:
            out[r_i, sl] = _draw(src, rng, sl.stop - sl.start)
    return out


def evaluate_values(field: LatentSourceField, rows: np.ndarray) -> np.ndarray:
    """Apply the evaluators to source rows; shape (reps, n), centered."""
    rows = np.atleast_2d(rows)
    out = np.empty((rows.shape[0], field.n))
    for i, supp in enumerate(field.supports):
        cols = (rows[:, s] for s in supp)
        out[:, i] = field.evaluators[i](*cols)
    if field.center:
        if field.means is None:
            field.means = compute_means(field)
        out -= field.means
    return out


def sample(field: LatentSourceField, master_seed: int, replication: int) -> Realization:
    rows = draw_source_rows(field, master_seed, [replication])
    return Realization(
        values=evaluate_values(field, rows)[0],
        master_seed=master_seed,
        replication=replication,
    )


def outcome_blocks(
    field: LatentSourceField,
    cap: int = DEFAULT_ENUM_CAP,
    block: int = ENUM_BLOCK,
):
    """Yield (probs, source_rows) blocks covering the full outcome space.

    Outcomes are ordered with source 0 as the most significant mixed-radix
    digit.  Raises :class:`EnumerationCapExceeded` beyond ``cap`` outcomes.
    """
    total = field.outcome_count()
    if total is None:
        raise EnumerationCapExceeded("field has continuous sources")
    if total > cap:
        raise EnumerationCapExceeded(f"{total} outcomes exceed cap {cap}")
    values = [np.asarray(s.values) for s in field.sources]
    probs = [np.asarray(s.probs) for s in field.sources]
    for start in range(0, total, block):
        idx = np.arange(start, min(start + block, total), dtype=np.int64)
        rows = np.empty((idx.size, field.n_sources))
        p = np.ones(idx.size)
        rem = idx.copy()
        for s in range(field.n_sources - 1, -1, -1):
            radix = len(values[s])
            digit = rem % radix
            rem //= radix
            rows[:, s] = values[s][digit]
            p *= probs[s][digit]
        yield p, rows


# ---------------------------------------------------------------------------
# Induced neighborhoods


def _support_users(field: LatentSourceField) -> list[list[int]]:
    users: list[list[int]] = [[] for _ in range(field.n_sources)]
    for i, supp in enumerate(field.supports):
        for s in set(supp):
            users[s].append(i)
    return users


def induced_neighbor_sets(field: LatentSourceField) -> list[set[int]]:
    """A_i = {j : supports overlap}, as mutable sets."""
    users = _support_users(field)
    return [
        set().union(*(users[s] for s in set(supp))) for supp in field.supports
    ]


def induced_neighborhoods(
    field: LatentSourceField, cap_terms: int | None = 10**8
) -> NeighborhoodSystem:
    """The support-overlap neighborhood system with the union pair cover.

    Local dependence holds by construction: indices outside A_i share no
    source with i.  ``cap_terms`` guards against materializing systems
    whose pair covers would be astronomically large.
    """
    users = _support_users(field)
    estimate = sum(len(users[s]) for supp in field.supports for s in set(supp))
    if cap_terms is not None and estimate > cap_terms:
        raise ComplexityCapExceeded(
            f"induced system would hold ~{estimate} neighbor entries (cap {cap_terms})"
        )
    A = [tuple(sorted(a)) for a in induced_neighbor_sets(field)]
    return make_system(A)


def induced_adjacency(field: LatentSourceField):
    """Sparse 0/1 matrix with M[i, j] = 1 iff j in A_i (for Y = M @ X)."""
    from scipy import sparse

    rows, cols = [], []
    for i, a in enumerate(induced_neighbor_sets(field)):
        rows.extend([i] * len(a))
        cols.extend(sorted(a))
    data = np.ones(len(rows))
    return sparse.csr_matrix((data, (rows, cols)), shape=(field.n, field.n))


# ---------------------------------------------------------------------------
# Index codecs


def subset_rank_colex(subset: Sequence[int]) -> int:
    """Colexicographic rank of an increasing m-subset of 0..n-1."""
    return sum(math.comb(s, j + 1) for j, s in enumerate(sorted(subset)))


def subset_unrank_colex(rank: int, m: int) -> tuple[int, ...]:
    out = []
    r = rank
    for j in range(m, 0, -1):
        s = j - 1
        while math.comb(s + 1, j) <= r:
            s += 1
        out.append(s)
        r -= math.comb(s, j)
    return tuple(reversed(out))


def injection_rank(phi: Sequence[int], n: int) -> int:
    """Mixed-radix (Lehmer) rank of an injection into 0..n-1."""
    rank = 0
    seen: list[int] = []
    for t, x in enumerate(phi):
        smaller = sum(1 for y in seen if y < x)
        rank = rank * (n - t) + (x - smaller)
        seen.append(x)
    return rank


def injection_unrank(rank: int, v: int, n: int) -> tuple[int, ...]:
    digits = []
    r = rank
    for t in range(v - 1, -1, -1):
        digits.append(r % (n - t))
        r //= n - t
    digits.reverse()
    remaining = list(range(n))
    return tuple(remaining.pop(d) for d in digits)


def pair_source_index(a: int, b: int, n: int) -> int:
    """Index of the unordered pair {a, b} among the C(n,2) edge slots."""
    if a > b:
        a, b = b, a
    return a * (2 * n - a - 1) // 2 + (b - a - 1)


# ---------------------------------------------------------------------------
# Builders


def _finalize(field: LatentSourceField, means: np.ndarray | None = None,
              cache_key=None) -> LatentSourceField:
    if cache_key is not None:
        field.metadata["profile_key"] = cache_key
    if field.center and field.means is None:
        field.means = means if means is not None else compute_means(field, cache_key=cache_key)
    return field


def profile_key(field: LatentSourceField):
    """Signature function grouping indices with identical marginal law,
    or None when no grouping is known."""
    return field.metadata.get("profile_key")


def build_iid_field(
    n: int, source: Source, evaluator: Callable | None = None, center: bool = True
) -> LatentSourceField:
    """n independent copies of evaluator(source)."""
    if n < 1:
        raise InvalidSize(f"n must be >= 1, got {n}")
    ev = evaluator if evaluator is not None else (lambda u: u)
    field = LatentSourceField(
        sources=(source,) * n,
        supports=tuple((i,) for i in range(n)),
        evaluators=(ev,) * n,
        center=center,
        metadata={"family": "iid", "n": n, "index_transitive": True},
    )
    if evaluator is None:
        field.metadata["batch_sum"] = lambda rows: rows.sum(axis=1)
    field.metadata["pair_key"] = _coincidence_pair_key(field.supports)
    return _finalize(field, cache_key=lambda i: 0)


def build_m_dependent(
    n: int,
    m: int,
    source: Source,
    window_evaluator: Callable | None = None,
    center: bool = True,
) -> LatentSourceField:
    """Stationary m-dependent field: X_i = w(U_i, ..., U_{i+m}).

    Windows overlap iff |i - j| <= m, so A_i = [i-m, i+m] among valid
    indices; m = 0 reduces to an iid field.
    """
    if n < 1:
        raise InvalidSize(f"n must be >= 1, got {n}")
    if m < 0:
        raise InvalidSize(f"m must be >= 0, got {m}")
    ev = window_evaluator if window_evaluator is not None else (
        lambda *cols: sum(cols) if len(cols) > 1 else cols[0]
    )
    field = LatentSourceField(
        sources=(source,) * (n + m),
        supports=tuple(tuple(range(i, i + m + 1)) for i in range(n)),
        evaluators=(ev,) * n,
        center=center,
        metadata={"family": "m_dependent", "n": n, "m": m},
    )
    field.metadata["pair_key"] = _coincidence_pair_key(field.supports)
    if window_evaluator is None:
        # S = sum_i sum_d U_{i+d}: source s appears in min(s, m, n-1-s+m, n) windows
        coeff = np.array(
            [min(s, m, n + m - 1 - s, n - 1) + 1 for s in range(n + m)], dtype=float
        )
        field.metadata["batch_sum"] = lambda rows, c=coeff: rows @ c
    return _finalize(field, cache_key=lambda i: 0)


def build_graph_dependency(
    n_vertices: int,
    edges: Sequence[tuple[int, int]],
    source: Source,
    evaluator: Callable | None = None,
    center: bool = True,
) -> LatentSourceField:
    """Dependency-graph field: one source per vertex and per edge,
    X_i = ev(own source, incident edge sources).

    Induced A_i is the closed neighborhood of i, so with the union pair
    cover kappa <= 2d and tau <= 4d^2 for maximal degree d >= 3 (2kappa^2
    in general).  An edgeless graph reduces to an iid field.
    """
    if n_vertices < 1:
        raise InvalidSize(f"n_vertices must be >= 1, got {n_vertices}")
    edges = [tuple(sorted((int(u), int(v)))) for u, v in edges]
    if any(u == v for u, v in edges) or len(set(edges)) != len(edges):
        raise ValueError("graph must be simple (no loops, no multi-edges)")
    if any(u < 0 or v >= n_vertices for u, v in edges):
        raise ValueError("edge endpoint out of range")
    ev = evaluator if evaluator is not None else (
        lambda *cols: sum(cols) if len(cols) > 1 else cols[0]
    )
    incident: list[list[int]] = [[] for _ in range(n_vertices)]
    for e, (u, v) in enumerate(edges):
        incident[u].append(n_vertices + e)
        incident[v].append(n_vertices + e)
    supports = tuple((i, *incident[i]) for i in range(n_vertices))
    field = LatentSourceField(
        sources=(source,) * (n_vertices + len(edges)),
        supports=supports,
        evaluators=(ev,) * n_vertices,
        center=center,
        metadata={
            "family": "graph",
            "n": n_vertices,
            "edges": edges,
            "max_degree": max((len(inc) for inc in incident), default=0),
        },
    )
    field.metadata["pair_key"] = _coincidence_pair_key(field.supports)
    return _finalize(field, cache_key=lambda i: len(supports[i]))


def build_ustat_field(
    block_sizes: Sequence[int],
    m: int,
    kernel: Callable,
    source: Source,
    theta: float | None = None,
    cap: int = DEFAULT_INDEX_CAP,
) -> LatentSourceField:
    """Distributed U-statistic field over k blocks of sample points.

    One field index per (block, m-subset); X = w_i (h(points) - theta)
    with w_i = n_i / (N C(n_i, m)), so the field sum equals U_d - theta.
    A single block recovers the classical U-statistic, up to the recorded
    normalization.  theta is computed exactly from the source when not
    supplied.
    """
    block_sizes = [int(b) for b in block_sizes]
    if any(b < m for b in block_sizes):
        raise BlockTooSmall(f"every block needs >= m={m} points, got {block_sizes}")
    if m < 1:
        raise InvalidSize(f"kernel degree m must be >= 1, got {m}")
    N = sum(block_sizes)
    n_idx = sum(math.comb(b, m) for b in block_sizes)
    if n_idx > cap:
        raise EnumerationCapExceeded(f"{n_idx} field indices exceed cap {cap}")
    if theta is None:
        if not isinstance(source, DiscreteSource):
            raise EnumerationCapExceeded(
                "theta must be supplied for continuous sources"
            )
        k = len(source.values)
        if k**m > DEFAULT_ENUM_CAP:
            raise EnumerationCapExceeded("kernel mean enumeration too large")
        grids = np.meshgrid(*([np.asarray(source.values)] * m), indexing="ij")
        pg = np.meshgrid(*([np.asarray(source.probs)] * m), indexing="ij")
        w = np.ones_like(pg[0])
        for p in pg:
            w = w * p
        theta = float(np.sum(w * kernel(*grids)))
    supports: list[tuple[int, ...]] = []
    evaluators: list[Callable] = []
    weights: list[float] = []
    block_slices: list[tuple[int, int]] = []
    offset = 0
    for b in block_sizes:
        w_i = b / (N * math.comb(b, m))
        ev = _weighted_kernel(kernel, w_i, theta)
        start = len(supports)
        subsets = sorted(itertools.combinations(range(b), m), key=lambda t: t[::-1])
        for sub in subsets:
            supports.append(tuple(offset + s for s in sub))
            evaluators.append(ev)
            weights.append(w_i)
        block_slices.append((start, len(supports)))
        offset += b
    field = LatentSourceField(
        sources=(source,) * N,
        supports=tuple(supports),
        evaluators=tuple(evaluators),
        center=False,
        means=np.zeros(len(supports)),
        metadata={
            "family": "ustat",
            "m": m,
            "theta": theta,
            "block_sizes": block_sizes,
            "block_slices": block_slices,
            "weights": weights,
            "index_transitive": len(block_sizes) == 1,
            "sum_is": "U_d - theta",
        },
    )
    field.metadata["profile_key"] = lambda i, w=tuple(weights): w[i]
    field.metadata["pair_key"] = _coincidence_pair_key(
        field.supports, extra=lambda i, w=tuple(weights): w[i]
    )
    return field


def _weighted_kernel(kernel: Callable, w: float, theta: float) -> Callable:
    def ev(*cols):
        return w * (kernel(*cols) - theta)

    return ev


def admissible_tuples(
    n: int, gaps: Sequence[int | None], exact_gaps: bool = False
) -> list[tuple[int, ...]]:
    """Increasing index tuples (0-based) with i_{j+1} - i_j <= gaps[j];
    ``None`` encodes an unconstrained (infinite) gap.  With ``exact_gaps``
    finite gaps must be met exactly (the exactly-constrained variant)."""
    tuples: list[tuple[int, ...]] = []
    l = len(gaps) + 1

    def extend(prefix: tuple[int, ...]):
        j = len(prefix)
        if j == l:
            tuples.append(prefix)
            return
        if not prefix:
            lo, hi = 0, n
        elif gaps[j - 1] is None:
            lo, hi = prefix[-1] + 1, n
        elif exact_gaps:
            lo = prefix[-1] + gaps[j - 1]
            hi = min(n, lo + 1)
        else:
            lo = prefix[-1] + 1
            hi = min(n, prefix[-1] + gaps[j - 1] + 1)
        for t in range(lo, hi):
            if n - t < l - j:
                break
            extend(prefix + (t,))

    extend(())
    return tuples


def gap_order(gaps: Sequence[int | None]) -> int:
    """b = 1 + #infinite gaps: the growth exponent |I| = Theta(n^b)."""
    return 1 + sum(1 for g in gaps if g is None)


def build_constrained_ustat_field(
    n: int,
    m: int,
    f: Callable,
    gaps: Sequence[int | None],
    source: Source,
    window_evaluator: Callable | None = None,
    known_mean: float | None = None,
    cap: int = DEFAULT_INDEX_CAP,
) -> LatentSourceField:
    """Constrained U-statistic field over a stationary m-dependent sequence.

    The underlying sequence is xi_t = w(U_t, ..., U_{t+m}); field indices
    are the admissible tuples and X = f(xi over tuple) - mean.  Induced
    neighborhoods combine tuple overlap with gap-<=-m interference, which
    is exactly the union of the overlap and proximity sets.
    """
    if n < 1:
        raise InvalidSize(f"n must be >= 1, got {n}")
    gaps = tuple(None if g is None else int(g) for g in gaps)
    tuples = admissible_tuples(n, gaps)
    if not tuples:
        raise EmptyIndexSet(f"no admissible tuple for n={n}, gaps={gaps}")
    if len(tuples) > cap:
        raise EnumerationCapExceeded(f"{len(tuples)} tuples exceed cap {cap}")
    window = window_evaluator
    if window is None:
        window = (lambda u: u) if m == 0 else (lambda *cols: sum(cols))

    def make_ev(tup: tuple[int, ...]) -> Callable:
        # union of the elements' windows; within it, t..t+m sit at
        # consecutive positions, so pos[t]+d addresses source t+d
        supp = tuple(sorted({t + d for t in tup for d in range(m + 1)}))
        pos = {s: k for k, s in enumerate(supp)}

        def ev(*cols):
            seq = [window(*(cols[pos[t] + d] for d in range(m + 1))) for t in tup]
            return f(*seq)

        return ev, supp

    supports = []
    evaluators = []
    for tup in tuples:
        ev, supp = make_ev(tup)
        supports.append(supp)
        evaluators.append(ev)
    field = LatentSourceField(
        sources=(source,) * (n + m),
        supports=tuple(supports),
        evaluators=tuple(evaluators),
        center=True,
        metadata={
            "family": "constrained_ustat",
            "n": n,
            "m": m,
            "gaps": gaps,
            "b": gap_order(gaps),
            "tuples": tuples,
        },
    )
    field.metadata["pair_key"] = _coincidence_pair_key(field.supports)
    if known_mean is not None:
        field.means = np.full(len(tuples), float(known_mean))
        return field
    # the exact mean of f over a tuple depends only on its gap profile,
    # with gaps beyond m equivalent (independent groups)
    profile = {
        i: tuple(
            min(b - a, m + 1) for a, b in zip(tuples[i], tuples[i][1:])
        )
        for i in range(len(tuples))
    }
    return _finalize(field, cache_key=lambda i: profile[i])


def _coincidence_pair_key(supports, extra=None):
    """Pair-signature function for fields whose sources are identical iid
    and whose evaluators are position-isomorphic: the joint law of
    (X_i, X_j) then depends only on which support slots coincide."""

    def key(i: int, j: int):
        order: dict[int, int] = {}
        for s in supports[i] + supports[j]:
            if s not in order:
                order[s] = len(order)
        sig = (
            tuple(order[s] for s in supports[i]),
            tuple(order[s] for s in supports[j]),
        )
        if extra is not None:
            return sig, extra(i), extra(j)
        return sig

    return key


def _pattern_indicator(tau: Sequence[int]) -> Callable:
    taus = np.asarray(tau, dtype=float)

    def f(*xs):
        out = np.ones_like(np.asarray(xs[0], dtype=float))
        for a in range(len(xs)):
            for b in range(a + 1, len(xs)):
                out = out * ((np.asarray(xs[a]) - np.asarray(xs[b])) * (taus[a] - taus[b]) > 0)
        return out

    return f


def build_pattern_field(
    n: int, tau: Sequence[int], gaps: Sequence[int | None], cap: int = DEFAULT_INDEX_CAP
) -> LatentSourceField:
    """Permutation-pattern counting field via the rank construction:
    iid Uniform(0,1) sources stand in for the permutation values, since
    only order relations enter the indicator.  Exact mean is 1/l!."""
    l = len(tau)
    if sorted(tau) != list(range(1, l + 1)):
        raise ValueError("tau must be a permutation of 1..l")
    field = build_constrained_ustat_field(
        n=n,
        m=0,
        f=_pattern_indicator(tau),
        gaps=gaps,
        source=ContinuousSource("uniform"),
        known_mean=1.0 / math.factorial(l),
        cap=cap,
    )
    field.metadata["family"] = "pattern"
    field.metadata["tau"] = tuple(int(t) for t in tau)
    return field


def build_word_field(
    word: Sequence[int],
    n: int,
    alphabet_size: int,
    gaps: Sequence[int | None],
    cap: int = DEFAULT_INDEX_CAP,
) -> LatentSourceField:
    """Word-occurrence counting field over iid uniform letters 0..k-1."""
    w = np.asarray(word, dtype=float)

    def f(*xs):
        out = np.ones_like(np.asarray(xs[0], dtype=float))
        for k, x in enumerate(xs):
            out = out * (np.asarray(x) == w[k])
        return out

    field = build_constrained_ustat_field(
        n=n,
        m=0,
        f=f,
        gaps=gaps,
        source=uniform_letters(alphabet_size),
        cap=cap,
    )
    field.metadata["family"] = "word"
    field.metadata["word"] = tuple(int(x) for x in word)
    field.metadata["alphabet_size"] = alphabet_size
    return field


def build_decorated_graph_field(
    n: int,
    pattern_edges: Sequence[tuple[int, int]],
    edge_source: Source,
    h: Callable | None = None,
    decoration: Sequence[float] | None = None,
    cap: int = DEFAULT_INDEX_CAP,
) -> LatentSourceField:
    """Decorated injective homomorphism field over iid edge variables.

    Field indices are the injections phi of the pattern's vertices into
    [n]; X_phi is the centered product over pattern edges uv of
    h(decoration(uv), g(phi(u), phi(v))), where g holds the C(n,2) edge
    sources of the complete host graph.  Induced A_phi is the set of
    injections whose image shares an edge with phi's image.
    """
    edges = [tuple(sorted((int(u), int(v)))) for u, v in pattern_edges]
    if not edges:
        raise ValueError("pattern must have at least one edge")
    if any(u == v for u, v in edges) or len(set(edges)) != len(edges):
        raise ValueError("pattern must be simple")
    v = max(max(e) for e in edges) + 1
    if n < v:
        raise InvalidSize(f"n={n} smaller than pattern order {v}")
    n_inj = math.perm(n, v)
    if n_inj > cap:
        raise GraphTooLarge(f"{n_inj} injections exceed cap {cap}")
    deco = np.ones(len(edges)) if decoration is None else np.asarray(decoration, dtype=float)
    if deco.shape != (len(edges),):
        raise ValueError("decoration must have one value per pattern edge")
    hh = h if h is not None else (lambda x, y: x * y)

    def ev(*cols):
        out = hh(deco[0], cols[0])
        for e in range(1, len(cols)):
            out = out * hh(deco[e], cols[e])
        return out

    injections = np.array(list(itertools.permutations(range(n), v)), dtype=np.int64)
    edge_ids = np.empty((n_inj, len(edges)), dtype=np.int64)
    for e, (a, b) in enumerate(edges):
        ua = np.minimum(injections[:, a], injections[:, b])
        ub = np.maximum(injections[:, a], injections[:, b])
        edge_ids[:, e] = ua * (2 * n - ua - 1) // 2 + (ub - ua - 1)
    supports = tuple(tuple(int(s) for s in row) for row in edge_ids)
    field = LatentSourceField(
        sources=(edge_source,) * math.comb(n, 2),
        supports=supports,
        evaluators=(ev,) * n_inj,
        center=True,
        metadata={
            "family": "decorated_graph",
            "n": n,
            "v": v,
            "pattern_edges": edges,
            "injections": injections,
            "edge_ids": edge_ids,
            "index_transitive": True,
        },
    )
    field.metadata["profile_key"] = lambda i: 0
    # one local enumeration serves every injection (iid edge variables)
    field.means = np.full(n_inj, exact_index_mean(field, 0))
    identity_product = h is None and decoration is None
    if identity_product:
        field.metadata["batch_sum"] = _product_batch_sum(n, v, edges)
    return field


def _product_batch_sum(n: int, v: int, edges) -> Callable | None:
    """Fast whole-field sums for plain product decorations.

    Covers the single-edge and triangle patterns used at scale; other
    patterns fall back to per-index evaluation.
    """
    triu = np.triu_indices(n, k=1)

    def to_adj(rows: np.ndarray) -> np.ndarray:
        adj = np.zeros((rows.shape[0], n, n))
        adj[:, triu[0], triu[1]] = rows
        adj[:, triu[1], triu[0]] = rows
        return adj

    key = tuple(sorted(map(tuple, edges)))
    if v == 2 and key == ((0, 1),):
        def batch_sum(rows: np.ndarray) -> np.ndarray:
            return 2.0 * rows.sum(axis=1)

        return batch_sum
    if v == 3 and key == ((0, 1), (0, 2), (1, 2)):
        def batch_sum(rows: np.ndarray) -> np.ndarray:
            adj = to_adj(rows)
            return np.einsum("rij,rij->r", adj @ adj, adj)

        return batch_sum
    return None
