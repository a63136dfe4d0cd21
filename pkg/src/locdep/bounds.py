"""Berry-Esseen bound shapes and concentration-inequality components.

Unspecified absolute constants are stripped (set to 1) and every report is
labeled a *shape value*: downstream comparisons use ratios and rates, never
absolute bound values.  The explicit-constant results (16, 13, 27/11, 156,
8755) live in the oracle checkers, which consume the delta components
computed here.

Shapes (all dimensionless, invariant under X -> cX and index relabeling):

    main:             kappa^2/s^3 sum ||X||_4^3
                      + kappa^{1/2}(kappa + tau^{1/2})/s^2 (sum ||X||_4^4)^{1/2}
    self-normalized:  lambda * main,  lambda = kappa sum ||X||_2^2 / s^2
    general beta:     beta_1 + beta_2 + beta_3 with the literal
                      neighborhood sums (quadruple loops)
    graph:            degree-d specialization; lambda_1 = d sum E|X|^2 / s^2
    distributed U:    (m/sqrt(N)) ||h||_4^3/sigma_1^3, variance-deviation
                      companion, and the general per-block kappa/tau form
    constrained U:    n^{-b-1/2}, n^{-b/2-1/2} powers with b = 1 + #infinite gaps
    decorated:        n^{2v-4}, n^{3v-6} powers; lambda_2 = n^{v-2} sum E|eta|^2/s^2
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field as dc_field
from typing import Sequence

import numpy as np

from .errors import BlockTooSmall, ComplexityCapExceeded, DegenerateVariance
from .moments import KernelMoments, MomentTable, lam_scale
from .neighborhood import DerivedNeighborhoods, NeighborhoodSystem

DEFAULT_TERM_BUDGET = 10**9


@dataclass
class BoundReport:
    """A named bound-shape value with its per-term breakdown."""

    theorem: str
    value: float
    terms: dict[str, float]
    constant_policy: str = "C=1 shape"
    inputs: dict = dc_field(default_factory=dict)
    se: float | None = None

    def to_json_dict(self) -> dict:
        return {
            "theorem": self.theorem,
            "value": self.value,
            "terms": self.terms,
            "constant_policy": self.constant_policy,
            "inputs": {k: v for k, v in self.inputs.items() if isinstance(v, (int, float, str, bool))},
            "se": self.se,
        }


def _require_sigma(table: MomentTable) -> float:
    if table.degenerate:
        raise DegenerateVariance(f"sigma2={table.sigma2} is not positive")
    return table.sigma


def _sums(table: MomentTable) -> tuple[float, float, float]:
    return (
        float(np.sum(table.l2**2)),
        float(np.sum(table.l4**3)),
        float(np.sum(table.l4**4)),
    )


def _sum_ses(table: MomentTable) -> tuple[float, float, float] | None:
    if table.se_l4 is None or table.se_l2 is None or table.se_sigma2 is None:
        return None
    se_t2 = math.sqrt(float(np.sum((2 * table.l2 * table.se_l2) ** 2)))
    se_t3 = math.sqrt(float(np.sum((3 * table.l4**2 * table.se_l4) ** 2)))
    se_t4 = math.sqrt(float(np.sum((4 * table.l4**3 * table.se_l4) ** 2)))
    return se_t2, se_t3, se_t4


def _propagate(fn, values: dict[str, float], ses: dict[str, float]) -> float:
    """First-order uncertainty band by numeric linearization."""
    base = fn(**values)
    var = 0.0
    for name, se in ses.items():
        if not se:
            continue
        step = max(abs(values[name]) * 1e-6, 1e-12)
        bumped = dict(values)
        bumped[name] += step
        grad = (fn(**bumped) - base) / step
        var += (grad * se) ** 2
    return math.sqrt(var)


# ---------------------------------------------------------------------------
# kappa/tau shapes


def bound_main(table: MomentTable, kappa: int, tau: int) -> BoundReport:
    """The two-term shape of the main normalized-sum bound."""
    sigma = _require_sigma(table)
    _, t3, t4 = _sums(table)

    def shape(t3, t4, sigma2):
        s = math.sqrt(sigma2)
        return (
            kappa**2 / s**3 * t3,
            kappa**0.5 * (kappa + tau**0.5) / s**2 * math.sqrt(t4),
        )

    term1, term2 = shape(t3, t4, sigma**2)
    report = BoundReport(
        theorem="main",
        value=term1 + term2,
        terms={"third_moment": term1, "fourth_moment": term2},
        inputs={"kappa": kappa, "tau": tau, "sigma": sigma, "sum_l4_3": t3, "sum_l4_4": t4},
    )
    ses = _sum_ses(table)
    if ses is not None:
        report.se = _propagate(
            lambda t3, t4, sigma2: sum(shape(t3, t4, sigma2)),
            {"t3": t3, "t4": t4, "sigma2": table.sigma2},
            {"t3": ses[1], "t4": ses[2], "sigma2": table.se_sigma2},
        )
    return report


def bound_self_normalized(table: MomentTable, kappa: int, tau: int) -> BoundReport:
    """lambda-scaled shape of the self-normalized bound."""
    sigma = _require_sigma(table)
    t2, t3, t4 = _sums(table)
    lam = lam_scale(table, kappa)

    def shape(t2, t3, t4, sigma2):
        s = math.sqrt(sigma2)
        lam_ = kappa * t2 / sigma2
        return lam_ * (
            kappa**2 / s**3 * t3
            + kappa**0.5 * (kappa + tau**0.5) / s**2 * math.sqrt(t4)
        )

    base = bound_main(table, kappa, tau)
    report = BoundReport(
        theorem="self_normalized",
        value=lam * base.value,
        terms={
            "lambda": lam,
            "third_moment": lam * base.terms["third_moment"],
            "fourth_moment": lam * base.terms["fourth_moment"],
        },
        inputs={"kappa": kappa, "tau": tau, "sigma": sigma, "lambda": lam},
    )
    ses = _sum_ses(table)
    if ses is not None:
        report.se = _propagate(
            shape,
            {"t2": t2, "t3": t3, "t4": t4, "sigma2": table.sigma2},
            {"t2": ses[0], "t3": ses[1], "t4": ses[2], "sigma2": table.se_sigma2},
        )
    return report


# ---------------------------------------------------------------------------
# The literal beta sums and their delta relatives


class _Budget:
    def __init__(self, cap: int):
        self.cap = cap
        self.used = 0

    def spend(self, k: int):
        self.used += k
        if self.used > self.cap:
            raise ComplexityCapExceeded(
                f"nested-sum evaluation exceeded {self.cap} term visits"
            )


def _beta_sums(
    l4: np.ndarray,
    sys: NeighborhoodSystem,
    derived: DerivedNeighborhoods,
    budget: _Budget,
    third_union_includes_aj: bool,
) -> dict[str, float]:
    """The raw nested sums shared by the beta and delta-5/6/7 components.

    ``third_union_includes_aj`` switches the third second-order term
    between k in A_i | N_j | A_j (beta_2) and k in A_i | N_j (delta_6).
    """
    A = [set(a) for a in sys.A]
    N = [set(ns) for ns in derived.N]
    sizes = np.array([len(a) for a in sys.A], dtype=float)
    n = sys.n
    AuN = [A[k] | N[k] for k in range(n)]
    w_an = np.array([sum(l4[x] for x in AuN[k]) for k in range(n)])
    w_n = np.array([sum(l4[x] for x in N[k]) for k in range(n)])
    d_pair = np.array(
        [sum(l4[k] * l4[l] for (k, l) in derived.D[i]) for i in range(n)]
    )
    budget.spend(sum(len(s) for s in AuN) + sum(len(s) for s in N) + sum(len(d) for d in derived.D))

    b1a = float(np.sum(sizes**2 * l4**3))
    b1b = 0.0
    for i in range(n):
        b1b += sizes[i] * sum(l4[j] ** 3 for j in A[i])
    budget.spend(int(np.sum(sizes)))

    t21 = 0.0
    for i in range(n):
        for j in A[i]:
            cover = sys.pair_cover(i, j)
            budget.spend(len(cover))
            t21 += l4[i] * l4[j] * sum(l4[k] * w_an[k] for k in cover)
    t22 = 0.0
    for i in range(n):
        au = A[i] | N[i]
        budget.spend(len(au))
        t22 += sizes[i] ** 2 * l4[i] ** 3 * sum(l4[j] for j in au)
    t23 = 0.0
    for i in range(n):
        for j in A[i]:
            ks = (A[i] | N[j] | A[j]) if third_union_includes_aj else (A[i] | N[j])
            budget.spend(len(ks))
            t23 += sizes[i] * l4[j] ** 3 * sum(l4[k] for k in ks)

    t31 = 0.0
    for i in range(n):
        au = A[i] | N[i]
        budget.spend(len(au))
        t31 += sizes[i] ** 2 * l4[i] ** 3 * sum(l4[j] * w_n[j] for j in au)
    t32 = 0.0
    for i in range(n):
        for j in A[i]:
            ks = A[i] | N[j]
            budget.spend(len(ks))
            t32 += sizes[i] * l4[j] ** 3 * sum(l4[k] * w_n[k] for k in ks)
    t33 = float(np.sum(sizes**2 * l4**3 * d_pair))
    t34 = 0.0
    for i in range(n):
        t34 += sizes[i] * sum(l4[j] ** 3 * d_pair[j] for j in A[i])
    budget.spend(int(np.sum(sizes)))

    return {
        "b1a": b1a, "b1b": b1b,
        "t21": t21, "t22": t22, "t23": t23,
        "t31": t31, "t32": t32, "t33": t33, "t34": t34,
    }


def bound_general_beta(
    table: MomentTable,
    sys: NeighborhoodSystem,
    derived: DerivedNeighborhoods,
    budget: int = DEFAULT_TERM_BUDGET,
) -> BoundReport:
    """beta_1 + beta_2 + beta_3 with all nested sums evaluated literally
    over the stored neighborhood sets."""
    sigma = _require_sigma(table)
    raw = _beta_sums(table.l4, sys, derived, _Budget(budget), third_union_includes_aj=True)
    beta1 = (raw["b1a"] + raw["b1b"]) / sigma**3
    beta2 = math.sqrt((raw["t21"] + raw["t22"] + raw["t23"]) / sigma**4)
    beta3 = math.sqrt((raw["t31"] + raw["t32"] + raw["t33"] + raw["t34"]) / sigma**5)
    return BoundReport(
        theorem="general_beta",
        value=beta1 + beta2 + beta3,
        terms={"beta1": beta1, "beta2": beta2, "beta3": beta3},
        inputs={"sigma": sigma, "n": sys.n},
    )


# ---------------------------------------------------------------------------
# Application shapes


def bound_graph(table: MomentTable, d: int) -> BoundReport:
    """Dependency-graph shapes in the maximal degree d."""
    sigma = _require_sigma(table)
    t2, t3, t4 = _sums(table)

    def w1_shape(t3, t4, sigma2):
        s = math.sqrt(sigma2)
        return d**2 * t3 / s**3 + d**1.5 * math.sqrt(t4 / s**4)

    lam1 = d * t2 / sigma**2
    term1 = d**2 * t3 / sigma**3
    term2 = d**1.5 * math.sqrt(t4 / sigma**4)
    report = BoundReport(
        theorem="graph",
        value=term1 + term2,
        terms={
            "third_moment": term1,
            "fourth_moment": term2,
            "lambda1": lam1,
            "self_normalized": lam1 * (term1 + term2),
        },
        inputs={"d": d, "sigma": sigma, "degenerate_degree": d == 0},
    )
    ses = _sum_ses(table)
    if ses is not None:
        report.se = _propagate(
            w1_shape,
            {"t3": t3, "t4": t4, "sigma2": table.sigma2},
            {"t3": ses[1], "t4": ses[2], "sigma2": table.se_sigma2},
        )
    return report


def bound_distributed_u(
    kernel_moments: KernelMoments, n_total: int, m: int, block_sizes: Sequence[int]
) -> BoundReport:
    """Distributed U-statistic shapes: the normalized-statistic shape,
    the variance-deviation bound, and their sum (the unnormalized shape)."""
    if any(b < m for b in block_sizes):
        raise BlockTooSmall(f"every block needs >= m={m} points, got {list(block_sizes)}")
    s1 = kernel_moments.sigma1
    normalized = (m / math.sqrt(n_total)) * (kernel_moments.l4 / s1) ** 3
    ratio_sum = float(sum(b / (b - m + 1) for b in block_sizes))
    var_dev = m * kernel_moments.var / (n_total * s1**2) * ratio_sum
    return BoundReport(
        theorem="distributed_u",
        value=normalized + var_dev,
        terms={
            "normalized": normalized,
            "variance_deviation": var_dev,
            "unnormalized": normalized + var_dev,
        },
        inputs={
            "N": n_total,
            "m": m,
            "k": len(block_sizes),
            "sigma1": s1,
            "h_l4": kernel_moments.l4,
            "block_ratio_sum": ratio_sum,
        },
    )


def bound_constrained_u(
    table: MomentTable, n: int, b: int, sigma_fd: float | None = None
) -> BoundReport:
    """Constrained U-statistic shapes in the growth exponent b.

    ``sigma_fd`` is the scale constant with Var = sigma_fd^2 n^{2b-1}
    asymptotically; when absent it is estimated as sigma_n / n^{b-1/2}.
    """
    sigma = _require_sigma(table)
    t2, t3, t4 = _sums(table)
    if sigma_fd is None:
        sigma_fd = sigma / n ** (b - 0.5)
    if not sigma_fd > 0:
        raise DegenerateVariance(f"sigma_fd={sigma_fd} must be positive")

    def shapes(t2, t3, t4, sfd):
        term1 = n ** (-b - 0.5) / sfd**3 * t3
        term2 = n ** (-b / 2 - 0.5) / sfd**2 * math.sqrt(t4)
        scale = n ** (-b) / sfd**2 * t2
        return term1, term2, scale

    term1, term2, scale = shapes(t2, t3, t4, sigma_fd)
    report = BoundReport(
        theorem="constrained_u",
        value=term1 + term2,
        terms={
            "third_moment": term1,
            "fourth_moment": term2,
            "self_normalized_scale": scale,
            "self_normalized": scale * (term1 + term2),
        },
        inputs={"n": n, "b": b, "sigma_fd": sigma_fd},
    )
    ses = _sum_ses(table)
    if ses is not None:
        report.se = _propagate(
            lambda t2, t3, t4: sum(shapes(t2, t3, t4, sigma_fd)[:2]),
            {"t2": t2, "t3": t3, "t4": t4},
            {"t2": ses[0], "t3": ses[1], "t4": ses[2]},
        )
    return report


def bound_decorated(table: MomentTable, n: int, v: int) -> BoundReport:
    """Decorated injective homomorphism shapes.

    Consistent with kappa = Theta(n^{v-2}), the powers are n^{2v-4} on the
    third-moment term, n^{3v-6} inside the root, and n^{v-2} in lambda_2;
    for edge probabilities independent of n both terms are O(1/n).
    Zero-variance decorations give zero shapes.
    """
    e3 = float(np.sum(table.l3**3))
    e4 = float(np.sum(table.l4**4))
    e2 = float(np.sum(table.l2**2))
    if e2 == 0.0 and e3 == 0.0 and e4 == 0.0:
        return BoundReport(
            theorem="decorated",
            value=0.0,
            terms={"third_moment": 0.0, "fourth_moment": 0.0, "lambda2": 0.0,
                   "self_normalized": 0.0},
            inputs={"n": n, "v": v, "degenerate": True},
        )
    sigma = _require_sigma(table)

    def shapes(e2, e3, e4, sigma2):
        s = math.sqrt(sigma2)
        term1 = n ** (2 * v - 4) * e3 / s**3
        term2 = math.sqrt(n ** (3 * v - 6) * e4 / s**4)
        lam2 = n ** (v - 2) * e2 / sigma2
        return term1, term2, lam2

    term1, term2, lam2 = shapes(e2, e3, e4, table.sigma2)
    report = BoundReport(
        theorem="decorated",
        value=term1 + term2,
        terms={
            "third_moment": term1,
            "fourth_moment": term2,
            "lambda2": lam2,
            "self_normalized": lam2 * (term1 + term2),
        },
        inputs={"n": n, "v": v, "sigma": sigma},
    )
    if table.se_l3 is not None and table.se_sigma2 is not None:
        se_e3 = math.sqrt(float(np.sum((3 * table.l3**2 * table.se_l3) ** 2)))
        se_e4 = math.sqrt(float(np.sum((4 * table.l4**3 * table.se_l4) ** 2)))
        se_e2 = math.sqrt(float(np.sum((2 * table.l2 * table.se_l2) ** 2)))
        report.se = _propagate(
            lambda e2, e3, e4, sigma2: sum(shapes(e2, e3, e4, sigma2)[:2]),
            {"e2": e2, "e3": e3, "e4": e4, "sigma2": table.sigma2},
            {"e2": se_e2, "e3": se_e3, "e4": se_e4, "sigma2": table.se_sigma2},
        )
    return report


def bound_distributed_general(
    block_tables: Sequence[MomentTable],
    kappas: Sequence[int],
    taus: Sequence[int],
    sigma: float,
) -> BoundReport:
    """Per-block kappa/tau form of the distributed bound:
    s^{-3} sum_i kappa_i^2 sum_j ||X_ij||_4^3
    + s^{-2} (sum_i (kappa_i^3 + kappa_i tau_i) sum_j ||X_ij||_4^4)^{1/2}."""
    if not sigma > 0:
        raise DegenerateVariance(f"sigma={sigma} must be positive")
    if not (len(block_tables) == len(kappas) == len(taus)):
        raise ValueError("need one (kappa, tau) pair per block table")
    term1 = 0.0
    inner = 0.0
    for tbl, k_i, t_i in zip(block_tables, kappas, taus):
        term1 += k_i**2 * float(np.sum(tbl.l4**3))
        inner += (k_i**3 + k_i * t_i) * float(np.sum(tbl.l4**4))
    term1 /= sigma**3
    term2 = math.sqrt(inner) / sigma**2
    return BoundReport(
        theorem="distributed_general",
        value=term1 + term2,
        terms={"third_moment": term1, "fourth_moment": term2},
        inputs={"sigma": sigma, "k": len(block_tables)},
    )


# ---------------------------------------------------------------------------
# Delta components for the concentration checkers


def interference_set_of(
    sys: NeighborhoodSystem, A: Sequence[int]
) -> list[tuple[int, int]]:
    """D_A = {(i, j) : j in A_i, A & A_ij != {}}."""
    a_set = set(A)
    out = []
    for i, nbrs in enumerate(sys.A):
        for j in nbrs:
            if a_set & set(sys.pair_cover(i, j)):
                out.append((i, j))
    return out


def reverse_set_of(sys: NeighborhoodSystem, A: Sequence[int]) -> list[int]:
    """N_A = {k : A_k & A != {}}."""
    a_set = set(A)
    return [k for k, nbrs in enumerate(sys.A) if a_set & set(nbrs)]


def delta_components_prop1(
    table: MomentTable,
    sys: NeighborhoodSystem,
    derived: DerivedNeighborhoods,
    A: Sequence[int],
    B: Sequence[int],
    a: float,
    b: float,
    c: float,
    budget: int = DEFAULT_TERM_BUDGET,
) -> dict[str, float]:
    """delta_0..delta_7 of the randomized concentration inequality for
    S_A / sigma, evaluated literally over the neighborhood system."""
    if not A or not B:
        raise ValueError("A and B must be nonempty")
    if not (a <= b and c >= 1):
        raise ValueError("need a <= b and c >= 1")
    sigma = _require_sigma(table)
    l4 = table.l4
    N = derived.N
    n_a = reverse_set_of(sys, A)
    d_a = interference_set_of(sys, A)
    raw = _beta_sums(l4, sys, derived, _Budget(budget), third_union_includes_aj=False)
    delta = {
        "delta0": (b - a) / 100.0,
        "delta1": c / sigma * float(sum(l4[i] for i in n_a)),
        "delta2": c / sigma * float(sum(l4[m] for m in B)),
        "delta3": c / sigma**2 * float(sum(l4[k] * l4[m] for m in B for k in N[m])),
        "delta4": c / sigma**2 * float(sum(l4[i] * l4[j] for (i, j) in d_a)),
        "delta5": c / sigma**3 * (raw["b1a"] + raw["b1b"]),
        "delta6": math.sqrt(c**2 / sigma**4 * (raw["t21"] + raw["t22"] + raw["t23"])),
        "delta7": math.sqrt(
            c**2 / sigma**5 * (raw["t31"] + raw["t32"] + raw["t33"] + raw["t34"])
        ),
    }
    return delta


def delta_components_prop2(
    table: MomentTable,
    sys: NeighborhoodSystem,
    derived: DerivedNeighborhoods,
    A: Sequence[int],
    B: Sequence[int],
    a: float,
    b: float,
    c: float,
) -> tuple[float, dict[str, float]]:
    """(lambda, delta_1..delta_4) of the self-normalized concentration
    inequality for S_A / Vbar_A."""
    if not A or not B:
        raise ValueError("A and B must be nonempty")
    if not (a <= b and c >= 1):
        raise ValueError("need a <= b and c >= 1")
    sigma = _require_sigma(table)
    l4 = table.l4
    kappa, tau = derived.kappa, derived.tau
    lam = lam_scale(table, kappa)
    n_a = reverse_set_of(sys, A)
    a_sets = [set(x) for x in sys.A]
    n_sets = [set(x) for x in derived.N]
    d4_sq = (
        lam**2
        * c**2
        / sigma**2
        * float(
            sum(
                l4[k] * l4[l]
                for k in n_a
                for l in (n_sets[k] | a_sets[k])
            )
        )
    )
    delta = {
        "delta1": c / sigma * float(sum(l4[m] for m in B)),
        "delta2": c * lam * kappa**2 * len(A) ** 2 / sigma**3 * float(np.sum(l4**3)),
        "delta3": c
        * lam
        * kappa**0.5
        * (kappa + tau**0.5)
        * len(A) ** 0.5
        / sigma**2
        * math.sqrt(float(np.sum(l4**4))),
        "delta4": math.sqrt(d4_sq),
    }
    return lam, delta
