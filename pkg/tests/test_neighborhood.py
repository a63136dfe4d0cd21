"""Dependence-skeleton tests.

Core claims:
    - reverse neighborhoods, pair interference, kappa/tau match brute-force
      enumeration of their definitions on hand-checked systems
    - the default pair cover is the union A_i | A_j and satisfies containment
    - validation reports every violation and never raises
    - kappa/tau are relabeling-invariant, satisfy the double-counting
      identity, grow monotonically under cover enlargement, and obey
      tau <= 2 kappa^2 for the union cover
"""

from __future__ import annotations

import numpy as np
import pytest

import locdep.fields as fields
import locdep.neighborhood as nb
from locdep.errors import MissingPairCover


def window_system(n: int, m: int) -> nb.NeighborhoodSystem:
    return nb.make_system(
        [tuple(j for j in range(i - m, i + m + 1) if 0 <= j < n) for i in range(n)]
    )


def brute_reverse(sys: nb.NeighborhoodSystem) -> list[set[int]]:
    return [{k for k in range(sys.n) if i in sys.A[k]} for i in range(sys.n)]


def brute_interference(sys: nb.NeighborhoodSystem) -> list[set[tuple[int, int]]]:
    out = []
    for i in range(sys.n):
        d = set()
        for k in range(sys.n):
            for l in sys.A[k]:
                if i in sys.A2[(k, l)]:
                    d.add((k, l))
        out.append(d)
    return out


def random_system(rng: np.random.Generator, n: int) -> nb.NeighborhoodSystem:
    A = []
    for i in range(n):
        extra = rng.choice(n, size=rng.integers(0, min(3, n)), replace=False)
        A.append(sorted({i, *extra.tolist()}))
    return nb.make_system(A)


def test_reverse_neighborhoods_hand_example():
    sys = nb.make_system([(0, 1), (1,)])
    assert nb.reverse_neighborhoods(sys) == ((0,), (0, 1))


def test_reverse_neighborhoods_iid_identity():
    sys = nb.iid_system(5)
    assert nb.reverse_neighborhoods(sys) == tuple((i,) for i in range(5))


def test_reverse_neighborhoods_window_brute_force():
    sys = window_system(6, 1)
    rev = nb.reverse_neighborhoods(sys)
    assert [set(r) for r in rev] == brute_reverse(sys)
    # symmetric windows: N_i = A_i
    assert rev == sys.A


def test_pair_interference_iid():
    sys = nb.iid_system(4)
    D = nb.pair_interference(sys)
    assert D == tuple(((i, i),) for i in range(4))
    assert nb.derive(sys).tau == 1


def test_pair_interference_window_interior():
    sys = window_system(8, 1)
    D = nb.pair_interference(sys)
    assert [set(d) for d in D] == brute_interference(sys)
    assert len(D[3]) == 11  # interior index of the m=1 window system


def test_pair_interference_single_index():
    sys = nb.iid_system(1)
    assert nb.pair_interference(sys) == (((0, 0),),)


def test_pair_interference_missing_cover_raises():
    sys = nb.make_system([(0, 1), (0, 1)])
    broken = nb.NeighborhoodSystem(
        n=2, A=sys.A, A2={k: v for k, v in sys.A2.items() if k != (0, 1)}
    )
    with pytest.raises(MissingPairCover):
        nb.pair_interference(broken)


def test_kappa_tau_values():
    assert nb.derive(nb.iid_system(3)).kappa == 1
    d = nb.derive(window_system(10, 1))
    assert (d.kappa, d.tau) == (4, 11)


def test_kappa_cycle_closed_neighborhoods():
    # cycle dependency field: closed neighborhoods, degree d = 2, kappa = 2d
    for n in (5, 6, 9):
        f = fields.build_graph_dependency(n, [(i, (i + 1) % n) for i in range(n)],
                                          fields.rademacher())
        d = nb.derive(fields.induced_neighborhoods(f))
        assert d.kappa == 4


def test_default_pair_cover_union():
    cover = nb.default_pair_cover(((0, 1), (1, 2), (2,)))
    assert cover[(0, 1)] == (0, 1, 2)
    assert cover[(0, 0)] == (0, 1)
    iid_cover = nb.default_pair_cover(((0,), (1,)))
    assert iid_cover[(0, 0)] == (0,)


def test_default_pair_cover_window_interior():
    sys = window_system(8, 1)
    assert sys.A2[(3, 4)] == (2, 3, 4, 5)


def test_validate_valid_system_empty_report():
    rep = nb.validate_structure(nb.iid_system(4))
    assert rep.ok and not rep.warnings


def test_validate_containment_violation():
    sys = nb.make_system([(0, 1), (0, 1)])
    bad = nb.NeighborhoodSystem(
        n=2, A=sys.A, A2={**sys.A2, (0, 1): (1,)}
    )
    rep = nb.validate_structure(bad)
    assert any("containment" in v for v in rep.violations)


def test_validate_reflexivity_violation():
    sys = nb.NeighborhoodSystem(n=3, A=((0,), (1,), (1,)), A2={})
    rep = nb.validate_structure(sys)
    assert any("reflexivity: 2" in v for v in rep.violations)


def test_validate_warns_on_asymmetric_cover():
    sys = nb.make_system([(0, 1), (0, 1)])
    lop = nb.NeighborhoodSystem(n=2, A=sys.A, A2={**sys.A2, (0, 1): (0, 1)})
    rep = nb.validate_structure(lop)
    assert rep.ok  # containment A_ij >= A_i still holds
    assert not rep.warnings
    tighter = nb.NeighborhoodSystem(n=2, A=((0, 1), (1,)), A2={
        (0, 0): (0, 1), (0, 1): (0, 1), (1, 1): (1,)})
    rep2 = nb.validate_structure(tighter)
    assert rep2.ok


def test_relabeling_invariance_of_kappa_tau():
    rng = np.random.default_rng(7)
    for _ in range(20):
        sys = random_system(rng, int(rng.integers(2, 9)))
        d = nb.derive(sys)
        perm = rng.permutation(sys.n)
        d2 = nb.derive(nb.permute(sys, perm))
        assert (d.kappa, d.tau) == (d2.kappa, d2.tau)


def test_double_counting_identity():
    rng = np.random.default_rng(11)
    for _ in range(20):
        sys = random_system(rng, int(rng.integers(2, 9)))
        rev = nb.reverse_neighborhoods(sys)
        assert sum(map(len, sys.A)) == sum(map(len, rev))


def test_cover_enlargement_monotonicity():
    rng = np.random.default_rng(13)
    for _ in range(20):
        sys = random_system(rng, int(rng.integers(2, 8)))
        d = nb.derive(sys)
        key = next(iter(sys.A2))
        grown = dict(sys.A2)
        grown[key] = tuple(range(sys.n))
        sys2 = nb.NeighborhoodSystem(n=sys.n, A=sys.A, A2=grown)
        d2 = nb.derive(sys2)
        assert d2.kappa >= d.kappa and d2.tau >= d.tau


def test_union_cover_tau_at_most_two_kappa_squared():
    rng = np.random.default_rng(17)
    for _ in range(30):
        sys = random_system(rng, int(rng.integers(2, 9)))
        d = nb.derive(sys)
        assert d.tau <= 2 * d.kappa**2


def test_json_round_trip_one_based():
    sys = window_system(4, 1)
    doc = nb.to_json_dict(sys)
    assert doc["A"][0] == [1, 2]  # 1-based
    back = nb.from_json_dict(doc)
    assert back == sys
