import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from tilestream.ctqc import NeighborSearchList, compute_smi, local_search, neighbors, refine, refine_for_chunk, smi_table
from tilestream.fixtures import EXAMPLE_TILES, example_tables, worked_meta
from tilestream.model import ChunkMeta
from tilestream.tqa import Assignment, assign_quality_dp, assignment_units


def _smi(tab, levels):
    return sum(tab[k][j - 1] for k, j in enumerate(levels))


def test_smi_hand_value():
    now = ChunkMeta(np.array([[1.0], [1.0]]), np.array([[2.0], [2.0]]), np.array([[0.3], [0.4]]))
    nxt = ChunkMeta(np.array([[1.0], [1.0]]), np.array([[2.0], [2.0]]), np.array([[0.5], [0.3]]))
    a = Assignment((1, 2), (1, 1))
    vli = np.array([[1.0], [0.5]])
    assert compute_smi(a, 0.5, now, nxt, vli) == pytest.approx(1.55, rel=1e-12)
    assert smi_table(a.tiles, 0.5, now, nxt, vli).sum() == pytest.approx(1.55, rel=1e-12)


def test_smi_reduces_to_vli():
    meta = worked_meta()
    now, nxt = meta.chunks
    a = Assignment(EXAMPLE_TILES, (4, 3, 2, 1))
    vli = np.tile([1.0, 0.8, 0.5, 0.4], (4, 1))
    assert compute_smi(a, 0.0, now, nxt, vli) == pytest.approx(0.4 + 0.5 + 0.8 + 1.0)
    assert compute_smi(a, 0.7, now, now, vli) == pytest.approx(0.4 + 0.5 + 0.8 + 1.0)


def test_neighbors_example():
    _, units = example_tables()
    nb = neighbors((4, 3, 3, 3), 13, 4, units)
    assert nb == [(3, 3, 3, 3), (4, 2, 3, 3), (4, 3, 2, 3), (4, 3, 3, 2)]


def test_neighbors_edge_cases():
    assert neighbors((1,), 10, 1, np.array([[1]])) == []
    _, units = example_tables()
    top = neighbors((4, 4, 4, 4), 10**9, 4, units)
    assert len(top) == 4 and all(sum(v) == 15 for v in top)


def test_nsl_fifo_eviction():
    nsl = NeighborSearchList(2)
    for x in ("a", "b", "a", "c"):
        nsl.insert(x)
    assert nsl.entries() == ["b", "c"] and "a" not in nsl and len(nsl) == 2
    with pytest.raises(ValueError):
        NeighborSearchList(0)


def test_worked_example_moves_to_all_threes():
    meta = worked_meta()
    now, nxt = meta.chunks
    costs, units = example_tables()
    initial = assign_quality_dp(EXAMPLE_TILES, 13, costs, units)
    assert initial.levels == (4, 3, 3, 3)
    vli = np.tile(np.array([4.0, 3.0, 2.0, 1.1]) / 4, (4, 1))
    out = refine_for_chunk(initial, 13, units, 0.5, now, nxt, vli)
    assert out.levels == (3, 3, 3, 3)


def test_local_minimum_is_kept():
    tab = np.array([[3.0, 1.0, 2.0], [3.0, 1.0, 2.0]])
    units = np.array([[1, 2, 3], [1, 2, 3]])
    start = Assignment((1, 2), (2, 2), 4, 0.0)
    assert refine(start, 6, units, tab).levels == (2, 2)


@st.composite
def walks(draw):
    n = draw(st.integers(1, 5))
    L = draw(st.integers(1, 4))
    tab = np.array(draw(st.lists(st.floats(-5, 5), min_size=n * L, max_size=n * L))).reshape(n, L)
    steps = np.array(draw(st.lists(st.integers(0, 3), min_size=n * L, max_size=n * L))).reshape(n, L)
    units = np.cumsum(steps, axis=1)
    levels = tuple(draw(st.integers(1, L)) for _ in range(n))
    slack = draw(st.integers(0, 6))
    budget = assignment_units(units, levels) + slack
    alpha = draw(st.integers(1, 12))
    cap = draw(st.integers(1, 60))
    nsl = draw(st.integers(1, 25))
    return tab, units, levels, budget, alpha, cap, nsl


@given(walks())
def test_refine_properties(w):
    tab, units, levels, budget, alpha, cap, nsl = w
    start = Assignment(tuple(range(1, len(levels) + 1)), levels, assignment_units(units, levels), 0.0)
    path = []
    out = local_search(start, budget, units, tab, alpha, nsl, cap, path=path)
    res = out.assignment
    assert _smi(tab, res.levels) <= _smi(tab, levels) + 1e-12
    assert out.smi == pytest.approx(_smi(tab, res.levels), abs=1e-9)
    assert assignment_units(units, res.levels) == res.units <= budget
    assert all(1 <= j <= tab.shape[1] for j in res.levels)
    assert out.iterations <= cap
    assert out.reason in ("alpha", "stuck", "cap")
    assert path[0] == levels and len(path) <= out.iterations + 1
    for i, c in enumerate(path):
        assert c not in path[max(0, i - nsl) : i]
        assert assignment_units(units, c) <= budget


def test_no_lowering_when_only_quality_matters(rng):
    # with qs = 0 the indicator is pure video loss, strictly falling in level
    for _ in range(300):
        L = int(rng.integers(2, 5))
        d = np.sort(rng.uniform(1.0, 3.0, (3, L)), axis=1)[:, ::-1]
        tab = d * rng.uniform(0.1, 1.0, (3, 1))
        units = np.cumsum(rng.integers(1, 4, (3, L)), axis=1)
        budget = int(units.max(axis=1).sum())
        costs = rng.uniform(0, 2, (3, L))
        initial = assign_quality_dp((1, 2, 3), budget, costs, units)
        out = refine(initial, budget, units, tab)
        assert all(a >= b for a, b in zip(out.levels, initial.levels))
