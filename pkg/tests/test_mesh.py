import numpy as np
import pytest

from heatbem import geometry as geo
from heatbem import mesh as msh


@pytest.fixture
def square_mesh():
    return msh.initial_mesh(geo.unit_square(), 1.0)


def test_initial_mesh_unit_square(square_mesh):
    assert square_mesh.n == 4
    assert square_mesh.total_measure() == pytest.approx(4.0, abs=1e-12)
    assert np.all(square_mesh.lt == 0)
    assert np.all(square_mesh.lx == 0)


def test_initial_mesh_l_shape():
    m = msh.initial_mesh(geo.l_shape(), 1.0)
    assert m.n == 8
    assert m.total_measure() == pytest.approx(8.0, abs=1e-12)


def test_uniform_refine_counts(square_mesh):
    m1 = msh.uniform_refine(square_mesh)
    assert m1.n == 16
    m2 = msh.uniform_refine(m1)
    assert m2.n == 64
    assert np.all(m2.lt == 2) and np.all(m2.lx == 2)
    assert m2.total_measure() == pytest.approx(4.0, abs=1e-12)


def test_refine_isotropic_nothing_and_all(square_mesh):
    same = msh.refine_isotropic(square_mesh, set())
    assert same.n == square_mesh.n
    allm = msh.refine_isotropic(square_mesh, set(range(4)))
    uni = msh.uniform_refine(square_mesh)
    assert allm.n == uni.n
    assert np.array_equal(np.sort(allm.a), np.sort(uni.a))


def test_refine_isotropic_single_element():
    m0 = msh.uniform_refine(msh.initial_mesh(geo.unit_square(), 1.0))
    m1 = msh.refine_isotropic(m0, {5})
    # one quadrisection, neighbors untouched (one hanging node is legal)
    assert m1.n == m0.n + 3
    assert _one_hanging_node_per_edge(m1)


def test_refine_isotropic_closure_cascade():
    m = msh.initial_mesh(geo.unit_square(), 1.0)
    for _ in range(3):
        m = msh.refine_isotropic(m, {0})
    assert _one_hanging_node_per_edge(m)
    assert m.total_measure() == pytest.approx(4.0, abs=1e-12)


def _one_hanging_node_per_edge(m):
    # hanging nodes on an element edge = interior breakpoints contributed by
    # finer facet-sharing neighbors; the bisection structure bounds them by
    # one iff facet level differences are <= 1
    pi, pj = m.facet_pairs()
    return bool(
        np.all(np.abs(m.lt[pi] - m.lt[pj]) <= 1)
        and np.all(np.abs(m.lx[pi] - m.lx[pj]) <= 1)
    )


def test_refine_anisotropic_simple(square_mesh):
    m = msh.refine_anisotropic(square_mesh, {0}, set())
    assert m.n == 5
    assert np.sum(m.lx == 1) == 2
    assert m.total_measure() == pytest.approx(4.0, abs=1e-12)


def test_refine_anisotropic_all_matches_uniform(square_mesh):
    m = msh.refine_anisotropic(square_mesh, set(range(4)), set(range(4)))
    assert m.n == 16
    assert np.all(m.lt == 1) and np.all(m.lx == 1)


def test_refine_anisotropic_closure_bound(square_mesh):
    m = square_mesh
    for _ in range(4):
        # keep refining element 0 (whatever it is) in time only
        m = msh.refine_anisotropic(m, set(), {0})
    pi, pj = m.facet_pairs()
    assert np.all(np.abs(m.lt[pi] - m.lt[pj]) <= 1)
    assert np.all(np.abs(m.lx[pi] - m.lx[pj]) <= 1)
    assert m.total_measure() == pytest.approx(4.0, abs=1e-12)


def test_refinement_monotonicity(square_mesh):
    m0 = msh.uniform_refine(square_mesh)
    m1 = msh.refine_anisotropic(m0, {1, 2}, {3})
    assert m1.parent_ids is not None
    for i in range(m1.n):
        p = m1.parent_ids[i]
        assert m0.a[p] <= m1.a[i] and m1.b[i] <= m0.b[p]
        assert m0.c[p] <= m1.c[i] and m1.d[i] <= m0.d[p]


def test_neighbors_single_element():
    dom = geo.unit_square()
    m = msh.SpaceTimeMesh(dom, 1.0, [0.0], [1.0], [0.0], [4.0], [0], [0])
    assert list(m.neighbors_x(0)) == [0]
    assert list(m.neighbors_t(0)) == [0]


def test_neighbors_two_arc_closed_curve():
    # 2x2 tensor mesh on a closed curve split into 2 arcs: arcs touch at both
    # ends, so neighbors_x of any element is the whole time slab
    dom = geo.unit_square()
    m = msh.SpaceTimeMesh(
        dom, 1.0,
        a=[0, 0, 0.5, 0.5], b=[0.5, 0.5, 1, 1],
        c=[0, 2, 0, 2], d=[2, 4, 2, 4], lt=[1] * 4, lx=[1] * 4,
    )
    assert set(m.neighbors_x(0)) == {0, 1}
    assert set(m.neighbors_t(0)) == {0, 2}


def test_neighbors_wrap_around(square_mesh):
    m = msh.uniform_refine(square_mesh)
    # element with arc starting at 0 must see arc ending at L as x-neighbor
    i = int(np.nonzero((m.c == 0.0) & (m.a == 0.0))[0][0])
    j = int(np.nonzero((m.d == 4.0) & (m.a == 0.0))[0][0])
    assert j in m.neighbors_x(i)
    assert i in m.neighbors_x(j)


def test_neighbors_symmetry_random_mesh():
    rng = np.random.default_rng(5)
    m = msh.initial_mesh(geo.unit_square(), 1.0)
    for _ in range(3):
        ids = rng.choice(m.n, size=max(1, m.n // 3), replace=False)
        m = msh.refine_anisotropic(m, set(ids[: len(ids) // 2]), set(ids[len(ids) // 2:]))
    for i in range(0, m.n, 7):
        for j in m.neighbors_x(i):
            assert i in m.neighbors_x(j)
        for j in m.neighbors_t(i):
            assert i in m.neighbors_t(j)


def test_figure2_configuration_neighbors():
    # mesh fragment around J1 x K1 = [1/2,3/4] x [1/8,1/4] on Gamma = [0,1]:
    # the eta^x integration region couples it to arcs touching [1/8,1/4]
    # within overlapping slabs
    dom = geo.unit_square()
    a = [0.5, 0.5, 0.5, 0.0]
    b = [0.75, 0.75, 0.75, 0.5]
    c = [0.125, 0.0, 0.25, 0.125]
    d = [0.25, 0.125, 0.5, 0.25]
    m = msh.SpaceTimeMesh(dom, 0.75, a, b, c, d, [2, 2, 2, 1], [3, 3, 2, 3])
    nx = set(m.neighbors_x(0))
    assert nx == {0, 1, 2}
    nt = set(m.neighbors_t(0))
    assert nt == {0, 3}


def test_parabolic_uniform_first_step(square_mesh):
    m = msh.refine_parabolic(square_mesh, set(), "uniform")
    assert m.n == 64
    assert np.all(m.lt == 3) and np.all(m.lx == 1)
    assert msh.parabolic_window_ok(m)


def test_parabolic_uniform_iterates_inside_window(square_mesh):
    m = square_mesh
    sizes = [m.n]
    for _ in range(3):
        m = msh.refine_parabolic(m, set(), "uniform")
        sizes.append(m.n)
        assert msh.parabolic_window_ok(m)
    assert sizes[1] == 64


def test_parabolic_adaptive_empty_and_window(square_mesh):
    m0 = msh.refine_parabolic(square_mesh, set(), "uniform")
    same = msh.refine_parabolic(m0, set(), "adaptive")
    assert same.n == m0.n
    m1 = msh.refine_parabolic(m0, {0, 5}, "adaptive")
    assert m1.n > m0.n
    assert msh.parabolic_window_ok(m1)
    pi, pj = m1.facet_pairs()
    assert np.all(np.abs(m1.lt[pi] - m1.lt[pj]) <= 1)
    assert np.all(np.abs(m1.lx[pi] - m1.lx[pj]) <= 1)


def test_parabolic_rejects_bad_input():
    dom = geo.unit_square()
    m = msh.SpaceTimeMesh(dom, 1.0, [0.0], [1.0], [0.0], [0.25], [0], [2])
    with pytest.raises(ValueError):
        msh.refine_parabolic(m, set(), "uniform")


def test_mesh_dump_roundtrip(tmp_path, square_mesh):
    m = msh.refine_anisotropic(msh.uniform_refine(square_mesh), {0, 3}, {5})
    path = tmp_path / "mesh.txt"
    msh.write_mesh(m, path)
    m2 = msh.read_mesh(path, m.domain, m.T)
    assert m2.n == m.n
    assert np.array_equal(m2.a, m.a) and np.array_equal(m2.d, m.d)
    assert m2.total_measure() == pytest.approx(4.0, abs=1e-12)


def test_partition_preserved_across_strategies(square_mesh):
    rng = np.random.default_rng(2)
    m = square_mesh
    for k in range(4):
        ids = set(rng.choice(m.n, size=max(1, m.n // 4), replace=False).tolist())
        if k % 2 == 0:
            m = msh.refine_isotropic(m, ids)
        else:
            m = msh.refine_anisotropic(m, ids, set(list(ids)[:1]))
        assert m.total_measure() == pytest.approx(4.0, abs=1e-12)
