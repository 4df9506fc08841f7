import csv
import itertools
import math

import numpy as np
import pytest
from scipy.spatial import cKDTree

from effcycle.chains import (
    hat_integrals, is_relative_cycle, l1_norm, low_volume_mass, mu_t,
    omega_eps, orientation_mismatch_mass, theta,
)
from effcycle.hyperbolic import INF, GeometryError, IdealPoint, Point3, apply, busemann_level, inverse
from effcycle.manifold import (
    _orbit_map, cached_develop, figure8, gieseking, orbit_distance, thick_part,
)
from effcycle.spine import (
    GenericityError, PlacementError, _apply_affine, ThetaSpine, adapted_triangulation, base_census,
    build_minimizing_chain, characteristic_cover, cusp_cellularization, default_theta,
    dual_spine, dualize_back, insert_theta_spines, placed_vertices, placement_point, simplified_theta,
    theta_census, tower_row, write_tower_csv,
)
from effcycle.volume import V3


@pytest.fixture(scope="module")
def tri():
    return figure8()


@pytest.fixture(scope="module")
def dev(tri):
    return cached_develop(tri)


@pytest.fixture(scope="module")
def cell(tri):
    return cusp_cellularization(tri)


# ------------------------------------------------------------------ dual spine

def dual_count_oracle(tri):
    """Tetrahedra, glued face pairs, and edge classes counted from the raw gluing."""
    n = tri.num_tetrahedra
    parent = {}

    def find(x):
        parent.setdefault(x, x)
        while parent[x] != x:
            x = parent[x]
        return x

    for t in range(n):
        for e in itertools.combinations(range(4), 2):
            for f in set(range(4)) - set(e):
                p = tri.perms[t][f]
                other = (tri.neighbors[t][f], frozenset((p[e[0]], p[e[1]])))
                a, b = find((t, frozenset(e))), find(other)
                if a != b:
                    parent[a] = b
    roots = {find(x) for x in list(parent)}
    return n, 4 * n // 2, len(roots)


@pytest.mark.parametrize("make", [figure8, gieseking])
def test_dual_spine_counts(make):
    tri = make()
    X = dual_spine(tri)
    assert (len(X.vertices), len(X.edges), len(X.regions)) == dual_count_oracle(tri)
    assert X.count("A") == tri.num_tetrahedra
    assert X.special and X.euler_characteristic() == 0


def test_dual_spine_literal_counts():
    assert [len(getattr(dual_spine(figure8()), k)) for k in ("vertices", "edges", "regions")] == [2, 4, 2]
    assert [len(getattr(dual_spine(gieseking()), k)) for k in ("vertices", "edges", "regions")] == [1, 2, 1]


# ------------------------------------------------------------------ cellularization

def test_cellularization_counts(cell):
    assert cell.counts() == {"vertices": 8, "edges": 12, "regions": 4}
    assert cell.euler_characteristic() == 0
    for s in cell.sites:
        poly = cell.cell(s)
        assert len(poly) == 6
        assert np.allclose([abs(v - s) for v in poly], 1 / math.sqrt(3))


def test_region_identification_is_deck_map(cell, dev):
    # the pairing isometry agrees with the deck transformation on the bisecting hemisphere
    for k, partner, m in cell.pairing:
        s = cell.sites[k]
        g = inverse(_orbit_map(dev, IdealPoint(s)))
        c = g.matrix[1, 0] / np.sqrt(np.linalg.det(g.matrix))
        R = 1 / abs(c)
        for v in cell.cell(s):
            z = s + 0.9 * (v - s)
            q = apply(g, Point3(z.real, z.imag, math.sqrt(R * R - abs(z - s) ** 2)))
            assert abs(q.z - _apply_affine(m, z)) < 1e-9
        order = lambda w: (round(w.real, 6), round(w.imag, 6))
        image = sorted((_apply_affine(m, v) for v in cell.cell(s)), key=order)
        assert np.allclose(image, sorted(cell.cell(partner), key=order), atol=1e-9)


def test_nonorientable_rejected():
    with pytest.raises(GeometryError):
        cusp_cellularization(gieseking())


# ------------------------------------------------------------------ census oracles

def sample_polyline(pts, step):
    out = []
    for p, q in zip(pts[:-1], pts[1:]):
        n = max(2, int(abs(q - p) / step))
        out.extend(p + (q - p) * np.linspace(0, 1, n, endpoint=False))
    out.append(pts[-1])
    return np.array(out)


def nearest_site(cell, zs):
    """Nearest site translate (plane position) for every sample, over a large patch of the plane."""
    a, b = cell.base_lattice
    cands = np.array([s + m * a + n * b for s in cell.sites for m in range(-30, 31) for n in range(-12, 13)])
    _, idx = cKDTree(np.c_[cands.real, cands.imag]).query(np.c_[zs.real, zs.imag])
    return cands[idx]


def ccw(a, b, c):
    return ((b - a).conjugate() * (c - a)).imag


def count_crossings(P, Q):
    """Proper crossings between two polylines by the orientation predicate."""
    a, b = P[:-1, None], P[1:, None]
    c, d = Q[None, :-1], Q[None, 1:]
    hit = (ccw(a, b, c) * ccw(a, b, d) < 0) & (ccw(c, d, a) * ccw(c, d, b) < 0)
    return int(hit.sum())


def reduce_mod(z, lattice):
    a, b = lattice
    det = (a.conjugate() * b).imag
    s = (z.conjugate() * b).imag / det
    t = (a.conjugate() * z).imag / det
    return z - math.floor(s + 1e-7) * a - math.floor(t + 1e-7) * b


def census_oracle(cell, th, dev, step=5e-4):
    """Dense sampling: B from changes of nearest site, D from traces mapped by the deck map."""
    lattice = th.lattice
    runs = []  # (site plane position, sampled run)
    B = 0
    for e in th.edges:
        zs = sample_polyline(list(e), step)
        lab = nearest_site(cell, zs)
        cut = np.nonzero(np.abs(np.diff(lab)) > 1e-9)[0]
        B += len(cut)
        start = 0
        for c in list(cut + 1) + [len(zs)]:
            runs.append((lab[start], zs[start:c]))
            start = c
    by_site = {}
    for c, run in runs:
        r = reduce_mod(c, lattice)
        key = (round(r.real, 5), round(r.imag, 5))
        by_site.setdefault(key, []).append(run - (c - r))
    D = 0
    a, b = cell.base_lattice
    x = cell.x
    for k, _, _ in cell.pairing:
        s = cell.sites[k]
        g = inverse(_orbit_map(dev, IdealPoint(s)))
        R = 1 / abs(g.matrix[1, 0] / np.sqrt(np.linalg.det(g.matrix)))
        partner = apply(g, INF).z
        for m in range(x):
            for n in range(x):
                lam = m * a + n * b
                r1 = reduce_mod(s + lam, lattice)
                r2 = reduce_mod(partner + lam, lattice)
                P = [run + (s + lam - r1) for run in by_site.get((round(r1.real, 5), round(r1.imag, 5)), [])]
                Q = [run + (partner + lam - r2) for run in by_site.get((round(r2.real, 5), round(r2.imag, 5)), [])]
                for run in P:
                    pts = []
                    for z in run:
                        w = z - lam
                        q = apply(g, Point3(w.real, w.imag, math.sqrt(max(R * R - abs(w - s) ** 2, 0))))
                        pts.append(q.z + lam)
                    for other in Q:
                        D += count_crossings(np.array(pts), other)
    return B, D


def test_base_census_matches_sampling_oracle(cell, dev):
    th = default_theta(cell)
    cen = theta_census(cell, th)
    assert (cen.B, cen.D) == census_oracle(cell, th, dev)
    assert cen.C == 2 and cen.E == 2


def test_census_isotopy_invariant(cell):
    base = theta_census(cell, default_theta(cell))
    moved = default_theta(cell, complex(0.131, 0.072), complex(0.482, 0.268))
    c2 = theta_census(cell, moved)
    assert (c2.B, c2.C, c2.D) == (base.B, base.C, base.D)


def test_genericity_violation(cell):
    # a vertex on the cell edge between the sites 0 and 1 (the line Re z = 1/2)
    with pytest.raises(GenericityError):
        theta_census(cell, default_theta(cell, complex(0.5, 0.1), complex(0.8, 0.3)))


def test_theta_spine_disc_complement(cell):
    th = default_theta(cell)
    assert th.is_disc_complement() and th.is_embedded()
    a, b = cell.lattice
    bad = ThetaSpine(cell.lattice, th.u, th.v, ((th.u, th.v), (th.u, th.v + a), (th.u, th.v + 2 * b)))
    assert not bad.is_disc_complement()


# ------------------------------------------------------------------ covers

def test_cover_identity_at_one(cell):
    one = characteristic_cover(cell, 1)
    th = default_theta(cell)
    assert one.degree == 1
    assert simplified_theta(one, th) == th


def test_cover_degree_and_counts(cell):
    c3 = characteristic_cover(cell, 3)
    assert c3.degree == 9
    assert c3.counts() == {"vertices": 72, "edges": 108, "regions": 36}
    assert c3.euler_characteristic() == 0


def test_simplified_theta_grid_oracle(cell, dev):
    th = default_theta(cell)
    c3 = characteristic_cover(cell, 3)
    th3 = simplified_theta(c3, th)
    assert th3.is_disc_complement() and th3.is_embedded()
    cen = theta_census(c3, th3)
    assert (cen.B, cen.D) == census_oracle(c3, th3, dev)
    assert cen.C == 2


@pytest.mark.parametrize("x", [1, 2, 3, 5])
def test_crossing_growth_linear(cell, x):
    th = default_theta(cell)
    cover = characteristic_cover(cell, x)
    cen = theta_census(cover, simplified_theta(cover, th))
    base = theta_census(cell, th)
    assert cen.B <= 2 * x * base.B
    assert cen.D <= 2 * x * base.D
    assert cen.C == base.C


# ------------------------------------------------------------------ enlarged spine / adapted triangulation

def test_insert_and_dualize(tri, dev):
    X = dual_spine(tri)
    Xp = insert_theta_spines(X, tri)
    assert Xp.count("A") == X.count("A")
    cen = base_census(tri)
    assert (Xp.count("B"), Xp.count("C"), Xp.count("D")) == (cen.B, cen.C, cen.D)
    at = dualize_back(Xp)
    assert at.residual_count == cen.B + cen.C + cen.D
    assert at.non_residual_count == 2
    assert at.boundary == [(1, 3, 2)]
    assert len(set(at.injection.values())) == len(at.injection) == tri.num_tetrahedra


def test_dualize_rejects_non_special(tri):
    Xp = insert_theta_spines(dual_spine(tri), tri)
    Xp.special = False
    with pytest.raises(GeometryError):
        dualize_back(Xp)


@pytest.mark.parametrize("i", [1, 4])
def test_adaptedness_geometric(dev, i):
    sec = thick_part(dev.tri, i, dev)
    for t in range(2):
        tile = dev.canonical_simplex(t)
        for p, xi in zip(placed_vertices(sec, tile), tile.vertices):
            assert busemann_level(xi, p) == pytest.approx(sec.horoball(xi).level, rel=1e-9)


# ------------------------------------------------------------------ tower

def test_tower_rows(tri):
    rows = [tower_row(i) for i in range(1, 11)]
    vB, vC, vD = rows[0].base
    C = 2 * (vB + vD) + 2 * vC
    for r in rows:
        assert r.d == r.i ** 2
        assert all(r.bounds())
        assert r.v_B <= 2 * r.i * vB and r.v_C <= 2 * vC and r.v_D <= 2 * r.i * vD
        assert r.ratio <= C / r.i
        assert r.envelope() == C / r.i
    assert rows[0].d == 1 and rows[0].ratio == rows[0].r
    assert rows[-1].ratio < rows[0].ratio / 5
    assert all(a.ratio > b.ratio for a, b in zip(rows, rows[1:]))


def test_tower_parameters():
    r = tower_row(2, k=2, h=3)
    assert r.d == (2 * 2) ** 2 * 3
    with pytest.raises(ValueError):
        tower_row(0)


def test_adapted_triangulation_of_row(tri):
    row = tower_row(3)
    at = adapted_triangulation(row, tri)
    assert at.non_residual_count == row.d * 2 and at.residual_count == row.r


def test_tower_csv(tmp_path):
    rows = [tower_row(i) for i in (1, 2)]
    path = tmp_path / "tower.csv"
    write_tower_csv(rows, path, [{"l1Norm": 2 + 1 / 3}, {}])
    with open(path) as fh:
        data = list(csv.reader(fh))
    assert data[0][:3] == ["i", "d_i", "v_B^i"]
    assert data[1][7] == "2.33333333333"
    assert data[2][7] == ""


# ------------------------------------------------------------------ minimizing chains

@pytest.fixture(scope="module")
def chains(tri):
    return {i: build_minimizing_chain(tri, tower_row(i)) for i in (1, 3, 6, 10)}


def test_chain_norms_and_cycles(chains, dev):
    for i, c in chains.items():
        row = tower_row(i)
        assert l1_norm(c) <= 2 + row.ratio + 1e-12
        assert is_relative_cycle(c, i, dev)
        assert orientation_mismatch_mass(c) == 0.0


def test_chain_theta_exact_atom(chains, dev):
    c = chains[3]
    m = theta(c, dev)
    assert len(m.atoms) == 48
    assert all(abs(w) == 1 / 24 for _, w in m.atoms)
    assert abs(m.total_weight()) < 1e-15
    assert m.total_variation() == pytest.approx(2 + tower_row(3).ratio, abs=1e-12)


def test_relatives_converge(chains, dev):
    tile = dev.canonical_simplex(0)
    d = [orbit_distance(c.located[0][1], tile, dev) for _, c in sorted(chains.items())]
    assert all(a > b for a, b in zip(d, d[1:]))


def test_volume_squeeze(chains, dev, tri):
    for i, c in chains.items():
        row = tower_row(i)
        sec = thick_part(tri, i, dev)
        om = omega_eps(c, i, dev, method="quadrature").value
        assert 2 - sec.cusp_volume() / V3 - row.ratio <= om / V3 <= l1_norm(c)


def test_almost_regular(tri, chains):
    masses = [low_volume_mass(c) for _, c in sorted(chains.items())]
    assert all(a >= b for a, b in zip(masses, masses[1:]))
    assert low_volume_mass(build_minimizing_chain(tri, tower_row(12))) == 0.0


def test_jitter_mode(tri, dev):
    muT = mu_t(tri)
    centres = [k.simplex(dev) for k, _ in muT.atoms]
    w = np.array([w for _, w in muT.atoms])
    errs = []
    for i in (4, 6, 8):
        row = tower_row(i)
        c = build_minimizing_chain(tri, row, jitter_seed=1)
        assert len(c) == 48 * row.d
        assert l1_norm(c) == pytest.approx(2 + row.ratio, abs=1e-9)
        m = theta(c, dev)
        assert 2 - row.ratio - 1e-6 <= m.total_variation() <= 2 + row.ratio + 1e-9
        errs.append(np.abs(hat_integrals(m, centres, dev) - w).max())
    assert errs[0] > errs[1] > errs[2]


def test_jitter_deterministic(tri):
    a = build_minimizing_chain(tri, tower_row(2), jitter_seed=5)
    b = build_minimizing_chain(tri, tower_row(2), jitter_seed=5)
    assert [s for _, s in a.located] == [s for _, s in b.located]


def test_placement_error(tri, dev):
    sec = thick_part(tri, 1, dev)
    xi = dev.canonical_simplex(0).vertices[1]
    with pytest.raises(PlacementError):
        placement_point(sec, xi, xi)
