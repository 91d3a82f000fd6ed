import cmath
import math

import numpy as np
import pytest

from kcat0 import (
    AffineImage,
    Ball,
    DefiningFunction,
    DiscretePath,
    Disk,
    Graph,
    Polydisk,
    Product,
    RealPolynomial,
    curve_length,
    distance,
    exact_geodesic,
    geodesic_approx,
    infinitesimal,
    intersection,
    midpoint_search,
    sector,
    unit_disk,
    upper_half_plane,
)
from kcat0.errors import OutsideDomain, PseudoDistanceOnly
from kcat0.metric import ball_mobius
from kcat0.planar import planar_distance

from conftest import sample_in

LN2 = math.log(2.0)
HALF_LN3 = 0.5 * math.log(3.0)


def ball2():
    return Ball(np.zeros(2, dtype=complex), 1.0)


def example36_domain():
    return intersection([Ball(np.array([1.0, 0.0], dtype=complex), 1.0),
                         Ball(np.array([0.0, 1.0], dtype=complex), 1.0)])


class TestInfinitesimal:
    def test_disk_normalization(self):
        iv = infinitesimal(unit_disk(), [0.0], [1.0])
        assert iv.is_exact and iv.lo == pytest.approx(1.0, abs=1e-14)

    def test_half_plane(self):
        iv = infinitesimal(upper_half_plane(), [1j], [1.0])
        assert iv.is_exact and iv.lo == pytest.approx(0.5, abs=1e-14)

    def test_zero_vector(self):
        iv = infinitesimal(ball2(), [0.3, 0.1], [0.0, 0.0])
        assert iv.is_exact and iv.lo == 0.0

    def test_intersection_interval_ratio(self):
        iv = infinitesimal(example36_domain(), [0.1, 0.1], [1.0, 0.0])
        assert not iv.is_exact
        assert iv.hi / iv.lo == pytest.approx(2.0, abs=1e-9)

    def test_ball_matches_tangential_slice(self):
        # through (0.5, 0) in the (0, 1) direction the affine disk is extremal
        iv = infinitesimal(ball2(), [0.5, 0.0], [0.0, 1.0])
        assert iv.is_exact
        assert iv.lo == pytest.approx(1.0 / math.sqrt(0.75), abs=1e-12)

    def test_outside_raises(self):
        with pytest.raises(OutsideDomain):
            infinitesimal(unit_disk(), [1.5], [1.0])


class TestCurveLength:
    def test_disk_straight_segment(self):
        nodes = np.linspace(0.0, 0.5, 64)[:, None].astype(complex)
        iv = curve_length(unit_disk(), DiscretePath(nodes))
        assert iv.is_exact
        assert iv.lo == pytest.approx(HALF_LN3, abs=1e-7)

    def test_single_node(self):
        iv = curve_length(unit_disk(), DiscretePath(np.array([[0.2 + 0.1j]])))
        assert iv.lo == iv.hi == 0.0

    def test_product_vertical_path(self):
        P = Product(upper_half_plane(), unit_disk())
        ts = np.linspace(1.0, 4.0, 64)
        nodes = np.stack([1j * ts, np.zeros_like(ts, dtype=complex)], axis=1)
        iv = curve_length(P, DiscretePath(nodes))
        assert iv.lo == pytest.approx(0.5 * math.log(4.0), abs=1e-7)

    def test_node_outside_raises(self):
        nodes = np.array([[0.0], [1.5]], dtype=complex)
        with pytest.raises(OutsideDomain):
            curve_length(unit_disk(), DiscretePath(nodes))


class TestDistance:
    def test_product_formula(self):
        P = Product(upper_half_plane(), unit_disk())
        iv = distance(P, [1j, 0.0], [4j, 1.0 / 3.0])
        assert iv.is_exact
        assert iv.lo == pytest.approx(LN2, abs=1e-12)
        assert iv.lo == pytest.approx(max(0.5 * math.log(4), math.atanh(1 / 3)), abs=1e-12)

    def test_same_point(self):
        iv = distance(ball2(), [0.2, 0.1], [0.2, 0.1])
        assert iv.lo == iv.hi == 0.0

    def test_sandwich_quality_on_intersection(self):
        iv = distance(example36_domain(), [0.2, 0.2], [0.4, 0.3])
        assert iv.lo <= iv.hi
        assert iv.hi - iv.lo < iv.hi / 2

    def test_metric_axioms_sampled(self, rng):
        domains = [unit_disk(), upper_half_plane(),
                   sector(0.0, 0.0, math.pi / 2),
                   Product(upper_half_plane(), unit_disk()), ball2()]
        for D in domains:
            for _ in range(60):
                x = sample_in(D, rng)
                y = sample_in(D, rng)
                z = sample_in(D, rng)
                dxy = distance(D, x, y).lo
                assert dxy == distance(D, y, x).lo  # exact symmetry
                assert distance(D, x, x).lo == 0.0
                assert dxy <= distance(D, x, z).lo + distance(D, z, y).lo + 1e-9

    def test_contraction_under_projection(self, rng):
        P = Product(upper_half_plane(), unit_disk())
        for _ in range(50):
            x = sample_in(P, rng)
            y = sample_in(P, rng)
            d_prod = distance(P, x, y).lo
            d_left = planar_distance(upper_half_plane(), x[0], y[0])
            d_right = planar_distance(unit_disk(), x[1], y[1])
            assert d_left <= d_prod + 1e-9
            assert d_right <= d_prod + 1e-9

    def test_affine_invariance(self, rng):
        D = ball2()
        A = np.array([[1.0 + 0.5j, 0.2], [0.0, 2.0 - 1j]], dtype=complex)
        b = np.array([0.3, -0.4j])
        img = AffineImage(A, b, D)
        for _ in range(25):
            x = sample_in(D, rng, scale=0.5)
            y = sample_in(D, rng, scale=0.5)
            d0 = distance(D, x, y)
            d1 = distance(img, A @ x + b, A @ y + b)
            assert d1.lo == pytest.approx(d0.lo, abs=1e-9)

    def test_slice_upper_bound_property(self, rng):
        D = ball2()
        for _ in range(25):
            x = sample_in(D, rng, scale=0.5)
            y = sample_in(D, rng, scale=0.5)
            if np.allclose(x, y):
                continue
            sl = D.slice(x, y - x)
            d_slice = planar_distance(sl.planar, 0.0, 1.0)
            assert distance(D, x, y).lo <= d_slice + 1e-9

    def test_pseudo_distance_flag(self):
        poly = RealPolynomial(1, {(2, 0): 1.0, (0, 2): 1.0, (0, 0): -1.0})
        G = Graph(DefiningFunction.from_polynomial(poly), interior_point=[0.0],
                  c_proper=False)
        with pytest.raises(PseudoDistanceOnly):
            distance(G, [0.0], [0.5])

    def test_exactness_collapse_on_embedded_axis(self, rng):
        # projection lower bound meets slice upper bound for (z, 0) pairs
        S = sector(0.0, 0.0, math.pi / 2)
        D = Product(S, unit_disk())
        for _ in range(10):
            z1 = sample_in(S, rng)
            z2 = sample_in(S, rng)
            iv = distance(D, [z1[0], 0.0], [z2[0], 0.0], force_sandwich=True)
            expected = planar_distance(S, z1[0], z2[0])
            assert iv.lo == pytest.approx(expected, abs=1e-9)
            assert iv.hi == pytest.approx(expected, abs=1e-9)


class TestGeodesicApprox:
    def test_disk_radius(self):
        path, length = geodesic_approx(unit_disk(), [0.0], [0.5])
        assert length.hi == pytest.approx(HALF_LN3, abs=1e-3)

    def test_half_plane_vertical(self):
        path, length = geodesic_approx(upper_half_plane(), [1j], [4j])
        assert length.hi == pytest.approx(0.5 * math.log(4), abs=1e-3)

    def test_same_point(self):
        path, length = geodesic_approx(ball2(), [0.1, 0.1], [0.1, 0.1])
        assert path.nodes.shape[0] == 1
        assert length.lo == length.hi == 0.0

    def test_never_beats_exact(self):
        P = Product(upper_half_plane(), unit_disk())
        _, length = geodesic_approx(P, [1j, 0.0], [4j, 1 / 3])
        assert length.hi >= LN2 - 1e-9
        assert length.hi == pytest.approx(LN2, abs=1e-3)


class TestMidpoint:
    def test_half_plane(self):
        m, resid = midpoint_search(upper_half_plane(), [1j], [4j])
        assert m[0] == pytest.approx(2j, abs=1e-10)
        assert resid == 0.0

    def test_product_constant_factor(self):
        P = Product(upper_half_plane(), unit_disk())
        m, resid = midpoint_search(P, [1j, 0.0], [4j, 0.0])
        assert m[0] == pytest.approx(2j, abs=1e-10)
        assert m[1] == pytest.approx(0.0, abs=1e-12)
        assert resid == 0.0

    def test_trivial(self):
        m, resid = midpoint_search(unit_disk(), [0.3], [0.3])
        assert m[0] == 0.3 and resid == 0.0

    def test_ball_midpoint_splits_distance(self, rng):
        D = ball2()
        x = sample_in(D, rng, scale=0.5)
        y = sample_in(D, rng, scale=0.5)
        m, resid = midpoint_search(D, x, y)
        assert resid == 0.0
        d = distance(D, x, y).lo
        assert distance(D, x, m).lo == pytest.approx(d / 2, abs=1e-10)
        assert distance(D, m, y).lo == pytest.approx(d / 2, abs=1e-10)

    def test_numeric_midpoint_on_intersection(self):
        D = example36_domain()
        x = np.array([0.2, 0.2], dtype=complex)
        y = np.array([0.5, 0.4], dtype=complex)
        m, resid = midpoint_search(D, x, y, tol=5e-2)
        assert D.contains(m)
        a = distance(D, x, m).midpoint
        b = distance(D, m, y).midpoint
        assert abs(a - b) <= 5e-2

    def test_uncertifiable_tolerance_raises(self):
        from kcat0.errors import MidpointNotCertified

        D = example36_domain()
        x = np.array([0.2, 0.2], dtype=complex)
        y = np.array([0.5, 0.4], dtype=complex)
        with pytest.raises(MidpointNotCertified):
            midpoint_search(D, x, y, tol=1e-15)


class TestBallAutomorphism:
    def test_involution(self, rng):
        a = np.array([0.3, 0.2 - 0.1j])
        for _ in range(20):
            z = sample_in(ball2(), rng, scale=0.5)
            assert np.allclose(ball_mobius(a, ball_mobius(a, z)), z, atol=1e-12)

    def test_isometry(self, rng):
        D = ball2()
        a = np.array([0.25 + 0.1j, -0.3])
        for _ in range(20):
            x = sample_in(D, rng, scale=0.5)
            y = sample_in(D, rng, scale=0.5)
            d0 = distance(D, x, y).lo
            d1 = distance(D, ball_mobius(a, x), ball_mobius(a, y)).lo
            assert d1 == pytest.approx(d0, abs=1e-12)

    def test_geodesic_additivity(self, rng):
        D = ball2()
        x = sample_in(D, rng, scale=0.5)
        y = sample_in(D, rng, scale=0.5)
        g = exact_geodesic(D, x, y)
        s, t, u = sorted(rng.uniform(0, 1, 3))
        lhs = distance(D, g(s), g(t)).lo + distance(D, g(t), g(u)).lo
        assert lhs == pytest.approx(distance(D, g(s), g(u)).lo, abs=1e-9)


class TestSandwichOnGraph:
    def make_graph(self):
        poly = RealPolynomial(2, {(2, 0, 0, 0): 1.0, (0, 2, 0, 0): 1.0,
                                  (0, 0, 2, 0): 2.0, (0, 0, 0, 2): 2.0,
                                  (0, 0, 0, 0): -1.0})
        return Graph(DefiningFunction.from_polynomial(poly), interior_point=[0.0, 0.0])

    def test_infinitesimal_ratio(self, rng):
        G = self.make_graph()
        for _ in range(5):
            z = sample_in(G, rng, scale=0.3)
            v = rng.normal(size=4)
            iv = infinitesimal(G, z, v[:2] + 1j * v[2:])
            assert iv.hi / iv.lo <= 2.0 + 1e-9

    def test_distance_interval_finite(self):
        G = self.make_graph()
        iv = distance(G, [0.1, 0.0], [0.3, 0.1])
        assert 0 < iv.lo <= iv.hi < math.inf

    def test_bracket_true_value(self):
        # the ellipsoid contains Ball(0, 1/sqrt(2)) and sits inside the unit
        # ball, so its true distance lies between the two ball values and
        # the interval must be consistent with that
        G = self.make_graph()
        x = np.array([0.1, 0.0], dtype=complex)
        y = np.array([0.3, 0.1], dtype=complex)
        iv = distance(G, x, y)
        outer = distance(ball2(), x, y).lo
        inner = distance(Ball(np.zeros(2, dtype=complex), 1 / math.sqrt(2)), x, y).lo
        assert iv.lo <= inner + 1e-9
        assert iv.hi >= outer - 1e-9
