import math

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st
from hypothesis.extra.numpy import arrays

from sphereae.errors import DegenerateInputError, DomainError, UnsupportedParameterError
from sphereae.rng import RngStream
from sphereae.sampling import (PointCloud, Prior, PriorKind, centerize, centerize_rows, clt_diagnostic,
                               draw, mc_chord_stats, reference_sphere, spherize, spherize_rows)

ALL_PRIORS = [Prior.normal(), Prior.uniform(), Prior.poisson(4), Prior.chi_squared(1)]


class TestPrior:
    def test_parse(self):
        assert Prior.parse("normal") == Prior.normal()
        assert Prior.parse("poisson") == Prior.poisson(4.0)
        assert Prior.parse("poisson:2.5").param == 2.5
        assert Prior.parse("chi").kind is PriorKind.CHI_SQUARED
        assert Prior.parse("chi2:3").param == 3
        with pytest.raises(DomainError):
            Prior.parse("cauchy")

    def test_invalid_parameters(self):
        with pytest.raises(DomainError):
            Prior.poisson(0)
        with pytest.raises(DomainError):
            Prior.chi_squared(1.5)

    def test_moments(self):
        assert Prior.uniform().std == pytest.approx(1 / math.sqrt(3))
        assert (Prior.poisson(4).mean, Prior.poisson(4).std) == (4.0, 2.0)
        assert (Prior.chi_squared(3).mean, Prior.chi_squared(3).std) == (3.0, math.sqrt(6))


class TestDraw:
    def test_normal_moments(self):
        x = draw(Prior.normal(), RngStream(1), 100_000, 1).points
        assert -0.02 <= x.mean() <= 0.02
        assert 0.98 <= x.var() <= 1.02

    def test_poisson_mean(self):
        x = draw(Prior.poisson(4), RngStream(1), 100_000, 1).points
        assert 3.96 <= x.mean() <= 4.04
        assert np.all(x == np.round(x)) and x.min() >= 0

    def test_poisson_pmf(self):
        x = draw(Prior.poisson(2.5), RngStream(4), 200_000, 1).points.ravel()
        for k in range(6):
            p = math.exp(-2.5) * 2.5 ** k / math.factorial(k)
            assert np.mean(x == k) == pytest.approx(p, abs=5 * math.sqrt(p / 200_000))

    def test_poisson_limit(self):
        draw(Prior.poisson(30), RngStream(0), 10, 2)
        with pytest.raises(UnsupportedParameterError):
            draw(Prior.poisson(30.5), RngStream(0), 10, 2)

    @pytest.mark.parametrize("seed", [0, 1, 2**63 + 5])
    def test_uniform_open_range(self, seed):
        x = draw(Prior.uniform(), RngStream(seed), 10_000, 8).points
        assert np.all((x > -1) & (x < 1))

    def test_chi_squared_moments(self):
        x = draw(Prior.chi_squared(3), RngStream(2), 200_000, 1).points
        assert x.mean() == pytest.approx(3.0, abs=5 * math.sqrt(6 / 200_000))
        assert x.min() > 0

    def test_chi_squared_is_sum_of_squared_normals(self):
        z = RngStream(8, 2).normal((6, 2))
        x = draw(Prior.chi_squared(2), RngStream(8, 2), 3, 2).points
        np.testing.assert_array_equal(x.ravel(), (z * z).sum(axis=1))

    @pytest.mark.parametrize("prior", ALL_PRIORS)
    def test_determinism(self, prior):
        a = draw(prior, RngStream(11, 3), 50, 7)
        b = draw(prior, RngStream(11, 3), 50, 7)
        assert np.array_equal(a.points, b.points)
        assert not (a.centered or a.spherized)

    def test_preconditions(self):
        with pytest.raises(DomainError):
            draw(Prior.normal(), RngStream(0), 0, 3)


class TestTransforms:
    def test_centerize_examples(self):
        c = centerize(PointCloud(np.array([[1.0, 2.0, 3.0], [5.0, 5.0, 5.0]])))
        np.testing.assert_array_equal(c.points, [[-1, 0, 1], [0, 0, 0]])
        assert c.centered
        assert centerize(c) is c

    def test_spherize_examples(self):
        s = spherize(PointCloud(np.array([[3.0, 4.0]])))
        np.testing.assert_allclose(s.points, [[0.6, 0.8]], rtol=0, atol=2.3e-16)
        s = spherize(PointCloud(np.array([[-1.0, 0.0, 1.0]])))
        np.testing.assert_allclose(s.points, [[-1 / math.sqrt(2), 0, 1 / math.sqrt(2)]], atol=1e-16)
        assert s.spherized and s.radius == 1.0

    def test_spherize_idempotent_on_sphere(self):
        x = spherize_rows(RngStream(3).normal((100, 17)))
        np.testing.assert_allclose(spherize_rows(x), x, rtol=0, atol=1e-15)

    def test_spherize_degenerate_row(self):
        pts = np.ones((4, 3))
        pts[2] = 0.0
        with pytest.raises(DegenerateInputError) as exc:
            spherize(PointCloud(pts))
        assert exc.value.row == 2

    @settings(max_examples=60, deadline=None)
    @given(arrays(np.float64, (5, 6), elements=st.floats(-100, 100)), st.floats(0.1, 10))
    def test_center_then_spherize(self, pts, radius):
        c = centerize_rows(pts)
        if np.any(np.linalg.norm(c, axis=1) <= 1e-6):
            return
        s = spherize(centerize(PointCloud(pts)), radius)
        assert np.all(np.abs(s.points.mean(axis=1)) < 1e-9)
        np.testing.assert_allclose(np.linalg.norm(s.points, axis=1), radius, rtol=1e-12)
        # near-idempotence of the raw row operation
        np.testing.assert_allclose(centerize_rows(c), c, atol=1e-12)


class TestPointCloudCsv:
    def test_round_trip(self, tmp_path):
        cloud = spherize(centerize(draw(Prior.poisson(4), RngStream(5), 20, 6, )))
        path = tmp_path / "cloud.csv"
        cloud.to_csv(path)
        header = path.read_text().splitlines()[0]
        assert header.startswith("dim=6,prior=poisson:4,centered=true,spherized=true,seed=5")
        back = PointCloud.from_csv(path)
        assert np.array_equal(back.points, cloud.points)
        assert (back.centered, back.spherized, back.seed, back.radius, back.prior) == (True, True, 5, 1.0, "poisson:4")

    def test_minimal_header(self, tmp_path):
        path = tmp_path / "c.csv"
        path.write_text("dim=2,prior=normal,centered=false,spherized=true,seed=3\n0.6,0.8\n1,0\n")
        back = PointCloud.from_csv(path)
        assert back.radius == 1.0 and back.n == 2


class TestMcChordStats:
    def test_normal_512(self, oracles):
        cloud = spherize(centerize(draw(Prior.normal(), RngStream(1, 0), 4096, 512)))
        res = mc_chord_stats(cloud, 100_000, RngStream(1, 1))
        assert abs(res.mean - 1.4139) < 0.001
        assert res.ks_statistic < 0.01
        assert res.mean == oracles["mc_chord"]["runs"]["normal@512"]["mean"]

    def test_three_dim_uncentered(self):
        # uniform on S^2: mean chord 4/3
        cloud = spherize(draw(Prior.normal(), RngStream(2, 0), 4096, 3))
        res = mc_chord_stats(cloud, 100_000, RngStream(2, 1))
        assert abs(res.mean - 4 / 3) < 0.01
        assert res.reference_dim == 3

    def test_three_dim_centered_lives_on_circle(self):
        # centered rows span a plane, so the cloud is uniform on a circle: 4/pi
        cloud = spherize(centerize(draw(Prior.normal(), RngStream(2, 0), 4096, 3)))
        res = mc_chord_stats(cloud, 100_000, RngStream(2, 1))
        assert abs(res.mean - 4 / math.pi) < 0.01
        assert reference_sphere(cloud).ambient_dim == 2
        assert res.ks_statistic < 0.01

    def test_uncentered_poisson_collapses(self):
        cloud = spherize(draw(Prior.poisson(4), RngStream(1, 0), 4096, 512))
        assert mc_chord_stats(cloud, 100_000, RngStream(1, 1)).mean < 1.0

    @pytest.mark.parametrize("prior", ALL_PRIORS, ids=lambda p: p.label)
    def test_concentration_all_priors(self, prior):
        cloud = spherize(centerize(draw(prior, RngStream(1, 0), 4096, 512)))
        res = mc_chord_stats(cloud, 100_000, RngStream(1, 1))
        assert abs(res.mean - 1.4139) < 0.005
        assert res.std < 0.04

    @pytest.mark.parametrize("dim", [10, 512])
    def test_ks_sanity(self, dim):
        cloud = spherize(centerize(draw(Prior.normal(), RngStream(1, 0), 4096, dim)))
        assert mc_chord_stats(cloud, 100_000, RngStream(1, 1)).ks_statistic < 0.01

    def test_preconditions(self):
        cloud = spherize(draw(Prior.normal(), RngStream(0), 10, 4))
        with pytest.raises(DomainError):
            mc_chord_stats(cloud, 999, RngStream(0))
        with pytest.raises(DomainError):
            mc_chord_stats(cloud.__class__(cloud.points[:1], spherized=True, radius=1.0), 1000, RngStream(0))
        with pytest.raises(DomainError):
            mc_chord_stats(draw(Prior.normal(), RngStream(0), 10, 4), 1000, RngStream(0))


class TestClt:
    def test_poisson(self):
        assert clt_diagnostic(Prior.poisson(4), 512, 5000, RngStream(1, 0)) < 0.03

    def test_normal(self):
        assert clt_diagnostic(Prior.normal(), 64, 5000, RngStream(1, 0)) < 0.02

    def test_chi_squared(self):
        assert clt_diagnostic(Prior.chi_squared(1), 512, 5000, RngStream(1, 0)) < 0.04

    def test_oracle_bands(self, oracles):
        # 3x the largest KS seen over 10 recorded seeds stays under the thresholds
        ks = oracles["clt"]["ks"]
        assert 3 * max(ks["poisson:4@512"]) < 0.07
        assert max(ks["normal@64"]) < 0.02
        assert max(ks["chi2:1@512"]) < 0.04

    def test_preconditions(self):
        with pytest.raises(DomainError):
            clt_diagnostic(Prior.normal(), 32, 5000, RngStream(0))
