import math
import warnings

import numpy as np
import pytest
from scipy import integrate as sp_integrate
from scipy.special import betainc

from sphereae.errors import DomainError
from sphereae.spheregeom import (SphereSpec, annulus_volume_fraction, chord_cdf, chord_density,
                                 chord_moment, chord_stats)

DIMS = [2, 3, 5, 10, 64, 512, 1024]


def quad_density(sphere, weight=lambda x: 1.0):
    """Independent route: QUADPACK directly on the chord density in xi."""
    f = lambda x: weight(x) * chord_density(sphere, x)  # noqa: E731
    # split at the mode so narrow high-D peaks are resolved
    mode = min(2 * sphere.radius, max(0.0, chord_stats(sphere).mean))
    pts = [0.0, mode, 2 * sphere.radius]
    total = 0.0
    for a, b in zip(pts, pts[1:]):
        with warnings.catch_warnings():
            # D=2 has an inverse-sqrt endpoint singularity; QUADPACK still
            # converges far below the asserted tolerance but warns.
            warnings.simplefilter("ignore", sp_integrate.IntegrationWarning)
            val, _ = sp_integrate.quad(f, a, b, epsabs=1e-13, epsrel=1e-13, limit=500)
        total += val
    return total


class TestSphereSpec:
    def test_invariants(self):
        with pytest.raises(DomainError):
            SphereSpec(1)
        with pytest.raises(DomainError):
            SphereSpec(3, 0.0)


class TestChordDensity:
    def test_circle_value(self):
        # circle: 1 / (pi sqrt(1 - (xi/2)^2))
        assert chord_density(SphereSpec(2), math.sqrt(2)) == pytest.approx(1 / (math.pi * math.sqrt(0.5)), rel=1e-14)
        assert chord_density(SphereSpec(2), math.sqrt(2)) == pytest.approx(0.4502, abs=5e-5)

    def test_two_sphere_is_linear(self):
        s = SphereSpec(3)
        assert chord_density(s, 1.0) == pytest.approx(0.5, rel=1e-14)
        xs = np.linspace(0, 2, 9)
        np.testing.assert_allclose(chord_density(s, xs), xs / 2, rtol=1e-14)

    def test_circle_monte_carlo_histogram(self):
        rng = np.random.default_rng(20240101)
        dtheta = rng.uniform(0, 2 * np.pi, 10_000_000)
        xi = 2 * np.abs(np.sin(dtheta / 2))
        w = 0.01
        frac = np.mean(np.abs(xi - math.sqrt(2)) < w / 2)
        assert frac / w == pytest.approx(chord_density(SphereSpec(2), math.sqrt(2)), rel=0.01)

    def test_two_sphere_monte_carlo(self):
        rng = np.random.default_rng(7)
        a = rng.normal(size=(1_000_000, 3))
        b = rng.normal(size=(1_000_000, 3))
        a /= np.linalg.norm(a, axis=1, keepdims=True)
        b /= np.linalg.norm(b, axis=1, keepdims=True)
        xi = np.linalg.norm(a - b, axis=1)
        assert np.mean(np.abs(xi - 1.0) < 0.02) / 0.04 == pytest.approx(0.5, rel=0.02)
        assert xi.mean() == pytest.approx(4 / 3, abs=0.003)

    @pytest.mark.parametrize("d", [4, 5, 64, 4096])
    def test_vanishes_at_endpoints(self, d):
        s = SphereSpec(d)
        assert chord_density(s, 0.0) == 0.0
        assert chord_density(s, 2.0) == 0.0

    def test_no_overflow_high_dim(self):
        s = SphereSpec(4096)
        xs = np.linspace(0, 2, 2001)
        vals = chord_density(s, xs)
        assert np.all(np.isfinite(vals)) and vals.max() > 10

    def test_domain(self):
        with pytest.raises(DomainError):
            chord_density(SphereSpec(3), 2.0001)
        with pytest.raises(DomainError):
            chord_density(SphereSpec(3), -0.1)

    @pytest.mark.parametrize("d", DIMS)
    def test_normalization_quadpack(self, d):
        assert abs(quad_density(SphereSpec(d)) - 1.0) < 1e-8

    @pytest.mark.parametrize("d", [2, 3, 10, 64, 512, 1024])
    def test_normalization_gauss_kronrod(self, d):
        assert abs(chord_moment(SphereSpec(d), 0) - 1.0) < 1e-8

    @pytest.mark.parametrize("d", [2, 3, 5, 10, 64, 512, 1024])
    def test_moments(self, d):
        s = SphereSpec(d)
        st = chord_stats(s)
        assert abs(quad_density(s, lambda x: x) - st.mean) < 1e-8
        assert abs(quad_density(s, lambda x: x * x) - (st.mean ** 2 + st.std ** 2)) < 1e-8
        assert abs(chord_moment(s, 1) - st.mean) < 1e-8
        assert abs(chord_moment(s, 2) - (st.mean ** 2 + st.std ** 2)) < 1e-8


class TestChordCdf:
    @pytest.mark.parametrize("d", [2, 3, 10, 511, 2048])
    def test_against_beta_closed_form(self, d):
        # (xi / 2r)^2 ~ Beta((D-1)/2, (D-1)/2)
        s = SphereSpec(d, 1.5)
        xs = np.linspace(0, 3.0, 301)
        ref = betainc((d - 1) / 2, (d - 1) / 2, (xs / 3.0) ** 2)
        np.testing.assert_allclose(chord_cdf(s, xs), ref, atol=1e-10)

    def test_scalar_and_order(self):
        s = SphereSpec(3)
        assert chord_cdf(s, 1.0) == pytest.approx(0.25, abs=1e-12)
        xs = np.array([1.5, 0.2, 1.0])
        np.testing.assert_allclose(chord_cdf(s, xs), xs ** 2 / 4, atol=1e-12)


class TestChordStats:
    def test_reference_values_512(self):
        st = chord_stats(SphereSpec(512))
        assert round(st.mean, 4) == 1.4139
        assert round(st.std, 4) == 0.0313
        assert 0.0216 <= st.relative_std <= 0.0226
        assert round(100 * st.relative_std, 2) == 2.21

    def test_low_dim_closed_forms(self):
        assert abs(chord_stats(SphereSpec(2)).mean - 4 / math.pi) < 1e-10
        assert abs(chord_stats(SphereSpec(3)).mean - 4 / 3) < 1e-10

    @pytest.mark.parametrize("d", [16, 32, 128, 512, 1024, 4096])
    def test_asymptotics(self, d):
        st = chord_stats(SphereSpec(d))
        assert abs(st.mean - st.asymptotic_mean) / st.mean < 10 / d ** 2
        assert st.asymptotic_std == pytest.approx(1 / math.sqrt(2 * d))

    def test_asymptotic_at_128(self):
        st = chord_stats(SphereSpec(128))
        assert abs(st.mean - st.asymptotic_mean) / st.mean < 1e-3

    @pytest.mark.parametrize("d", range(8, 200, 7))
    def test_invariants(self, d):
        st = chord_stats(SphereSpec(d, 2.0))
        assert 0 < st.mean < 4.0 and st.std >= 0
        assert abs(st.mean - st.asymptotic_mean) / st.mean < 0.01

    @pytest.mark.parametrize("d", [2, 3, 17, 512])
    @pytest.mark.parametrize("r", [0.25, 3.0, 17.5])
    def test_scale_equivariance(self, d, r):
        assert abs(chord_stats(SphereSpec(d, r)).mean - r * chord_stats(SphereSpec(d)).mean) <= 1e-14 * r


class TestAnnulus:
    def test_annulus_512(self):
        assert round(annulus_volume_fraction(SphereSpec(512), 0.009), 3) == 0.990

    def test_small_cases(self):
        assert annulus_volume_fraction(1, 0.5) == pytest.approx(0.5, abs=1e-15)
        assert annulus_volume_fraction(SphereSpec(2), 0.1) == pytest.approx(0.19, abs=1e-15)

    def test_monotone(self):
        eps = np.linspace(0.01, 0.99, 50)
        for d in (2, 10, 512):
            vals = [annulus_volume_fraction(d, e) for e in eps]
            assert np.all(np.diff(vals) >= 0)  # saturates at 1.0 in floating point
        assert np.all(np.diff([annulus_volume_fraction(2, e) for e in eps]) > 0)
        assert all(annulus_volume_fraction(d, 0.05) < annulus_volume_fraction(d + 1, 0.05) for d in range(1, 100))

    @pytest.mark.parametrize("eps", [0.0, 1.0, -0.2, 1.5])
    def test_domain(self, eps):
        with pytest.raises(DomainError):
            annulus_volume_fraction(10, eps)
