import math

import numpy as np
import pytest
from scipy import optimize
from hypothesis import given, settings
from hypothesis import strategies as st

from landau_breather.errors import HypothesisViolation
from landau_breather.model import (DisorderDistribution, SingleSitePotential, breather_sup_bound,
                                   dilation_derivative, evaluate_breather, lattice_sites,
                                   make_builtin_potential, reference_claims, sample_disorder,
                                   verify_hypotheses)


def bump_t_derivative(rho, t):
    """Closed-form d/dt exp(-1/(1-|x/t|^2)) as a function of |x| = rho."""
    s = np.asarray(rho, dtype=float) / t
    out = np.zeros_like(s)
    m = s < 1
    out[m] = 2 * s[m] ** 2 / (t * (1 - s[m] ** 2) ** 2) * np.exp(-1 / (1 - s[m] ** 2))
    return out


def radial_oracle(deriv, ts, radius, n_rho=2001):
    """Best ball constant for radial profiles, computed without any 2D sampling.

    For a radial derivative that is unimodal in |x| the minimum over a ball
    sits at its nearest or farthest point from the origin, so the best center
    distance balances those two values.  A coarse scan brackets the crossing
    and brentq pins it down.
    """
    rho = np.linspace(radius, 0.5 - radius, n_rho)
    per_t = []
    for t in ts:
        def gap(p):
            return float(deriv(np.array([p - radius]), t)[0] - deriv(np.array([p + radius]), t)[0])

        vals = np.minimum(deriv(rho - radius, t), deriv(rho + radius, t))
        k = int(np.argmax(vals))
        best = vals[k]
        lo, hi = rho[max(k - 1, 0)], rho[min(k + 1, n_rho - 1)]
        if gap(lo) < 0 < gap(hi):
            p = optimize.brentq(gap, lo, hi, xtol=1e-14)
            best = max(best, float(deriv(np.array([p - radius]), t)[0]))
        per_t.append(best)
    return min(per_t)


# ---------------------------------------------------------------------------
# built-in potentials


def test_hat_values(hat):
    assert hat([0.0, 0.0]) == 1.0
    assert hat([1.5, 0.0]) == 0.0
    assert hat([0.3, 0.4]) == pytest.approx(0.5)


def test_smooth_bump_at_origin(bump):
    assert bump([0.0, 0.0]) == pytest.approx(math.exp(-1), rel=1e-15)
    assert bump([0.0, 1.0]) == 0.0


@pytest.mark.parametrize("kind", ["hat", "smooth-bump"])
def test_builtin_invariants(kind):
    u = make_builtin_potential(kind)
    u.check_invariants()
    assert u.support_radius == 1.0


def test_custom_potential_measures_sup_norm():
    u = SingleSitePotential.from_callable(lambda x: 3 * make_builtin_potential("hat")(x / 2), 2.0)
    assert u.sup_norm == pytest.approx(3.0)
    u.check_invariants()


@pytest.mark.parametrize("kind, expected", [("hat", 1.0), ("smooth-bump", math.exp(-1))])
def test_breather_sup_bound_builtin(kind, expected):
    assert breather_sup_bound(make_builtin_potential(kind)) == pytest.approx(expected)


def test_breather_sup_bound_rounds_support_up():
    u = SingleSitePotential(lambda x: np.zeros(np.shape(x)[:-1]), 2.5, 3.0)
    assert breather_sup_bound(u) == 27


# ---------------------------------------------------------------------------
# disorder


def test_uniform_distribution_invariants(dist):
    dist.check_invariants()
    assert dist.ppf(0.5) == pytest.approx(0.3)


def test_tabulated_density_normalises():
    d = DisorderDistribution.from_density(lambda w: (w - 0.1) * (0.45 - w), 0.1, 0.45)
    d.check_invariants()
    q = np.linspace(0.01, 0.99, 7)
    w = d.ppf(q)
    assert np.all(np.diff(w) > 0)
    assert d.ppf(0.5) == pytest.approx(0.275, abs=1e-4)  # symmetric density


def test_distribution_rejects_bad_support():
    with pytest.raises(ValueError):
        DisorderDistribution.uniform(0.2, 0.6)


def test_sample_disorder_small_box(dist):
    s = sample_disorder(dist, 2, 42)
    assert len(s.values) == 4
    assert all(0.2 <= w <= 0.4 for w in s.values.values())
    assert sample_disorder(dist, 2, 42).values == s.values


def test_sample_disorder_law_of_large_numbers(dist):
    s = sample_disorder(dist, 16, 7)
    vals = np.array(list(s.values.values()))
    assert vals.size == 256
    # stderr of the mean is 0.2/sqrt(12*256) = 0.0036; 0.02 is 5.5 sigma
    assert abs(vals.mean() - 0.3) < 0.02


def test_site_values_do_not_depend_on_box(dist):
    small = sample_disorder(dist, 2, 99).values
    large = sample_disorder(dist, 6, 99).values
    for site, w in small.items():
        assert large[site] == w


def test_lattice_sites_tile_the_torus():
    assert lattice_sites(2) == [(-1, -1), (-1, 0), (0, -1), (0, 0)]
    assert len(lattice_sites(6)) == 36


# ---------------------------------------------------------------------------
# breather potential


def _constant_sample(L, omega):
    return sample_disorder(DisorderDistribution.uniform(omega, omega + 1e-9), L, 0)


def test_breather_at_site(hat):
    s = _constant_sample(2, 0.25)
    assert evaluate_breather(hat, s, [0.0, 0.0]) == pytest.approx(1.0, rel=1e-6)


def test_breather_between_sites(hat):
    s = _constant_sample(2, 0.25)
    assert evaluate_breather(hat, s, [0.5, 0.0]) == 0.0


def test_breather_single_site_formula(hat):
    s = _constant_sample(2, 0.25).with_value((0, 0), 0.4)
    assert evaluate_breather(hat, s, [0.2, 0.0]) == pytest.approx(0.5)


def test_breather_is_periodic(hat, dist):
    s = sample_disorder(dist, 2, 3)
    x = np.array([0.9, -0.95])
    assert evaluate_breather(hat, s, x) == pytest.approx(evaluate_breather(hat, s, x + [2.0, -2.0]))
    # the site at (-1, -1) is seen across the seam
    assert evaluate_breather(hat, s, [0.95, 0.95]) > 0


@settings(max_examples=50, deadline=None)
@given(seed=st.integers(0, 2 ** 32), x=st.floats(-1, 1), y=st.floats(-1, 1))
def test_breather_bounded_by_sup_bound(seed, x, y):
    u = make_builtin_potential("hat")
    s = sample_disorder(DisorderDistribution.uniform(0.2, 0.49), 2, seed)
    assert 0 <= evaluate_breather(u, s, [x, y]) <= breather_sup_bound(u)


# ---------------------------------------------------------------------------
# hypothesis certificates


def test_hat_certificate_matches_radial_oracle(hat, dist):
    cert = verify_hypotheses(hat, dist)
    assert cert.ball_radius == pytest.approx(0.05)
    # closed form: best ball touches the support edge, c(t) = (t - 2r)/t^2, worst at t = 0.4
    assert cert.c_u == pytest.approx(1.875, rel=1e-3)
    hat_deriv = lambda rho, t: np.where(rho < t, rho / t ** 2, 0.0)  # noqa: E731
    assert cert.c_u == pytest.approx(radial_oracle(hat_deriv, cert.t_grid, 0.05), rel=1e-3)


def test_smooth_bump_certificate_matches_radial_oracle(bump, dist):
    cert = verify_hypotheses(bump, dist)
    oracle = max(
        (radial_oracle(bump_t_derivative, cert.t_grid, r) * r * r, r)
        for r in (0.2 / 16, 0.2 / 8, 0.2 / 4))
    assert cert.ball_radius == pytest.approx(oracle[1])
    assert cert.c_u == pytest.approx(oracle[0] / oracle[1] ** 2, rel=1e-3)


def test_finite_difference_matches_closed_form(bump):
    # the O(h^2) error grows near the support edge, stay at |x| <= 0.85 t
    rho = np.linspace(0.01, 0.34, 50)
    pts = np.stack([rho, np.zeros_like(rho)], axis=-1)
    np.testing.assert_allclose(dilation_derivative(bump, pts, 0.4), bump_t_derivative(rho, 0.4),
                               rtol=1e-5, atol=1e-12)


def test_certificate_centers_stay_in_unit_cell(hat, dist):
    cert = verify_hypotheses(hat, dist)
    for c in cert.centers:
        assert max(abs(c[0]), abs(c[1])) + cert.ball_radius <= 0.5 + 1e-12
    payload = cert.to_json()
    assert set(payload) == {"c_u", "r", "centers"}
    assert len(payload["centers"]) == len(cert.t_grid)
    assert np.allclose(cert.center_map(cert.t_grid[3]), cert.centers[3])


@pytest.mark.parametrize("kind", ["hat", "smooth-bump"])
def test_certificate_stability_under_refinement(kind, dist):
    u = make_builtin_potential(kind)
    coarse = verify_hypotheses(u, dist, x_resolution=16).c_u
    fine = verify_hypotheses(u, dist, x_resolution=32).c_u
    assert abs(fine - coarse) < 0.2 * coarse


def test_indicator_is_rejected(dist):
    ball = SingleSitePotential(lambda x: (np.linalg.norm(x, axis=-1) < 1).astype(float), 1.0, 1.0)
    with pytest.raises(HypothesisViolation):
        verify_hypotheses(ball, dist)


def test_profile_shrinking_under_dilation_is_rejected(dist):
    # u(x/t) = |x|/t inside the support decreases with t
    cone = SingleSitePotential(
        lambda x: np.where(np.linalg.norm(x, axis=-1) < 1, np.linalg.norm(x, axis=-1), 0.0), 1.0, 1.0)
    with pytest.raises(HypothesisViolation):
        verify_hypotheses(cone, dist)


def test_resolution_floor(hat, dist):
    with pytest.raises(ValueError):
        verify_hypotheses(hat, dist, t_resolution=8)


def test_reference_hat_claim_is_not_reproduced(dist):
    """At |x0| = 3t/4, r = omega_-/4 the direct derivative |x|/t^2 gives
    min_t (3t/4 - 0.05)/t^2 = 1.5625 at t = 0.4, below the claimed 2."""
    rep = reference_claims("hat", dist)
    assert rep["measured_c_u_at_claimed_centers"] == pytest.approx(1.5625, rel=2e-3)
    assert not rep["claim_holds"]


def test_reference_bump_claim_holds_with_room(dist):
    rep = reference_claims("smooth-bump", dist)
    assert rep["claim_holds"]
    oracle = radial_oracle(bump_t_derivative, np.linspace(0.2, 0.4, 64), 0.025)
    # restricted to the stated center |x0| = 3 omega_-/8
    fixed = min(min(bump_t_derivative(np.array([0.05, 0.1]), t)) for t in np.linspace(0.2, 0.4, 64))
    assert rep["measured_c_u_at_claimed_centers"] == pytest.approx(fixed, rel=1e-3)
    assert oracle >= fixed


@settings(max_examples=100, deadline=None)
@given(x=st.floats(-1, 1), y=st.floats(-1, 1), t=st.floats(0.2, 0.4), kind=st.sampled_from(["hat", "smooth-bump"]))
def test_dilation_monotonicity(x, y, t, kind):
    u = make_builtin_potential(kind)
    p = np.array([x, y])
    assert u(p / (t + 1e-3)) >= u(p / t) - 1e-12
