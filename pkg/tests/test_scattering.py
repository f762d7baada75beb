import math

import numpy as np
import pytest

from conftest import bump_potential
from discscat.errors import SearchCeilingHit, SignConditionViolated
from discscat.model import BoundaryCoefficients, DensityProfile, NumericsConfig, PotentialSpec
from discscat.scattering import (find_bound_states, forward_run, norming_constants, s_zero,
                                 verify_zero_count)

SMALL = NumericsConfig(n_lambda=256)


def well(depth=3.0):
    return bump_potential(center=1.5, half_width=1.0, height=-depth)


def test_s_zero_unimodular_and_limit(layered):
    lam = np.linspace(-30, 30, 2001)
    # free limits: conj(e)/e -> 1 for the y(0) branch, conj(e')/e' -> -1 for the y'(0) branch
    for c, lim in ((BoundaryCoefficients.dirichlet(), 1.0), (BoundaryCoefficients(0, 0, 0, 0, 0, 1.0), -1.0)):
        s0 = s_zero(layered, c, lam)
        assert np.allclose(np.abs(s0), 1.0, atol=1e-13)
        assert np.allclose(s0[::-1], np.conj(s0), atol=1e-13)
        assert abs(s_zero(layered, c, 1e-12) - lim) < 1e-9


def test_s_zero_degenerate_is_one():
    p = DensityProfile(1.0, 1.0, degenerate_ok=True)
    lam = np.linspace(-10, 10, 101)
    assert np.allclose(s_zero(p, BoundaryCoefficients.dirichlet(), lam), 1.0, atol=1e-14)


def test_zero_potential_reproduces_s0(layered, dirichlet):
    r = forward_run(layered, PotentialSpec.zero(), dirichlet, SMALL)
    lam = r.data.lambda_grid
    assert np.max(np.abs(r.data.s_values - s_zero(layered, dirichlet, lam))) < 1e-9
    assert r.data.bound_states.size == 0


def test_degenerate_robin_root_and_norming():
    # alpha = 1, q = 0: e = exp(i lam x), E(i mu) = h - mu, m^-2 = int exp(-2 h x) dx
    p = DensityProfile(1.0, 1.0, degenerate_ok=True)
    h = 0.7
    c = BoundaryCoefficients(h, 0, 0, 1.0, 0, 0)
    cfg = SMALL.resolve(p)
    roots = find_bound_states(p, PotentialSpec.zero(), c, cfg)
    assert roots.shape == (1,) and abs(roots[0] - h) < 1e-9
    m = norming_constants(p, PotentialSpec.zero(), c, roots, cfg)
    assert abs(m[0] ** -2 - 1.0 / (2 * h)) < 1e-6


def test_degenerate_cubic_root():
    # E(i mu) = -mu^2 * (-mu) - 1 = mu^3 - 1 for (-1, 0, 0, 0, 0, 1)
    p = DensityProfile(1.0, 1.0, degenerate_ok=True)
    c = BoundaryCoefficients(-1.0, 0, 0, 0, 0, 1.0)
    r = forward_run(p, PotentialSpec.zero(), c, SMALL)
    assert r.data.bound_states.shape == (1,)
    assert abs(r.data.bound_states[0] - 1.0) < 1e-9
    assert r.data.norming[0] > 0


def test_sign_condition_rejected(layered):
    with pytest.raises(SignConditionViolated, match="delta1"):
        forward_run(layered, PotentialSpec.zero(), BoundaryCoefficients(1, 0, 0, 0, 1, 0), SMALL)


def test_zero_count_matches_bound_states(layered, dirichlet):
    r = forward_run(layered, well(), dirichlet, SMALL, count_zeros=True)
    assert r.data.bound_states.size >= 1
    assert r.zero_count == r.data.bound_states.size
    for b in r.bound:
        assert b.dE_dmu != 0.0
    cfg = SMALL.resolve(layered, well())
    assert verify_zero_count(layered, well(), dirichlet, cfg) == r.data.bound_states.size


def test_boundary_scaling_invariance(layered):
    c = BoundaryCoefficients(-1.0, 0, 0, 1.0, 0, 1.0)
    q = well(2.0)
    r1 = forward_run(layered, q, c, SMALL)
    r2 = forward_run(layered, q, c.scaled(7.3), SMALL)
    assert np.allclose(r1.data.s_values, r2.data.s_values, rtol=0, atol=1e-12)
    assert np.allclose(r1.data.bound_states, r2.data.bound_states, rtol=1e-12)
    assert np.allclose(r1.data.norming, r2.data.norming, rtol=1e-9)


def test_unitarity_and_symmetry(layered, dirichlet, bump):
    s = forward_run(layered, bump, dirichlet, SMALL).data.s_values
    assert np.allclose(np.abs(s), 1.0, atol=1e-8)
    assert np.allclose(s[::-1], np.conj(s), atol=1e-8)


def test_small_perturbation_small_change(layered, dirichlet):
    q = well()
    eps = 1e-6
    a = forward_run(layered, q, dirichlet, SMALL).data
    b = forward_run(layered, q.scaled(1 + eps), dirichlet, SMALL).data
    assert a.bound_states.size == b.bound_states.size
    assert np.max(np.abs(a.s_values - b.s_values)) < 1e3 * eps
    assert np.max(np.abs(a.bound_states - b.bound_states)) < 1e3 * eps
    assert np.max(np.abs(a.s_values - b.s_values)) > 0


def test_search_ceiling_hit():
    p = DensityProfile(1.0, 1.0, degenerate_ok=True)
    c = BoundaryCoefficients(0.7, 0, 0, 1.0, 0, 0)
    cfg = NumericsConfig(n_lambda=64, mu_max=0.71).resolve(p)
    with pytest.raises(SearchCeilingHit):
        find_bound_states(p, PotentialSpec.zero(), c, cfg)


def test_deeper_well_binds_more_strongly(layered, dirichlet):
    # deeper wells bind more strongly
    cfg = SMALL
    l1 = forward_run(layered, well(2.0), dirichlet, cfg).data.bound_states
    l2 = forward_run(layered, well(4.0), dirichlet, cfg).data.bound_states
    assert l2.size >= l1.size >= 1
    assert l2[-1] > l1[-1]
    assert math.isfinite(l2[-1])
