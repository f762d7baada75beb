import math

import numpy as np
import pytest

from discscat.errors import (AllZeroCoefficients, InvalidProblem, NegativeAbscissa, NonHermitianData,
                             SignConditionViolated, TruncationTooSmall)
from discscat.model import (BoundaryCoefficients, DensityProfile, NumericsConfig, PotentialSpec,
                            ScatteringData, mu_pm, rho_at, validate_boundary)


def test_tau_and_weights():
    p = DensityProfile(2.0, 1.0)
    assert p.tau == pytest.approx(1.0 / 3.0)
    cp, cm = p.weights(0.5)
    assert (cp, cm) == pytest.approx((0.75, 0.25))
    assert p.weights(1.5) == pytest.approx((1.0, 0.0))


def test_travel_times_meet_at_interface():
    p = DensityProfile(3.0, 0.7)
    x = np.linspace(0.0, 0.69, 25)
    mp, mm = p.mu_pm(x)
    assert np.allclose(mp + mm, 2 * p.a)
    assert mu_pm(p, p.a) == pytest.approx((p.a, p.a))
    assert mu_pm(p, 2.0) == pytest.approx((2.0, 2 * p.a - 2.0))
    assert mu_pm(p, 0.0)[0] == pytest.approx(p.a * (1 - p.alpha))


def test_rho_piecewise_and_negative_abscissa():
    p = DensityProfile(2.0, 1.0)
    assert rho_at(p, 0.99) == 4.0
    assert rho_at(p, 1.0) == 1.0
    with pytest.raises(NegativeAbscissa):
        p.rho(-0.1)


def test_alpha_one_needs_degenerate_flag():
    with pytest.raises(InvalidProblem):
        DensityProfile(1.0, 1.0)
    assert DensityProfile(1.0, 1.0, degenerate_ok=True).degenerate


@pytest.mark.parametrize("alpha,a", [(0.0, 1.0), (-1.0, 1.0), (2.0, 0.0), (math.nan, 1.0)])
def test_density_rejects_bad_parameters(alpha, a):
    with pytest.raises(InvalidProblem):
        DensityProfile(alpha, a)


def test_sign_conditions():
    assert validate_boundary(BoundaryCoefficients.dirichlet()) == (0.0, 0.0, 0.0)
    with pytest.raises(SignConditionViolated, match="delta1"):
        validate_boundary(BoundaryCoefficients(1, 0, 0, 0, 1, 0))
    with pytest.raises(SignConditionViolated, match="delta2"):
        validate_boundary(BoundaryCoefficients(1, 0, 0, 0, 0, 1))
    with pytest.raises(SignConditionViolated, match="delta3"):
        validate_boundary(BoundaryCoefficients(0, 1, 0, 0, 0, -1))
    with pytest.raises(AllZeroCoefficients):
        validate_boundary(BoundaryCoefficients(0, 0, 0, 0, 0, 0))


def test_boundary_polynomials_on_imaginary_axis():
    c = BoundaryCoefficients(-1.0, 0.5, -2.0, 1.0, 0.3, 2.0)
    mu = 0.7
    assert c.p_poly(1j * mu) == pytest.approx(c.p_imag_axis(mu))
    assert c.q_poly(1j * mu) == pytest.approx(c.q_imag_axis(mu))


def test_resolve_defaults_and_alignment():
    p = DensityProfile(2.0, 1.0)
    q = PotentialSpec.from_function(lambda x: 0 * x, 3.5, 0.01)
    cfg = NumericsConfig().resolve(p, q)
    assert cfg.h_x == pytest.approx(0.01)
    assert cfg.lambda_max == 40.0 and cfg.n_lambda == 4096
    assert cfg.x_max == pytest.approx(4.5)
    lam = cfg.lambda_grid()
    assert lam.size == 4096 and not np.any(lam == 0)
    assert np.allclose(lam, -lam[::-1])
    with pytest.raises(InvalidProblem):
        NumericsConfig(h_x=0.03).resolve(p, q)
    with pytest.raises(TruncationTooSmall):
        NumericsConfig(x_max=1.0).resolve(p, q)
    with pytest.raises(InvalidProblem):
        NumericsConfig(n_lambda=11).resolve(p, q)


def test_refined_halves_step_and_doubles_samples():
    cfg = NumericsConfig().resolve(DensityProfile(2.0, 1.0))
    r = cfg.refined()
    assert r.h_x == cfg.h_x / 2 and r.n_lambda == 2 * cfg.n_lambda
    assert r.lambda_max == cfg.lambda_max


def test_potential_support_and_interpolation():
    g = np.linspace(0, 2, 5)
    q = PotentialSpec(g, np.array([0.0, 1.0, 2.0, 0.0, 0.0]), 1.5)
    assert q(0.25) == pytest.approx(0.5)
    assert q(1.75) == 0.0
    with pytest.raises(InvalidProblem):
        PotentialSpec(g, np.array([0.0, 1.0, 2.0, 0.0, 1.0]), 1.5)
    with pytest.raises(InvalidProblem):
        PotentialSpec(g[1:], np.ones(4), 1.0)


def test_scattering_data_symmetry_residual():
    lam = np.linspace(-3, 3, 8)
    s = np.exp(1j * lam)
    sd = ScatteringData(lam, s)
    assert sd.symmetry_residual() < 1e-15
    bad = s.copy()
    bad[2] += 0.1
    assert ScatteringData(lam, bad).symmetry_residual() == pytest.approx(0.1)
    with pytest.raises(NonHermitianData):
        ScatteringData(lam + 0.1, s).symmetry_residual()
    with pytest.raises(InvalidProblem):
        ScatteringData(lam, s, np.array([1.0]), np.array([-1.0]))
