"""Problem data: density profile, boundary coefficients, sampled potential,
numerical settings and scattering data containers."""
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import (AllZeroCoefficients, InvalidProblem, NegativeAbscissa,
                     NonHermitianData, SignConditionViolated, TruncationTooSmall)


def _check_abscissa(x):
    xa = np.asarray(x, dtype=float)
    if np.any(xa < 0) or np.any(~np.isfinite(xa)):
        raise NegativeAbscissa(f"abscissa must be finite and >= 0, got {x!r}")
    return xa


@dataclass(frozen=True)
class DensityProfile:
    """rho(x) = alpha**2 on [0, a), 1 on [a, inf).

    ``alpha == 1`` is rejected unless ``degenerate_ok`` is set; that mode
    removes the jump and is only meant for checking against classical
    closed forms.
    """
    alpha: float
    a: float
    degenerate_ok: bool = False

    def __post_init__(self):
        if not (math.isfinite(self.alpha) and self.alpha > 0):
            raise InvalidProblem(f"alpha must be positive, got {self.alpha!r}")
        if not (math.isfinite(self.a) and self.a > 0):
            raise InvalidProblem(f"a must be positive, got {self.a!r}")
        if self.alpha == 1.0 and not self.degenerate_ok:
            raise InvalidProblem("alpha = 1 is only allowed in degenerate validation mode")

    @property
    def tau(self):
        return (self.alpha - 1.0) / (self.alpha + 1.0)

    @property
    def degenerate(self):
        return self.alpha == 1.0

    def sqrt_rho(self, x):
        xa = _check_abscissa(x)
        return np.where(xa < self.a, self.alpha, 1.0)

    def rho(self, x):
        return self.sqrt_rho(x) ** 2

    def mu_pm(self, x):
        s = self.sqrt_rho(x)
        xa = np.asarray(x, dtype=float)
        return s * xa + self.a * (1.0 - s), -s * xa + self.a * (1.0 + s)

    def weights(self, x):
        """Amplitudes (1 + 1/sqrt(rho))/2 and (1 - 1/sqrt(rho))/2 of the two free waves."""
        s = self.sqrt_rho(x)
        return 0.5 * (1.0 + 1.0 / s), 0.5 * (1.0 - 1.0 / s)


def rho_at(p, x):
    r = p.rho(x)
    return float(r) if np.ndim(r) == 0 else r


def mu_pm(p, x):
    mp, mm = p.mu_pm(x)
    if np.ndim(mp) == 0:
        return float(mp), float(mm)
    return mp, mm


@dataclass(frozen=True)
class BoundaryCoefficients:
    """Coefficients of (b0 + i b1 lam + b2 lam^2) y'(0) + (a0 + i a1 lam + a2 lam^2) y(0) = 0."""
    alpha0: float
    alpha1: float
    alpha2: float
    beta0: float
    beta1: float
    beta2: float

    def __post_init__(self):
        for name in ("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2"):
            v = getattr(self, name)
            if not math.isfinite(v):
                raise InvalidProblem(f"boundary coefficient {name} is not finite: {v!r}")

    @classmethod
    def from_sequence(cls, seq):
        if len(seq) != 6:
            raise InvalidProblem(f"boundary needs 6 coefficients, got {len(seq)}")
        return cls(*(float(v) for v in seq))

    @classmethod
    def dirichlet(cls):
        return cls(1.0, 0.0, 0.0, 0.0, 0.0, 0.0)

    def as_tuple(self):
        return (self.alpha0, self.alpha1, self.alpha2, self.beta0, self.beta1, self.beta2)

    def scaled(self, c):
        return BoundaryCoefficients(*(c * v for v in self.as_tuple()))

    @property
    def deltas(self):
        d1 = self.alpha0 * self.beta1 - self.alpha1 * self.beta0
        d2 = self.alpha0 * self.beta2 - self.alpha2 * self.beta0
        d3 = self.alpha1 * self.beta2 - self.alpha2 * self.beta1
        return d1, d2, d3

    @property
    def all_beta_zero(self):
        return self.beta0 == 0.0 and self.beta1 == 0.0 and self.beta2 == 0.0

    def p_poly(self, lam):
        """beta0 + i beta1 lam + beta2 lam^2 (multiplies y'(0))."""
        lam = np.asarray(lam)
        return self.beta0 + 1j * self.beta1 * lam + self.beta2 * lam * lam

    def q_poly(self, lam):
        """alpha0 + i alpha1 lam + alpha2 lam^2 (multiplies y(0))."""
        lam = np.asarray(lam)
        return self.alpha0 + 1j * self.alpha1 * lam + self.alpha2 * lam * lam

    def p_imag_axis(self, mu):
        """Real value of the y'(0) polynomial at lam = i mu."""
        return self.beta0 - self.beta1 * mu - self.beta2 * mu * mu

    def q_imag_axis(self, mu):
        return self.alpha0 - self.alpha1 * mu - self.alpha2 * mu * mu


def validate_boundary(c):
    """Return ``(delta1, delta2, delta3)`` or raise if the sign conditions fail."""
    if all(v == 0.0 for v in c.as_tuple()):
        raise AllZeroCoefficients("all six boundary coefficients vanish")
    d1, d2, d3 = c.deltas
    if d1 > 0:
        raise SignConditionViolated("delta1", d1)
    if d2 > 0:
        raise SignConditionViolated("delta2", d2)
    if d3 < 0:
        raise SignConditionViolated("delta3", d3)
    return d1, d2, d3


@dataclass(frozen=True, eq=False)
class PotentialSpec:
    """q sampled on ``grid`` (starting at 0), linear in between, zero beyond ``support_bound``."""
    grid: np.ndarray
    values: np.ndarray
    support_bound: float

    def __post_init__(self):
        g = np.asarray(self.grid, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if g.ndim != 1 or g.shape != v.shape or g.size < 2:
            raise InvalidProblem("potential grid and values must be 1-D arrays of equal length >= 2")
        if g[0] != 0.0:
            raise InvalidProblem("potential grid must start at 0")
        if np.any(np.diff(g) <= 0):
            raise InvalidProblem("potential grid must be strictly increasing")
        if not np.all(np.isfinite(v)):
            raise InvalidProblem("potential values must be finite")
        xq = float(self.support_bound)
        if not (math.isfinite(xq) and xq >= 0):
            raise InvalidProblem("support_bound must be a finite non-negative number")
        if np.any(v[g > xq] != 0.0):
            raise InvalidProblem("potential values beyond support_bound must be zero")
        g.setflags(write=False)
        v.setflags(write=False)
        object.__setattr__(self, "grid", g)
        object.__setattr__(self, "values", v)
        object.__setattr__(self, "support_bound", xq)

    @classmethod
    def zero(cls):
        return cls(np.array([0.0, 1.0]), np.zeros(2), 0.0)

    @classmethod
    def from_function(cls, f, support_bound, step):
        n = int(math.ceil(support_bound / step - 1e-9))
        grid = np.linspace(0.0, n * step, n + 1)
        vals = np.asarray(f(grid), dtype=float)
        vals = np.where(grid <= support_bound, vals, 0.0)
        return cls(grid, vals, min(support_bound, grid[-1]))

    @property
    def is_zero(self):
        return not np.any(self.values)

    def __call__(self, x):
        xa = np.asarray(x, dtype=float)
        out = np.interp(xa, self.grid, self.values, left=0.0, right=0.0)
        return np.where(xa <= self.support_bound, out, 0.0)

    def weighted_norm(self):
        """Trapezoid value of sum (1 + x)|q| dx over the grid."""
        w = (1.0 + self.grid) * np.abs(self.values)
        return float(np.sum(0.5 * (w[1:] + w[:-1]) * np.diff(self.grid)))

    def scaled(self, c):
        return PotentialSpec(self.grid, c * self.values, self.support_bound)


@dataclass(frozen=True)
class NumericsConfig:
    """Grids and tolerances.  ``None`` fields are filled by :meth:`resolve`."""
    x_max: float = None
    h_x: float = None
    lambda_max: float = None
    n_lambda: int = 4096
    y_max: float = None
    root_tol: float = 1e-10
    quad_tol: float = 1e-8
    solve_tol: float = 1e-8
    mu_max: float = None
    taper_order: int = 8
    singular_fit: bool = True
    workers: int = 1

    def resolve(self, p, q=None):
        """Fill defaults that depend on the problem and check the grid invariants."""
        xq = 0.0 if q is None else q.support_bound
        h = self.h_x if self.h_x is not None else p.a / 100.0
        ratio = p.a / h
        if abs(ratio - round(ratio)) > 1e-9 * max(1.0, ratio):
            raise InvalidProblem(f"h_x = {h!r} does not divide a = {p.a!r}; a must be a grid node")
        h = p.a / round(ratio)
        x_max = self.x_max if self.x_max is not None else max(p.a, xq) + p.a
        n_x = int(math.ceil(x_max / h - 1e-9))
        x_max = n_x * h
        if x_max <= p.a or x_max < xq:
            raise TruncationTooSmall(f"x_max = {x_max!r} must exceed a = {p.a!r} and X_q = {xq!r}")
        lam_max = self.lambda_max if self.lambda_max is not None else 40.0 / p.a
        n_lam = int(self.n_lambda)
        if n_lam < 2 or n_lam % 2:
            raise InvalidProblem(f"n_lambda must be an even integer >= 2, got {self.n_lambda!r}")
        for name in ("root_tol", "quad_tol", "solve_tol"):
            if not getattr(self, name) > 0:
                raise InvalidProblem(f"{name} must be positive")
        mu_max = self.mu_max
        if mu_max is None:
            depth = 0.0
            if q is not None and not q.is_zero:
                depth = max(0.0, float(np.max(-q.values / p.rho(q.grid))))
            mu_max = math.sqrt(depth) + 1.0 / p.a + 1.0
        return replace(self, x_max=x_max, h_x=h, lambda_max=float(lam_max), n_lambda=n_lam,
                       mu_max=float(mu_max))

    def default_y_max(self, p, bound_states=()):
        if self.y_max is not None:
            return float(self.y_max)
        if len(bound_states):
            return self.x_max + 5.0 / min(min(bound_states), 1.0 / p.a)
        return self.x_max + 10.0 * p.a

    def x_grid(self):
        n = int(round(self.x_max / self.h_x))
        return np.arange(n + 1) * self.h_x

    def lambda_grid(self):
        n = self.n_lambda
        return self.lambda_max * (2.0 * np.arange(n) - (n - 1)) / (n - 1)

    def refined(self):
        """Halve the spatial step and double the number of lambda samples."""
        return replace(self, h_x=self.h_x / 2.0, n_lambda=2 * self.n_lambda)


@dataclass(frozen=True, eq=False)
class ScatteringData:
    lambda_grid: np.ndarray
    s_values: np.ndarray
    bound_states: np.ndarray = field(default_factory=lambda: np.zeros(0))
    norming: np.ndarray = field(default_factory=lambda: np.zeros(0))

    def __post_init__(self):
        lam = np.asarray(self.lambda_grid, dtype=float)
        s = np.asarray(self.s_values, dtype=complex)
        bs = np.asarray(self.bound_states, dtype=float).reshape(-1)
        m = np.asarray(self.norming, dtype=float).reshape(-1)
        if lam.ndim != 1 or lam.shape != s.shape:
            raise InvalidProblem("lambda_grid and s_values must have equal 1-D shape")
        if bs.shape != m.shape:
            raise InvalidProblem("bound_states and norming must have equal length")
        if bs.size and (np.any(bs <= 0) or np.any(np.diff(bs) <= 0)):
            raise InvalidProblem("bound_states must be positive and strictly ascending")
        if m.size and np.any(m <= 0):
            raise InvalidProblem("norming numbers must be positive")
        for name, arr in (("lambda_grid", lam), ("bound_states", bs), ("norming", m)):
            arr.setflags(write=False)
            object.__setattr__(self, name, arr)
        s.setflags(write=False)
        object.__setattr__(self, "s_values", s)

    def symmetry_residual(self):
        """max |conj(S(-lam)) - S(lam)|, pairing the grid with its reflection."""
        lam = self.lambda_grid
        if not np.allclose(lam[::-1], -lam, rtol=0, atol=1e-12 * max(1.0, np.abs(lam).max())):
            raise NonHermitianData("NonHermitianData: lambda grid is not symmetric about 0")
        return float(np.max(np.abs(np.conj(self.s_values[::-1]) - self.s_values)))

    def check_hermitian(self, tol):
        r = self.symmetry_residual()
        if r > tol:
            raise NonHermitianData(f"NonHermitianData: conj(S(-lam)) != S(lam), residual {r:.3e}")
        return r

    def reflected(self):
        """Data on the lambda-reflected grid: S(-lam), listed in ascending order."""
        return ScatteringData(-self.lambda_grid[::-1], self.s_values[::-1].copy(),
                              self.bound_states, self.norming)
