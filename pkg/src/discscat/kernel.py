"""Transition functions F0s, F0, Fs, F built from scattering data."""
import csv
import math
from dataclasses import dataclass, field

import numpy as np

from . import _kernels
from .errors import NonHermitianData, OutOfRange
from .jost import free_jost
from .scattering import s_zero

TAPER_STRENGTH = 36.0


def spectral_taper(lam, lambda_max, order):
    """exp(-36 (|lam|/lambda_max)^order); identically 1 for order 0."""
    lam = np.asarray(lam, dtype=float)
    if not order:
        return np.ones_like(lam)
    return np.exp(-TAPER_STRENGTH * (np.abs(lam) / lambda_max) ** order)


def trapezoid_weights(lam):
    w = np.empty_like(lam)
    d = np.diff(lam)
    w[1:-1] = 0.5 * (d[1:] + d[:-1])
    w[0] = 0.5 * d[0]
    w[-1] = 0.5 * d[-1]
    return w


SINGULAR_ORDER = 4
MAX_SINGULAR_ORDER = 8
FIT_FRACTION = 0.75
HOLDOUT_FRACTION = 0.6
MAX_LATTICE_DEPTH = 48


def jump_lattice(p, lo, hi):
    """Points 2a + 2*alpha*a*n in [lo, hi] where F0s may jump.

    Past 2a the data kernel is as smooth as q (the equation there has no
    reflection term), so candidates stop at 2a.
    """
    hi = min(hi, 2.0 * p.a)
    step = 2.0 * p.alpha * p.a
    n_lo = math.ceil((lo - 2.0 * p.a) / step)
    n_hi = math.floor((hi - 2.0 * p.a) / step)
    return 2.0 * p.a + step * np.arange(n_lo, n_hi + 1)


def lattice_depth(p, tol):
    """Lattice steps below the table needed before reflected jumps, which
    shrink like |tau|^n, fall under ``tol``."""
    tau = abs(p.tau)
    if tau == 0.0:
        return 1
    return int(min(MAX_LATTICE_DEPTH, max(1, math.ceil(math.log(tol) / math.log(tau)))))


def singular_basis(lam, T, gamma, order):
    """exp(-i lam T) / (i lam + gamma)^j, j = 1..order, as columns."""
    base = np.exp(-1j * np.outer(lam, T))
    den = 1j * lam[:, None] + gamma
    return [base / den ** j for j in range(1, order + 1)]


def singular_transform(t, T, gamma, coef, side=0, tol=1e-9):
    """Inverse transform of the fitted singular part.

    Term (T, j) maps to (t - T)^(j-1) exp(-gamma (t - T)) / (j-1)! for t > T.
    ``side`` picks the value of the j = 1 term exactly at a jump:
    +1 right limit, -1 left limit, 0 midpoint.
    """
    t = np.asarray(t, dtype=float)
    out = np.zeros(t.shape)
    if coef.size == 0:
        return out
    h0 = {1: 1.0, -1: 0.0, 0: 0.5}[side]
    for i, Tk in enumerate(T):
        s = t - Tk
        at = np.abs(s) <= tol
        pos = (s > 0) & ~at
        sp = np.where(pos, s, 0.0)
        ex = np.exp(-gamma * sp)
        for j in range(coef.shape[1]):
            c = coef[i, j]
            if c == 0.0:
                continue
            term = np.where(pos, sp ** j * ex / math.factorial(j), 0.0)
            if j == 0:
                term = np.where(at, h0, term)
            out = out + c * term
    return out


@dataclass(frozen=True, eq=False)
class TransitionTable:
    """F0s(t) on the uniform grid t0 + k*dt, plus exactly evaluated parts.

    F0s is stored as a smooth remainder on the grid plus a fitted singular
    part: one-sided exponentials (jumps) and their primitives located on the
    lattice 2a + 2*alpha*a*n.  The bound-state part of F0 is exact as well.
    The grid is aligned with 2a so that sums of two y-lattice nodes a + j*h
    fall on table nodes.
    """
    t0: float
    dt: float
    smooth_values: np.ndarray
    bound_states: np.ndarray
    norming: np.ndarray
    imag_residue: float
    jump_points: np.ndarray = field(default_factory=lambda: np.zeros(0))
    singular_coef: np.ndarray = field(default_factory=lambda: np.zeros((0, SINGULAR_ORDER)))
    gamma: float = 1.0

    def __post_init__(self):
        t = self.t_grid
        vals = {}
        for side in (-1, 0, 1):
            v = self.smooth_values + singular_transform(t, self.jump_points, self.gamma,
                                                        self.singular_coef, side)
            vals[side] = v + self.bound_part(t)
        object.__setattr__(self, "_f0_sides", vals)

    @property
    def t_grid(self):
        return self.t0 + self.dt * np.arange(self.smooth_values.size)

    @property
    def t_end(self):
        return self.t0 + self.dt * (self.smooth_values.size - 1)

    @property
    def f0s_values(self):
        """F0s at the grid nodes (midpoint value at jumps)."""
        return self._f0_sides[0] - self.bound_part(self.t_grid)

    @property
    def f0_values(self):
        return self._f0_sides[0]

    def f0_side_values(self, side):
        return self._f0_sides[side]

    @property
    def jump_sizes(self):
        return self.singular_coef[:, 0] if self.singular_coef.size else np.zeros(0)

    def bound_part(self, t):
        t = np.asarray(t, dtype=float)
        out = np.zeros_like(t)
        for lk, mk in zip(self.bound_states, self.norming):
            out = out + mk * mk * np.exp(-lk * t)
        return out

    def _check(self, t):
        slack = 1e-9 * self.dt
        if np.any(t < self.t0 - slack) or np.any(t > self.t_end + slack):
            raise OutOfRange(f"OutOfRange: t outside [{self.t0:.6g}, {self.t_end:.6g}]")

    def f0s(self, t, side=0):
        t = np.asarray(t, dtype=float)
        self._check(t)
        u = (t - self.t0) / self.dt
        k = np.clip(np.floor(u).astype(np.int64), 0, self.smooth_values.size - 2)
        frac = u - k
        v = self.smooth_values
        out = (1.0 - frac) * v[k] + frac * v[k + 1]
        return out + singular_transform(t, self.jump_points, self.gamma, self.singular_coef, side)

    def f0(self, t, side=0):
        return self.f0s(t, side) + self.bound_part(t)

    def end_values(self):
        """|F0s| at both grid ends (decay witness)."""
        v = self.f0s_values
        return float(abs(v[0])), float(abs(v[-1]))

    def tail_point(self, t_from, rel):
        """Smallest grid t >= t_from beyond which |F0| <= rel * max|F0| on [t_from, end]."""
        t = self.t_grid
        sel = t >= t_from - 1e-9 * self.dt
        vals = np.abs(self.f0_values[sel])
        ts = t[sel]
        if vals.size == 0:
            return self.t_end
        thr = rel * vals.max()
        above = np.flatnonzero(vals > thr)
        if above.size == 0:
            return float(ts[0])
        last = above[-1]
        return float(ts[min(last + 1, ts.size - 1)])

    def write_csv(self, path):
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["t", "F0s"])
            for t, v in zip(self.t_grid, self.f0s_values):
                wr.writerow([format(t, ".17g"), format(v, ".17g")])


def table_range(p, cfg, y_max):
    """Aligned (t0, n) covering [2 mu+(0) - y_max, 2 y_max]."""
    h = cfg.h_x
    mp0 = p.a * (1.0 - p.alpha)
    lo = 2.0 * mp0 - y_max
    hi = 2.0 * y_max
    k_lo = math.floor((lo - 2.0 * p.a) / h) - 1
    k_hi = math.ceil((hi - 2.0 * p.a) / h) + 1
    return 2.0 * p.a + k_lo * h, k_hi - k_lo + 1


def _lstsq_fit(lam, g, T, gamma, order, sel):
    cols = singular_basis(lam[sel], T, gamma, order)
    A = np.stack(cols, axis=2).reshape(int(sel.sum()), len(T) * order)
    Ar = np.vstack([A.real, A.imag])
    b = np.concatenate([g[sel].real, g[sel].imag])
    coef, *_ = np.linalg.lstsq(Ar, b, rcond=None)
    return coef.reshape(len(T), order)


def singular_model(lam, T, gamma, coef):
    out = np.zeros(np.shape(lam), dtype=complex)
    if coef.size:
        for j, col in enumerate(singular_basis(lam, T, gamma, coef.shape[1])):
            out = out + col @ coef[:, j]
    return out


def fit_singular_part(lam, g, T, gamma, order=None, fraction=FIT_FRACTION):
    """Real least-squares coefficients of g ~ sum c_Tj exp(-i lam T)/(i lam + gamma)^j
    over lam >= fraction * max|lam|.

    With ``order=None`` the order is picked from 1..MAX_SINGULAR_ORDER by the
    residual on the held-out band [HOLDOUT_FRACTION, fraction) * max|lam|:
    too few terms leave the jumps unresolved, too many start fitting the
    smooth content of the data.  Returns an empty fit when the band is too thin.
    """
    T = np.asarray(T, float)
    lmax = float(np.max(np.abs(lam)))
    sel = lam >= fraction * lmax
    orders = [order] if order else range(1, MAX_SINGULAR_ORDER + 1)
    if len(T) == 0 or 2 * int(sel.sum()) < 4 * len(T) * min(orders):
        return np.zeros((0, order or SINGULAR_ORDER)), np.zeros(0)
    hold = (lam >= HOLDOUT_FRACTION * lmax) & ~sel
    best = None
    for k in orders:
        if 2 * int(sel.sum()) < 4 * len(T) * k:
            break
        coef = _lstsq_fit(lam, g, T, gamma, k, sel)
        if len(orders) == 1 or not hold.any():
            return coef, T
        r = g[hold] - singular_model(lam[hold], T, gamma, coef)
        score = float(np.sqrt(np.mean(np.abs(r) ** 2)))
        if best is None or score < best[0]:
            best = (score, coef)
    return best[1], T


def f0s_transform(sd, p, c, cfg, y_max=None):
    """Tabulate F0s(t) = (1/2 pi) int (S0 - S) exp(i lam t) dlam.

    The slowly decaying part of S0 - S, which carries the jumps of F0s, is
    fitted on the high-|lam| band and transformed exactly; the remainder is
    summed by the trapezoid rule after :func:`spectral_taper`.
    """
    lam = sd.lambda_grid
    sym = sd.symmetry_residual()
    if sym > cfg.solve_tol * max(1.0, float(np.max(np.abs(sd.s_values)))):
        raise NonHermitianData(f"NonHermitianData: conj(S(-lam)) - S(lam) residual {sym:.3e}")
    if y_max is None:
        y_max = cfg.default_y_max(p, sd.bound_states)
    t0, n = table_range(p, cfg, y_max)
    t = t0 + cfg.h_x * np.arange(n)
    g = s_zero(p, c, lam) - sd.s_values
    period = 2.0 * math.pi / float(np.max(np.diff(lam))) if lam.size > 1 else 0.0
    if np.any(g != 0) and t[-1] - t[0] >= period:
        raise OutOfRange(f"OutOfRange: lambda spacing aliases with period {period:.6g} below the "
                         f"table span {t[-1] - t[0]:.6g}; raise n_lambda or lower y_max")
    gamma = 1.0 / p.a
    coef, T = np.zeros((0, SINGULAR_ORDER)), np.zeros(0)
    if cfg.singular_fit and np.any(g != 0):
        step = 2.0 * p.alpha * p.a
        lo = t[0] - lattice_depth(p, cfg.solve_tol) * step
        coef, T = fit_singular_part(lam, g, jump_lattice(p, lo, t[-1] + step), gamma)
        g = g - singular_model(lam, T, gamma, coef)
    g = g * spectral_taper(lam, cfg.lambda_max, cfg.taper_order)
    wg = trapezoid_weights(lam) * g / (2.0 * math.pi)
    vals = _kernels.fourier_sum(lam, wg, t)
    scale = max(1.0, float(np.max(np.abs(vals.real))))
    resid = float(np.max(np.abs(vals.imag))) if vals.size else 0.0
    if resid > cfg.solve_tol * scale:
        raise NonHermitianData(f"NonHermitianData: imaginary residue {resid:.3e} in F0s")
    return TransitionTable(t0, cfg.h_x, vals.real.copy(), np.asarray(sd.bound_states, float),
                           np.asarray(sd.norming, float), resid, T, coef, gamma)


def f0_eval(tt, x):
    v = tt.f0(x)
    return float(v) if np.ndim(v) == 0 else v


def fs_eval(tt, p, x, y, side=0):
    """Continuous-spectrum part (1+1/s)/2 F0s(y + mu+) + (1-1/s)/2 F0s(y + mu-), s = sqrt(rho(x)).

    ``side`` selects the one-sided value where y + mu+- hits a jump of F0s.
    """
    cp, cm = p.weights(x)
    mp, mm = p.mu_pm(x)
    y = np.asarray(y, dtype=float)
    out = cp * tt.f0s(y + mp, side)
    if np.any(cm != 0.0):
        out = out + cm * tt.f0s(y + mm, side)
    return float(out) if np.ndim(out) == 0 else out


def f_eval(tt, p, x, y, side=0):
    """F(x, y) = Fs(x, y) + sum m_k^2 e0(x, i lam_k) exp(-lam_k y)."""
    y = np.asarray(y, dtype=float)
    out = np.asarray(fs_eval(tt, p, x, y, side), dtype=float)
    for lk, mk in zip(tt.bound_states, tt.norming):
        e0 = free_jost(p, x, 1j * lk)[0].real
        out = out + mk * mk * e0 * np.exp(-lk * y)
    return float(out) if np.ndim(out) == 0 else out


def write_f_slices(path, tt, p, xs, ys):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", "y", "F"])
        for x in xs:
            for y in ys:
                wr.writerow([format(x, ".17g"), format(y, ".17g"), format(f_eval(tt, p, x, y), ".17g")])
