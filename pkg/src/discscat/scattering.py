"""Forward scattering map: E(lam), S(lam), S0(lam), bound states, norming numbers."""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass

import numpy as np
from scipy.integrate import simpson

from .errors import (BoundaryPolynomialVanishes, CharacteristicVanishes, ContourThroughZero,
                     NonpositiveNorm, SearchCeilingHit)
from .jost import build_mesh, jost_batch
from .model import ScatteringData, validate_boundary


@dataclass(frozen=True)
class CharacteristicValue:
    lam: complex
    E: complex
    S: complex


@dataclass(frozen=True, eq=False)
class BoundState:
    lambda_k: float
    m_k: float
    e_trace: np.ndarray
    dE_dmu: float


def characteristic_values(c, lams, e0, ep0):
    """Vectorised E(lam) and S(lam) from the Jost values at x = 0."""
    P = c.p_poly(lams)
    Q = c.q_poly(lams)
    E = P * ep0 + Q * e0
    with np.errstate(divide="ignore", invalid="ignore"):
        S = (P * np.conj(ep0) + Q * np.conj(e0)) / E
    return E, S


def characteristic(c, j, root_tol=1e-10):
    """E and S at the sample's lambda.  Raises when E vanishes on the real axis."""
    E, S = characteristic_values(c, np.array([j.lam]), np.array([j.e_at_zero]),
                                 np.array([j.e_prime_at_zero]))
    E, S = complex(E[0]), complex(S[0])
    if j.lam.imag == 0.0 and j.lam != 0 and abs(E) <= root_tol:
        raise CharacteristicVanishes(f"CharacteristicVanishes: |E({j.lam.real:.6g})| = {abs(E):.3e}")
    return CharacteristicValue(j.lam, E, S)


def s_zero(p, c, lam):
    """Scattering function of the unperturbed problem; the branch follows beta2."""
    lam = np.asarray(lam, dtype=float)
    tau = p.tau
    ph = np.exp(-2j * lam * p.a)
    pa = np.exp(-2j * lam * p.alpha * p.a)
    if c.beta2 == 0.0:
        out = ph * (1.0 + tau * pa) / (pa + tau)
    else:
        out = -ph * (1.0 - tau * pa) / (pa - tau)
    return complex(out) if out.ndim == 0 else out


def _chunks(n, k):
    bounds = np.linspace(0, n, k + 1).astype(int)
    return [slice(bounds[i], bounds[i + 1]) for i in range(k) if bounds[i + 1] > bounds[i]]


def jost_values(p, q, lams, cfg, mesh=None):
    """Jost values at 0 for many lambda, split across ``cfg.workers`` threads."""
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    lams = np.asarray(lams, dtype=complex)
    workers = max(1, int(cfg.workers))
    if workers == 1 or lams.size < 64:
        return jost_batch(p, q, lams, cfg, mesh=mesh)
    parts = _chunks(lams.size, workers)
    with ThreadPoolExecutor(workers) as ex:
        res = list(ex.map(lambda sl: jost_batch(p, q, lams[sl], cfg, mesh=mesh), parts))
    return np.concatenate([r[0] for r in res]), np.concatenate([r[1] for r in res])


def e_imag_axis(p, q, c, mu, cfg, mesh=None):
    """Real-valued E(i mu) for an array of mu > 0."""
    mu = np.atleast_1d(np.asarray(mu, dtype=float))
    e0, ep0 = jost_values(p, q, 1j * mu, cfg, mesh=mesh)
    E = c.p_imag_axis(mu) * ep0 + c.q_imag_axis(mu) * e0
    return E.real


def _bisect(f, lo, hi, flo, tol, max_iter=200):
    for _ in range(max_iter):
        if hi - lo <= tol:
            break
        mid = 0.5 * (lo + hi)
        fm = f(mid)
        if fm == 0.0:
            return mid
        if (fm > 0) == (flo > 0):
            lo, flo = mid, fm
        else:
            hi = mid
    return 0.5 * (lo + hi)


def scan_step(p):
    return p.a / 50.0


def find_bound_states(p, q, c, cfg, mesh=None):
    """Zeros i*lam_k of E on the positive imaginary axis, ascending."""
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    lo = cfg.root_tol
    n = max(2, int(math.ceil((cfg.mu_max - lo) / scan_step(p))) + 1)
    mus = np.linspace(lo, cfg.mu_max, n)
    vals = e_imag_axis(p, q, c, mus, cfg, mesh=mesh)

    def f(m):
        return float(e_imag_axis(p, q, c, [m], cfg, mesh=mesh)[0])

    roots = []
    for i in range(n - 1):
        a_, b_ = vals[i], vals[i + 1]
        if a_ == 0.0:
            if i > 0:
                roots.append(mus[i])
            continue
        if (a_ > 0) != (b_ > 0) and b_ != 0.0:
            if i == n - 2:
                raise SearchCeilingHit(f"SearchCeilingHit: sign change of E(i mu) next to mu_max = {cfg.mu_max:g}")
            roots.append(_bisect(f, mus[i], mus[i + 1], a_, cfg.root_tol))
    if vals[-1] == 0.0:
        raise SearchCeilingHit(f"SearchCeilingHit: E vanishes at mu_max = {cfg.mu_max:g}")
    return np.array(sorted(roots))


def dE_dmu(p, q, c, mu, cfg, mesh=None, step=None):
    """Centered difference of mu -> E(i mu)."""
    h = step if step is not None else max(1e-5 * mu, 1e-6)
    v = e_imag_axis(p, q, c, [mu - h, mu + h], cfg, mesh=mesh)
    return float((v[1] - v[0]) / (2 * h))


def _winding(p, q, c, cfg, mesh, path, max_rounds=12):
    """Total change of arg E along a closed polygon, divided by 2 pi."""
    pts = []
    for z0, z1 in zip(path[:-1], path[1:]):
        n = max(4, int(math.ceil(abs(z1 - z0) / 0.25)))
        pts.append(z0 + (z1 - z0) * np.arange(n) / n)
    z = np.concatenate(pts + [np.array([path[-1]])])

    def E_at(zz):
        e0, ep0 = jost_values(p, q, zz, cfg, mesh=mesh)
        return c.p_poly(zz) * ep0 + c.q_poly(zz) * e0

    E = E_at(z)
    for _ in range(max_rounds):
        if np.any(np.abs(E) <= cfg.root_tol):
            k = int(np.argmin(np.abs(E)))
            raise ContourThroughZero(f"ContourThroughZero: |E| = {abs(E[k]):.3e} at lam = {z[k]:.6g}")
        dphi = np.angle(E[1:] / E[:-1])
        bad = np.flatnonzero(np.abs(dphi) > math.pi / 4)
        if bad.size == 0:
            break
        zm = 0.5 * (z[bad] + z[bad + 1])
        Em = E_at(zm)
        z = np.insert(z, bad + 1, zm)
        E = np.insert(E, bad + 1, Em)
    else:
        raise ContourThroughZero("ContourThroughZero: argument increments did not resolve")
    return float(np.sum(np.angle(E[1:] / E[:-1])) / (2 * math.pi))


def verify_zero_count(p, q, c, cfg, mesh=None):
    """Number of zeros of E inside the rectangle [-lambda_max, lambda_max] x [root_tol, mu_max]."""
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    L, lo, hi = cfg.lambda_max, cfg.root_tol, cfg.mu_max
    path = [complex(-L, lo), complex(L, lo), complex(L, hi), complex(-L, hi), complex(-L, lo)]
    w = _winding(p, q, c, cfg, mesh, path)
    return int(round(w))


def _weighted_norm(p, x, e, lam_k, x_max):
    """int_0^inf rho e^2 dx: Simpson on each side of a, plus the exp tail past x_max."""
    left = x <= p.a + 1e-12
    right = x >= p.a - 1e-12
    total = p.alpha ** 2 * simpson(e[left] ** 2, x=x[left]) + simpson(e[right] ** 2, x=x[right])
    return total + e[-1] ** 2 / (2.0 * lam_k)


def norming_constants(p, q, c, bound_states, cfg, mesh=None, return_traces=False):
    """m_k from the weighted norm of e(x, i lam_k) plus the boundary correction.

    m_k^-2 = int rho e^2 dx - e(0)^2 (d1 + 2 d2 lam - d3 lam^2) / (2 lam B^2),
    B = b0 - b1 lam - b2 lam^2.  The correction is zero when all beta vanish.
    """
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    d1, d2, d3 = c.deltas
    out, traces = [], []
    for lk in np.asarray(bound_states, dtype=float):
        e0, ep0, re, rep = jost_batch(p, q, np.array([1j * lk]), cfg, mesh=mesh, record=True)
        e = re[0].real
        norm = _weighted_norm(p, mesh.x_grid, e, lk, mesh.x_max)
        if c.all_beta_zero:
            corr = 0.0
        else:
            B = c.p_imag_axis(lk)
            if abs(B) <= cfg.root_tol:
                raise BoundaryPolynomialVanishes(
                    f"BoundaryPolynomialVanishes: b0 - b1 lam - b2 lam^2 = {B:.3e} at lam = {lk:.10g}")
            corr = e0[0].real ** 2 * (d1 + 2 * d2 * lk - d3 * lk * lk) / (2 * lk * B * B)
        inv_m2 = norm - corr
        if not inv_m2 > 0:
            raise NonpositiveNorm(f"NonpositiveNorm: m^-2 = {inv_m2:.3e} at lam = {lk:.10g}")
        out.append(1.0 / math.sqrt(inv_m2))
        traces.append(e)
    m = np.array(out)
    return (m, traces) if return_traces else m


@dataclass(frozen=True, eq=False)
class ForwardResult:
    data: ScatteringData
    E: np.ndarray
    bound: tuple
    zero_count: int = None


def forward_run(p, q, c, cfg, count_zeros=False):
    """Full forward map with diagnostics kept alongside the scattering data."""
    validate_boundary(c)
    cfg = cfg.resolve(p, q) if cfg.x_max is None or cfg.h_x is None or cfg.mu_max is None else cfg
    mesh = build_mesh(p, q, cfg)
    lam = cfg.lambda_grid()
    e0, ep0 = jost_values(p, q, lam, cfg, mesh=mesh)
    E, S = characteristic_values(c, lam, e0, ep0)
    small = np.abs(E) <= cfg.root_tol
    if np.any(small):
        k = int(np.flatnonzero(small)[0])
        raise CharacteristicVanishes(f"CharacteristicVanishes: |E({lam[k]:.6g})| = {abs(E[k]):.3e}")
    roots = find_bound_states(p, q, c, cfg, mesh=mesh)
    m, traces = norming_constants(p, q, c, roots, cfg, mesh=mesh, return_traces=True)
    bound = tuple(BoundState(float(r), float(mk), tr, dE_dmu(p, q, c, r, cfg, mesh=mesh))
                  for r, mk, tr in zip(roots, m, traces))
    zc = verify_zero_count(p, q, c, cfg, mesh=mesh) if count_zeros else None
    return ForwardResult(ScatteringData(lam, S, roots, m), E, bound, zc)


def forward_scattering(p, q, c, cfg):
    return forward_run(p, q, c, cfg).data
