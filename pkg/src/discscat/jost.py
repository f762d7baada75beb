"""Free and numerical Jost solutions, the regular solution and the Wronskian."""
import csv
from dataclasses import dataclass

import numpy as np

from . import _kernels
from .errors import StepRejected, TruncationTooSmall
from .model import _check_abscissa

# Integrator tolerances relative to cfg.quad_tol.
RTOL_FACTOR = 1e-2
ATOL_FACTOR = 1e-4
MAX_STEPS = 2_000_000


def free_jost(p, x, lam):
    """e0(x, lam) and its x-derivative for q = 0."""
    xa = _check_abscissa(x)
    lam = np.asarray(lam, dtype=complex)
    s = p.sqrt_rho(xa)
    mp, mm = p.mu_pm(xa)
    cp, cm = p.weights(xa)
    ep = np.exp(1j * lam * mp)
    em = np.exp(1j * lam * mm)
    e0 = cp * ep + cm * em
    e0p = 1j * lam * s * (cp * ep - cm * em)
    if np.ndim(e0) == 0:
        return complex(e0), complex(e0p)
    return e0, e0p


@dataclass(frozen=True)
class JostMesh:
    """Forced integration nodes and the piecewise data on each interval."""
    nodes: np.ndarray
    rho: np.ndarray
    q0: np.ndarray
    slope: np.ndarray
    x_grid: np.ndarray
    grid_index: np.ndarray  # mesh index of every x_grid node

    @property
    def x_max(self):
        return float(self.nodes[-1])


def build_mesh(p, q, cfg):
    x_grid = cfg.x_grid()
    if cfg.x_max <= p.a or cfg.x_max < q.support_bound:
        raise TruncationTooSmall(f"x_max = {cfg.x_max!r} must exceed max(a, X_q)")
    pts = [x_grid, [p.a, q.support_bound]]
    if not q.is_zero:
        pts.append(q.grid[q.grid <= q.support_bound])
    nodes = np.unique(np.concatenate([np.asarray(v, dtype=float) for v in pts]))
    nodes = nodes[(nodes >= 0) & (nodes <= cfg.x_max)]
    # merge nodes closer than a rounding distance so no interval is degenerate
    keep = np.concatenate([[True], np.diff(nodes) > 1e-12 * max(1.0, cfg.x_max)])
    nodes = nodes[keep]
    mid = 0.5 * (nodes[1:] + nodes[:-1])
    rho = p.rho(mid)
    ql = q(nodes[:-1])
    qr = q(nodes[1:])
    if q.support_bound in nodes:
        # q is cut to zero beyond X_q: the interval starting there carries zero
        beyond = nodes[:-1] >= q.support_bound
        ql = np.where(beyond, 0.0, ql)
        qr = np.where(beyond, 0.0, qr)
    slope = (qr - ql) / np.diff(nodes)
    idx = np.searchsorted(nodes, x_grid)
    idx = np.clip(idx, 0, nodes.size - 1)
    close = np.abs(nodes[idx] - x_grid) <= 1e-12 * max(1.0, cfg.x_max)
    idx = np.where(close, idx, idx - 1)
    return JostMesh(nodes, rho, ql, slope, x_grid, idx)


def _integrate(mesh, lams, y0, yp0, backward, cfg, record):
    n_nodes = mesh.nodes.size
    rec_pos = np.full(n_nodes, -1, dtype=np.int64)
    n_rec = 0
    if record:
        rec_pos[mesh.grid_index] = np.arange(mesh.grid_index.size)
        n_rec = mesh.grid_index.size
    rtol = cfg.quad_tol * RTOL_FACTOR
    atol = cfg.quad_tol * ATOL_FACTOR
    y, yp, ry, ryp, status = _kernels.dp5_batch(lams, y0, yp0, mesh.nodes, mesh.rho, mesh.q0,
                                                mesh.slope, backward, rec_pos, n_rec,
                                                rtol, atol, MAX_STEPS)
    if np.any(status != 0):
        bad = np.asarray(lams)[status != 0]
        raise StepRejected(f"StepRejected: integrator failed for lambda = {bad[:5]}")
    return y, yp, ry, ryp


def jost_batch(p, q, lams, cfg, mesh=None, record=False):
    """e(0, lam) and e'(0, lam) for an array of lambda (closed upper half-plane).

    Integration runs backward from x_max with e = 1, e' = i lam, and the
    factor exp(i lam x_max) is reattached afterwards, so that bound-state
    parameters lam = i mu do not underflow.
    """
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    lams = np.atleast_1d(np.asarray(lams, dtype=complex))
    ones = np.ones_like(lams)
    y, yp, ry, ryp = _integrate(mesh, lams, ones, 1j * lams, True, cfg, record)
    scale = np.exp(1j * lams * mesh.x_max)
    if record:
        return y * scale, yp * scale, ry * scale[:, None], ryp * scale[:, None]
    return y * scale, yp * scale


@dataclass(frozen=True, eq=False)
class JostSample:
    lam: complex
    e_at_zero: complex
    e_prime_at_zero: complex
    x: np.ndarray
    e: np.ndarray
    e_prime: np.ndarray

    def write_csv(self, path):
        write_trace_csv(path, self.x, self.e, self.e_prime, ("e", "e'"))


@dataclass(frozen=True, eq=False)
class RegularSample:
    lam: complex
    x: np.ndarray
    w: np.ndarray
    w_prime: np.ndarray


def jost_solution(p, q, lam, cfg, mesh=None):
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    lam = complex(lam)
    e0, ep0, re, rep = jost_batch(p, q, np.array([lam]), cfg, mesh=mesh, record=True)
    return JostSample(lam, complex(e0[0]), complex(ep0[0]), mesh.x_grid.copy(), re[0], rep[0])


def regular_solution(p, q, c, lam, cfg, mesh=None):
    """Forward solution with w(0) = P(lam), w'(0) = -Q(lam)."""
    if mesh is None:
        mesh = build_mesh(p, q, cfg)
    lam = complex(lam)
    lams = np.array([lam])
    w0 = np.array([complex(c.p_poly(lam))])
    wp0 = np.array([-complex(c.q_poly(lam))])
    _, _, rw, rwp = _integrate(mesh, lams, w0, wp0, False, cfg, True)
    return RegularSample(lam, mesh.x_grid.copy(), rw[0], rwp[0])


def wronskian(sample, conj_sample=None):
    """e' conj(e) - e conj(e') at every trace node (2 i lam for real lam).

    ``conj_sample`` defaults to the conjugate of ``sample`` itself; passing the
    solution at ``-lam`` checks the identity against an independent solve.
    """
    if conj_sample is None:
        eb, ebp = np.conj(sample.e), np.conj(sample.e_prime)
    else:
        eb, ebp = conj_sample.e, conj_sample.e_prime
    return sample.e_prime * eb - sample.e * ebp


def write_trace_csv(path, x, f, fp, names=("e", "e'")):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(["x", f"Re {names[0]}", f"Im {names[0]}", f"Re {names[1]}", f"Im {names[1]}"])
        for row in zip(x, f.real, f.imag, fp.real, fp.imag):
            wr.writerow([format(v, ".17g") for v in row])
