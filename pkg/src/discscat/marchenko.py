"""Nystrom solution of the main equation, potential reconstruction and jump check.

For every x the unknown K(x, .) lives on [mu+(x), y_hi(x)].  Nodes are the
lattice a + j*h plus mu+(x) and, for x < a, the jump node mu-(x) carrying two
unknowns (left and right limits).  The reflection term -tau K(x, 2a - y)
couples the row at y with the unknown at 2a - y for mu+ <= y <= mu-.
"""
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
from scipy.linalg import lapack, lu_factor, lu_solve

from .errors import (FamilyIncomplete, IllConditioned, InsufficientNodes, NoInteriorNodes,
                     SingularSystem, DiscScatError)
from .kernel import f0s_transform
from .model import PotentialSpec
from .scattering import forward_run

MERGE_TOL = 1e-9


@dataclass(frozen=True, eq=False)
class KernelSlice:
    """K(x, .) at the nodes ``y``.  At the jump both limits are stored:
    ``y[jump]`` and ``y[jump + 1]`` coincide, left value first."""
    x: float
    y: np.ndarray
    k: np.ndarray
    cond: float
    jump: int = -1
    partners: tuple = ()

    @property
    def diagonal(self):
        return float(self.k[0])

    @property
    def jump_value(self):
        if self.jump < 0:
            return 0.0
        return float(self.k[self.jump + 1] - self.k[self.jump])

    def l1_norm(self):
        return float(np.sum(0.5 * (np.abs(self.k[1:]) + np.abs(self.k[:-1])) * np.diff(self.y)))

    def value_at(self, y):
        """Linear interpolation; K = 0 below mu+ and past the last node."""
        y = np.asarray(y, dtype=float)
        out = np.interp(y, self.y, self.k, left=0.0, right=0.0)
        return out


@dataclass(frozen=True, eq=False)
class KernelTable:
    x_nodes: np.ndarray
    slices: tuple

    @property
    def diagonal(self):
        return np.array([s.diagonal for s in self.slices])

    @property
    def jumps(self):
        return np.array([s.jump_value if s.jump >= 0 else np.nan for s in self.slices])

    @property
    def condition_numbers(self):
        return np.array([s.cond for s in self.slices])

    def scaled(self, c):
        return KernelTable(self.x_nodes, tuple(
            KernelSlice(s.x, s.y, c * s.k, s.cond, s.jump, s.partners) for s in self.slices))

    def write_csv(self, path):
        import csv
        with open(path, "w", newline="") as fh:
            wr = csv.writer(fh)
            wr.writerow(["x", "y", "K"])
            for s in self.slices:
                for y, k in zip(s.y, s.k):
                    wr.writerow([format(s.x, ".17g"), format(y, ".17g"), format(k, ".17g")])


def _y_upper(tt, p, cfg, x, y_max, t_tail):
    """Data-driven truncation: past t_tail the data kernel is below the noise level."""
    h = cfg.h_x
    mp, mm = p.mu_pm(x)
    hi = min(y_max, t_tail - float(mp))
    floor_ = (float(mm) if x < p.a else float(mp)) + 4 * h
    hi = max(hi, floor_)
    j = math.ceil((hi - p.a) / h - MERGE_TOL)
    hi = p.a + j * h
    # keep all t + y inside the table
    lim = 0.5 * tt.t_end
    if hi > lim + MERGE_TOL * h:
        hi = p.a + math.floor((lim - p.a) / h + MERGE_TOL) * h
    return hi


def _nodes(p, h, x, hi):
    """Node positions, lattice index (or None) and the position of the jump node."""
    a = p.a
    mp, mm = (float(v) for v in p.mu_pm(x))
    has_jump = x < a and not p.degenerate
    j_lo = math.ceil((mp - a) / h - MERGE_TOL)
    j_hi = math.floor((hi - a) / h + MERGE_TOL)
    pos, lat = [], []
    if abs(a + j_lo * h - mp) > MERGE_TOL * h:
        pos.append(mp)
        lat.append(None)
    for j in range(j_lo, j_hi + 1):
        pos.append(a + j * h)
        lat.append(j)
    jump = -1
    if has_jump:
        jm = round((mm - a) / h)
        if abs(a + jm * h - mm) <= MERGE_TOL * h:
            jump = lat.index(jm)
        else:
            k = int(np.searchsorted(np.array(pos), mm))
            pos.insert(k, mm)
            lat.insert(k, None)
            jump = k
    return pos, lat, jump


def _assemble(tt, p, cfg, x, hi):
    h = cfg.h_x
    a = p.a
    tau = p.tau
    pos, lat, jump = _nodes(p, h, x, hi)
    n_nodes = len(pos)
    # unknown layout: one per node, two at the jump (left, right)
    y = []
    ulat = []
    for i in range(n_nodes):
        y.append(pos[i])
        ulat.append(lat[i])
        if i == jump:
            y.append(pos[i])
            ulat.append(lat[i])
    y = np.array(y)
    n = y.size
    ujump = -1
    if jump >= 0:
        ujump = jump  # nodes before the jump map one to one
    # trapezoid half-weights on each side of every unknown: an interval
    # ending at the jump uses the left unknown, one starting there the right
    wl = np.zeros(n)
    wr = np.zeros(n)
    node_left_u = list(range(n_nodes))
    node_right_u = list(range(n_nodes))
    for i in range(n_nodes):
        if jump >= 0 and i > jump:
            node_left_u[i] = node_right_u[i] = i + 1
    if jump >= 0:
        node_right_u[jump] = jump + 1
    for i in range(n_nodes - 1):
        d = pos[i + 1] - pos[i]
        wr[node_right_u[i]] += 0.5 * d
        wl[node_left_u[i + 1]] += 0.5 * d

    # F0(y_r + t_u) with one-sided limits: the half interval left of t_u sees
    # F0(s-), the one to the right sees F0(s+)
    ul = np.array([-10**9 if v is None else v for v in ulat])
    is_lat = np.array([v is not None for v in ulat])
    fm = tt.f0_side_values(-1)
    fp = tt.f0_side_values(1)
    k0 = round((2 * a - tt.t0) / h)
    A = np.empty((n, n))
    li = np.flatnonzero(is_lat)
    idx = ul[li][:, None] + ul[li][None, :] + k0
    A[np.ix_(li, li)] = fm[idx] * wl[li][None, :] + fp[idx] * wr[li][None, :]
    sp = np.flatnonzero(~is_lat)
    if sp.size:
        s_row = y[sp][:, None] + y[None, :]
        A[sp, :] = tt.f0(s_row, -1) * wl[None, :] + tt.f0(s_row, 1) * wr[None, :]
        s_col = y[:, None] + y[sp][None, :]
        A[:, sp] = tt.f0(s_col, -1) * wl[sp][None, :] + tt.f0(s_col, 1) * wr[sp][None, :]
    A[np.diag_indices(n)] += 1.0

    partners = []
    if x < a and tau != 0.0:
        lat_u = {}
        for u in range(n):
            if ulat[u] is not None and (ujump < 0 or u != ujump + 1):
                lat_u.setdefault(ulat[u], u)
        for r in range(n):
            if r == 0:
                c = ujump
            elif r == ujump:
                c = 0
            elif r < ujump and ulat[r] is not None and (-ulat[r]) in lat_u:
                c = lat_u[-ulat[r]]
            else:
                continue
            A[r, c] -= tau
            partners.append((r, c))

    # right-hand side -F(x, y): limits taken from inside the domain at mu+,
    # from the matching side at the jump node, midpoint elsewhere
    side = np.zeros(n, dtype=int)
    side[0] = 1
    if jump >= 0:
        side[ujump] = -1
        side[ujump + 1] = 1
    cp, cm = p.weights(x)
    mp, mm = (float(v) for v in p.mu_pm(x))
    rhs = np.empty(n)
    for sd_ in (-1, 0, 1):
        rows = side == sd_
        if not rows.any():
            continue
        val = cp * tt.f0(y[rows] + mp, sd_)
        if cm != 0.0:
            val = val + cm * tt.f0(y[rows] + mm, sd_)
        rhs[rows] = -val
    return A, rhs, y, (ujump if jump >= 0 else -1), tuple(partners)


def _cond_estimate(A, lu):
    """1-norm condition estimate, rounded to 12 digits: the LAPACK estimator
    jitters in the last bits with memory alignment, which would break
    byte-identical output across runs."""
    anorm = np.linalg.norm(A, 1)
    rcond, info = lapack.dgecon(lu, anorm, norm="1")
    if info != 0 or rcond <= 0:
        return math.inf
    return float(f"{1.0 / rcond:.12g}")


def solve_main_equation_at_x(x, tt, p, cfg, y_max=None, t_tail=None):
    """K(x, .) on [mu+(x), y_hi(x)] from the transition table ``tt``."""
    if y_max is None:
        y_max = cfg.default_y_max(p, tt.bound_states)
    if t_tail is None:
        t_tail = tail_cut(tt, p, cfg)
    hi = _y_upper(tt, p, cfg, x, y_max, t_tail)
    A, rhs, y, jump, partners = _assemble(tt, p, cfg, x, hi)
    if not np.all(np.isfinite(A)) or not np.all(np.isfinite(rhs)):
        raise SingularSystem(f"SingularSystem: non-finite entries at x = {x:.6g}")
    try:
        lu = lu_factor(A, check_finite=False)
    except (ValueError, np.linalg.LinAlgError) as err:
        raise SingularSystem(f"SingularSystem at x = {x:.6g}: {err}") from err
    if np.any(np.diag(lu[0]) == 0):
        raise SingularSystem(f"SingularSystem: zero pivot at x = {x:.6g}")
    cond = _cond_estimate(A, lu[0])
    if cond > 1.0 / cfg.solve_tol:
        raise IllConditioned(x, cond)
    k = lu_solve(lu, rhs, check_finite=False)
    return KernelSlice(float(x), y, k, float(cond), jump, partners)


def tail_cut(tt, p, cfg):
    """Point past which |F0| stays below sqrt(solve_tol) * max|F0|."""
    mp0 = float(p.mu_pm(0.0)[0])
    return tt.tail_point(2 * mp0, math.sqrt(cfg.solve_tol))


def solve_kernel_family(tt, p, cfg, x_nodes=None, workers=None, y_max=None):
    """Independent solves at every x node, kept in x order."""
    xs = cfg.x_grid() if x_nodes is None else np.asarray(x_nodes, dtype=float)
    if y_max is None:
        y_max = cfg.default_y_max(p, tt.bound_states)
    t_tail = tail_cut(tt, p, cfg)
    workers = max(1, int(cfg.workers if workers is None else workers))

    def one(x):
        try:
            return solve_main_equation_at_x(float(x), tt, p, cfg, y_max=y_max, t_tail=t_tail)
        except DiscScatError as err:
            return err

    if workers == 1:
        res = [one(x) for x in xs]
    else:
        with ThreadPoolExecutor(workers) as ex:
            res = list(ex.map(one, xs))
    failed = [(float(x), r) for x, r in zip(xs, res) if isinstance(r, Exception)]
    if failed:
        if len(failed) == 1:
            raise failed[0][1]
        if all(isinstance(e, IllConditioned) for _, e in failed):
            raise max((e for _, e in failed), key=lambda e: e.cond)
        raise FamilyIncomplete(failed)
    return KernelTable(xs, tuple(res))


def _piecewise_gradient(x, f, a):
    """d f/dx on [0, a) and [a, x_max] separately; the diagonal is not
    continuous across x = a, so no stencil straddles it."""
    x = np.asarray(x, dtype=float)
    out = np.empty_like(f)
    tol = 1e-9 * max(1.0, a)
    left = x < a - tol
    right = ~left
    for sel in (left, right):
        if sel.sum() < 3:
            raise InsufficientNodes(f"InsufficientNodes: {int(sel.sum())} nodes on one side of a")
        out[sel] = np.gradient(f[sel], x[sel], edge_order=2)
    return out


def reconstruct_potential(kt, p, cfg=None):
    """q(x) = -4 s / (1 + 1/s) d/dx K(x, mu+(x)), s = sqrt(rho(x))."""
    x = kt.x_nodes
    if x.size < 3:
        raise InsufficientNodes("InsufficientNodes: need at least 3 x nodes")
    d = _piecewise_gradient(x, kt.diagonal, p.a)
    s = np.where(x < p.a - 1e-9 * p.a, p.alpha, 1.0)
    q = -4.0 * s / (1.0 + 1.0 / s) * d
    return PotentialSpec(x.copy(), q, float(x[-1]))


def jump_consistency(kt, q_rec, p, cfg=None):
    """sup over interior x < a of |J'(x) - c q(x)| / max|q|, c = (1 - 1/alpha) / (4 alpha)."""
    x = kt.x_nodes
    inner = np.flatnonzero(x < p.a - 1e-9 * p.a)
    if inner.size < 3:
        raise NoInteriorNodes("NoInteriorNodes: fewer than 3 x nodes in [0, a)")
    J = kt.jumps[inner]
    dJ = np.gradient(J, x[inner], edge_order=2)
    coef = (1.0 - 1.0 / p.alpha) / (4.0 * p.alpha)
    qv = q_rec.values[inner]
    resid = np.abs(dJ - coef * qv)[1:]
    scale = float(np.max(np.abs(q_rec.values)))
    floor_ = 1e-8 if cfg is None else cfg.solve_tol
    if scale <= floor_:
        return float(np.max(resid)) if resid.size else 0.0
    return float(np.max(resid) / scale) if resid.size else 0.0


def inverse_scattering(sd, p, c, cfg, workers=None):
    """Scattering data to (q_rec, kernel table, transition table)."""
    tt = f0s_transform(sd, p, c, cfg)
    kt = solve_kernel_family(tt, p, cfg, workers=workers)
    return reconstruct_potential(kt, p, cfg), kt, tt


def kernel_difference(kt_coarse, kt_fine):
    """sup |K_h - K_{h/2}| over the coarse (x, y) nodes shared by both tables."""
    fine = {round(s.x, 12): s for s in kt_fine.slices}
    worst = 0.0
    for s in kt_coarse.slices:
        f = fine.get(round(s.x, 12))
        if f is None:
            continue
        n = min(s.y[-1], f.y[-1])
        sel = s.y <= n + 1e-12
        ys, ks = s.y[sel], s.k[sel]
        # compare left/right limits separately at the jump
        if s.jump >= 0 and f.jump >= 0:
            dl = abs(ks[s.jump] - f.k[f.jump])
            dr = abs(ks[s.jump + 1] - f.k[f.jump + 1])
            worst = max(worst, dl, dr)
            keep = np.ones(ys.size, bool)
            keep[[s.jump, s.jump + 1]] = False
            ys, ks = ys[keep], ks[keep]
        fy, fk = f.y, f.k
        if f.jump >= 0:
            mm = fy[f.jump]
            left = ys < mm
            vl = np.interp(ys[left], fy[:f.jump + 1], fk[:f.jump + 1])
            vr = np.interp(ys[~left], fy[f.jump + 1:], fk[f.jump + 1:])
            v = np.concatenate([vl, vr])
        else:
            v = np.interp(ys, fy, fk)
        if ys.size:
            worst = max(worst, float(np.max(np.abs(ks - v))))
    return worst


@dataclass(frozen=True, eq=False)
class ReconstructionReport:
    q_rec: PotentialSpec
    jump_residual: float
    condition_numbers: np.ndarray
    refinement_delta: float
    sup_error: float
    l1_error: float
    extras: dict = field(default_factory=dict)

    def as_dict(self):
        return {
            "sup_error": self.sup_error,
            "l1_error": self.l1_error,
            "jump_residual": self.jump_residual,
            "max_condition": float(np.max(self.condition_numbers)),
            "worst_condition_x": float(self.q_rec.grid[int(np.argmax(self.condition_numbers))]),
            "refinement_delta": self.refinement_delta,
            **self.extras,
        }


def reconstruction_errors(q, q_rec):
    """Sup-norm and discrete L1 errors, relative when max|q| > 0, else absolute."""
    x = q_rec.grid
    diff = q_rec.values - q(x)
    ref = np.abs(q(x))
    sup_ref = float(ref.max())
    dx = np.diff(x)
    l1 = float(np.sum(0.5 * (np.abs(diff[1:]) + np.abs(diff[:-1])) * dx))
    l1_ref = float(np.sum(0.5 * (ref[1:] + ref[:-1]) * dx))
    if sup_ref == 0.0:
        return float(np.max(np.abs(diff))), l1
    return float(np.max(np.abs(diff)) / sup_ref), l1 / l1_ref


def _single_pass(p, c, q, cfg):
    fr = forward_run(p, q, c, cfg)
    q_rec, kt, tt = inverse_scattering(fr.data, p, c, cfg)
    return fr, q_rec, kt, tt


def roundtrip(p, c, q, cfg, refine=True):
    """Forward map, inverse map and the self-convergence comparison at h/2."""
    cfg = cfg.resolve(p, q)
    fr, q_rec, kt, tt = _single_pass(p, c, q, cfg)
    sup_e, l1_e = reconstruction_errors(q, q_rec)
    jr = jump_consistency(kt, q_rec, p, cfg) if not p.degenerate else _degenerate_jump(kt)
    extras = {"bound_states": [float(v) for v in fr.data.bound_states],
              "norming": [float(v) for v in fr.data.norming]}
    delta = math.nan
    conds = kt.condition_numbers
    if refine:
        cfg2 = cfg.refined()
        fr2, q2, kt2, _ = _single_pass(p, c, q, cfg2)
        sup2, l12 = reconstruction_errors(q, q2)
        delta = kernel_difference(kt, kt2)
        extras.update(refined_sup_error=sup2, refined_l1_error=l12,
                      refined_max_condition=float(np.max(kt2.condition_numbers)))
    return ReconstructionReport(q_rec, jr, conds, delta, sup_e, l1_e, extras)


def _degenerate_jump(kt):
    """With alpha = 1 there is no jump node; both sides of the relation vanish."""
    return 0.0
