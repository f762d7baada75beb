"""JSON and CSV input/output.

Floats are written with 17 significant digits so that a dump/load cycle is
exact and repeated runs produce byte-identical files.
"""
import csv
import json
import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import InvalidProblem
from .model import BoundaryCoefficients, DensityProfile, NumericsConfig, PotentialSpec, ScatteringData

NUMERICS_KEYS = ("x_max", "h_x", "lambda_max", "n_lambda", "y_max", "root_tol", "quad_tol",
                 "solve_tol", "mu_max", "taper_order", "workers")
DEFAULT_TOLERANCES = {"sup_error": 0.05, "l1_error": 0.03, "jump_residual": 0.05,
                      "max_condition": 1e6, "refinement_delta": 1e-4}


def _fmt_float(v):
    if not math.isfinite(v):
        return "null"
    s = format(v, ".17g")
    if all(ch not in s for ch in ".eEn"):
        s += ".0"
    return s


def _encode(obj, indent, level):
    pad = " " * (indent * (level + 1))
    end = " " * (indent * level)
    if isinstance(obj, (bool, np.bool_)):
        return "true" if obj else "false"
    if obj is None:
        return "null"
    if isinstance(obj, (int, np.integer)):
        return str(int(obj))
    if isinstance(obj, (float, np.floating)):
        return _fmt_float(float(obj))
    if isinstance(obj, str):
        return json.dumps(obj)
    if isinstance(obj, np.ndarray):
        obj = obj.tolist()
    if isinstance(obj, dict):
        if not obj:
            return "{}"
        items = [f"{pad}{json.dumps(str(k))}: {_encode(v, indent, level + 1)}" for k, v in obj.items()]
        return "{\n" + ",\n".join(items) + "\n" + end + "}"
    if isinstance(obj, (list, tuple)):
        if not obj:
            return "[]"
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool)
               for v in obj):
            return "[" + ", ".join(_encode(v, indent, level + 1) for v in obj) + "]"
        items = [pad + _encode(v, indent, level + 1) for v in obj]
        return "[\n" + ",\n".join(items) + "\n" + end + "]"
    raise TypeError(f"cannot serialise {type(obj).__name__}")


def dumps(obj, indent=2):
    return _encode(obj, indent, 0) + "\n"


def write_json(path, obj):
    with open(path, "w") as fh:
        fh.write(dumps(obj))


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except json.JSONDecodeError as err:
        raise InvalidProblem(f"InvalidProblem: {path} is not valid JSON ({err})") from err
    except OSError as err:
        raise InvalidProblem(f"InvalidProblem: cannot read {path} ({err.strerror})") from err


def _require(block, key, where):
    if not isinstance(block, dict) or key not in block:
        raise InvalidProblem(f"InvalidProblem: missing field '{key}' in {where}")
    return block[key]


def _number(v, name):
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise InvalidProblem(f"InvalidProblem: field '{name}' must be a number, got {v!r}")
    return float(v)


def density_from_json(block, degenerate_ok=False):
    alpha = _number(_require(block, "alpha", "density"), "alpha")
    a = _number(_require(block, "a", "density"), "a")
    return DensityProfile(alpha, a, degenerate_ok=degenerate_ok)


def density_to_json(p):
    return {"alpha": p.alpha, "a": p.a}


def boundary_from_json(block):
    if isinstance(block, list):
        return BoundaryCoefficients.from_sequence([_number(v, "boundary") for v in block])
    if isinstance(block, dict):
        names = ("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2")
        return BoundaryCoefficients(*(_number(_require(block, k, "boundary"), k) for k in names))
    raise InvalidProblem("InvalidProblem: field 'boundary' must be a list of 6 numbers or an object")


def boundary_to_json(c):
    return dict(zip(("alpha0", "alpha1", "alpha2", "beta0", "beta1", "beta2"), c.as_tuple()))


def smooth_bump(x, center, half_width, height=1.0):
    """height * exp(1 - 1/(1 - r^2)) for |r| < 1, r = (x - center)/half_width; max = height."""
    r = (np.asarray(x, dtype=float) - center) / half_width
    out = np.zeros_like(r)
    m = np.abs(r) < 1.0
    out[m] = height * np.exp(1.0 - 1.0 / (1.0 - r[m] ** 2))
    return out


def gaussian_bump(x, center, width, height, lo, hi):
    """height * exp(-((x - center)/width)^2) restricted to [lo, hi]."""
    x = np.asarray(x, dtype=float)
    v = height * np.exp(-(((x - center) / width) ** 2))
    return np.where((x >= lo) & (x <= hi), v, 0.0)


def potential_from_json(block, p):
    kind = _require(block, "kind", "potential")
    step = _number(block.get("step", p.a / 200.0), "step")
    if kind == "zero":
        return PotentialSpec.zero()
    if kind == "samples":
        grid = np.asarray(_require(block, "grid", "potential"), dtype=float)
        vals = np.asarray(_require(block, "values", "potential"), dtype=float)
        bound = _number(block.get("support_bound", float(grid[-1]) if grid.size else 0.0), "support_bound")
        return PotentialSpec(grid, vals, bound)
    if kind == "bump":
        c0 = _number(_require(block, "center", "potential"), "center")
        w = _number(_require(block, "half_width", "potential"), "half_width")
        hgt = _number(block.get("height", 1.0), "height")
        if w <= 0 or c0 - w < 0:
            raise InvalidProblem("InvalidProblem: bump must have half_width > 0 and lie in x >= 0")
        return PotentialSpec.from_function(lambda x: smooth_bump(x, c0, w, hgt), c0 + w, step)
    if kind == "gaussian":
        c0 = _number(_require(block, "center", "potential"), "center")
        w = _number(_require(block, "width", "potential"), "width")
        hgt = _number(block.get("height", 1.0), "height")
        lo, hi = (_number(v, "support") for v in _require(block, "support", "potential"))
        if not 0 <= lo < hi or w <= 0:
            raise InvalidProblem("InvalidProblem: gaussian needs width > 0 and 0 <= support[0] < support[1]")
        return PotentialSpec.from_function(lambda x: gaussian_bump(x, c0, w, hgt, lo, hi), hi, step)
    if kind == "random_bumps":
        rng = np.random.default_rng(int(_require(block, "seed", "potential")))
        n = int(block.get("count", 3))
        lo, hi = (_number(v, "support") for v in _require(block, "support", "potential"))
        amp = _number(block.get("amplitude", 1.0), "amplitude")
        w = min(0.25 * (hi - lo), 0.5)
        centers = rng.uniform(lo + w, hi - w, n)
        heights = rng.uniform(-amp, amp, n)

        def f(x):
            return sum(smooth_bump(x, c0, w, h0) for c0, h0 in zip(centers, heights))
        return PotentialSpec.from_function(f, hi, step)
    raise InvalidProblem(f"InvalidProblem: unknown potential kind {kind!r}")


def potential_to_json(q):
    return {"kind": "samples", "grid": q.grid, "values": q.values, "support_bound": q.support_bound}


def numerics_from_json(block, base=None):
    cfg = base if base is not None else NumericsConfig()
    if not block:
        return cfg
    if not isinstance(block, dict):
        raise InvalidProblem("InvalidProblem: field 'numerics' must be an object")
    unknown = set(block) - set(NUMERICS_KEYS)
    if unknown:
        raise InvalidProblem(f"InvalidProblem: unknown numerics field(s) {sorted(unknown)}")
    kw = {}
    for k, v in block.items():
        if v is None:
            continue
        kw[k] = int(v) if k in ("n_lambda", "taper_order", "workers") else _number(v, k)
    return replace(cfg, **kw)


@dataclass
class Problem:
    density: DensityProfile
    boundary: BoundaryCoefficients
    potential: PotentialSpec
    numerics: NumericsConfig
    tolerances: dict = field(default_factory=lambda: dict(DEFAULT_TOLERANCES))


def problem_from_json(obj, degenerate_ok=False):
    p = density_from_json(_require(obj, "density", "problem"), degenerate_ok)
    c = boundary_from_json(_require(obj, "boundary", "problem"))
    q = potential_from_json(_require(obj, "potential", "problem"), p)
    cfg = numerics_from_json(obj.get("numerics"))
    tol = dict(DEFAULT_TOLERANCES)
    tol.update({k: _number(v, k) for k, v in (obj.get("tolerances") or {}).items()})
    return Problem(p, c, q, cfg, tol)


def load_problem(path, degenerate_ok=False):
    return problem_from_json(read_json(path), degenerate_ok)


def scattering_to_json(sd, p=None, c=None):
    out = {"lambda_grid": sd.lambda_grid, "s_re": sd.s_values.real, "s_im": sd.s_values.imag,
           "bound_states": sd.bound_states, "norming": sd.norming}
    if p is not None:
        out["density"] = density_to_json(p)
    if c is not None:
        out["boundary"] = boundary_to_json(c)
    return out


def scattering_from_json(obj):
    lam = np.asarray(_require(obj, "lambda_grid", "scattering data"), dtype=float)
    s = (np.asarray(_require(obj, "s_re", "scattering data"), dtype=float)
         + 1j * np.asarray(_require(obj, "s_im", "scattering data"), dtype=float))
    return ScatteringData(lam, s, np.asarray(obj.get("bound_states", []), dtype=float),
                          np.asarray(obj.get("norming", []), dtype=float))


def write_csv(path, header, columns):
    with open(path, "w", newline="") as fh:
        wr = csv.writer(fh)
        wr.writerow(header)
        for row in zip(*columns):
            wr.writerow([_fmt_float(float(v)) for v in row])


def read_csv(path):
    with open(path, newline="") as fh:
        rd = csv.reader(fh)
        header = next(rd)
        rows = [[float(v) for v in r] for r in rd]
    return header, np.array(rows)
