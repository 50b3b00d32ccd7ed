"""Noiseless BBOB-style benchmark functions on [-5, 5]^D.

The 24 functions follow the standard BBOB definitions (Hansen et al.,
"Real-parameter black-box optimization benchmarking 2009: noiseless
functions definitions"). Instances are generated from a deterministic seed
derived from ``(fid, dim, instance_id)``; they are not bit-compatible with
COCO, but every instance keeps the optimum location/value and the landscape
character (separability, conditioning, modality) of its function.
"""

from __future__ import annotations

import enum
from dataclasses import dataclass, field

import numpy as np

LOWER, UPPER = -5.0, 5.0
_SCHWEFEL_OPT = 4.2096874633
# value of z * sin(sqrt(|z|)) at the Schwefel optimum, per coordinate / 100
_SCHWEFEL_CONST = 100 * _SCHWEFEL_OPT * np.sin(np.sqrt(100 * _SCHWEFEL_OPT)) / 100


class Group(enum.Enum):
    Separable = "separable"
    LowModerateConditioning = "low-moderate-conditioning"
    HighConditioningUnimodal = "high-conditioning-unimodal"
    MultimodalGlobalStructure = "multimodal-global-structure"
    MultimodalWeakStructure = "multimodal-weak-structure"


FUNCTION_NAMES = {
    1: "sphere",
    2: "ellipsoid",
    3: "rastrigin",
    4: "buche-rastrigin",
    5: "linear-slope",
    6: "attractive-sector",
    7: "step-ellipsoid",
    8: "rosenbrock",
    9: "rosenbrock-rotated",
    10: "ellipsoid-rotated",
    11: "discus",
    12: "bent-cigar",
    13: "sharp-ridge",
    14: "different-powers",
    15: "rastrigin-rotated",
    16: "weierstrass",
    17: "schaffers-f7",
    18: "schaffers-f7-ill-conditioned",
    19: "griewank-rosenbrock",
    20: "schwefel",
    21: "gallagher-101",
    22: "gallagher-21",
    23: "katsuura",
    24: "lunacek-bi-rastrigin",
}


def group_of(fid: int) -> Group:
    """Return the BBOB function group of ``fid``."""
    if not 1 <= fid <= 24:
        raise ValueError(f"fid must be in 1..24, got {fid}")
    if fid <= 5:
        return Group.Separable
    if fid <= 9:
        return Group.LowModerateConditioning
    if fid <= 14:
        return Group.HighConditioningUnimodal
    if fid <= 19:
        return Group.MultimodalGlobalStructure
    return Group.MultimodalWeakStructure


@dataclass(frozen=True, eq=False)
class Problem:
    """One function instance. Immutable; ``evaluate`` is pure."""

    fid: int
    dim: int
    instance_id: int
    x_opt: np.ndarray
    f_opt: float
    group: Group
    R: np.ndarray
    Q: np.ndarray
    params: dict = field(default_factory=dict, repr=False)

    @property
    def bounds(self) -> tuple[np.ndarray, np.ndarray]:
        return np.full(self.dim, LOWER), np.full(self.dim, UPPER)

    @property
    def name(self) -> str:
        return FUNCTION_NAMES[self.fid]

    def __call__(self, x) -> float:
        return evaluate(self, x)


# --------------------------------------------------------------------------
# transformations (all act row-wise on (n, d) arrays)


def _exponents(d: int) -> np.ndarray:
    """(i - 1) / (D - 1) for i = 1..D."""
    if d == 1:
        return np.zeros(1)
    return np.arange(d) / (d - 1)


def _lambda(alpha: float, d: int) -> np.ndarray:
    """Diagonal of the conditioning matrix Lambda^alpha."""
    return alpha ** (0.5 * _exponents(d))


def t_osz(x: np.ndarray) -> np.ndarray:
    x = np.asarray(x, dtype=float)
    xhat = np.log(np.abs(x), where=x != 0, out=np.zeros_like(x))
    c1 = np.where(x > 0, 10.0, 5.5)
    c2 = np.where(x > 0, 7.9, 3.1)
    return np.sign(x) * np.exp(xhat + 0.049 * (np.sin(c1 * xhat) + np.sin(c2 * xhat)))


def t_asy(x: np.ndarray, beta: float) -> np.ndarray:
    d = x.shape[-1]
    pos = x > 0
    xp = np.where(pos, x, 0.0)
    expo = 1.0 + beta * _exponents(d) * np.sqrt(xp)
    return np.where(pos, xp**expo, x)


def f_pen(x: np.ndarray) -> np.ndarray:
    return np.sum(np.maximum(0.0, np.abs(x) - 5.0) ** 2, axis=-1)


def _rot(X: np.ndarray, M: np.ndarray) -> np.ndarray:
    """Apply M to each row of X."""
    return X @ M.T


def _rastrigin(z: np.ndarray) -> np.ndarray:
    d = z.shape[-1]
    return 10.0 * (d - np.sum(np.cos(2 * np.pi * z), axis=-1)) + np.sum(z * z, axis=-1)


def _schaffer(z: np.ndarray) -> np.ndarray:
    d = z.shape[-1]
    s = np.sqrt(z[:, :-1] ** 2 + z[:, 1:] ** 2)
    t = np.sqrt(s) + np.sqrt(s) * np.sin(50.0 * s**0.2) ** 2
    return (np.sum(t, axis=-1) / (d - 1)) ** 2


def _gallagher(p: Problem, X: np.ndarray) -> np.ndarray:
    d = p.dim
    peaks = p.params["peaks"]  # (m, d)
    weights = p.params["weights"]  # (m,)
    cdiag = p.params["cdiag"]  # (m, d)
    diff = _rot(X[:, None, :] - peaks[None, :, :], p.R)  # (n, m, d) in rotated frame
    quad = np.sum(cdiag[None] * diff * diff, axis=-1)
    g = np.max(weights[None] * np.exp(-quad / (2.0 * d)), axis=-1)
    return t_osz(10.0 - g) ** 2 + f_pen(X)


def _raw(p: Problem, X: np.ndarray) -> np.ndarray:
    """Function value minus f_opt for rows of X."""
    fid, d = p.fid, p.dim
    e = _exponents(d)
    if fid == 1:
        z = X - p.x_opt
        return np.sum(z * z, axis=-1)
    if fid == 2:
        z = t_osz(X - p.x_opt)
        return np.sum(10 ** (6 * e) * z * z, axis=-1)
    if fid == 3:
        z = _lambda(10, d) * t_asy(t_osz(X - p.x_opt), 0.2)
        return _rastrigin(z)
    if fid == 4:
        z = t_osz(X - p.x_opt)
        odd = (np.arange(d) % 2) == 0  # odd in 1-based indexing
        s = np.where((z > 0) & odd, 10 * 10 ** (0.5 * e), 10 ** (0.5 * e))
        return _rastrigin(s * z) + 100.0 * f_pen(X)
    if fid == 5:
        s = np.sign(p.x_opt) * 10**e
        z = np.where(X * p.x_opt < 25.0, X, p.x_opt)
        return np.sum(5.0 * np.abs(s) - s * z, axis=-1)
    if fid == 6:
        z = _rot(_lambda(10, d) * _rot(X - p.x_opt, p.R), p.Q)
        s = np.where(z * p.x_opt > 0, 100.0, 1.0)
        return t_osz(np.sum((s * z) ** 2, axis=-1)) ** 0.9
    if fid == 7:
        zhat = _lambda(10, d) * _rot(X - p.x_opt, p.R)
        ztil = np.where(np.abs(zhat) > 0.5, np.floor(0.5 + zhat), np.floor(0.5 + 10 * zhat) / 10)
        z = _rot(ztil, p.Q)
        val = np.maximum(np.abs(zhat[:, 0]) / 1e4, np.sum(10 ** (2 * e) * z * z, axis=-1))
        return 0.1 * val + f_pen(X)
    if fid in (8, 9, 19):
        c = max(1.0, np.sqrt(d) / 8.0)
        if fid == 8:
            z = c * (X - p.x_opt) + 1.0
        else:
            z = c * _rot(X, p.R) + 0.5
        s = 100.0 * (z[:, :-1] ** 2 - z[:, 1:]) ** 2 + (z[:, :-1] - 1.0) ** 2
        if fid == 19:
            return 10.0 / (d - 1) * np.sum(s / 4000.0 - np.cos(s), axis=-1) + 10.0
        return np.sum(s, axis=-1)
    if fid == 10:
        z = t_osz(_rot(X - p.x_opt, p.R))
        return np.sum(10 ** (6 * e) * z * z, axis=-1)
    if fid == 11:
        z = t_osz(_rot(X - p.x_opt, p.R))
        return 1e6 * z[:, 0] ** 2 + np.sum(z[:, 1:] ** 2, axis=-1)
    if fid == 12:
        z = _rot(t_asy(_rot(X - p.x_opt, p.R), 0.5), p.R)
        return z[:, 0] ** 2 + 1e6 * np.sum(z[:, 1:] ** 2, axis=-1)
    if fid == 13:
        z = _rot(_lambda(10, d) * _rot(X - p.x_opt, p.R), p.Q)
        return z[:, 0] ** 2 + 100.0 * np.sqrt(np.sum(z[:, 1:] ** 2, axis=-1))
    if fid == 14:
        z = _rot(X - p.x_opt, p.R)
        return np.sqrt(np.sum(np.abs(z) ** (2 + 4 * e), axis=-1))
    if fid == 15:
        z = t_asy(t_osz(_rot(X - p.x_opt, p.R)), 0.2)
        z = _rot(_lambda(10, d) * _rot(z, p.Q), p.R)
        return _rastrigin(z)
    if fid == 16:
        z = t_osz(_rot(X - p.x_opt, p.R))
        z = _rot(_lambda(0.01, d) * _rot(z, p.Q), p.R)
        k = np.arange(12)
        a, b = 0.5**k, 3.0**k
        f0 = np.sum(a * np.cos(np.pi * b))
        terms = np.sum(a * np.cos(2 * np.pi * b * (z[..., None] + 0.5)), axis=-1)
        return 10.0 * (np.sum(terms, axis=-1) / d - f0) ** 3 + 10.0 / d * f_pen(X)
    if fid in (17, 18):
        alpha = 10.0 if fid == 17 else 1000.0
        z = _lambda(alpha, d) * _rot(t_asy(_rot(X - p.x_opt, p.R), 0.5), p.Q)
        return _schaffer(z) + 10.0 * f_pen(X)
    if fid == 20:
        sgn = np.sign(p.x_opt)
        xhat = 2.0 * sgn * X
        two_opt = 2.0 * np.abs(p.x_opt)
        zhat = xhat.copy()
        zhat[:, 1:] += 0.25 * (xhat[:, :-1] - two_opt[:-1])
        z = 100.0 * (_lambda(10, d) * (zhat - two_opt) + two_opt)
        val = -np.sum(z * np.sin(np.sqrt(np.abs(z))), axis=-1) / (100.0 * d)
        return val + _SCHWEFEL_CONST + 100.0 * f_pen(z / 100.0)
    if fid in (21, 22):
        return _gallagher(p, X)
    if fid == 23:
        z = _rot(_lambda(100, d) * _rot(X - p.x_opt, p.R), p.Q)
        pw = 2.0 ** np.arange(1, 33)
        zz = pw * z[..., None]
        inner = np.sum(np.abs(zz - np.round(zz)) / pw, axis=-1)
        prod = np.prod((1.0 + np.arange(1, d + 1) * inner) ** (10.0 / d**1.2), axis=-1)
        return 10.0 / d**2 * prod - 10.0 / d**2 + f_pen(X)
    if fid == 24:
        mu0 = 2.5
        s = 1.0 - 1.0 / (2.0 * np.sqrt(d + 20.0) - 8.2)
        mu1 = -np.sqrt((mu0**2 - 1.0) / s)
        xhat = 2.0 * np.sign(p.x_opt) * X
        z = _rot(_lambda(100, d) * _rot(xhat - mu0, p.R), p.Q)
        a = np.sum((xhat - mu0) ** 2, axis=-1)
        b = d + s * np.sum((xhat - mu1) ** 2, axis=-1)
        return np.minimum(a, b) + 10.0 * (d - np.sum(np.cos(2 * np.pi * z), axis=-1)) + 1e4 * f_pen(X)
    raise ValueError(f"unknown fid {fid}")


# --------------------------------------------------------------------------
# instance generation


def _orthogonal(rng: np.random.Generator, d: int) -> np.ndarray:
    q, r = np.linalg.qr(rng.standard_normal((d, d)))
    return q * np.sign(np.diag(r))


def _gallagher_params(rng: np.random.Generator, fid: int, d: int, x_opt: np.ndarray) -> dict:
    m = 101 if fid == 21 else 21
    span = 5.0 if fid == 21 else 4.9
    weights = np.empty(m)
    weights[0] = 10.0
    weights[1:] = 1.1 + 8.0 * np.arange(m - 1) / (m - 2)
    alphas = np.empty(m)
    alphas[0] = 1000.0 if fid == 21 else 1000.0**2
    alphas[1:] = rng.permutation(1000.0 ** (2.0 * np.arange(m - 1) / (m - 2)))
    cdiag = np.empty((m, d))
    for i, a in enumerate(alphas):
        cdiag[i] = rng.permutation(_lambda(a, d)) / a**0.25
    peaks = rng.uniform(-span, span, size=(m, d))
    peaks[0] = x_opt
    return {"weights": weights, "cdiag": cdiag, "peaks": peaks}


def make_problem(fid: int, dim: int, instance_id: int) -> Problem:
    """Build instance ``instance_id`` of function ``fid`` in dimension ``dim``."""
    if not 1 <= int(fid) <= 24:
        raise ValueError(f"fid must be in 1..24, got {fid}")
    if int(dim) < 2:
        raise ValueError(f"dim must be >= 2, got {dim}")
    if int(instance_id) < 0:
        raise ValueError(f"instance_id must be >= 0, got {instance_id}")
    fid, dim, instance_id = int(fid), int(dim), int(instance_id)
    rng = np.random.default_rng(np.random.SeedSequence([0x4242, fid, dim, instance_id]))

    x_opt = rng.uniform(-4.0, 4.0, size=dim)
    f_opt = float(rng.uniform(-100.0, 100.0))
    group = group_of(fid)
    if group is Group.Separable:
        R = Q = np.eye(dim)
    else:
        R, Q = _orthogonal(rng, dim), _orthogonal(rng, dim)

    sign = np.where(x_opt >= 0, 1.0, -1.0)
    params: dict = {}
    if fid == 5:
        x_opt = UPPER * sign
    elif fid == 8:
        x_opt = 0.75 * x_opt
    elif fid in (9, 19):
        x_opt = R.T @ np.full(dim, 0.5 / max(1.0, np.sqrt(dim) / 8.0))
    elif fid == 20:
        x_opt = 0.5 * _SCHWEFEL_OPT * sign
    elif fid == 22:
        x_opt = 0.98 * x_opt
    elif fid == 24:
        x_opt = 1.25 * sign
    if fid in (21, 22):
        params = _gallagher_params(rng, fid, dim, x_opt)

    for arr in (x_opt, R, Q, *params.values()):
        arr.setflags(write=False)
    return Problem(fid, dim, instance_id, x_opt, f_opt, group, R, Q, params)


def clamp(problem: Problem, x) -> np.ndarray:
    return np.clip(np.asarray(x, dtype=float), LOWER, UPPER)


def evaluate_batch(problem: Problem, X) -> np.ndarray:
    """Evaluate each row of ``X`` (clamped to the box)."""
    X = np.atleast_2d(np.asarray(X, dtype=float))
    if X.shape[1] != problem.dim:
        raise ValueError(f"expected points of length {problem.dim}, got {X.shape[1]}")
    return _raw(problem, np.clip(X, LOWER, UPPER)) + problem.f_opt


def evaluate(problem: Problem, x) -> float:
    x = np.asarray(x, dtype=float)
    if x.ndim != 1 or x.shape[0] != problem.dim:
        raise ValueError(f"expected a vector of length {problem.dim}, got shape {x.shape}")
    return float(evaluate_batch(problem, x[None])[0])


def target_gap(problem: Problem, y: float) -> float:
    return float(y) - problem.f_opt
