"""Parametrized control-device families p -> G_p = B(p) R^{-1} B(p).T.

The concrete family is a set of Gaussian actuator profiles on the Galerkin
grid: actuator j centred at p_j contributes b(p_j) b(p_j).T / r with
b_i(c) = exp(-(x_i - c)^2 / (2 sigma^2)).  Profiles are analytic, so first
and second derivatives in p are available in closed form, and
tr G_p = sum_j ||b(p_j)||^2 / r.

Constant and callable families are provided as test doubles (a constant map
violates the nonzero-derivative assumption and must trip DegenerateFamily).

Matrix norms come in two trace-class readings wherever the operand may be
indefinite: "nuc" (Schatten-1, a true norm) and "abs" (|trace|, which
coincides with it on the PSD cone and degenerates off it).  Constants are
recorded under both, plus the plain operator norm, so every bound can be
checked under either reading.
"""

from dataclasses import dataclass
from typing import Callable, Optional

import numpy as np

from .errors import DegenerateFamily, DimensionMismatch
from .linalg import check_symmetric, ensure_operator, operator_norm, symmetrize


def _matrix_norm(T, reading):
    if reading == "op":
        return operator_norm(T)
    if reading == "nuc":
        return float(np.linalg.svd(T, compute_uv=False).sum()) if T.size else 0.0
    if reading == "abs":
        return abs(float(np.trace(T)))
    raise ValueError(f"unknown norm reading {reading!r}")


class Family:
    """Shared plumbing for parametrized device families."""

    param_dim: int
    state_dim: int

    def _check_param(self, p, name="p"):
        p = np.atleast_1d(np.asarray(p, dtype=float))
        if p.shape != (self.param_dim,):
            raise DimensionMismatch(
                f"{name} has shape {p.shape}, expected ({self.param_dim},)")
        if not np.isfinite(p).all():
            raise DimensionMismatch(f"{name} has non-finite entries")
        return p

    def G(self, p):
        raise NotImplementedError

    def dG(self, p, q):
        raise NotImplementedError

    def d2G(self, p, q, r):
        raise NotImplementedError

    def trace_G(self, p):
        return float(np.trace(self.G(p)))

    def dG_adjoint(self, p, T):
        """Vector v with v . q = tr(T dG_p(q)) for every direction q.

        Realizes the adjoint of dG_p under the trace duality pairing;
        computed coordinate-by-coordinate.  T must be symmetric.
        """
        T = ensure_operator(T, "T")
        if T.shape[0] != self.state_dim:
            raise DimensionMismatch(
                f"T has shape {T.shape}, expected ({self.state_dim}, {self.state_dim})")
        check_symmetric(T, "T")
        p = self._check_param(p)
        out = np.zeros(self.param_dim)
        for k in range(self.param_dim):
            e = np.zeros(self.param_dim)
            e[k] = 1.0
            out[k] = float(np.tensordot(T, self.dG(p, e)))
        return out

    def gram(self, p):
        """The param_dim x param_dim matrix of dG*dG under the trace pairing."""
        p = self._check_param(p)
        directions = np.eye(self.param_dim)
        mats = [self.dG(p, e) for e in directions]
        S = np.empty((self.param_dim, self.param_dim))
        for j in range(self.param_dim):
            for k in range(j, self.param_dim):
                S[j, k] = S[k, j] = float(np.tensordot(mats[j], mats[k]))
        return S


@dataclass(frozen=True, eq=False)
class GaussianActuators(Family):
    """param_dim Gaussian actuator profiles with common width and weighting.

    kind is 'gaussian_actuator' when param_dim == 1, 'multi_gaussian'
    otherwise.
    """

    grid: np.ndarray
    sigma: float
    r_weight: float = 1.0
    param_dim: int = 1

    def __post_init__(self):
        grid = np.asarray(self.grid, dtype=float)
        if grid.ndim != 1 or grid.size == 0 or np.any(np.diff(grid) <= 0):
            raise ValueError("grid must be a strictly increasing 1-D array")
        if self.sigma <= 0 or self.r_weight <= 0 or self.param_dim < 1:
            raise ValueError("sigma, r_weight must be positive; param_dim >= 1")
        object.__setattr__(self, "grid", grid)

    @property
    def state_dim(self):
        return self.grid.size

    @property
    def kind(self):
        return "gaussian_actuator" if self.param_dim == 1 else "multi_gaussian"

    def domain(self):
        """Default placement box: the grid's convex hull, per actuator."""
        return np.tile([self.grid[0], self.grid[-1]], (self.param_dim, 1))

    def _profile(self, c):
        z = (self.grid - c) / self.sigma
        return np.exp(-0.5 * z**2)

    def _profile_d1(self, c):
        # d b_i / dc = b_i (x_i - c) / sigma^2
        return self._profile(c) * (self.grid - c) / self.sigma**2

    def _profile_d2(self, c):
        u = (self.grid - c) / self.sigma**2
        return self._profile(c) * (u**2 - 1.0 / self.sigma**2)

    def G(self, p):
        p = self._check_param(p)
        n = self.state_dim
        out = np.zeros((n, n))
        for c in p:
            b = self._profile(c)
            out += np.outer(b, b)
        return out / self.r_weight

    def dG(self, p, q):
        p = self._check_param(p)
        q = self._check_param(q, "q")
        n = self.state_dim
        out = np.zeros((n, n))
        for c, qj in zip(p, q):
            if qj == 0.0:
                continue
            b = self._profile(c)
            db = self._profile_d1(c)
            out += qj * (np.outer(db, b) + np.outer(b, db))
        return out / self.r_weight

    def d2G(self, p, q, r):
        p = self._check_param(p)
        q = self._check_param(q, "q")
        r = self._check_param(r, "r")
        n = self.state_dim
        out = np.zeros((n, n))
        for c, qj, rj in zip(p, q, r):
            w = qj * rj
            if w == 0.0:
                continue
            b = self._profile(c)
            db = self._profile_d1(c)
            d2b = self._profile_d2(c)
            out += w * (np.outer(d2b, b) + np.outer(b, d2b) + 2.0 * np.outer(db, db))
        return out / self.r_weight

    def trace_G(self, p):
        p = self._check_param(p)
        return float(sum(np.dot(b, b) for b in map(self._profile, p))) / self.r_weight

    def dG_adjoint(self, p, T):
        T = ensure_operator(T, "T")
        if T.shape[0] != self.state_dim:
            raise DimensionMismatch(
                f"T has shape {T.shape}, expected ({self.state_dim}, {self.state_dim})")
        check_symmetric(T, "T")
        p = self._check_param(p)
        # tr(T (db b^T + b db^T)) = 2 b^T T db for symmetric T
        return np.array([
            2.0 * float(self._profile(c) @ T @ self._profile_d1(c))
            for c in p
        ]) / self.r_weight


@dataclass(frozen=True, eq=False)
class ConstantFamily(Family):
    """G_p == G0 for every p: a degenerate test double (dG vanishes)."""

    matrix: np.ndarray
    param_dim: int = 1
    kind = "constant"

    def __post_init__(self):
        object.__setattr__(self, "matrix", ensure_operator(self.matrix, "matrix"))

    @property
    def state_dim(self):
        return self.matrix.shape[0]

    def G(self, p):
        self._check_param(p)
        return self.matrix.copy()

    def dG(self, p, q):
        self._check_param(p)
        self._check_param(q, "q")
        return np.zeros_like(self.matrix)

    def d2G(self, p, q, r):
        self._check_param(p)
        return np.zeros_like(self.matrix)


@dataclass(frozen=True, eq=False)
class CallableFamily(Family):
    """Family defined by user callables; derivative hooks default to zero maps."""

    param_dim: int
    state_dim: int
    g_fn: Callable
    dg_fn: Optional[Callable] = None
    d2g_fn: Optional[Callable] = None
    kind = "custom"

    def G(self, p):
        return symmetrize(ensure_operator(self.g_fn(self._check_param(p)), "G(p)"))

    def dG(self, p, q):
        p = self._check_param(p)
        q = self._check_param(q, "q")
        if self.dg_fn is None:
            return np.zeros((self.state_dim, self.state_dim))
        return self.dg_fn(p, q)

    def d2G(self, p, q, r):
        p = self._check_param(p)
        q = self._check_param(q, "q")
        r = self._check_param(r, "r")
        if self.d2g_fn is None:
            return np.zeros((self.state_dim, self.state_dim))
        return self.d2g_fn(p, q, r)


@dataclass
class ConstantLedger:
    """Every constant entering the contraction bounds, plus their provenance.

    The primary fields g, L_G, L_dG, C_dG use the Schatten-1 ("nuc") reading
    of the trace-class norm; the |trace| ("abs") and operator-norm readings
    are recorded alongside since the two trace-class readings split on
    indefinite operands (differences, derivatives).  Fields below ``mu``
    are only populated when a model (A, Q, W) is supplied to
    estimate_constants.
    """

    g: float
    L_G: float
    L_dG: float
    C_dG: float
    K: float
    g_abs: float = 0.0
    g_op: float = 0.0
    L_G_abs: float = 0.0
    L_G_op: float = 0.0
    L_dG_abs: float = 0.0
    C_dG_abs: float = 0.0
    C_dG_op: float = 0.0
    mu: Optional[float] = None
    M: Optional[float] = None
    alpha: Optional[float] = None
    trQ: Optional[float] = None
    normW: Optional[float] = None
    beta: Optional[float] = None
    gamma: Optional[float] = None
    sup_xlx: Optional[float] = None

    def require_model(self):
        missing = [name for name in ("mu", "M", "alpha", "trQ", "normW", "beta")
                   if getattr(self, name) is None]
        if missing:
            raise ValueError(f"ledger lacks model-coupled fields: {missing}")


def sample_box(domain, count, rng):
    """count points uniformly in the box ``domain`` (shape (d, 2) rows lo, hi)."""
    domain = np.atleast_2d(np.asarray(domain, dtype=float))
    if domain.shape[1] != 2 or np.any(domain[:, 0] > domain[:, 1]):
        raise ValueError("domain must be (d, 2) with lo <= hi rows")
    lo, hi = domain[:, 0], domain[:, 1]
    return lo + (hi - lo) * rng.random((count, domain.shape[0]))


def _unit_directions(dim, rng, extra=8):
    dirs = [np.eye(dim)[k] for k in range(dim)]
    for _ in range(extra):
        v = rng.standard_normal(dim)
        dirs.append(v / np.linalg.norm(v))
    return dirs


def _direction_sup(matmap, directions, reading):
    return max(_matrix_norm(matmap(q), reading) for q in directions)


LIPSCHITZ_INFLATION = 1.1
GRAM_SINGULAR_RTOL = 1e-12


def estimate_constants(family, domain, samples, seed,
                       A=None, Q=None, W=None, beta=None, gamma=None):
    """Estimate the constant ledger by seeded sampling over the domain box.

    g is the sampled sup of ||G_p||; L_G and L_dG are maximal difference
    quotients over sampled pairs, inflated by 10%; C_dG the sampled sup of
    the derivative's direction norm; K the sampled sup of ||(dG*dG)^{-1}||
    where that Gram matrix is invertible.  Supplying A, Q, W additionally
    fills mu = min ||X(p) L(p) X(p)|| and sup_xlx = max of the same (one
    Riccati + dual solve per sample), plus the certificate constants.

    Deterministic for a fixed seed.  Raises DegenerateFamily when the
    derivative vanishes on all samples or the Gram matrix is singular
    everywhere (nonzero / invertibility assumptions violated).
    """
    if samples < 2:
        raise ValueError("need samples >= 2")
    rng = np.random.default_rng(seed)
    points = sample_box(domain, samples, rng)
    pairs = (sample_box(domain, samples, rng), sample_box(domain, samples, rng))
    directions = _unit_directions(family.param_dim, rng)

    g = {r: 0.0 for r in ("nuc", "abs", "op")}
    c_dg = {r: 0.0 for r in ("nuc", "abs", "op")}
    K = 0.0
    any_invertible = False
    for p in points:
        Gp = family.G(p)
        for r in g:
            g[r] = max(g[r], _matrix_norm(Gp, r))
        for r in c_dg:
            c_dg[r] = max(c_dg[r], _direction_sup(lambda q: family.dG(p, q), directions, r))
        S = family.gram(p)
        sv = np.linalg.svd(S, compute_uv=False)
        if sv.size and sv[-1] > GRAM_SINGULAR_RTOL * max(sv[0], 1.0):
            any_invertible = True
            K = max(K, 1.0 / float(sv[-1]))
    if c_dg["nuc"] == 0.0:
        raise DegenerateFamily("dG_p vanishes at every sample point")
    if not any_invertible:
        raise DegenerateFamily("dG*dG is singular at every sample point")

    l_g = {r: 0.0 for r in ("nuc", "abs", "op")}
    l_dg = {r: 0.0 for r in ("nuc", "abs")}
    for p1, p2 in zip(*pairs):
        dist = float(np.linalg.norm(p1 - p2))
        if dist < 1e-12:
            continue
        dG_mat = family.G(p1) - family.G(p2)
        for r in l_g:
            l_g[r] = max(l_g[r], _matrix_norm(dG_mat, r) / dist)
        for r in l_dg:
            quot = _direction_sup(
                lambda q: family.dG(p1, q) - family.dG(p2, q), directions, r) / dist
            l_dg[r] = max(l_dg[r], quot)
    if l_g["nuc"] == 0.0:
        raise DegenerateFamily("G_p is constant over the sampled pairs")

    ledger = ConstantLedger(
        g=g["nuc"],
        L_G=LIPSCHITZ_INFLATION * l_g["nuc"],
        L_dG=LIPSCHITZ_INFLATION * l_dg["nuc"],
        C_dG=c_dg["nuc"],
        K=K,
        g_abs=g["abs"],
        g_op=g["op"],
        L_G_abs=LIPSCHITZ_INFLATION * l_g["abs"],
        L_G_op=LIPSCHITZ_INFLATION * l_g["op"],
        L_dG_abs=LIPSCHITZ_INFLATION * l_dg["abs"],
        C_dG_abs=c_dg["abs"],
        C_dG_op=c_dg["op"],
        beta=beta,
        gamma=gamma,
    )

    if A is not None:
        from .riccati import solve_are
        from .dual import solve_dual
        from .semigroup import certify_stability

        if Q is None or W is None:
            raise ValueError("A, Q, W must be supplied together")
        cert = certify_stability(A)
        xlx_norms = []
        for p in points:
            Gp = family.G(p)
            X = solve_are(A, Gp, Q, cert=cert).X
            Lam = solve_dual(A, Gp, X, W).Lambda
            xlx_norms.append(operator_norm(X @ Lam @ X))
        ledger.mu = float(min(xlx_norms))
        ledger.sup_xlx = float(max(xlx_norms))
        ledger.M = cert.M
        ledger.alpha = cert.alpha
        ledger.trQ = float(np.trace(Q))
        ledger.normW = operator_norm(W)
    return ledger
