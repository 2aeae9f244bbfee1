"""The two penalized trace-minimization problems over device parameters.

Problem 1 (norm penalty):     minimize tr(X(p) W) + beta/2 ||p||^2
Problem 2 (trace constraint): minimize tr(X(p) W) + beta/2 (tr G_p - gamma)^2

both constrained by A X + X A.T - X G_p X + Q = 0.  First-order optimality
couples the Riccati solution X(p), the multiplier Lambda(p), and a
fixed-point equation in p; this module provides the solvers, the explicit
contraction-constant ledgers that certify uniqueness, cone-restricted
second-order checks, and the beta-continuation sweep that drives
tr G_p -> gamma.
"""

import math
from dataclasses import dataclass, field, replace
from typing import List, Optional, Tuple

import numpy as np

from .devices import _matrix_norm, sample_box
from .dual import solve_dual
from .errors import DegenerateFamily, MaxIterExceeded, RiccatiPlaceError
from .linalg import check_psd, ensure_operator, operator_norm, symmetrize
from .riccati import solve_are
from .semigroup import certify_stability

INNER_ARE_TOL = 1e-12
GRAM_SINGULAR_RTOL = 1e-12


# ---------------------------------------------------------------------------
# configs and result records
# ---------------------------------------------------------------------------

@dataclass
class Problem1Config:
    A: np.ndarray
    Q: np.ndarray
    W: np.ndarray
    family: object
    beta: float
    tol: float = 1e-9
    max_iter: int = 500

    def __post_init__(self):
        self.A = ensure_operator(self.A, "A")
        self.Q = ensure_operator(self.Q, "Q")
        self.W = ensure_operator(self.W, "W")
        if self.beta <= 0:
            raise ValueError("beta must be positive")
        n = self.A.shape[0]
        if self.Q.shape[0] != n or self.W.shape[0] != n or self.family.state_dim != n:
            raise ValueError("A, Q, W, family dimensions are inconsistent")
        check_psd(self.Q, "Q")
        check_psd(self.W, "W")
        self.cert = certify_stability(self.A)


@dataclass
class Problem2Config(Problem1Config):
    gamma: float = 1.0

    def __post_init__(self):
        super().__post_init__()
        if self.gamma <= 0:
            raise ValueError("gamma must be positive")


@dataclass
class OptimalityTriple:
    X: np.ndarray
    Lambda: np.ndarray
    p: np.ndarray
    residual_primal: float
    residual_dual: float
    residual_stationarity: float
    iterations: int
    converged: bool
    history: Optional[List[np.ndarray]] = None
    # problem-2 extras
    trace_gap: Optional[float] = None
    trace_constraint_residual: Optional[float] = None
    fixed_point_residual: Optional[float] = None
    mode: str = "fixed_point"


@dataclass(frozen=True)
class ContractionReport:
    k: float
    is_contraction: bool
    term_breakdown: List[Tuple[str, float]]
    beta_threshold: float


def solve_state_pair(cfg, p):
    """Primal and dual solves at parameter p: (G_p, RiccatiSolution, DualSolution)."""
    G = cfg.family.G(p)
    sol = solve_are(cfg.A, G, cfg.Q, tol=INNER_ARE_TOL, cert=cfg.cert)
    dsol = solve_dual(cfg.A, G, sol.X, cfg.W)
    return G, sol, dsol


def _xlx(sol, dsol):
    return symmetrize(sol.X @ dsol.Lambda @ sol.X)


# ---------------------------------------------------------------------------
# problem 1
# ---------------------------------------------------------------------------

def cost_p1(cfg, p):
    """tr(X(p) W) + beta/2 ||p||^2 (one Riccati solve)."""
    G = cfg.family.G(p)
    sol = solve_are(cfg.A, G, cfg.Q, tol=INNER_ARE_TOL, cert=cfg.cert)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return float(np.tensordot(sol.X, cfg.W)) + 0.5 * cfg.beta * float(p @ p)


def gradient_p1(cfg, p):
    """Adjoint gradient beta p - dG_p*(X Lambda X) of the reduced problem-1 cost."""
    _, sol, dsol = solve_state_pair(cfg, p)
    p = np.atleast_1d(np.asarray(p, dtype=float))
    return cfg.beta * p - cfg.family.dG_adjoint(p, _xlx(sol, dsol))


def stationarity_residual_p1(cfg, triple):
    """||beta p - dG_p*(X Lambda X)|| evaluated on the triple's own (X, Lambda)."""
    M = symmetrize(triple.X @ triple.Lambda @ triple.X)
    return float(np.linalg.norm(
        cfg.beta * triple.p - cfg.family.dG_adjoint(triple.p, M)))


def solve_p1(cfg, p0, damping=1.0):
    """Fixed-point iteration p <- (1/beta) dG_p*(X(p) Lambda(p) X(p)).

    damping = 1 is the analyzed map; damping theta in (0, 1) iterates the
    averaged map (1 - theta) p + theta f(p), useful when the contraction
    regime is narrow.  Stops when both the step norm and the stationarity
    residual ||beta (p - f(p))|| fall below cfg.tol.

    Raises MaxIterExceeded with the best iterate attached.
    """
    if not 0.0 < damping <= 1.0:
        raise ValueError("damping must lie in (0, 1]")
    p = np.atleast_1d(np.asarray(p0, dtype=float)).copy()
    history = [p.copy()]
    best = None
    best_res = math.inf
    for it in range(1, cfg.max_iter + 1):
        G, sol, dsol = solve_state_pair(cfg, p)
        f = cfg.family.dG_adjoint(p, _xlx(sol, dsol)) / cfg.beta
        stat_res = cfg.beta * float(np.linalg.norm(p - f))
        if stat_res < best_res:
            best_res = stat_res
            best = (p.copy(), sol, dsol)
        p_next = (1.0 - damping) * p + damping * f
        step = float(np.linalg.norm(p_next - p))
        if stat_res <= cfg.tol and step <= cfg.tol:
            return _finish_triple(cfg, p, sol, dsol, stat_res, it, history)
        p = p_next
        history.append(p.copy())
    p_best, sol, dsol = best
    triple = _finish_triple(cfg, p_best, sol, dsol, best_res, cfg.max_iter, history)
    raise MaxIterExceeded(
        f"no fixed point within {cfg.max_iter} iterations "
        f"(best stationarity residual {best_res:.3e})", best=triple)


def _finish_triple(cfg, p, sol, dsol, stat_res, iterations, history):
    primal = sol.strong_residual
    dual_res = dsol.residual
    return OptimalityTriple(
        X=sol.X,
        Lambda=dsol.Lambda,
        p=p,
        residual_primal=primal,
        residual_dual=dual_res,
        residual_stationarity=stat_res,
        iterations=iterations,
        converged=(stat_res <= cfg.tol and primal <= cfg.tol and dual_res <= cfg.tol),
        history=history,
    )


def contraction_constant_p1(ledger):
    """Assemble the problem-1 contraction constant from the ledger.

    k = (1/beta) [ L_dG M^6/(16 a^3) trQ^2 nW
                 + L_dG C_dG M^10/(16 a^5) trQ^3 nW
                 + L_G C_dG M^4/(2 a^2) trQ^2 ( M^10 g/(16 a^5) trQ^2
                                              + M^6/(4 a^3) trQ ) ]

    The three summands bound, in order, the effect of the derivative map
    changing (dG-difference), the primal solution changing (X-difference),
    and the multiplier changing (Lambda-difference) between two parameters;
    each is listed separately in term_breakdown so alternative constant
    choices are one-line patches.  k scales as 1/beta, hence
    beta_threshold = beta * k.
    """
    _require(ledger, "M", "alpha", "trQ", "normW", "beta")
    M, a = ledger.M, ledger.alpha
    trQ, nW, beta = ledger.trQ, ledger.normW, ledger.beta
    t1 = ledger.L_dG * M**6 / (16 * a**3) * trQ**2 * nW / beta
    t2 = ledger.L_dG * ledger.C_dG * M**10 / (16 * a**5) * trQ**3 * nW / beta
    t3 = (ledger.L_G * ledger.C_dG * M**4 / (2 * a**2) * trQ**2
          * (M**10 * ledger.g / (16 * a**5) * trQ**2 + M**6 / (4 * a**3) * trQ)
          / beta)
    breakdown = [("dG-difference", t1), ("X-difference", t2), ("Lambda-difference", t3)]
    k = t1 + t2 + t3
    return ContractionReport(k=k, is_contraction=k < 1.0,
                             term_breakdown=breakdown, beta_threshold=beta * k)


def _require(ledger, *names):
    missing = [n for n in names if getattr(ledger, n) is None]
    if missing:
        raise ValueError(f"ledger lacks model-coupled fields: {missing}")


def hessian_p1(cfg, triple, q, r):
    """Cone-restricted second variation: beta (q . r) - tr(Lambda X d2G(q, r) X)."""
    q = np.atleast_1d(np.asarray(q, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    D2 = cfg.family.d2G(triple.p, q, r)
    return cfg.beta * float(q @ r) - float(np.tensordot(_xlx_of(triple), D2))


def hessian_p1_full(cfg, triple, Phi, q, Psi, r):
    """The full second variation of the problem-1 Lagrangian.

    Beyond the cone-restricted form, the matrix directions (Phi, Psi)
    contribute the mixed gain and derivative terms of the bilinear form;
    with Phi = Psi = 0 this reduces to hessian_p1.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    r = np.atleast_1d(np.asarray(r, dtype=float))
    Phi = ensure_operator(Phi, "Phi")
    Psi = ensure_operator(Psi, "Psi")
    Lam, X, p = triple.Lambda, triple.X, triple.p
    G = cfg.family.G(p)
    dGr = cfg.family.dG(p, r)
    dGq = cfg.family.dG(p, q)
    D2 = cfg.family.d2G(p, q, r)
    val = -float(np.tensordot(Lam, Phi @ G @ Psi + Psi @ G @ Phi))
    val -= float(np.tensordot(Lam, Phi @ dGr @ X + X @ dGr @ Phi))
    val -= float(np.tensordot(Lam, Psi @ dGq @ X + X @ dGq @ Psi))
    val += cfg.beta * float(q @ r)
    val -= float(np.tensordot(Lam, X @ D2 @ X))
    return val


def _xlx_of(triple):
    return symmetrize(triple.X @ triple.Lambda @ triple.X)


def critical_cone_basis(family, p, X):
    """Orthonormal basis of {q : X dG_p(q) X = 0} by singular-value thresholding.

    The linear map q -> X dG_p(q) X is stacked column-by-column and its
    numerically-null right singular directions are returned, each re-checked
    against the operator-norm criterion ||X dG_p(q) X|| <= 1e-10 (1 + ||X||^2).
    """
    X = ensure_operator(X, "X")
    p = np.atleast_1d(np.asarray(p, dtype=float))
    d = family.param_dim
    cols = []
    for k in range(d):
        e = np.zeros(d)
        e[k] = 1.0
        cols.append((X @ family.dG(p, e) @ X).ravel())
    stacked = np.column_stack(cols)
    tol = 1e-10 * (1.0 + operator_norm(X)**2)
    evals, evecs = np.linalg.eigh(stacked.T @ stacked)
    singular_values = np.sqrt(np.maximum(evals, 0.0))
    basis = []
    for sv, q in zip(singular_values, evecs.T):
        if sv <= tol * math.sqrt(X.shape[0]):
            img = X @ family.dG(p, q) @ X
            if operator_norm(img) <= tol:
                basis.append(q)
    return basis


# ---------------------------------------------------------------------------
# problem 2
# ---------------------------------------------------------------------------

def cost_p2(cfg, p):
    """tr(X(p) W) + beta/2 (tr G_p - gamma)^2."""
    G = cfg.family.G(p)
    sol = solve_are(cfg.A, G, cfg.Q, tol=INNER_ARE_TOL, cert=cfg.cert)
    gap = cfg.family.trace_G(p) - cfg.gamma
    return float(np.tensordot(sol.X, cfg.W)) + 0.5 * cfg.beta * gap**2


def gradient_p2(cfg, p, state=None):
    """Weak-form stationarity vector beta (tr G_p - gamma) dG*(I) - dG*(X Lambda X)."""
    if state is None:
        state = solve_state_pair(cfg, p)
    _, sol, dsol = state
    p = np.atleast_1d(np.asarray(p, dtype=float))
    n = cfg.A.shape[0]
    v = cfg.family.dG_adjoint(p, np.eye(n))
    w = cfg.family.dG_adjoint(p, _xlx(sol, dsol))
    return cfg.beta * (cfg.family.trace_G(p) - cfg.gamma) * v - w


def stationarity_residual_p2(cfg, triple):
    """Norm of the weak-form stationarity vector at the triple."""
    p = triple.p
    n = cfg.A.shape[0]
    M = symmetrize(triple.X @ triple.Lambda @ triple.X)
    grad = (cfg.beta * (cfg.family.trace_G(p) - cfg.gamma)
            * cfg.family.dG_adjoint(p, np.eye(n))
            - cfg.family.dG_adjoint(p, M))
    return float(np.linalg.norm(grad))


def _gram_inverse(family, p):
    S = family.gram(p)
    sv = np.linalg.svd(S, compute_uv=False)
    if sv.size == 0 or sv[-1] <= GRAM_SINGULAR_RTOL * max(sv[0], 1.0):
        raise DegenerateFamily(
            f"dG*dG numerically singular at p={np.asarray(p)} "
            f"(singular values {sv})")
    return np.linalg.inv(S)


def fixed_point_map_p2(cfg, p, direction=None, state=None):
    """One evaluation of the fixed-point map of the problem-2 optimality condition:

        f(p) = (1 / ||X L X||) (dG*dG)^{-1} dG*( X L X dG_p(direction) )

    with ``direction`` defaulting to p itself.  All operator quantities are
    evaluated at p; the map is linear (hence scale-invariant in direction).
    """
    if state is None:
        state = solve_state_pair(cfg, p)
    _, sol, dsol = state
    p = np.atleast_1d(np.asarray(p, dtype=float))
    direction = p if direction is None else np.atleast_1d(np.asarray(direction, dtype=float))
    M = _xlx(sol, dsol)
    m_norm = operator_norm(M)
    if m_norm == 0.0:
        raise DegenerateFamily("X Lambda X vanishes (W = 0?); the map is undefined")
    Sinv = _gram_inverse(cfg.family, p)
    T = symmetrize(M @ cfg.family.dG(p, direction))
    return Sinv @ cfg.family.dG_adjoint(p, T) / m_norm


def _project_box(p, domain):
    if domain is None:
        return p
    domain = np.atleast_2d(np.asarray(domain, dtype=float))
    return np.clip(p, domain[:, 0], domain[:, 1])


def solve_p2(cfg, p0, damping=1.0, mode="auto"):
    """Solve the problem-2 optimality system.

    mode="fixed_point" iterates the optimality-condition map; mode="gradient"
    runs projected gradient descent with Armijo backtracking on the
    penalized cost; mode="auto" (default) tries the map first and falls
    back to descent (restarted from p0) when the map fails to settle on a
    weak-form stationary point.  The map's fixed-point set and the weak stationarity
    condition agree only when X Lambda X is a multiple of the identity, so
    both residuals are reported on the result.

    A converged triple satisfies the weak stationarity residual, the primal
    and dual residuals, and the trace-constraint identity
    |tr G_p - gamma - ||X L X||/beta| <= tol.

    Raises MaxIterExceeded (best iterate attached) when neither phase
    reaches a stationary point within cfg.max_iter iterations each.
    """
    if mode not in ("auto", "fixed_point", "gradient"):
        raise ValueError(f"unknown mode {mode!r}")
    p0 = np.atleast_1d(np.asarray(p0, dtype=float)).copy()
    _gram_inverse(cfg.family, p0)  # invertibility must hold near p0
    domain = cfg.family.domain() if hasattr(cfg.family, "domain") else None
    history = [p0.copy()]
    iterations = 0

    if mode in ("auto", "fixed_point"):
        p_fp, fp_iters, fp_settled = _iterate_fixed_point(cfg, p0, damping, history)
        iterations += fp_iters
        state = solve_state_pair(cfg, p_fp)
        grad_norm = float(np.linalg.norm(gradient_p2(cfg, p_fp, state)))
        if fp_settled and grad_norm <= cfg.tol:
            return _finish_p2(cfg, p_fp, state, iterations, history, "fixed_point")
        if mode == "fixed_point":
            triple = _finish_p2(cfg, p_fp, state, iterations, history, "fixed_point")
            raise MaxIterExceeded(
                "fixed-point map terminated away from a weak stationary point",
                best=triple)

    p, state, gd_iters, stationary = _descend_p2(cfg, p0, domain, history)
    iterations += gd_iters
    if not stationary:
        p, state, polish_iters, stationary = _newton_polish(cfg, p, state, domain, history)
        iterations += polish_iters
    triple = _finish_p2(cfg, p, state, iterations, history, "gradient_descent")
    if not stationary:
        raise MaxIterExceeded(
            f"gradient descent found no stationary point within {cfg.max_iter} "
            f"iterations (residual {triple.residual_stationarity:.3e})", best=triple)
    return triple


FIXED_POINT_BUDGET = 60


def _iterate_fixed_point(cfg, p, damping, history):
    """Run the fixed-point map until the step stalls; True when it settled.

    The budget is capped: a contractive map settles geometrically well
    within it, and a non-contractive one only wastes solves.
    """
    p = p.copy()
    for it in range(1, min(cfg.max_iter, FIXED_POINT_BUDGET) + 1):
        state = solve_state_pair(cfg, p)
        try:
            f = fixed_point_map_p2(cfg, p, state=state)
        except DegenerateFamily:
            return p, it, False
        p_next = (1.0 - damping) * p + damping * f
        if not np.isfinite(p_next).all():
            return p, it, False
        step = float(np.linalg.norm(p_next - p))
        p = p_next
        history.append(p.copy())
        if step <= cfg.tol:
            return p, it, True
    return p, min(cfg.max_iter, FIXED_POINT_BUDGET), False


def _descend_p2(cfg, p, domain, history):
    """Projected Armijo descent on cost_p2 with the adjoint gradient.

    Returns (p, state, iterations, stationary) where stationary means the
    weak-form gradient dropped below cfg.tol.  Hands off early once the
    gradient norm plateaus (first-order steps only zigzag down a stiff
    penalty valley; the quadratic polish finishes much faster).
    """
    p = np.atleast_1d(np.asarray(p, dtype=float)).copy()
    step = 1.0
    state = solve_state_pair(cfg, p)
    val = _p2_value(cfg, p, state)
    best_gnorm = math.inf
    since_improvement = 0
    for it in range(1, cfg.max_iter + 1):
        grad = gradient_p2(cfg, p, state)
        gnorm = float(np.linalg.norm(grad))
        if gnorm <= cfg.tol:
            return p, state, it, True
        if gnorm < 0.98 * best_gnorm:
            best_gnorm = gnorm
            since_improvement = 0
        else:
            since_improvement += 1
            if since_improvement >= 10:
                return p, state, it, False  # plateaued: let the polish finish
        t = step
        accepted = False
        while t > 1e-18:
            p_try = _project_box(p - t * grad, domain)
            move = float(np.linalg.norm(p_try - p))
            if move == 0.0:
                break  # gradient points straight out of the box
            state_try = solve_state_pair(cfg, p_try)
            val_try = _p2_value(cfg, p_try, state_try)
            if val_try <= val - 1e-4 / max(t, 1e-18) * move**2:
                accepted = True
                break
            t *= 0.5
        if not accepted:
            return p, state, it, False  # stalled: boundary or flat region
        p, state, val = p_try, state_try, val_try
        history.append(p.copy())
        step = min(4.0 * t, 1e6)
    return p, state, cfg.max_iter, False


def _p2_value(cfg, p, state):
    _, sol, _ = state
    gap = cfg.family.trace_G(p) - cfg.gamma
    return float(np.tensordot(sol.X, cfg.W)) + 0.5 * cfg.beta * gap**2


def _newton_polish(cfg, p, state, domain, history, budget=80):
    """Trust-region Levenberg-Marquardt polish on the stationarity system.

    First-order descent converges only linearly near the optimum, so the
    endgame solves g(p) = 0 directly: FD Jacobian, step from
    (J.T J + mu I) s = J.T g capped at the trust radius; mu shrinks toward
    pure Newton on accepted steps and inflates on rejections.  The damping
    plus the cap keep the step useful even where the Hessian is indefinite
    or the local model is poor (stiff penalty valleys pass close to
    saddles and curve sharply).
    """
    g = gradient_p2(cfg, p, state)
    gnorm = float(np.linalg.norm(g))
    d = p.size
    if domain is not None:
        box = np.atleast_2d(np.asarray(domain, dtype=float))
        radius = 0.1 * float(np.linalg.norm(box[:, 1] - box[:, 0]))
    else:
        radius = 0.1 * max(1.0, float(np.linalg.norm(p)))
    radius_max = 10.0 * radius
    mu = 0.0
    J = None
    for it in range(1, budget + 1):
        if gnorm <= cfg.tol:
            return p, state, it - 1, True
        if J is None:
            h = 1e-6 * max(1.0, float(np.linalg.norm(p)))
            J = np.empty((d, d))
            for k in range(d):
                e = np.zeros(d)
                e[k] = h
                J[:, k] = (gradient_p2(cfg, p + e) - gradient_p2(cfg, p - e)) / (2.0 * h)
            JtJ = J.T @ J
            if mu == 0.0:
                mu = 1e-10 * max(float(np.trace(JtJ)) / d, 1.0)
        try:
            step = np.linalg.solve(JtJ + mu * np.eye(d), J.T @ g)
        except np.linalg.LinAlgError:
            return p, state, it, gnorm <= cfg.tol
        step_norm = float(np.linalg.norm(step))
        if step_norm > radius:
            step = step * (radius / step_norm)
        p_try = _project_box(p - step, domain)
        if not np.any(p_try != p):
            mu *= 8.0  # projection clamped the whole step; stiffen and retry
            radius *= 0.25
            if mu > 1e18:
                return p, state, it, gnorm <= cfg.tol
            continue
        state_try = solve_state_pair(cfg, p_try)
        g_try = gradient_p2(cfg, p_try, state_try)
        if float(np.linalg.norm(g_try)) < gnorm:
            p, state, g = p_try, state_try, g_try
            gnorm = float(np.linalg.norm(g))
            history.append(p.copy())
            mu = max(mu * 0.25, 1e-14)
            radius = min(2.0 * radius, radius_max)
            J = None  # refresh the Jacobian at the new point
        else:
            mu *= 8.0
            radius = max(0.25 * radius, 1e-12)
            if mu > 1e18:
                return p, state, it, gnorm <= cfg.tol
    return p, state, budget, gnorm <= cfg.tol


def _finish_p2(cfg, p, state, iterations, history, mode):
    G, sol, dsol = state
    M = _xlx(sol, dsol)
    trace_gap = cfg.family.trace_G(p) - cfg.gamma
    trace_res = abs(trace_gap - operator_norm(M) / cfg.beta)
    grad = gradient_p2(cfg, p, state)
    stat_res = float(np.linalg.norm(grad))
    try:
        fmap = fixed_point_map_p2(cfg, p, state=state)
        map_res = float(np.linalg.norm(p - fmap))
    except DegenerateFamily:
        map_res = math.nan
    converged = (stat_res <= cfg.tol
                 and sol.strong_residual <= cfg.tol
                 and dsol.residual <= cfg.tol
                 and trace_res <= cfg.tol)
    return OptimalityTriple(
        X=sol.X,
        Lambda=dsol.Lambda,
        p=np.atleast_1d(np.asarray(p, dtype=float)),
        residual_primal=sol.strong_residual,
        residual_dual=dsol.residual,
        residual_stationarity=stat_res,
        iterations=iterations,
        converged=converged,
        history=history,
        trace_gap=trace_gap,
        trace_constraint_residual=trace_res,
        fixed_point_residual=map_res,
        mode=mode,
    )


def contraction_constant_p2(ledger):
    """Assemble the problem-2 contraction constant from its four blocks.

    The map factors as (I)(II)(III) p with (I) = 1/||X L X||,
    (II) = (dG*dG)^{-1}, (III) = dG* X L X dG, and the blocks bound, in
    order: the (I)-difference (weighted by K C_dG^2 M^6/(8 a) trQ^2 nW),
    the (II)-Lipschitz term with the inverse-difference constant
    L = 2 K^2 C_dG L_dG, the (K/mu)-weighted (III)-difference, and the
    product-rule tail K C_dG^2 M^6 / (8 a^3 mu).  gamma_beta means
    gamma + sup ||X L X|| / beta.
    """
    _require(ledger, "M", "alpha", "trQ", "normW", "beta", "gamma", "mu", "sup_xlx")
    M, a = ledger.M, ledger.alpha
    trQ, nW = ledger.trQ, ledger.normW
    K, mu = ledger.K, ledger.mu
    C, Lg, Ldg = ledger.C_dG, ledger.L_G, ledger.L_dG
    gamma_beta = ledger.gamma + ledger.sup_xlx / ledger.beta

    k_I = (Lg * M**10 / (16 * a**5 * mu) * trQ**3 * nW
           + Lg * M**4 / (4 * a**2 * mu**2)
           * (M**10 * gamma_beta / (16 * a**5) * trQ**4 + M**6 / (4 * a**3) * trQ**3))
    # Lipschitz constant of (dG*dG)^{-1} via the inverse-difference identity
    # S1^{-1} - S2^{-1} = S1^{-1} (S2 - S1) S2^{-1}, ||S1 - S2|| <= 2 C_dG L_dG d.
    L_II = 2.0 * K**2 * C * Ldg
    k_III = (C * (Ldg * M**6 / (16 * a**3) * trQ**2 * nW
                  + Ldg * C * M**10 / (16 * a**5) * trQ**3 * nW
                  + Lg * C * M**4 / (2 * a**2) * trQ**2
                  * (M**10 * gamma_beta / (16 * a**5) * trQ**2 + M**6 / (4 * a**3) * trQ))
             + C * Ldg * M**6 / (8 * a**3) * trQ**2 * nW)

    b1 = K * C**2 * M**6 / (8 * a) * trQ**2 * nW * k_I
    b2 = C**2 * M**6 / (8 * a**3 * mu) * trQ**2 * nW * L_II
    b3 = K / mu * k_III
    b4 = K * C**2 * M**6 / (8 * a**3 * mu)
    breakdown = [("I-difference", b1), ("II-lipschitz", b2),
                 ("III-difference", b3), ("product-tail", b4)]
    k = b1 + b2 + b3 + b4

    # k is affine in gamma_beta = gamma + sup_xlx / beta: split into the
    # beta-independent part and the 1/beta coefficient to find the threshold.
    k_I_lin = Lg * M**14 / (64 * a**7 * mu**2) * trQ**4
    k_III_lin = C**2 * Lg * M**14 / (32 * a**7) * trQ**4
    k_lin = (K * C**2 * M**6 / (8 * a) * trQ**2 * nW * k_I_lin + K / mu * k_III_lin)
    k_const = k - k_lin * gamma_beta
    c_inf = k_const + k_lin * ledger.gamma  # limit of k as beta -> infinity
    slope = k_lin * ledger.sup_xlx
    if c_inf >= 1.0:
        threshold = math.inf
    elif slope <= 0.0:
        threshold = 0.0
    else:
        threshold = slope / (1.0 - c_inf)
    return ContractionReport(k=k, is_contraction=k < 1.0,
                             term_breakdown=breakdown, beta_threshold=threshold)


def hessian_p2(cfg, triple, q, coefficient="gain"):
    """Cone-restricted second variation of the problem-2 Lagrangian.

    coefficient="gain" (default) leads with the closed-loop gain norm:

        ||X G_p X|| tr(d2G(q,q)) + beta tr(dG(q))^2 - tr(L X d2G(q,q) X);

    coefficient="trace_gap" leads with beta (tr G_p - gamma) instead, which
    is what differentiating the penalty produces directly and what second
    finite differences of the frozen Lagrangian reproduce.  The two agree
    only where the trace-constraint identity ties the factors together;
    both are exposed so the gap between them stays visible.
    """
    q = np.atleast_1d(np.asarray(q, dtype=float))
    p = triple.p
    G = cfg.family.G(p)
    D1 = cfg.family.dG(p, q)
    D2 = cfg.family.d2G(p, q, q)
    if coefficient == "gain":
        lead = operator_norm(triple.X @ G @ triple.X)
    elif coefficient == "trace_gap":
        lead = cfg.beta * (cfg.family.trace_G(p) - cfg.gamma)
    else:
        raise ValueError(f"unknown coefficient {coefficient!r}")
    return (lead * float(np.trace(D2))
            + cfg.beta * float(np.trace(D1))**2
            - float(np.tensordot(_xlx_of(triple), D2)))


# ---------------------------------------------------------------------------
# beta continuation
# ---------------------------------------------------------------------------

@dataclass
class SweepRow:
    beta: float
    p: Optional[np.ndarray]
    trace_G: float
    trace_gap: float
    cost: float
    trace_term: float
    penalty_term: float
    xlx_norm: float
    k: Optional[float]
    is_contraction: Optional[bool]
    converged: bool
    iterations: int
    stationarity_residual: float
    failed: bool = False
    error: str = ""


@dataclass
class SweepReport:
    rows: List[SweepRow]
    gamma: float
    sup_xlx_recorded: float
    gap_law_holds: List[bool] = field(default_factory=list)

    def finalize(self):
        self.sup_xlx_recorded = max((r.xlx_norm for r in self.rows if not r.failed),
                                    default=math.nan)
        self.gap_law_holds = [
            (not r.failed) and r.trace_gap <= self.sup_xlx_recorded / r.beta + 1e-12
            for r in self.rows
        ]
        return self


def beta_sweep(cfg, betas, p0, ledger=None, damping=1.0):
    """Solve problem 2 along an ascending beta schedule, warm-starting each
    solve from the previous optimum, and record the constraint-gap law
    |tr G_p - gamma| <= sup ||X L X|| / beta row by row.

    A ledger (device constants + model fields) enables the per-beta
    contraction report; rows carry failure markers instead of raising when a
    single beta fails.
    """
    betas = [float(b) for b in betas]
    if any(b <= 0 for b in betas) or any(b2 <= b1 for b1, b2 in zip(betas, betas[1:])):
        raise ValueError("betas must be positive and strictly ascending")
    rows = []
    p_warm = np.atleast_1d(np.asarray(p0, dtype=float))
    for b in betas:
        cfg_b = replace_beta(cfg, b)
        k = is_k = None
        if ledger is not None:
            rep = contraction_constant_p2(replace(ledger, beta=b))
            k, is_k = rep.k, rep.is_contraction
        failed, error = False, ""
        try:
            triple = solve_p2(cfg_b, p_warm, damping=damping)
        except MaxIterExceeded as err:
            triple, failed, error = err.best, True, str(err)
        except RiccatiPlaceError as err:
            triple, failed, error = None, True, str(err)
        if triple is None:
            rows.append(SweepRow(beta=b, p=None, trace_G=math.nan,
                                 trace_gap=math.nan, cost=math.nan,
                                 trace_term=math.nan, penalty_term=math.nan,
                                 xlx_norm=math.nan, k=k, is_contraction=is_k,
                                 converged=False, iterations=cfg.max_iter,
                                 stationarity_residual=math.nan,
                                 failed=True, error=error))
            continue
        trG = cfg.family.trace_G(triple.p)
        M = symmetrize(triple.X @ triple.Lambda @ triple.X)
        trace_term = float(np.tensordot(triple.X, cfg.W))
        penalty = 0.5 * b * (trG - cfg.gamma)**2
        rows.append(SweepRow(
            beta=b, p=triple.p.copy(), trace_G=trG,
            trace_gap=abs(trG - cfg.gamma),
            cost=trace_term + penalty, trace_term=trace_term, penalty_term=penalty,
            xlx_norm=operator_norm(M), k=k, is_contraction=is_k,
            converged=triple.converged, iterations=triple.iterations,
            stationarity_residual=triple.residual_stationarity,
            failed=failed, error=error,
        ))
        p_warm = triple.p
    return SweepReport(rows=rows, gamma=cfg.gamma, sup_xlx_recorded=math.nan).finalize()


def replace_beta(cfg, beta):
    """Copy a problem config with a different penalty parameter."""
    kwargs = dict(A=cfg.A, Q=cfg.Q, W=cfg.W, family=cfg.family, beta=beta,
                  tol=cfg.tol, max_iter=cfg.max_iter)
    if isinstance(cfg, Problem2Config):
        return Problem2Config(gamma=cfg.gamma, **kwargs)
    return Problem1Config(**kwargs)


# ---------------------------------------------------------------------------
# empirical bound checks (solution Lipschitz bounds on sampled pairs)
# ---------------------------------------------------------------------------

@dataclass
class LipschitzReport:
    pairs: int
    x_pass: dict
    lambda_pass: dict
    x_passing_readings: List[str]
    lambda_passing_readings: List[str]
    worst_x_ratio: dict
    worst_lambda_ratio: dict


def lipschitz_bound_check(cfg, ledger, domain, pairs, seed):
    """Sample parameter pairs and test the two solution-Lipschitz bounds:

        ||X1 - X2||      <= L_G M^6/(8 a^3) trQ^2 ||p1 - p2||
        ||L1 - L2||_op   <= (M^10 g/(16 a^5) trQ^2 + M^6/(4 a^3) trQ) L_G ||p1 - p2||

    Each is evaluated under both trace-class readings ("nuc" uses the
    Schatten-1 norm and the matching L_G; "abs" uses |trace| and its
    L_G), with g always the operator-norm sup as the Lambda bound defines
    it.  Returns per-reading pass booleans and worst observed ratios.
    """
    _require(ledger, "M", "alpha", "trQ")
    rng = np.random.default_rng(seed)
    P1 = sample_box(domain, pairs, rng)
    P2 = sample_box(domain, pairs, rng)
    M, a, trQ = ledger.M, ledger.alpha, ledger.trQ
    lam_const = {
        reading: (M**10 * ledger.g_op / (16 * a**5) * trQ**2
                  + M**6 / (4 * a**3) * trQ) * lg
        for reading, lg in (("nuc", ledger.L_G), ("abs", ledger.L_G_abs))
    }
    x_const = {"nuc": ledger.L_G * M**6 / (8 * a**3) * trQ**2,
               "abs": ledger.L_G_abs * M**6 / (8 * a**3) * trQ**2}

    def ratio(num, bound):
        if bound > 0.0:
            return num / bound
        return 0.0 if num == 0.0 else math.inf

    worst_x = {"nuc": 0.0, "abs": 0.0}
    worst_lam = {"nuc": 0.0, "abs": 0.0}
    for p1, p2 in zip(P1, P2):
        dist = float(np.linalg.norm(p1 - p2))
        if dist < 1e-12:
            continue
        _, s1, d1 = solve_state_pair(cfg, p1)
        _, s2, d2 = solve_state_pair(cfg, p2)
        dX = s1.X - s2.X
        dL_op = operator_norm(d1.Lambda - d2.Lambda)
        for reading in ("nuc", "abs"):
            worst_x[reading] = max(
                worst_x[reading],
                ratio(_matrix_norm(dX, reading), x_const[reading] * dist))
            worst_lam[reading] = max(
                worst_lam[reading], ratio(dL_op, lam_const[reading] * dist))
    x_pass = {r: worst_x[r] <= 1.0 for r in worst_x}
    lam_pass = {r: worst_lam[r] <= 1.0 for r in worst_lam}
    return LipschitzReport(
        pairs=pairs,
        x_pass=x_pass,
        lambda_pass=lam_pass,
        x_passing_readings=[r for r, ok in x_pass.items() if ok],
        lambda_passing_readings=[r for r, ok in lam_pass.items() if ok],
        worst_x_ratio=worst_x,
        worst_lambda_ratio=worst_lam,
    )


def cluster_points(points, tol=1e-6):
    """Group nearby vectors; returns list of (representative, count).

    Used to report all distinct multi-start limits instead of fabricating
    uniqueness outside the contraction regime.
    """
    clusters = []
    for p in points:
        p = np.atleast_1d(np.asarray(p, dtype=float))
        for i, (rep, count) in enumerate(clusters):
            if np.linalg.norm(rep - p) <= tol:
                clusters[i] = (rep, count + 1)
                break
        else:
            clusters.append((p, 1))
    return clusters
