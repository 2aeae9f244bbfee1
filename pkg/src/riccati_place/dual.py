"""Lagrange-multiplier (dual) equation attached to the Riccati constraint:

    (A.T - G X) L + L (A - X G) = -W,

a Sylvester equation in the closed-loop generator A.T - G X.  Its solution
inherits symmetry and positive semi-definiteness from W and obeys the decay
bound ||L|| <= M^2/(2 alpha) ||W|| with closed-loop constants.
"""

from dataclasses import dataclass

import numpy as np

from .errors import ClosedLoopUnstable, UnstableGenerator
from .linalg import (
    bochner_quadrature,
    check_psd,
    ensure_operator,
    operator_norm,
    solve_sylvester,
    symmetrize,
)
from .semigroup import certify_stability

NORM_BOUND_SLACK = 1e-9


@dataclass
class DualSolution:
    Lambda: np.ndarray
    residual: float
    norm_bound_slack: float
    closed_loop: np.ndarray  # A.T - G X, kept for verification


def dual_residual(closed_loop, Lam, W):
    return operator_norm(closed_loop @ Lam + Lam @ closed_loop.T + W)


def solve_dual(A, G, X, W, cert=None):
    """Solve the dual equation for the multiplier Lambda.

    X must be the Riccati solution for (A, G, Q); W symmetric PSD.  The
    closed-loop generator is re-certified (not assumed) to populate the
    norm-bound slack ``M^2/(2 alpha) ||W|| - ||Lambda||``.
    """
    A = ensure_operator(A, "A")
    G = ensure_operator(G, "G")
    X = ensure_operator(X, "X")
    W = ensure_operator(W, "W")
    check_psd(W, "W")
    closed_loop = A.T - G @ X
    try:
        Lam = symmetrize(solve_sylvester(closed_loop, closed_loop, -W))
        if cert is None:
            cert = certify_stability(closed_loop)
    except UnstableGenerator as err:
        raise ClosedLoopUnstable(f"A.T - G X is not stable: {err}") from err
    bound = cert.M**2 / (2.0 * cert.alpha) * operator_norm(W)
    return DualSolution(
        Lambda=Lam,
        residual=dual_residual(closed_loop, Lam, W),
        norm_bound_slack=bound - operator_norm(Lam),
        closed_loop=closed_loop,
    )


@dataclass(frozen=True)
class DualVerification:
    residual: float
    norm_bound: float
    norm_bound_holds: bool
    symmetric: bool
    psd: bool
    quadrature_residual: float
    quadrature_residual_rel: float


def verify_dual(sol, cert_closed_loop, W, horizon=None, nodes=200):
    """Check the multiplier bound, PSD-ness, and the integral representation.

    The integral cross-check evaluates ``int_0^h T(t) W T*(t) dt`` with
    T(t) the closed-loop semigroup, via the quadrature oracle.  horizon
    defaults to 20/alpha of the closed-loop certificate.
    """
    W = ensure_operator(W, "W")
    Lam = sol.Lambda
    if horizon is None:
        horizon = 20.0 / cert_closed_loop.alpha
    quad = bochner_quadrature(sol.closed_loop, sol.closed_loop, -W, horizon, nodes)
    qres = operator_norm(Lam - quad)

    sym_ok = True
    psd_ok = True
    try:
        check_psd(Lam, "Lambda")
    except ValueError as err:
        sym_ok = "not symmetric" not in str(err)
        psd_ok = False
    bound = cert_closed_loop.M**2 / (2.0 * cert_closed_loop.alpha) * operator_norm(W)
    return DualVerification(
        residual=dual_residual(sol.closed_loop, Lam, W),
        norm_bound=bound,
        norm_bound_holds=operator_norm(Lam) <= bound + NORM_BOUND_SLACK,
        symmetric=sym_ok,
        psd=psd_ok,
        quadrature_residual=qres,
        quadrature_residual_rel=qres / (1.0 + operator_norm(Lam)),
    )
