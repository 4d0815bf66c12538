"""Safe lower bounds from approximate solver output.

Two post-processing routes turn a near-optimal iterate into a bound that is
valid no matter how early the solver stopped:

* eigenvalue route: evaluate the dual objective at sign-feasible multipliers and
  pay for the dual-equality violation through the negative spectrum of the
  rebuilt slack matrix, scaled by an upper bound ``xbar`` on the largest
  eigenvalue of any optimal primal matrix;
* LP route: freeze the PSD part and re-optimize the remaining multipliers
  exactly with the bundled dense simplex.

Equipartition problems default to the eigenvalue route (xbar = group size),
knapsack problems to the LP route.
"""
from __future__ import annotations

import logging
from dataclasses import dataclass

import numpy as np

from .admm import AdmmResult, AdmmState, box_support_value, clamp_unbounded
from .model import SdpProblem
from .simplex import LpResult, solve_dense_lp  # re-exported: the LP oracle lives here
from .symm import psd_project, tri_indices, tri_scale, tri_weights

log = logging.getLogger(__name__)

DEFAULT_MU = 1.1
GPKC_EIG_ACCURACY = 1e-5

__all__ = [
    "BoundCertificate",
    "xbar_for",
    "eig_lower_bound",
    "lp_lower_bound",
    "certify_bound",
    "solve_dense_lp",
    "LpResult",
]


@dataclass(frozen=True)
class BoundCertificate:
    value: float
    method: str                      # "eig" | "lp"
    perturbation: float | None = None
    xbar: float | None = None
    feasible: bool = True            # LP route may fail; -inf value then
    clamp: float = 0.0               # magnitude of sign-clamped multiplier entries


def xbar_for(p: SdpProblem, X_tilde: np.ndarray, mu: float = DEFAULT_MU) -> float:
    """Upper bound for the top eigenvalue of an optimal primal matrix.

    Equipartition feasible sets satisfy X <= m I, so the group size is returned
    there; otherwise the estimate mu * lambda_max(X~) with mu > 1 is used.
    """
    if p.tag.problem == "keq":
        return float(p.tag.m)
    if mu <= 1.0:
        raise ValueError("the eigenvalue safety factor must exceed 1")
    return float(mu * np.linalg.eigvalsh(0.5 * (X_tilde + X_tilde.T))[-1])


def eig_lower_bound(p: SdpProblem, approx: AdmmState, xbar: float) -> BoundCertificate:
    """Spectral-perturbation bound from approximate multipliers.

    The multipliers are sign-clamped wherever their support pairing would hit an
    infinite bound, the PSD-deficient matrix is rebuilt as C - A*(y) - B*(v) - S
    from the clamped multipliers, and its negative eigenvalues enter the bound
    scaled by ``xbar``. Rebuilding (rather than trusting the solver's projected
    PSD matrix) is what keeps the bound safe at loose stopping tolerances.
    """
    if xbar <= 0:
        raise ValueError("xbar must be positive")
    y = approx.y
    S_c, mag = clamp_unbounded(approx.S, p.box_lo, p.box_hi)
    if p.q:
        v_c, mag_v = clamp_unbounded(approx.v, p.l, p.u)
        mag += mag_v
    else:
        v_c = approx.v
    if mag:
        log.debug("eig bound clamped multiplier mass %.3e", mag)
    d0 = float(p.b @ y) + box_support_value(S_c, p.box_lo, p.box_hi)
    if p.q:
        d0 += box_support_value(v_c, p.l, p.u)
    Zc = p.C - p.adjoint(y, v_c if p.q else None) - S_c
    evals = np.linalg.eigvalsh(0.5 * (Zc + Zc.T))
    neg_sum = float(evals[evals < 0].sum())
    perturbation = xbar * neg_sum if neg_sum < 0 else 0.0
    return BoundCertificate(value=d0 + perturbation, method="eig",
                            perturbation=perturbation, xbar=xbar, clamp=mag)


def _standard_form_box_lp(p: SdpProblem, Cz: np.ndarray):
    """Standard-form data for min <Cz, X> over the linear part of the feasible set.

    Variables are the upper-triangle entries of X (inner products doubled off the
    diagonal) plus one slack per inequality row; box and interval bounds become
    shifts, reflections, sign splits, or extra bound rows as needed.
    """
    n, m, q = p.n, p.m, p.q
    rows_, cols_ = tri_indices(n)
    nut = rows_.size
    w2 = tri_weights(n)

    G = p.stacked_rows()
    dense = np.asarray(G.multiply(tri_scale(n)).todense())  # rows now w2-weighted
    M = np.zeros((m + q, nut + q))
    M[:, :nut] = dense
    if q:
        M[m:, nut:] = -np.eye(q)

    rhs = np.concatenate([p.b, np.zeros(q)])
    cost = np.concatenate([w2 * Cz[rows_, cols_], np.zeros(q)])
    lo = np.concatenate([p.box_lo[rows_, cols_], p.l])
    hi = np.concatenate([p.box_hi[rows_, cols_], p.u])

    columns, costs, bound_rows = [], [], []
    const = 0.0
    for j in range(nut + q):
        col = M[:, j]
        cj = cost[j]
        lj, hj = lo[j], hi[j]
        if np.isinf(lj) and np.isinf(hj):
            columns.append(col)
            costs.append(cj)
            columns.append(-col)
            costs.append(-cj)
        elif np.isinf(hj):
            if lj != 0.0:
                rhs = rhs - col * lj
                const += cj * lj
            columns.append(col)
            costs.append(cj)
        elif np.isinf(lj):
            rhs = rhs - col * hj
            const += cj * hj
            columns.append(-col)
            costs.append(-cj)
        else:
            if lj != 0.0:
                rhs = rhs - col * lj
                const += cj * lj
            bound_rows.append((len(columns), hj - lj))
            columns.append(col)
            costs.append(cj)

    A = np.column_stack(columns)
    c = np.asarray(costs)
    if bound_rows:
        extra = np.zeros((len(bound_rows), A.shape[1] + len(bound_rows)))
        A = np.hstack([A, np.zeros((A.shape[0], len(bound_rows)))])
        add_rhs = np.zeros(len(bound_rows))
        for t, (j, gap) in enumerate(bound_rows):
            extra[t, j] = 1.0
            extra[t, A.shape[1] - len(bound_rows) + t] = 1.0
            add_rhs[t] = gap
        A = np.vstack([A, extra])
        rhs = np.concatenate([rhs, add_rhs])
        c = np.concatenate([c, np.zeros(len(bound_rows))])
    return c, A, rhs, const


def lp_lower_bound(
    p: SdpProblem,
    Z_tilde: np.ndarray,
    project: bool = True,
    max_iter: int | None = None,
) -> BoundCertificate:
    """Dual-adjustment bound: freeze the PSD block and re-optimize the rest exactly.

    With Z frozen at the (projected) input, the best achievable dual objective is
    a linear program; its optimum is a valid bound whenever finite. The program
    solved here is the box-constrained image of that LP (same optimum by duality,
    far fewer rows); an unbounded image certifies the adjustment is infeasible and
    -inf is returned, matching the declared failure mode.
    """
    Z = psd_project(Z_tilde) if project else Z_tilde
    c, A, rhs, const = _standard_form_box_lp(p, p.C - Z)
    res = solve_dense_lp(c, A, rhs, max_iter=max_iter)
    if res.status == "optimal":
        return BoundCertificate(value=res.objective + const, method="lp", feasible=True)
    if res.status not in ("unbounded", "infeasible"):
        log.warning("lp bound gave up with status %s; reporting -inf", res.status)
    return BoundCertificate(value=-np.inf, method="lp", feasible=False)


def certify_bound(p: SdpProblem, result: AdmmResult, method: str = "auto",
                  mu: float = DEFAULT_MU) -> BoundCertificate:
    """Route a solver result to the default certificate for its problem family."""
    if method == "auto":
        method = "eig" if p.tag.problem == "keq" else "lp"
    if method == "eig" and p.tag.problem != "keq":
        accurate = result.status == "converged" and result.eps_tol <= GPKC_EIG_ACCURACY
        if not accurate:
            log.warning(
                "eigenvalue bound for a knapsack problem needs an accurate solve; "
                "falling back to the LP bound"
            )
            method = "lp"
    if method == "eig":
        xbar = xbar_for(p, result.state.X, mu=mu)
        return eig_lower_bound(p, result.state, xbar)
    if method == "lp":
        return lp_lower_bound(p, result.state.Z, project=False)
    raise ValueError(f"unknown certificate method {method!r}")
