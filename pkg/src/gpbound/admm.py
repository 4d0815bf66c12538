"""Three-block alternating-direction solver for the conic partition relaxations.

The solver works on the dual: maximize b'y + F1(S) + F2(v) subject to
A*(y) + B*(ybar) + S + Z = C, ybar = v, Z PSD, where F1/F2 are the support
functions of the box and slack intervals. Each sweep updates the multiplier
pair (y, ybar) through one cached Cholesky solve, the box-dual S and the
interval-dual v by closed-form interval projections, Z and the primal X from a
single eigendecomposition, and the primal slack s; the complementarity
<X, Z> = 0 holds by construction in every iteration.
"""
from __future__ import annotations

import time
from dataclasses import dataclass, replace

import numpy as np
import scipy.linalg

from .model import SdpProblem
from .symm import psd_split

SIGMA_LO = 1e-6
SIGMA_HI = 1e6


class SolverDivergedError(RuntimeError):
    """A non-finite iterate appeared; carries the offending iteration."""

    def __init__(self, iteration: int, detail: str):
        self.iteration = iteration
        super().__init__(f"non-finite iterate at iteration {iteration}: {detail}")


class DependentRowsError(ValueError):
    """The stacked constraint rows are linearly dependent."""

    def __init__(self, rows):
        self.rows = tuple(int(r) for r in rows)
        super().__init__(f"constraint rows {self.rows} are linearly dependent")


@dataclass
class AdmmState:
    X: np.ndarray
    s: np.ndarray
    y: np.ndarray
    ybar: np.ndarray
    Z: np.ndarray
    S: np.ndarray
    v: np.ndarray
    sigma: float
    iter: int = 0

    @classmethod
    def zeros(cls, problem: SdpProblem, sigma: float) -> "AdmmState":
        n, m, q = problem.n, problem.m, problem.q
        return cls(
            X=np.zeros((n, n)), s=np.zeros(q), y=np.zeros(m), ybar=np.zeros(q),
            Z=np.zeros((n, n)), S=np.zeros((n, n)), v=np.zeros(q), sigma=sigma,
        )

    def copy(self) -> "AdmmState":
        return AdmmState(
            X=self.X.copy(), s=self.s.copy(), y=self.y.copy(), ybar=self.ybar.copy(),
            Z=self.Z.copy(), S=self.S.copy(), v=self.v.copy(),
            sigma=self.sigma, iter=self.iter,
        )


@dataclass(frozen=True)
class ResidualRecord:
    eps_dc: float
    eps_pc: float
    eps_pb: float
    eps_opt_m: float
    eps_opt_v: float

    @property
    def max_residual(self) -> float:
        return max(self.eps_dc, self.eps_pc, self.eps_pb, self.eps_opt_m, self.eps_opt_v)

    def as_tuple(self) -> tuple[float, float, float, float, float]:
        return (self.eps_dc, self.eps_pc, self.eps_pb, self.eps_opt_m, self.eps_opt_v)


@dataclass(frozen=True)
class NormalFactor:
    """Lower-triangular Cholesky factor of [[AA*, AB*], [BA*, BB* + I]]."""

    R: np.ndarray
    m: int
    q: int

    @property
    def dim(self) -> int:
        return self.m + self.q

    def solve(self, rhs: np.ndarray) -> np.ndarray:
        # forward substitution with R, then backward with R'
        return scipy.linalg.cho_solve((self.R, True), rhs)


def factor_normal_matrix(problem: SdpProblem) -> NormalFactor:
    """Factor the constraint Gram matrix once; reused by every multiplier update."""
    G = problem.stacked_rows()
    Q = (G @ G.T).toarray()
    m = problem.m
    if problem.q:
        idx = np.arange(m, m + problem.q)
        Q[idx, idx] += 1.0
    try:
        R = np.linalg.cholesky(Q)
    except np.linalg.LinAlgError:
        raise _diagnose_dependent_rows(G) from None
    return NormalFactor(R=R, m=m, q=problem.q)


def _diagnose_dependent_rows(G) -> DependentRowsError:
    dense = G.toarray()
    _, Rq, piv = scipy.linalg.qr(dense.T, mode="economic", pivoting=True)
    diag = np.abs(np.diag(Rq))
    tol = max(dense.shape) * np.finfo(float).eps * (diag.max() if diag.size else 1.0)
    rank = int((diag > tol).sum())
    return DependentRowsError(sorted(piv[rank:]))


def update_y(state: AdmmState, factor: NormalFactor, problem: SdpProblem):
    """Multiplier update: solve the cached normal system at the current iterate.

    Expects the state as left by the previous sweep (S, Z, X, v, s current).
    """
    sigma = state.sigma
    W0 = state.S + state.Z - problem.C + state.X / sigma
    rhs_top = problem.b / sigma - problem.eq_apply(W0)
    if problem.q:
        rhs_bot = -problem.ineq_apply(W0) + state.v + state.s / sigma
        rhs = np.concatenate([rhs_top, rhs_bot])
    else:
        rhs = rhs_top
    yy = factor.solve(rhs)
    return yy[: factor.m], yy[factor.m :]


def update_S(state: AdmmState, problem: SdpProblem) -> np.ndarray:
    """Box-dual update; expects y/ybar already advanced this sweep."""
    sigma = state.sigma
    M = problem.adjoint(state.y, state.ybar) + state.Z + state.X / sigma - problem.C
    return problem.clip_box(sigma * M) / sigma - M


def update_Z_v(state: AdmmState, problem: SdpProblem):
    """PSD-dual and interval-dual updates; expects y/ybar and S already advanced."""
    sigma = state.sigma
    N = problem.adjoint(state.y, state.ybar) + state.S + state.X / sigma - problem.C
    _, neg = psd_split(N)
    Z = -neg
    if problem.q:
        t = state.s - sigma * state.ybar
        v = (problem.clip_slack(t) - t) / sigma
    else:
        v = np.zeros(0)
    return Z, v


def update_primal(state: AdmmState, problem: SdpProblem):
    """Primal update; expects all dual blocks advanced. X = sigma * P_psd(N)."""
    sigma = state.sigma
    N = problem.adjoint(state.y, state.ybar) + state.S + state.X / sigma - problem.C
    pos, _ = psd_split(N)
    X = sigma * pos
    if problem.q:
        s = problem.clip_slack(state.s - sigma * state.ybar)
    else:
        s = np.zeros(0)
    return X, s


def residuals(state: AdmmState, problem: SdpProblem) -> ResidualRecord:
    """The five normalized infeasibility / optimality measures of the iterate."""
    C, b = problem.C, problem.b
    Rd = problem.adjoint(state.y, state.ybar) + state.Z + state.S - C
    eps_dc = np.linalg.norm(Rd) / (1.0 + np.linalg.norm(C))
    eps_pc = np.linalg.norm(problem.eq_apply(state.X) - b) / (1.0 + np.linalg.norm(b))
    if problem.q:
        eps_dc += np.linalg.norm(state.v - state.ybar) / (1.0 + np.linalg.norm(state.y))
        eps_pc += np.linalg.norm(problem.ineq_apply(state.X) - state.s) / (
            1.0 + np.linalg.norm(state.s)
        )
    nX = np.linalg.norm(state.X)
    eps_pb = np.linalg.norm(state.X - problem.clip_box(state.X)) / (1.0 + nX)
    eps_opt_m = np.linalg.norm(state.X - problem.clip_box(state.X - state.S)) / (
        1.0 + nX + np.linalg.norm(state.S)
    )
    if problem.q:
        eps_opt_v = np.linalg.norm(state.s - problem.clip_slack(state.s - state.v)) / (
            1.0 + np.linalg.norm(state.v) + np.linalg.norm(state.s)
        )
    else:
        eps_opt_v = 0.0
    return ResidualRecord(float(eps_dc), float(eps_pc), float(eps_pb),
                          float(eps_opt_m), float(eps_opt_v))


def adapt_sigma(
    state: AdmmState,
    rule: str,
    rec: ResidualRecord | None = None,
    ratio: float = 5.0,
    scale: float = 1.1,
    lo: float = SIGMA_LO,
    hi: float = SIGMA_HI,
) -> float:
    """Next stepsize under the norm-ratio rule or the residual-balancing rule."""
    if rule == "adaptive":
        nX = np.linalg.norm(state.X)
        nZ = np.linalg.norm(state.Z)
        if nZ == 0.0:
            return hi
        if nX == 0.0:
            return lo
        return float(min(max(nX / nZ, lo), hi))
    if rule == "classic":
        if rec is None:
            raise ValueError("the residual-balancing rule needs a residual record")
        # Primal-dominant residuals call for a smaller stepsize in this dual sweep:
        # large sigma enforces dual feasibility and freezes the primal multiplier.
        sigma = state.sigma
        pd = rec.eps_pc / rec.eps_dc if rec.eps_dc > 0 else np.inf
        if pd > ratio:
            sigma /= scale
        elif pd < 1.0 / ratio:
            sigma *= scale
        return float(min(max(sigma, lo), hi))
    raise ValueError(f"unknown stepsize rule {rule!r}")


def box_support_value(M: np.ndarray, lo: np.ndarray, hi: np.ndarray) -> float:
    """inf{<M, W> : lo <= W <= hi}; -inf when a nonzero entry pairs an infinite bound."""
    pos = M > 0
    neg = M < 0
    if np.any(pos & np.isinf(lo)) or np.any(neg & np.isinf(hi)):
        return -np.inf
    total = 0.0
    if pos.any():
        total += float((M[pos] * lo[pos]).sum())
    if neg.any():
        total += float((M[neg] * hi[neg]).sum())
    return total


def clamp_unbounded(M: np.ndarray, lo: np.ndarray, hi: np.ndarray):
    """Zero the entries whose support pairing is infinite; returns (clamped, magnitude)."""
    bad = ((M > 0) & np.isinf(lo)) | ((M < 0) & np.isinf(hi))
    if not bad.any():
        return M, 0.0
    out = M.copy()
    out[bad] = 0.0
    return out, float(np.linalg.norm(M[bad]))


def dual_objective(problem: SdpProblem, y, v, S, clamp: bool = True):
    """b'y + F1(S) + F2(v); with ``clamp`` the unbounded-paired entries are zeroed.

    Returns (value, clamp magnitude). Without clamping the value may be -inf.
    """
    mag = 0.0
    if clamp:
        S, m1 = clamp_unbounded(S, problem.box_lo, problem.box_hi)
        mag += m1
        if problem.q:
            v, m2 = clamp_unbounded(v, problem.l, problem.u)
            mag += m2
    val = float(problem.b @ y) + box_support_value(S, problem.box_lo, problem.box_hi)
    if problem.q:
        val += box_support_value(v, problem.l, problem.u)
    return val, mag


@dataclass
class AdmmParams:
    eps_tol: float = 1e-5
    max_iter: int = 20000
    sigma0: float = 1.0
    rule: str = "auto"             # auto | adaptive | classic
    classic_every: int = 10
    classic_ratio: float = 5.0
    classic_scale: float = 1.1


@dataclass
class AdmmResult:
    state: AdmmState
    residuals: ResidualRecord
    status: str                    # "converged" | "iter_limit"
    primal_obj: float
    dual_obj: float
    dual_clamp: float
    iterations: int
    elapsed: float
    eps_tol: float


def pad_state(state: AdmmState, problem: SdpProblem) -> AdmmState:
    """Warm start for a problem extended with new inequality rows (zeros appended)."""
    q = problem.q
    if q < state.ybar.size:
        raise ValueError("target problem has fewer inequality rows than the state")
    grown = state.copy()
    pad = q - state.ybar.size
    if pad:
        grown.ybar = np.concatenate([grown.ybar, np.zeros(pad)])
        grown.v = np.concatenate([grown.v, np.zeros(pad)])
        grown.s = np.concatenate([grown.s, np.zeros(pad)])
    return grown


def _row_scales(problem: SdpProblem) -> tuple[np.ndarray, np.ndarray]:
    G = problem.stacked_rows()
    norms = np.sqrt(np.asarray(G.multiply(G).sum(axis=1)).ravel())
    return norms[: problem.m], norms[problem.m :]


def _equilibrated(problem: SdpProblem):
    """Row-scaled copy of the problem (unit-norm constraint rows) plus the scales.

    The feasible set is unchanged; multipliers and slacks of the scaled problem map
    back through the returned diagonal scales. Needed because raw vertex-weight
    magnitudes leave the slack block orders of magnitude off the matrix block.
    """
    d_eq, d_in = _row_scales(problem)
    eq = tuple(mat.multiply(1.0 / d) for mat, d in zip(problem.eq_mats, d_eq))
    ineq = tuple(mat.multiply(1.0 / d) for mat, d in zip(problem.ineq_mats, d_in))
    scaled = replace(
        problem,
        eq_mats=eq, b=problem.b / d_eq,
        ineq_mats=ineq,
        l=problem.l / d_in if problem.q else problem.l,
        u=problem.u / d_in if problem.q else problem.u,
    )
    return scaled, d_eq, d_in


def solve(
    problem: SdpProblem,
    params: AdmmParams | None = None,
    start: AdmmState | None = None,
    callback=None,
) -> AdmmResult:
    """Run the sweep loop until the largest residual drops below the tolerance.

    The loop itself runs on a row-equilibrated copy of the constraints; the stopping
    test, the returned state, and the residual record all live in the caller's
    coordinates. ``callback(iteration, state, record, primal, dual)`` fires after
    each sweep when provided. Identical inputs produce an identical iterate stream.
    """
    prm = params or AdmmParams()
    t0 = time.perf_counter()
    work, d_eq, d_in = _equilibrated(problem)
    factor = factor_normal_matrix(work)
    rule = prm.rule
    if rule == "auto":
        rule = "classic" if problem.q else "adaptive"

    if start is not None:
        state = start.copy()
        state.y = state.y * d_eq
        state.ybar = state.ybar * d_in
        state.v = state.v * d_in
        state.s = state.s / d_in if problem.q else state.s
    else:
        state = AdmmState.zeros(work, prm.sigma0)

    def unscaled_view() -> AdmmState:
        return AdmmState(
            X=state.X, s=state.s * d_in if problem.q else state.s,
            y=state.y / d_eq, ybar=state.ybar / d_in if problem.q else state.ybar,
            Z=state.Z, S=state.S, v=state.v / d_in if problem.q else state.v,
            sigma=state.sigma, iter=state.iter,
        )

    C = problem.C
    q = problem.q
    status = "iter_limit"
    view = unscaled_view()
    rec = residuals(view, problem)

    for k in range(prm.max_iter):
        sigma = state.sigma
        state.y, state.ybar = update_y(state, factor, work)
        adj = work.adjoint(state.y, state.ybar)
        M = adj + state.Z + state.X / sigma - C
        state.S = work.clip_box(sigma * M) / sigma - M
        N = M - state.Z + state.S
        pos, neg = psd_split(N)
        state.Z = -neg
        newX = sigma * pos
        if q:
            t = state.s - sigma * state.ybar
            state.s = work.clip_slack(t)
            state.v = (state.s - t) / sigma
        state.X = newX
        state.iter = k + 1

        if not (np.isfinite(state.X).all() and np.isfinite(state.y).all()):
            raise SolverDivergedError(k + 1, f"sigma={sigma:.3e}")

        view = unscaled_view()
        rec = residuals(view, problem)
        if callback is not None:
            primal = float((C * view.X).sum())
            dual, _ = dual_objective(problem, view.y, view.v, view.S)
            callback(k + 1, view, rec, primal, dual)
        if rec.max_residual <= prm.eps_tol:
            status = "converged"
            break

        if rule == "adaptive":
            state.sigma = adapt_sigma(state, "adaptive")
        elif (k + 1) % prm.classic_every == 0:
            state.sigma = adapt_sigma(state, "classic", rec,
                                      ratio=prm.classic_ratio, scale=prm.classic_scale)

    final = unscaled_view()
    primal = float((C * final.X).sum())
    dual, clamp = dual_objective(problem, final.y, final.v, final.S)
    return AdmmResult(
        state=final, residuals=rec, status=status,
        primal_obj=primal, dual_obj=dual, dual_clamp=clamp,
        iterations=final.iter, elapsed=time.perf_counter() - t0,
        eps_tol=prm.eps_tol,
    )
