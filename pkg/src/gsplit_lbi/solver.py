"""Regularization paths by damped linearized Bregman iteration on the split loss.

Each step is plain gradient descent on the dense coefficients and the
intercept, while the auxiliary vector gamma moves in a dual variable z that is
soft-thresholded: voxel coordinates one-sidedly (nonnegative prior), edge
coordinates symmetrically. The iteration count k times the step size alpha is
the path time t; early t is heavy regularization, large t approaches the
unpenalized fit. Initialization is all zeros, so the path starts at the empty
model. At any point the selection estimate beta_les is the projection of
beta_pre onto the subspace the current support allows.
"""

from __future__ import annotations

import warnings
from dataclasses import dataclass, field

import numpy as np
from scipy.special import expit

from .glm_loss import (
    Dataset,
    GlmFamily,
    SplitLossParams,
    _as_family,
    _check_labels,
    data_nll,
    gradients,
    spectral_norm_D,
    spectral_norm_X,
)
from .grid_graph import DifferenceOperator
from .sparsity_ops import SupportSet, project_onto_support, shrink, shrink_nonneg, support

__all__ = [
    "SolverConfig",
    "SolverState",
    "PathPoint",
    "RegularizationPath",
    "DivergenceError",
    "StepSizeWarning",
    "default_step_size",
    "stability_bound",
    "init_state",
    "step",
    "run_path",
    "select_stopping_time",
]


class DivergenceError(RuntimeError):
    """Raised when an iterate stops being finite."""


class StepSizeWarning(UserWarning):
    """The configured step size exceeds the conservative stability bound."""


@dataclass(frozen=True)
class SolverConfig:
    """Run parameters.

    alpha may be an explicit positive step size or "auto", which applies
    nu / (kappa * (1 + nu * Lx^2 + Ld^2)) with Lx, Ld the spectral norms of
    the design and the penalty operator. nonneg_vertex keeps the voxel block
    of gamma one-sidedly thresholded (the degeneration prior); switch it off
    to recover plain signed selection on all coordinates.
    """

    nu: float
    rho: float | None = None      # bookkeeping; must match the operator when set
    kappa: float = 10.0
    alpha: float | str = "auto"
    max_iters: int = 5000
    record_every: int | None = None   # None: aim for ~200 recorded points
    support_tol: float = 0.0
    fit_intercept: bool = True
    nonneg_vertex: bool = True

    def __post_init__(self):
        if not self.nu > 0:
            raise ValueError(f"nu must be positive, got {self.nu}")
        if not self.kappa > 0:
            raise ValueError(f"kappa must be positive, got {self.kappa}")
        if isinstance(self.alpha, str):
            if self.alpha != "auto":
                raise ValueError(f"alpha must be positive or 'auto', got {self.alpha!r}")
        elif not self.alpha > 0:
            raise ValueError(f"alpha must be positive or 'auto', got {self.alpha}")
        if self.max_iters < 1:
            raise ValueError(f"max_iters must be at least 1, got {self.max_iters}")
        if self.record_every is not None and self.record_every < 1:
            raise ValueError(f"record_every must be at least 1, got {self.record_every}")
        if self.support_tol < 0:
            raise ValueError(f"support_tol must be nonnegative, got {self.support_tol}")


@dataclass(slots=True)
class SolverState:
    k: int
    t: float
    beta0: float
    beta_pre: np.ndarray
    z: np.ndarray
    gamma: np.ndarray


@dataclass(frozen=True)
class PathPoint:
    """Snapshot of one recorded iteration."""

    k: int
    t: float
    beta0: float
    beta_pre: np.ndarray
    beta_les: np.ndarray
    gamma: np.ndarray
    z: np.ndarray
    support: SupportSet
    data_nll: float
    gap_norm: float


@dataclass
class RegularizationPath:
    """Recorded snapshots plus the first-activation step of every coordinate.

    first_active[j] is the iteration at which gamma_j first became nonzero,
    -1 if it never did. Activation order is the path's variable screening:
    ranking coordinates by entry time is how the path is read as a selector.
    """

    config: SolverConfig
    family: GlmFamily
    operator: DifferenceOperator
    alpha: float
    lambda_x: float
    lambda_d: float
    points: list[PathPoint] = field(default_factory=list)
    first_active: np.ndarray | None = None

    def activation_scores(self) -> np.ndarray:
        """Early entry scores better; never-activated scores -inf."""
        if self.first_active is None:
            raise ValueError("path carries no activation record")
        scores = -self.first_active.astype(float)
        scores[self.first_active < 0] = -np.inf
        return scores


def default_step_size(nu, kappa, lambda_x, lambda_d) -> float:
    """Step size nu / (kappa * (1 + nu * Lx^2 + Ld^2))."""
    return nu / (kappa * (1.0 + nu * lambda_x**2 + lambda_d**2))


def stability_bound(nu, kappa, lambda_x, lambda_d, family) -> float:
    """Conservative ceiling on kappa * alpha.

    Bounds the data-term curvature by Lx^2 (linear) or Lx^2 / 4 (logistic,
    since the logistic weights never exceed 1/4).
    """
    family = _as_family(family)
    lam_h = lambda_x**2 / 4.0 if family is GlmFamily.LOGISTIC else lambda_x**2
    return nu / (kappa * (1.0 + nu * lam_h + lambda_d**2))


def init_state(op: DifferenceOperator) -> SolverState:
    """All-zero start: empty model, empty support."""
    return SolverState(
        k=0,
        t=0.0,
        beta0=0.0,
        beta_pre=np.zeros(op.p),
        z=np.zeros(op.p + op.m),
        gamma=np.zeros(op.p + op.m),
    )


def step(state: SolverState, data: Dataset, family, op: DifferenceOperator,
         config: SolverConfig, alpha: float | None = None) -> SolverState:
    """One iteration. All gradients are evaluated at the incoming state.

    beta0 and beta_pre descend with step kappa * alpha; z descends with step
    alpha; gamma is kappa times the blockwise threshold of z.
    """
    family = _as_family(family)
    if alpha is None:
        alpha = _resolve_alpha(config, data, op)
    params = SplitLossParams(nu=config.nu, operator=op)
    g_beta0, g_beta, g_gamma = gradients(
        state.beta0, state.beta_pre, state.gamma, data, family, params
    )
    ka = config.kappa * alpha
    beta0_new = state.beta0 - ka * g_beta0 if config.fit_intercept else state.beta0
    beta_new = state.beta_pre - ka * g_beta
    z_new = state.z - alpha * g_gamma
    zv, ze = z_new[: op.p], z_new[op.p :]
    gv = shrink_nonneg(zv, 1.0) if config.nonneg_vertex else shrink(zv, 1.0)
    gamma_new = config.kappa * np.concatenate([gv, shrink(ze, 1.0)])
    k_new = state.k + 1
    return SolverState(
        k=k_new,
        t=k_new * alpha,
        beta0=beta0_new,
        beta_pre=beta_new,
        z=z_new,
        gamma=gamma_new,
    )


def _resolve_alpha(config: SolverConfig, data: Dataset, op: DifferenceOperator,
                   lambda_x: float | None = None, lambda_d: float | None = None):
    if lambda_x is None:
        lambda_x = spectral_norm_X(data)
    if lambda_d is None:
        lambda_d = spectral_norm_D(op)
    if config.alpha == "auto":
        alpha = default_step_size(config.nu, config.kappa, lambda_x, lambda_d)
    else:
        alpha = float(config.alpha)
    return alpha, lambda_x, lambda_d


def _record(state, data, family, op, config) -> PathPoint:
    supp = support(state.gamma, op.p, config.support_tol)
    beta_les = project_onto_support(state.beta_pre, op, supp)
    gap = op.apply(state.beta_pre) - state.gamma
    return PathPoint(
        k=state.k,
        t=state.t,
        beta0=state.beta0,
        beta_pre=state.beta_pre.copy(),
        beta_les=beta_les,
        gamma=state.gamma.copy(),
        z=state.z.copy(),
        support=supp,
        data_nll=data_nll(state.beta0, state.beta_pre, data, family),
        gap_norm=float(np.linalg.norm(gap)),
    )


def run_path(data: Dataset, family, op: DifferenceOperator, config: SolverConfig,
             lambda_x: float | None = None, lambda_d: float | None = None
             ) -> RegularizationPath:
    """Run the iteration from zero and record snapshots along the way.

    Records the initial state, every record_every-th iterate, and the final
    one. Supplying lambda_x / lambda_d skips the power iterations, which also
    keeps the automatic step size identical across reruns on subsets of the
    same data when the caller fixes them.

    Raises DivergenceError as soon as an iterate stops being finite.
    """
    family = _as_family(family)
    if data.p != op.p:
        raise ValueError(f"design has p={data.p} but operator expects p={op.p}")
    if config.rho is not None and config.rho != op.rho:
        raise ValueError(f"config.rho={config.rho} does not match operator rho={op.rho}")
    alpha, lambda_x, lambda_d = _resolve_alpha(config, data, op, lambda_x, lambda_d)
    if not alpha > 0:
        raise ValueError(f"resolved step size must be positive, got {alpha}")
    bound = stability_bound(config.nu, config.kappa, lambda_x, lambda_d, family)
    if config.kappa * alpha > bound * (1.0 + 1e-12):
        warnings.warn(
            f"kappa*alpha = {config.kappa * alpha:.3g} exceeds the conservative "
            f"stability ceiling {bound:.3g}; the run may still converge, but "
            "reduce alpha if iterates blow up",
            StepSizeWarning,
            stacklevel=2,
        )
    record_every = config.record_every or max(1, config.max_iters // 200)

    path = RegularizationPath(
        config=config, family=family, operator=op,
        alpha=alpha, lambda_x=lambda_x, lambda_d=lambda_d,
    )

    # The loop below is step() unrolled with reused buffers. Ufunc order and
    # operands match gradients()/step() exactly, so trajectories agree bit
    # for bit with repeated step() calls; tests pin that equivalence.
    X, y = data.X, data.y
    n, p = data.n, op.p
    Dm = op.matrix
    DmT = Dm.T
    nu, kappa = config.nu, config.kappa
    ka = kappa * alpha
    logistic = family is GlmFamily.LOGISTIC
    if logistic:
        _check_labels(data, family)
        neg_y = -y
    nonneg = config.nonneg_vertex
    intercept = config.fit_intercept

    beta0 = 0.0
    beta = np.zeros(p)
    z = np.zeros(p + op.m)
    gamma = np.zeros(p + op.m)
    eta = np.empty(n)
    work_n = np.empty(n)
    resid = np.empty(n)
    first_active = np.full(p + op.m, -1, dtype=np.int64)

    state = SolverState(k=0, t=0.0, beta0=beta0, beta_pre=beta, z=z, gamma=gamma)
    path.points.append(_record(state, data, family, op, config))
    for k in range(1, config.max_iters + 1):
        np.dot(X, beta, out=eta)
        np.add(eta, beta0, out=eta)
        if logistic:
            np.multiply(neg_y, eta, out=work_n)
            expit(work_n, out=work_n)
            np.multiply(neg_y, work_n, out=resid)
        else:
            np.subtract(eta, y, out=resid)
        g_beta0 = float(resid.sum()) / n
        gap = Dm @ beta
        np.subtract(gap, gamma, out=gap)
        g_beta = X.T @ resid / n + DmT @ gap / nu
        if intercept:
            beta0 = beta0 - ka * g_beta0
        np.multiply(g_beta, ka, out=g_beta)
        np.subtract(beta, g_beta, out=beta)
        # z step: z - alpha * (-gap / nu)
        np.negative(gap, out=gap)
        np.divide(gap, nu, out=gap)
        np.multiply(gap, alpha, out=gap)
        np.subtract(z, gap, out=z)
        gv = shrink_nonneg(z[:p], 1.0) if nonneg else shrink(z[:p], 1.0)
        gamma[:p] = gv
        gamma[p:] = shrink(z[p:], 1.0)
        np.multiply(gamma, kappa, out=gamma)
        if not np.isfinite(beta @ beta + z @ z + beta0):
            raise DivergenceError(f"divergence at iteration {k}; check step size")
        newly = (gamma != 0.0) & (first_active < 0)
        if newly.any():
            first_active[newly] = k
        if k % record_every == 0 or k == config.max_iters:
            state = SolverState(k=k, t=k * alpha, beta0=beta0, beta_pre=beta,
                                z=z, gamma=gamma)
            path.points.append(_record(state, data, family, op, config))
    path.first_active = first_active
    return path


def select_stopping_time(path: RegularizationPath, validation_data: Dataset, family):
    """Recorded point whose beta_pre classifies the validation set best.

    Ties resolve to the earliest time. Labels must be in {-1, +1}.
    """
    from .metrics import accuracy

    _as_family(family)
    if validation_data.n == 0:
        raise ValueError("empty validation set")
    best_idx, best_acc = 0, -1.0
    for i, pt in enumerate(path.points):
        scores = validation_data.X @ pt.beta_pre + pt.beta0
        acc = accuracy(scores, validation_data.y)
        if acc > best_acc:
            best_idx, best_acc = i, acc
    return path.points[best_idx]
