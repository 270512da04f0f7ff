"""Max-min rate maximization over the RIS phases.

The non-smooth minimum over users is replaced by the log-sum-exp lower bound

    f(theta) = -(1/mu) ln sum_k exp(-mu r_k(theta)),

which underestimates min_k r_k by at most ln(K)/mu.  Ascent uses the exact
analytic rate gradients, an Armijo backtracking line search and Nesterov
momentum; the objective is 2 pi periodic in every coordinate, so the search
is unconstrained and phases are wrapped only on output.
"""
from __future__ import annotations

import dataclasses
import time
from dataclasses import dataclass, field

import numpy as np
from numpy.typing import NDArray

from .config import NumericalError
from .channel import StatisticalChannel
from .gradients import rate_values_and_gradients
from .rates import PhaseConfig, TWO_PI
from .reduction import ReducedMoments, reduce_channel


def smoothed_min(values: NDArray[np.floating], mu: float) -> float:
    """Log-sum-exp softmin, max-shifted for stability.

    Satisfies min(values) - ln(K)/mu <= result <= min(values).
    """
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ValueError("need at least one value")
    if mu <= 0.0:
        raise ValueError("smoothing constant must be positive")
    low = values.min()
    return float(low - np.log(np.sum(np.exp(-mu * (values - low)))) / mu)


def softmin_weights(values: NDArray[np.floating], mu: float) -> NDArray[np.floating]:
    """Normalized exp(-mu v_k) weights (gradient of the softmin)."""
    values = np.asarray(values, dtype=float)
    shifted = np.exp(-mu * (values - values.min()))
    return shifted / shifted.sum()


@dataclass
class OptimizerConfig:
    """Smoothing, stopping and line-search parameters."""

    mu: float = 200.0            # softmin sharpness
    tol: float = 1e-4            # stop when the objective gain drops below this
    max_iter: int = 500
    kappa0: float = 1.0          # initial line-search step
    shrink: float = 0.5          # backtracking contraction factor
    armijo_c: float = 1e-4       # sufficient-increase constant
    max_shrinks: int = 50
    seed: int = 0                # initial-phase draw
    use_reduced: bool = True     # evaluate through the visibility supports

    def __post_init__(self) -> None:
        if self.mu <= 0.0 or self.tol <= 0.0:
            raise ValueError("mu and tol must be positive")
        if not 0.0 < self.shrink < 1.0:
            raise ValueError("shrink factor must lie in (0, 1)")
        if not 0.0 < self.armijo_c < 1.0:
            raise ValueError("Armijo constant must lie in (0, 1)")


class RateObjective:
    """Smoothed min-rate objective with analytic gradient.

    With ``use_reduced`` the plain value path runs on the per-user
    region-sized extracts and the gradient path on the sub-scenario
    restricted to the union of the regions (coordinates outside any region
    have zero gradient); both agree with the full-size computation.
    """

    def __init__(self, stat: StatisticalChannel, p: float | None = None,
                 sigma2: float | None = None, mu: float = 200.0,
                 use_reduced: bool = False):
        self.stat = stat
        self.p = stat.cfg.p if p is None else p
        self.sigma2 = stat.cfg.sigma2 if sigma2 is None else sigma2
        self.mu = mu
        self.n = stat.n_ris
        self._reduced = None
        self._grad_stat = stat
        self._union: NDArray[np.intp] | None = None
        if use_reduced:
            self._reduced = reduce_channel(stat, PhaseConfig.zeros(self.n))
            union = np.unique(np.concatenate([vr.nu for vr in stat.vrs]))
            if union.size < self.n:
                self._union = union
                self._grad_stat = stat.restrict(union)

    def rates(self, theta: NDArray[np.floating]) -> NDArray[np.floating]:
        if self._reduced is not None:
            reduced = dataclasses.replace(
                self._reduced,
                theta_star=[np.asarray(theta)[idx] for idx in self._reduced.nu])
            rep = ReducedMoments(reduced).report(self.p, self.sigma2, "objective")
        else:
            from .rates import FullMoments
            rep = FullMoments(self.stat, np.exp(1j * np.asarray(theta))).report(
                self.p, self.sigma2, "objective")
        return rep.rates

    def value(self, theta: NDArray[np.floating]) -> float:
        return smoothed_min(self.rates(theta), self.mu)

    def value_grad_rates(self, theta: NDArray[np.floating]):
        theta = np.asarray(theta, dtype=float)
        sub_theta = theta if self._union is None else theta[self._union]
        rates, _, grads = rate_values_and_gradients(
            self._grad_stat, sub_theta, self.p, self.sigma2)
        value = smoothed_min(rates, self.mu)
        weights = softmin_weights(rates, self.mu)
        grad_sub = weights @ grads
        if self._union is None:
            return value, grad_sub, rates
        grad = np.zeros(theta.size)
        grad[self._union] = grad_sub
        return value, grad, rates

    def value_and_grad(self, theta: NDArray[np.floating]):
        value, grad, _ = self.value_grad_rates(theta)
        return value, grad


def grad_objective(stat: StatisticalChannel, phi: PhaseConfig,
                   p: float | None = None, sigma2: float | None = None,
                   mu: float = 200.0) -> NDArray[np.floating]:
    """Gradient of the smoothed min-rate at the given phases."""
    obj = RateObjective(stat, p=p, sigma2=sigma2, mu=mu)
    _, grad = obj.value_and_grad(phi.theta)
    return grad


def backtracking_step(objective, theta: NDArray[np.floating], f0: float,
                      grad: NDArray[np.floating], kappa0: float = 1.0,
                      shrink: float = 0.5, armijo_c: float = 1e-4,
                      max_shrinks: int = 50) -> float:
    """Largest step kappa0 * shrink^m satisfying the Armijo ascent condition

        f(theta + kappa g) >= f(theta) + c kappa |g|^2,

    or 0.0 when ``max_shrinks`` contractions fail (stalled search).
    """
    gnorm2 = float(np.dot(grad, grad))
    if gnorm2 == 0.0:
        raise ValueError("line search needs a nonzero gradient")
    kappa = kappa0
    for _ in range(max_shrinks + 1):
        f_trial = objective(theta + kappa * grad)
        if not np.isfinite(f_trial):
            raise NumericalError("objective became non-finite during line search")
        if f_trial >= f0 + armijo_c * kappa * gnorm2:
            return kappa
        kappa *= shrink
    return 0.0


@dataclass
class OptimizerState:
    """Snapshot of one ascent iteration for the convergence trace."""

    iteration: int
    objective: float
    min_rate: float
    kappa: float
    grad_norm: float


@dataclass
class OptimizeResult:
    theta: NDArray[np.floating]      # incumbent best phases, wrapped to [0, 2 pi)
    value: float                     # smoothed objective at the incumbent
    min_rate: float                  # exact min rate at the incumbent
    iterations: int
    converged: bool
    trace: list[OptimizerState] = field(default_factory=list)
    wall_time: float = 0.0


def optimize(stat: StatisticalChannel, cfg: OptimizerConfig | None = None,
             p: float | None = None, sigma2: float | None = None,
             theta0: NDArray[np.floating] | None = None) -> OptimizeResult:
    """Accelerated gradient ascent on the smoothed min rate.

    Each iteration takes an Armijo step along the gradient, then applies the
    momentum extrapolation

        e_{i+1} = (1 + sqrt(4 e_i^2 + 1)) / 2,
        theta_{i+1} = x_i + (e_i - 1)/(e_{i+1}) (x_i - x_{i-1}),

    and stops once the objective gain falls below ``tol`` (the extrapolation
    is not monotone, so the best iterate seen is tracked and returned).
    """
    cfg = OptimizerConfig() if cfg is None else cfg
    obj = RateObjective(stat, p=p, sigma2=sigma2, mu=cfg.mu,
                        use_reduced=cfg.use_reduced)
    rng = np.random.default_rng(cfg.seed)
    if theta0 is None:
        theta = rng.uniform(0.0, TWO_PI, size=stat.n_ris)
    else:
        theta = np.asarray(theta0, dtype=float).copy()

    start = time.perf_counter()
    f_curr, grad, _ = obj.value_grad_rates(theta)
    best_theta, best_value = theta.copy(), f_curr
    x_prev = theta.copy()
    e_i = 1.0
    trace: list[OptimizerState] = []
    converged = False
    iteration = 0
    for iteration in range(cfg.max_iter):
        gnorm = float(np.linalg.norm(grad))
        if gnorm == 0.0:
            converged = True
            break
        kappa = backtracking_step(obj.value, theta, f_curr, grad,
                                  kappa0=cfg.kappa0, shrink=cfg.shrink,
                                  armijo_c=cfg.armijo_c,
                                  max_shrinks=cfg.max_shrinks)
        x_curr = theta + kappa * grad
        e_next = (1.0 + np.sqrt(4.0 * e_i * e_i + 1.0)) / 2.0
        theta_next = x_curr + (e_i - 1.0) / e_next * (x_curr - x_prev)
        f_next, grad_next, rates_next = obj.value_grad_rates(theta_next)
        if f_next > best_value:
            best_theta, best_value = theta_next.copy(), f_next
        x_at_best = obj.value(x_curr)
        if x_at_best > best_value:
            best_theta, best_value = x_curr.copy(), x_at_best
        trace.append(OptimizerState(iteration=iteration, objective=f_next,
                                    min_rate=float(rates_next.min()),
                                    kappa=kappa, grad_norm=gnorm))
        improvement = f_next - f_curr
        theta, x_prev, e_i = theta_next, x_curr, e_next
        f_curr, grad = f_next, grad_next
        if improvement < cfg.tol:
            converged = True
            iteration += 1
            break
    else:
        iteration = cfg.max_iter

    wall = time.perf_counter() - start
    best_theta = np.mod(best_theta, TWO_PI)
    return OptimizeResult(theta=best_theta, value=best_value,
                          min_rate=float(obj.rates(best_theta).min()),
                          iterations=iteration, converged=converged,
                          trace=trace, wall_time=wall)
