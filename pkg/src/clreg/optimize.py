"""Derivative-free minimisation of the description length with feature culling."""

from __future__ import annotations

import logging
import math
from dataclasses import asdict, dataclass, field

import numpy as np

from .objective import DesignMatrix, ObjectiveFunction, clr_objective, exact_description_length, sharpen
from .ratcode import DEFAULT_CONSTANTS, AlphaApproxConstants
from .sphere import CapacityError, DEFAULT_BUDGET

log = logging.getLogger(__name__)


class InitializationError(RuntimeError):
    pass


@dataclass
class OptimizerConfig:
    max_iter_per_dim: int = 400
    tol: float = 1e-3
    max_cull_rounds: int = 20
    reflection: float = 1.0
    expansion: float = 2.0
    contraction: float = 0.5
    shrink: float = 0.5
    restarts: int = 0
    seed: int = 0
    exact_budget: int = DEFAULT_BUDGET

    def __post_init__(self):
        if self.tol <= 0 or self.max_iter_per_dim <= 0 or self.max_cull_rounds < 1:
            raise ValueError("tolerances and iteration limits must be positive")
        if not (self.reflection > 0 and self.expansion > max(1.0, self.reflection)
                and 0 < self.contraction < 1 and 0 < self.shrink < 1):
            raise ValueError("invalid simplex coefficients")
        if self.restarts < 0:
            raise ValueError("restarts must be >= 0")

    @classmethod
    def from_dict(cls, d: dict | None) -> "OptimizerConfig":
        return cls(**(d or {}))

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass
class SimplexResult:
    x: np.ndarray
    fun: float
    n_iter: int
    n_evals: int
    converged: bool
    trace: list = field(default_factory=list)


@dataclass
class CLRModel:
    active_features: tuple
    theta: np.ndarray
    delta: np.ndarray
    theta_sharp: np.ndarray
    description_length_bits: float
    param_bits: float
    residual_bits: float
    n_features: int
    exact_bits: int | None = None
    initial_bits: float | None = None
    cull_rounds: int = 0
    round_limit_hit: bool = False

    def full_theta(self, sharp: bool = False) -> np.ndarray:
        out = np.zeros(self.n_features)
        out[list(self.active_features)] = self.theta_sharp if sharp else self.theta
        return out

    def full_delta(self, fill: float = 1.0) -> np.ndarray:
        out = np.full(self.n_features, fill)
        out[list(self.active_features)] = self.delta
        return out

    def to_dict(self) -> dict:
        return {
            "active_features": [int(i) for i in self.active_features],
            "n_features": int(self.n_features),
            "theta": [float(t) for t in self.theta],
            "delta": [float(d) for d in self.delta],
            "theta_sharp": [float(t) for t in self.theta_sharp],
            "description_length_bits": float(self.description_length_bits),
            "param_bits": float(self.param_bits),
            "residual_bits": float(self.residual_bits),
            "exact_bits": None if self.exact_bits is None else int(self.exact_bits),
            "initial_bits": None if self.initial_bits is None else float(self.initial_bits),
            "cull_rounds": int(self.cull_rounds),
            "round_limit_hit": bool(self.round_limit_hit),
        }

    @classmethod
    def from_dict(cls, d: dict) -> "CLRModel":
        return cls(
            active_features=tuple(int(i) for i in d["active_features"]),
            theta=np.asarray(d["theta"], float),
            delta=np.asarray(d["delta"], float),
            theta_sharp=np.asarray(d["theta_sharp"], float),
            description_length_bits=float(d["description_length_bits"]),
            param_bits=float(d["param_bits"]),
            residual_bits=float(d["residual_bits"]),
            n_features=int(d["n_features"]),
            exact_bits=d.get("exact_bits"),
            initial_bits=d.get("initial_bits"),
            cull_rounds=int(d.get("cull_rounds", 0)),
            round_limit_hit=bool(d.get("round_limit_hit", False)),
        )


def ols_init(dm: DesignMatrix) -> np.ndarray:
    """Least-squares parameters; minimum-norm solution when rank deficient."""
    if dm.n_features == 0:
        return np.zeros(0)
    theta, *_ = np.linalg.lstsq(dm.X.T, dm.y, rcond=None)
    return theta


def simplex_minimize(func, x0, config: OptimizerConfig | None = None, steps=None,
                     max_iter: int | None = None) -> SimplexResult:
    """Nelder-Mead downhill simplex.

    Stops when the spread of objective values over the simplex drops below
    ``config.tol`` or after ``max_iter`` iterations (default
    ``config.max_iter_per_dim * len(x0)``).  ``trace`` holds the best value
    after every iteration.
    """
    config = config or OptimizerConfig()
    x0 = np.asarray(x0, dtype=float)
    n = x0.size
    if max_iter is None:
        max_iter = config.max_iter_per_dim * max(n, 1)
    f0 = float(func(x0))
    if not math.isfinite(f0):
        raise InitializationError("objective is not finite at the start point")
    n_evals = 1
    if n == 0:
        return SimplexResult(x0, f0, 0, n_evals, True, [f0])
    if steps is None:
        steps = np.where(x0 != 0, 0.05 * np.abs(x0), 0.00025)
    steps = np.broadcast_to(np.asarray(steps, float), (n,))

    sim = np.empty((n + 1, n))
    fsim = np.empty(n + 1)
    sim[0], fsim[0] = x0, f0
    for i in range(n):
        x = x0.copy()
        x[i] += steps[i]
        sim[i + 1] = x
        fsim[i + 1] = func(x)
        n_evals += 1

    rho, chi, psi, sigma = config.reflection, config.expansion, config.contraction, config.shrink
    trace = []
    converged = False
    it = 0
    while it < max_iter:
        order = np.argsort(fsim, kind="stable")
        sim, fsim = sim[order], fsim[order]
        trace.append(float(fsim[0]))
        if fsim[-1] - fsim[0] <= config.tol:
            converged = True
            break
        it += 1
        centroid = sim[:-1].mean(axis=0)
        xr = centroid + rho * (centroid - sim[-1])
        fr = func(xr)
        n_evals += 1
        if fr < fsim[0]:
            xe = centroid + rho * chi * (centroid - sim[-1])
            fe = func(xe)
            n_evals += 1
            if fe < fr:
                sim[-1], fsim[-1] = xe, fe
            else:
                sim[-1], fsim[-1] = xr, fr
        elif fr < fsim[-2]:
            sim[-1], fsim[-1] = xr, fr
        else:
            if fr < fsim[-1]:
                xc = centroid + psi * rho * (centroid - sim[-1])
                fc = func(xc)
                n_evals += 1
                accept = fc <= fr
            else:
                xc = centroid - psi * (centroid - sim[-1])
                fc = func(xc)
                n_evals += 1
                accept = fc < fsim[-1]
            if accept:
                sim[-1], fsim[-1] = xc, fc
            else:
                for j in range(1, n + 1):
                    sim[j] = sim[0] + sigma * (sim[j] - sim[0])
                    fsim[j] = func(sim[j])
                    n_evals += 1
    order = np.argsort(fsim, kind="stable")
    sim, fsim = sim[order], fsim[order]
    if not trace or trace[-1] != fsim[0]:
        trace.append(float(fsim[0]))
    return SimplexResult(sim[0].copy(), float(fsim[0]), it, n_evals, converged, trace)


def _initial_delta(dm: DesignMatrix, theta: np.ndarray) -> np.ndarray:
    delta = np.abs(theta) / 2.0
    zero = delta <= 0
    if np.any(zero):
        sd_y = float(np.std(dm.y)) or 1.0
        for i in np.nonzero(zero)[0]:
            x = dm.X[i]
            scale = float(np.std(x)) or float(np.sqrt(np.mean(x * x))) or 1.0
            delta[i] = 1e-3 * sd_y / scale
    return delta


def _minimize_description(fobj: ObjectiveFunction, theta0, delta0, config: OptimizerConfig):
    # default simplex: 5% of each coordinate of [theta, log delta].  Wider
    # initial simplices wander into delta > |theta| for every feature and
    # culling then strips nearly all of them.
    v0 = np.concatenate([theta0, np.log(delta0)])
    res = simplex_minimize(fobj, v0, config)
    for _ in range(config.restarts):
        again = simplex_minimize(fobj, res.x, config)
        if again.fun > res.fun - config.tol:
            if again.fun < res.fun:
                res = again
            break
        res = again
    return res


def fit_clr(dm: DesignMatrix, config: OptimizerConfig | None = None,
            constants: AlphaApproxConstants = DEFAULT_CONSTANTS, exempt=(),
            offset: float | None = None, compute_exact: bool = True) -> CLRModel:
    """Fit by repeated simplex descent, culling parameters with delta_i > |theta_i|.

    ``exempt`` lists feature indices (e.g. the bias row) that are never culled.
    ``offset`` anchors the target quantization for the exact bit count
    (defaults to ``min(y)``).
    """
    config = config or OptimizerConfig()
    exempt = set(int(i) for i in exempt)
    active = list(range(dm.n_features))
    if offset is None:
        offset = float(np.min(dm.y))
    initial_bits = None
    rounds = 0
    limit_hit = False
    theta = delta = np.zeros(0)
    while True:
        sub = dm.subset(active)
        theta0 = ols_init(sub)
        delta0 = _initial_delta(sub, theta0)
        fobj = ObjectiveFunction(sub, constants)
        if initial_bits is None:
            initial_bits = fobj(np.concatenate([theta0, np.log(delta0)])) if active else \
                clr_objective(sub, theta0, delta0, constants).total_bits
        if not active:
            theta, delta = theta0, delta0
            break
        res = _minimize_description(fobj, theta0, delta0, config)
        k = len(active)
        theta, delta = res.x[:k], np.exp(res.x[k:])
        cull = [j for j, i in enumerate(active) if i not in exempt and delta[j] > abs(theta[j])]
        if not cull:
            break
        if rounds >= config.max_cull_rounds:
            limit_hit = True
            log.warning("culling stopped after %d rounds", rounds)
            break
        rounds += 1
        active = [i for j, i in enumerate(active) if j not in set(cull)]

    sub = dm.subset(active)
    ev = clr_objective(sub, theta, delta, constants)
    model = CLRModel(
        active_features=tuple(active),
        theta=np.asarray(theta, float),
        delta=np.asarray(delta, float),
        theta_sharp=sharpen(theta, delta),
        description_length_bits=ev.total_bits,
        param_bits=ev.param_bits,
        residual_bits=ev.residual_bits,
        n_features=dm.n_features,
        initial_bits=float(initial_bits),
        cull_rounds=rounds,
        round_limit_hit=limit_hit,
    )
    if compute_exact:
        model.exact_bits = model_exact_bits(dm, model, offset, config.exact_budget)
    return model


def model_exact_bits(dm: DesignMatrix, model: CLRModel, offset: float,
                     budget: int = DEFAULT_BUDGET) -> int | None:
    """Exact code length with every feature coded (culled ones as zero), or
    ``None`` when the residual is beyond exact-count capacity."""
    try:
        return exact_description_length(dm, model.full_theta(), model.full_delta(), offset, budget)
    except CapacityError:
        return None
