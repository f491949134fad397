"""Gradient-based trajectory repair against a temporal formula.

The decision variables are the poses of the movable objects at steps
1..T; the step-0 pose is pinned to the initial state. The loss is a hinge
on smooth robustness plus a second-difference smoothness penalty:

    L = relu(eta - rho_smooth) + lam * sum_t |p[t+1] - 2 p[t] + p[t-1]|^2

with the heading component of the second difference computed on wrapped
angle increments. Descent is plain gradient descent by default; Adam is
available behind a flag. The smoothing temperature anneals towards its
final value over the last stretch of the run so early iterations see a
wider basin and late ones a tighter fit.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Sequence

from . import autodiff as ad
from .autodiff import Scalar, value_of
from .formulas import Formula, Trajectory, atoms_of, eval_exact, eval_smooth
from .geometry import Pose2D, PolygonTemplate, SmoothingConfig
from .predicates import Scene, SceneObject


class OptimizationError(RuntimeError):
    """Non-finite loss or an ill-posed problem."""


PoseTriple = tuple[float, float, float]


@dataclass
class Movable:
    """An object whose pose sequence is subject to optimization.

    The object's heading in every scene is its pose heading, so oriented
    constraints see the same angle the smoothness penalty regularizes.
    """
    name: str
    template: PolygonTemplate
    initial_poses: list[PoseTriple]

    def __post_init__(self):
        if len(self.initial_poses) < 2:
            raise OptimizationError(
                f"movable {self.name!r}: need at least 2 poses (got {len(self.initial_poses)})")


@dataclass
class Problem:
    formula: Formula
    statics: list[SceneObject]
    movables: list[Movable]

    def __post_init__(self):
        if not self.movables:
            raise OptimizationError("no movable objects; nothing to optimize")
        horizons = {len(m.initial_poses) for m in self.movables}
        if len(horizons) != 1:
            raise OptimizationError(f"movables disagree on horizon: {sorted(horizons)}")
        names = {s.name for s in self.statics} | {m.name for m in self.movables}
        if len(names) != len(self.statics) + len(self.movables):
            raise OptimizationError("duplicate object name across statics and movables")
        for atom in atoms_of(self.formula):
            for obj in atom.objects:
                if obj not in names:
                    raise OptimizationError(f"formula references unknown object {obj!r}")

    @property
    def horizon(self) -> int:
        return len(self.movables[0].initial_poses) - 1


@dataclass(frozen=True)
class OptimizerConfig:
    step_size: float = 5e-2
    iterations: int = 500
    satisfaction_margin: float = 0.1    # hinge target on smooth robustness
    smoothness_weight: float = 1e-2
    tau_start: float = 1e-2
    tau_end: float = 1e-3
    anneal_fraction: float = 0.2        # trailing fraction that anneals tau
    samples_per_edge: int = 16
    sigmoid_scale: float = 50.0
    use_adam: bool = False
    adam_beta1: float = 0.9
    adam_beta2: float = 0.999
    adam_eps: float = 1e-8
    stall_grad_norm: float = 1e-6
    stall_patience: int = 5
    perturbation: float = 1e-3
    seed: int = 0
    snapshot_iterations: tuple = ()   # iterations whose poses are kept for rendering

    def __post_init__(self):
        if self.iterations < 1:
            raise OptimizationError("iterations must be >= 1")
        if self.step_size <= 0 or self.tau_start <= 0 or self.tau_end <= 0:
            raise OptimizationError("step size and temperatures must be positive")
        if not 0.0 <= self.anneal_fraction <= 1.0:
            raise OptimizationError("anneal_fraction must lie in [0, 1]")

    def tau_at(self, iteration: int) -> float:
        """Constant tau_start, then log-linear decay to tau_end over the
        trailing anneal_fraction of the run."""
        start = int(math.ceil(self.iterations * (1.0 - self.anneal_fraction)))
        if iteration < start or self.iterations - 1 <= start:
            return self.tau_start
        frac = (iteration - start) / (self.iterations - 1 - start)
        return math.exp((1.0 - frac) * math.log(self.tau_start)
                        + frac * math.log(self.tau_end))


@dataclass(frozen=True)
class TraceRow:
    iteration: int
    loss: float
    robustness_smooth: float
    robustness_exact: float
    gradient_norm: float
    tau: float


@dataclass
class OptimizationResult:
    """Best iterate found, judged by exact robustness.

    success reflects the exact semantics at the returned poses; the smooth
    surrogate never decides it.
    """
    success: bool
    reached_margin: bool
    robustness_exact: float
    robustness_smooth: float
    iterations_run: int
    poses: dict[str, list[PoseTriple]]
    trace: list[TraceRow]
    snapshots: dict[int, dict[str, list[PoseTriple]]]


def _flatten(movables: Sequence[Movable]) -> list[float]:
    flat: list[float] = []
    for m in movables:
        for pose in m.initial_poses[1:]:
            flat.extend(pose)
    return flat


def _poses_from_flat(problem: Problem, flat: Sequence[Scalar]) -> dict[str, list[tuple]]:
    """Rebuild per-movable pose lists; step 0 keeps its fixed float pose."""
    out: dict[str, list[tuple]] = {}
    i = 0
    for m in problem.movables:
        poses: list[tuple] = [m.initial_poses[0]]
        for _ in range(len(m.initial_poses) - 1):
            poses.append((flat[i], flat[i + 1], flat[i + 2]))
            i += 3
        out[m.name] = poses
    return out


def build_trajectory(problem: Problem, poses: dict[str, list[tuple]]) -> Trajectory:
    """Scenes for steps 0..T with statics shared and movables placed."""
    scenes = []
    for t in range(problem.horizon + 1):
        objs = list(problem.statics)
        for m in problem.movables:
            x, y, theta = poses[m.name][t]
            pose = Pose2D(x, y, theta)
            objs.append(SceneObject(m.name, m.template.at(pose), pose.heading()))
        scenes.append(Scene(objs))
    return Trajectory(scenes)


def _smoothness_penalty(problem: Problem, poses: dict[str, list[tuple]]) -> Scalar:
    total: Scalar = 0.0
    for m in problem.movables:
        ps = poses[m.name]
        for t in range(1, len(ps) - 1):
            ddx = ps[t + 1][0] - 2.0 * ps[t][0] + ps[t - 1][0]
            ddy = ps[t + 1][1] - 2.0 * ps[t][1] + ps[t - 1][1]
            # second difference of heading built from wrapped increments so
            # a crossing of +-pi does not register as a jump
            d1 = ad.wrap_angle(ps[t + 1][2] - ps[t][2])
            d0 = ad.wrap_angle(ps[t][2] - ps[t - 1][2])
            ddt = d1 - d0
            total = total + ad.square(ddx) + ad.square(ddy) + ad.square(ddt)
    return total


def evaluate_poses(problem: Problem, poses: dict[str, list[tuple]],
                   tau: float, cfg: OptimizerConfig) -> tuple[float, float]:
    """(smooth, exact) robustness of the formula at the given float poses."""
    traj = build_trajectory(problem, poses)
    scfg = SmoothingConfig(tau=tau, samples_per_edge=cfg.samples_per_edge,
                           sigmoid_scale=cfg.sigmoid_scale)
    smooth = eval_smooth(problem.formula, traj, cfg=scfg).value
    exact = eval_exact(problem.formula, traj).value
    return smooth, exact


def optimize(problem: Problem, cfg: OptimizerConfig = OptimizerConfig()) -> OptimizationResult:
    """Run the descent loop; returns the best iterate by exact robustness.

    Stops early once exact robustness reaches the hinge margin. A run of
    stall_patience iterations with gradient norm under stall_grad_norm
    triggers a small seeded perturbation of the decision vector.
    """
    flat = _flatten(problem.movables)
    rng = random.Random(cfg.seed)
    trace: list[TraceRow] = []
    snap_at = set(cfg.snapshot_iterations)
    snapshots: dict[int, dict[str, list[PoseTriple]]] = {}

    def float_pose_dict(vec):
        return {name: [tuple(float(c) for c in p) for p in ps]
                for name, ps in _poses_from_flat(problem, vec).items()}

    best_exact = -math.inf
    best_flat = list(flat)
    best_smooth = -math.inf
    reached_margin = False
    stalled = 0

    adam_m = [0.0] * len(flat)
    adam_v = [0.0] * len(flat)
    adam_t = 0

    iterations_run = 0
    for it in range(cfg.iterations):
        iterations_run = it + 1
        tau = cfg.tau_at(it)
        if it in snap_at:
            snapshots[it] = float_pose_dict(flat)

        tape = ad.Tape()
        vars_ = [tape.var(v) for v in flat]
        poses = _poses_from_flat(problem, vars_)
        traj = build_trajectory(problem, poses)
        scfg = SmoothingConfig(tau=tau, samples_per_edge=cfg.samples_per_edge,
                               sigmoid_scale=cfg.sigmoid_scale)
        res = eval_smooth(problem.formula, traj, cfg=scfg)
        rho_node: Scalar = res.node if res.node is not None else res.value
        hinge = ad.relu(cfg.satisfaction_margin - rho_node)
        loss = hinge + cfg.smoothness_weight * _smoothness_penalty(problem, poses)

        loss_val = value_of(loss)
        if not math.isfinite(loss_val):
            raise OptimizationError(f"non-finite loss at iteration {it}")

        float_poses = _poses_from_flat(problem, flat)
        rho_exact = eval_exact(problem.formula, build_trajectory(problem, float_poses)).value

        if isinstance(loss, ad.Var):
            grads = ad.backward(loss)
            grad = [grads.wrt(v) for v in vars_]
        else:
            grad = [0.0] * len(flat)
        gnorm = math.sqrt(math.fsum(g * g for g in grad))

        trace.append(TraceRow(it, loss_val, res.value, rho_exact, gnorm, tau))

        if rho_exact > best_exact:
            best_exact = rho_exact
            best_smooth = res.value
            best_flat = list(flat)

        if rho_exact >= cfg.satisfaction_margin:
            reached_margin = True
            break

        if gnorm < cfg.stall_grad_norm:
            stalled += 1
            if stalled >= cfg.stall_patience:
                flat = [v + rng.uniform(-cfg.perturbation, cfg.perturbation) for v in flat]
                stalled = 0
                continue
        else:
            stalled = 0

        if cfg.use_adam:
            adam_t += 1
            for k, g in enumerate(grad):
                adam_m[k] = cfg.adam_beta1 * adam_m[k] + (1.0 - cfg.adam_beta1) * g
                adam_v[k] = cfg.adam_beta2 * adam_v[k] + (1.0 - cfg.adam_beta2) * g * g
                mhat = adam_m[k] / (1.0 - cfg.adam_beta1 ** adam_t)
                vhat = adam_v[k] / (1.0 - cfg.adam_beta2 ** adam_t)
                flat[k] -= cfg.step_size * mhat / (math.sqrt(vhat) + cfg.adam_eps)
        else:
            flat = [v - cfg.step_size * g for v, g in zip(flat, grad)]

    return OptimizationResult(
        success=best_exact > 0.0,
        reached_margin=reached_margin,
        robustness_exact=best_exact,
        robustness_smooth=best_smooth,
        iterations_run=iterations_run,
        poses=float_pose_dict(best_flat),
        trace=trace,
        snapshots=snapshots,
    )
