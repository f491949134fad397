"""Mining directional temporal properties from demonstrations.

The candidate pool is every {always, eventually} x directional-relation x
(subject, obstacle) combination over each declared phase window. A
candidate survives when its worst-case exact robustness across the
demonstration set is strictly positive; per (phase, obstacle) group only
the most robust few are kept, so the mined description stays small.

Margins are then widened per retained formula. Directional robustness is
additive in the clearance threshold, rho(kappa + eps) = rho(kappa) - eps,
so the largest admissible widening has the closed form

    eps_k = min over demonstrations of rho_k(kappa)

The gradient-ascent estimator from the same additive structure is run as
well and cross-checked against the closed form; the closed form is what
ends up in the result.
"""
from __future__ import annotations

import math
import random
from dataclasses import dataclass
from typing import Optional, Sequence

from . import autodiff as ad
from .formulas import Always, Atom, Eventually, Formula, Trajectory, eval_exact
from .predicates import (AxisAlignedBox3, PredicateKind, PredicateParams, Scene,
                         SceneObject)


class MiningError(ValueError):
    """Ill-formed demonstration set or mining configuration."""


DIRECTIONAL_KINDS = (PredicateKind.LEFT_OF, PredicateKind.RIGHT_OF,
                     PredicateKind.BEHIND, PredicateKind.IN_FRONT_OF,
                     PredicateKind.BELOW, PredicateKind.ABOVE)


@dataclass(frozen=True)
class Phase:
    name: str
    lo: int
    hi: int

    def __post_init__(self):
        if self.lo < 0 or self.hi < self.lo:
            raise MiningError(f"phase {self.name!r}: bad window [{self.lo},{self.hi}]")


@dataclass
class DemonstrationSet:
    subject: str
    obstacles: list[str]
    phases: list[Phase]
    trajectories: list[Trajectory]

    def __post_init__(self):
        if not self.trajectories:
            raise MiningError("no demonstrations")
        if not self.obstacles:
            raise MiningError("no obstacles to relate the subject to")
        horizons = {t.horizon for t in self.trajectories}
        if len(horizons) != 1:
            raise MiningError(f"demonstrations disagree on horizon: {sorted(horizons)}")
        horizon = horizons.pop()
        spans = sorted((p.lo, p.hi, p.name) for p in self.phases)
        for (lo, hi, name), (lo2, _, name2) in zip(spans, spans[1:]):
            if lo2 <= hi:
                raise MiningError(f"phases {name!r} and {name2!r} overlap")
        for p in self.phases:
            if p.hi > horizon:
                raise MiningError(f"phase {p.name!r} ends at {p.hi}, past horizon {horizon}")
        names = [self.subject] + self.obstacles
        for traj in self.trajectories:
            scene = traj.scene(0)
            for n in names:
                scene.get(n)


@dataclass(frozen=True)
class Candidate:
    temporal: str  # "G" or "F"
    kind: PredicateKind
    phase: Phase
    obstacle: str

    def formula(self, subject: str, kappa: float) -> Formula:
        atom = Atom(self.kind, (subject, self.obstacle),
                    PredicateParams.for_kind(self.kind, [kappa]))
        cls = Always if self.temporal == "G" else Eventually
        return cls(self.phase.lo, self.phase.hi, atom)

    def describe(self) -> str:
        return (f"{self.temporal}[{self.phase.lo},{self.phase.hi}] "
                f"{self.kind.value}(subject, {self.obstacle})")


def enumerate_candidates(demos: DemonstrationSet) -> list[Candidate]:
    """All temporal-relation-obstacle-phase combinations, in a fixed order
    that doubles as the tie-break for retention."""
    out = []
    for phase in demos.phases:
        for obstacle in demos.obstacles:
            for temporal in ("F", "G"):
                for kind in DIRECTIONAL_KINDS:
                    out.append(Candidate(temporal, kind, phase, obstacle))
    return out


def robustness_matrix(candidates: Sequence[Candidate], demos: DemonstrationSet,
                      kappa: float) -> list[list[float]]:
    """Exact robustness, rows per candidate, columns per demonstration."""
    return [[eval_exact(c.formula(demos.subject, kappa), traj).value
             for traj in demos.trajectories]
            for c in candidates]


@dataclass
class RetainedFormula:
    candidate: Candidate
    per_demo: list[float]       # exact robustness at the base kappa

    @property
    def worst(self) -> float:
        return min(self.per_demo)


def discover(demos: DemonstrationSet, base_kappa: float = 0.05,
             keep_per_group: int = 2) -> list[RetainedFormula]:
    """Filter candidates on worst-case exact robustness, then keep the
    most robust keep_per_group per (phase, obstacle); ties fall back to
    enumeration order."""
    if base_kappa <= 0:
        raise MiningError("base_kappa must be positive")
    cands = enumerate_candidates(demos)
    matrix = robustness_matrix(cands, demos, base_kappa)
    retained: list[RetainedFormula] = []
    for phase in demos.phases:
        for obstacle in demos.obstacles:
            group = [(i, c) for i, c in enumerate(cands)
                     if c.phase == phase and c.obstacle == obstacle]
            positive = [(i, c) for i, c in group if min(matrix[i]) > 0.0]
            positive.sort(key=lambda ic: -min(matrix[ic[0]]))  # stable: order breaks ties
            for i, c in positive[:keep_per_group]:
                retained.append(RetainedFormula(c, list(matrix[i])))
    return retained


@dataclass
class LearnedMargin:
    candidate: Candidate
    margin: float            # closed form, the value to use
    margin_estimate: float   # gradient-ascent estimate, reported for comparison
    estimate_agrees: bool    # |estimate - closed form| within the check tolerance


def learn_margins(retained: Sequence[RetainedFormula], tau: float = 1e-3,
                  step_size: float = 5e-3, iterations: int = 3000,
                  penalty_weight: float = 50.0, check_tol: float = 0.05,
                  ) -> list[LearnedMargin]:
    """Widen each retained formula's clearance as far as the worst
    demonstration allows.

    The ascent maximizes sum(eps) - penalty * relu(-softmin of residuals)
    over the stacked residuals r[demo, k] - eps[k], projecting eps onto
    eps >= 0 each step. The step holds at full size long enough for every
    margin to climb to its boundary, then decays 10x: near the boundary
    the iterate hops between the two hinge slopes, so the final resolution
    is penalty_weight times the final step. The closed form min_demo
    r[., k] maximizes the same objective in the hard limit and is what
    the result carries.
    """
    if not retained:
        return []
    closed = [max(0.0, r.worst) for r in retained]

    eps = [0.0] * len(retained)
    decay_from = int(0.7 * iterations)
    for it in range(iterations):
        step = step_size
        if it >= decay_from:
            step /= 1.0 + 9.0 * (it - decay_from) / max(1, iterations - decay_from)
        tape = ad.Tape()
        evars = [tape.var(e) for e in eps]
        residuals = [r.per_demo[j] - evars[k]
                     for k, r in enumerate(retained)
                     for j in range(len(r.per_demo))]
        slack = ad.lse_min(residuals, tau)
        objective = sum(evars) - penalty_weight * ad.relu(-slack)
        grads = ad.backward(objective)
        eps = [max(0.0, e + step * grads.wrt(v)) for e, v in zip(eps, evars)]

    out = []
    for r, e_hat, e_star in zip(retained, eps, closed):
        out.append(LearnedMargin(r.candidate, e_star, e_hat,
                                 abs(e_hat - e_star) <= check_tol))
    return out


@dataclass
class MiningResult:
    retained: list[RetainedFormula]
    margins: list[LearnedMargin]
    candidates_considered: int
    base_kappa: float

    def formulas(self, subject: str) -> list[Formula]:
        return [r.candidate.formula(subject, self.base_kappa) for r in self.retained]

    def widened_formulas(self, subject: str) -> list[Formula]:
        return [m.candidate.formula(subject, self.base_kappa + m.margin)
                for m in self.margins]


def mine(demos: DemonstrationSet, base_kappa: float = 0.05,
         keep_per_group: int = 2) -> MiningResult:
    retained = discover(demos, base_kappa, keep_per_group)
    margins = learn_margins(retained)
    return MiningResult(retained, margins, len(enumerate_candidates(demos)),
                        base_kappa)


# -- synthetic demonstrations --------------------------------------------------
#
# A two-phase pick-and-retreat sweep around three box obstacles. The sweep
# geometry is chosen so that, for every noise draw within the sampled
# bounds, each (phase, obstacle) group retains exactly eventually(rightOf)
# and eventually(above) during the approach, and eventually(leftOf) and
# eventually(above) during the retreat: every competing positive candidate
# sits at least 0.5 below the weaker of the two planted ones, which is
# more than twice the noise amplitude.

APPROACH = Phase("approach", 0, 59)
RETREAT = Phase("retreat", 60, 118)

_OBSTACLE_BOXES = {
    "o1": ((3.0, 2.5, 3.0), (4.0, 5.5, 5.0)),
    "o2": ((4.5, 3.5, 3.2), (5.5, 6.5, 5.5)),
    "o3": ((5.8, 2.8, 3.0), (6.3, 6.0, 5.2)),
}

_ARM_HALF = (0.1, 0.1, 0.1)
_NOISE = 0.12


def _arm_center(t: int) -> tuple[float, float, float]:
    if t <= APPROACH.hi:
        f = t / APPROACH.hi
        return (5.0 + 4.5 * f, 4.5, 6.5 - 2.9 * f)
    f = (t - RETREAT.lo) / (RETREAT.hi - RETREAT.lo)
    return (5.0 - 4.6 * f, 4.5, 3.6 + 2.9 * f)


def planted_candidates() -> list[Candidate]:
    """The specification the synthetic sweeps are built to exhibit."""
    out = []
    for phase, kind in ((APPROACH, PredicateKind.RIGHT_OF),
                        (RETREAT, PredicateKind.LEFT_OF)):
        for obstacle in _OBSTACLE_BOXES:
            out.append(Candidate("F", kind, phase, obstacle))
            out.append(Candidate("F", PredicateKind.ABOVE, phase, obstacle))
    return out


def make_demo_set(seed: int = 0, n_demos: int = 5) -> DemonstrationSet:
    """Noisy rollouts of the two-phase sweep; deterministic per seed."""
    if n_demos < 1:
        raise MiningError("need at least one demonstration")
    rng = random.Random(seed)
    statics = [SceneObject(name, AxisAlignedBox3(lo, hi))
               for name, (lo, hi) in _OBSTACLE_BOXES.items()]
    trajectories = []
    for _ in range(n_demos):
        scenes = []
        for t in range(RETREAT.hi + 1):
            cx, cy, cz = _arm_center(t)
            cx += rng.uniform(-_NOISE, _NOISE)
            cy += rng.uniform(-_NOISE, _NOISE)
            cz += rng.uniform(-_NOISE, _NOISE)
            arm = AxisAlignedBox3.from_center(cx, cy, cz, _ARM_HALF)
            scenes.append(Scene([SceneObject("arm", arm)] + statics))
        trajectories.append(Trajectory(scenes))
    return DemonstrationSet("arm", list(_OBSTACLE_BOXES), [APPROACH, RETREAT],
                            trajectories)
