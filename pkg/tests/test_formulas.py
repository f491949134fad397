"""Temporal layer: parsing, robustness semantics, normal form, monitor."""
import math
import random

import pytest

from polystl import autodiff as ad
from polystl import formulas as fm
from polystl.formulas import (Always, And, Atom, Eventually, FormulaError, Not, Or,
                              Trajectory, Until, atoms_of, eval_exact, eval_smooth,
                              parse, satisfies, smoothing_budget, to_pnf, to_text)
from polystl.geometry import ConvexPolygon, SmoothingConfig
from polystl.gradcheck import check_gradient
from polystl.predicates import (AxisAlignedBox3, PredicateKind, PredicateParams,
                                Scene, SceneObject)


def square(cx, cy, half=0.5):
    return ConvexPolygon([(cx - half, cy - half), (cx + half, cy - half),
                          (cx + half, cy + half), (cx - half, cy + half)])


def pair_scene(d_ab, d_ac=None):
    """a at the origin, b at x=d_ab, optionally c at x=d_ac; unit squares.

    With axis-aligned unit squares, exact distance between a and b is
    d_ab - 1, so closeTo(a, b; eps) has robustness eps - (d_ab - 1).
    """
    objs = [SceneObject("a", square(0, 0)), SceneObject("b", square(d_ab, 0))]
    if d_ac is not None:
        objs.append(SceneObject("c", square(d_ac, 0)))
    return Scene(objs)


def close_to(x, y, eps):
    return Atom(PredicateKind.CLOSE_TO, (x, y),
                PredicateParams.for_kind(PredicateKind.CLOSE_TO, [eps]))


def traj_with_values(values, eps=4.0):
    """Trajectory where closeTo(a, b; eps) evaluates to values[t] exactly."""
    return Trajectory([pair_scene(1.0 + eps - v) for v in values])


# -- parser ---------------------------------------------------------------------


def test_parse_atom():
    f = parse("closeTo(a, b; 0.5)")
    assert isinstance(f, Atom)
    assert f.kind is PredicateKind.CLOSE_TO
    assert f.objects == ("a", "b")
    assert f.params.eps_close == 0.5


def test_parse_precedence():
    f = parse("closeTo(a,b;1) & farFrom(a,b;1) | leftOf(a,b;0.1)")
    assert isinstance(f, Or)
    assert isinstance(f.children[0], And)


def test_parse_temporal_and_until():
    f = parse("G[0,59] rightOf(arm, obs1; 0.1) & F[60,118] leftOf(arm, obs1; 0.1)")
    assert isinstance(f, And)
    g, ev = f.children
    assert isinstance(g, Always) and (g.lo, g.hi) == (0, 59)
    assert isinstance(ev, Eventually) and (ev.lo, ev.hi) == (60, 118)

    u = parse("closeTo(a,b;4) U[0,2] closeTo(a,c;6)")
    assert isinstance(u, Until) and (u.lo, u.hi) == (0, 2)


def test_parse_negation_and_parens():
    f = parse("!(closeTo(a,b;1) | ovlp(a,b;0.1))")
    assert isinstance(f, Not) and isinstance(f.child, Or)


def test_parse_bearing_params_in_order():
    f = parse("bearingTo(a, b; -1.5, 0.2)")
    assert f.params.theta_ref == -1.5
    assert f.params.kappa == 0.2


def test_parse_between_takes_three_objects():
    f = parse("betweenPx(a, b, c; 0.1)")
    assert f.objects == ("a", "b", "c")


@pytest.mark.parametrize("text", [
    "closeTo(a, b; 0.5) extra",           # trailing input
    "nearTo(a, b; 0.5)",                   # unknown predicate
    "U(a, b; 0.5)",                        # reserved word as predicate
    "G[3,1] closeTo(a,b;1)",               # lo > hi
    "G[-1,2] closeTo(a,b;1)",              # negative bound
    "G[0.5,2] closeTo(a,b;1)",             # non-integer bound
    "closeTo(a; 0.5)",                     # wrong arity
    "betweenPx(a, b; 0.1)",                # between needs three objects
    "closeTo(a, b; 0.5, 0.2)",             # too many parameters
    "closeTo(a, b; -0.5)",                 # nonpositive threshold
    "closeTo(a, b)",                       # missing parameter block
    "closeTo(a, b; 0.5",                   # unclosed paren
    "@closeTo(a,b;1)",                     # stray character
])
def test_parse_rejects(text):
    with pytest.raises(FormulaError):
        parse(text)


@pytest.mark.parametrize("text", [
    "closeTo(a, b; 0.5)",
    "!ovlp(a, b; 0.25)",
    "G[0,10](closeTo(a,b;1) & farFrom(a,c;2))",
    "F[2,5]!enclIn(a,b;0.05)",
    "(closeTo(a,b;4) | leftOf(a,b;0.1)) U[1,3] touch(a,c;0.2)",
    "bearingTo(a, b; 3.141592653589793, 0.5)",
    "betweenPy(a, b, c; 0.1) & oriented(a, b; 0.3)",
])
def test_roundtrip(text):
    f = parse(text)
    assert parse(to_text(f)) == f


def test_roundtrip_randomized():
    rng = random.Random(7)
    kinds = [PredicateKind.CLOSE_TO, PredicateKind.LEFT_OF, PredicateKind.OVLP]

    def gen(depth):
        if depth == 0 or rng.random() < 0.3:
            k = rng.choice(kinds)
            return Atom(k, ("a", "b"),
                        PredicateParams.for_kind(k, [round(rng.uniform(0.1, 2.0), 3)]))
        op = rng.randrange(6)
        if op == 0:
            return Not(gen(depth - 1))
        if op == 1:
            return And(tuple(gen(depth - 1) for _ in range(rng.randint(2, 3))))
        if op == 2:
            return Or(tuple(gen(depth - 1) for _ in range(2)))
        lo = rng.randint(0, 3)
        hi = lo + rng.randint(0, 3)
        if op == 3:
            return Always(lo, hi, gen(depth - 1))
        if op == 4:
            return Eventually(lo, hi, gen(depth - 1))
        return Until(lo, hi, gen(depth - 1), gen(depth - 1))

    for _ in range(120):
        f = gen(3)
        assert parse(to_text(f)) == f


def test_window_validation_at_construction():
    with pytest.raises(FormulaError):
        Always(2, 1, close_to("a", "b", 1.0))
    with pytest.raises(FormulaError):
        Eventually(-1, 2, close_to("a", "b", 1.0))


# -- temporal semantics, frozen values -------------------------------------------
# Streams are realized geometrically: closeTo(a, b; 4) on unit squares at
# center distance d gives robustness 4 - (d - 1), so distances are chosen to
# hit each stream value exactly.


def test_always_takes_worst_step():
    traj = traj_with_values([1.0, 3.0, -2.0])
    f = Always(0, 2, close_to("a", "b", 4.0))
    res = eval_exact(f, traj)
    assert res.value == pytest.approx(-2.0, abs=1e-9)
    assert not res.satisfied
    assert [t for t, _ in res.per_time] == [0, 1, 2]
    assert [v for _, v in res.per_time] == pytest.approx([1.0, 3.0, -2.0], abs=1e-9)


def test_eventually_takes_best_step():
    traj = traj_with_values([-1.0, 2.0, 0.0])
    f = Eventually(0, 2, close_to("a", "b", 4.0))
    res = eval_exact(f, traj)
    assert res.value == pytest.approx(2.0, abs=1e-9)
    assert res.satisfied


def test_until_releases_at_best_feasible_instant():
    # phi1 = closeTo(a,b;7) held at 5 throughout; phi2 = closeTo(a,c;6)
    # runs -1, -1, 4. Release at t=2 is the only positive candidate.
    scenes = []
    for v2 in (-1.0, -1.0, 4.0):
        scenes.append(pair_scene(1.0 + 7.0 - 5.0, 1.0 + 6.0 - v2))
    traj = Trajectory(scenes)
    f = Until(0, 2, close_to("a", "b", 7.0), close_to("a", "c", 6.0))
    res = eval_exact(f, traj)
    assert res.value == pytest.approx(4.0, abs=1e-9)
    assert satisfies(f, traj)


def test_until_capped_by_held_operand():
    # phi1 dips to -3 at t=1, which caps every release from t=1 onward.
    scenes = [pair_scene(1.0 + 7.0 - v1, 1.0 + 6.0 - v2)
              for v1, v2 in [(5.0, -1.0), (-3.0, -1.0), (5.0, 4.0)]]
    traj = Trajectory(scenes)
    f = Until(0, 2, close_to("a", "b", 7.0), close_to("a", "c", 6.0))
    res = eval_exact(f, traj)
    # candidates: min(-1,5)=-1, min(-1,5,-3)=-3, min(4,5,-3,5)=-3; best -1
    assert res.value == pytest.approx(-1.0, abs=1e-9)
    assert not satisfies(f, traj)


def test_nested_anchoring():
    # F[0,1] G[0,1] phi over stream [1, 3, -2]: G at 0 -> 1, G at 1 -> -2.
    traj = traj_with_values([1.0, 3.0, -2.0])
    f = Eventually(0, 1, Always(0, 1, close_to("a", "b", 4.0)))
    assert eval_exact(f, traj).value == pytest.approx(1.0, abs=1e-9)


def test_window_clips_to_horizon():
    traj = traj_with_values([1.0, 3.0, -2.0])
    f = Always(0, 10, close_to("a", "b", 4.0))
    assert eval_exact(f, traj).value == pytest.approx(-2.0, abs=1e-9)


def test_empty_window_after_clipping_is_an_error():
    traj = traj_with_values([1.0, 3.0, -2.0])
    f = Eventually(3, 5, close_to("a", "b", 4.0))
    with pytest.raises(FormulaError, match="empty"):
        eval_exact(f, traj)
    with pytest.raises(FormulaError):
        satisfies(f, traj)


def test_anchor_outside_horizon_is_an_error():
    traj = traj_with_values([1.0, 3.0])
    with pytest.raises(FormulaError):
        eval_exact(close_to("a", "b", 4.0), traj, t=5)


def test_zero_robustness_is_not_satisfying():
    traj = traj_with_values([0.0])
    res = eval_exact(close_to("a", "b", 4.0), traj)
    assert res.value == pytest.approx(0.0, abs=1e-12)
    assert not res.satisfied
    assert not satisfies(close_to("a", "b", 4.0), traj)


def test_negation_and_connectives():
    traj = traj_with_values([2.0])
    phi = close_to("a", "b", 4.0)  # 2.0
    assert eval_exact(Not(phi), traj).value == pytest.approx(-2.0)
    both = And((phi, Not(phi)))
    assert eval_exact(both, traj).value == pytest.approx(-2.0)
    either = Or((phi, Not(phi)))
    assert eval_exact(either, traj).value == pytest.approx(2.0)


# -- smooth semantics --------------------------------------------------------------


def test_smooth_eventually_bounds_exact():
    # lse-max over the window upper-bounds the hard max by at most tau*log N.
    traj = traj_with_values([-1.0, 2.0, 0.0])
    f = Eventually(0, 2, close_to("a", "b", 4.0))
    cfg = SmoothingConfig(tau=0.01)
    exact = eval_exact(f, traj).value
    smooth = eval_smooth(f, traj, cfg=cfg).value
    # atoms are sampled, so allow their approximation on top of the lse gap
    atom_slack = 0.05
    assert smooth >= exact - atom_slack
    assert smooth <= exact + cfg.tau * math.log(3.0) + atom_slack


def test_smooth_always_within_budget_for_directional_formula():
    # Box atoms have exact extremes, so the only smooth/exact gap is the
    # temporal lse; smoothing_budget must cover it.
    def box_scene(x):
        return Scene([
            SceneObject("a", AxisAlignedBox3.from_center(x, 0.0, 0.0, (0.5, 0.5, 0.5))),
            SceneObject("b", AxisAlignedBox3.from_center(4.0, 0.0, 0.0, (0.5, 0.5, 0.5))),
        ])

    traj = Trajectory([box_scene(x) for x in (0.0, 0.5, 1.0, 1.5)])
    f = Always(0, 3, Atom(PredicateKind.LEFT_OF, ("a", "b"),
                          PredicateParams.for_kind(PredicateKind.LEFT_OF, [0.1])))
    cfg = SmoothingConfig(tau=0.05)
    exact = eval_exact(f, traj).value
    smooth = eval_smooth(f, traj, cfg=cfg).value
    budget = smoothing_budget(f, traj, cfg.tau)
    assert budget == pytest.approx(0.05 * math.log(4.0))
    assert abs(smooth - exact) <= budget + 1e-12


def test_smoothing_budget_directional_polygons():
    traj = Trajectory([pair_scene(3.0)])
    f = Atom(PredicateKind.LEFT_OF, ("a", "b"),
             PredicateParams.for_kind(PredicateKind.LEFT_OF, [0.1]))
    budget = smoothing_budget(f, traj, 0.01)
    # two squares, four vertices each
    assert budget == pytest.approx(0.01 * 2 * math.log(4.0))
    exact = eval_exact(f, traj).value
    smooth = eval_smooth(f, traj, cfg=SmoothingConfig(tau=0.01)).value
    assert abs(smooth - exact) <= budget + 1e-12


def test_smoothing_budget_none_for_sampled_atoms():
    traj = traj_with_values([1.0])
    assert smoothing_budget(close_to("a", "b", 4.0), traj, 0.01) is None


def test_smooth_matches_exact_as_tau_shrinks():
    traj = traj_with_values([1.0, 3.0, -2.0])
    f = Always(0, 2, close_to("a", "b", 4.0))
    exact = eval_exact(f, traj).value
    errs = [abs(eval_smooth(f, traj, cfg=SmoothingConfig(tau=t)).value - exact)
            for t in (0.1, 0.01, 0.001)]
    assert errs[2] < 0.01


def test_smooth_result_carries_tape_node():
    tape = ad.Tape()
    x = tape.var(2.5)
    objs = [SceneObject("a", square(0, 0)),
            SceneObject("b", ConvexPolygon([(x - 0.5, -0.5), (x + 0.5, -0.5),
                                            (x + 0.5, 0.5), (x - 0.5, 0.5)]))]
    traj = Trajectory([Scene(objs)])
    res = eval_smooth(close_to("a", "b", 4.0), traj)
    assert isinstance(res.node, ad.Var)
    g = ad.backward(res.node)
    # moving b away decreases closeTo robustness
    assert g.wrt(x) < 0.0


def test_gradient_through_temporal_operators():
    # d/dx_t of a smooth G over three steps, against central differences.
    def build(xs, tape=None):
        scenes = []
        for x in xs:
            xv = tape.var(x) if tape is not None else x
            b = ConvexPolygon([(xv - 0.5, -0.5), (xv + 0.5, -0.5),
                               (xv + 0.5, 0.5), (xv - 0.5, 0.5)])
            scenes.append(Scene([SceneObject("a", square(0, 0)),
                                 SceneObject("b", b)]))
        return Trajectory(scenes)

    f = Always(0, 2, close_to("a", "b", 4.0))
    cfg = SmoothingConfig(tau=0.05)
    xs = [2.0, 2.6, 3.1]

    tape = ad.Tape()
    vs = [tape.var(x) for x in xs]
    scenes = []
    for xv in vs:
        b = ConvexPolygon([(xv - 0.5, -0.5), (xv + 0.5, -0.5),
                           (xv + 0.5, 0.5), (xv - 0.5, 0.5)])
        scenes.append(Scene([SceneObject("a", square(0, 0)), SceneObject("b", b)]))
    res = eval_smooth(f, Trajectory(scenes), cfg=cfg)
    g = ad.backward(res.node)
    analytic = [g.wrt(v) for v in vs]

    def value(at):
        return eval_smooth(f, build(at), cfg=cfg).value

    check_gradient(value, xs, analytic)


def test_memo_shares_subformula_work():
    # The same child object under two windows must agree at shared steps.
    traj = traj_with_values([1.0, 3.0, -2.0, 0.5])
    phi = close_to("a", "b", 4.0)
    f = And((Always(0, 2, phi), Eventually(1, 3, phi)))
    res = eval_exact(f, traj)
    assert res.value == pytest.approx(min(-2.0, max(3.0, -2.0, 0.5)), abs=1e-9)


# -- boolean monitor cross-check ---------------------------------------------------


def test_monitor_agrees_with_robustness_sign():
    rng = random.Random(20260815)
    kinds = [PredicateKind.CLOSE_TO, PredicateKind.FAR_FROM, PredicateKind.LEFT_OF]

    def gen(depth):
        if depth == 0 or rng.random() < 0.35:
            k = rng.choice(kinds)
            return Atom(k, ("a", "b"),
                        PredicateParams.for_kind(k, [round(rng.uniform(0.2, 3.0), 2)]))
        op = rng.randrange(6)
        if op == 0:
            return Not(gen(depth - 1))
        if op == 1:
            return And(tuple(gen(depth - 1) for _ in range(2)))
        if op == 2:
            return Or(tuple(gen(depth - 1) for _ in range(2)))
        lo = rng.randint(0, 2)
        hi = lo + rng.randint(0, 2)
        if op == 3:
            return Always(lo, hi, gen(depth - 1))
        if op == 4:
            return Eventually(lo, hi, gen(depth - 1))
        return Until(lo, hi, gen(depth - 1), gen(depth - 1))

    traj = Trajectory([pair_scene(d) for d in (1.3, 2.0, 3.4, 1.8, 2.7)])
    checked = 0
    for _ in range(150):
        f = gen(3)
        try:
            rho = eval_exact(f, traj).value
        except FormulaError:
            continue  # window fell off the horizon
        if abs(rho) < 1e-9:
            continue
        assert satisfies(f, traj) == (rho > 0.0), to_text(f)
        checked += 1
    assert checked > 100


# -- positive normal form ----------------------------------------------------------


def test_pnf_pushes_negation_to_atoms():
    phi = close_to("a", "b", 1.0)
    f = Not(And((phi, Or((Not(phi), Always(0, 2, phi))))))
    g = to_pnf(f)

    def no_compound_negation(h):
        if isinstance(h, Not):
            return isinstance(h.child, Atom)
        if isinstance(h, (And, Or)):
            return all(no_compound_negation(c) for c in h.children)
        if isinstance(h, (Always, Eventually)):
            return no_compound_negation(h.child)
        if isinstance(h, Until):
            return no_compound_negation(h.left) and no_compound_negation(h.right)
        return True

    assert no_compound_negation(g)


def test_pnf_dualities():
    phi = close_to("a", "b", 1.0)
    assert to_pnf(Not(Always(0, 3, phi))) == Eventually(0, 3, Not(phi))
    assert to_pnf(Not(Eventually(1, 2, phi))) == Always(1, 2, Not(phi))
    assert to_pnf(Not(Not(phi))) == phi
    assert to_pnf(Not(And((phi, phi)))) == Or((Not(phi), Not(phi)))


def test_pnf_preserves_exact_robustness():
    traj = Trajectory([pair_scene(d) for d in (1.3, 2.0, 3.4, 1.8)])
    phi = close_to("a", "b", 2.0)
    psi = Atom(PredicateKind.FAR_FROM, ("a", "b"),
               PredicateParams.for_kind(PredicateKind.FAR_FROM, [1.5]))
    cases = [
        Not(Always(0, 3, phi)),
        Not(Or((phi, Not(psi)))),
        Not(Eventually(0, 2, And((phi, psi)))),
        Not(Not(Always(1, 3, Or((phi, psi))))),
    ]
    for f in cases:
        g = to_pnf(f)
        assert eval_exact(g, traj).value == pytest.approx(
            eval_exact(f, traj).value, abs=1e-12)


def test_pnf_warns_on_negated_until():
    phi = close_to("a", "b", 1.0)
    f = Not(Until(0, 2, phi, phi))
    with pytest.warns(UserWarning, match="U"):
        g = to_pnf(f)
    assert isinstance(g, Not) and isinstance(g.child, Until)


# -- misc -------------------------------------------------------------------------


def test_atoms_of_walks_everything():
    phi = close_to("a", "b", 1.0)
    psi = close_to("a", "c", 2.0)
    f = Until(0, 1, Not(And((phi, psi))), Or((phi, Always(0, 1, psi))))
    assert len(atoms_of(f)) == 4


def test_trajectory_requires_scenes():
    with pytest.raises(FormulaError):
        Trajectory([])
