"""Temporal logic over spatial predicates: syntax, parsing, and robustness.

Formulas follow the grammar

    formula : until
    until   : disj [ "U" "[" int "," int "]" disj ]
    disj    : conj { "|" conj }
    conj    : unary { "&" unary }
    unary   : "!" unary
            | ("G" | "F") "[" int "," int "]" unary
            | "(" formula ")"
            | atom
    atom    : name "(" obj {"," obj} ";" num {"," num} ")"

Robustness is the usual quantitative semantics: conjunction is min,
disjunction max, G min over its window, F max, and U max over the release
instant of the min between the releasing operand there and the held
operand up to it. Smooth mode swaps every hard min/max for its
log-sum-exp relaxation at one shared temperature.
"""
from __future__ import annotations

import math
import warnings
from dataclasses import dataclass
from typing import Optional, Union

from . import autodiff as ad
from .autodiff import Scalar, value_of
from .geometry import SmoothingConfig
from .predicates import (ARITY, PARAM_ORDER, PredicateKind, PredicateParams, Scene,
                         atom_robustness)


class FormulaError(ValueError):
    """Parse error or ill-formed formula; carries position info when parsed."""


# -- abstract syntax -----------------------------------------------------------


@dataclass(frozen=True)
class Atom:
    kind: PredicateKind
    objects: tuple[str, ...]
    params: PredicateParams

    def __post_init__(self):
        if len(self.objects) != ARITY[self.kind]:
            raise FormulaError(
                f"{self.kind.value}: expected {ARITY[self.kind]} objects, got {len(self.objects)}")


@dataclass(frozen=True)
class Not:
    child: "Formula"


@dataclass(frozen=True)
class And:
    children: tuple["Formula", ...]


@dataclass(frozen=True)
class Or:
    children: tuple["Formula", ...]


def _check_window(lo: int, hi: int, op: str):
    if lo < 0 or hi < 0 or lo > hi:
        raise FormulaError(f"{op}: window [{lo},{hi}] must satisfy 0 <= lo <= hi")


@dataclass(frozen=True)
class Always:
    lo: int
    hi: int
    child: "Formula"

    def __post_init__(self):
        _check_window(self.lo, self.hi, "G")


@dataclass(frozen=True)
class Eventually:
    lo: int
    hi: int
    child: "Formula"

    def __post_init__(self):
        _check_window(self.lo, self.hi, "F")


@dataclass(frozen=True)
class Until:
    lo: int
    hi: int
    left: "Formula"
    right: "Formula"

    def __post_init__(self):
        _check_window(self.lo, self.hi, "U")


Formula = Union[Atom, Not, And, Or, Always, Eventually, Until]


# -- surface syntax --------------------------------------------------------------

_KIND_BY_NAME = {k.value: k for k in PredicateKind}
_RESERVED = {"G", "F", "U"}


class _Tokenizer:
    PUNCT = "()[],;&|!"

    def __init__(self, text: str):
        self.text = text
        self.pos = 0
        self.tokens: list[tuple[str, str, int]] = []  # (kind, text, offset)
        self._scan()
        self.index = 0

    def _scan(self):
        text = self.text
        i = 0
        n = len(text)
        while i < n:
            ch = text[i]
            if ch.isspace():
                i += 1
                continue
            if ch in self.PUNCT:
                self.tokens.append(("punct", ch, i))
                i += 1
                continue
            if ch.isdigit() or ch in "+-." and i + 1 < n and (text[i + 1].isdigit() or text[i + 1] == "."):
                j = i + 1
                while j < n and (text[j].isdigit() or text[j] in ".eE"
                                 or (text[j] in "+-" and text[j - 1] in "eE")):
                    j += 1
                self.tokens.append(("number", text[i:j], i))
                i = j
                continue
            if ch.isalpha() or ch == "_":
                j = i
                while j < n and (text[j].isalnum() or text[j] == "_"):
                    j += 1
                self.tokens.append(("name", text[i:j], i))
                i = j
                continue
            raise FormulaError(f"unexpected character {ch!r} at offset {i}")
        self.tokens.append(("eof", "", n))

    def peek(self) -> tuple[str, str, int]:
        return self.tokens[self.index]

    def pop(self, kind: Optional[str] = None, text: Optional[str] = None) -> tuple[str, str, int]:
        tok = self.tokens[self.index]
        if kind is not None and tok[0] != kind:
            raise FormulaError(f"expected {kind} at offset {tok[2]}, found {tok[1]!r}")
        if text is not None and tok[1] != text:
            raise FormulaError(f"expected {text!r} at offset {tok[2]}, found {tok[1]!r}")
        self.index += 1
        return tok


def parse(text: str) -> Formula:
    """Parse surface syntax into a Formula; raises FormulaError with an
    offset on malformed input."""
    tz = _Tokenizer(text)
    formula = _parse_until(tz)
    tok = tz.peek()
    if tok[0] != "eof":
        raise FormulaError(f"trailing input at offset {tok[2]}: {tok[1]!r}")
    return formula


def _parse_until(tz: _Tokenizer) -> Formula:
    left = _parse_or(tz)
    kind, text, _ = tz.peek()
    if kind == "name" and text == "U":
        tz.pop()
        lo, hi = _parse_window(tz, "U")
        right = _parse_or(tz)
        return Until(lo, hi, left, right)
    return left


def _parse_or(tz: _Tokenizer) -> Formula:
    children = [_parse_and(tz)]
    while tz.peek()[1] == "|":
        tz.pop()
        children.append(_parse_and(tz))
    return children[0] if len(children) == 1 else Or(tuple(children))


def _parse_and(tz: _Tokenizer) -> Formula:
    children = [_parse_unary(tz)]
    while tz.peek()[1] == "&":
        tz.pop()
        children.append(_parse_unary(tz))
    return children[0] if len(children) == 1 else And(tuple(children))


def _parse_window(tz: _Tokenizer, op: str) -> tuple[int, int]:
    tz.pop("punct", "[")
    lo_tok = tz.pop("number")
    tz.pop("punct", ",")
    hi_tok = tz.pop("number")
    tz.pop("punct", "]")
    try:
        lo, hi = int(lo_tok[1]), int(hi_tok[1])
    except ValueError:
        raise FormulaError(f"{op}: window bounds must be integers, "
                           f"got [{lo_tok[1]},{hi_tok[1]}] at offset {lo_tok[2]}") from None
    _check_window(lo, hi, op)
    return lo, hi


def _parse_unary(tz: _Tokenizer) -> Formula:
    kind, text, offset = tz.peek()
    if text == "!":
        tz.pop()
        return Not(_parse_unary(tz))
    if text == "(":
        tz.pop()
        inner = _parse_until(tz)
        tz.pop("punct", ")")
        return inner
    if kind == "name" and text in ("G", "F"):
        tz.pop()
        lo, hi = _parse_window(tz, text)
        child = _parse_unary(tz)
        return Always(lo, hi, child) if text == "G" else Eventually(lo, hi, child)
    if kind == "name":
        return _parse_atom(tz)
    raise FormulaError(f"expected a formula at offset {offset}, found {text!r}")


def _parse_atom(tz: _Tokenizer) -> Atom:
    name_tok = tz.pop("name")
    name = name_tok[1]
    if name in _RESERVED:
        raise FormulaError(f"{name} is a temporal operator, not a predicate "
                           f"(offset {name_tok[2]})")
    pred = _KIND_BY_NAME.get(name)
    if pred is None:
        raise FormulaError(f"unknown predicate {name!r} at offset {name_tok[2]}")
    tz.pop("punct", "(")
    objects = [tz.pop("name")[1]]
    while tz.peek()[1] == ",":
        tz.pop()
        objects.append(tz.pop("name")[1])
    tz.pop("punct", ";")
    values = [float(tz.pop("number")[1])]
    while tz.peek()[1] == ",":
        tz.pop()
        values.append(float(tz.pop("number")[1]))
    tz.pop("punct", ")")
    if len(objects) != ARITY[pred]:
        raise FormulaError(f"{name}: expected {ARITY[pred]} objects, got {len(objects)} "
                           f"(offset {name_tok[2]})")
    try:
        params = PredicateParams.for_kind(pred, values)
    except ValueError as exc:
        raise FormulaError(f"{exc} (offset {name_tok[2]})") from None
    return Atom(pred, tuple(objects), params)


def to_text(formula: Formula) -> str:
    """Canonical surface form; parse(to_text(f)) reproduces f."""
    if isinstance(formula, Atom):
        objs = ", ".join(formula.objects)
        vals = ", ".join(repr(getattr(formula.params, name))
                         for name in PARAM_ORDER[formula.kind])
        return f"{formula.kind.value}({objs}; {vals})"
    if isinstance(formula, Not):
        return f"!{_wrap(formula.child)}"
    if isinstance(formula, And):
        return " & ".join(_wrap(c, inside_and=True) for c in formula.children)
    if isinstance(formula, Or):
        return " | ".join(_wrap(c) for c in formula.children)
    if isinstance(formula, Always):
        return f"G[{formula.lo},{formula.hi}]{_wrap(formula.child)}"
    if isinstance(formula, Eventually):
        return f"F[{formula.lo},{formula.hi}]{_wrap(formula.child)}"
    if isinstance(formula, Until):
        return f"{_wrap(formula.left)} U[{formula.lo},{formula.hi}] {_wrap(formula.right)}"
    raise FormulaError(f"not a formula: {formula!r}")


def _wrap(f: Formula, inside_and: bool = False) -> str:
    needs = isinstance(f, (Or, Until)) or (inside_and and isinstance(f, Or))
    if isinstance(f, And):
        needs = True
    text = to_text(f)
    return f"({text})" if needs else text


# -- trajectories ------------------------------------------------------------------


@dataclass
class Trajectory:
    """Scenes sampled at unit steps t = 0..len-1."""
    scenes: list[Scene]

    def __post_init__(self):
        if not self.scenes:
            raise FormulaError("trajectory must contain at least one scene")

    @property
    def horizon(self) -> int:
        return len(self.scenes) - 1

    def scene(self, t: int) -> Scene:
        return self.scenes[t]


@dataclass
class RobustnessResult:
    """Robustness value plus the per-step breakdown used for reporting.

    value: robustness at the anchor time as a plain float.
    node: tape node carrying the value in smooth mode (None when the scene
        held no tape variables or in exact mode).
    per_time: child robustness per window step for a temporal root, else
        the single anchored value.
    mode: "exact" or "smooth".
    """
    value: float
    node: Optional[ad.Var]
    per_time: list[tuple[int, float]]
    mode: str

    @property
    def satisfied(self) -> bool:
        """Strict satisfaction; a robustness of exactly 0 does not count."""
        return self.value > 0.0


def _window(t: int, lo: int, hi: int, horizon: int, op: str) -> range:
    start = t + lo
    stop = t + hi
    clipped_start = max(start, 0)
    clipped_stop = min(stop, horizon)
    if clipped_start > clipped_stop:
        raise FormulaError(
            f"{op}[{lo},{hi}] anchored at t={t}: window empty after clipping to [0,{horizon}]")
    return range(clipped_start, clipped_stop + 1)


class _Evaluator:
    """Shared recursion for both modes; memoizes per (subformula, time)."""

    def __init__(self, trajectory: Trajectory, smooth: bool, cfg: SmoothingConfig):
        self.traj = trajectory
        self.smooth = smooth
        self.cfg = cfg
        self.memo: dict[tuple[int, int], Scalar] = {}

    def _min(self, xs: list[Scalar]) -> Scalar:
        if self.smooth:
            return ad.lse_min(xs, self.cfg.tau)
        return min(xs, key=value_of)

    def _max(self, xs: list[Scalar]) -> Scalar:
        if self.smooth:
            return ad.lse_max(xs, self.cfg.tau)
        return max(xs, key=value_of)

    def eval(self, f: Formula, t: int) -> Scalar:
        if t < 0 or t > self.traj.horizon:
            raise FormulaError(f"time {t} outside trajectory horizon [0,{self.traj.horizon}]")
        key = (id(f), t)
        hit = self.memo.get(key)
        if hit is not None:
            return hit
        out = self._eval(f, t)
        self.memo[key] = out
        return out

    def _eval(self, f: Formula, t: int) -> Scalar:
        if isinstance(f, Atom):
            return atom_robustness(self.traj.scene(t), f.kind, f.objects, f.params,
                                   self.smooth, self.cfg)
        if isinstance(f, Not):
            return -self.eval(f.child, t)
        if isinstance(f, And):
            return self._min([self.eval(c, t) for c in f.children])
        if isinstance(f, Or):
            return self._max([self.eval(c, t) for c in f.children])
        if isinstance(f, Always):
            ts = _window(t, f.lo, f.hi, self.traj.horizon, "G")
            return self._min([self.eval(f.child, u) for u in ts])
        if isinstance(f, Eventually):
            ts = _window(t, f.lo, f.hi, self.traj.horizon, "F")
            return self._max([self.eval(f.child, u) for u in ts])
        if isinstance(f, Until):
            ts = _window(t, f.lo, f.hi, self.traj.horizon, "U")
            candidates = []
            held: list[Scalar] = []
            for u in range(t, ts.stop):
                held.append(self.eval(f.left, u))
                if u >= ts.start:
                    candidates.append(self._min([self.eval(f.right, u)] + held))
            return self._max(candidates)
        raise FormulaError(f"not a formula: {f!r}")


def _result(f: Formula, ev: _Evaluator, t: int, mode: str) -> RobustnessResult:
    out = ev.eval(f, t)
    per_time: list[tuple[int, float]]
    if isinstance(f, (Always, Eventually)):
        ts = _window(t, f.lo, f.hi, ev.traj.horizon, "G" if isinstance(f, Always) else "F")
        per_time = [(u, value_of(ev.eval(f.child, u))) for u in ts]
    elif isinstance(f, Until):
        ts = _window(t, f.lo, f.hi, ev.traj.horizon, "U")
        per_time = [(u, value_of(ev.eval(f.right, u))) for u in ts]
    else:
        per_time = [(t, value_of(out))]
    node = out if isinstance(out, ad.Var) else None
    return RobustnessResult(value_of(out), node, per_time, mode)


def eval_exact(formula: Formula, trajectory: Trajectory, t: int = 0) -> RobustnessResult:
    """Exact robustness with hard min/max and reference geometry."""
    ev = _Evaluator(trajectory, smooth=False, cfg=SmoothingConfig())
    return _result(formula, ev, t, "exact")


def eval_smooth(formula: Formula, trajectory: Trajectory, t: int = 0,
                cfg: SmoothingConfig = SmoothingConfig()) -> RobustnessResult:
    """Smooth robustness; differentiable when the trajectory carries tape
    variables (the result's ``node`` is then a Var on the caller's tape)."""
    ev = _Evaluator(trajectory, smooth=True, cfg=cfg)
    return _result(formula, ev, t, "smooth")


def satisfies(formula: Formula, trajectory: Trajectory, t: int = 0) -> bool:
    """Independent boolean monitor (no robustness arithmetic); atoms hold
    iff their exact robustness is strictly positive."""
    horizon = trajectory.horizon
    if t < 0 or t > horizon:
        raise FormulaError(f"time {t} outside trajectory horizon [0,{horizon}]")

    def check(f: Formula, u: int) -> bool:
        if isinstance(f, Atom):
            return value_of(atom_robustness(trajectory.scene(u), f.kind, f.objects,
                                            f.params, smooth=False)) > 0.0
        if isinstance(f, Not):
            return not check(f.child, u)
        if isinstance(f, And):
            return all(check(c, u) for c in f.children)
        if isinstance(f, Or):
            return any(check(c, u) for c in f.children)
        if isinstance(f, Always):
            return all(check(f.child, v) for v in _window(u, f.lo, f.hi, horizon, "G"))
        if isinstance(f, Eventually):
            return any(check(f.child, v) for v in _window(u, f.lo, f.hi, horizon, "F"))
        if isinstance(f, Until):
            for v in _window(u, f.lo, f.hi, horizon, "U"):
                if check(f.right, v) and all(check(f.left, w) for w in range(u, v + 1)):
                    return True
            return False
        raise FormulaError(f"not a formula: {f!r}")

    return check(formula, t)


# -- positive normal form --------------------------------------------------------


def to_pnf(formula: Formula) -> Formula:
    """Push negations down to atoms via duality; negation over Until is left
    in place (with a warning) since its dual operator is not in the syntax."""
    if isinstance(formula, Atom):
        return formula
    if isinstance(formula, Not):
        inner = formula.child
        if isinstance(inner, Atom):
            return formula
        if isinstance(inner, Not):
            return to_pnf(inner.child)
        if isinstance(inner, And):
            return Or(tuple(to_pnf(Not(c)) for c in inner.children))
        if isinstance(inner, Or):
            return And(tuple(to_pnf(Not(c)) for c in inner.children))
        if isinstance(inner, Always):
            return Eventually(inner.lo, inner.hi, to_pnf(Not(inner.child)))
        if isinstance(inner, Eventually):
            return Always(inner.lo, inner.hi, to_pnf(Not(inner.child)))
        if isinstance(inner, Until):
            warnings.warn("negation over U has no dual in this syntax; left in place",
                          stacklevel=2)
            return Not(to_pnf(inner))
        raise FormulaError(f"not a formula: {inner!r}")
    if isinstance(formula, And):
        return And(tuple(to_pnf(c) for c in formula.children))
    if isinstance(formula, Or):
        return Or(tuple(to_pnf(c) for c in formula.children))
    if isinstance(formula, Always):
        return Always(formula.lo, formula.hi, to_pnf(formula.child))
    if isinstance(formula, Eventually):
        return Eventually(formula.lo, formula.hi, to_pnf(formula.child))
    if isinstance(formula, Until):
        return Until(formula.lo, formula.hi, to_pnf(formula.left), to_pnf(formula.right))
    raise FormulaError(f"not a formula: {formula!r}")


# -- reporting helpers -------------------------------------------------------------


def atoms_of(formula: Formula) -> list[Atom]:
    out: list[Atom] = []

    def walk(f: Formula):
        if isinstance(f, Atom):
            out.append(f)
        elif isinstance(f, Not):
            walk(f.child)
        elif isinstance(f, (And, Or)):
            for c in f.children:
                walk(c)
        elif isinstance(f, (Always, Eventually)):
            walk(f.child)
        elif isinstance(f, Until):
            walk(f.left)
            walk(f.right)

    walk(formula)
    return out


_SAMPLED = {PredicateKind.CLOSE_TO, PredicateKind.FAR_FROM, PredicateKind.TOUCH,
            PredicateKind.OVLP, PredicateKind.PART_OVLP, PredicateKind.ENCL_IN}


def _extreme_gap(vertex_count: int) -> float:
    """log-sum-exp gap factor for one soft extreme; exact for boxes (count 1)."""
    return math.log(vertex_count) if vertex_count > 1 else 0.0


def smoothing_budget(formula: Formula, trajectory: Trajectory, tau: float,
                     t: int = 0) -> Optional[float]:
    """Cumulative log-sum-exp gap bound |smooth - exact| for formulas whose
    atoms avoid boundary sampling (directional, between, oriented, bearing);
    returns None when a sampled atom makes the simple bound inapplicable."""

    def vertex_count(name: str) -> int:
        shape = trajectory.scene(0).get(name).shape
        return 1 if not hasattr(shape, "vertices") else len(shape.vertices)

    def budget(f: Formula, u: int) -> Optional[float]:
        if isinstance(f, Atom):
            if f.kind in _SAMPLED:
                return None
            if f.kind in (PredicateKind.ORIENTED, PredicateKind.BEARING_TO):
                return 0.0
            if f.kind in (PredicateKind.BETWEEN_PX, PredicateKind.BETWEEN_PY):
                ni, nj, nk = (vertex_count(n) for n in f.objects)
                clause = max(_extreme_gap(ni) + _extreme_gap(nj),
                             _extreme_gap(ni) + _extreme_gap(nk))
                return tau * (math.log(2.0) + clause)
            counts = [vertex_count(n) for n in f.objects]
            return tau * sum(_extreme_gap(c) for c in counts)
        if isinstance(f, Not):
            return budget(f.child, u)
        if isinstance(f, (And, Or)):
            parts = [budget(c, u) for c in f.children]
            if any(p is None for p in parts):
                return None
            return tau * math.log(len(f.children)) + max(parts)
        if isinstance(f, (Always, Eventually)):
            ts = _window(u, f.lo, f.hi, trajectory.horizon, "G")
            parts = [budget(f.child, v) for v in ts]
            if any(p is None for p in parts):
                return None
            return tau * math.log(len(ts)) + max(parts)
        if isinstance(f, Until):
            ts = _window(u, f.lo, f.hi, trajectory.horizon, "U")
            parts = [budget(f.right, v) for v in ts]
            parts += [budget(f.left, v) for v in range(u, ts.stop)]
            if any(p is None for p in parts):
                return None
            width = ts.stop - u
            return tau * (math.log(len(ts)) + math.log(width + 1)) + max(parts)
        raise FormulaError(f"not a formula: {f!r}")

    return budget(formula, t)
