"""Scalar reverse-mode automatic differentiation on an append-only tape.

Every operation appends one node to the tape; node indices are therefore
already in topological order and a single reverse sweep computes adjoints.
All functions in this module accept either ``Var`` operands or plain floats,
so the same client code can run in recorded (differentiable) mode or in
plain float mode with identical arithmetic.
"""
from __future__ import annotations

import math
from typing import Sequence, Union

SQRT_GUARD = 1e-12

_ONE1 = (1.0,)
_ONE2 = (1.0, 1.0)
_NEG1 = (-1.0,)
_EMPTY = ()

Scalar = Union["Var", float]


class EvaluationError(ValueError):
    """Domain violation inside a tape primitive."""


class Tape:
    """Append-only record of scalar operations.

    Parallel lists hold per-node state: ``val`` (result), ``par`` (parent
    node indices) and ``dpar`` (local partial derivatives w.r.t. parents).
    ``ops`` keeps the opcode for error messages and debugging.
    """

    __slots__ = ("val", "par", "dpar", "ops")

    def __init__(self) -> None:
        self.val: list[float] = []
        self.par: list[tuple] = []
        self.dpar: list[tuple] = []
        self.ops: list[str] = []

    def __len__(self) -> int:
        return len(self.val)

    def var(self, value: float) -> "Var":
        """Append a leaf node (an input that gradients are taken against)."""
        v = float(value)
        if not math.isfinite(v):
            raise EvaluationError(f"var: non-finite leaf value {value!r} at node {len(self.val)}")
        self.val.append(v)
        self.par.append(_EMPTY)
        self.dpar.append(_EMPTY)
        self.ops.append("var")
        return Var(self, len(self.val) - 1)

    def vars(self, values: Sequence[float]) -> list["Var"]:
        return [self.var(v) for v in values]


class Var:
    """Handle to one tape node; supports arithmetic against Vars and floats."""

    __slots__ = ("tape", "i")

    def __init__(self, tape: Tape, i: int) -> None:
        self.tape = tape
        self.i = i

    @property
    def value(self) -> float:
        return self.tape.val[self.i]

    def __repr__(self) -> str:
        return f"Var(node={self.i}, value={self.tape.val[self.i]!r})"

    # -- arithmetic ----------------------------------------------------

    def __add__(self, other):
        t = self.tape
        if isinstance(other, Var):
            if other.tape is not t:
                raise EvaluationError("add: operands live on different tapes")
            t.val.append(t.val[self.i] + t.val[other.i])
            t.par.append((self.i, other.i))
            t.dpar.append(_ONE2)
        else:
            t.val.append(t.val[self.i] + other)
            t.par.append((self.i,))
            t.dpar.append(_ONE1)
        t.ops.append("add")
        return Var(t, len(t.val) - 1)

    __radd__ = __add__

    def __sub__(self, other):
        t = self.tape
        if isinstance(other, Var):
            if other.tape is not t:
                raise EvaluationError("sub: operands live on different tapes")
            t.val.append(t.val[self.i] - t.val[other.i])
            t.par.append((self.i, other.i))
            t.dpar.append((1.0, -1.0))
        else:
            t.val.append(t.val[self.i] - other)
            t.par.append((self.i,))
            t.dpar.append(_ONE1)
        t.ops.append("sub")
        return Var(t, len(t.val) - 1)

    def __rsub__(self, other):
        # other - self with other a plain float
        t = self.tape
        t.val.append(other - t.val[self.i])
        t.par.append((self.i,))
        t.dpar.append(_NEG1)
        t.ops.append("sub")
        return Var(t, len(t.val) - 1)

    def __mul__(self, other):
        t = self.tape
        if isinstance(other, Var):
            if other.tape is not t:
                raise EvaluationError("mul: operands live on different tapes")
            a, b = t.val[self.i], t.val[other.i]
            t.val.append(a * b)
            t.par.append((self.i, other.i))
            t.dpar.append((b, a))
        else:
            t.val.append(t.val[self.i] * other)
            t.par.append((self.i,))
            t.dpar.append((other,))
        t.ops.append("mul")
        return Var(t, len(t.val) - 1)

    __rmul__ = __mul__

    def __truediv__(self, other):
        t = self.tape
        if isinstance(other, Var):
            if other.tape is not t:
                raise EvaluationError("div: operands live on different tapes")
            a, b = t.val[self.i], t.val[other.i]
            if b == 0.0:
                raise EvaluationError(f"div: zero denominator at node {len(t.val)}")
            t.val.append(a / b)
            t.par.append((self.i, other.i))
            t.dpar.append((1.0 / b, -a / (b * b)))
        else:
            if other == 0.0:
                raise EvaluationError(f"div: zero denominator at node {len(t.val)}")
            t.val.append(t.val[self.i] / other)
            t.par.append((self.i,))
            t.dpar.append((1.0 / other,))
        t.ops.append("div")
        return Var(t, len(t.val) - 1)

    def __rtruediv__(self, other):
        t = self.tape
        b = t.val[self.i]
        if b == 0.0:
            raise EvaluationError(f"div: zero denominator at node {len(t.val)}")
        t.val.append(other / b)
        t.par.append((self.i,))
        t.dpar.append((-other / (b * b),))
        t.ops.append("div")
        return Var(t, len(t.val) - 1)

    def __neg__(self):
        t = self.tape
        t.val.append(-t.val[self.i])
        t.par.append((self.i,))
        t.dpar.append(_NEG1)
        t.ops.append("neg")
        return Var(t, len(t.val) - 1)


def _unary(x: Var, value: float, partial: float, op: str) -> Var:
    t = x.tape
    t.val.append(value)
    t.par.append((x.i,))
    t.dpar.append((partial,))
    t.ops.append(op)
    return Var(t, len(t.val) - 1)


def value_of(x: Scalar) -> float:
    """Plain float behind a scalar, whichever mode it is in."""
    return x.value if isinstance(x, Var) else float(x)


# -- unary primitives (Var or float in, same kind out) ------------------


def exp(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        v = math.exp(x.value)
        return _unary(x, v, v, "exp")
    return math.exp(x)


def log(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        v = x.value
        if v <= 0.0:
            raise EvaluationError(f"log: non-positive argument {v!r} at node {len(x.tape.val)}")
        return _unary(x, math.log(v), 1.0 / v, "log")
    if x <= 0.0:
        raise EvaluationError(f"log: non-positive argument {x!r}")
    return math.log(x)


def sqrt(x: Scalar) -> Scalar:
    """Exact square root; argument must be >= 0. Derivative at 0 set to 0
    (one-sided convention, same spirit as relu)."""
    if isinstance(x, Var):
        v = x.value
        if v < 0.0:
            raise EvaluationError(f"sqrt: negative argument {v!r} at node {len(x.tape.val)}")
        r = math.sqrt(v)
        return _unary(x, r, 0.0 if r == 0.0 else 0.5 / r, "sqrt")
    if x < 0.0:
        raise EvaluationError(f"sqrt: negative argument {x!r}")
    return math.sqrt(x)


def sqrt_guarded(x: Scalar) -> Scalar:
    """sqrt(x + guard): keeps the derivative finite near zero.

    Used by every distance computation so gradients stay defined when two
    points coincide.
    """
    if isinstance(x, Var):
        r = math.sqrt(x.value + SQRT_GUARD)
        return _unary(x, r, 0.5 / r, "sqrt_guarded")
    return math.sqrt(x + SQRT_GUARD)


def square(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        v = x.value
        return _unary(x, v * v, 2.0 * v, "square")
    return x * x


def relu(x: Scalar) -> Scalar:
    """max(0, x); subgradient 0 at the kink."""
    if isinstance(x, Var):
        v = x.value
        if v > 0.0:
            return _unary(x, v, 1.0, "relu")
        return _unary(x, 0.0, 0.0, "relu")
    return x if x > 0.0 else 0.0


def _sigmoid_float(v: float) -> float:
    # split by sign for overflow safety
    if v >= 0.0:
        return 1.0 / (1.0 + math.exp(-v))
    e = math.exp(v)
    return e / (1.0 + e)


def sigmoid(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        s = _sigmoid_float(x.value)
        return _unary(x, s, s * (1.0 - s), "sigmoid")
    return _sigmoid_float(x)


def abs_smooth(x: Scalar) -> Scalar:
    """sqrt(x^2 + guard): differentiable surrogate for |x|."""
    if isinstance(x, Var):
        v = x.value
        r = math.sqrt(v * v + SQRT_GUARD)
        return _unary(x, r, v / r, "abs_smooth")
    return math.sqrt(x * x + SQRT_GUARD)


def sin(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        return _unary(x, math.sin(x.value), math.cos(x.value), "sin")
    return math.sin(x)


def cos(x: Scalar) -> Scalar:
    if isinstance(x, Var):
        return _unary(x, math.cos(x.value), -math.sin(x.value), "cos")
    return math.cos(x)


_TWO_PI = 2.0 * math.pi


def wrap_angle(x: Scalar) -> Scalar:
    """Map an angle into (-pi, pi]; derivative 1 (the shift is locally constant)."""
    if isinstance(x, Var):
        v = x.value
        w = v - _TWO_PI * math.ceil((v - math.pi) / _TWO_PI)
        return _unary(x, w, 1.0, "wrap_angle")
    return x - _TWO_PI * math.ceil((x - math.pi) / _TWO_PI)


# -- binary primitives ---------------------------------------------------


def _binary(a: Scalar, b: Scalar, value: float, da: float, db: float, op: str) -> Scalar:
    a_var = isinstance(a, Var)
    b_var = isinstance(b, Var)
    if a_var and b_var:
        t = a.tape
        if b.tape is not t:
            raise EvaluationError(f"{op}: operands live on different tapes")
        t.val.append(value)
        t.par.append((a.i, b.i))
        t.dpar.append((da, db))
    elif a_var:
        t = a.tape
        t.val.append(value)
        t.par.append((a.i,))
        t.dpar.append((da,))
    elif b_var:
        t = b.tape
        t.val.append(value)
        t.par.append((b.i,))
        t.dpar.append((db,))
    else:
        return value
    t.ops.append(op)
    return Var(t, len(t.val) - 1)


def atan2(y: Scalar, x: Scalar) -> Scalar:
    yv = value_of(y)
    xv = value_of(x)
    r2 = xv * xv + yv * yv
    if r2 == 0.0:
        raise EvaluationError("atan2: both arguments zero")
    return _binary(y, x, math.atan2(yv, xv), xv / r2, -yv / r2, "atan2")


def max2(a: Scalar, b: Scalar) -> Scalar:
    """Hard max; on a tie the first operand wins the subgradient."""
    av = value_of(a)
    bv = value_of(b)
    if av >= bv:
        return _binary(a, b, av, 1.0, 0.0, "max2")
    return _binary(a, b, bv, 0.0, 1.0, "max2")


def min2(a: Scalar, b: Scalar) -> Scalar:
    """Hard min; on a tie the first operand wins the subgradient."""
    av = value_of(a)
    bv = value_of(b)
    if av <= bv:
        return _binary(a, b, av, 1.0, 0.0, "min2")
    return _binary(a, b, bv, 0.0, 1.0, "min2")


# -- smoothed extrema ----------------------------------------------------


def _lse(xs: Sequence[Scalar], tau: float, sign: float, op: str) -> Scalar:
    if tau <= 0.0:
        raise EvaluationError(f"{op}: temperature must be positive, got {tau!r}")
    n = len(xs)
    if n == 0:
        raise EvaluationError(f"{op}: empty input")
    tape = None
    for x in xs:
        if isinstance(x, Var):
            tape = x.tape
            break
    vals = [x.tape.val[x.i] if isinstance(x, Var) else x for x in xs]
    if sign < 0.0:
        vals = [-v for v in vals]
    m = max(vals)
    ws = [math.exp((v - m) / tau) for v in vals]
    s = math.fsum(ws)
    out = sign * (m + tau * math.log(s))
    if tape is None:
        return out
    parents = []
    partials = []
    for x, w in zip(xs, ws):
        if isinstance(x, Var):
            if x.tape is not tape:
                raise EvaluationError(f"{op}: operands live on different tapes")
            parents.append(x.i)
            partials.append(w / s)
    tape.val.append(out)
    tape.par.append(tuple(parents))
    tape.dpar.append(tuple(partials))
    tape.ops.append(op)
    return Var(tape, len(tape.val) - 1)


def lse_max(xs: Sequence[Scalar], tau: float) -> Scalar:
    """Smoothed maximum tau*log(sum(exp(x_i/tau))), evaluated with a max
    shift for overflow safety.

    Bounds: max(x) <= lse_max(x) <= max(x) + tau*log(len(x)); recorded as a
    single tape node with softmax partials.
    """
    return _lse(xs, tau, 1.0, "lse_max")


def lse_min(xs: Sequence[Scalar], tau: float) -> Scalar:
    """Smoothed minimum, -lse_max(-x); satisfies the mirrored bounds
    min(x) - tau*log(len(x)) <= lse_min(x) <= min(x)."""
    return _lse(xs, tau, -1.0, "lse_min")


# -- reverse sweep -------------------------------------------------------


class Gradients:
    """Adjoints from one reverse sweep, indexed by tape node."""

    __slots__ = ("adjoints",)

    def __init__(self, adjoints: list[float]) -> None:
        self.adjoints = adjoints

    def wrt(self, x: Var) -> float:
        """Adjoint of a node; 0 for nodes recorded after the swept output."""
        if x.i < len(self.adjoints):
            return self.adjoints[x.i]
        return 0.0


def backward(output: Var) -> Gradients:
    """Single reverse sweep from ``output``; returns adjoints for every node
    at or before it. Deterministic: identical tapes give bit-identical
    adjoints."""
    t = output.tape
    n = output.i + 1
    adj = [0.0] * n
    adj[output.i] = 1.0
    par = t.par
    dpar = t.dpar
    for i in range(output.i, -1, -1):
        a = adj[i]
        if a == 0.0:
            continue
        ps = par[i]
        if not ps:
            continue
        ds = dpar[i]
        for k in range(len(ps)):
            adj[ps[k]] += a * ds[k]
    return Gradients(adj)
