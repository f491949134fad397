"""Smooth-vs-exact accuracy sweeps over random polygon pairs.

Four quantities per pair: boundary distance, signed clearance, SAT
penetration, and enclosure robustness of the first polygon in the second.
Each pair's geometry comes from its own RNG stream keyed by (seed, index),
so results are identical no matter how many worker threads the sweep
fans out across.
"""
from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from typing import Optional, Sequence

from . import exactgeo as xg
from .geometry import (ConvexPolygon, SmoothingConfig, signed_clearance,
                       smooth_polygon_distance, smooth_sat_penetration)
from .predicates import (PredicateKind, PredicateParams, Scene, SceneObject,
                         atom_robustness, exact_atom_robustness)
from .randgeom import pair_for_index

QUANTITIES = ("distance", "clearance", "penetration", "enclosure")

ENCLOSURE_DELTA = 0.05

THREADS_ENV = "DIFF_SPATIAL_THREADS"

# Per-quantity regression bounds at tau=1e-3, S=32, frozen from the
# smoothing-error budget evaluated at the sweep's worst-case geometry
# (<= 10 vertices, diameter <= 3, so the worst edge is a decagon's 1.854
# and h <= 1.854/32). The calibration run behind the sampling constant
# and these numbers lives in scripts/calibrate_bounds.py; observed sweep
# maxima sit well below every bound.
FROZEN_BOUNDS = {
    "distance": 0.0240,
    "clearance": 0.0330,
    "penetration": 0.0100,
    "enclosure": 0.0160,
}

SIGN_AGREEMENT_GATE = 0.05  # |exact| above this must match smooth in sign


def _enclosure_params() -> PredicateParams:
    return PredicateParams.for_kind(PredicateKind.ENCL_IN, [ENCLOSURE_DELTA])


def pair_quantities(va: list, vb: list, tau: float,
                    samples: int) -> list[tuple[str, float, float]]:
    """(quantity, exact, smooth) for one polygon pair given as float vertices."""
    cfg = SmoothingConfig(tau=tau, samples_per_edge=samples)
    pa, pb = ConvexPolygon(va), ConvexPolygon(vb)
    scene = Scene([SceneObject("a", pa), SceneObject("b", pb)])
    params = _enclosure_params()
    rows = [
        ("distance", xg.exact_distance(va, vb),
         smooth_polygon_distance(pa, pb, cfg)),
        ("clearance", xg.exact_clearance(va, vb),
         signed_clearance(pa, pb, cfg)),
        ("penetration", xg.exact_penetration(va, vb),
         smooth_sat_penetration(pa, pb, cfg)),
        ("enclosure",
         exact_atom_robustness(scene, PredicateKind.ENCL_IN, ("a", "b"), params),
         atom_robustness(scene, PredicateKind.ENCL_IN, ("a", "b"), params,
                         smooth=True, cfg=cfg)),
    ]
    return [(q, float(e), float(s)) for q, e, s in rows]


def _rows_for_pair(index: int, seed: int, taus: Sequence[float],
                   samples_list: Sequence[int]) -> list[tuple]:
    va, vb = pair_for_index(seed, index)
    out = []
    for tau in taus:
        for samples in samples_list:
            for quantity, exact, smooth in pair_quantities(va, vb, tau, samples):
                out.append((index, tau, samples, quantity, exact, smooth))
    return out


def thread_cap(default: int = 4) -> int:
    raw = os.environ.get(THREADS_ENV)
    if raw is None:
        return max(1, min(default, os.cpu_count() or 1))
    try:
        cap = int(raw)
    except ValueError:
        raise ValueError(f"{THREADS_ENV} must be an integer, got {raw!r}") from None
    if cap < 1:
        raise ValueError(f"{THREADS_ENV} must be >= 1, got {cap}")
    return cap


def run_sweep(n_pairs: int, taus: Sequence[float], samples_list: Sequence[int],
              seed: int, max_workers: Optional[int] = None) -> list[tuple]:
    """Rows (pair, tau, samples, quantity, exact, smooth), ordered by pair.

    Work fans out across threads; ordering and content are independent of
    the worker count because each pair owns its RNG stream.
    """
    if n_pairs < 0:
        raise ValueError("n_pairs must be >= 0")
    if n_pairs == 0:
        return []
    workers = max_workers if max_workers is not None else thread_cap()
    if workers == 1:
        chunks = [_rows_for_pair(i, seed, taus, samples_list) for i in range(n_pairs)]
    else:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            chunks = list(pool.map(
                lambda i: _rows_for_pair(i, seed, taus, samples_list),
                range(n_pairs)))
    return [row for chunk in chunks for row in chunk]


def max_errors(rows: Sequence[tuple]) -> dict[tuple, float]:
    """(quantity, tau, samples) -> max |smooth - exact|."""
    out: dict[tuple, float] = {}
    for _, tau, samples, quantity, exact, smooth in rows:
        key = (quantity, tau, samples)
        err = abs(smooth - exact)
        if err > out.get(key, -1.0):
            out[key] = err
    return out


def sign_disagreements(rows: Sequence[tuple],
                       gate: float = SIGN_AGREEMENT_GATE) -> list[tuple]:
    """Signed-quantity rows where |exact| > gate yet the signs differ."""
    bad = []
    for row in rows:
        _, _, _, quantity, exact, smooth = row
        if quantity not in ("clearance", "enclosure"):
            continue
        if abs(exact) > gate and (exact > 0.0) != (smooth > 0.0):
            bad.append(row)
    return bad
