"""Derivative-free search for observer gains maximizing the certified rate.

The objective is the penalized negative rate: -min(c1, c2) plus a large
penalty on any surface-condition residual above tolerance.  A coarse seeded
grid over the gain box picks a starting point, Nelder-Mead refines it, and
the best feasible candidate ever evaluated is retained (ties never displace
an earlier winner, so growing the budget cannot make the result worse).
Per-entry gain boxes double as hard feasibility bounds: keeping them inside
a known-good region is the cheapest way to encode design constraints the
sampled certificates cannot see.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import List, Optional, Tuple

import numpy as np
from scipy import optimize

from .certify import SLIDING_TOL, Certificate, certify_observer
from .measures import MeasureKind
from .systems import BimodalSystem, ObserverSpec

_TIE_BREAK = 1e-12


@dataclass
class SynthesisProblem:
    """Gain-search problem: which entries move, inside which box, certified how."""

    base: BimodalSystem
    kind: MeasureKind
    L_plus0: np.ndarray  # template values; frozen entries keep them
    L_minus0: np.ndarray
    box_plus: np.ndarray  # (n*p, 2) per-entry bounds, row-major over (n, p)
    box_minus: np.ndarray
    region: list
    output_range: list
    grid: list
    output_grid: Optional[list] = None
    free_plus: Optional[np.ndarray] = None  # bool masks; default: all free
    free_minus: Optional[np.ndarray] = None
    tie: bool = False  # L- follows L+ entry-for-entry
    sliding_tol: float = SLIDING_TOL
    penalty: float = 1e3
    seeds_per_dim: int = 5

    def __post_init__(self):
        n, p = self.base.n, self.base.p
        self.L_plus0 = np.asarray(self.L_plus0, dtype=float).reshape(n, p)
        self.L_minus0 = np.asarray(self.L_minus0, dtype=float).reshape(n, p)
        if self.free_plus is None:
            self.free_plus = np.ones((n, p), dtype=bool)
        if self.free_minus is None:
            self.free_minus = (
                np.zeros((n, p), dtype=bool) if self.tie else np.ones((n, p), dtype=bool)
            )
        self.free_plus = np.asarray(self.free_plus, dtype=bool).reshape(n, p)
        self.free_minus = np.asarray(self.free_minus, dtype=bool).reshape(n, p)
        if self.tie:
            self.free_minus[:] = False
        self.box_plus = np.asarray(self.box_plus, dtype=float).reshape(n * p, 2)
        self.box_minus = np.asarray(self.box_minus, dtype=float).reshape(n * p, 2)
        if np.any(self.box_plus[:, 0] > self.box_plus[:, 1]) or np.any(
            self.box_minus[:, 0] > self.box_minus[:, 1]
        ):
            raise ValueError("gain boxes must satisfy lo <= hi")
        if not np.all(np.isfinite(self.box_plus)) or not np.all(np.isfinite(self.box_minus)):
            raise ValueError("gain boxes must be finite")

    @property
    def dim(self) -> int:
        return int(self.free_plus.sum() + self.free_minus.sum())

    def bounds(self) -> np.ndarray:
        rows = list(self.box_plus[self.free_plus.ravel()])
        rows += list(self.box_minus[self.free_minus.ravel()])
        return np.array(rows)

    def gains(self, v: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
        Lp = self.L_plus0.copy()
        Lm = self.L_minus0.copy()
        k = int(self.free_plus.sum())
        Lp[self.free_plus] = v[:k]
        Lm[self.free_minus] = v[k:]
        if self.tie:
            Lm = Lp.copy()
        return Lp, Lm

    def certify(self, v: np.ndarray) -> Certificate:
        Lp, Lm = self.gains(v)
        obs = ObserverSpec(self.base, Lp, Lm)
        return certify_observer(
            obs, self.kind, self.region, self.output_range, self.grid,
            output_grid=self.output_grid, sliding_tol=self.sliding_tol,
        )


@dataclass
class SynthesisResult:
    L_plus: np.ndarray
    L_minus: np.ndarray
    certificate: Certificate
    feasible: bool
    evaluations: int
    seed: int
    history: List[Tuple[int, float]] = field(default_factory=list)


def synthesize(prob: SynthesisProblem, budget: int = 200, seed: int = 0) -> SynthesisResult:
    """Grid seeding plus Nelder-Mead on the penalized objective.

    Returns the best feasible gains found (flagged infeasible when no
    candidate certified within budget) together with a fresh certificate at
    the returned gains.
    """
    if budget < 50:
        raise ValueError("budget must be at least 50 evaluations")
    if prob.dim == 0:
        cert = prob.certify(np.empty(0))
        Lp, Lm = prob.gains(np.empty(0))
        return SynthesisResult(Lp, Lm, cert, cert.verdict == "certified", 1, seed)

    bounds = prob.bounds()
    state = {
        "evals": 0,
        "best_J": np.inf,
        "best_v": None,
        "best_rate": -np.inf,
        "best_feasible_v": None,
        "history": [],
    }

    def objective(v: np.ndarray) -> float:
        v = np.clip(v, bounds[:, 0], bounds[:, 1])
        cert = prob.certify(v)
        state["evals"] += 1
        J = -cert.rate + prob.penalty * max(0.0, cert.sliding_residual - prob.sliding_tol)
        if not np.isfinite(cert.rate):
            J = np.inf
        if J < state["best_J"] - _TIE_BREAK:
            state["best_J"] = J
            state["best_v"] = v.copy()
        if cert.verdict == "certified" and cert.rate > state["best_rate"] + _TIE_BREAK:
            state["best_rate"] = cert.rate
            state["best_feasible_v"] = v.copy()
            state["history"].append((state["evals"], cert.rate))
        return J

    # coarse grid, evaluated in a seed-shuffled order (a strictly-better-only
    # update keeps the outcome order-independent up to exact objective ties)
    axes = [np.linspace(lo, hi, prob.seeds_per_dim) for lo, hi in bounds]
    mesh = np.meshgrid(*axes, indexing="ij")
    grid_pts = np.stack([m.ravel() for m in mesh], axis=-1)
    rng = np.random.default_rng(seed)
    order = rng.permutation(len(grid_pts))
    n_grid = min(len(grid_pts), max(1, budget // 2))
    for i in order[:n_grid]:
        objective(grid_pts[i])

    start = state["best_v"] if state["best_v"] is not None else grid_pts[order[0]]
    remaining = budget - state["evals"]
    if remaining > prob.dim + 1:
        optimize.minimize(
            objective,
            np.asarray(start, dtype=float),
            method="Nelder-Mead",
            bounds=optimize.Bounds(bounds[:, 0], bounds[:, 1]),
            options={"maxfev": remaining, "xatol": 1e-9, "fatol": 1e-12},
        )

    feasible = state["best_feasible_v"] is not None
    v_final = state["best_feasible_v"] if feasible else state["best_v"]
    Lp, Lm = prob.gains(np.asarray(v_final, dtype=float))
    cert = prob.certify(np.asarray(v_final, dtype=float))
    return SynthesisResult(
        L_plus=Lp, L_minus=Lm, certificate=cert, feasible=feasible,
        evaluations=state["evals"] + 1, seed=seed, history=state["history"],
    )
