"""Parameter scans: dispersive-shift sweeps, basis-angle landscapes with
per-shift minimization, probe-amplitude sweeps, and crossover bisection.

Grid points are independent pure computations; the engine evaluates them
with an optional thread pool and always returns rows in grid order, so the
output is identical for any worker count.  The worker count is capped by the
``QMB_THREADS`` environment variable.
"""

from __future__ import annotations

import math
import os
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, replace
from typing import Callable, List, NamedTuple, Optional, Sequence

import numpy as np

from .channels import SuperOp, ideal_channel, nigg_girvin_channel
from .metrics import DiamondResult, diamond_distance
from .spectrum import SystemParams, crossover_estimates, mixing_angle

__all__ = [
    "REFERENCE_MODELS",
    "SweepRow",
    "GammaScan",
    "CrossoverResult",
    "build_reference",
    "distance_row",
    "sweep_chi",
    "sweep_alpha",
    "scan_gamma_chi",
    "find_crossover",
]

REFERENCE_MODELS = ("bare", "dressed", "nalpha2", "nalpha2_snr")

_FAILED = DiamondResult(value=float("nan"), lower_cert=float("nan"),
                        upper_cert=float("nan"), status="failed", iterations=0)

GOLDEN = (math.sqrt(5.0) - 1.0) / 2.0


def _worker_count(workers: Optional[int]) -> int:
    cap = os.environ.get("QMB_THREADS")
    cap = int(cap) if cap else None
    if workers is None:
        n = cap if cap is not None else 1
    else:
        n = min(workers, cap) if cap is not None else workers
    return max(1, n)


def _pmap(fn: Callable, items: Sequence, workers: Optional[int]) -> list:
    n = _worker_count(workers)
    if n <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=n) as pool:
        return list(pool.map(fn, items))  # map preserves submission order


def build_reference(params: SystemParams, model: str, x: int = +1,
                    variant: str = "literal") -> SuperOp:
    """One of the four idealized reference channels.

    The bare reference is always built with the ``diagonal`` construction
    (free-qubit phases), since the literal one is undefined at gamma = 0;
    ``variant`` selects the construction of the dressed and mean-photon
    references.  When those angles land exactly on gamma = 0 (uncoupled
    qubits) the bases coincide and the diagonal construction is used there
    as well.
    """
    if model == "bare":
        return ideal_channel(params, 0.0, x, variant="diagonal", snr="perfect")
    if model == "dressed":
        gamma = mixing_angle(params, 0.0).gamma
    elif model in ("nalpha2", "nalpha2_snr"):
        gamma = mixing_angle(params, params.alpha ** 2).gamma
    else:
        raise ValueError(f"unknown reference model {model!r}")
    snr = "finite" if model == "nalpha2_snr" else "perfect"
    eff_variant = variant if gamma != 0.0 else "diagonal"
    return ideal_channel(params, gamma, x, variant=eff_variant, snr=snr)


@dataclass(frozen=True)
class SweepRow:
    """Distances of the readout channel to the four reference models at one
    grid point.  Models that a task does not evaluate are None."""

    chi: float
    alpha: float
    gamma: Optional[float] = None
    bare: Optional[DiamondResult] = None
    dressed: Optional[DiamondResult] = None
    nalpha2: Optional[DiamondResult] = None
    nalpha2_snr: Optional[DiamondResult] = None

    def result(self, model: str) -> Optional[DiamondResult]:
        return getattr(self, model)

    @property
    def d_bare(self): return self.bare.value if self.bare else None

    @property
    def d_dressed(self): return self.dressed.value if self.dressed else None

    @property
    def d_nalpha2(self): return self.nalpha2.value if self.nalpha2 else None

    @property
    def d_nalpha2_snr(self): return self.nalpha2_snr.value if self.nalpha2_snr else None

    @property
    def failed(self) -> bool:
        return any(r is not None and r.status == "failed"
                   for r in (self.bare, self.dressed, self.nalpha2, self.nalpha2_snr))


def distance_row(params: SystemParams, tol: float = 1e-7,
                 variant: str = "literal",
                 models: Sequence[str] = REFERENCE_MODELS,
                 check_outcome_symmetry: bool = False) -> SweepRow:
    """Build the readout channel and its distances to the requested models.

    Only the + outcome is evaluated (the two outcomes are symmetric); with
    ``check_outcome_symmetry`` the - outcome is evaluated as well and both
    are required to agree to 1e-8.
    """
    results = {}
    try:
        ng_plus = nigg_girvin_channel(params, +1)
        ng_minus = nigg_girvin_channel(params, -1) if check_outcome_symmetry else None
    except Exception:
        return SweepRow(chi=params.chi, alpha=params.alpha,
                        **{m: _FAILED for m in models})
    for model in models:
        try:
            ref = build_reference(params, model, +1, variant)
            res = diamond_distance(ng_plus, ref, tol=tol)
            if check_outcome_symmetry:
                other = diamond_distance(
                    ng_minus, build_reference(params, model, -1, variant), tol=tol)
                if abs(other.value - res.value) > 1e-8:
                    raise RuntimeError(
                        f"outcome asymmetry for {model}: "
                        f"{res.value:.3e} vs {other.value:.3e}")
            results[model] = res
        except RuntimeError:
            raise
        except Exception:
            results[model] = _FAILED
    return SweepRow(chi=params.chi, alpha=params.alpha, **results)


def sweep_chi(template: SystemParams, chi_grid: Sequence[float],
              tol: float = 1e-7, variant: str = "literal",
              workers: Optional[int] = None,
              check_outcome_symmetry: bool = False) -> List[SweepRow]:
    """Distances to all four references at each dispersive shift."""
    if any(c == 0 for c in chi_grid):
        raise ValueError("chi grid must not contain zero")

    def one(chi: float) -> SweepRow:
        return distance_row(replace(template, chi=float(chi)), tol=tol,
                            variant=variant,
                            check_outcome_symmetry=check_outcome_symmetry)

    return _pmap(one, list(chi_grid), workers)


def sweep_alpha(template: SystemParams, alpha_grid: Sequence[float],
                tol: float = 1e-7, variant: str = "literal",
                workers: Optional[int] = None,
                check_outcome_symmetry: bool = False) -> List[SweepRow]:
    """Distances to all four references as the probe amplitude varies; the
    finite-SNR reference is rebuilt per amplitude."""

    def one(alpha: float) -> SweepRow:
        return distance_row(replace(template, alpha=float(alpha)), tol=tol,
                            variant=variant,
                            check_outcome_symmetry=check_outcome_symmetry)

    return _pmap(one, list(alpha_grid), workers)


# ---------------------------------------------------------------------------
# gamma x chi landscape
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class GammaScan:
    """Distance landscape over (chi, gamma) plus per-chi minima.

    ``grids[i]`` and ``results[i]`` hold the gamma grid and the distances for
    ``chi_values[i]``; ``argmin_gamma``/``min_distance`` are the refined
    minima, never above the raw grid minima.  ``gamma_nalpha2`` is the
    closed-form mean-photon-number angle, the reference curve the minima are
    compared against.
    """

    chi_values: np.ndarray
    gamma0: np.ndarray
    gamma_nalpha2: np.ndarray
    grids: List[np.ndarray]
    results: List[List[DiamondResult]]
    argmin_gamma_grid: np.ndarray
    min_distance_grid: np.ndarray
    argmin_gamma: np.ndarray
    min_distance: np.ndarray
    flags: List[str]


def _gamma_grid(params: SystemParams, resolution: int) -> np.ndarray:
    """Candidate angles with n(gamma) >= 0, sorted ascending.

    For chi > 0 this is the interval between the bare and dressed angles,
    open at the bare end; for chi < 0 it is the complementary region of
    (-pi/4, pi/4], scanned on both sides and filtered by n(gamma) >= 0
    (experimental: the mean-photon-number model is known to break down near
    the negative crossover).
    """
    from .spectrum import n_of_gamma

    g0 = mixing_angle(params, 0.0).gamma
    if g0 == 0.0:
        raise ValueError("gamma landscape is degenerate at J = 0")
    if params.chi > 0:
        return np.sort(g0 * np.arange(1, resolution + 1) / resolution)
    half = max(2, resolution // 2)
    eps = abs(g0) / resolution
    candidates = np.concatenate([
        np.linspace(-math.pi / 4, -eps, half),
        np.linspace(eps, math.pi / 4, half)])
    keep = [g for g in candidates if n_of_gamma(params, g) >= -1e-9]
    if not keep:
        raise ValueError("no candidate angles with n(gamma) >= 0 in range")
    return np.sort(np.array(keep))


def scan_gamma_chi(template: SystemParams, chi_grid: Sequence[float],
                   gamma_resolution: int = 24, tol: float = 1e-7,
                   variant: str = "literal", refine_tol: float = 1e-4,
                   workers: Optional[int] = None) -> GammaScan:
    """Per-chi minimization of the distance over the basis angle.

    Grid evaluation followed by golden-section refinement on the bracketing
    triple around the grid minimum; flat-landscape ties are broken toward
    smaller |gamma| and flagged.
    """
    chi_values, gamma0s, ga2s = [], [], []
    grids, all_results = [], []
    argmin_g, min_d, argmin_ref, min_ref, flags = [], [], [], [], []

    for chi in chi_grid:
        params = replace(template, chi=float(chi))
        ng = nigg_girvin_channel(params, +1)
        grid = _gamma_grid(params, gamma_resolution)

        def dist(gamma: float) -> DiamondResult:
            ref = ideal_channel(params, float(gamma), +1, variant=variant,
                                snr="perfect")
            return diamond_distance(ng, ref, tol=tol)

        results = _pmap(dist, list(grid), workers)
        values = np.array([r.value for r in results])
        vmin = values.min()
        ties = np.flatnonzero(values <= vmin * (1 + 1e-12))
        k = int(ties[np.argmin(np.abs(grid[ties]))])
        flag = "tie" if len(ties) > 1 else ""

        # golden-section refinement on the bracketing triple
        lo_i, hi_i = max(0, k - 1), min(len(grid) - 1, k + 1)
        a, b = float(grid[lo_i]), float(grid[hi_i])
        best_g, best_v = float(grid[k]), float(values[k])
        x1 = b - GOLDEN * (b - a)
        x2 = a + GOLDEN * (b - a)
        f1, f2 = dist(x1).value, dist(x2).value
        while (b - a) > refine_tol:
            if f1 <= f2:
                b, x2, f2 = x2, x1, f1
                x1 = b - GOLDEN * (b - a)
                f1 = dist(x1).value
            else:
                a, x1, f1 = x1, x2, f2
                x2 = a + GOLDEN * (b - a)
                f2 = dist(x2).value
            for g, v in ((x1, f1), (x2, f2)):
                if v < best_v:
                    best_g, best_v = g, v

        chi_values.append(float(chi))
        gamma0s.append(mixing_angle(params, 0.0).gamma)
        ga2s.append(mixing_angle(params, params.alpha ** 2).gamma)
        grids.append(grid)
        all_results.append(results)
        argmin_g.append(float(grid[k]))
        min_d.append(float(values[k]))
        argmin_ref.append(best_g)
        min_ref.append(best_v)
        flags.append(flag)

    return GammaScan(chi_values=np.array(chi_values), gamma0=np.array(gamma0s),
                     gamma_nalpha2=np.array(ga2s), grids=grids,
                     results=all_results,
                     argmin_gamma_grid=np.array(argmin_g),
                     min_distance_grid=np.array(min_d),
                     argmin_gamma=np.array(argmin_ref),
                     min_distance=np.array(min_ref), flags=flags)


# ---------------------------------------------------------------------------
# crossover bisection
# ---------------------------------------------------------------------------

class CrossoverResult(NamedTuple):
    value: float
    which: str
    history: List[SweepRow]


def find_crossover(template: SystemParams, which: str,
                   bracket: Sequence[float], tol: float = 1e-7,
                   variant: str = "literal",
                   rel_width: float = 1e-2) -> CrossoverResult:
    """Bisect the sign change of (d_bare - d_dressed) over the bracket.

    Raises ValueError (reporting both endpoint differences) when the sign
    does not change, e.g. for degenerate templates where the two references
    coincide.
    """
    if which not in ("chi", "alpha"):
        raise ValueError(f"which must be 'chi' or 'alpha', got {which!r}")
    lo, hi = float(bracket[0]), float(bracket[1])
    if not lo < hi:
        raise ValueError("bracket must satisfy lo < hi")
    history: List[SweepRow] = []

    def diff(v: float) -> float:
        row = distance_row(replace(template, **{which: v}), tol=tol,
                           variant=variant, models=("bare", "dressed"))
        history.append(row)
        if row.failed:
            raise RuntimeError(f"distance evaluation failed at {which}={v}")
        return row.d_bare - row.d_dressed

    f_lo, f_hi = diff(lo), diff(hi)
    if f_lo == 0.0 or f_hi == 0.0 or (f_lo > 0) == (f_hi > 0):
        raise ValueError(
            "no sign change of d_bare - d_dressed over the bracket: "
            f"f({lo:g}) = {f_lo:.6e}, f({hi:g}) = {f_hi:.6e}")
    while (hi - lo) > rel_width * 0.5 * (hi + lo):
        mid = 0.5 * (lo + hi)
        f_mid = diff(mid)
        if (f_mid > 0) == (f_lo > 0):
            lo, f_lo = mid, f_mid
        else:
            hi, f_hi = mid, f_mid
    history.sort(key=lambda row: getattr(row, which))
    return CrossoverResult(value=0.5 * (lo + hi), which=which, history=history)


def crossover_window(template: SystemParams) -> tuple:
    """Convenience: the closed-form estimates for the current template."""
    est = crossover_estimates(template)
    return est.chi_c, est.alpha_c
