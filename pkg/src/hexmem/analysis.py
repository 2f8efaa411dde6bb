"""Statistics: code-cell rates, combined rates, likelihood bands, line
fits, lambda factors, and teraquop footprints.

Shot-level logical error rates convert to per-code-cell rates by inverting
XOR composition over the experiment's n_cells = rounds/d blocks; H- and
V-type rates combine as E_HV = 1 - (1-E_H)(1-E_V). Lambda is the
suppression factor per +2 graphlike code distance, estimated from the
slope of ln(E) vs d; its uncertainty comes from the set of slopes whose
least-squares error term is at most 1.0 above optimal.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, asdict, field
from pathlib import Path

from .lattice import PatchSpec, cut_patch, default_aspect
from .noise import NoiseModel

TERAQUOP_TARGET = 1e-12

CSV_FIELDS = ("model", "p", "w", "h", "geometry", "obs", "d", "rounds",
              "shots", "errors", "decoder", "seed")


@dataclass(frozen=True)
class StatsRecord:
    """One Monte Carlo sampling result row."""

    model: str
    p: float
    w: int
    h: int
    geometry: str
    obs: str
    d: int
    rounds: int
    shots: int
    errors: int
    decoder: str = "uncorrelated-mwpm"
    seed: int = 0

    def __post_init__(self):
        if self.errors > self.shots:
            raise ValueError("errors cannot exceed shots")
        if self.d < 1:
            raise ValueError("distance must be >= 1")

    @property
    def shot_rate(self) -> float:
        return self.errors / self.shots if self.shots else 0.0


def write_stats(path, records, append: bool = False) -> None:
    path = Path(path)
    exists = path.exists() and path.stat().st_size > 0
    mode = "a" if append else "w"
    with open(path, mode, newline="") as f:
        writer = csv.DictWriter(f, fieldnames=CSV_FIELDS)
        if not (append and exists):
            writer.writeheader()
        for r in records:
            writer.writerow(asdict(r))


def read_stats(path) -> list[StatsRecord]:
    out = []
    with open(path, newline="") as f:
        for row in csv.DictReader(f):
            out.append(StatsRecord(
                model=row["model"], p=float(row["p"]), w=int(row["w"]),
                h=int(row["h"]), geometry=row["geometry"], obs=row["obs"],
                d=int(row["d"]), rounds=int(row["rounds"]),
                shots=int(row["shots"]), errors=int(row["errors"]),
                decoder=row["decoder"], seed=int(row["seed"])))
    return out


# ----------------------------------------------------------------------
# Rate algebra
# ----------------------------------------------------------------------

def per_shot_to_code_cell(e_shot: float, n_cells: float) -> float:
    """Per-code-cell rate whose n_cells-fold XOR composition is e_shot.

    Saturated inputs (>= 1/2) clamp to 1/2.
    """
    if n_cells < 1:
        raise ValueError("n_cells must be >= 1")
    if e_shot <= 0:
        return 0.0
    if e_shot >= 0.5:
        return 0.5
    return (1.0 - (1.0 - 2.0 * e_shot) ** (1.0 / n_cells)) / 2.0


def xor_compose(e_cell: float, n_cells: float) -> float:
    """Forward XOR composition: the inverse of per_shot_to_code_cell."""
    return (1.0 - (1.0 - 2.0 * e_cell) ** n_cells) / 2.0


def combine_hv(e_h: float, e_v: float) -> float:
    """Combined rate: both observables must survive."""
    if not (0 <= e_h <= 1 and 0 <= e_v <= 1):
        raise ValueError("rates must lie in [0, 1]")
    return 1.0 - (1.0 - e_h) * (1.0 - e_v)


def bayes_band(shots: int, errors: int, factor: float = 1000.0,
               rel_tol: float = 1e-6) -> tuple[float, float]:
    """Rates whose binomial likelihood is within ``factor`` of the MLE's."""
    if shots < 1:
        raise ValueError("shots must be >= 1")
    k, n = errors, shots
    mle = k / n

    def loglik(r: float) -> float:
        acc = 0.0
        if k:
            acc += k * math.log(r)
        if n - k:
            acc += (n - k) * math.log(1.0 - r)
        return acc

    cut = loglik(mle) - math.log(factor) if factor > 1 else loglik(mle)
    if factor <= 1:
        return (mle, mle)

    def solve(lo: float, hi: float, want_below_at_lo: bool) -> float:
        # Bisect the boundary of {r : loglik(r) >= cut}.
        for _ in range(200):
            mid = 0.5 * (lo + hi)
            inside = loglik(mid) >= cut
            if inside == want_below_at_lo:
                lo = mid
            else:
                hi = mid
            if hi - lo <= rel_tol * max(mid, 1e-12):
                break
        return 0.5 * (lo + hi)

    low = 0.0 if k == 0 else solve(0.0, mle, want_below_at_lo=False)
    high = 1.0 if k == n else solve(mle, 1.0, want_below_at_lo=True)
    return (low, high)


# ----------------------------------------------------------------------
# Line fits and lambda
# ----------------------------------------------------------------------

@dataclass(frozen=True)
class FitResult:
    """Least-squares fit of ln(rate) against code distance."""

    slope: float
    intercept: float
    residual_sum: float
    slope_uncertainty: float  # from the +1.0 error-term allowance
    points: tuple[tuple[float, float], ...] = ()

    def projected(self, d: float) -> float:
        return math.exp(self.intercept + self.slope * d)


@dataclass(frozen=True)
class LambdaEstimate:
    p: float
    lam: float
    low: float
    high: float
    fit: FitResult

    def __post_init__(self):
        if self.lam <= 0:
            raise ValueError("lambda must be positive")


class InsufficientSuppression(ValueError):
    pass


def demonstrates_suppression(points: list[tuple[float, float]]) -> bool:
    """True when the MLE rates fall over the two largest distances and the
    final rate is below 0.4."""
    if len(points) < 2:
        return False
    pts = sorted(points)
    return pts[-1][1] < pts[-2][1] and pts[-1][1] < 0.4


def fit_log_rates(points: list[tuple[float, float]]) -> FitResult:
    """Unweighted least squares of ln(rate) on distance."""
    xs = [d for d, _ in points]
    ys = [math.log(r) for _, r in points]
    n = len(points)
    if n < 2:
        raise InsufficientSuppression("need at least two distances")
    xbar = sum(xs) / n
    ybar = sum(ys) / n
    sxx = sum((x - xbar) ** 2 for x in xs)
    if sxx == 0:
        raise InsufficientSuppression("degenerate distance set")
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / sxx
    intercept = ybar - slope * xbar
    rss = sum((y - (intercept + slope * x)) ** 2 for x, y in zip(xs, ys))
    # RSS(s) = RSS* + (s - s*)^2 * sxx, so the +1.0 allowance moves the
    # slope by sqrt(1/sxx).
    return FitResult(slope, intercept, rss, math.sqrt(1.0 / sxx),
                     tuple(zip(xs, (r for _, r in points))))


def fit_lambda(p: float, points: list[tuple[float, float]]) -> LambdaEstimate:
    """Lambda (suppression per +2 distance) from (distance, rate) points.

    Raises InsufficientSuppression when the inclusion rule fails.
    """
    usable = [(d, r) for d, r in points if r > 0]
    if not demonstrates_suppression(usable):
        raise InsufficientSuppression(
            f"rates at p={p} do not demonstrate error suppression")
    fit = fit_log_rates(usable)
    lam = math.exp(-2.0 * fit.slope)
    lo = math.exp(-2.0 * (fit.slope + fit.slope_uncertainty))
    hi = math.exp(-2.0 * (fit.slope - fit.slope_uncertainty))
    return LambdaEstimate(p, lam, min(lo, hi), max(lo, hi), fit)


@dataclass(frozen=True)
class TeraquopProjection:
    p: float
    required_distance: int
    patch: PatchSpec
    qubits: int
    qubits_low: int
    qubits_high: int


def patch_qubit_count(spec: PatchSpec, model: NoiseModel | str) -> int:
    """Physical qubits of the generated circuit: data plus measurement
    ancillas for the gate sets that use them."""
    name = model.name if isinstance(model, NoiseModel) else model
    patch = cut_patch(spec)
    uses_anc = name.lower() in ("sd6", "si1000")
    return patch.num_qubits + (patch.num_edges if uses_anc else 0)


def _distance_for_target(fit: FitResult, slope: float,
                         target: float) -> float:
    intercept = fit.intercept + (fit.slope - slope) * _mean_x(fit)
    return (math.log(target) - intercept) / slope


def _mean_x(fit: FitResult) -> float:
    xs = [x for x, _ in fit.points]
    return sum(xs) / len(xs)


def teraquop_footprint(est: LambdaEstimate, model: str,
                       target: float = TERAQUOP_TARGET,
                       verify_aspect: bool = True) -> TeraquopProjection:
    """Physical qubits to reach the target per-code-cell rate.

    The projected distance is rounded up to an achievable patch under the
    model's default aspect, then converted to a qubit count. The low/high
    counts come from the +1.0 least-squares allowance on the slope.
    """
    if est.lam <= 1:
        raise ValueError("no finite footprint for lambda <= 1")
    fit = est.fit

    def req(slope: float) -> int:
        if slope >= 0:
            raise ValueError("no finite footprint for non-negative slope")
        return max(1, math.ceil(_distance_for_target(fit, slope, target)))

    d_mid = req(fit.slope)
    spec = default_aspect(model, d_mid, verify=verify_aspect)
    count = patch_qubit_count(spec, model)
    lows, highs = [count], [count]
    for slope in (fit.slope - fit.slope_uncertainty,
                  fit.slope + fit.slope_uncertainty):
        try:
            d = req(slope)
        except ValueError:
            continue
        c = patch_qubit_count(default_aspect(model, d, verify=verify_aspect),
                              model)
        lows.append(c)
        highs.append(c)
    return TeraquopProjection(est.p, d_mid, spec, count, min(lows), max(highs))


# ----------------------------------------------------------------------
# Record aggregation
# ----------------------------------------------------------------------

def combined_cell_rates(records: list[StatsRecord]
                        ) -> dict[tuple[str, float], list[tuple[int, float]]]:
    """Group records into (model, p) -> [(distance, combined cell rate)].

    H and V records at the same (model, p, d) are converted to per-cell
    rates (n_cells = rounds/d) and combined with Eq. E_HV.
    """
    grouped: dict[tuple, dict] = {}
    for r in records:
        key = (r.model, r.p, r.d)
        slot = grouped.setdefault(key, {})
        prev = slot.get(r.obs)
        if prev is None:
            slot[r.obs] = [r.shots, r.errors, r.rounds]
        else:
            prev[0] += r.shots
            prev[1] += r.errors
    out: dict[tuple[str, float], list[tuple[int, float]]] = {}
    for (model, p, d), slot in sorted(grouped.items()):
        cells = []
        for obs in ("H", "V"):
            if obs not in slot:
                break
            shots, errors, rounds = slot[obs]
            cells.append(per_shot_to_code_cell(errors / shots, rounds / d))
        else:
            out.setdefault((model, p), []).append(
                (d, combine_hv(cells[0], cells[1])))
    return out
