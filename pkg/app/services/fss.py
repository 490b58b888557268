"""
Finite-Size Scaling Service
Data collapse under t = (alpha - alpha_c) L^(1/nu): interpolation cost,
exhaustive grid search and contour-based uncertainty
"""
from __future__ import annotations

import csv
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path
from typing import List, Sequence, Tuple

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy import ndimage

from app.config.logger import get_logger
from app.exceptions import DegenerateDataError, OutputError
from app.services.analysis import DataPoint, load_data_points

logger = get_logger("fss")

THEORETICAL_ALPHA_C = 0.918
SURFACE_COLUMNS = ["alpha_c", "nu", "cost"]
COLLAPSED_COLUMNS = ["L", "alpha", "t", "q_mean", "stderr"]


@dataclass(frozen=True)
class ScaledTriple:
    t: float
    g: float
    e: float

    def __post_init__(self):
        if self.e < 0:
            raise ValueError(f"Error bar must be nonnegative, got {self.e}")


class ScalingGrid(BaseModel):
    """Search ranges for (alpha_c, nu), contour level factor r and data window"""

    alpha_c_min: float = 0.85
    alpha_c_max: float = 1.10
    alpha_c_step: float = Field(0.001, gt=0)
    nu_min: float = Field(1.5, gt=0)
    nu_max: float = 4.0
    nu_step: float = Field(0.01, gt=0)
    r: float = Field(0.25, gt=0)
    window: float = Field(0.5, gt=0)
    window_center: float = THEORETICAL_ALPHA_C

    @model_validator(mode="after")
    def check_ranges(self) -> "ScalingGrid":
        if self.alpha_c_max < self.alpha_c_min:
            raise ValueError("alpha_c range is empty")
        if self.nu_max < self.nu_min:
            raise ValueError("nu range is empty")
        return self

    @staticmethod
    def _axis(lo: float, hi: float, step: float) -> np.ndarray:
        n = int(round((hi - lo) / step)) + 1
        return np.round(lo + step * np.arange(n), 10)

    def alpha_values(self) -> np.ndarray:
        return self._axis(self.alpha_c_min, self.alpha_c_max, self.alpha_c_step)

    def nu_values(self) -> np.ndarray:
        return self._axis(self.nu_min, self.nu_max, self.nu_step)


@dataclass(frozen=True)
class CollapseResult:
    alpha_c_exp: float
    nu_exp: float
    c_min: float
    uncertainty_alpha: float
    uncertainty_nu: float
    surface: np.ndarray = field(repr=False, compare=False)
    alpha_values: np.ndarray = field(repr=False, compare=False)
    nu_values: np.ndarray = field(repr=False, compare=False)
    unbounded: bool = False
    n_points: int = 0
    n_ties: int = 1


# ==================== COST ====================

def transform(points: Sequence[DataPoint], alpha_c: float, nu: float) -> List[ScaledTriple]:
    """
    Map (alpha, q, stderr) to (t, g, e) with t = (alpha - alpha_c) L^(1/nu),
    sorted by t; equal t keep their input order.
    """
    if nu <= 0:
        raise ValueError(f"nu must be positive, got {nu}")
    triples = [ScaledTriple((p.alpha - alpha_c) * p.L ** (1.0 / nu), p.q_mean, p.stderr) for p in points]
    return sorted(triples, key=lambda tr: tr.t)


def _window_costs(t: np.ndarray, g: np.ndarray, e: np.ndarray) -> Tuple[np.ndarray, np.ndarray]:
    """
    Row-wise interior-point costs for arrays of shape (rows, T) already sorted
    along axis 1.

    Returns:
        (summed w per row, number of counted windows per row)
    """
    t0, t1, t2 = t[:, :-2], t[:, 1:-1], t[:, 2:]
    g0, g1, g2 = g[:, :-2], g[:, 1:-1], g[:, 2:]
    e0, e1, e2 = e[:, :-2], e[:, 1:-1], e[:, 2:]

    # Sorted input: a zero span means three identical t values
    span = t2 - t0
    skip = span == 0
    safe_span = np.where(skip, 1.0, span)
    right = (t2 - t1) / safe_span
    left = (t0 - t1) / safe_span
    g_bar = right * g0 - left * g2
    delta2 = e1 ** 2 + right ** 2 * e0 ** 2 + left ** 2 * e2 ** 2
    resid2 = (g1 - g_bar) ** 2

    positive = delta2 > 0
    w = np.where(positive, resid2 / np.where(positive, delta2, 1.0), np.where(resid2 > 0, np.inf, 0.0))
    w = np.where(skip, 0.0, w)
    counted = skip.shape[1] - skip.sum(axis=1)
    return w.sum(axis=1), counted


def cost(triples: Sequence[ScaledTriple]) -> float:
    """
    Mean squared deviation of each interior point from the chord through
    its neighbours, in units of the propagated error. Endpoints and windows
    of three identical t values are left out of both sum and denominator.

    Args:
        triples: At least three triples sorted by t

    Returns:
        Nonnegative cost, inf when a zero-error window is off its chord
    """
    if len(triples) < 3:
        raise DegenerateDataError(f"Cost needs at least 3 points, got {len(triples)}")
    arr = np.array([(tr.t, tr.g, tr.e) for tr in triples], dtype=np.float64)
    total, counted = _window_costs(arr[None, :, 0], arr[None, :, 1], arr[None, :, 2])
    if counted[0] == 0:
        raise DegenerateDataError("Every window has three identical t values")
    return float(total[0] / counted[0])


# ==================== GRID SEARCH ====================

def window_points(points: Sequence[DataPoint], grid: ScalingGrid) -> List[DataPoint]:
    """Points with |alpha - window_center| <= window"""
    return [p for p in points if abs(p.alpha - grid.window_center) <= grid.window + 1e-12]


def _surface_row(alpha_c: float, nus: np.ndarray, alpha: np.ndarray, L: np.ndarray, g: np.ndarray, e: np.ndarray) -> np.ndarray:
    t = (alpha - alpha_c)[None, :] * L[None, :] ** (1.0 / nus[:, None])
    order = np.argsort(t, axis=1, kind="stable")
    total, counted = _window_costs(
        np.take_along_axis(t, order, axis=1),
        g[order],
        e[order],
    )
    with np.errstate(invalid="ignore", divide="ignore"):
        return np.where(counted > 0, total / np.maximum(counted, 1), np.inf)


def grid_search(points: Sequence[DataPoint], grid: ScalingGrid = ScalingGrid(), workers: int = 1) -> CollapseResult:
    """
    Evaluate the cost on every (alpha_c, nu) grid cell and report the
    minimum with contour-box uncertainties. The contour is the connected
    part of the (1 + r) C_min sublevel set containing the minimum.

    Args:
        points: Data points from at least two system sizes
        grid: Search ranges and window
        workers: Threads evaluating alpha_c rows

    Returns:
        CollapseResult with the full surface
    """
    data = window_points(points, grid)
    if not data:
        raise DegenerateDataError(
            f"No data within {grid.window} of alpha = {grid.window_center}"
        )
    sizes = sorted({p.L for p in data})
    if len(sizes) < 2:
        raise DegenerateDataError(f"Collapse needs at least two system sizes, got {sizes}")
    if len(data) < 3:
        raise DegenerateDataError(f"Collapse needs at least 3 points, got {len(data)}")

    alphas, nus = grid.alpha_values(), grid.nu_values()
    alpha = np.array([p.alpha for p in data], dtype=np.float64)
    L = np.array([p.L for p in data], dtype=np.float64)
    g = np.array([p.q_mean for p in data], dtype=np.float64)
    e = np.array([p.stderr for p in data], dtype=np.float64)

    logger.info(f"Grid search over {len(alphas)}x{len(nus)} cells with {len(data)} points, sizes {sizes}")
    surface = np.empty((len(alphas), len(nus)), dtype=np.float64)
    if workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = pool.map(lambda ac: _surface_row(ac, nus, alpha, L, g, e), alphas)
            for i, row in enumerate(rows):
                surface[i] = row
    else:
        for i, ac in enumerate(alphas):
            surface[i] = _surface_row(ac, nus, alpha, L, g, e)

    flat = int(np.argmin(surface))
    c_min = float(surface.flat[flat])
    if not np.isfinite(c_min):
        raise DegenerateDataError("Cost is infinite on the whole grid; check for zero error bars")
    i_min, j_min = np.unravel_index(flat, surface.shape)
    n_ties = int(np.sum(surface == c_min))
    if n_ties > 1:
        logger.warning(f"{n_ties} grid cells tie at C_min = {c_min:.6g}; reporting the lowest (alpha_c, nu)")

    labels, _ = ndimage.label(surface <= (1.0 + grid.r) * c_min)
    component = labels == labels[i_min, j_min]
    rows = np.flatnonzero(component.any(axis=1))
    cols = np.flatnonzero(component.any(axis=0))
    unbounded = bool(
        rows[0] == 0 or rows[-1] == len(alphas) - 1 or cols[0] == 0 or cols[-1] == len(nus) - 1
    )
    if unbounded:
        logger.warning("Uncertainty contour touches the grid boundary; widen the grid for a bounded estimate")

    return CollapseResult(
        alpha_c_exp=float(alphas[i_min]),
        nu_exp=float(nus[j_min]),
        c_min=c_min,
        uncertainty_alpha=float(alphas[rows[-1]] - alphas[rows[0]]) / 2,
        uncertainty_nu=float(nus[cols[-1]] - nus[cols[0]]) / 2,
        surface=surface,
        alpha_values=alphas,
        nu_values=nus,
        unbounded=unbounded,
        n_points=len(data),
        n_ties=n_ties,
    )


# ==================== OUTPUT ====================

def write_surface(path: str, result: CollapseResult) -> str:
    """Cost surface as alpha_c, nu, cost rows"""
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(SURFACE_COLUMNS)
            for i, ac in enumerate(result.alpha_values):
                for j, nu in enumerate(result.nu_values):
                    writer.writerow([f"{ac:.10g}", f"{nu:.10g}", repr(float(result.surface[i, j]))])
    except OSError as e:
        logger.error(f"Error writing cost surface: {str(e)}")
        raise OutputError(path, str(e)) from e
    logger.info(f"Cost surface written: {path}")
    return path


def collapsed_rows(points: Sequence[DataPoint], result: CollapseResult, grid: ScalingGrid) -> List[list]:
    """Windowed points rescaled at the fitted (alpha_c, nu), ordered by L then t"""
    exponent = 1.0 / result.nu_exp
    rows = [
        [p.L, p.alpha, float((p.alpha - result.alpha_c_exp) * p.L ** exponent), p.q_mean, p.stderr]
        for p in window_points(points, grid)
    ]
    return sorted(rows, key=lambda row: (row[0], row[2]))


def write_collapsed_curve(path: str, points: Sequence[DataPoint], result: CollapseResult, grid: ScalingGrid) -> str:
    """L, alpha, t, q_mean, stderr rows; plotting q against t per L shows the collapse"""
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        with open(path, "w", newline="", encoding="utf-8") as f:
            writer = csv.writer(f)
            writer.writerow(COLLAPSED_COLUMNS)
            for L, alpha, t, q, e in collapsed_rows(points, result, grid):
                writer.writerow([L, repr(alpha), repr(t), repr(q), repr(e)])
    except OSError as e:
        logger.error(f"Error writing collapsed curve: {str(e)}")
        raise OutputError(path, str(e)) from e
    logger.info(f"Collapsed curve written: {path}")
    return path


def render_report(result: CollapseResult, grid: ScalingGrid) -> str:
    lines = [
        "Finite-size scaling collapse",
        f"  alpha_c = {result.alpha_c_exp:.3f} +/- {result.uncertainty_alpha:.3f}",
        f"  nu      = {result.nu_exp:.2f} +/- {result.uncertainty_nu:.2f}",
        f"  C_min   = {result.c_min:.6g}",
        f"  contour = (1 + {grid.r}) C_min" + ("  [UNBOUNDED-UNCERTAINTY]" if result.unbounded else ""),
        f"  grid    = alpha_c [{grid.alpha_c_min}, {grid.alpha_c_max}] step {grid.alpha_c_step}, "
        f"nu [{grid.nu_min}, {grid.nu_max}] step {grid.nu_step}",
        f"  window  = {grid.window_center} +/- {grid.window} ({result.n_points} points)",
    ]
    if result.n_ties > 1:
        lines.append(f"  ties    = {result.n_ties} cells at C_min")
    return "\n".join(lines) + "\n"


def write_report(path: str, result: CollapseResult, grid: ScalingGrid) -> str:
    try:
        Path(path).parent.mkdir(parents=True, exist_ok=True)
        Path(path).write_text(render_report(result, grid), encoding="utf-8")
    except OSError as e:
        logger.error(f"Error writing fit report: {str(e)}")
        raise OutputError(path, str(e)) from e
    return path


def collapse_csv(path: str, grid: ScalingGrid = ScalingGrid(), workers: int = 1) -> CollapseResult:
    """Grid search on a DataPoint CSV"""
    points = load_data_points(path)
    logger.info(f"Loaded {len(points)} data points from {path}")
    return grid_search(points, grid, workers)
