"""Exact-evolution experiments: decay curves, mutual information, decay times and sweeps."""
from __future__ import annotations

import logging
import math
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Callable, Sequence

import numpy as np

from .model import ModelInstance, PathwaySpec, assemble_model, paper_figure_model
from .perturb import decay_probability_perturbative, fgr_rate, qubit_model_mutual_information
from .qcore import evolve, evolve_many, subsystem_entropy

log = logging.getLogger(__name__)

SERIES_COLUMNS = ("P_numeric", "P_perturbative", "I_numeric", "I_model", "S_A", "S_B")
LOG2 = math.log(2)


class DecayTimeNotReached(RuntimeError):
    def __init__(self, target: float, max_p: float, t_max: float):
        self.target = target
        self.max_p = max_p
        self.t_max = t_max
        super().__init__(
            f"decay probability never reached {target:g} up to t = {t_max:.6g} "
            f"(max P attained {max_p:.6g})"
        )


@dataclass
class TimeSeries:
    t: np.ndarray
    columns: dict[str, np.ndarray]
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        self.t = np.asarray(self.t, dtype=float)
        for name, col in self.columns.items():
            col = np.asarray(col, dtype=float)
            if col.shape != self.t.shape:
                raise ValueError(f"column {name} has {col.size} samples, grid has {self.t.size}")
            self.columns[name] = col

    def __getitem__(self, name: str) -> np.ndarray:
        return self.columns[name]

    def merged(self, other: "TimeSeries") -> "TimeSeries":
        if not np.array_equal(self.t, other.t):
            raise ValueError("cannot merge series on different grids")
        return TimeSeries(self.t, {**self.columns, **other.columns}, {**self.metadata, **other.metadata})


@dataclass(frozen=True)
class RateFit:
    slope: float
    intercept: float
    r_squared: float
    fitted_k: float | None = None


@dataclass(frozen=True)
class SweepRow:
    c: float
    inv_c_squared: float
    t_target: float
    valid: bool
    error: str | None = None


@dataclass
class SweepResult:
    rows: list[SweepRow]
    fit: RateFit | None
    target: float
    metadata: dict = field(default_factory=dict)

    @property
    def valid_rows(self) -> list[SweepRow]:
        return [r for r in self.rows if r.valid]

    def k_values(self, energy_scale: float = 1.0) -> np.ndarray:
        """Per-row 2 log 2 / (T * E * c^2): the transfer-rate constant each point implies."""
        rows = self.valid_rows
        return np.array([2 * LOG2 / (r.t_target * energy_scale * r.c ** 2) for r in rows])

    def k_spread(self, energy_scale: float = 1.0) -> float:
        """max(K)/min(K) - 1 over valid rows."""
        k = self.k_values(energy_scale)
        return float(k.max() / k.min() - 1)


def linear_fit(x: Sequence[float], y: Sequence[float]) -> RateFit:
    """Ordinary least squares ``y = slope * x + intercept``."""
    x = np.asarray(x, dtype=float)
    y = np.asarray(y, dtype=float)
    if x.shape != y.shape or x.ndim != 1:
        raise ValueError("x and y must be 1-d and of equal length")
    if x.size < 2:
        raise ValueError("need at least two points to fit a line")
    xm, ym = x.mean(), y.mean()
    dx = x - xm
    sxx = float(dx @ dx)
    if sxx <= 1e-300 * max(1.0, xm * xm):
        raise ValueError("x values are all equal; slope is undefined")
    slope = float(dx @ (y - ym)) / sxx
    intercept = float(ym - slope * xm)
    resid = y - (slope * x + intercept)
    ss_res = float(resid @ resid)
    ss_tot = float((y - ym) @ (y - ym))
    r2 = 1.0 if ss_tot == 0 else 1.0 - ss_res / ss_tot
    return RateFit(slope, intercept, min(max(r2, 0.0), 1.0))


# ---------------------------------------------------------------- time series


def excited_index(model: ModelInstance) -> int:
    return model.dim_a - 1


def default_time_grid(
    model: ModelInstance, samples: int = 400, span: float = 1.5, target: float = 0.8
) -> np.ndarray:
    """Uniform grid up to ``span * |log(1 - target)| / rate`` with the FGR rate."""
    rate = fgr_rate(model, excited_index(model))
    if rate <= 0:
        raise ValueError("FGR rate is zero; supply an explicit time grid")
    return np.linspace(0.0, span * abs(math.log(1 - target)) / rate, samples)


def _branch_states(model: ModelInstance, k: int, grid) -> np.ndarray:
    """U(t)|K>|psi0> for every t, shape (T, dA, dB)."""
    out = evolve_many(model.product_state(k), model.eig_total, grid)
    return out.reshape(len(grid), model.dim_a, model.dim_b)


def _population(branches: np.ndarray, model: ModelInstance, k: int) -> np.ndarray:
    amp = np.einsum("a,tab->tb", model.eig_a.eigenvectors[:, k].conj(), branches)
    return np.sum(np.abs(amp) ** 2, axis=-1)


def decay_probability_exact(model: ModelInstance, t, k: int | None = None) -> np.ndarray:
    """1 - <Pi_K> after exact evolution of |K>|psi0>."""
    k = excited_index(model) if k is None else k
    t_arr = np.atleast_1d(np.asarray(t, dtype=float))
    p = 1.0 - _population(_branch_states(model, k, t_arr), model, k)
    return p if np.ndim(t) else float(p[0])


def _grid_metadata(model: ModelInstance, grid) -> dict:
    grid = np.asarray(grid, dtype=float)
    return {
        "model": dict(model.metadata),
        "couplings": [p.c for p in model.pathways],
        "grid": {"t_min": float(grid[0]), "t_max": float(grid[-1]), "samples": int(grid.size)},
    }


def run_decay_series(model: ModelInstance, grid) -> TimeSeries:
    """Exact and first-order decay probability of A's excited state."""
    grid = np.asarray(grid, dtype=float)
    k = excited_index(model)
    p_num = decay_probability_exact(model, grid, k)
    p_pert = decay_probability_perturbative(model, k, grid).probability
    return TimeSeries(grid, {"P_numeric": p_num, "P_perturbative": p_pert}, _grid_metadata(model, grid))


def entangled_trajectory(model: ModelInstance, grid) -> np.ndarray:
    """Abar x A x B state at every time, starting maximally entangled over all of A.

    Abar does not evolve, so each Abar branch is an independently evolved
    |K>|psi0>. Shape (T, dA * dA * dB).
    """
    n = model.dim_a
    branches = np.stack([_branch_states(model, k, grid) for k in range(n)], axis=1)
    return branches.reshape(len(grid), -1) / math.sqrt(n)


def run_mi_series(model: ModelInstance, grid) -> TimeSeries:
    """Mutual information I(B, Abar) from exact evolution and from the qubit model.

    The model curve is fed with the exactly computed decay probability.
    Extra columns ``I_A_Abar``, ``S_Abar`` and ``excited_population`` carry
    the quantities the pure-state identities are checked against.
    """
    grid = np.asarray(grid, dtype=float)
    dims = (model.dim_a, model.dim_a, model.dim_b)
    k_exc = excited_index(model)
    states = entangled_trajectory(model, grid)
    cols = {name: np.empty(grid.size) for name in ("S_A", "S_B", "S_Abar", "I_numeric", "I_A_Abar")}
    for n, psi in enumerate(states):
        s_bar = subsystem_entropy(psi, dims, [0])
        s_a = subsystem_entropy(psi, dims, [1])
        s_b = subsystem_entropy(psi, dims, [2])
        s_a_bar = subsystem_entropy(psi, dims, [0, 1])
        s_b_bar = subsystem_entropy(psi, dims, [0, 2])
        cols["S_A"][n] = s_a
        cols["S_B"][n] = s_b
        cols["S_Abar"][n] = s_bar
        cols["I_numeric"][n] = s_b + s_bar - s_b_bar
        cols["I_A_Abar"][n] = s_a + s_bar - s_a_bar

    reshaped = states.reshape(grid.size, model.dim_a, model.dim_a, model.dim_b)
    vk = model.eig_a.eigenvectors[:, k_exc].conj()
    cols["excited_population"] = np.sum(np.abs(np.einsum("a,txab->txb", vk, reshaped)) ** 2, axis=(1, 2))

    p_num = decay_probability_exact(model, grid, k_exc)
    cols["P_numeric"] = p_num
    cols["I_model"] = qubit_model_mutual_information(np.clip(p_num, 0.0, 1.0))
    return TimeSeries(grid, cols, _grid_metadata(model, grid))


def run_full_series(model: ModelInstance, grid) -> TimeSeries:
    return run_decay_series(model, grid).merged(run_mi_series(model, grid))


# ---------------------------------------------------------------- decay times


def find_decay_time(
    model: ModelInstance,
    target: float = 0.8,
    grid=None,
    rtol: float = 1e-6,
    extend: int = 0,
) -> float:
    """First time the exact decay probability reaches ``target``.

    The first grid crossing is bracketed and refined by bisection on the
    exact evolution. If the target is not reached, the grid is doubled in
    length up to ``extend`` times before giving up.
    """
    if not 0 < target < 1:
        raise ValueError(f"target must lie in (0, 1), got {target}")
    grid = default_time_grid(model, target=target) if grid is None else np.asarray(grid, dtype=float)
    k = excited_index(model)
    psi = model.product_state(k)
    vk = model.eig_a.eigenvectors[:, k].conj()

    def p_at(t: float) -> float:
        phi = evolve(psi, model.eig_total, t).reshape(model.dim_a, model.dim_b)
        return 1.0 - float(np.sum(np.abs(vk @ phi) ** 2))

    for attempt in range(extend + 1):
        p = decay_probability_exact(model, grid, k)
        hits = np.flatnonzero(p >= target)
        if hits.size:
            break
        if attempt == extend:
            raise DecayTimeNotReached(target, float(p.max()), float(grid[-1]))
        # same spacing, twice the span
        grid = np.linspace(0.0, 2 * grid[-1], 2 * grid.size - 1)
        log.debug("extending decay-time grid to t = %g", grid[-1])

    n = int(hits[0])
    if n == 0:
        return float(grid[0])
    lo, hi = float(grid[n - 1]), float(grid[n])
    while hi - lo > rtol * hi:
        mid = 0.5 * (lo + hi)
        if p_at(mid) >= target:
            hi = mid
        else:
            lo = mid
    return 0.5 * (lo + hi)


def paper_couplings() -> list[float]:
    """c = 1/500 + i/6000 for i = 1..10."""
    return [1 / 500 + i / 6000 for i in range(1, 11)]


ModelFactory = Callable[[float], ModelInstance]


def _sweep_row(factory: ModelFactory, c: float, target: float, samples: int, span: float, extend: int) -> SweepRow:
    model = factory(c)
    try:
        grid = default_time_grid(model, samples=samples, span=span, target=target)
        t = find_decay_time(model, target, grid, extend=extend)
    except (DecayTimeNotReached, ValueError) as exc:
        log.warning("sweep row c=%g invalid: %s", c, exc)
        return SweepRow(c, 1 / c ** 2, math.nan, False, str(exc))
    return SweepRow(c, 1 / c ** 2, t, True)


def coupling_sweep(
    couplings: Sequence[float],
    seed_a: int | None,
    seed_b: int | None,
    target: float = 0.8,
    factory: ModelFactory | None = None,
    samples: int = 400,
    span: float = 1.5,
    extend: int = 3,
    workers: int | None = None,
) -> SweepResult:
    """Decay time versus coupling, with one Haar draw shared by every row.

    ``factory(c)`` builds the model for coupling ``c``; by default it is the
    qubit-plus-7-qubit-environment model with the given seeds. Rows whose
    target is never reached are kept and marked invalid. The fit of
    T against 1/c^2 uses the valid rows.
    """
    couplings = sorted(float(c) for c in couplings)
    if any(c <= 0 for c in couplings):
        raise ValueError("couplings must be positive")
    if factory is None:
        def factory(c):
            return paper_figure_model(c, seed_a, seed_b)

    def run(c):
        return _sweep_row(factory, c, target, samples, span, extend)

    if workers and workers > 1:
        with ThreadPoolExecutor(max_workers=workers) as pool:
            rows = list(pool.map(run, couplings))
    else:
        rows = [run(c) for c in couplings]

    valid = [r for r in rows if r.valid]
    fit = None
    if len(valid) >= 2:
        fit = linear_fit([r.inv_c_squared for r in valid], [r.t_target for r in valid])
        fit = replace(fit, fitted_k=2 * LOG2 / fit.slope if fit.slope > 0 else math.nan)
    metadata = {"seedA": seed_a, "seedB": seed_b, "target": target, "samples": samples, "span": span}
    return SweepResult(rows, fit, target, metadata)


@dataclass(frozen=True)
class AdditivityReport:
    c1: float
    c2: float
    t_single: tuple[float, float]
    t_combined: float
    inverse_sum: float
    inverse_combined: float

    @property
    def ratio(self) -> float:
        """Combined 1/T over the sum of single-pathway 1/T."""
        return self.inverse_combined / self.inverse_sum


def _paper_model_with(pathways: Sequence[PathwaySpec], seed_a, seed_b) -> ModelInstance:
    base = paper_figure_model(0.0, seed_a, seed_b)
    return assemble_model(base.spec_a, base.spec_b, pathways, "ground", metadata=dict(base.metadata))


def pathway_additivity_check(
    c1: float,
    c2: float,
    seed_a: int | None,
    seed_b: int | None,
    target: float = 0.8,
    env_ops: tuple[str, str] = ("sigmaX-on-env-qubit-1", "sigmaX-on-env-qubit-2"),
    extend: int = 3,
) -> AdditivityReport:
    """Compare 1/T of a two-pathway model with the sum over each pathway alone.

    A pathway with zero coupling contributes 1/T = 0 without being run.
    """
    paths = [
        PathwaySpec(float(c1), "sigmaX-eigenbasis", env_ops[0]),
        PathwaySpec(float(c2), "sigmaX-eigenbasis", env_ops[1]),
    ]

    def decay_time(pathways):
        model = _paper_model_with(pathways, seed_a, seed_b)
        return find_decay_time(model, target, extend=extend)

    singles = tuple(math.inf if p.c == 0 else decay_time([p]) for p in paths)
    combined = decay_time(paths)
    return AdditivityReport(
        float(c1),
        float(c2),
        singles,
        combined,
        sum(1 / t for t in singles),
        1 / combined,
    )
