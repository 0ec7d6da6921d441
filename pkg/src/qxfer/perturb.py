"""First-order perturbation theory in the coupling H_I.

All matrix elements are taken in the product eigenbasis |K>|i> of
H_A + H_B, with the environment starting in |psi0> of energy E_0. The
first-order amplitude for |K>|psi0> -> |K'>|i> is::

    A = -2i <i|<K'|H_I|K>|psi0> sin(t dE/2)/dE exp(i t dE/2)
    dE = E_K' + E_i - E_K - E_0
"""
from __future__ import annotations

import logging
from dataclasses import dataclass
from typing import NamedTuple, Sequence

import numpy as np

from .model import ModelInstance

log = logging.getLogger(__name__)

VALIDITY_THRESHOLD = 0.5
FGR_WINDOW_SPACINGS = 10
PROBABILITY_SLACK = 1e-9


def _half_sinc(t, de):
    """sin(t dE/2)/dE, continuous through dE = 0 where it equals t/2."""
    return 0.5 * t * np.sinc(t * de / (2 * np.pi))


@dataclass(frozen=True)
class AmplitudeTable:
    """First-order amplitudes at a single time.

    ``entries[n, K', i]`` is the amplitude from ``|initial[n]>|psi0>`` to
    ``|K'>|i>``. The entry with ``K' = initial[n]`` and ``i = psi0`` is
    kept at zero: that component is the survival amplitude B_K.
    """

    t: float
    initial: tuple[int, ...]
    entries: np.ndarray
    delta_e: np.ndarray
    psi0_index: int

    def row(self, k: int) -> np.ndarray:
        return self.entries[self.initial.index(k)]


@dataclass(frozen=True)
class BandSpec:
    initial: tuple[int, ...]
    final: tuple[int, ...]
    window: float | None = None

    def __post_init__(self):
        object.__setattr__(self, "initial", tuple(int(k) for k in self.initial))
        object.__setattr__(self, "final", tuple(int(k) for k in self.final))
        if not self.initial:
            raise ValueError("initial band is empty")

    @property
    def n_initial(self) -> int:
        return len(self.initial)

    @property
    def n_final(self) -> int:
        return len(self.final)

    @property
    def overlapping(self) -> bool:
        return bool(set(self.initial) & set(self.final))


class DecayEstimate(NamedTuple):
    probability: np.ndarray
    valid: np.ndarray


class BandDensities(NamedTuple):
    rho_a: np.ndarray
    rho_b: np.ndarray
    trace_deficit_a: float
    trace_deficit_b: float


def _final_energy_offsets(model: ModelInstance, k: int) -> np.ndarray:
    ea = model.eig_a.eigenvalues
    eb = model.eig_b.eigenvalues
    return ea[:, None] + eb[None, :] - ea[k] - model.e0


def matrix_elements(model: ModelInstance, k: int) -> np.ndarray:
    """<i|<K'|H_I|K>|psi0> as an array indexed ``[K', i]``."""
    return model.interaction_eigenbasis[:, :, k, model.psi0_index]


def transition_amplitude(model: ModelInstance, k: int, k_final: int, i: int, t: float) -> complex:
    m = matrix_elements(model, k)[k_final, i]
    de = _final_energy_offsets(model, k)[k_final, i]
    return complex(-2j * m * _half_sinc(t, de) * np.exp(0.5j * t * de))


def amplitude_table(model: ModelInstance, t: float, initial: Sequence[int] | None = None) -> AmplitudeTable:
    if initial is None:
        initial = range(model.dim_a)
    initial = tuple(int(k) for k in initial)
    entries = np.empty((len(initial), model.dim_a, model.dim_b), dtype=complex)
    delta = np.empty((len(initial), model.dim_a, model.dim_b))
    for n, k in enumerate(initial):
        de = _final_energy_offsets(model, k)
        amp = -2j * matrix_elements(model, k) * _half_sinc(t, de) * np.exp(0.5j * t * de)
        amp[k, model.psi0_index] = 0.0
        entries[n] = amp
        delta[n] = de
    return AmplitudeTable(float(t), initial, entries, delta, model.psi0_index)


def _final_channels(
    model: ModelInstance, k: int, final: Sequence[int] | None
) -> tuple[np.ndarray, np.ndarray]:
    """Squared matrix elements and detunings of every transition out of |K>|psi0>.

    ``final`` lists the allowed K' (default: all K' != K). The no-transition
    entry K' = K, i = psi0 is always excluded.
    """
    if final is None:
        final = [kf for kf in range(model.dim_a) if kf != k]
    mask = np.zeros((model.dim_a, model.dim_b), dtype=bool)
    mask[list(final), :] = True
    mask[k, model.psi0_index] = False
    m2 = np.abs(matrix_elements(model, k)[mask]) ** 2
    return m2, _final_energy_offsets(model, k)[mask]


def decay_probability_perturbative(
    model: ModelInstance, k: int, t, final: Sequence[int] | None = None
) -> DecayEstimate:
    """P_K(t) = sum |A_{K'i,K0}(t)|^2 over final A-states K' != K and all i.

    ``t`` may be a scalar or an array. ``valid`` is False wherever the
    estimate exceeds 0.5, past which first order is unreliable.
    """
    t_arr = np.asarray(t, dtype=float)
    m2, de = _final_channels(model, k, final)
    f = _half_sinc(t_arr[..., None], de) ** 2
    p = 4.0 * f @ m2
    return DecayEstimate(p, p <= VALIDITY_THRESHOLD)


def band_projector_weight(delta_e, t: float):
    """(1/2pi) sin^2(t dE/2) / (t dE/2)^2, the sinc^2 band weight of width ~1/t."""
    if t <= 0:
        raise ValueError(f"band projector needs t > 0, got {t}")
    return np.sinc(t * np.asarray(delta_e, dtype=float) / (2 * np.pi)) ** 2 / (2 * np.pi)


def mean_level_spacing(spectrum: np.ndarray) -> float:
    """Typical gap between adjacent levels (median of nonzero gaps)."""
    gaps = np.diff(np.sort(np.asarray(spectrum, dtype=float)))
    gaps = gaps[gaps > 1e-14]
    if gaps.size == 0:
        raise ValueError("spectrum has no distinct levels")
    return float(np.median(gaps))


def fgr_rate(model: ModelInstance, k: int, window: float | None = None) -> float:
    """Fermi-Golden-Rule decay rate out of |K>|psi0>.

    Averages |<K'i|H_I|K psi0>|^2 over final states (K' != K) within
    ``window`` of resonance and multiplies by 2 pi times their density.
    The default window is ten environment level spacings.
    """
    if window is None:
        window = FGR_WINDOW_SPACINGS * mean_level_spacing(model.spec_b.spectrum)
    if window <= 0:
        raise ValueError(f"window must be positive, got {window}")
    m2, de = _final_channels(model, k, None)
    inside = np.abs(de) <= 0.5 * window * (1 + 1e-12)
    if not inside.any():
        nearest = float(de[np.argmin(np.abs(de))])
        raise ValueError(
            f"no final states within window {window:.4g} of resonance; "
            f"nearest level is detuned by {nearest:.4g}"
        )
    density = inside.sum() / window
    return float(2 * np.pi * m2[inside].mean() * density)


def _xlogx(x):
    x = np.asarray(x, dtype=float)
    safe = np.where(x > 0, x, 1.0)
    return np.where(x > 0, x * np.log(safe), 0.0)


def _check_probability(p):
    p = np.asarray(p, dtype=float)
    if np.any(p < -PROBABILITY_SLACK) or np.any(p > 1 + PROBABILITY_SLACK):
        raise ValueError("decay probability must lie in [0, 1]")
    return np.clip(p, 0.0, 1.0)


def qubit_model_entropies(p):
    """Entropies (S_A, S_B) in nats of the decaying-qubit model at decay probability ``p``."""
    p = _check_probability(p)
    s_a = -(_xlogx((1 + p) / 2) + _xlogx((1 - p) / 2))
    s_b = -_xlogx(1 - p / 2) - _xlogx(p / 2)
    if s_a.ndim == 0:
        return float(s_a), float(s_b)
    return s_a, s_b


def qubit_model_mutual_information(p):
    """I(B, Abar) = S_B - S_A + log 2; rises from 0 at p=0 to 2 log 2 at p=1."""
    s_a, s_b = qubit_model_entropies(p)
    out = np.asarray(s_b) - np.asarray(s_a) + np.log(2)
    return float(out) if out.ndim == 0 else out


def band_reduced_densities(table: AmplitudeTable, band: BandSpec) -> BandDensities:
    """First-order reduced states of A and B for the band-entangled initial state.

    Only amplitudes into the final band are kept. Both matrices are in the
    eigenbases of H_A and H_B and are renormalized to unit trace; the
    returned deficits are ``1 - trace`` before renormalization.
    """
    missing = set(band.initial) - set(table.initial)
    if missing:
        raise ValueError(f"amplitude table lacks initial states {sorted(missing)}")
    n_a, n_b = table.entries.shape[1:]
    if any(k < 0 or k >= n_a for k in band.final):
        raise ValueError(f"final band {band.final} outside dimension {n_a}")

    keep = np.zeros(n_a, dtype=bool)
    keep[list(band.final)] = True
    e0 = np.zeros(n_b)
    e0[table.psi0_index] = 1.0
    rho_a = np.zeros((n_a, n_a), dtype=complex)
    rho_b = np.zeros((n_b, n_b), dtype=complex)
    for k in band.initial:
        amp = table.row(k) * keep[:, None]
        survive = max(0.0, 1.0 - float(np.sum(np.abs(amp) ** 2)))
        rho_a[k, k] += survive
        rho_a += amp @ amp.conj().T
        rho_b += survive * np.outer(e0, e0)
        rho_b += amp.T @ amp.conj()
    rho_a /= band.n_initial
    rho_b /= band.n_initial

    tr_a = float(np.trace(rho_a).real)
    tr_b = float(np.trace(rho_b).real)
    if abs(1 - tr_a) > 1e-12 or abs(1 - tr_b) > 1e-12:
        log.info("renormalizing band densities: trace deficits %.3e (A), %.3e (B)", 1 - tr_a, 1 - tr_b)
    return BandDensities(rho_a / tr_a, rho_b / tr_b, 1 - tr_a, 1 - tr_b)


def band_rate_estimate(model: ModelInstance, band: BandSpec, t: float) -> tuple[float, float]:
    """Estimated information transfer rate for a band of N -> N' states.

    Returns ``(2 log(N/N') * rate, rate)`` where ``rate`` is
    ``2 pi t <H_I P_{1/t} H_I>`` averaged uniformly over the initial band,
    the projector running over the final band and all environment states.
    """
    if band.n_final == 0:
        raise ValueError("final band is empty")
    if t <= 0:
        raise ValueError(f"t must be positive, got {t}")
    rates = []
    for k in band.initial:
        m2, de = _final_channels(model, k, band.final)
        rates.append(2 * np.pi * t * float(np.sum(m2 * band_projector_weight(de, t))))
    rate = float(np.mean(rates))
    return 2 * np.log(band.n_initial / band.n_final) * rate, rate
