"""Dense linear algebra and state primitives.

States are 1-d complex arrays and operators 2-d complex arrays. Composite
systems are described by ``dims``, the ordered list of tensor-factor
dimensions, e.g. ``(2, 2, 128)`` for Abar x A x B.
"""
from __future__ import annotations

from dataclasses import dataclass
from typing import Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
ENTROPY_CLIP = 1e-12


class NotHermitianError(ValueError):
    """Raised when an operator required to be Hermitian is not."""

    def __init__(self, asymmetry: float, tol: float = HERMITIAN_TOL, what: str = "matrix"):
        self.asymmetry = asymmetry
        super().__init__(
            f"{what} is not Hermitian: max|M - M^dag| = {asymmetry:.3e} > {tol:.1e}"
        )


def dag(m: np.ndarray) -> np.ndarray:
    return np.conj(m).T


def hermitian_asymmetry(m: np.ndarray) -> float:
    m = np.asarray(m)
    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {m.shape}")
    return float(np.max(np.abs(m - dag(m)))) if m.size else 0.0


def kron(a: np.ndarray, b: np.ndarray) -> np.ndarray:
    """Tensor product; entry ``(i*rb + k, j*cb + l)`` equals ``a[i, j] * b[k, l]``."""
    return np.kron(np.asarray(a, dtype=complex), np.asarray(b, dtype=complex))


@dataclass(frozen=True)
class SpectralDecomposition:
    """Eigenvalues (ascending) and the unitary whose columns are eigenvectors."""

    eigenvalues: np.ndarray
    eigenvectors: np.ndarray

    @property
    def dim(self) -> int:
        return len(self.eigenvalues)

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ dag(v)

    def propagator(self, t: float) -> np.ndarray:
        """The full matrix exp(-iHt)."""
        v = self.eigenvectors
        return (v * np.exp(-1j * self.eigenvalues * t)) @ dag(v)


def eig_decompose(h: np.ndarray, tol: float = HERMITIAN_TOL) -> SpectralDecomposition:
    h = np.asarray(h, dtype=complex)
    asym = hermitian_asymmetry(h)
    if asym > tol:
        raise NotHermitianError(asym, tol)
    w, v = np.linalg.eigh(0.5 * (h + dag(h)))
    return SpectralDecomposition(w, v)


def evolve(state: np.ndarray, decomp: SpectralDecomposition, t: float) -> np.ndarray:
    """Apply exp(-iHt) to ``state`` using a precomputed decomposition of H."""
    state = np.asarray(state, dtype=complex)
    if state.shape != (decomp.dim,):
        raise ValueError(
            f"state has shape {state.shape}, decomposition has dim {decomp.dim}"
        )
    v = decomp.eigenvectors
    return v @ (np.exp(-1j * decomp.eigenvalues * t) * (dag(v) @ state))


def evolve_many(
    state: np.ndarray, decomp: SpectralDecomposition, times: Sequence[float]
) -> np.ndarray:
    """Evolve ``state`` to every time in ``times``.

    Returns an array of shape ``(len(times), dim)``; row ``n`` is the state
    at ``times[n]``.
    """
    state = np.asarray(state, dtype=complex)
    if state.shape != (decomp.dim,):
        raise ValueError(
            f"state has shape {state.shape}, decomposition has dim {decomp.dim}"
        )
    times = np.asarray(times, dtype=float)
    v = decomp.eigenvectors
    coef = dag(v) @ state
    phases = np.exp(-1j * np.outer(times, decomp.eigenvalues))
    return (phases * coef) @ v.T


def _check_dims(dims: Sequence[int], size: int) -> tuple[int, ...]:
    dims = tuple(int(d) for d in dims)
    if any(d < 1 for d in dims):
        raise ValueError(f"subsystem dimensions must be positive, got {dims}")
    if int(np.prod(dims)) != size:
        raise ValueError(f"dims {dims} do not multiply to {size}")
    return dims


def _check_keep(keep: Sequence[int], n: int) -> tuple[int, ...]:
    keep = tuple(int(k) for k in keep)
    if len(set(keep)) != len(keep) or any(k < 0 or k >= n for k in keep):
        raise ValueError(f"invalid subsystem indices {keep} for {n} subsystems")
    return tuple(sorted(keep))


def partial_trace(
    state: np.ndarray, dims: Sequence[int], keep: Sequence[int]
) -> np.ndarray:
    """Reduced density matrix of the subsystems listed in ``keep``.

    Parameters
    ----------
    state : array
        Either a pure state vector or a density matrix on the composite space.
    dims : sequence of int
        Dimensions of the tensor factors.
    keep : sequence of int
        Indices of the factors to keep. The result is ordered by factor index.

    Returns
    -------
    array
        Density matrix of dimension ``prod(dims[k] for k in keep)``.
    """
    state = np.asarray(state, dtype=complex)
    dims = _check_dims(dims, state.shape[0])
    keep = _check_keep(keep, len(dims))
    n = len(dims)
    traced = [k for k in range(n) if k not in keep]
    dk = int(np.prod([dims[k] for k in keep]))

    if state.ndim == 1:
        psi = state.reshape(dims)
        psi = np.transpose(psi, keep + tuple(traced)).reshape(dk, -1)
        return psi @ dag(psi)

    if state.shape != (state.shape[0], state.shape[0]):
        raise ValueError(f"expected a vector or square matrix, got {state.shape}")
    rho = state.reshape(dims + dims)
    # contract each traced factor's row index with its column index
    letters = "abcdefghijklmnopqrstuvwxyz"
    rows = list(letters[:n])
    cols = list(letters[n:2 * n])
    for k in traced:
        cols[k] = rows[k]
    out = "".join(rows[k] for k in keep) + "".join(cols[k] for k in keep)
    reduced = np.einsum("".join(rows) + "".join(cols) + "->" + out, rho)
    return reduced.reshape(dk, dk)


def von_neumann_entropy(rho: np.ndarray) -> float:
    """-Tr(rho log rho) in nats; eigenvalues within 1e-12 of zero contribute nothing."""
    p = np.linalg.eigvalsh(np.asarray(rho, dtype=complex))
    p = p[p > ENTROPY_CLIP]
    return float(max(-np.sum(p * np.log(p)), 0.0))


def subsystem_entropy(state: np.ndarray, dims: Sequence[int], keep: Sequence[int]) -> float:
    """Entropy of the factors ``keep`` of a composite state.

    For a pure ``state`` this uses whichever of ``keep`` and its complement
    is smaller, since both reduced states share their nonzero spectrum.
    """
    state = np.asarray(state, dtype=complex)
    dims = _check_dims(dims, state.shape[0])
    keep = _check_keep(keep, len(dims))
    if not keep:
        return 0.0
    if state.ndim == 2:
        return von_neumann_entropy(partial_trace(state, dims, keep))
    rest = tuple(k for k in range(len(dims)) if k not in keep)
    if not rest:
        return 0.0
    dk = np.prod([dims[k] for k in keep])
    dr = np.prod([dims[k] for k in rest])
    return von_neumann_entropy(partial_trace(state, dims, keep if dk <= dr else rest))


def mutual_information(
    state: np.ndarray, dims: Sequence[int], x: Sequence[int], y: Sequence[int]
) -> float:
    """I(X, Y) = S(X) + S(Y) - S(XY) in nats.

    ``state`` is a state vector or density matrix on the factors ``dims``;
    ``x`` and ``y`` are disjoint lists of factor indices.
    """
    x = tuple(int(k) for k in x)
    y = tuple(int(k) for k in y)
    if set(x) & set(y):
        raise ValueError(f"subsystem index sets overlap: {x} and {y}")
    return (
        subsystem_entropy(state, dims, x)
        + subsystem_entropy(state, dims, y)
        - subsystem_entropy(state, dims, x + y)
    )
