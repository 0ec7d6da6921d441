"""Construction of coupled A x B systems.

A model fixes the spectra of H_A and H_B, draws their eigenbases from the
Haar measure, and couples the two through a sum of product operators
(one term per pathway)::

    H = H_A x 1 + 1 x H_B + sum_g c_g E  O_A^g x O_B^g
"""
from __future__ import annotations

import json
import re
from dataclasses import dataclass, field
from functools import cached_property
from os import PathLike
from typing import Any, NamedTuple, Sequence, Union

import numpy as np

from .qcore import (
    HERMITIAN_TOL,
    NotHermitianError,
    SpectralDecomposition,
    dag,
    eig_decompose,
    hermitian_asymmetry,
    kron,
)

SIGMA_X = np.array([[0, 1], [1, 0]], dtype=complex)

PAPER_ENV_QUBITS = 7
PAPER_ENV_SPACING = 1 / 600

Operator = Union[str, np.ndarray]


def haar_unitary(dim: int, seed=None) -> np.ndarray:
    """Draw a Haar-random unitary.

    QR of a complex Ginibre matrix, with the phases of R's diagonal moved
    into Q so the result is exactly Haar distributed.
    """
    if dim < 1:
        raise ValueError(f"dimension must be at least 1, got {dim}")
    rng = np.random.default_rng(seed)
    z = (rng.standard_normal((dim, dim)) + 1j * rng.standard_normal((dim, dim))) / np.sqrt(2)
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


def derive_seeds(seed: int) -> tuple[int, int]:
    """Split one experiment seed into independent (A, B) eigenbasis seeds.

    The two seeds are the first two 32-bit words of
    ``numpy.random.SeedSequence(seed)``.
    """
    a, b = np.random.SeedSequence(int(seed)).generate_state(2, dtype=np.uint32)
    return int(a), int(b)


def paper_env_spectrum() -> np.ndarray:
    """Environment spectrum {0} U {1 + i/600 : i = -63..63}, 128 levels."""
    band = 1 + np.arange(-63, 64) * PAPER_ENV_SPACING
    return np.concatenate([[0.0], band])


@dataclass(frozen=True)
class SubsystemSpec:
    dim: int
    spectrum: np.ndarray
    seed: int | None = None

    def __post_init__(self):
        spectrum = np.sort(np.asarray(self.spectrum, dtype=float))
        if spectrum.ndim != 1 or len(spectrum) != self.dim:
            raise ValueError(
                f"spectrum has {spectrum.size} values, dimension is {self.dim}"
            )
        object.__setattr__(self, "spectrum", spectrum)


@dataclass(frozen=True)
class PathwaySpec:
    """One interaction term ``c * energy_scale * op_a x op_b``.

    Operators may be matrices or the names understood by
    :func:`resolve_operator`.
    """

    c: float
    op_a: Operator
    op_b: Operator
    energy_scale: float = 1.0

    @property
    def coefficient(self) -> float:
        return self.c * self.energy_scale


def hamiltonian_from_spectrum(spec: SubsystemSpec) -> tuple[np.ndarray, SpectralDecomposition]:
    """Return ``U diag(spectrum) U^dag`` with U Haar-random from ``spec.seed``.

    The decomposition is returned exactly as constructed rather than
    recomputed, so degenerate spectra keep the drawn eigenbasis.
    """
    u = haar_unitary(spec.dim, spec.seed)
    h = (u * spec.spectrum) @ dag(u)
    h = 0.5 * (h + dag(h))
    return h, SpectralDecomposition(spec.spectrum.copy(), u)


def normalized_norm(o: np.ndarray) -> float:
    """sqrt(Tr(O^2) / N), the typical size of a diagonal element of O^2."""
    o = np.asarray(o)
    if o.ndim != 2 or o.shape[0] != o.shape[1]:
        raise ValueError(f"expected a square matrix, got shape {o.shape}")
    n = o.shape[0]
    return float(np.sqrt(max(np.trace(o @ o).real, 0.0) / n))


def sigma_x_on_qubit(n_qubits: int, k: int) -> np.ndarray:
    """sigma^x on qubit ``k`` (1-based; qubit 1 is the leading tensor factor)."""
    if not 1 <= k <= n_qubits:
        raise ValueError(f"qubit index {k} outside 1..{n_qubits}")
    return kron(kron(np.eye(2 ** (k - 1)), SIGMA_X), np.eye(2 ** (n_qubits - k)))


_ENV_QUBIT = re.compile(r"sigmaX-on-env-qubit-(\d+)$")


def _parse_matrix_literal(entries: Any) -> np.ndarray:
    rows = []
    for row in entries:
        out = []
        for x in row:
            if isinstance(x, dict):
                out.append(complex(x.get("re", 0.0), x.get("im", 0.0)))
            elif isinstance(x, (list, tuple)):
                if len(x) != 2:
                    raise ValueError(f"complex entry must be [re, im], got {x!r}")
                out.append(complex(x[0], x[1]))
            else:
                out.append(complex(x))
        rows.append(out)
    m = np.array(rows, dtype=complex)
    if m.ndim != 2:
        raise ValueError("matrix literal must be a list of equal-length rows")
    return m


def resolve_operator(op: Operator, eig: SpectralDecomposition) -> np.ndarray:
    """Turn an operator name or literal into a matrix on a subsystem.

    Names
    -----
    ``sigmaX-eigenbasis``
        Exchanges the two eigenstates of a two-level Hamiltonian; ``eig``
        supplies that eigenbasis.
    ``sigmaX-on-env-qubit-k``
        sigma^x on qubit ``k`` of a register of qubits, in the computational
        basis.
    """
    dim = eig.dim
    if isinstance(op, str):
        if op == "sigmaX-eigenbasis":
            if dim != 2:
                raise ValueError(f"'{op}' needs a two-level subsystem, got dimension {dim}")
            v = eig.eigenvectors
            return v @ SIGMA_X @ dag(v)
        m = _ENV_QUBIT.match(op)
        if m:
            n_qubits = dim.bit_length() - 1
            if 2 ** n_qubits != dim:
                raise ValueError(f"'{op}' needs a qubit register, dimension {dim} is not 2^n")
            return sigma_x_on_qubit(n_qubits, int(m.group(1)))
        raise ValueError(f"unknown operator name {op!r}")
    if isinstance(op, np.ndarray):
        mat = op.astype(complex)
    else:
        mat = _parse_matrix_literal(op)
    if mat.shape != (dim, dim):
        raise ValueError(f"operator has shape {mat.shape}, subsystem dimension is {dim}")
    return mat


class CompositeState(NamedTuple):
    vector: np.ndarray
    dims: tuple[int, ...]


@dataclass(frozen=True)
class ModelInstance:
    spec_a: SubsystemSpec
    spec_b: SubsystemSpec
    pathways: tuple[PathwaySpec, ...]
    h_a: np.ndarray
    h_b: np.ndarray
    h_int: np.ndarray
    h_total: np.ndarray
    eig_a: SpectralDecomposition
    eig_b: SpectralDecomposition
    eig_total: SpectralDecomposition
    psi0_index: int
    metadata: dict = field(default_factory=dict, compare=False)

    @property
    def dim_a(self) -> int:
        return self.spec_a.dim

    @property
    def dim_b(self) -> int:
        return self.spec_b.dim

    @property
    def dims(self) -> tuple[int, int]:
        return (self.dim_a, self.dim_b)

    @property
    def psi0(self) -> np.ndarray:
        return self.eig_b.eigenvectors[:, self.psi0_index]

    @property
    def e0(self) -> float:
        return float(self.eig_b.eigenvalues[self.psi0_index])

    def product_state(self, k: int) -> np.ndarray:
        """|K>|psi0> on A x B, with |K> the k-th eigenstate of H_A."""
        return kron(self.eig_a.eigenvectors[:, k][:, None], self.psi0[:, None])[:, 0]

    @cached_property
    def interaction_eigenbasis(self) -> np.ndarray:
        """H_I in the product eigenbasis of H_A and H_B, shape (dA, dB, dA, dB).

        Entry ``[K', i, K, j]`` is ``<K'|<i| H_I |K>|j>``.
        """
        w = kron(self.eig_a.eigenvectors, self.eig_b.eigenvectors)
        m = dag(w) @ self.h_int @ w
        return m.reshape(self.dim_a, self.dim_b, self.dim_a, self.dim_b)

    @property
    def coupling_strength(self) -> float:
        """sum_g c_g^2."""
        return float(sum(p.c ** 2 for p in self.pathways))


def assemble_model(
    spec_a: SubsystemSpec,
    spec_b: SubsystemSpec,
    pathways: Sequence[PathwaySpec],
    psi0: Union[str, int] = "ground",
    metadata: dict | None = None,
) -> ModelInstance:
    """Build H = H_A + H_B + H_I and diagonalize it.

    ``psi0`` selects the initial environment eigenstate: ``"ground"`` (or
    ``"groundB"``) for the lowest level of H_B, or an explicit eigen-index.
    """
    h_a, eig_a = hamiltonian_from_spectrum(spec_a)
    h_b, eig_b = hamiltonian_from_spectrum(spec_b)
    da, db = spec_a.dim, spec_b.dim

    resolved = []
    h_int = np.zeros((da * db, da * db), dtype=complex)
    for n, p in enumerate(pathways):
        op_a = resolve_operator(p.op_a, eig_a)
        op_b = resolve_operator(p.op_b, eig_b)
        for side, op in (("A", op_a), ("B", op_b)):
            asym = hermitian_asymmetry(op)
            if asym > HERMITIAN_TOL:
                raise NotHermitianError(asym, what=f"pathway {n} operator on {side}")
        resolved.append(PathwaySpec(p.c, op_a, op_b, p.energy_scale))
        h_int = h_int + p.coefficient * kron(op_a, op_b)

    h_total = kron(h_a, np.eye(db)) + kron(np.eye(da), h_b) + h_int

    if psi0 in ("ground", "groundB"):
        psi0_index = 0
    elif isinstance(psi0, (int, np.integer)) and 0 <= psi0 < db:
        psi0_index = int(psi0)
    else:
        raise ValueError(f"invalid initial-state selector {psi0!r}")

    return ModelInstance(
        spec_a=spec_a,
        spec_b=spec_b,
        pathways=tuple(resolved),
        h_a=h_a,
        h_b=h_b,
        h_int=h_int,
        h_total=h_total,
        eig_a=eig_a,
        eig_b=eig_b,
        eig_total=eig_decompose(h_total),
        psi0_index=psi0_index,
        metadata=dict(metadata or {}),
    )


def paper_figure_model(
    c: float,
    seed_a: int | None = None,
    seed_b: int | None = None,
    extra_pathways: Sequence[PathwaySpec] = (),
) -> ModelInstance:
    """Qubit A with spectrum {0, 1} coupled to a 7-qubit environment.

    The interaction is ``c * sigma^x_A sigma^x_{B1}``; the environment
    starts in its ground state.
    """
    spec_a = SubsystemSpec(2, np.array([0.0, 1.0]), seed_a)
    spec_b = SubsystemSpec(2 ** PAPER_ENV_QUBITS, paper_env_spectrum(), seed_b)
    pathways = [PathwaySpec(float(c), "sigmaX-eigenbasis", "sigmaX-on-env-qubit-1")]
    pathways.extend(extra_pathways)
    return assemble_model(
        spec_a,
        spec_b,
        pathways,
        "ground",
        metadata={"source": "paper", "seedA": seed_a, "seedB": seed_b},
    )


def initial_entangled_state(model: ModelInstance, band: Sequence[int]) -> CompositeState:
    """(1/sqrt N) sum_K |K>_Abar |K>_A |psi0>_B over the eigen-indices in ``band``.

    The reference copy Abar has dimension N = len(band); its basis state
    ``n`` is paired with A's eigenstate ``band[n]``.
    """
    band = [int(k) for k in band]
    if not band:
        raise ValueError("band must contain at least one eigenstate index")
    if len(set(band)) != len(band) or any(k < 0 or k >= model.dim_a for k in band):
        raise ValueError(f"invalid band {band} for dimension {model.dim_a}")
    n = len(band)
    va = model.eig_a.eigenvectors
    # coefficient tensor [Abar, A]
    coef = np.zeros((n, model.dim_a), dtype=complex)
    for j, k in enumerate(band):
        coef[j] = va[:, k]
    coef /= np.sqrt(n)
    psi = np.einsum("xa,b->xab", coef, model.psi0).reshape(-1)
    return CompositeState(psi, (n, model.dim_a, model.dim_b))


def _operator_from_config(raw: Any) -> Operator:
    if isinstance(raw, str):
        return raw
    if isinstance(raw, dict) and "matrix" in raw:
        return _parse_matrix_literal(raw["matrix"])
    return _parse_matrix_literal(raw)


def model_from_config(config: dict) -> ModelInstance:
    """Build a model from a parsed configuration mapping.

    Recognized keys: ``dimA``, ``spectrumA``, ``dimB``, ``spectrumB`` or
    ``generator: "paper-envB"``, ``pathways`` (list of ``{c, opA, opB}``),
    ``seedA``, ``seedB``, ``psi0`` and optionally ``energyScale``.
    """
    try:
        dim_a = int(config["dimA"])
        spectrum_a = config["spectrumA"]
        if config.get("generator") == "paper-envB" or config.get("spectrumB") == "paper-envB":
            spectrum_b = paper_env_spectrum()
        elif "spectrumB" in config:
            spectrum_b = config["spectrumB"]
        else:
            raise ValueError("config needs 'spectrumB' or generator 'paper-envB'")
        dim_b = int(config.get("dimB", len(spectrum_b)))
        scale = float(config.get("energyScale", 1.0))
        pathways = [
            PathwaySpec(
                float(p["c"]),
                _operator_from_config(p["opA"]),
                _operator_from_config(p["opB"]),
                scale,
            )
            for p in config.get("pathways", [])
        ]
        seed_a = config.get("seedA")
        seed_b = config.get("seedB")
        psi0 = config.get("psi0", "groundB")
    except KeyError as exc:
        raise ValueError(f"model config is missing field {exc.args[0]!r}") from None
    except (TypeError, AttributeError) as exc:
        raise ValueError(f"malformed model config: {exc}") from None
    return assemble_model(
        SubsystemSpec(dim_a, spectrum_a, seed_a),
        SubsystemSpec(dim_b, spectrum_b, seed_b),
        pathways,
        psi0,
        metadata={"source": "config", "seedA": seed_a, "seedB": seed_b},
    )


def load_model_config(path: Union[str, PathLike]) -> ModelInstance:
    with open(path, encoding="utf-8") as fh:
        try:
            config = json.load(fh)
        except json.JSONDecodeError as exc:
            raise ValueError(f"{path}: not valid JSON ({exc})") from None
    if not isinstance(config, dict):
        raise ValueError(f"{path}: top level must be an object")
    return model_from_config(config)
