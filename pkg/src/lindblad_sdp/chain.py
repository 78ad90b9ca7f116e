"""XXZ qubit-chain Hamiltonian, Pauli site operators, and operator bases.

Conventions: qubit sites are 1-based, site 1 is the leftmost (slowest)
tensor factor, and the computational basis orders |0> = spin up
(sigma_z eigenvalue +1). All energies are in units of the onsite scale.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import SizeLimitError, ValidationError

MAX_QUBITS_DEFAULT = 8

SIGMA_X = np.array([[0.0, 1.0], [1.0, 0.0]], dtype=complex)
SIGMA_Y = np.array([[0.0, -1.0j], [1.0j, 0.0]], dtype=complex)
SIGMA_Z = np.array([[1.0, 0.0], [0.0, -1.0]], dtype=complex)
SIGMA_PLUS = np.array([[0.0, 1.0], [0.0, 0.0]], dtype=complex)
SIGMA_MINUS = np.array([[0.0, 0.0], [1.0, 0.0]], dtype=complex)
IDENTITY_2 = np.eye(2, dtype=complex)

_KIND_TO_MATRIX = {
    "x": SIGMA_X,
    "y": SIGMA_Y,
    "z": SIGMA_Z,
    "plus": SIGMA_PLUS,
    "minus": SIGMA_MINUS,
}


@dataclass(frozen=True)
class ChainSpec:
    """Problem geometry: chain size, couplings, and bath attachment blocks.

    The first ``n_left`` qubits couple to left baths, the last ``n_right``
    to right baths, and the middle block stays bath-free.
    """

    n_qubits: int
    onsite_energy: float = 1.0
    energy_bias: float = 0.0
    coupling: float = 0.0
    n_left: int = 0
    n_right: int = 0

    def __post_init__(self):
        if self.n_qubits < 1:
            raise ValidationError(f"n_qubits must be >= 1, got {self.n_qubits}")
        if self.n_left < 0 or self.n_right < 0:
            raise ValidationError("n_left and n_right must be nonnegative")
        if self.n_left + self.n_right > self.n_qubits:
            raise ValidationError(
                f"n_left + n_right = {self.n_left + self.n_right} exceeds "
                f"n_qubits = {self.n_qubits}"
            )

    @property
    def n_mid(self) -> int:
        return self.n_qubits - self.n_left - self.n_right

    @property
    def dim(self) -> int:
        return 2**self.n_qubits

    @property
    def dim_left(self) -> int:
        return 2**self.n_left

    @property
    def dim_mid(self) -> int:
        return 2**self.n_mid

    @property
    def dim_right(self) -> int:
        return 2**self.n_right

    def attached_sites(self) -> tuple[int, ...]:
        """1-based site indices carrying a bath, left block then right."""
        left = tuple(range(1, self.n_left + 1))
        right = tuple(range(self.n_qubits - self.n_right + 1, self.n_qubits + 1))
        return left + right

    def onsite_energies(self) -> np.ndarray:
        """Per-site field: omega0 on sites 1..floor(N/2), omega0*(1+bias) after."""
        half = self.n_qubits // 2
        w = np.full(self.n_qubits, self.onsite_energy, dtype=float)
        w[half:] = self.onsite_energy * (1.0 + self.energy_bias)
        return w


@dataclass(frozen=True, eq=False)
class EnergyEigenbasis:
    """Sorted eigendecomposition of the chain Hamiltonian.

    ``vectors[:, a]`` is the a-th eigenvector; ``min_gap`` is the smallest
    pairwise eigenvalue separation and drives the ``degenerate`` flag.
    """

    energies: np.ndarray
    vectors: np.ndarray
    min_gap: float
    degenerate: bool
    gap_threshold: float

    @property
    def dim(self) -> int:
        return self.energies.size

    def gap_table(self) -> np.ndarray:
        """Gap matrix G[a, c] = E_c - E_a."""
        return self.energies[None, :] - self.energies[:, None]

    def to_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        """Rotate an operator from the computational to the energy basis."""
        return self.vectors.conj().T @ op @ self.vectors

    def from_eigenbasis(self, op: np.ndarray) -> np.ndarray:
        return self.vectors @ op @ self.vectors.conj().T


@dataclass(frozen=True, eq=False)
class OperatorBasis:
    """Hilbert-Schmidt orthonormal operator basis on an n-qubit block.

    The single-qubit basis is (-sigma_z/sqrt2, sigma_+, sigma_-, I/sqrt2);
    multi-qubit elements are lexicographic tensor products, which puts the
    all-identity element I/sqrt(2^n) at the last index.
    """

    n_qubits_block: int
    elements: tuple[np.ndarray, ...]

    @property
    def identity_index(self) -> int:
        return len(self.elements) - 1

    @property
    def dim(self) -> int:
        return 2**self.n_qubits_block

    def __len__(self) -> int:
        return len(self.elements)


def site_operator(n_qubits: int, site: int, kind: str) -> np.ndarray:
    """Single-site operator I x ... x sigma_kind x ... x I (site is 1-based)."""
    if kind not in _KIND_TO_MATRIX:
        raise ValidationError(f"unknown operator kind {kind!r}")
    if not 1 <= site <= n_qubits:
        raise ValidationError(f"site {site} out of range 1..{n_qubits}")
    op = _KIND_TO_MATRIX[kind]
    left = np.eye(2 ** (site - 1), dtype=complex)
    right = np.eye(2 ** (n_qubits - site), dtype=complex)
    return np.kron(np.kron(left, op), right)


def build_hamiltonian(spec: ChainSpec, max_qubits: int = MAX_QUBITS_DEFAULT) -> np.ndarray:
    """Dense isotropic-XXZ chain Hamiltonian with optional half-chain bias.

    H = sum_l w_l sigma_z^(l)
        + g sum_l (sx sx + sy sy + sz sz)_(l, l+1)
    """
    n = spec.n_qubits
    if n > max_qubits:
        raise SizeLimitError(
            f"n_qubits = {n} exceeds maximum {max_qubits} "
            f"(dense dimension would be {2**n})"
        )
    d = spec.dim
    h = np.zeros((d, d), dtype=complex)
    for site, w in enumerate(spec.onsite_energies(), start=1):
        h += w * site_operator(n, site, "z")
    g = spec.coupling
    if g != 0.0:
        for site in range(1, n):
            for kind in ("x", "y", "z"):
                h += g * site_operator(n, site, kind) @ site_operator(n, site + 1, kind)
    return h


def diagonalize(h: np.ndarray, gap_threshold: float = 1e-9) -> EnergyEigenbasis:
    """Eigendecompose a Hermitian matrix, flagging near-degenerate spectra."""
    h = np.asarray(h)
    if h.ndim != 2 or h.shape[0] != h.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {h.shape}")
    scale = max(1.0, np.abs(h).max())
    if np.abs(h - h.conj().T).max() > 1e-10 * scale:
        raise ValidationError("matrix is not Hermitian to 1e-10")
    energies, vectors = np.linalg.eigh(h)
    if energies.size > 1:
        min_gap = float(np.min(np.diff(energies)))
    else:
        min_gap = np.inf
    return EnergyEigenbasis(
        energies=energies,
        vectors=vectors,
        min_gap=min_gap,
        degenerate=bool(min_gap < gap_threshold),
        gap_threshold=gap_threshold,
    )


_QUBIT_BASIS = (
    -SIGMA_Z / np.sqrt(2.0),
    SIGMA_PLUS,
    SIGMA_MINUS,
    IDENTITY_2 / np.sqrt(2.0),
)


def operator_basis(n_qubits_block: int) -> OperatorBasis:
    """All 4^n tensor products of the per-qubit basis, identity last."""
    if n_qubits_block < 1:
        raise ValidationError("operator basis needs at least one qubit")
    elements = list(_QUBIT_BASIS)
    for _ in range(n_qubits_block - 1):
        elements = [np.kron(a, b) for a in elements for b in _QUBIT_BASIS]
    return OperatorBasis(n_qubits_block=n_qubits_block, elements=tuple(elements))


def gibbs_populations(energies: np.ndarray, beta: float) -> np.ndarray:
    """Normalized e^{-beta E_a}, computed shift-stably."""
    w = np.exp(-beta * (energies - energies.min()))
    return w / w.sum()


def hilbert_schmidt_inner(a: np.ndarray, b: np.ndarray) -> complex:
    return complex(np.trace(a.conj().T @ b))
