"""Locality-constrained Lindblad family acting on the reference state.

A candidate is (Gamma_left, Gamma_right, Hls_left, Hls_right): the Gamma
matrices are Kossakowski matrices over the orthonormal operator basis of
the bath-attached blocks (identity element excluded), the Lamb-shift
Hamiltonians act only on those blocks. The map from a candidate to the
dissipator action on the fixed diagonal reference state rho0 is affine;
its coefficient tables are precomputed once per physical point and shared
by the oracle evaluators and the conic-program builders.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .chain import ChainSpec, EnergyEigenbasis, operator_basis
from .errors import DegenerateSpectrumError, SchemaError, ValidationError

HERMITICITY_TOL = 1e-10
PSD_EIG_TOL = 1e-9
TRACE_TOL = 1e-9

DUMP_SCHEMA_VERSION = 1


@dataclass(frozen=True, eq=False)
class LindbladCandidate:
    """One member of the family; empty blocks stand for absent baths."""

    gamma_left: np.ndarray
    gamma_right: np.ndarray
    hls_left: np.ndarray
    hls_right: np.ndarray

    @classmethod
    def zero(cls, chain: ChainSpec) -> "LindbladCandidate":
        n_l = chain.dim_left**2 - 1
        n_r = chain.dim_right**2 - 1
        return cls(
            gamma_left=np.zeros((n_l, n_l), dtype=complex),
            gamma_right=np.zeros((n_r, n_r), dtype=complex),
            hls_left=np.zeros((chain.dim_left, chain.dim_left), dtype=complex),
            hls_right=np.zeros((chain.dim_right, chain.dim_right), dtype=complex),
        )

    def scaled(self, factor: float) -> "LindbladCandidate":
        return LindbladCandidate(
            gamma_left=factor * self.gamma_left,
            gamma_right=factor * self.gamma_right,
            hls_left=factor * self.hls_left,
            hls_right=factor * self.hls_right,
        )


def validate_candidate(
    cand: LindbladCandidate,
    t_left: float | None = None,
    t_right: float | None = None,
) -> None:
    """Check Hermiticity, positive semidefiniteness, and trace targets."""
    for name, gamma, target in (
        ("gamma_left", cand.gamma_left, t_left),
        ("gamma_right", cand.gamma_right, t_right),
    ):
        if gamma.size == 0:
            continue
        if np.abs(gamma - gamma.conj().T).max() > HERMITICITY_TOL:
            raise ValidationError(f"{name} is not Hermitian to {HERMITICITY_TOL}")
        lo = np.linalg.eigvalsh(gamma).min()
        if lo < -PSD_EIG_TOL:
            raise ValidationError(f"{name} has eigenvalue {lo:.3e} below -{PSD_EIG_TOL}")
        if target is not None and abs(np.trace(gamma).real - target) > TRACE_TOL:
            raise ValidationError(
                f"{name} trace {np.trace(gamma).real} != target {target}"
            )
    for name, h in (("hls_left", cand.hls_left), ("hls_right", cand.hls_right)):
        if h.size and np.abs(h - h.conj().T).max() > HERMITICITY_TOL:
            raise ValidationError(f"{name} is not Hermitian")


def block_embeddings(chain: ChainSpec) -> tuple[np.ndarray, np.ndarray]:
    """Computational-basis stacks of f_i x I_MR (left) and I_LM x f_i (right),
    identity element excluded."""
    d = chain.dim
    if chain.n_left > 0:
        basis = operator_basis(chain.n_left)
        ident = np.eye(chain.dim_mid * chain.dim_right, dtype=complex)
        left = np.stack([np.kron(f, ident) for f in basis.elements[:-1]])
    else:
        left = np.zeros((0, d, d), dtype=complex)
    if chain.n_right > 0:
        basis = operator_basis(chain.n_right)
        ident = np.eye(chain.dim_left * chain.dim_mid, dtype=complex)
        right = np.stack([np.kron(ident, f) for f in basis.elements[:-1]])
    else:
        right = np.zeros((0, d, d), dtype=complex)
    return left, right


@dataclass(frozen=True, eq=False)
class AffineMapTables:
    """Precomputed contributions of each candidate parameter to L2'(rho0).

    ``tables_left[i, j]`` is the (eigenbasis) matrix multiplying
    Gamma_left[i, j]; ``m_left[i]`` is the rotated block operator used by
    the diagonal rate-matrix formula.
    """

    chain: ChainSpec
    eigs: EnergyEigenbasis
    rho0: np.ndarray
    m_left: np.ndarray
    m_right: np.ndarray
    tables_left: np.ndarray
    tables_right: np.ndarray

    @property
    def dim(self) -> int:
        return self.rho0.size

    def hls_commutator(self, hls: np.ndarray, side: str) -> np.ndarray:
        """i [rho0, H_LS x I] in the eigenbasis, built by direct products."""
        chain = self.chain
        if side == "left":
            if chain.n_left == 0:
                return np.zeros((self.dim, self.dim), dtype=complex)
            full = np.kron(hls, np.eye(chain.dim_mid * chain.dim_right, dtype=complex))
        elif side == "right":
            if chain.n_right == 0:
                return np.zeros((self.dim, self.dim), dtype=complex)
            full = np.kron(np.eye(chain.dim_left * chain.dim_mid, dtype=complex), hls)
        else:
            raise ValidationError(f"unknown side {side!r}")
        rotated = self.eigs.to_eigenbasis(full)
        rho = np.diag(self.rho0).astype(complex)
        return 1j * (rho @ rotated - rotated @ rho)


def _pair_tables(ms: np.ndarray, rho0: np.ndarray, prefactor: float) -> np.ndarray:
    n = ms.shape[0]
    d = rho0.size
    tables = np.empty((n, n, d, d), dtype=complex)
    for i in range(n):
        mi_dag = ms[i].conj().T
        for j in range(n):
            sandwich = (ms[j] * rho0[None, :]) @ mi_dag
            k = mi_dag @ ms[j]
            anti = 0.5 * (k * rho0[None, :] + rho0[:, None] * k)
            tables[i, j] = prefactor * (sandwich - anti)
    return tables


def build_affine_tables(
    chain: ChainSpec, eigs: EnergyEigenbasis, rho0: np.ndarray
) -> AffineMapTables:
    """Tables M[i, j] = contribution of Gamma[i, j] to the dissipator action."""
    if eigs.degenerate:
        raise DegenerateSpectrumError(
            "affine tables require a non-degenerate eigenbasis"
        )
    rho0 = np.asarray(rho0, dtype=float)
    if rho0.size != chain.dim or eigs.dim != chain.dim:
        raise ValidationError("dimension mismatch between chain, eigenbasis, and rho0")
    if abs(rho0.sum() - 1.0) > 1e-9 or rho0.min() < -1e-9:
        raise ValidationError("rho0 must be a probability vector")
    left_ops, right_ops = block_embeddings(chain)
    u = eigs.vectors
    m_left = np.stack([u.conj().T @ f @ u for f in left_ops]) if left_ops.size else left_ops
    m_right = np.stack([u.conj().T @ f @ u for f in right_ops]) if right_ops.size else right_ops
    tables_left = _pair_tables(m_left, rho0, 1.0 / (chain.dim_mid * chain.dim_right))
    tables_right = _pair_tables(m_right, rho0, 1.0 / (chain.dim_left * chain.dim_mid))
    return AffineMapTables(
        chain=chain,
        eigs=eigs,
        rho0=rho0,
        m_left=m_left,
        m_right=m_right,
        tables_left=tables_left,
        tables_right=tables_right,
    )


def apply_candidate(tables: AffineMapTables, cand: LindbladCandidate) -> np.ndarray:
    """L2'(rho0) in the eigenbasis for the given candidate."""
    d = tables.dim
    out = np.zeros((d, d), dtype=complex)
    if cand.gamma_left.size:
        if cand.gamma_left.shape != tables.tables_left.shape[:2]:
            raise ValidationError("gamma_left dimension does not match tables")
        out += np.einsum("ij,ijab->ab", cand.gamma_left, tables.tables_left)
    if cand.gamma_right.size:
        if cand.gamma_right.shape != tables.tables_right.shape[:2]:
            raise ValidationError("gamma_right dimension does not match tables")
        out += np.einsum("ij,ijab->ab", cand.gamma_right, tables.tables_right)
    if cand.hls_left.size and np.any(cand.hls_left):
        out += tables.hls_commutator(cand.hls_left, "left")
    if cand.hls_right.size and np.any(cand.hls_right):
        out += tables.hls_commutator(cand.hls_right, "right")
    return out


def tau_pop(tables: AffineMapTables, cand: LindbladCandidate) -> float:
    """Sum of absolute diagonal entries of L2'(rho0)."""
    diag = np.diagonal(apply_candidate(tables, cand))
    scale = max(1.0, np.abs(diag).max())
    if np.abs(diag.imag).max() > HERMITICITY_TOL * scale:
        raise ValidationError(
            f"diagonal of the candidate action is not real "
            f"(max imaginary part {np.abs(diag.imag).max():.3e})"
        )
    return float(np.abs(diag.real).sum())


def tau_pop_coh(
    tables: AffineMapTables, cand: LindbladCandidate, l2_rho0: np.ndarray
) -> float:
    """Frobenius distance between the candidate action and the reference."""
    diff = apply_candidate(tables, cand) - l2_rho0
    return float(np.linalg.norm(diff))


def candidate_rate_matrix(tables: AffineMapTables, cand: LindbladCandidate) -> np.ndarray:
    """Diagonal-sector rate matrix R[k, a] = <E_k| D(|E_a><E_a|) |E_k>.

    Lamb-shift terms drop out of the diagonal, so only the Gamma blocks
    contribute; columns sum to zero.
    """
    d = tables.dim
    out = np.zeros((d, d), dtype=float)
    for gamma, ms, pref in (
        (cand.gamma_left, tables.m_left, 1.0 / (tables.chain.dim_mid * tables.chain.dim_right)),
        (cand.gamma_right, tables.m_right, 1.0 / (tables.chain.dim_left * tables.chain.dim_mid)),
    ):
        if gamma.size == 0:
            continue
        hop = np.einsum("ij,jka,ika->ka", gamma, ms, ms.conj())
        loss = np.einsum("ij,ina,jna->a", gamma, ms.conj(), ms)
        contrib = hop - np.diag(loss)
        if np.abs(contrib.imag).max() > 1e-10 * max(1.0, np.abs(contrib).max()):
            raise ValidationError("rate matrix acquired an imaginary part")
        out += pref * contrib.real
    return out


def apply_family_dissipator(
    chain: ChainSpec, cand: LindbladCandidate, rho: np.ndarray
) -> np.ndarray:
    """Full dissipator of the family on an arbitrary state, computational
    basis, evaluated directly from the defining operator products."""
    d = chain.dim
    rho = np.asarray(rho, dtype=complex)
    if rho.shape != (d, d):
        raise ValidationError("state dimension mismatch")
    out = np.zeros((d, d), dtype=complex)
    left_ops, right_ops = block_embeddings(chain)
    for gamma, ops, pref in (
        (cand.gamma_left, left_ops, 1.0 / (chain.dim_mid * chain.dim_right)),
        (cand.gamma_right, right_ops, 1.0 / (chain.dim_left * chain.dim_mid)),
    ):
        if gamma.size == 0:
            continue
        mixed = np.einsum("ij,jab->iab", gamma, ops)
        sandwich = np.einsum("iab,bc,idc->ad", mixed, rho, ops.conj())
        k = np.einsum("ij,iba,jbc->ac", gamma, ops.conj(), ops)
        out += pref * (sandwich - 0.5 * (k @ rho + rho @ k))
    if cand.hls_left.size and chain.n_left > 0:
        full = np.kron(cand.hls_left, np.eye(chain.dim_mid * chain.dim_right, dtype=complex))
        out += 1j * (rho @ full - full @ rho)
    if cand.hls_right.size and chain.n_right > 0:
        full = np.kron(np.eye(chain.dim_left * chain.dim_mid, dtype=complex), cand.hls_right)
        out += 1j * (rho @ full - full @ rho)
    return out


@dataclass(frozen=True)
class ConservationReport:
    max_violation: float
    trials: int
    tolerance: float
    passed: bool
    vacuous: bool = False


def check_local_conservation(
    cand: LindbladCandidate,
    chain: ChainSpec,
    trials: int = 20,
    seed: int = 0,
    tolerance: float = 1e-10,
) -> ConservationReport:
    """Expectation of middle-block observables must be blind to the dissipator.

    Samples random Hermitian O_M and random states rho, and measures
    Tr[(I_L x O_M x I_R) D(rho)].
    """
    if chain.n_mid == 0:
        return ConservationReport(0.0, 0, tolerance, True, vacuous=True)
    rng = np.random.default_rng(seed)
    d_m = chain.dim_mid
    worst = 0.0
    for _ in range(trials):
        o_m = rng.normal(size=(d_m, d_m)) + 1j * rng.normal(size=(d_m, d_m))
        o_m = (o_m + o_m.conj().T) / 2.0
        observable = np.kron(
            np.kron(np.eye(chain.dim_left, dtype=complex), o_m),
            np.eye(chain.dim_right, dtype=complex),
        )
        raw = rng.normal(size=(chain.dim, chain.dim)) + 1j * rng.normal(size=(chain.dim, chain.dim))
        rho = raw @ raw.conj().T
        rho = rho / np.trace(rho)
        drift = apply_family_dissipator(chain, cand, rho)
        worst = max(worst, abs(np.trace(observable @ drift)))
    return ConservationReport(worst, trials, tolerance, worst < tolerance)


@dataclass(frozen=True)
class GkslReport:
    min_eig_left: float
    min_eig_right: float
    herm_residual_left: float
    herm_residual_right: float
    passed: bool

    def describe(self) -> str:
        return (
            f"min eig: left {self.min_eig_left:.3e}, right {self.min_eig_right:.3e}; "
            f"hermiticity residual: left {self.herm_residual_left:.3e}, "
            f"right {self.herm_residual_right:.3e}; "
            f"CPTP generator: {'yes' if self.passed else 'NO'}"
        )


def check_gksl(cand: LindbladCandidate, eig_tol: float = PSD_EIG_TOL) -> GkslReport:
    """Positive-semidefiniteness audit of the Kossakowski matrices."""
    stats = []
    for gamma in (cand.gamma_left, cand.gamma_right):
        if gamma.size == 0:
            stats.append((0.0, 0.0))
            continue
        herm = float(np.abs(gamma - gamma.conj().T).max())
        lo = float(np.linalg.eigvalsh((gamma + gamma.conj().T) / 2.0).min())
        stats.append((lo, herm))
    (lo_l, herm_l), (lo_r, herm_r) = stats
    passed = (
        lo_l >= -eig_tol
        and lo_r >= -eig_tol
        and herm_l <= HERMITICITY_TOL
        and herm_r <= HERMITICITY_TOL
    )
    return GkslReport(lo_l, lo_r, herm_l, herm_r, passed)


def _complex_to_pairs(m: np.ndarray) -> list:
    return [[[float(v.real), float(v.imag)] for v in row] for row in m]


def _pairs_to_complex(rows: list, expect_square: bool = True) -> np.ndarray:
    if not rows:
        return np.zeros((0, 0), dtype=complex)
    arr = np.array([[complex(re, im) for re, im in row] for row in rows], dtype=complex)
    return arr


def dump_candidate(path, cand: LindbladCandidate, metadata: dict) -> None:
    """Write a candidate plus metadata as structured text (JSON).

    Floats serialize through repr, so a load followed by a dump reproduces
    the file bit-for-bit.
    """
    payload = {
        "schema_version": DUMP_SCHEMA_VERSION,
        "metadata": metadata,
        "gamma_left": _complex_to_pairs(cand.gamma_left),
        "gamma_right": _complex_to_pairs(cand.gamma_right),
        "hls_left": _complex_to_pairs(cand.hls_left),
        "hls_right": _complex_to_pairs(cand.hls_right),
    }
    Path(path).write_text(json.dumps(payload, indent=1, sort_keys=True) + "\n")


def load_candidate(path) -> tuple[LindbladCandidate, dict]:
    try:
        payload = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise SchemaError(f"candidate dump {path} is not valid JSON: {exc}") from exc
    if payload.get("schema_version") != DUMP_SCHEMA_VERSION:
        raise SchemaError(
            f"candidate dump schema {payload.get('schema_version')} "
            f"!= supported {DUMP_SCHEMA_VERSION}"
        )
    missing = {"gamma_left", "gamma_right", "hls_left", "hls_right"} - set(payload)
    if missing:
        raise SchemaError(f"candidate dump missing fields: {sorted(missing)}")
    cand = LindbladCandidate(
        gamma_left=_pairs_to_complex(payload["gamma_left"]),
        gamma_right=_pairs_to_complex(payload["gamma_right"]),
        hls_left=_pairs_to_complex(payload["hls_left"]),
        hls_right=_pairs_to_complex(payload["hls_right"]),
    )
    return cand, payload.get("metadata", {})
