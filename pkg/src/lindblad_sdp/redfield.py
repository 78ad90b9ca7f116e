"""Second-order Redfield dissipator and its zeroth-order steady state.

All operators live in the energy eigenbasis. With S the eigenbasis matrix
of sigma_-^(l) and (C, D) the bath coefficient tables over Bohr gaps, the
dissipator applied to any matrix rho is

    L2(rho) = sum_l [sp, rho Wc] + [Wd rho, sp]
                    + [Wc^dag rho, sm] + [sm, rho Wd^dag],

with Wc = C * S and Wd = D * S (entrywise products), sm = S, sp = S^dag.
This is the Hermiticity-preserving map whose restriction to diagonal
matrices generates the population rate equations; in equilibrium its
kernel is the Gibbs state.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .bath import BathSpec, QuadratureConfig, redfield_coefficients
from .chain import ChainSpec, EnergyEigenbasis, gibbs_populations, site_operator
from .errors import (
    DegenerateSpectrumError,
    NonUniqueSteadyStateError,
    ValidationError,
)

NEGATIVE_POPULATION_TOL = 1e-9
NULLSPACE_SEPARATION = 1e3


@dataclass(frozen=True, eq=False)
class RedfieldDissipator:
    """Precomputed eigenbasis data for fast application of the dissipator."""

    chain: ChainSpec
    eigs: EnergyEigenbasis
    baths: tuple[BathSpec, ...]
    coeff_c: tuple[np.ndarray, ...]
    coeff_d: tuple[np.ndarray, ...]
    sigma_minus_eig: tuple[np.ndarray, ...]

    @property
    def dim(self) -> int:
        return self.eigs.dim

    def weighted_operators(self, k: int) -> tuple[np.ndarray, np.ndarray]:
        """(Wc, Wd) for the k-th bath."""
        s = self.sigma_minus_eig[k]
        return self.coeff_c[k] * s, self.coeff_d[k] * s


def build_dissipator(
    chain: ChainSpec,
    eigs: EnergyEigenbasis,
    baths: tuple[BathSpec, ...] | list[BathSpec],
    cfg: QuadratureConfig | None = None,
    table_cache: dict | None = None,
) -> RedfieldDissipator:
    """Assemble coefficient tables and rotated coupling operators.

    Baths must sit exactly on the attached sites of the chain geometry.
    Identical bath parameter sets share one table evaluation; passing an
    external ``table_cache`` dict extends the reuse across calls (sweeps
    revisiting one spectrum at many temperatures).
    """
    baths = tuple(baths)
    sites = tuple(sorted(b.site for b in baths))
    expected = tuple(sorted(chain.attached_sites()))
    if sites != expected:
        raise ValidationError(
            f"bath sites {sites} do not match attached sites {expected}"
        )
    if eigs.dim != chain.dim:
        raise ValidationError("eigenbasis dimension does not match the chain")
    cache = table_cache if table_cache is not None else {}
    spectrum_key = tuple(np.round(eigs.energies, 12))
    quad_key = (
        (cfg.upper_cutoff_multiple, cfg.panels, cfg.rel_tol) if cfg is not None else None
    )
    coeff_c, coeff_d, sminus = [], [], []
    for bath in baths:
        key = (
            spectrum_key,
            quad_key,
            bath.inv_temperature,
            bath.coupling,
            bath.cutoff,
            bath.chem_potential,
        )
        if key not in cache:
            cache[key] = redfield_coefficients(eigs, bath, cfg)
        c, d = cache[key]
        coeff_c.append(c)
        coeff_d.append(d)
        sminus.append(eigs.to_eigenbasis(site_operator(chain.n_qubits, bath.site, "minus")))
    return RedfieldDissipator(
        chain=chain,
        eigs=eigs,
        baths=baths,
        coeff_c=tuple(coeff_c),
        coeff_d=tuple(coeff_d),
        sigma_minus_eig=tuple(sminus),
    )


def apply_dissipator(dis: RedfieldDissipator, rho: np.ndarray) -> np.ndarray:
    """L2(rho) in the energy eigenbasis, for an arbitrary d x d matrix."""
    rho = np.asarray(rho, dtype=complex)
    d = dis.dim
    if rho.shape != (d, d):
        raise ValidationError(f"density matrix shape {rho.shape} != ({d}, {d})")
    out = np.zeros((d, d), dtype=complex)
    for k in range(len(dis.baths)):
        wc, wd = dis.weighted_operators(k)
        sm = dis.sigma_minus_eig[k]
        sp = sm.conj().T
        a = rho @ wc
        out += sp @ a - a @ sp
        b = wd @ rho
        out += b @ sp - sp @ b
        c = wc.conj().T @ rho
        out += c @ sm - sm @ c
        e = rho @ wd.conj().T
        out += sm @ e - e @ sm
    return out


def population_matrix(dis: RedfieldDissipator) -> np.ndarray:
    """Rate matrix A[k, m] = <E_k| L2(|E_m><E_m|) |E_k>; columns sum to zero."""
    if dis.eigs.degenerate:
        raise DegenerateSpectrumError(
            f"spectrum has min gap {dis.eigs.min_gap:.3e} below threshold "
            f"{dis.eigs.gap_threshold:.1e}; population equations are ill-defined"
        )
    d = dis.dim
    a = np.empty((d, d), dtype=float)
    for m in range(d):
        basis = np.zeros((d, d), dtype=complex)
        basis[m, m] = 1.0
        col = np.diagonal(apply_dissipator(dis, basis))
        if np.abs(col.imag).max() > 1e-12 * max(1.0, np.abs(col).max()):
            raise ValidationError("population rates acquired an imaginary part")
        a[:, m] = col.real
    return a


@dataclass(frozen=True, eq=False)
class NessSolution:
    """Zeroth-order populations with diagnostics, plus optional coherences."""

    populations: np.ndarray
    residual: float
    coherences2: np.ndarray | None = None
    gibbs_distance: float | None = None
    clipped: bool = False


def solve_zeroth_ness(a: np.ndarray, method: str = "svd") -> NessSolution:
    """Unit-sum nullvector of the population rate matrix.

    The default SVD route doubles as a uniqueness gate: the second-smallest
    singular value must exceed the smallest by a fixed factor, otherwise the
    steady state is not unique. A least-squares route (append the
    normalization row) is available as an alternative.
    """
    a = np.asarray(a, dtype=float)
    d = a.shape[0]
    colsum = np.abs(a.sum(axis=0)).max()
    if colsum > 1e-8 * max(1.0, np.abs(a).max()):
        raise ValidationError(f"column sums deviate from zero by {colsum:.3e}")
    if method == "svd":
        _, sing, vt = np.linalg.svd(a)
        if d > 1 and sing[-2] < NULLSPACE_SEPARATION * sing[-1]:
            raise NonUniqueSteadyStateError(
                f"nullspace not one-dimensional: smallest singular values "
                f"{sing[-1]:.3e}, {sing[-2]:.3e}"
            )
        p = vt[-1]
    elif method == "lstsq":
        stacked = np.vstack([a, np.ones(d)])
        rhs = np.zeros(d + 1)
        rhs[-1] = 1.0
        p, *_ = np.linalg.lstsq(stacked, rhs, rcond=None)
    else:
        raise ValidationError(f"unknown nullspace method {method!r}")
    total = p.sum()
    if abs(total) < 1e-12:
        raise NonUniqueSteadyStateError("nullvector has (near-)zero total weight")
    p = p / total
    if p.min() < -NEGATIVE_POPULATION_TOL:
        raise ValidationError(
            f"steady-state population {p.min():.3e} is negative beyond tolerance"
        )
    clipped = bool(p.min() < 0.0)
    if clipped:
        p = np.clip(p, 0.0, None)
        p = p / p.sum()
    residual = float(np.abs(a @ p).sum())
    return NessSolution(populations=p, residual=residual, clipped=clipped)


def second_order_coherences(dis: RedfieldDissipator, populations: np.ndarray) -> np.ndarray:
    """Leading-order coherences r2[a, n] = i <E_a|L2(rho0)|E_n> / (E_n - E_a).

    The sign follows from the unitary part i[rho, H]: splitting the
    steady-state condition at second order gives
    i (E_n - E_a) r2[a, n] + <E_a|L2(rho0)|E_n> = 0. A full-equation
    nullspace extrapolation oracle pins this orientation in the tests.
    """
    if dis.eigs.degenerate:
        raise DegenerateSpectrumError(
            "coherence reconstruction divides by energy gaps; spectrum is degenerate"
        )
    l2rho0 = apply_dissipator(dis, np.diag(populations).astype(complex))
    gaps = dis.eigs.gap_table()  # [a, n] = E_n - E_a
    d = dis.dim
    coh = np.zeros((d, d), dtype=complex)
    off = ~np.eye(d, dtype=bool)
    coh[off] = 1j * l2rho0[off] / gaps[off]
    return coh


def is_equilibrium(baths: tuple[BathSpec, ...]) -> bool:
    betas = {b.inv_temperature for b in baths}
    mus = {b.chem_potential for b in baths}
    return len(betas) == 1 and len(mus) == 1


def solve_ness(
    dis: RedfieldDissipator, with_coherences: bool = True, method: str = "svd"
) -> NessSolution:
    """Full zeroth-order NESS pipeline with equilibrium diagnostics."""
    a = population_matrix(dis)
    sol = solve_zeroth_ness(a, method=method)
    gibbs_distance = None
    if is_equilibrium(dis.baths):
        gibbs = gibbs_populations(dis.eigs.energies, dis.baths[0].inv_temperature)
        gibbs_distance = float(np.abs(sol.populations - gibbs).max())
    coh = second_order_coherences(dis, sol.populations) if with_coherences else None
    return NessSolution(
        populations=sol.populations,
        residual=sol.residual,
        coherences2=coh,
        gibbs_distance=gibbs_distance,
        clipped=sol.clipped,
    )
