"""Shared brute-force oracles used across test modules.

These deliberately re-derive quantities through independent routes
(explicit projector sums, dense vectorized superoperators) so the fast
library paths are checked against slow first-principles constructions.
"""

import numpy as np

from lindblad_sdp.redfield import RedfieldDissipator


def random_hermitian(rng, d, scale=1.0):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    return scale * (m + m.conj().T) / 2.0


def random_density(rng, d):
    m = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
    rho = m @ m.conj().T
    return rho / np.trace(rho)


def dissipator_by_definition(dis: RedfieldDissipator, rho: np.ndarray) -> np.ndarray:
    """Redfield dissipator expanded term by term over projector pairs.

    Builds each |E_a><E_a| sigma_- |E_c><E_c| by dense matrix products and
    sums all four commutator families explicitly; the conjugate terms are
    written out so the map stays linear for non-Hermitian inputs.
    """
    d = dis.dim
    out = np.zeros((d, d), dtype=complex)
    for k in range(len(dis.baths)):
        sm = dis.sigma_minus_eig[k]
        sp = sm.conj().T
        c_tab = dis.coeff_c[k]
        d_tab = dis.coeff_d[k]
        for a in range(d):
            pa = np.zeros((d, d), dtype=complex)
            pa[a, a] = 1.0
            for c in range(d):
                pc = np.zeros((d, d), dtype=complex)
                pc[c, c] = 1.0
                kmat = pa @ sm @ pc
                if not np.any(kmat):
                    continue
                kd = kmat.conj().T
                cc = c_tab[a, c]
                dd = d_tab[a, c]
                out += cc * (sp @ (rho @ kmat) - (rho @ kmat) @ sp)
                out += dd * ((kmat @ rho) @ sp - sp @ (kmat @ rho))
                out += np.conj(cc) * ((kd @ rho) @ sm - sm @ (kd @ rho))
                out += np.conj(dd) * (sm @ (rho @ kd) - (rho @ kd) @ sm)
    return out


def vectorize_map(apply_fn, d):
    """Column-by-column dense superoperator of a linear map on d x d matrices.

    Column-stacking convention: vec(rho)[i + d*j] = rho[i, j].
    """
    sup = np.zeros((d * d, d * d), dtype=complex)
    for col in range(d * d):
        basis = np.zeros((d, d), dtype=complex)
        basis[col % d, col // d] = 1.0
        sup[:, col] = apply_fn(basis).reshape(-1, order="F")
    return sup


def liouvillian_superoperator(energies, l2_super, epsilon):
    """Dense generator of the full master equation at coupling epsilon."""
    d = energies.size
    h = np.diag(energies).astype(complex)
    ident = np.eye(d, dtype=complex)
    # vec(i(rho H - H rho)) with column stacking: i(H^T kron I - I kron H)
    l0 = 1j * (np.kron(h.T, ident) - np.kron(ident, h))
    return l0 + epsilon**2 * l2_super


def steady_state_from_superoperator(sup, d):
    """Trace-normalized nullvector of a dense superoperator."""
    _, _, vt = np.linalg.svd(sup)
    rho = vt[-1].conj().reshape((d, d), order="F")
    rho = rho / np.trace(rho)
    return (rho + rho.conj().T) / 2.0
