"""Conic formulations of the population / coherence feasibility objectives.

Hermitian matrix variables are carried as real parameter vectors
(diagonal, then re/im of the upper triangle row-major); positivity is
imposed on the standard real symmetric embedding [[X, -Y], [Y, X]], whose
trace is twice the Hermitian trace, so the trace target t enters the
parameter-space equality row directly. The builders produce problems in
the canonical conic form of :mod:`lindblad_sdp.conic`.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
import scipy.sparse as sp

from .chain import ChainSpec
from .conic import ConeBlock, ConicProblem, ConicSolution, VariableSegment
from .errors import ValidationError
from .family import (
    AffineMapTables,
    ConservationReport,
    GkslReport,
    LindbladCandidate,
    apply_candidate,
    check_gksl,
    check_local_conservation,
    tau_pop,
    tau_pop_coh,
)

_SQRT2 = float(np.sqrt(2.0))


# -- Hermitian parameter vectors ------------------------------------------


def herm_param_count(n: int) -> int:
    return n * n


def herm_param_labels(n: int) -> list[tuple]:
    labels = [("diag", i) for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            labels.append(("re", i, j))
            labels.append(("im", i, j))
    return labels


def herm_to_params(m: np.ndarray) -> np.ndarray:
    n = m.shape[0]
    out = np.empty(n * n)
    out[:n] = np.diagonal(m).real
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            out[k] = m[i, j].real
            out[k + 1] = m[i, j].imag
            k += 2
    return out


def params_to_herm(x: np.ndarray, n: int) -> np.ndarray:
    m = np.zeros((n, n), dtype=complex)
    np.fill_diagonal(m, x[:n])
    k = n
    for i in range(n):
        for j in range(i + 1, n):
            m[i, j] = x[k] + 1j * x[k + 1]
            m[j, i] = x[k] - 1j * x[k + 1]
            k += 2
    return m


def hermitian_embedding(m: np.ndarray) -> np.ndarray:
    """Real symmetric [[X, -Y], [Y, X]] for Hermitian m = X + iY.

    PSD iff m is PSD; each eigenvalue of m appears twice.
    """
    m = np.asarray(m)
    if m.size and np.abs(m - m.conj().T).max() > 1e-10 * max(1.0, np.abs(m).max()):
        raise ValidationError("matrix is not Hermitian")
    x, y = m.real, m.imag
    return np.block([[x, -y], [y, x]])


def _svec_pos(i: int, j: int) -> int:
    # upper triangle, column-major; requires i <= j
    return j * (j + 1) // 2 + i


def _embedding_svec_triplets(n: int):
    """For each Hermitian parameter, the (svec position, value) entries of
    its embedded basis matrix, for a 2n x 2n PSD block."""
    out = []
    for i in range(n):
        out.append([(_svec_pos(i, i), 1.0), (_svec_pos(n + i, n + i), 1.0)])
    for i in range(n):
        for j in range(i + 1, n):
            out.append([(_svec_pos(i, j), _SQRT2), (_svec_pos(n + i, n + j), _SQRT2)])
            out.append([(_svec_pos(i, n + j), -_SQRT2), (_svec_pos(j, n + i), _SQRT2)])
    return out


# -- real vectorization of Hermitian matrices (Frobenius-isometric) -------


def realvec(m: np.ndarray) -> np.ndarray:
    """R^{d^2} image of a Hermitian matrix with ||realvec(m)|| = ||m||_F."""
    d = m.shape[0]
    out = np.empty(d * d)
    out[:d] = np.diagonal(m).real
    k = d
    for i in range(d):
        for j in range(i + 1, d):
            out[k] = _SQRT2 * m[i, j].real
            out[k + 1] = _SQRT2 * m[i, j].imag
            k += 2
    return out


# -- response matrices of the candidate parameters -------------------------


def _response_matrices(tables_block: np.ndarray) -> list[np.ndarray]:
    """Hermitian matrices R_k such that the dissipator action of a Gamma
    block equals sum_k x_k R_k with x = herm_to_params(Gamma)."""
    n = tables_block.shape[0]
    out = [tables_block[i, i] for i in range(n)]
    for i in range(n):
        for j in range(i + 1, n):
            out.append(tables_block[i, j] + tables_block[j, i])
            out.append(1j * (tables_block[i, j] - tables_block[j, i]))
    return out


def _hls_response_matrices(tables: AffineMapTables, side: str) -> list[np.ndarray]:
    n = tables.chain.dim_left if side == "left" else tables.chain.dim_right
    out = []
    for label in herm_param_labels(n):
        basis = np.zeros((n, n), dtype=complex)
        if label[0] == "diag":
            basis[label[1], label[1]] = 1.0
        elif label[0] == "re":
            basis[label[1], label[2]] = 1.0
            basis[label[2], label[1]] = 1.0
        else:
            basis[label[1], label[2]] = 1j
            basis[label[2], label[1]] = -1j
        out.append(tables.hls_commutator(basis, side))
    return out


# -- problem builders ------------------------------------------------------


def _gamma_layout(chain: ChainSpec):
    m_l = chain.dim_left**2 - 1
    m_r = chain.dim_right**2 - 1
    segs = []
    offset = 0
    for name, side in (("gamma_left", m_l), ("gamma_right", m_r)):
        segs.append(VariableSegment(name, offset, side * side, kind="herm", side=side))
        offset += side * side
    return segs, offset


def _append_psd_blocks(chain, segments, rows, cols, vals, row0):
    cones = []
    for seg in segments:
        if seg.name not in ("gamma_left", "gamma_right") or seg.side == 0:
            continue
        side = seg.side
        triplets = _embedding_svec_triplets(side)
        for k, entries in enumerate(triplets):
            for pos, value in entries:
                rows.append(row0 + pos)
                cols.append(seg.offset + k)
                vals.append(-value)  # s = b - A x with b = 0
        cones.append(ConeBlock("psd", 2 * side))
        row0 += cones[-1].rows
    return cones, row0


def _trace_rows(segments, rows, cols, vals, bvals, t_left, t_right):
    n_eq = 0
    for seg, target in zip(segments, (t_left, t_right)):
        if seg.side == 0:
            continue
        for k in range(seg.side):  # diagonal parameters come first
            rows.append(n_eq)
            cols.append(seg.offset + k)
            vals.append(1.0)
        bvals.append(target)
        n_eq += 1
    return n_eq


def build_tau_pop_problem(
    tables: AffineMapTables, t_left: float, t_right: float
) -> ConicProblem:
    """minimize sum_a s_a with s_a >= +-<E_a|L2'(rho0)|E_a>, Tr Gamma = t.

    Lamb-shift variables are omitted: their commutator contribution has an
    identically zero diagonal.
    """
    chain = tables.chain
    d = tables.dim
    segments, n_gamma = _gamma_layout(chain)
    slack = VariableSegment("slack", n_gamma, d)
    segments.append(slack)
    n_vars = n_gamma + d

    diag_coef = np.zeros((d, n_vars))
    for seg, block in (
        (segments[0], tables.tables_left),
        (segments[1], tables.tables_right),
    ):
        if seg.side == 0:
            continue
        for k, resp in enumerate(_response_matrices(block)):
            col = np.diagonal(resp)
            if np.abs(col.imag).max() > 1e-10 * max(1.0, np.abs(col).max()):
                raise ValidationError("response matrix has a complex diagonal")
            diag_coef[:, seg.offset + k] = col.real

    rows, cols, vals, bvals = [], [], [], []
    n_eq = _trace_rows(segments[:2], rows, cols, vals, bvals, t_left, t_right)

    # nonneg rows: s_a -+ diag_a >= 0
    row = n_eq
    for a in range(d):
        for sign in (+1.0, -1.0):
            nz = np.nonzero(diag_coef[a])[0]
            for col in nz:
                rows.append(row)
                cols.append(col)
                vals.append(sign * diag_coef[a, col])
            rows.append(row)
            cols.append(slack.offset + a)
            vals.append(-1.0)
            bvals.append(0.0)
            row += 1
    n_nonneg = row - n_eq

    psd_cones, total_rows = _append_psd_blocks(chain, segments, rows, cols, vals, row)
    b = np.zeros(total_rows)
    b[: len(bvals)] = bvals
    a_mat = sp.csc_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(total_rows, n_vars)
    )
    q = np.zeros(n_vars)
    q[slack.offset : slack.offset + d] = 1.0
    cones = [ConeBlock("zero", n_eq), ConeBlock("nonneg", n_nonneg), *psd_cones]
    return ConicProblem(
        objective=q,
        a_matrix=a_mat,
        offset=b,
        cones=tuple(cones),
        variables=tuple(segments),
        metadata={
            "objective": "pop",
            "t_left": t_left,
            "t_right": t_right,
            "dim": d,
        },
    )


def build_tau_popcoh_problem(
    tables: AffineMapTables,
    l2_rho0: np.ndarray,
    t_left: float,
    t_right: float,
    free_trace: bool = False,
    fix_hls_zero: bool = False,
) -> ConicProblem:
    """minimize tau with ||vec(L2'(rho0) - L2(rho0))|| <= tau (one SOC block)."""
    chain = tables.chain
    d = tables.dim
    if l2_rho0.shape != (d, d):
        raise ValidationError("reference action has the wrong dimension")
    if abs(np.trace(l2_rho0)) > 1e-8 or np.abs(l2_rho0 - l2_rho0.conj().T).max() > 1e-8:
        raise ValidationError("reference action must be Hermitian and traceless")

    segments, offset = _gamma_layout(chain)
    response_cols: list[np.ndarray] = []
    for seg, block in (
        (segments[0], tables.tables_left),
        (segments[1], tables.tables_right),
    ):
        if seg.side:
            response_cols.extend(realvec(r) for r in _response_matrices(block))
    if not fix_hls_zero:
        for side, n_blk in (("left", chain.dim_left), ("right", chain.dim_right)):
            seg = VariableSegment(f"hls_{side}", offset, herm_param_count(n_blk), kind="herm", side=n_blk)
            segments.append(seg)
            offset += seg.length
            response_cols.extend(realvec(r) for r in _hls_response_matrices(tables, side))
    tau_seg = VariableSegment("tau", offset, 1)
    segments.append(tau_seg)
    n_vars = offset + 1

    rows, cols, vals, bvals = [], [], [], []
    if free_trace:
        n_eq = 0
    else:
        n_eq = _trace_rows(segments[:2], rows, cols, vals, bvals, t_left, t_right)

    # SOC block: s_0 = tau, s_r = (T x - w)_r; response column index k is
    # also the variable index because the segments were laid out in the
    # same order.
    w = realvec(l2_rho0)
    row = n_eq
    rows.append(row)
    cols.append(tau_seg.offset)
    vals.append(-1.0)
    bvals.append(0.0)
    row += 1
    t_mat = np.column_stack(response_cols)
    nz_r, nz_c = np.nonzero(t_mat)
    rows.extend(row + nz_r)
    cols.extend(nz_c)
    vals.extend(-t_mat[nz_r, nz_c])
    bvals.extend(-w)
    row += d * d
    soc_cone = ConeBlock("soc", 1 + d * d)

    psd_cones, total_rows = _append_psd_blocks(chain, segments, rows, cols, vals, row)
    b = np.zeros(total_rows)
    b[: len(bvals)] = bvals
    a_mat = sp.csc_matrix(
        (np.array(vals), (np.array(rows), np.array(cols))), shape=(total_rows, n_vars)
    )
    q = np.zeros(n_vars)
    q[tau_seg.offset] = 1.0
    cones = [ConeBlock("zero", n_eq), ConeBlock("nonneg", 0), soc_cone, *psd_cones]
    return ConicProblem(
        objective=q,
        a_matrix=a_mat,
        offset=b,
        cones=tuple(cones),
        variables=tuple(segments),
        metadata={
            "objective": "pop_coh",
            "t_left": t_left,
            "t_right": t_right,
            "free_trace": free_trace,
            "fix_hls_zero": fix_hls_zero,
            "dim": d,
        },
    )


# -- candidate reconstruction and post-solve verification ------------------


def reconstruct_candidate(problem: ConicProblem, x: np.ndarray) -> LindbladCandidate:
    """Rebuild the Hermitian candidate blocks from a primal vector."""
    parts = {}
    for seg in problem.variables:
        if seg.kind == "herm":
            parts[seg.name] = params_to_herm(x[seg.offset : seg.offset + seg.length], seg.side)
    zero_like = lambda n: np.zeros((n, n), dtype=complex)
    dim_left = int(round(np.sqrt(parts.get("gamma_left", zero_like(0)).shape[0] + 1)))
    dim_right = int(round(np.sqrt(parts.get("gamma_right", zero_like(0)).shape[0] + 1)))
    return LindbladCandidate(
        gamma_left=parts.get("gamma_left", zero_like(0)),
        gamma_right=parts.get("gamma_right", zero_like(0)),
        hls_left=parts.get("hls_left", zero_like(dim_left)),
        hls_right=parts.get("hls_right", zero_like(dim_right)),
    )


@dataclass(frozen=True)
class VerificationReport:
    oracle_tau: float
    objective_value: float
    oracle_mismatch: float
    gksl: GkslReport
    conservation: ConservationReport
    passed: bool

    def describe(self) -> str:
        return (
            f"oracle tau {self.oracle_tau:.6e} vs objective "
            f"{self.objective_value:.6e} (mismatch {self.oracle_mismatch:.2e}); "
            f"{self.gksl.describe()}; conservation max violation "
            f"{self.conservation.max_violation:.2e}; "
            f"{'PASS' if self.passed else 'FAIL'}"
        )


def verify_solution(
    problem: ConicProblem,
    solution: ConicSolution,
    tables: AffineMapTables,
    l2_rho0: np.ndarray | None = None,
    conservation_trials: int = 10,
) -> VerificationReport:
    """Re-derive the objective from the reconstructed candidate and audit it.

    The oracle path shares only the affine tables with the solver route;
    the comparison certifies the conic assembly end to end.
    """
    if solution.status not in ("optimal", "near_optimal"):
        raise ValidationError(f"cannot verify a solve with status {solution.status}")
    cand = reconstruct_candidate(problem, solution.primal)
    kind = problem.metadata.get("objective")
    if kind == "pop":
        oracle = tau_pop(tables, cand)
    elif kind == "pop_coh":
        if l2_rho0 is None:
            raise ValidationError("pop_coh verification needs the reference action")
        oracle = tau_pop_coh(tables, cand, l2_rho0)
    else:
        raise ValidationError(f"problem has unknown objective tag {kind!r}")
    mismatch = abs(oracle - solution.objective_value)
    tol = 1e-7 * (1.0 + abs(solution.objective_value))
    gksl = check_gksl(cand)
    conservation = check_local_conservation(cand, tables.chain, trials=conservation_trials)
    passed = mismatch < tol and gksl.passed and conservation.passed
    return VerificationReport(
        oracle_tau=oracle,
        objective_value=solution.objective_value,
        oracle_mismatch=mismatch,
        gksl=gksl,
        conservation=conservation,
        passed=passed,
    )


# -- verdicts and the trace-distance bound ----------------------------------


def bound_alpha(t_left: float, t_right: float, d_left: int, d_right: int) -> float:
    return 2.0 * (
        t_left * d_left**3 + t_right * d_right**3 - t_left * d_left - t_right * d_right
    )


def trace_distance_bound(
    tau_pop_opt: float, t_left: float, t_right: float, d_left: int, d_right: int
) -> float:
    """Lower bound tau/alpha on the distance between the reference
    populations and those of any family member."""
    if tau_pop_opt < 0:
        raise ValidationError("tau must be nonnegative")
    alpha = bound_alpha(t_left, t_right, d_left, d_right)
    if alpha <= 0.0:
        raise ValidationError(
            "bound undefined: both attached blocks are trivial (d_L = d_R = 1)"
        )
    return tau_pop_opt / alpha


def trace_distance(p: np.ndarray, q: np.ndarray) -> float:
    """(1/2) l1 distance between two probability vectors."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    for vec in (p, q):
        if abs(vec.sum() - 1.0) > 1e-8 or vec.min() < -1e-9:
            raise ValidationError("inputs must be normalized probability vectors")
    return float(0.5 * np.abs(p - q).sum())


@dataclass(frozen=True)
class FeasibilityVerdict:
    tau_opt: float
    delta_tol: float
    verdict: str  # maybe_possible | impossible
    bound_alpha: float
    trace_distance_lower_bound: float


def make_verdict(
    tau_opt: float,
    delta_tol: float,
    t_left: float,
    t_right: float,
    d_left: int,
    d_right: int,
) -> FeasibilityVerdict:
    alpha = bound_alpha(t_left, t_right, d_left, d_right)
    return FeasibilityVerdict(
        tau_opt=tau_opt,
        delta_tol=delta_tol,
        verdict="maybe_possible" if tau_opt < delta_tol else "impossible",
        bound_alpha=alpha,
        trace_distance_lower_bound=tau_opt / alpha if alpha > 0 else float("nan"),
    )
