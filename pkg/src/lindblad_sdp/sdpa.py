"""SDPA sparse-format export and import for conic problems.

Target format (SDPLIB convention, 1-based indices, upper triangle only):

    m                      number of decision variables
    nblocks                number of blocks in the block-diagonal LMI
    s_1 s_2 ... s_nblocks  block sizes; negative size = diagonal block
    c_1 ... c_m            objective coefficients
    <matno> <blk> <i> <j> <value>    entries of F_matno (matno 0 is F0)

encoding the problem  min c.x  s.t.  X = sum_i x_i F_i - F0,  X >= 0.

Mapping from the internal conic form (s = b - A x in K):
equality rows export as pairs of opposed entries in a diagonal block,
nonnegative rows as a diagonal block, PSD blocks directly, and each
second-order cone block (t, v) as the arrow matrix
[[t, v^T], [v, t I]], which is PSD exactly when t >= ||v||. Export is
byte-deterministic: entries are emitted in sorted order with a fixed
17-significant-digit format.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse as sp

from .conic import ConeBlock, ConicProblem, svec_entries
from .errors import SchemaError, ValidationError

_SQRT2 = float(np.sqrt(2.0))


def _block_plan(problem: ConicProblem):
    """Yield (row_start, cone, block_number, sdpa_size) in export order."""
    plan = []
    row = 0
    blkno = 0
    for cone in problem.cones:
        if cone.rows == 0:
            row += cone.rows
            continue
        blkno += 1
        if cone.kind == "zero":
            plan.append((row, cone, blkno, -2 * cone.dim))
        elif cone.kind == "nonneg":
            plan.append((row, cone, blkno, -cone.dim))
        else:
            # soc exports as its arrow matrix, psd directly; both have
            # SDPA block size equal to cone.dim
            plan.append((row, cone, blkno, cone.dim))
        row += cone.rows
    return plan


def _entries_for_column(cone: ConeBlock, local_rows: np.ndarray, vals: np.ndarray):
    """Translate (local row, value) pairs of -A[:, i] (or -b) restricted to
    one cone block into SDPA (i, j, value) matrix entries, 1-based."""
    out = []
    if cone.kind == "zero":
        # row r: pair of diagonal entries with opposite signs
        for r, v in zip(local_rows, vals):
            out.append((2 * r + 1, 2 * r + 1, -v))
            out.append((2 * r + 2, 2 * r + 2, v))
    elif cone.kind == "nonneg":
        for r, v in zip(local_rows, vals):
            out.append((r + 1, r + 1, v))
    elif cone.kind == "soc":
        for r, v in zip(local_rows, vals):
            if r == 0:
                for k in range(cone.dim):
                    out.append((k + 1, k + 1, v))
            else:
                out.append((1, r + 1, v))
    else:  # psd: scaled svec entry -> matrix entry
        pairs = svec_entries(cone.dim)
        for r, v in zip(local_rows, vals):
            i, j = pairs[r]
            out.append((i + 1, j + 1, v if i == j else v / _SQRT2))
    return out


def export_sdpa(problem: ConicProblem) -> str:
    """Serialize a conic problem to SDPA sparse text."""
    problem.validate()
    plan = _block_plan(problem)
    m = problem.n_vars
    a = sp.csc_matrix(problem.a_matrix, dtype=float)
    lines = [
        f"{m}",
        f"{len(plan)}",
        " ".join(str(size) for _, _, _, size in plan),
        " ".join(_fmt(c) for c in problem.objective),
    ]
    records = []

    def emit(matno, col_rows, col_vals):
        for row_start, cone, blkno, _ in plan:
            mask = (col_rows >= row_start) & (col_rows < row_start + cone.rows)
            if not mask.any():
                continue
            local = col_rows[mask] - row_start
            for i, j, v in _entries_for_column(cone, local, col_vals[mask]):
                if v != 0.0:
                    records.append((matno, blkno, i, j, v))

    # s = b - A x = sum_i x_i (-A_i) - (-b), so F_i comes from -A[:, i]
    # and F0 from -b; one translation covers both.
    b = np.asarray(problem.offset, dtype=float)
    nz = np.nonzero(b)[0]
    emit(0, nz, -b[nz])
    for i in range(m):
        sl = slice(a.indptr[i], a.indptr[i + 1])
        rows = a.indices[sl]
        vals = -a.data[sl]
        emit(i + 1, rows, vals)
    records.sort()
    # collapse duplicate coordinates (e.g. soc diagonal hit by t and b)
    collapsed = []
    for rec in records:
        if collapsed and collapsed[-1][:4] == rec[:4]:
            collapsed[-1] = rec[:4] + (collapsed[-1][4] + rec[4],)
        else:
            collapsed.append(rec)
    for matno, blkno, i, j, v in collapsed:
        if v != 0.0:
            lines.append(f"{matno} {blkno} {i} {j} {_fmt(v)}")
    return "\n".join(lines) + "\n"


def _fmt(v: float) -> str:
    return format(float(v), ".17g")


def import_sdpa(text: str) -> ConicProblem:
    """Parse SDPA sparse text into an equivalent conic problem.

    Diagonal blocks become one combined nonnegative cone, PSD blocks stay
    PSD; the decision vector is free. (Arrow blocks produced by export
    simply come back as PSD constraints, which is an equivalent encoding.)
    """
    raw_lines = [
        ln for ln in text.splitlines()
        if ln.strip() and not ln.lstrip().startswith(('"', "*"))
    ]
    try:
        m = int(raw_lines[0].split()[0])
        nblocks = int(raw_lines[1].split()[0])
        sizes = [
            int(tok)
            for tok in raw_lines[2].replace(",", " ").replace("{", " ").replace("}", " ").split()
        ]
        cvals = [float(tok) for tok in raw_lines[3].replace(",", " ").split()]
    except (IndexError, ValueError) as exc:
        raise SchemaError(f"malformed SDPA header: {exc}") from exc
    if len(sizes) != nblocks:
        raise SchemaError(f"expected {nblocks} block sizes, got {len(sizes)}")
    if len(cvals) != m:
        raise SchemaError(f"expected {m} objective values, got {len(cvals)}")

    diag_blocks = [(k, -s) for k, s in enumerate(sizes) if s < 0]
    psd_blocks = [(k, s) for k, s in enumerate(sizes) if s > 0]
    diag_offset = {}
    total = 0
    for k, s in diag_blocks:
        diag_offset[k] = total
        total += s
    n_nonneg = total
    psd_offset = {}
    for k, s in psd_blocks:
        psd_offset[k] = total
        total += s * (s + 1) // 2

    rows, cols, vals = [], [], []
    bvec = np.zeros(total)

    def place(matno, blk, i, j, v):
        size = sizes[blk]
        if size < 0:
            if i != j:
                raise SchemaError("off-diagonal entry in a diagonal block")
            r = diag_offset[blk] + (i - 1)
            entries = [(r, v)]
        else:
            lo, hi = sorted((i - 1, j - 1))
            pairs = svec_entries(size)
            r = psd_offset[blk] + pairs.index((lo, hi))
            entries = [(r, v if i == j else v * _SQRT2)]
        for r, value in entries:
            if matno == 0:
                bvec[r] += -value  # F0: b = -svec(F0)
            else:
                rows.append(r)
                cols.append(matno - 1)
                vals.append(-value)  # A = -[F_i]

    for ln in raw_lines[4:]:
        tok = ln.replace(",", " ").split()
        if len(tok) != 5:
            raise SchemaError(f"malformed SDPA entry line: {ln!r}")
        matno, blk, i, j = (int(t) for t in tok[:4])
        v = float(tok[4])
        if not 0 <= matno <= m or not 1 <= blk <= nblocks:
            raise SchemaError(f"entry indices out of range: {ln!r}")
        place(matno, blk - 1, i, j, v)

    a = sp.csc_matrix(
        (np.array(vals), (np.array(rows, dtype=int), np.array(cols, dtype=int))),
        shape=(total, m),
    )
    cones = []
    if n_nonneg:
        cones.append(ConeBlock("nonneg", n_nonneg))
    for _, s in psd_blocks:
        cones.append(ConeBlock("psd", s))
    return ConicProblem(
        objective=np.array(cvals),
        a_matrix=a,
        offset=bvec,
        cones=tuple(cones),
        metadata={"source": "sdpa-import"},
    )
