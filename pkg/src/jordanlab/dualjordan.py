"""Left/right eigen-data and projector construction for non-hermitian operators.

Biorthogonal projectors u_i v_i / (v_i u_i) for diagonalizable operators, the
dual-Jordan normalization that turns the per-tower overlap matrices from lower
Hankel into anti-identities, and the rank-d spectral truncation used for
scaling-weak measurements.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateOverlap,
    SingularOverlap,
    SplitsCluster,
    UnmatchedEigenvalue,
)
from .jordanform import JordanDecomposition, canonicalize, group_eigenvalues, jordan_decompose

__all__ = [
    "left_right_eigenpairs",
    "biorthogonal_projectors",
    "ProjectorSet",
    "DualBasis",
    "dual_jordan_projectors",
    "rank_projector",
]


@dataclass
class ProjectorSet:
    """Rank-1 projectors stored factored as (u column, v row) pairs."""

    right: np.ndarray  # columns u_i
    left: np.ndarray  # rows v_i, normalized so v_i u_i = 1
    eigenvalues: np.ndarray
    grouping: list = field(default_factory=list)

    def __len__(self):
        return self.right.shape[1]

    def projector(self, i) -> np.ndarray:
        return np.outer(self.right[:, i], self.left[i, :])

    def apply(self, i, w) -> np.ndarray:
        return self.right[:, i] * (self.left[i, :] @ w)

    def apply_sum(self, indices, w) -> np.ndarray:
        coeff = self.left[indices, :] @ w
        return self.right[:, indices] @ coeff

    def total(self) -> np.ndarray:
        return self.right @ self.left


def left_right_eigenpairs(h, match_tol=1e-8):
    """Right eigenpairs of h and left eigenpairs (rows) matched by eigenvalue.

    Left rows v_i satisfy v_i H = lam_i v_i, computed via H* v* = lam* v*.
    """
    h = np.asarray(h, dtype=complex)
    wr, ur = scipy.linalg.eig(h)
    wl, ul = scipy.linalg.eig(h.conj().T)
    wl = wl.conj()
    order_r = np.lexsort((wr.imag, wr.real))
    order_l = np.lexsort((wl.imag, wl.real))
    wr, ur = wr[order_r], ur[:, order_r]
    wl, ul = wl[order_l], ul[:, order_l]
    scale = max(np.abs(wr).max(), 1.0)
    if np.any(np.abs(wr - wl) > match_tol * scale):
        raise UnmatchedEigenvalue("left and right spectra disagree beyond tolerance")
    left_rows = ul.conj().T  # v_i = (left null vector)* as a row
    return (wr, ur), (wl, left_rows)


def biorthogonal_projectors(u, v, eigenvalues, cluster_tol=1e-8, overlap_tol=1e-12):
    """Orthogonal idempotents Pi_i = u_i v_i / (v_i u_i) from matched eigen-data.

    Degenerate clusters are handled by diagonalizing the overlap block
    M_ij = v_i u_j inside each cluster.  A vanishing diagonal overlap raises
    DegenerateOverlap: the diagnostic that a Jordan block is hiding there.
    """
    u = np.asarray(u, dtype=complex).copy()
    v = np.asarray(v, dtype=complex).copy()
    eigenvalues = np.asarray(eigenvalues, dtype=complex)
    clusters = group_eigenvalues(eigenvalues, cluster_tol * max(1.0, np.abs(eigenvalues).max()))
    grouping = []
    for cl in clusters:
        idx = np.asarray(cl)
        grouping.append(idx)
        if idx.size > 1:
            m = v[idx, :] @ u[:, idx]
            w, s = scipy.linalg.eig(m)
            u[:, idx] = u[:, idx] @ s
            v[idx, :] = np.linalg.inv(s) @ v[idx, :]
    overlaps = np.einsum("ij,ji->i", v, u)
    bad = np.abs(overlaps) < overlap_tol * np.linalg.norm(u, axis=0) * np.linalg.norm(v, axis=1)
    if np.any(bad):
        raise DegenerateOverlap(
            f"vanishing biorthogonal overlap at indices {np.nonzero(bad)[0].tolist()}; "
            "this signals a nontrivial Jordan block"
        )
    v = v / overlaps[:, None]
    return ProjectorSet(u, v, eigenvalues, grouping)


@dataclass
class DualBasis:
    """Right columns and left rows of generalized eigenvectors.

    structure[i] = (eigenvalue, [tower heights]); after normalization the
    overlap v_{ijk} u_{lmn} equals delta_il delta_jm delta_{k+n, m_ij+1}.
    """

    right: np.ndarray
    left: np.ndarray
    structure: list
    index: list  # flat column index -> (i, j, k) eigenvalue/tower/position
    normalized: bool = False


def _tower_slices(structure):
    """Flat column layout: towers concatenated, vectors bottom-up inside."""
    index = []
    for i, (_, heights) in enumerate(structure):
        for j, m in enumerate(heights):
            for k in range(1, m + 1):
                index.append((i, j, k))
    return index


def dual_jordan_projectors(h, dec: JordanDecomposition | None = None, delta=1e-6,
                           rank_tol=1e-8, verify_tol=1e-7):
    """Dual Jordan basis and orthogonal projectors for a non-diagonalizable h.

    Right towers come from dec (computed here when omitted, then canonicalized
    to unit couplings); left towers from the Jordan decomposition of h*.  The
    left towers are shifted by the coefficients solving the Hankel system so
    that per-tower overlaps become anti-identities, giving projectors
    Pi_{ijk} = u_{ijk} v_{i,j,m_ij+1-k} with sum = identity.
    """
    h = np.asarray(h, dtype=complex)
    n = h.shape[0]
    if dec is None:
        dec = jordan_decompose(h, delta=delta, rank_tol=rank_tol)
    dec = canonicalize(dec)
    ldec = canonicalize(jordan_decompose(h.conj().T, delta=delta, rank_tol=rank_tol))

    structure = [(g.eigenvalue, [t.rank for t in g.towers]) for g in dec.groups]
    # match left eigenvalue groups to the right ones (for real eigenvalues the
    # conjugate spectrum coincides)
    lgroups = {complex(g.eigenvalue): g for g in ldec.groups}
    scale = max(1.0, max(abs(g.eigenvalue) for g in dec.groups))

    right_cols = []
    left_rows = []
    for g in dec.groups:
        lam = g.eigenvalue
        lg = None
        best = None
        for lv, cand in lgroups.items():
            d = abs(np.conj(lv) - lam)
            if best is None or d < best:
                best, lg = d, cand
        if lg is None or best > delta * 10 * scale:
            raise UnmatchedEigenvalue(f"no left eigenvalue group matches {lam}")
        if sorted(t.rank for t in lg.towers) != sorted(t.rank for t in g.towers):
            raise SingularOverlap(
                f"left/right tower structures disagree at eigenvalue {lam}"
            )
        heights = [t.rank for t in g.towers]
        u_block = np.hstack([t.vectors for t in g.towers])
        # left towers for v H = lam v + v_prev come from H* towers: v_ij = w_ij*
        # sorted so that tower shapes align with the right block
        ltowers = sorted(lg.towers, key=lambda t: -t.rank)
        rtowers_order = np.argsort([-t.rank for t in g.towers], kind="stable")
        # reorder the right block identically so shapes pair up
        rtowers = [g.towers[i] for i in rtowers_order]
        heights = [t.rank for t in rtowers]
        u_block = np.hstack([t.vectors for t in rtowers])
        v_block = np.vstack([t.vectors.conj().T for t in ltowers])
        u_block, v_block = _normalize_dual_block(u_block, v_block, heights, verify_tol)
        right_cols.append((heights, u_block))
        left_rows.append(v_block)

    structure = []
    cols = []
    rows = []
    for (heights, ub), vb, g in zip(right_cols, left_rows, dec.groups):
        structure.append((g.eigenvalue, heights))
        cols.append(ub)
        rows.append(vb)
    right = np.hstack(cols)
    left = np.vstack(rows)
    index = _tower_slices(structure)
    basis = DualBasis(right, left, structure, index, normalized=True)

    # projector set: Pi_{ijk} = u_{ijk} v_{i,j,m_ij+1-k}
    proj_left = np.empty_like(left)
    pos = 0
    for lam, heights in structure:
        for m in heights:
            block = left[pos : pos + m, :]
            proj_left[pos : pos + m, :] = block[::-1, :]
            pos += m
    eigs = np.array([structure[i][0] for (i, j, k) in index])
    pset = ProjectorSet(right, proj_left, eigs, grouping=[])
    return basis, pset


def _normalize_dual_block(u, v, heights, verify_tol):
    """Shift the right towers so the overlap VU becomes per-tower anti-identity.

    v rows are ordered tower by tower, bottom-up (v_{i1}, v_{i2}, ...).  The
    overlap z^{ik}_{j+l} = v_{ij} u_{kl} depends only on j+l; the shift
    u'_{kl} = u_{kl} + sum c^{kp}_{l-q} u_{pq} with the solved coefficients
    produces v_{ij} u'_{kl} = delta_{ik} delta_{j+l, m_i+1}.
    """
    ntow = len(heights)
    d = sum(heights)
    starts = np.concatenate([[0], np.cumsum(heights)])
    z = v @ u

    # verify the Hankel structure: v_ij u_kl depends only on j+l per tower pair
    for a in range(ntow):
        for b in range(ntow):
            blk = z[starts[a] : starts[a + 1], starts[b] : starts[b + 1]]
            ma, mb = heights[a], heights[b]
            for ssum in range(2, ma + mb + 1):
                vals = [
                    blk[j - 1, l - 1]
                    for j in range(1, ma + 1)
                    for l in range(1, mb + 1)
                    if j + l == ssum
                ]
                if len(vals) > 1:
                    spread = np.max(np.abs(np.diff(vals)))
                    if spread > verify_tol * max(1.0, np.max(np.abs(z))):
                        raise SingularOverlap(
                            "overlap block is not Hankel; Jordan structure input is wrong"
                        )

    # general linear solve for the shift coefficients c^{kp}_t
    # unknowns: for each tower k, partner p, offset t in 0..m_p-1 -> u'_{kl} gains
    # c^{kp}_{t} u_{p, l-t}
    unknowns = []
    for kk in range(ntow):
        for pp in range(ntow):
            for t in range(heights[pp]):
                unknowns.append((kk, pp, t))
    nunk = len(unknowns)
    # equations: v_{aj} u'_{kl} = delta_{ak} delta_{j+l, m_a+1}
    rows = []
    rhs = []
    eqs = []
    for a in range(ntow):
        for j in range(1, heights[a] + 1):
            for kk in range(ntow):
                for l in range(1, heights[kk] + 1):
                    eqs.append((a, j, kk, l))
    amat = np.zeros((len(eqs), nunk), dtype=complex)
    bvec = np.zeros(len(eqs), dtype=complex)
    for e, (a, j, kk, l) in enumerate(eqs):
        base = z[starts[a] + j - 1, starts[kk] + l - 1]
        bvec[e] = (1.0 if (a == kk and j + l == heights[a] + 1) else 0.0) - base
        for uidx, (k2, pp, t) in enumerate(unknowns):
            if k2 != kk:
                continue
            q = l - t
            if 1 <= q <= heights[pp]:
                amat[e, uidx] = z[starts[a] + j - 1, starts[pp] + q - 1]
    sol, *_ = np.linalg.lstsq(amat, bvec, rcond=None)
    resid = np.linalg.norm(amat @ sol - bvec)
    if resid > 1e-6 * max(1.0, np.linalg.norm(bvec)):
        raise SingularOverlap(f"shift system solve failed, residual {resid:.2e}")

    unew = u.copy()
    for uidx, (kk, pp, t) in enumerate(unknowns):
        c = sol[uidx]
        if c == 0:
            continue
        for l in range(1, heights[kk] + 1):
            q = l - t
            if 1 <= q <= heights[pp]:
                unew[:, starts[kk] + l - 1] += c * u[:, starts[pp] + q - 1]
    return unew, v


def rank_projector(pset: ProjectorSet, structure, d: int):
    """Indices of the d lowest projectors (by real part), refusing split clusters.

    structure is the list of (eigenvalue, heights) from the dual basis, or the
    grouping of a biorthogonal set; the running dimensions of eigenvalue
    clusters are the only admissible truncation ranks.
    """
    sizes = [sum(heights) for _, heights in structure]
    order = np.argsort([lam.real for lam, _ in structure], kind="stable")
    running = 0
    chosen = []
    boundaries = []
    for gi in order:
        running += sizes[gi]
        boundaries.append(running)
    if d not in boundaries and d != 0:
        raise SplitsCluster(
            f"rank {d} splits a degenerate eigenvalue cluster; valid ranks: {boundaries}"
        )
    running = 0
    flat = []
    offsets = np.concatenate([[0], np.cumsum(sizes)])
    for gi in order:
        if running == d:
            break
        flat.extend(range(offsets[gi], offsets[gi] + sizes[gi]))
        running += sizes[gi]
    return np.asarray(flat, dtype=int)
