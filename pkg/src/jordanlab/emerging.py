"""Detection and quantification of emerging Jordan blocks.

The J measure between eigenvectors, the limiting coupling extracted from the
relative rates at which eigenvalues merge and J tends to 1, Gram-Schmidt limit
bases, reconstructed upper-triangular block matrices (ranks 2 and 3), and the
scan that groups parametrized eigenvector paths into candidate blocks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import GridMismatch, ParallelVectors, RankDeficient, ZeroVector

__all__ = [
    "j_measure",
    "emerging_coupling",
    "gram_schmidt_limit_basis",
    "emerging_block_matrix",
    "EigenPath",
    "EmergingBlockReport",
    "scan_emerging_blocks",
]


def _default_ip(u, v):
    return np.vdot(u, v)


def j_measure(u, v, ip=None):
    """J(u, v) = (u|v)/sqrt((u|u)(v|v)) and its modulus, |J| <= 1.

    ip may override the positive-definite inner product (conjugate-linear in
    the first argument); the default is the standard one.
    """
    ip = ip or _default_ip
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    uu = ip(u, u).real
    vv = ip(v, v).real
    if uu <= 0 or vv <= 0:
        raise ZeroVector("j_measure requires nonzero vectors and a positive-definite product")
    j = ip(u, v) / math.sqrt(uu * vv)
    return j, abs(j)


def emerging_coupling(lam1, lam2, u, v, ip=None):
    """Limiting off-diagonal element a = (lam2-lam1) J / sqrt(1-J^2).

    The sign convention flips v if needed so that Re J >= 0.  Tends to the
    Jordan coupling when the pair forms an emerging rank-2 block.
    """
    j, jabs = j_measure(u, v, ip)
    if jabs >= 1 - 1e-14:
        raise ParallelVectors("coupling formula is singular for |J| -> 1")
    if j.real < 0:
        j = -j  # change the sign of v
    return (lam2 - lam1) * j / math.sqrt(max(1.0 - jabs * jabs, 0.0))


def gram_schmidt_limit_basis(vectors, ip=None, pivot_tol=1e-13):
    """Modified Gram-Schmidt orthonormalization preserving prefix spans.

    Matches the closed determinant form e_j = (D_{j-1} D_j)^{-1/2} det(...) up
    to a per-vector phase.
    """
    ip = ip or _default_ip
    out = []
    for v in vectors:
        w = np.asarray(v, dtype=complex).copy()
        for e in out:
            w = w - e * ip(e, w)
        # second pass for numerical orthogonality of nearly parallel input
        for e in out:
            w = w - e * ip(e, w)
        norm = math.sqrt(ip(w, w).real)
        if norm < pivot_tol:
            raise RankDeficient(f"pivot norm {norm:.2e} below tolerance; input not independent")
        out.append(w / norm)
    return out


def gram_schmidt_determinant_basis(vectors, ip=None):
    """Closed-form Gram determinant expression for the orthonormal basis.

    e_j = (D_{j-1} D_j)^{-1/2} det of the matrix whose first j-1 rows hold the
    pairwise products (u_s | u_r) and whose bottom row holds the unit vectors,
    expanded by cofactors along that row.  Independent oracle for
    gram_schmidt_limit_basis; explicit determinants, fine at small n.
    """
    ip = ip or _default_ip
    vecs = [np.asarray(v, dtype=complex) for v in vectors]
    vecs = [v / math.sqrt(ip(v, v).real) for v in vecs]
    n = len(vecs)
    gram = np.array([[ip(vecs[r], vecs[s]) for s in range(n)] for r in range(n)])
    out = []
    d_prev = 1.0
    for j in range(1, n + 1):
        dj = np.linalg.det(gram[:j, :j]).real
        top = gram[:j, : j - 1].T  # row r, col s -> (u_s | u_{r})
        e = np.zeros_like(vecs[0])
        for col in range(j):
            if j == 1:
                cof = 1.0
            else:
                minor = np.delete(top, col, axis=1)
                cof = (-1) ** ((j - 1) + col) * np.linalg.det(minor)
            e = e + cof * vecs[col]
        out.append(e / math.sqrt(max(d_prev * dj, 1e-300)))
        d_prev = dj
    return out


def emerging_block_matrix(eigs, vectors, ip=None):
    """Upper-triangular matrix of the operator restricted to 2 or 3 eigenvectors.

    In the Gram-Schmidt basis of the (unordered) input vectors the operator is
    upper triangular with the input eigenvalues on the diagonal; off-diagonal
    entries involve only eigenvalue differences and the pairwise J measures.
    """
    ip = ip or _default_ip
    n = len(vectors)
    if n not in (2, 3):
        raise ValueError("reconstruction is specified for 2 or 3 vectors")
    js = {}
    for r in range(n):
        for s in range(r + 1, n):
            j, jabs = j_measure(vectors[r], vectors[s], ip)
            if jabs >= 1 - 1e-14:
                raise ParallelVectors("pairwise |J| too close to 1")
            js[(r, s)] = j
    lam = [complex(e) for e in eigs]
    if n == 2:
        j12 = js[(0, 1)]
        d2 = 1 - abs(j12) ** 2
        m = np.array(
            [[lam[0], (lam[1] - lam[0]) * j12 / math.sqrt(d2)], [0.0, lam[1]]],
            dtype=complex,
        )
        return m
    j12, j13, j23 = js[(0, 1)], js[(0, 2)], js[(1, 2)]
    d2 = 1 - j12 * j12
    d3 = 1 - j12 * j12 - j13 * j13 - j23 * j23 + 2 * j12 * j13 * j23
    l1, l2, l3 = lam
    m = np.zeros((3, 3), dtype=complex)
    m[0, 0], m[1, 1], m[2, 2] = l1, l2, l3
    m[0, 1] = (l2 - l1) * j12 / np.sqrt(d2)
    m[1, 2] = (l3 - l2) * (j23 - j12 * j13) / np.sqrt(d3)
    m[0, 2] = ((l3 - l1) * (j13 - j12 * j23) + (l3 - l2) * (j23 - j12 * j13) * j12) / np.sqrt(d2 * d3)
    return m


@dataclass
class EigenPath:
    """Eigenvalue/eigenvector track along a one-parameter family of operators."""

    parameters: np.ndarray
    eigenvalues: np.ndarray
    eigenvectors: np.ndarray  # shape (n_samples, dim)
    ip_tag: str = "standard"

    def __post_init__(self):
        self.parameters = np.asarray(self.parameters, dtype=float)
        self.eigenvalues = np.asarray(self.eigenvalues, dtype=complex)
        self.eigenvectors = np.asarray(self.eigenvectors, dtype=complex)
        if not np.all(np.diff(self.parameters) > 0):
            raise ValueError("parameter samples must be strictly increasing")
        if np.any(np.linalg.norm(self.eigenvectors, axis=1) == 0):
            raise ZeroVector("eigenvector vanished along the path")


@dataclass
class EmergingBlockReport:
    members: tuple
    j_abs: dict  # (i, j) -> array over samples
    couplings: dict  # (i, j) -> array over samples
    verdict: str  # rank2 | rank3-candidate | none
    limit_basis: list = field(default_factory=list)

    def to_json_rows(self):
        rows = []
        for pair, arr in sorted(self.j_abs.items()):
            coup = self.couplings[pair]
            for t in range(len(arr)):
                rows.append(
                    {
                        "pair": list(pair),
                        "sample": t,
                        "j_abs": float(arr[t]),
                        "coupling_re": float(coup[t].real),
                        "coupling_im": float(coup[t].imag),
                        "verdict": self.verdict,
                    }
                )
        return json.dumps(rows)


def scan_emerging_blocks(paths, j_threshold=1e-3, coupling_rtol=0.05, ip=None):
    """Group eigenvector paths whose pairwise |J| -> 1 into block candidates.

    Pairs are reported with their |J| and coupling-estimate sequences; groups
    of three paths with matching final couplings (within coupling_rtol) are
    flagged as rank-3 candidates.
    """
    if not paths:
        return []
    grid = paths[0].parameters
    dim = paths[0].eigenvectors.shape[1]
    for p in paths:
        if p.eigenvectors.shape[1] != dim or not np.array_equal(p.parameters, grid):
            raise GridMismatch("paths must share dimension and sampling grid")
    npaths = len(paths)
    nt = len(grid)

    jabs = {}
    coup = {}
    for i in range(npaths):
        for j in range(i + 1, npaths):
            ja = np.empty(nt)
            cc = np.empty(nt, dtype=complex)
            for t in range(nt):
                _, ja[t] = j_measure(paths[i].eigenvectors[t], paths[j].eigenvectors[t], ip)
                if ja[t] < 1 - 1e-14:
                    cc[t] = emerging_coupling(
                        paths[i].eigenvalues[t],
                        paths[j].eigenvalues[t],
                        paths[i].eigenvectors[t],
                        paths[j].eigenvectors[t],
                        ip,
                    )
                else:
                    cc[t] = np.nan
            jabs[(i, j)] = ja
            coup[(i, j)] = cc

    # adjacency: pairs whose final |J| exceeds the threshold with closing gaps
    linked = {
        pair
        for pair, ja in jabs.items()
        if ja[-1] >= 1 - j_threshold
        and abs(paths[pair[0]].eigenvalues[-1] - paths[pair[1]].eigenvalues[-1])
        <= abs(paths[pair[0]].eigenvalues[0] - paths[pair[1]].eigenvalues[0]) + 1e-12
    }
    parent = list(range(npaths))

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    for i, j in linked:
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri
    groups = {}
    for i in range(npaths):
        groups.setdefault(find(i), []).append(i)

    reports = []
    for members in sorted(groups.values()):
        members = tuple(members)
        sub_j = {p: jabs[p] for p in jabs if p[0] in members and p[1] in members}
        sub_c = {p: coup[p] for p in coup if p[0] in members and p[1] in members}
        if len(members) == 1:
            verdict = "none"
        elif len(members) == 2:
            verdict = "rank2"
        else:
            finals = np.array([abs(sub_c[p][-1]) for p in sorted(sub_c)])
            ref = finals.mean()
            same = ref > 0 and np.all(np.abs(finals - ref) <= coupling_rtol * ref)
            verdict = "rank3-candidate" if (len(members) == 3 and same) else "rank2"
        basis = []
        if verdict != "none":
            basis = gram_schmidt_limit_basis(
                [paths[i].eigenvectors[-1] for i in members], ip
            )
        reports.append(EmergingBlockReport(members, sub_j, sub_c, verdict, basis))
    return reports
