"""Numerical Jordan canonical form of a dense complex matrix.

Pipeline: complex Schur form; unitary adjacent swaps to sort the diagonal;
clustering of numerically multiple eigenvalues; block elimination to block
diagonal via Sylvester solves; per-block economy QR; rank filtration by
iterated SVD to obtain tower heights; chain construction ("Gaussian
elimination" step) to assemble eigenvectors and generalized eigenvectors.
"""

from __future__ import annotations

import json
import warnings
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import IllConditionedElimination
from .linalg import schur_decompose

__all__ = [
    "EigGroup",
    "JordanTower",
    "JordanDecomposition",
    "group_eigenvalues",
    "jordan_decompose",
    "canonicalize",
]


@dataclass
class JordanTower:
    eigenvalue: complex
    vectors: np.ndarray  # columns u_1..u_r, A u_j = lam u_j + c_j u_{j-1}
    couplings: np.ndarray  # c_2..c_r (empty for rank 1)

    @property
    def rank(self) -> int:
        return self.vectors.shape[1]


@dataclass
class EigGroup:
    eigenvalue: complex  # average of the grouped diagonal entries
    tower_heights: tuple
    algebraic_multiplicity: int
    towers: list = field(default_factory=list)


@dataclass
class JordanDecomposition:
    groups: list
    basis: np.ndarray  # all tower vectors, grouped, as columns
    shape: tuple

    @property
    def towers(self):
        for g in self.groups:
            yield from g.towers

    def jordan_matrix(self) -> np.ndarray:
        n = self.basis.shape[1]
        j = np.zeros((n, n), dtype=complex)
        col = 0
        for g in self.groups:
            for t in g.towers:
                r = t.rank
                for i in range(r):
                    j[col + i, col + i] = t.eigenvalue
                for i, c in enumerate(t.couplings):
                    j[col + i, col + i + 1] = c
                col += r
        return j

    def to_json(self) -> str:
        payload = {
            "shape": list(self.shape),
            "groups": [
                {
                    "eigenvalue": [g.eigenvalue.real, g.eigenvalue.imag],
                    "tower_heights": list(g.tower_heights),
                    "algebraic_multiplicity": g.algebraic_multiplicity,
                }
                for g in self.groups
            ],
            "basis": {
                "re": self.basis.real.T.tolist(),  # column-major: one row per column
                "im": self.basis.imag.T.tolist(),
            },
        }
        return json.dumps(payload)


def group_eigenvalues(diag, delta: float):
    """Partition values into clusters by the transitive closure of |a-b| < delta.

    Returns a list of index arrays (into the input) sorted so that cluster
    members are contiguous after sorting by (real, imag).
    """
    if delta <= 0:
        raise ValueError("delta must be positive")
    diag = np.asarray(diag, dtype=complex)
    n = diag.size
    order = np.lexsort((diag.imag, diag.real))
    parent = np.arange(n)

    def find(i):
        while parent[i] != i:
            parent[i] = parent[parent[i]]
            i = parent[i]
        return i

    def union(i, j):
        ri, rj = find(i), find(j)
        if ri != rj:
            parent[rj] = ri

    # transitive closure: pairwise check is O(n^2) but n is a reduced dimension
    for i in range(n):
        for j in range(i + 1, n):
            if abs(diag[i] - diag[j]) < delta:
                union(i, j)
    roots = {}
    for idx in order:
        roots.setdefault(find(idx), []).append(idx)
    clusters = [np.array(v) for v in roots.values()]
    clusters.sort(key=lambda c: (diag[c].real.mean(), diag[c].imag.mean()))
    return clusters


def _swap_adjacent(t, s, i):
    """Unitary swap of diagonal entries i, i+1 of the triangular matrix t."""
    a, b = t[i, i], t[i + 1, i + 1]
    c = t[i, i + 1]
    # rotation annihilating the coupling so the two eigenvalues exchange
    denom = np.hypot(abs(c), abs(b - a))
    if denom == 0:
        return
    g = np.eye(t.shape[0], dtype=complex)
    x = c / denom
    y = (b - a) / denom
    g[i, i] = x.conjugate()
    g[i, i + 1] = y.conjugate()
    g[i + 1, i] = -y
    g[i + 1, i + 1] = x
    t[:] = g @ t @ g.conj().T
    s[:] = s @ g.conj().T
    # enforce triangularity of the 2x2 block
    t[i + 1, i] = 0.0


def _sort_schur(t, s, delta):
    """Sort the Schur diagonal by (real, imag) keys using adjacent swaps."""
    n = t.shape[0]
    keys = [(t[i, i].real, t[i, i].imag) for i in range(n)]
    # selection sort realized with adjacent transpositions (stable in exact
    # arithmetic; each swap is a unitary similarity)
    for target in range(n):
        src = target
        for j in range(target + 1, n):
            if keys[j] < keys[src]:
                src = j
        for i in range(src - 1, target - 1, -1):
            _swap_adjacent(t, s, i)
            keys[i], keys[i + 1] = keys[i + 1], keys[i]
    return t, s


def _eliminate_offdiagonal(t, sizes, rank_tol):
    """Solve Sylvester systems to zero the blocks above the diagonal.

    Works upwards in rows then left to right in columns; accumulates the
    (non-unitary) elimination transform M with T2 = M^-1 T M block diagonal.
    """
    n = t.shape[0]
    p = len(sizes)
    starts = np.concatenate([[0], np.cumsum(sizes)])
    m = np.eye(n, dtype=complex)
    t = t.copy()
    for cj in range(1, p):
        for ci in range(cj - 1, -1, -1):
            r0, r1 = starts[ci], starts[ci + 1]
            c0, c1 = starts[cj], starts[cj + 1]
            tii = t[r0:r1, r0:r1]
            tjj = t[c0:c1, c0:c1]
            tij = t[r0:r1, c0:c1]
            try:
                x = scipy.linalg.solve_sylvester(tii, -tjj, -tij)
            except (ValueError, np.linalg.LinAlgError) as exc:
                raise IllConditionedElimination(str(exc)) from exc
            if not np.all(np.isfinite(x)) or np.linalg.norm(x) > 1.0 / max(rank_tol, 1e-300):
                raise IllConditionedElimination(
                    f"Sylvester solve between clusters {ci} and {cj} is ill-conditioned; "
                    "merge the clusters (larger delta)"
                )
            # similarity by E = I + X e_ij block: E^-1 T E eliminates T_ij
            e = np.eye(n, dtype=complex)
            e[r0:r1, c0:c1] = x
            einv = np.eye(n, dtype=complex)
            einv[r0:r1, c0:c1] = -x
            t = einv @ t @ e
            m = m @ e
    return t, m


def _nilpotent_structure(a, rank_tol):
    """Weyr filtration of a (nearly) nilpotent matrix via iterated SVD.

    Returns null-space dimensions [n_1, n_2, ...] of a^j until exhausted.
    """
    t = a.shape[0]
    dims = []
    power = np.eye(t, dtype=complex)
    prev_null = 0
    for _ in range(t):
        power = power @ a
        sig = np.linalg.svd(power, compute_uv=False)
        tolerance = rank_tol * max(sig[0], 1.0) if sig.size else rank_tol
        rank = int(np.sum(sig > tolerance))
        null = t - rank
        dims.append(null - prev_null)
        prev_null = null
        if null == t:
            break
    return dims


def _chain_basis(a, weyr, rank_tol):
    """Generalized eigenvector chains of the nilpotent matrix a.

    weyr[j] = dim ker a^{j+1} - dim ker a^j.  Tower heights are the conjugate
    partition.  Chains are built top-down: new tops at height h live in
    ker a^h, independent modulo ker a^{h-1} + existing chain vectors.
    """
    t = a.shape[0]
    h = len(weyr)
    kernels = []
    power = np.eye(t, dtype=complex)
    for _ in range(h):
        power = power @ a
        u, sig, _ = np.linalg.svd(power)
        tolerance = rank_tol * max(sig[0], 1.0) if sig.size else rank_tol
        rank = int(np.sum(sig > tolerance))
        # right null space: last columns of V; use full SVD of the power
        _, _, vh = np.linalg.svd(power)
        kernels.append(vh[rank:, :].conj().T)  # columns span ker

    chains = []  # list of lists of vectors, top first
    for height in range(h, 0, -1):
        n_new = (weyr[height - 1] if height <= h else 0) - (
            weyr[height] if height < h else 0
        )
        if n_new <= 0:
            continue
        ker_h = kernels[height - 1]
        # subtract ker a^{h-1} and the images of taller chains at this level
        obstructions = []
        if height >= 2:
            obstructions.append(kernels[height - 2])
        for ch in chains:
            # vector of this chain at the current height
            idx = len(ch) - height
            obstructions.append(ch[idx][:, None])
        if obstructions:
            ob = np.hstack(obstructions)
            q, _ = np.linalg.qr(ob)
            proj = ker_h - q @ (q.conj().T @ ker_h)
        else:
            proj = ker_h
        u, sig, _ = np.linalg.svd(proj)
        picks = u[:, :n_new]
        for i in range(n_new):
            top = picks[:, i]
            chain = [top]
            for _ in range(height - 1):
                chain.append(a @ chain[-1])
            chains.append(chain)
    # chain[j] has height len(chain)-j; reverse so index 0 is the proper eigenvector
    return [list(reversed(ch)) for ch in chains]


def jordan_decompose(a, delta: float = 1e-6, rank_tol: float = 1e-8) -> JordanDecomposition:
    """Numerical Jordan decomposition of the square complex matrix a.

    delta groups numerically multiple eigenvalues (use ~1e-6 when towers of
    rank <= 2 are expected, up to ~1e-4 for rank-3 scans).  rank_tol is the
    relative SVD cutoff deciding tower heights.  Tower vectors come out
    unit-normalized, so couplings are generally not 1; see canonicalize().
    """
    a = np.asarray(a, dtype=complex)
    n = a.shape[0]
    anorm = max(np.linalg.norm(a, 2), 1.0)
    t, s = schur_decompose(a)
    t, s = _sort_schur(t, s, delta)
    clusters = group_eigenvalues(np.diag(t), delta)
    sizes = [len(c) for c in clusters]
    t2, m = _eliminate_offdiagonal(t, sizes, rank_tol)
    y = s @ m  # A = Y T2 Y^-1 with T2 block diagonal

    starts = np.concatenate([[0], np.cumsum(sizes)])
    groups = []
    basis_cols = []
    for ci, size in enumerate(sizes):
        c0, c1 = starts[ci], starts[ci + 1]
        yk = y[:, c0:c1]
        q, r = np.linalg.qr(yk)
        tkk = t2[c0:c1, c0:c1]
        tprime = r @ tkk @ np.linalg.inv(r)
        lam = np.trace(tprime) / size
        nil = tprime - lam * np.eye(size)
        weyr = _nilpotent_structure(nil, rank_tol)
        if sum(weyr) != size:
            warnings.warn(
                f"tower heights inconsistent with multiplicity {size} for "
                f"eigenvalue {lam:.6g}; rank filtration saw {sum(weyr)}",
                stacklevel=2,
            )
        chains = _chain_basis(nil, weyr, rank_tol)
        towers = []
        for chain in chains:
            vecs = np.column_stack([q @ v for v in chain])
            norms = np.linalg.norm(vecs, axis=0)
            vecs = vecs / norms
            couplings = norms[1:] / norms[:-1] if len(chain) > 1 else np.array([])
            # A u_j = lam u_j + c_j u_{j-1} with c_j = |u_{j-1}|/|u_j| in the
            # un-normalized chain; after normalization c_j = norms[j-1]/norms[j]
            towers.append(JordanTower(lam, vecs, np.asarray(couplings, dtype=complex)))
        towers.sort(key=lambda tw: -tw.rank)
        heights = tuple(sorted((tw.rank for tw in towers), reverse=True))
        groups.append(EigGroup(lam, heights, size, towers))
        for tw in towers:
            basis_cols.append(tw.vectors)
    basis = np.hstack(basis_cols) if basis_cols else np.zeros((n, 0), dtype=complex)
    dec = JordanDecomposition(groups, basis, (n, n))
    _refine_couplings(a, dec, anorm, rank_tol)
    return dec


def _refine_couplings(a, dec: JordanDecomposition, anorm, rank_tol):
    """Recompute couplings from the actual residuals A u_j - lam u_j."""
    for g in dec.groups:
        for tw in g.towers:
            vecs = tw.vectors
            r = tw.rank
            couplings = []
            for j in range(1, r):
                resid = a @ vecs[:, j] - tw.eigenvalue * vecs[:, j]
                c = np.vdot(vecs[:, j - 1], resid)
                couplings.append(c)
            tw.couplings = np.asarray(couplings, dtype=complex)


def canonicalize(dec: JordanDecomposition) -> JordanDecomposition:
    """Rescale tower vectors so every superdiagonal coupling equals 1.

    The first vector of each tower keeps unit norm; vector j is scaled by the
    product of the couplings up to j.
    """
    new_groups = []
    cols = []
    for g in dec.groups:
        towers = []
        for tw in g.towers:
            vecs = tw.vectors.copy()
            v0 = vecs[:, 0]
            nv0 = np.linalg.norm(v0)
            scale = 1.0 / nv0
            vecs[:, 0] = v0 * scale
            acc = scale
            for j in range(1, tw.rank):
                acc = acc / tw.couplings[j - 1]
                vecs[:, j] = vecs[:, j] * acc
            towers.append(JordanTower(tw.eigenvalue, vecs, np.ones(max(tw.rank - 1, 0), dtype=complex)))
            cols.append(vecs)
        new_groups.append(EigGroup(g.eigenvalue, g.tower_heights, g.algebraic_multiplicity, towers))
    basis = np.hstack(cols) if cols else dec.basis
    return JordanDecomposition(new_groups, basis, dec.shape)
