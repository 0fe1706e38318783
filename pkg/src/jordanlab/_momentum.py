"""Momentum sectors of a monomial (signed/phased permutation) translation.

Shared by the lattice models: the translation acts on basis states as
state -> phase * state', so orbits carry an accumulated phase.  Momentum-k
combinations exist on an orbit exactly when the total orbit phase matches
e^{2 pi i k ord / period}.
"""

from __future__ import annotations

import numpy as np
import scipy.sparse

from .errors import EmptySector

__all__ = ["MonomialOrbits", "momentum_rows"]


class MonomialOrbits:
    """Orbit decomposition of the permutation-with-phases map i -> (perm[i], phase[i])."""

    def __init__(self, perm, phase=None):
        perm = np.asarray(perm, dtype=np.int64)
        n = perm.size
        if phase is None:
            phase = np.ones(n, dtype=complex)
        phase = np.asarray(phase, dtype=complex)
        seen = np.zeros(n, dtype=bool)
        reps, orbits, accphases, orbit_phase = [], [], [], []
        for start in range(n):
            if seen[start]:
                continue
            idx = [start]
            acc = [1.0 + 0.0j]
            cur = start
            ph = 1.0 + 0.0j
            while True:
                ph = ph * phase[cur]
                cur = perm[cur]
                if cur == start:
                    break
                idx.append(cur)
                acc.append(ph)
            seen[np.asarray(idx)] = True
            reps.append(start)
            orbits.append(np.asarray(idx, dtype=np.int64))
            accphases.append(np.asarray(acc, dtype=complex))
            orbit_phase.append(ph)
        self.n = n
        self.perm = perm
        self.phase = phase
        self.reps = np.asarray(reps, dtype=np.int64)
        self.orbits = orbits
        self.accumulated = accphases
        self.closure_phase = np.asarray(orbit_phase, dtype=complex)

    @property
    def orders(self):
        return np.array([len(o) for o in self.orbits])


def momentum_rows(orbits: MonomialOrbits, k: int, period: int, tol=1e-9):
    """Sparse matrix whose orthonormal rows span the momentum-k sector.

    The translation acts on the span as e^{2 pi i k / period}.  An orbit of
    length ord contributes iff its accumulated closure phase equals
    e^{2 pi i k ord / period}.
    """
    rows = []
    cols = []
    vals = []
    nrow = 0
    w = np.exp(2j * np.pi * k / period)
    for orbit, acc, closure in zip(orbits.orbits, orbits.accumulated, orbits.closure_phase):
        ord_ = len(orbit)
        if abs(closure - w**ord_) > tol:
            continue
        # |rep, k> = ord^{-1/2} sum_m w^{-m} tau^m |rep> with tau^m |rep> =
        # acc[m] |orbit[m]>, so the row entry at orbit[m] is w^{-m} acc[m]
        coeff = (w ** (-np.arange(ord_))) * acc
        coeff = coeff / np.sqrt(ord_)
        rows.extend([nrow] * ord_)
        cols.extend(orbit.tolist())
        vals.extend(coeff.tolist())
        nrow += 1
    if nrow == 0:
        raise EmptySector(f"momentum {k} sector is empty")
    kmat = scipy.sparse.csr_matrix(
        (np.asarray(vals, dtype=complex), (np.asarray(rows), np.asarray(cols))),
        shape=(nrow, orbits.n),
    )
    return kmat
