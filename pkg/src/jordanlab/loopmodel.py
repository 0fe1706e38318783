"""Periodic dense loop model on link states.

Link states come in three interchangeable encodings: ordered pairing lists,
binary words (1 = through-line or arc opening, 0 = arc closing), and the
integer code (binary value + 1).  Standard modules fix the number of
through-lines; glued modules stack several j sectors and let the generators
contract through-lines downward; the quotient module keeps only non-crossing
j = 0 states.  The sign-flipped variant realizes the e -> -e, m -> -m
symmetry of the algebra, which is where the finite-size Jordan blocks at
c = 0 live.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from functools import cached_property

import numpy as np
import scipy.sparse
from numba import njit

from ._momentum import MonomialOrbits, momentum_rows
from .cftparams import CftParams, derive_params
from .errors import CapExceeded, IndexOutOfRange, RankTolViolation, VariantUnsupported

__all__ = [
    "ModuleSpec",
    "StateSpace",
    "build_state_space",
    "pairings_from_code",
    "code_from_pairings",
    "tl_generator",
    "all_generators",
    "hamiltonian",
    "translation_matrix",
    "momentum_basis",
    "koo_saleur_apply",
    "loop_inner_product",
    "parity_apply",
    "subquotient_scan",
]


# ---------------------------------------------------------------------------
# encodings

def _bits_from_code(code: int, n: int) -> np.ndarray:
    return np.array([(code - 1) >> (n - 1 - i) & 1 for i in range(n)], dtype=np.int8)


def _code_from_bits(bits) -> int:
    code = 0
    for b in bits:
        code = (code << 1) | int(b)
    return code + 1


def pairings_from_code(code: int, n: int):
    """Ordered pairings and singletons of a link state, 1-based sites.

    A pairing (i, j) is a curve starting at site i and running rightward
    (possibly through the periodic boundary) to site j; singletons are
    through-lines.
    """
    bits = _bits_from_code(code, n)
    if bits.sum() < n // 2:
        raise ValueError(f"code {code} has fewer 1s than a valid link state")
    rot = 0
    work = bits.copy()
    while np.min(np.cumsum(2 * work.astype(int) - 1)) < 0:
        work = np.roll(work, -1)
        rot += 1
        if rot > n:
            raise ValueError("no planar rotation found")
    stack = []
    pairs = []
    for i, b in enumerate(work):
        if b == 1:
            stack.append(i)
        else:
            j = stack.pop()
            pairs.append((j, i))
    unrot = lambda i: (i + rot) % n + 1
    return sorted(tuple(map(unrot, p)) for p in pairs), sorted(unrot(s) for s in stack)


def code_from_pairings(pairs, singles, n) -> int:
    bits = np.zeros(n, dtype=np.int8)
    for i, _ in pairs:
        bits[i - 1] = 1
    for s in singles:
        bits[s - 1] = 1
    return _code_from_bits(bits)


@njit(cache=True)
def _steps_from_bits_batch(bits):
    """Linked-partner offset table for every state; 0 marks a through-line.

    For a pair the opening site stores the rightward distance to its partner,
    the closing site the negative of it.
    """
    nstates, n = bits.shape
    steps = np.zeros((nstates, n), dtype=np.int16)
    stack = np.empty(n, dtype=np.int64)
    for s in range(nstates):
        rot = 0
        for r in range(n):
            acc = 0
            ok = True
            for i in range(n):
                acc += 2 * bits[s, (i + r) % n] - 1
                if acc < 0:
                    ok = False
                    break
            if ok:
                rot = r
                break
        top = 0
        for i in range(n):
            b = bits[s, (i + rot) % n]
            if b == 1:
                stack[top] = i
                top += 1
            else:
                j = stack[top - 1]
                top -= 1
                d = i - j
                steps[s, (j + rot) % n] = d
                steps[s, (i + rot) % n] = -d
    return steps


# ---------------------------------------------------------------------------
# module specification and state space

@dataclass(frozen=True)
class ModuleSpec:
    """Which representation of the algebra to build.

    jvals lists the through-line sectors (2j lines each); identify takes the
    j = 0 quotient (non-crossing states only); phi is the twist of a single
    standard module W_{j, e^{i phi}} (None selects the q^{pm 2} convention:
    noncontractible loops weigh m and no winding phases); y deforms the glued
    inner product and even-site generators; sign_flipped builds
    -H(-m, -e_inf) data throughout.
    """

    N: int
    jvals: tuple
    identify: bool = False
    phi: float | None = None
    y: float = 1.0
    sign_flipped: bool = False
    cap: int = 28

    def __post_init__(self):
        object.__setattr__(self, "jvals", tuple(self.jvals))
        if self.N % 2:
            raise ValueError("N must be even")
        if self.N > self.cap:
            raise CapExceeded(f"N={self.N} exceeds cap {self.cap}")
        if self.identify and 0 not in self.jvals:
            raise ValueError("identify only makes sense when 0 is in jvals")

    @property
    def glued(self) -> bool:
        return len(self.jvals) > 1

    @property
    def irreducible(self) -> bool:
        return not self.glued


def _enumerate_sector(n, j, ballot):
    """Codes of binary words with n/2 + j ones, ascending; ballot words only if asked."""
    ones_needed = n // 2 + j
    codes = np.array([0], dtype=np.int64)
    ones = np.array([0], dtype=np.int64)
    bal = np.array([0], dtype=np.int64)
    for site in range(n):
        rem = n - site
        with_one = ones + 1 <= ones_needed
        with_zero = ones_needed - ones <= rem - 1
        if ballot:
            with_zero &= bal > 0
        new_codes = np.concatenate([codes[with_one] * 2 + 1, codes[with_zero] * 2])
        new_ones = np.concatenate([ones[with_one] + 1, ones[with_zero]])
        new_bal = np.concatenate([bal[with_one] + 1, bal[with_zero] - 1])
        order = np.argsort(new_codes, kind="stable")
        codes, ones, bal = new_codes[order], new_ones[order], new_bal[order]
    return codes + 1


class StateSpace:
    """Basis, index maps, translation data and step tables for a ModuleSpec."""

    def __init__(self, spec: ModuleSpec, params: CftParams):
        self.spec = spec
        self.params = params
        n = spec.N
        blocks = []
        jarr = []
        for j in spec.jvals:
            codes = _enumerate_sector(n, j, ballot=(j == 0 and spec.identify))
            blocks.append(codes)
            jarr.append(np.full(codes.size, j, dtype=np.int8))
        self.codes = np.concatenate(blocks)
        self.jval = np.concatenate(jarr)
        self.dim = self.codes.size
        self.dim0 = blocks[0].size if spec.jvals and spec.jvals[0] == 0 else 0
        self.pos = {int(c): i for i, c in enumerate(self.codes)}
        bits = np.zeros((self.dim, n), dtype=np.int8)
        for i in range(n):
            bits[:, i] = (self.codes - 1) >> (n - 1 - i) & 1
        self.bits = bits
        self.steps = _steps_from_bits_batch(bits)

    def project_code(self, code: int) -> int:
        """Quotient map to the non-crossing representative (j = 0 states)."""
        pairs, singles = pairings_from_code(code, self.spec.N)
        pairs = [tuple(sorted(p)) for p in pairs]
        return code_from_pairings(pairs, singles, self.spec.N)

    def image_index(self, code: int) -> int:
        """Basis index of a generator/translation image, projecting if needed."""
        n = self.spec.N
        if self.spec.identify and bin(code - 1).count("1") == n // 2:
            code = self.project_code(code)
        idx = self.pos.get(int(code))
        if idx is None:
            raise KeyError(f"image code {code} missing from basis")
        return idx

    def translate_code(self, code: int) -> int:
        n = self.spec.N
        val = code - 1
        # site i+1 receives the bit of site i: rotate the word right
        val = (val >> 1) | ((val & 1) << (n - 1))
        return val + 1

    @cached_property
    def translate(self) -> np.ndarray:
        """Index image of one-site translation: state i -> state translate[i]."""
        out = np.empty(self.dim, dtype=np.int64)
        for i, code in enumerate(self.codes):
            out[i] = self.image_index(self.translate_code(int(code)))
        return out

    @cached_property
    def translation_phase(self) -> np.ndarray:
        """Graduated phase per state under one-site translation: e^{i j phi / N}."""
        if not self.spec.phi:
            return np.ones(self.dim, dtype=complex)
        return np.exp(1j * self.jval.astype(float) * self.spec.phi / self.spec.N)

    @cached_property
    def orbits(self) -> MonomialOrbits:
        if self.spec.y != 1.0:
            perm2 = self.translate[self.translate]
            phase2 = self.translation_phase * self.translation_phase[self.translate]
            return MonomialOrbits(perm2, phase2)
        return MonomialOrbits(self.translate, self.translation_phase)

    @property
    def translation_period(self) -> int:
        return self.spec.N // 2 if self.spec.y != 1.0 else self.spec.N

    @cached_property
    def parity_perm(self) -> np.ndarray:
        """Site reversal j -> N + 1 - j as a basis permutation."""
        n = self.spec.N
        out = np.empty(self.dim, dtype=np.int64)
        for i, code in enumerate(self.codes):
            pairs, singles = pairings_from_code(int(code), n)
            newpairs = [(n + 1 - b, n + 1 - a) for a, b in pairs]
            newsingles = [n + 1 - s for s in singles]
            out[i] = self.image_index(code_from_pairings(newpairs, newsingles, n))
        return out


def build_state_space(spec: ModuleSpec, params: CftParams | None = None,
                      x: float | None = None) -> StateSpace:
    if params is None:
        params = derive_params(x if x is not None else 2.0)
    return StateSpace(spec, params)


# ---------------------------------------------------------------------------
# generators and Hamiltonian

def _weights(spec: ModuleSpec, params: CftParams):
    """(contractible weight, noncontractible weight, overall sign) of e_j entries."""
    m = params.m
    if spec.glued or spec.identify or spec.phi is None:
        wnc = m
    else:
        wnc = 2.0 * math.cos(spec.phi / 2.0)
    if spec.sign_flipped:
        return -m, -wnc, -1.0
    return m, wnc, 1.0


def tl_generator(spec: ModuleSpec, space: StateSpace, j: int,
                 params: CftParams | None = None) -> scipy.sparse.csr_matrix:
    """Sparse matrix of e_j on the state space (1 <= j <= N).

    Satisfies e^2 = m e, e e' e = e for neighbors, distant commutation;
    through-line motion carries graduated twist phases e^{i phi/2N} per step;
    glued modules contract through-lines downward with a factor y on even j;
    the sign-flipped variant returns -e_j(-m).
    """
    params = params or space.params
    n = spec.N
    if not 1 <= j <= n:
        raise IndexOutOfRange(f"generator index {j} outside 1..{n}")
    a = j - 1
    b = j % n
    m_con, m_nc, sign = _weights(spec, params)
    phase_step = 1.0 if spec.phi is None else np.exp(1j * spec.phi / (2.0 * n))
    jset = set(spec.jvals)
    rows, cols, vals = [], [], []
    steps = space.steps
    bits = space.bits
    for i in range(space.dim):
        s1 = int(steps[i, a])
        s2 = int(steps[i, b])
        newbits = bits[i].copy()
        newbits[a] = 1
        newbits[b] = 0
        weight = 1.0 + 0.0j
        if s1 == 0 and s2 == 0:
            if spec.irreducible or (space.jval[i] - 1) not in jset:
                continue
            if spec.y != 1.0 and j % 2 == 0:
                weight *= spec.y
        elif s1 == 0:
            c = (b + s2) % n
            newbits[c] = 1
            weight *= phase_step ** (s2 + 1)
        elif s2 == 0:
            c = (a + s1) % n
            newbits[c] = 1
            weight *= phase_step ** (s1 - 1)
        elif s1 == 1 or s1 == 1 - n:
            weight *= m_con if s1 == 1 else m_nc
        else:
            pa = (a + s1) % n
            pb = (b + s2) % n
            if s2 - s1 + 1 > 0:
                newbits[pa] = 1
                newbits[pb] = 0
            else:
                newbits[pb] = 1
                newbits[pa] = 0
        idx = space.image_index(_code_from_bits(newbits))
        rows.append(idx)
        cols.append(i)
        vals.append(sign * weight)
    return scipy.sparse.csr_matrix(
        (np.asarray(vals, dtype=complex), (rows, cols)), shape=(space.dim, space.dim)
    )


def all_generators(spec: ModuleSpec, space: StateSpace, params: CftParams | None = None):
    return [tl_generator(spec, space, j, params) for j in range(1, spec.N + 1)]


def hamiltonian(spec: ModuleSpec, space: StateSpace, params: CftParams | None = None,
                scale: str = "algebraic", gens=None):
    """Loop Hamiltonian in one of three normalizations.

    'algebraic' is N e_inf - sum_j e_j, the paper-style matrix with the 1/v_F
    prefactor left out (for sign_flipped this equals -H(-m, -e_inf));
    'physical' divides by v_F; 'scaled' multiplies the physical form by N/2pi
    so eigenvalues approximate h + hbar - c/12.
    """
    params = params or space.params
    gens = gens if gens is not None else all_generators(spec, space, params)
    esum = gens[0].copy()
    for g in gens[1:]:
        esum = esum + g
    hmat = spec.N * params.e_inf * scipy.sparse.identity(space.dim, dtype=complex, format="csr") - esum
    if scale == "algebraic":
        return hmat
    if scale == "physical":
        return hmat / params.v_f
    if scale == "scaled":
        return hmat * (spec.N / (2.0 * math.pi * params.v_f))
    raise ValueError(f"unknown scale {scale!r}")


def translation_matrix(space: StateSpace) -> scipy.sparse.csr_matrix:
    """One-site translation as a monomial matrix (with graduated twist phases)."""
    d = space.dim
    return scipy.sparse.csr_matrix(
        (space.translation_phase, (space.translate, np.arange(d))), shape=(d, d)
    )


def momentum_basis(space: StateSpace, k: int):
    """Orthonormal rows spanning the momentum-k sector.

    The translation (two-site when y != 1) acts on the span as
    e^{2 pi i k / period} with period N (or N/2)."""
    period = space.translation_period
    return momentum_rows(space.orbits, k % period, period)


# ---------------------------------------------------------------------------
# Koo-Saleur generators

def koo_saleur_apply(spec: ModuleSpec, space: StateSpace, n_mode: int, v, bar=False,
                     variant: str = "L", params: CftParams | None = None, gens=None):
    """Apply a lattice Virasoro mode to a vector.

    variant 'L' applies L_n (Lbar_n with bar=True) including the
    momentum-density commutator; variant 'H' applies H_n = L_n + Lbar_{-n},
    which involves no commutator.  L_n maps lattice momentum p to p - n,
    Lbar_n maps p to p + n.
    """
    params = params or space.params
    gens = gens if gens is not None else all_generators(spec, space, params)
    N = spec.N
    v = np.asarray(v, dtype=complex)
    e_inf = -params.e_inf if spec.sign_flipped else params.e_inf
    c = params.c
    vf = params.v_f
    sgn = -1.0 if bar else 1.0
    out = np.zeros_like(v)
    ev = [g @ v for g in gens]
    if variant == "H":
        pref = -N / (2.0 * math.pi * vf)
        for jsite in range(1, N + 1):
            ph = np.exp(sgn * 2j * np.pi * jsite * n_mode / N)
            out += pref * ph * (ev[jsite - 1] - e_inf * v)
        if n_mode == 0:
            out += (c / 12.0) * v
        return out
    if variant != "L":
        raise ValueError("variant must be 'L' or 'H'")
    pref = -N / (4.0 * math.pi * vf)
    for jsite in range(1, N + 1):
        ph = np.exp(sgn * 2j * np.pi * jsite * n_mode / N)
        ej = gens[jsite - 1]
        ejp = gens[jsite % N]
        comm = ej @ ev[jsite % N] - ejp @ ev[jsite - 1]
        term = ev[jsite - 1] - e_inf * v + sgn * (1j / vf) * comm
        out += pref * ph * term
    if n_mode == 0:
        out += (c / 24.0) * v
    return out


# ---------------------------------------------------------------------------
# loop scalar product

@njit(cache=True)
def _sandwich(steps_bra, steps_ket, n):
    """Classify the gluing of a mirrored bra link state on top of a ket one.

    Returns (contractible loops, noncontractible loops, through-line phase
    steps, ket contractions flag data, y count, all-connected flag).
    """
    ncon = 0
    nnc = 0
    phase_steps = 0
    ncontr = 0
    ycount = 0
    connected = True

    done = np.zeros(n, dtype=np.uint8)
    for start in range(n):
        if done[start] or steps_ket[start] == 0 or steps_bra[start] == 0:
            continue
        a = start
        shift = 0
        use_ket = True
        closed = False
        for _ in range(2 * n + 2):
            d = steps_ket[a] if use_ket else steps_bra[a]
            if d == 0:
                break
            a = (a + d) % n
            shift += d
            done[a] = 1
            if a == start and not use_ket:
                closed = True
                break
            use_ket = not use_ket
        done[start] = 1
        if closed:
            if shift % n == 0 and shift != 0:
                nnc += 1
            elif shift == 0:
                ncon += 1
            else:
                nnc += 1

    consumed = np.zeros(2 * n, dtype=np.uint8)  # [0:n] ket thr, [n:2n] bra thr
    for side in range(2):
        own = steps_ket if side == 0 else steps_bra
        other = steps_bra if side == 0 else steps_ket
        for s in range(n):
            if own[s] != 0 or consumed[side * n + s]:
                continue
            consumed[side * n + s] = 1
            a = s
            shift = 0
            use_other = True
            end_own = False
            for _ in range(2 * n + 2):
                d = other[a] if use_other else own[a]
                if d == 0:
                    end_own = not use_other
                    break
                a = (a + d) % n
                shift += d
                use_other = not use_other
            if end_own:
                consumed[side * n + a] = 1
                ncontr += 1
                connected = False
                if (s + 1) % 2 == 0 and shift > 0:
                    ycount += 1
                if (a + 1) % 2 == 0 and shift < 0:
                    ycount += 1
            else:
                consumed[(1 - side) * n + a] = 1
                if side == 0:
                    phase_steps += shift
                else:
                    phase_steps -= shift
    return ncon, nnc, phase_steps, ncontr, ycount, connected


@njit(cache=True)
def _sandwich_rows(steps_all, reps, n):
    """_sandwich for all (rep, j) pairs: returns integer classification tables."""
    nreps = reps.size
    dim = steps_all.shape[0]
    ncon = np.zeros((nreps, dim), dtype=np.int16)
    nnc = np.zeros((nreps, dim), dtype=np.int16)
    phs = np.zeros((nreps, dim), dtype=np.int32)
    nct = np.zeros((nreps, dim), dtype=np.int16)
    ycn = np.zeros((nreps, dim), dtype=np.int16)
    conn = np.zeros((nreps, dim), dtype=np.uint8)
    for r in range(nreps):
        si = steps_all[reps[r]]
        for jdx in range(dim):
            a, b, c, d, e, f = _sandwich(si, steps_all[jdx], n)
            ncon[r, jdx] = a
            nnc[r, jdx] = b
            phs[r, jdx] = c
            nct[r, jdx] = d
            ycn[r, jdx] = e
            conn[r, jdx] = 1 if f else 0
    return ncon, nnc, phs, nct, ycn, conn


class _IpTables:
    """Cached sandwich classifications for the orbit representatives."""

    def __init__(self, space: StateSpace):
        self.space = space
        orbits = space.orbits
        self.reps = orbits.reps
        (self.ncon, self.nnc, self.phs, self.nct, self.ycn, self.conn) = _sandwich_rows(
            space.steps.astype(np.int16), self.reps, space.spec.N
        )

    def gram_rows(self, variant: str):
        spec = self.space.spec
        params = self.space.params
        m_con, m_nc, _ = _weights(spec, params)
        if variant == "native":
            raise ValueError("native product needs no tables")
        if variant == "signed":
            if not (spec.glued and abs(abs(params.m) - 1.0) < 1e-12):
                raise VariantUnsupported("signed variant is defined for glued m = 1 only")
        rows = (m_con + 0j) ** self.ncon * (m_nc + 0j) ** self.nnc
        if spec.phi:
            rows = rows * np.exp(1j * spec.phi * self.phs / (2.0 * spec.N))
        if spec.glued:
            if variant == "loop" and spec.y != 1.0:
                rows = rows * spec.y**self.ycn
        else:
            rows = np.where(self.conn == 1, rows, 0.0)
        return rows


def _ip_tables(space: StateSpace) -> _IpTables:
    tab = getattr(space, "_ip_cache", None)
    if tab is None:
        tab = _IpTables(space)
        space._ip_cache = tab
    return tab


def loop_inner_product(spec: ModuleSpec, space: StateSpace, u, v, variant: str = "loop"):
    """Sesquilinear scalar product <u, v> in the requested variant.

    'native' is the standard positive-definite product; 'loop' evaluates the
    glued diagrams (weight m per contractible loop, z + 1/z per noncontractible
    one, graduated through-line phases, factor y per even-start contraction in
    the deformed glued module); 'signed' is the alternating-sign deformation,
    defined for the glued m = 1 module only.
    """
    u = np.asarray(u, dtype=complex)
    v = np.asarray(v, dtype=complex)
    if variant == "native":
        return np.vdot(u, v)
    if variant == "signed":
        return _signed_inner_product(spec, space, u, v)
    if variant != "loop":
        raise VariantUnsupported(f"unknown inner product variant {variant!r}")
    tab = _ip_tables(space)
    rows = tab.gram_rows(variant)
    orbits = space.orbits
    total = 0.0 + 0.0j
    uc = u.conj()
    perm = orbits.perm
    for r, rep in enumerate(tab.reps):
        orbit = orbits.orbits[r]
        grow = rows[r]
        vshift = v
        # m = 0 term uses v itself; each further term replaces v by v o tau
        for mstep, state in enumerate(orbit):
            if mstep > 0:
                vshift = vshift[perm]
            total += uc[state] * np.dot(grow, vshift)
    return total


def _signed_inner_product(spec: ModuleSpec, space: StateSpace, u, v):
    """Alternating-sign contraction deformation; only glued m = 1."""
    params = space.params
    if not (spec.glued and abs(abs(params.m) - 1.0) < 1e-12):
        raise VariantUnsupported("signed variant is defined for glued m = 1 only")
    tab = _ip_tables(space)
    m_con, m_nc, _ = _weights(spec, params)
    # the signed rule replaces the even-start rule: a contraction from k to l
    # counts when the product of bond signs crossed is negative; bond i,i+1
    # carries +1 for odd i.  The walk data stores even-start counts, so the
    # signed count is recomputed directly.
    rows = np.empty((tab.reps.size, space.dim), dtype=complex)
    steps = space.steps.astype(np.int16)
    for r, rep in enumerate(tab.reps):
        for jdx in range(space.dim):
            rows[r, jdx] = _signed_pair_value(
                steps[rep], steps[jdx], spec.N, m_con, m_nc, spec.y
            )
    orbits = space.orbits
    total = 0.0 + 0.0j
    uc = u.conj()
    perm = orbits.perm
    for r, rep in enumerate(tab.reps):
        orbit = orbits.orbits[r]
        vshift = v
        for mstep, state in enumerate(orbit):
            if mstep > 0:
                vshift = vshift[perm]
            total += uc[state] * np.dot(rows[r], vshift)
    return total


@njit(cache=True)
def _signed_pair_value(steps_bra, steps_ket, n, m_con, m_nc, y):
    ncon, nnc, phs, nct, ycn, conn = 0, 0, 0, 0, 0, True
    scount = 0
    done = np.zeros(n, dtype=np.uint8)
    for start in range(n):
        if done[start] or steps_ket[start] == 0 or steps_bra[start] == 0:
            continue
        a = start
        shift = 0
        use_ket = True
        closed = False
        for _ in range(2 * n + 2):
            d = steps_ket[a] if use_ket else steps_bra[a]
            if d == 0:
                break
            a = (a + d) % n
            shift += d
            done[a] = 1
            if a == start and not use_ket:
                closed = True
                break
            use_ket = not use_ket
        done[start] = 1
        if closed:
            if shift == 0:
                ncon += 1
            else:
                nnc += 1
    consumed = np.zeros(2 * n, dtype=np.uint8)
    for side in range(2):
        own = steps_ket if side == 0 else steps_bra
        other = steps_bra if side == 0 else steps_ket
        for s in range(n):
            if own[s] != 0 or consumed[side * n + s]:
                continue
            consumed[side * n + s] = 1
            a = s
            shift = 0
            use_other = True
            end_own = False
            for _ in range(2 * n + 2):
                d = other[a] if use_other else own[a]
                if d == 0:
                    end_own = not use_other
                    break
                a = (a + d) % n
                shift += d
                use_other = not use_other
            if end_own:
                consumed[side * n + a] = 1
                # orient from the positively shifted end k to l; the crossed
                # bond signs are (k, k+1), ..., (l-1, l) with bond (i, i+1)
                # positive for odd i (1-based), walked periodically
                if shift > 0:
                    k0 = s
                    length = shift
                else:
                    k0 = a
                    length = -shift
                neg = 0
                for t in range(length):
                    site = (k0 + t) % n  # 0-based; bond (site+1, site+2) 1-based
                    if (site + 1) % 2 == 0:
                        neg += 1
                if neg % 2 == 1:
                    scount += 1
            else:
                consumed[(1 - side) * n + a] = 1
    return (m_con + 0j) ** ncon * (m_nc + 0j) ** nnc * y**scount


# ---------------------------------------------------------------------------
# parity and subquotients

def parity_apply(space: StateSpace, v):
    """Site reversal j -> N + 1 - j acting on a vector; an involution."""
    v = np.asarray(v, dtype=complex)
    out = np.empty_like(v)
    out[space.parity_perm] = v
    return out


def subquotient_scan(space: StateSpace, generators, seed_vectors, rank_tol=1e-9,
                     ambiguity_band=(1e-10, 1e-7)):
    """Submodule closure of each seed under the generators, plus containments.

    Iterates generator application and column reduction until the span is
    stable; reports edges (i, j) whenever span_i is strictly contained in
    span_j.  Pivots inside the ambiguity band raise RankTolViolation.
    """
    spans = []
    for seed in seed_vectors:
        basis = np.asarray(seed, dtype=complex).reshape(-1, 1)
        basis = basis / np.linalg.norm(basis)
        while True:
            images = [basis] + [g @ basis for g in generators]
            stacked = np.hstack(images)
            q = _column_reduce(stacked, rank_tol, ambiguity_band)
            if q.shape[1] == basis.shape[1]:
                basis = q
                break
            basis = q
        spans.append(basis)
    edges = []
    for i, si in enumerate(spans):
        for j, sj in enumerate(spans):
            if i == j or si.shape[1] >= sj.shape[1]:
                continue
            stacked = np.hstack([si, sj])
            rank = _numeric_rank(stacked, rank_tol)
            if rank == sj.shape[1]:
                edges.append((i, j))
    return {"spans": spans, "dimensions": [s.shape[1] for s in spans], "edges": edges}


def _numeric_rank(a, rank_tol):
    sig = np.linalg.svd(a, compute_uv=False)
    if sig.size == 0:
        return 0
    return int(np.sum(sig > rank_tol * sig[0]))


def _column_reduce(a, rank_tol, ambiguity_band):
    u, sig, _ = np.linalg.svd(a, full_matrices=False)
    if sig.size == 0:
        return a
    rel = sig / sig[0]
    lo, hi = ambiguity_band
    if np.any((rel > lo) & (rel < hi)):
        raise RankTolViolation(
            "column-reduction pivot inside the ambiguity band; adjust tolerances"
        )
    rank = int(np.sum(rel >= hi))
    return u[:, :rank]
