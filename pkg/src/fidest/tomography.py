"""l2 state tomography via mutually unbiased bases: MUB construction
from GF(2^n) symplectic spreads (n <= 4), per-basis coefficient
estimation, simplex projection, the linear reconstruction identity, and
projection back onto the density-matrix cone.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from itertools import combinations

import numpy as np

from .errors import CapExceededError, DimensionError, NumericalHealthError
from .f2 import PauliPoint, symplectic_product
from .states import (DenseState, StateVector, TrajectoryMixture, as_density,
                     phase_strip)

MUB_QUBIT_CAP = 4

#: primitive polynomials for GF(2^n), bit i = coefficient of x^i
_GF_POLY = {1: 0b11, 2: 0b111, 3: 0b1011, 4: 0b10011}


def _gf_mul(a: int, b: int, n: int) -> int:
    poly = _GF_POLY[n]
    res = 0
    while b:
        if b & 1:
            res ^= a
        b >>= 1
        a <<= 1
        if a >> n:
            a ^= poly
    return res


def _gf_trace(a: int, n: int) -> int:
    t = 0
    x = a
    for _ in range(n):
        t ^= x
        x = _gf_mul(x, x, n)
    return t & 1


def _self_dual_basis(n: int) -> tuple:
    """A basis (b_1..b_n) of GF(2^n) with Tr(b_i b_j) = delta_ij."""
    elems = range(1, 1 << n)
    for cand in combinations(elems, n):
        ok = all(
            _gf_trace(_gf_mul(cand[i], cand[j], n), n) == (1 if i == j else 0)
            for i in range(n) for j in range(i, n))
        if ok:
            return cand
    raise NumericalHealthError(f"no self-dual basis found for n={n}")


@dataclass(frozen=True)
class MUBBasis:
    """One MUB: the commuting Pauli class and its common eigenbasis
    (columns of `vectors`, ordered by descending sorting eigenvalue)."""

    n: int
    paulis: tuple  # the 2^n - 1 nontrivial PauliPoints of the class
    vectors: np.ndarray = field(repr=False)  # (2^n, 2^n), columns orthonormal


@dataclass(frozen=True)
class MUBFamily:
    n: int
    bases: tuple  # 2^n + 1 MUBBasis entries; the first is the Z class


def _dense_pauli(a: PauliPoint) -> np.ndarray:
    from .f2 import _apply_pauli_amps
    dim = 1 << a.n
    mat = np.zeros((dim, dim), dtype=complex)
    for x in range(dim):
        e = np.zeros(dim, dtype=complex)
        e[x] = 1.0
        mat[:, x] = _apply_pauli_amps(a.n, a.ax, a.az, e)
    return mat


def jacobi_eigh(h: np.ndarray, tol: float = 1e-12, max_sweeps: int = 100):
    """Cyclic Jacobi diagonalization of a complex Hermitian matrix.

    Returns (eigenvalues, eigenvectors) with eigenvectors in columns,
    unsorted; off-diagonal Frobenius norm driven below tol.
    """
    a = np.array(h, dtype=complex)
    dim = a.shape[0]
    if a.shape != (dim, dim) or np.max(np.abs(a - a.conj().T)) > 1e-9:
        raise NumericalHealthError("jacobi_eigh requires a Hermitian matrix")
    v = np.eye(dim, dtype=complex)
    mask = ~np.eye(dim, dtype=bool)
    for _ in range(max_sweeps):
        off = math.sqrt(float(np.sum(np.abs(a[mask]) ** 2)))
        if off <= tol:
            break
        for p in range(dim - 1):
            for q in range(p + 1, dim):
                apq = a[p, q]
                if abs(apq) < tol / (dim * dim):
                    continue
                app, aqq = a[p, p].real, a[q, q].real
                phase = apq / abs(apq)
                theta = 0.5 * math.atan2(2.0 * abs(apq), app - aqq)
                c = math.cos(theta)
                s = math.sin(theta) * phase.conjugate()
                # rows/cols p, q rotation: [c, s; -conj(s), c]
                rp = c * a[p, :] + np.conj(s) * a[q, :]
                rq = -s * a[p, :] + c * a[q, :]
                a[p, :], a[q, :] = rp, rq
                cp = c * a[:, p] + s * a[:, q]
                cq = -np.conj(s) * a[:, p] + c * a[:, q]
                a[:, p], a[:, q] = cp, cq
                vp = c * v[:, p] + s * v[:, q]
                vq = -np.conj(s) * v[:, p] + c * v[:, q]
                v[:, p], v[:, q] = vp, vq
    else:
        raise NumericalHealthError("Jacobi diagonalization did not converge")
    return np.real(np.diag(a)).copy(), v


def _f2_independent_generators(paulis, n: int):
    """Greedy maximal F2-independent subset of the class (n generators)."""
    pivots = {}
    gens = []
    for a in paulis:
        v = a.index
        while v:
            hb = v.bit_length() - 1
            if hb in pivots:
                v ^= pivots[hb]
            else:
                pivots[hb] = v
                gens.append(a)
                break
        if len(gens) == n:
            break
    if len(gens) != n:
        raise NumericalHealthError("commuting class is not maximal")
    return gens


def _class_eigenbasis(paulis, n: int) -> np.ndarray:
    """Common eigenbasis of a commuting Pauli class via one Hermitian
    combination of n independent generators with injective eigenvalues
    (weights 3^j keep the spectrum well separated)."""
    dim = 1 << n
    h = np.zeros((dim, dim), dtype=complex)
    for j, a in enumerate(_f2_independent_generators(paulis, n)):
        h += (3.0 ** (j + 1)) * _dense_pauli(a)
    vals, vecs = jacobi_eigh(h)
    order = np.argsort(-vals, kind="stable")
    vecs = vecs[:, order]
    # deterministic global phase: largest-magnitude entry made real positive
    for j in range(dim):
        k = int(np.argmax(np.abs(vecs[:, j])))
        ph = vecs[k, j] / abs(vecs[k, j])
        vecs[:, j] = vecs[:, j] / ph
    return vecs


def mub_family(n: int) -> MUBFamily:
    """2^n + 1 mutually unbiased bases partitioning the nontrivial Paulis
    into maximal commuting classes (GF(2^n) spread in a self-dual basis)."""
    if n > MUB_QUBIT_CAP:
        raise CapExceededError(f"MUB construction capped at n <= {MUB_QUBIT_CAP}")
    basis = _self_dual_basis(n)

    def coords(e: int) -> int:
        # bit for qubit i (MSB first) from Tr(e * b_i)
        w = 0
        for i in range(n):
            w = (w << 1) | _gf_trace(_gf_mul(e, basis[i], n), n)
        return w

    classes = []
    # Z class: {(0, z)}
    classes.append(tuple(PauliPoint(n, 0, coords(z)) for z in range(1, 1 << n)))
    for lam in range(1 << n):
        cls = tuple(PauliPoint(n, coords(x), coords(_gf_mul(lam, x, n)))
                    for x in range(1, 1 << n))
        classes.append(cls)
    # verify commutation and the partition
    seen = set()
    for cls in classes:
        for a, b in combinations(cls, 2):
            if symplectic_product(a, b):
                raise NumericalHealthError("MUB class fails to commute")
        for a in cls:
            seen.add(a.index)
    if len(seen) != (1 << (2 * n)) - 1:
        raise NumericalHealthError("MUB classes do not partition the Paulis")
    bases = []
    for j, cls in enumerate(classes):
        if j == 0:
            vecs = np.eye(1 << n, dtype=complex)
        else:
            vecs = _class_eigenbasis(cls, n)
        bases.append(MUBBasis(n=n, paulis=cls, vectors=vecs))
    return MUBFamily(n=n, bases=tuple(bases))


# ---------------------------------------------------------------------------
# Estimation and projections


@dataclass(frozen=True)
class CoefficientTable:
    n: int
    raw: np.ndarray = field(repr=False)  # (2^n + 1, 2^n) estimated rows
    projected: np.ndarray = field(repr=False)  # simplex-projected rows


def exact_rows(rho, fam: MUBFamily) -> np.ndarray:
    """Exact Born rows <phi|rho|phi> for every basis (test/limit oracle)."""
    dense = as_density(rho)
    if isinstance(dense, TrajectoryMixture):
        dense = dense.to_dense()
    rows = np.empty((len(fam.bases), 1 << fam.n))
    for j, b in enumerate(fam.bases):
        rows[j] = np.real(np.einsum("ik,ij,jk->k", np.conj(b.vectors),
                                    dense.matrix, b.vectors))
    return np.clip(rows, 0.0, None)


def estimate_coefficients(rho, fam: MUBFamily, shots: int,
                          rng: np.random.Generator) -> CoefficientTable:
    """Measure `shots` copies in each basis; empirical frequencies per
    row, simplex-projected.  shots=0 returns the exact rows."""
    rows = exact_rows(rho, fam)
    if shots > 0:
        sampled = np.empty_like(rows)
        for j in range(rows.shape[0]):
            p = rows[j] / rows[j].sum()
            sampled[j] = rng.multinomial(shots, p) / shots
        rows = sampled
    projected = np.vstack([simplex_project(r) for r in rows])
    return CoefficientTable(n=fam.n, raw=rows, projected=projected)


def simplex_project(v) -> np.ndarray:
    """Euclidean projection onto the probability simplex (sort-threshold)."""
    v = np.asarray(v, dtype=float)
    if v.size == 0:
        raise DimensionError("empty vector")
    u = np.sort(v)[::-1]
    css = np.cumsum(u) - 1.0
    k = np.arange(1, v.size + 1)
    cond = u - css / k > 0
    rho = int(np.nonzero(cond)[0][-1])
    theta = css[rho] / (rho + 1.0)
    return np.maximum(v - theta, 0.0)


def reconstruct(table: CoefficientTable, fam: MUBFamily) -> np.ndarray:
    """Linear inversion rho_hat = sum_phi b_phi |phi><phi| - I (the MUB
    2-design identity); Hermitian with unit trace by construction."""
    if table.n != fam.n:
        raise DimensionError("table/family size mismatch")
    dim = 1 << fam.n
    acc = np.zeros((dim, dim), dtype=complex)
    for j, b in enumerate(fam.bases):
        acc += (b.vectors * table.projected[j][None, :]) @ b.vectors.conj().T
    return acc - np.eye(dim)


def psd_project(h: np.ndarray) -> DenseState:
    """The l2-closest density matrix: project the spectrum onto the
    simplex, keep the eigenvectors."""
    h = np.asarray(h, dtype=complex)
    if np.max(np.abs(h - h.conj().T)) > 1e-9:
        raise NumericalHealthError("psd_project requires a Hermitian matrix")
    vals, vecs = jacobi_eigh(h)
    order = np.argsort(-vals, kind="stable")
    vals, vecs = vals[order], vecs[:, order]
    pvals = simplex_project(vals)
    n = h.shape[0].bit_length() - 1
    return DenseState(n, (vecs * pvals[None, :]) @ vecs.conj().T)


def l2_distance(a: np.ndarray, b: np.ndarray) -> float:
    return float(np.linalg.norm(np.asarray(a) - np.asarray(b)))


def tomography_pipeline(rho, n: int, shots: int, seed: int = 0):
    """Full chain mub -> estimate -> project -> reconstruct -> psd_project.
    Returns (DenseState estimate, l2 error against the known input)."""
    fam = mub_family(n)
    rng = np.random.default_rng(np.random.SeedSequence(seed))
    table = estimate_coefficients(rho, fam, shots, rng)
    est = psd_project(reconstruct(table, fam))
    dense = as_density(rho)
    if isinstance(dense, TrajectoryMixture):
        dense = dense.to_dense()
    return est, l2_distance(est.matrix, dense.matrix)


def estimate_phase_basis_fofe(rho, fam: MUBFamily, basis_index: int,
                              shots: int, rng: np.random.Generator) -> np.ndarray:
    """Integration demo: estimate one non-computational basis row with the
    fan-out estimator.  Every element of a non-Z MUB basis is unbiased to
    the computational basis, hence a phase state; all 2^n fidelities are
    post-processed from one shared outcome stream."""
    from .estimation import fofe_multi_target
    from .samplers import UniformXSampler
    if basis_index == 0:
        raise DimensionError("row 0 is the computational basis; use direct "
                             "measurement")
    b = fam.bases[basis_index]
    phases = []
    stripped = None
    for j in range(b.vectors.shape[1]):
        vec = StateVector(fam.n, b.vectors[:, j])
        st, phi = phase_strip(vec)
        phases.append(phi)
        stripped = st
    sampler = UniformXSampler(fam.n, 0.5)
    result = fofe_multi_target(rho, sampler, phases, shots, rng,
                               stripped=stripped)
    return np.array([r.mean for r in result.reports])
