"""Phase-point samplers: draw Pauli points a following the l_2a
distribution |c(a)|^(2a) / sum_b |c(b)|^(2a) of a target state, with
structure-exploiting fast paths for phase states, Dicke states, Bell
sampling of real states, and real matrix-product states.

Every sampler exposes:
  n, alpha       -- system size and the sampling exponent
  norm_sum       -- sum_b |c(b)|^(2 alpha) (the estimator weight scale)
  draw(rng)      -- one PauliPoint with nonzero coefficient
  coefficient(a) -- the signed coefficient c(a) of the target
and, where enumeration is feasible, distribution() -> dense 4^n vector.
"""

from __future__ import annotations

import math
import warnings
from functools import lru_cache

import numpy as np

from .errors import CapExceededError, DimensionError, NumericalHealthError
from .f2 import COEFF_TOL, CoeffVector, PauliPoint, fwht, pauli_expectation
from .states import RealMPS, StateVector

BELL_TOTAL_QUBIT_CAP = 24


class ExactSampler:
    """Cumulative-table sampler over the dense coefficient vector."""

    strategy = "exact-enumeration"

    def __init__(self, coeffs: CoeffVector, alpha: float):
        self.n = coeffs.n
        self.alpha = float(alpha)
        self._coeffs = coeffs
        absc = np.abs(coeffs.values)
        self._support = np.nonzero(absc > COEFF_TOL)[0]
        if self._support.size == 0:
            raise NumericalHealthError("all coefficients are zero")
        weights = absc[self._support] ** (2.0 * self.alpha)
        self.norm_sum = float(weights.sum())
        self._cum = np.cumsum(weights / self.norm_sum)

    def draw(self, rng: np.random.Generator) -> PauliPoint:
        k = int(np.searchsorted(self._cum, rng.random(), side="right"))
        k = min(k, self._support.size - 1)
        return PauliPoint.from_index(self.n, int(self._support[k]))

    def coefficient(self, a: PauliPoint) -> float:
        return self._coeffs.value(a)

    def distribution(self) -> np.ndarray:
        out = np.zeros(1 << (2 * self.n))
        probs = np.diff(self._cum, prepend=0.0)
        out[self._support] = probs
        return out


class UniformXSampler:
    """l_2a sampler for phase states: uniform over the 2^n X-type points,
    every coefficient exactly +2^-n."""

    strategy = "uniform-X"

    def __init__(self, n: int, alpha: float = 0.5):
        self.n = n
        self.alpha = float(alpha)
        self.norm_sum = float((1 << n) * (2.0 ** (-n)) ** (2.0 * self.alpha))

    def draw(self, rng: np.random.Generator) -> PauliPoint:
        ax = int(rng.integers(0, 1 << self.n))
        return PauliPoint(self.n, ax, 0)

    def coefficient(self, a: PauliPoint) -> float:
        if a.az != 0:
            return 0.0
        return 2.0 ** (-self.n)

    def distribution(self) -> np.ndarray:
        out = np.zeros(1 << (2 * self.n))
        for ax in range(1 << self.n):
            out[ax << self.n] = 2.0 ** (-self.n)
        return out


# ---------------------------------------------------------------------------
# Dicke states


def _alt_binomial_sum(w: int, rest: int, half: int) -> int:
    """K(w, rest, half) = sum_l (-1)^l C(w, l) C(rest, half - l)."""
    total = 0
    for l in range(w + 1):
        j = half - l
        if 0 <= j <= rest:
            total += (-1) ** l * math.comb(w, l) * math.comb(rest, j)
    return total


@lru_cache(maxsize=None)
def _dicke_class_table(n: int, k: int):
    """Class decomposition of the l1 distribution of Dic(n, k).

    A class is (p, w1, w2): p = |a_x| (even), w1 = |a_z & a_x|,
    w2 = |a_z & ~a_x|.  All points of a class share |c| and sign; the
    class mass is count * |c|.  Returns (classes, masses, l1, coeff map).
    """
    classes = []
    masses = []
    coeff = {}
    denom = (1 << n) * math.comb(n, k)
    for p in range(0, min(2 * k, n) + 1, 2):
        for w1 in range(p + 1):
            k1 = _alt_binomial_sum(w1, p - w1, p // 2)
            for w2 in range(n - p + 1):
                k2 = _alt_binomial_sum(w2, n - p - w2, k - p // 2)
                val = k1 * k2
                if val == 0:
                    continue
                if w1 % 2 == 1:
                    raise AssertionError("odd w1 must yield K1 = 0")
                sign = (-1) ** (w1 // 2) * (1 if val > 0 else -1)
                c = abs(val) / denom
                coeff[(p, w1, w2)] = sign * c
                count = math.comb(n, p) * math.comb(p, w1) * math.comb(n - p, w2)
                classes.append((p, w1, w2))
                masses.append(count * c)
    masses = np.array(masses)
    return classes, masses, float(masses.sum()), coeff


class DickeSampler:
    """l1-sampler for Dicke states Dic(n, k) with k <= n/2, via the
    (p, w1, w2) class table; per-draw cost polynomial in n and k."""

    strategy = "dicke"
    alpha = 0.5

    def __init__(self, n: int, k: int):
        if not 0 <= k <= n // 2:
            raise DimensionError(f"k={k} outside 0..{n//2}")
        self.n = n
        self.k = k
        self._classes, masses, self.norm_sum, self._coeff = _dicke_class_table(n, k)
        self._cum = np.cumsum(masses / self.norm_sum)

    def _class_of(self, a: PauliPoint):
        p = a.ax.bit_count() if hasattr(a.ax, "bit_count") else bin(a.ax).count("1")
        w1 = bin(a.az & a.ax).count("1")
        w2 = bin(a.az & ~a.ax & ((1 << self.n) - 1)).count("1")
        return p, w1, w2

    def coefficient(self, a: PauliPoint) -> float:
        return self._coeff.get(self._class_of(a), 0.0)

    def draw(self, rng: np.random.Generator) -> PauliPoint:
        j = int(np.searchsorted(self._cum, rng.random(), side="right"))
        j = min(j, len(self._classes) - 1)
        p, w1, w2 = self._classes[j]
        pos = rng.permutation(self.n)
        x_pos = pos[:p]
        ax = 0
        for i in x_pos:
            ax |= 1 << int(i)
        az = 0
        for i in rng.permutation(x_pos)[:w1]:
            az |= 1 << int(i)
        for i in rng.permutation(pos[p:])[:w2]:
            az |= 1 << int(i)
        return PauliPoint(self.n, ax, az)

    def distribution(self) -> np.ndarray:
        if self.n > 12:
            raise CapExceededError("dense Dicke distribution capped at n <= 12")
        out = np.zeros(1 << (2 * self.n))
        for idx in range(out.size):
            a = PauliPoint.from_index(self.n, idx)
            out[idx] = abs(self.coefficient(a)) / self.norm_sum
        return out


# ---------------------------------------------------------------------------
# Bell-circuit sampling (l2, real states)


class BellCircuitSampler:
    """l2-sampler for a real state via Bell sampling on two copies:
    transversal CNOTs from register 1 to register 2, a Hadamard layer on
    register 1, then a full computational measurement (b1, b2) emits
    a = (a_x, a_z) = (b2, b1) with probability <T_a>^2 / 2^n."""

    strategy = "bell-circuit"
    alpha = 1.0

    def __init__(self, stripped: StateVector):
        if 2 * stripped.n > BELL_TOTAL_QUBIT_CAP:
            raise CapExceededError(
                f"Bell sampling capped at 2n <= {BELL_TOTAL_QUBIT_CAP}")
        if np.max(np.abs(stripped.amplitudes.imag)) > 1e-12:
            raise NumericalHealthError("Bell sampler requires a real state")
        self.n = stripped.n
        self._psi = stripped
        n = stripped.n
        amps = stripped.amplitudes.real
        mat = np.outer(amps, amps)  # mat[x1, x2]
        x1 = np.arange(1 << n)
        # CNOTs: target register 2 becomes x2 ^ x1
        mat = mat[x1[:, None], x1[:, None] ^ np.arange(1 << n)[None, :]]
        mat = fwht_rows(mat) / math.sqrt(1 << n)  # H^n on register 1
        self._probs = (mat**2).ravel()  # index b1 * 2^n + b2
        self._probs /= self._probs.sum()
        self._cum = np.cumsum(self._probs)
        self.norm_sum = 2.0 ** (-n)  # sum_a c_a^2 for a pure state

    def draw(self, rng: np.random.Generator) -> PauliPoint:
        j = int(np.searchsorted(self._cum, rng.random(), side="right"))
        j = min(j, self._probs.size - 1)
        b1, b2 = j >> self.n, j & ((1 << self.n) - 1)
        return PauliPoint(self.n, ax=b2, az=b1)

    def coefficient(self, a: PauliPoint) -> float:
        return float(pauli_expectation(self._psi, a)) / (1 << self.n)

    def distribution(self) -> np.ndarray:
        out = np.zeros(1 << (2 * self.n))
        for j, p in enumerate(self._probs):
            b1, b2 = j >> self.n, j & ((1 << self.n) - 1)
            out[(b2 << self.n) | b1] += p
        return out


def fwht_rows(mat: np.ndarray) -> np.ndarray:
    """Unnormalized Walsh-Hadamard transform along axis 0."""
    out = mat.astype(float, copy=True)
    h = 1
    size = out.shape[0]
    while h < size:
        for start in range(0, size, 2 * h):
            top = out[start:start + h].copy()
            bot = out[start + h:start + 2 * h]
            out[start:start + h] = top + bot
            out[start + h:start + 2 * h] = top - bot
        h *= 2
    return out


# ---------------------------------------------------------------------------
# Real-MPS l2 sampling


class MPSL2Sampler:
    """Sequential conditional l2-sampler for real MPS, O(n^2 chi^6) per
    draw with O(chi^4) memory for the precomputed right environments."""

    strategy = "mps-marginal"
    alpha = 1.0
    DRIFT_TOL = 1e-6

    def __init__(self, mps: RealMPS):
        self.n = mps.n
        self.chi = mps.chi
        self._mps = mps
        chi2 = mps.chi * mps.chi
        # doubled transfer operators per site
        self._h = np.empty((mps.n, chi2, chi2))
        self._g = np.empty((mps.n, 2, 2, chi2, chi2))  # [site, ax, az]
        for i in range(mps.n):
            g0, g1 = mps.gammas[i, 0], mps.gammas[i, 1]
            for ax in range(2):
                for az in range(2):
                    self._g[i, ax, az] = (
                        np.kron(g0, [g0, g1][ax]) +
                        (-1) ** az * np.kron(g1, [g1, g0][ax]))
            self._h[i] = self._g[i, 0, 0]
        # right environments as chi x chi matrices Hm_k (one copy each);
        # hvec_k = H^{k+1} ... H^{n} (R (x) R)
        hvec = np.kron(mps.right, mps.right)
        self._right = [None] * (mps.n + 1)
        self._right[mps.n] = hvec.reshape(mps.chi, mps.chi)
        for i in range(mps.n - 1, -1, -1):
            hvec = self._h[i] @ hvec
            self._right[i] = hvec.reshape(mps.chi, mps.chi)
        self._l0 = np.outer(np.kron(mps.left, mps.left),
                            np.kron(mps.left, mps.left))
        m0 = self._marginal(self._l0, 0)
        if abs(m0 - 1.0) > 1e-6:
            raise NumericalHealthError(f"k=0 marginal {m0}, expected 1")
        self.norm_sum = 2.0 ** (-self.n)

    def _marginal(self, lmat: np.ndarray, k: int) -> float:
        """2^-k <l_k| SW23 |r_k>; equals P(a_1..a_k) of the l2 law."""
        hm = self._right[k]
        l4 = lmat.reshape(self.chi, self.chi, self.chi, self.chi)
        val = np.einsum("abcd,ac,bd->", l4, hm, hm)
        return float(val) * 2.0 ** (-k)

    def draw(self, rng: np.random.Generator) -> PauliPoint:
        lmat = self._l0
        prev = self._marginal(lmat, 0)
        ax = az = 0
        for i in range(self.n):
            cands = []
            weights = np.empty(4)
            for j, (bx, bz) in enumerate(((0, 0), (0, 1), (1, 0), (1, 1))):
                g = self._g[i, bx, bz]
                cand = g.T @ lmat @ g
                cands.append(cand)
                weights[j] = max(self._marginal(cand, i + 1), 0.0)
            total = weights.sum()
            if prev > 0 and abs(total / prev - 1.0) > self.DRIFT_TOL:
                warnings.warn(
                    f"MPS conditional drift {abs(total/prev - 1.0):.3e} "
                    f"at site {i + 1}", RuntimeWarning)
            j = int(rng.choice(4, p=weights / total))
            bx, bz = ((0, 0), (0, 1), (1, 0), (1, 1))[j]
            ax = (ax << 1) | bx
            az = (az << 1) | bz
            lmat = cands[j]
            prev = weights[j]
        return PauliPoint(self.n, ax, az)

    def expectation(self, a: PauliPoint) -> float:
        """<T_a> by direct transfer contraction (real MPS)."""
        w = bin(a.ax & a.az).count("1")
        if w % 2 == 1:
            return 0.0
        vec = np.kron(self._mps.left, self._mps.left)
        for i in range(self.n):
            bx = (a.ax >> (self.n - 1 - i)) & 1
            bz = (a.az >> (self.n - 1 - i)) & 1
            vec = self._g[i, bx, bz].T @ vec
        s = float(vec @ np.kron(self._mps.right, self._mps.right))
        return (-1) ** (w // 2) * s

    def coefficient(self, a: PauliPoint) -> float:
        return self.expectation(a) / (1 << self.n)

    def point_probability(self, a: PauliPoint) -> float:
        """Chain-rule probability of one point (marginal telescoping)."""
        lmat = self._l0
        prob = None
        for i in range(self.n):
            bx = (a.ax >> (self.n - 1 - i)) & 1
            bz = (a.az >> (self.n - 1 - i)) & 1
            g = self._g[i, bx, bz]
            lmat = g.T @ lmat @ g
            prob = self._marginal(lmat, i + 1)
        return max(float(prob), 0.0)

    def distribution(self) -> np.ndarray:
        if self.n > 6:
            raise CapExceededError("dense MPS distribution capped at n <= 6")
        out = np.empty(1 << (2 * self.n))
        for idx in range(out.size):
            out[idx] = self.point_probability(PauliPoint.from_index(self.n, idx))
        return out / out.sum()
