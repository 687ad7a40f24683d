"""Binary-symplectic Pauli algebra, packed F2 linear algebra, and the fast
Walsh-Hadamard transform.

Conventions
-----------
An n-qubit Pauli operator (up to phase) is indexed by a point
a = (ax, az) in F2^(2n) and realized as

    T_a = prod_i  i^(ax_i az_i) X^(ax_i) Z^(az_i),

so its matrix elements are

    <y|T_a|x> = delta_(y, x XOR ax) * i^popcount(ax & az) * (-1)^popcount(az & x).

T_a is Hermitian and T_a^2 = I.

Qubit 1 is the *most significant* bit of every 2^n basis index and of the
n-bit words ax, az.  :func:`qubit_bit` is the single helper enforcing this
convention; no other code extracts per-qubit bits directly.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, DimensionError, NumericalHealthError

#: coefficients with |c| below this threshold count as zero everywhere
COEFF_TOL = 1e-10

#: hard cap for dense 4^n coefficient vectors (cost O(8^n))
COEFF_CAP = 10


def qubit_bit(word: int, i: int, n: int) -> int:
    """Bit of 1-based qubit ``i`` inside an n-bit word (qubit 1 = MSB)."""
    if not 1 <= i <= n:
        raise DimensionError(f"qubit index {i} outside 1..{n}")
    return (word >> (n - i)) & 1


def qubit_mask(i: int, n: int) -> int:
    """Word with only the bit of 1-based qubit ``i`` set."""
    if not 1 <= i <= n:
        raise DimensionError(f"qubit index {i} outside 1..{n}")
    return 1 << (n - i)


if hasattr(np, "bitwise_count"):

    def popcount_array(arr: np.ndarray) -> np.ndarray:
        """Per-element population count of an unsigned integer array."""
        return np.bitwise_count(arr)

else:  # pragma: no cover - numpy < 2.0 fallback

    def popcount_array(arr: np.ndarray) -> np.ndarray:
        arr = np.asarray(arr, dtype=np.uint64)
        out = np.zeros(arr.shape, dtype=np.uint64)
        while arr.any():
            out += arr & 1
            arr = arr >> 1
        return out


@dataclass(frozen=True)
class PauliPoint:
    """A point a = (ax, az) in F2^(2n) indexing the Pauli T_a."""

    n: int
    ax: int
    az: int

    def __post_init__(self) -> None:
        if self.n < 1:
            raise DimensionError("need at least one qubit")
        mask = (1 << self.n) - 1
        if self.ax & ~mask or self.az & ~mask:
            raise DimensionError(
                f"words have bits beyond {self.n} qubits: ax={self.ax:#x} az={self.az:#x}"
            )

    @property
    def index(self) -> int:
        """Flat index into a 4^n coefficient vector: (ax << n) | az."""
        return (self.ax << self.n) | self.az

    @classmethod
    def from_index(cls, n: int, index: int) -> "PauliPoint":
        mask = (1 << n) - 1
        return cls(n, (index >> n) & mask, index & mask)

    @property
    def is_identity(self) -> bool:
        return self.ax == 0 and self.az == 0

    @property
    def weight(self) -> int:
        """Number of qubits on which T_a acts nontrivially."""
        return (self.ax | self.az).bit_count()

    def label(self) -> str:
        """Human-readable string such as ``XIZY`` (qubit 1 first)."""
        chars = {(0, 0): "I", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}
        return "".join(
            chars[(qubit_bit(self.ax, i, self.n), qubit_bit(self.az, i, self.n))]
            for i in range(1, self.n + 1)
        )


def symplectic_product(a: PauliPoint, b: PauliPoint) -> int:
    """Symplectic form <a, b> mod 2; zero iff T_a and T_b commute."""
    if a.n != b.n:
        raise DimensionError(f"qubit counts differ: {a.n} vs {b.n}")
    return ((a.ax & b.az).bit_count() + (a.az & b.ax).bit_count()) & 1


# ---------------------------------------------------------------------------
# Pauli action on amplitude vectors


def _amplitudes(state) -> np.ndarray:
    """Extract the amplitude array from a StateVector-like object or ndarray."""
    amps = getattr(state, "amplitudes", state)
    return np.asarray(amps)


def apply_pauli(a: PauliPoint, psi):
    """Apply T_a.  Accepts a raw amplitude array or a StateVector-like
    object with an ``amplitudes`` attribute and returns the same kind."""
    amps = _amplitudes(psi)
    dim = 1 << a.n
    if amps.shape != (dim,):
        raise DimensionError(f"state has shape {amps.shape}, expected ({dim},)")
    out = _apply_pauli_amps(a.n, a.ax, a.az, amps)
    if amps is psi or not hasattr(psi, "amplitudes"):
        return out
    return type(psi)(a.n, out)


def _apply_pauli_amps(n: int, ax: int, az: int, amps: np.ndarray) -> np.ndarray:
    idx = np.arange(1 << n, dtype=np.uint64)
    signs = 1.0 - 2.0 * (popcount_array(idx & np.uint64(az)) & np.uint64(1)).astype(float)
    phase = 1j ** ((ax & az).bit_count() & 3)
    out = np.empty(1 << n, dtype=complex)
    out[idx ^ np.uint64(ax)] = phase * signs * amps
    return out


def pauli_expectation(state, a: PauliPoint) -> float:
    """<T_a> for a pure state, trajectory mixture, or dense density matrix.

    The value is real for any valid state; the imaginary residual is
    checked against a loose tolerance.
    """
    matrix = getattr(state, "matrix", None)
    if matrix is not None:
        dim = 1 << a.n
        if matrix.shape != (dim, dim):
            raise DimensionError(f"matrix shape {matrix.shape}, expected {(dim, dim)}")
        idx = np.arange(dim, dtype=np.uint64)
        signs = 1.0 - 2.0 * (popcount_array(idx & np.uint64(a.az)) & np.uint64(1)).astype(float)
        phase = 1j ** ((a.ax & a.az).bit_count() & 3)
        # tr(rho T_a) = sum_x <x|rho|x^ax> * <x^ax|T_a|x>  with x' = x ^ ax
        val = phase * np.sum(matrix[idx, idx ^ np.uint64(a.ax)] * signs)
        return _real_checked(val)

    components = getattr(state, "components", None)
    if components is not None:
        return float(sum(w * pauli_expectation(psi, a) for w, psi in components))

    amps = _amplitudes(state)
    norm = float(np.vdot(amps, amps).real)
    if abs(norm - 1.0) > 1e-9:
        raise NumericalHealthError(f"state norm^2 = {norm}, not normalized")
    val = np.vdot(amps, _apply_pauli_amps(a.n, a.ax, a.az, amps))
    return _real_checked(val)


def _real_checked(val: complex, tol: float = 1e-9) -> float:
    if abs(val.imag) > tol:
        raise NumericalHealthError(f"expectation has imaginary part {val.imag}")
    return float(val.real)


# ---------------------------------------------------------------------------
# Dense coefficient vectors


@dataclass(frozen=True)
class CoeffVector:
    """Dense vector of Pauli coefficients c(a) = 2^-n <psi|T_a|psi>,
    indexed by ``PauliPoint.index``."""

    n: int
    values: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        vals = np.asarray(self.values, dtype=float)
        if vals.shape != (4**self.n,):
            raise DimensionError(f"expected 4^{self.n} values, got {vals.shape}")
        purity = float(np.sum(vals**2)) * 2**self.n
        if purity > 1.0 + 1e-6:
            raise NumericalHealthError(f"purity 2^n sum c^2 = {purity} exceeds 1")
        vals.flags.writeable = False
        object.__setattr__(self, "values", vals)

    def value(self, a: PauliPoint) -> float:
        return float(self.values[a.index])

    def nonzero_indices(self, tol: float = COEFF_TOL) -> np.ndarray:
        return np.nonzero(np.abs(self.values) > tol)[0]


def pauli_coefficients(psi, cap: int = COEFF_CAP) -> CoeffVector:
    """All 4^n Pauli coefficients of a pure state, via one Walsh-Hadamard
    transform per X-word (total cost O(n 8^n))."""
    amps = _amplitudes(psi)
    dim = amps.shape[0]
    n = dim.bit_length() - 1
    if dim != 1 << n:
        raise DimensionError(f"length {dim} is not a power of two")
    if n > cap:
        raise CapExceededError(
            f"n={n} exceeds coefficient cap {cap} (would cost ~{8**n:.2e} flops)"
        )
    idx = np.arange(dim, dtype=np.uint64)
    values = np.empty(4**n)
    worst_imag = 0.0
    for ax in range(dim):
        g = np.conj(amps[idx ^ np.uint64(ax)]) * amps
        h = fwht(g)  # h[az] = sum_x g(x) (-1)^(az.x)
        w = popcount_array(idx & np.uint64(ax)).astype(np.int64) & 3
        vals = (1j**w) * h
        worst_imag = max(worst_imag, float(np.max(np.abs(vals.imag))))
        values[(ax << n) : (ax << n) + dim] = vals.real / dim
    if worst_imag > 1e-8:
        raise NumericalHealthError(f"coefficients not real: residual {worst_imag}")
    return CoeffVector(n, values)


# ---------------------------------------------------------------------------
# Fast Walsh-Hadamard transform


def fwht(v: np.ndarray, direction: str = "forward") -> np.ndarray:
    """Walsh-Hadamard transform; forward computes
    ``out[b] = sum_a v[a] (-1)^(a.b)`` with no normalization, inverse
    divides by the length.  In place over a copy, O(n 2^n)."""
    if direction not in ("forward", "inverse"):
        raise ValueError(f"unknown direction {direction!r}")
    a = np.array(v, copy=True)
    size = a.shape[0]
    if size & (size - 1) or size == 0:
        raise DimensionError(f"length {size} is not a power of two")
    h = 1
    while h < size:
        a = a.reshape(-1, 2, h)
        top = a[:, 0, :].copy()
        a[:, 0, :] = top + a[:, 1, :]
        a[:, 1, :] = top - a[:, 1, :]
        a = a.reshape(size)
        h *= 2
    if direction == "inverse":
        a = a / size
    return a


# ---------------------------------------------------------------------------
# Packed F2 matrices


@dataclass(frozen=True)
class F2Matrix:
    """Binary matrix stored one packed word per row (bit j of ``bits[i]``
    is entry (i, j); arbitrary-width rows ride on Python integers)."""

    rows: int
    cols: int
    bits: tuple[int, ...]
    hollow_symmetric: bool = False

    def __post_init__(self) -> None:
        if len(self.bits) != self.rows:
            raise DimensionError(f"{len(self.bits)} rows packed, declared {self.rows}")
        mask = (1 << self.cols) - 1
        if any(row & ~mask for row in self.bits):
            raise DimensionError("row has bits beyond declared column count")
        if self.hollow_symmetric:
            if self.rows != self.cols:
                raise DimensionError("hollow-symmetric matrix must be square")
            for i in range(self.rows):
                if (self.bits[i] >> i) & 1:
                    raise NumericalHealthError("hollow-symmetric matrix has diagonal bit")
                for j in range(i):
                    if ((self.bits[i] >> j) & 1) != ((self.bits[j] >> i) & 1):
                        raise NumericalHealthError("hollow-symmetric flag on asymmetric matrix")

    @classmethod
    def from_dense(cls, array, hollow_symmetric: bool = False) -> "F2Matrix":
        arr = np.asarray(array, dtype=np.int64) & 1
        rows = tuple(int(sum(int(bit) << j for j, bit in enumerate(row))) for row in arr)
        return cls(arr.shape[0], arr.shape[1], rows, hollow_symmetric)

    def to_dense(self) -> np.ndarray:
        out = np.zeros((self.rows, self.cols), dtype=np.int64)
        for i, row in enumerate(self.bits):
            for j in range(self.cols):
                out[i, j] = (row >> j) & 1
        return out


def f2_rank(m: F2Matrix) -> int:
    """Binary rank by word-parallel Gaussian elimination."""
    rows = [row for row in m.bits if row]
    rank = 0
    while rows:
        pivot = rows.pop()
        low = pivot & -pivot
        rank += 1
        rows = [row ^ pivot if row & low else row for row in rows]
        rows = [row for row in rows if row]
    return rank


# ---------------------------------------------------------------------------
# Measurement frames


FRAME_OF_BITS = {(0, 0): "Z", (1, 0): "X", (0, 1): "Z", (1, 1): "Y"}


def diagonalizing_frame(a: PauliPoint) -> tuple[tuple[str, ...], int]:
    """Per-qubit measurement bases V with T_a = V Z^(a') V-dagger.

    Returns the frame labels in {Z, X, Y} (qubit 1 first) and the word a'
    with bit 1 exactly where (ax, az) != (0, 0).  Rotating the state into
    the frame, measuring in the computational basis and taking the parity
    a'.b reproduces the two-outcome POVM {(I + T_a)/2, (I - T_a)/2}.
    """
    labels = []
    aprime = 0
    for i in range(1, a.n + 1):
        bx = qubit_bit(a.ax, i, a.n)
        bz = qubit_bit(a.az, i, a.n)
        labels.append(FRAME_OF_BITS[(bx, bz)])
        if bx or bz:
            aprime |= qubit_mask(i, a.n)
    return tuple(labels), aprime
