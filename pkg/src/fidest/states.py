"""State construction and manipulation: phase/hypergraph/Dicke/Haar/MPS
states, phase stripping, depolarizing noise, exact fidelity, and
measurement simulation.

All state types are immutable after construction.  Measurements take an
explicit ``numpy.random.Generator`` so concurrent shots can use
independent seeded streams.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field
from itertools import combinations
from typing import Callable, Sequence, Union

import numpy as np

from . import f2
from .errors import CapExceededError, DimensionError, NumericalHealthError
from .f2 import PauliPoint, popcount_array, qubit_mask

_SQRT2 = np.sqrt(2.0)

#: single-qubit rotations taking the requested eigenbasis to the
#: computational basis (applied to the state before a Z measurement).
#: Y convention: eigenvalue +1 of Y maps to bit 0, i.e. V Z V^dag = Y with
#: V = [[1, 1], [i, -i]]/sqrt(2); we apply V^dag.
_FRAME_GATES = {
    "Z": np.eye(2, dtype=complex),
    "X": np.array([[1, 1], [1, -1]], dtype=complex) / _SQRT2,
    "Y": np.array([[1, -1j], [1, 1j]], dtype=complex) / _SQRT2,
}


@dataclass(frozen=True)
class StateVector:
    """Pure state of n qubits; 2^n complex amplitudes, unit norm."""

    n: int
    amplitudes: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        amps = np.asarray(self.amplitudes, dtype=complex)
        if amps.shape != (1 << self.n,):
            raise DimensionError(f"expected 2^{self.n} amplitudes, got {amps.shape}")
        norm = float(np.vdot(amps, amps).real)
        if abs(norm - 1.0) > 1e-9:
            raise NumericalHealthError(f"norm^2 = {norm}, state not normalized")
        amps = amps.copy()
        amps.flags.writeable = False
        object.__setattr__(self, "amplitudes", amps)

    @classmethod
    def normalized(cls, amps) -> "StateVector":
        amps = np.asarray(amps, dtype=complex)
        n = amps.shape[0].bit_length() - 1
        if amps.shape[0] != 1 << n:
            raise DimensionError(f"length {amps.shape[0]} is not a power of two")
        norm = np.linalg.norm(amps)
        if norm == 0:
            raise NumericalHealthError("cannot normalize the zero vector")
        return cls(n, amps / norm)

    def projector(self) -> np.ndarray:
        return np.outer(self.amplitudes, np.conj(self.amplitudes))


class PhaseFunction:
    """A phase function phi: F2^n -> [0, 2pi), as a dense table, a Boolean
    multilinear polynomial (monomials carry phase pi each), or a callback."""

    def __init__(self, n: int, *, table=None, monomials=None, func=None):
        given = sum(x is not None for x in (table, monomials, func))
        if given != 1:
            raise ValueError("exactly one of table/monomials/func required")
        self.n = n
        self._table = None
        self.monomials = None
        self._func = None
        if table is not None:
            table = np.mod(np.asarray(table, dtype=float), 2 * np.pi)
            if table.shape != (1 << n,):
                raise DimensionError(f"expected 2^{n} angles, got {table.shape}")
            table.flags.writeable = False
            self._table = table
        elif monomials is not None:
            canon = []
            for mono in monomials:
                idxs = tuple(sorted(set(int(i) for i in mono)))
                if len(idxs) != len(tuple(mono)):
                    raise ValueError(f"monomial {mono} repeats an index")
                if not idxs:
                    raise ValueError("empty monomial")
                if idxs[0] < 1 or idxs[-1] > n:
                    raise DimensionError(f"monomial {mono} outside qubits 1..{n}")
                canon.append(idxs)
            self.monomials = tuple(sorted(canon))
        else:
            self._func = func

    @classmethod
    def from_table(cls, n: int, table) -> "PhaseFunction":
        return cls(n, table=table)

    @classmethod
    def from_polynomial(cls, n: int, monomials) -> "PhaseFunction":
        return cls(n, monomials=monomials)

    @classmethod
    def from_callable(cls, n: int, func: Callable[[int], float]) -> "PhaseFunction":
        return cls(n, func=func)

    def evaluate(self, x: int) -> float:
        if self._table is not None:
            return float(self._table[x])
        if self.monomials is not None:
            parity = 0
            for mono in self.monomials:
                if all((x >> (self.n - i)) & 1 for i in mono):
                    parity ^= 1
            return np.pi * parity
        return float(np.mod(self._func(x), 2 * np.pi))

    def table(self) -> np.ndarray:
        """Dense table of all 2^n angles (computed once and cached)."""
        if self._table is None:
            if self.monomials is not None:
                x = np.arange(1 << self.n, dtype=np.uint64)
                parity = np.zeros(1 << self.n, dtype=np.uint64)
                for mono in self.monomials:
                    mask = np.uint64(sum(qubit_mask(i, self.n) for i in mono))
                    parity ^= ((x & mask) == mask).astype(np.uint64)
                table = np.pi * parity.astype(float)
            else:
                table = np.array([self.evaluate(x) for x in range(1 << self.n)])
            table = np.mod(table, 2 * np.pi)
            table.flags.writeable = False
            self._table = table
        return self._table

    def is_real(self, tol: float = 1e-12) -> bool:
        """True when every phase lies in {0, pi}, i.e. e^(i phi) is real."""
        if self.monomials is not None:
            return True
        table = self.table()
        return bool(np.all(np.minimum(np.abs(table), np.abs(table - np.pi)) <= tol)
                    or np.all(np.minimum.reduce([np.abs(table), np.abs(table - np.pi),
                                                 np.abs(table - 2 * np.pi)]) <= tol))


@dataclass(frozen=True)
class DenseState:
    """Mixed state as a dense 2^n x 2^n density matrix."""

    n: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self) -> None:
        mat = np.asarray(self.matrix, dtype=complex)
        dim = 1 << self.n
        if mat.shape != (dim, dim):
            raise DimensionError(f"expected {(dim, dim)} matrix, got {mat.shape}")
        if abs(np.trace(mat).real - 1.0) > 1e-9 or abs(np.trace(mat).imag) > 1e-9:
            raise NumericalHealthError(f"trace = {np.trace(mat)}, expected 1")
        if np.max(np.abs(mat - mat.conj().T)) > 1e-12:
            raise NumericalHealthError("matrix is not Hermitian within 1e-12")
        mat = mat.copy()
        mat.flags.writeable = False
        object.__setattr__(self, "matrix", mat)


@dataclass(frozen=True)
class TrajectoryMixture:
    """Mixed state as a weighted list of pure components."""

    n: int
    components: tuple[tuple[float, StateVector], ...]

    def __post_init__(self) -> None:
        comps = tuple((float(w), psi) for w, psi in self.components)
        if not comps:
            raise DimensionError("mixture needs at least one component")
        if any(w < -1e-12 for w, _ in comps):
            raise NumericalHealthError("negative mixture weight")
        if any(psi.n != self.n for _, psi in comps):
            raise DimensionError("component qubit count mismatch")
        total = sum(w for w, _ in comps)
        if abs(total - 1.0) > 1e-9:
            raise NumericalHealthError(f"weights sum to {total}, expected 1")
        object.__setattr__(self, "components", comps)

    def to_dense(self) -> DenseState:
        mat = sum(w * psi.projector() for w, psi in self.components)
        return DenseState(self.n, mat)


DensityState = Union[DenseState, TrajectoryMixture]


def as_density(state) -> DensityState:
    """Wrap a pure state as a single-component trajectory mixture."""
    if isinstance(state, (DenseState, TrajectoryMixture)):
        return state
    return TrajectoryMixture(state.n, ((1.0, state),))


def sample_component(rho, rng: np.random.Generator) -> StateVector:
    """Draw one pure trajectory component of a mixed state."""
    if isinstance(rho, StateVector):
        return rho
    if isinstance(rho, TrajectoryMixture):
        weights = np.array([w for w, _ in rho.components])
        k = rng.choice(len(weights), p=weights / weights.sum())
        return rho.components[k][1]
    if isinstance(rho, DenseState):
        vals, vecs = np.linalg.eigh(rho.matrix)
        vals = np.clip(vals.real, 0.0, None)
        k = rng.choice(len(vals), p=vals / vals.sum())
        return StateVector.normalized(vecs[:, k])
    raise TypeError(f"not a state: {type(rho)!r}")


# ---------------------------------------------------------------------------
# Constructors


def phase_state(phi: PhaseFunction) -> StateVector:
    """D(phi)|+>^n, i.e. amplitudes 2^(-n/2) e^(i phi(x))."""
    n = phi.n
    amps = np.exp(1j * phi.table()) / np.sqrt(1 << n)
    return StateVector(n, amps)


def apply_phase(phi: PhaseFunction, psi: StateVector) -> StateVector:
    """Apply the diagonal gate D(phi)."""
    if phi.n != psi.n:
        raise DimensionError("phase function and state differ in qubit count")
    return StateVector(psi.n, np.exp(1j * phi.table()) * psi.amplitudes)


def hypergraph_state(n: int, hyperedges: Sequence[Sequence[int]]):
    """prod_A C_A Z |+>^n and its {0, pi} Boolean-polynomial phase.

    Each hyperedge is a subset of qubits 1..n (size >= 1); size-1 edges are
    Z gates, size-2 edges CZ gates, size-3 edges CCZ gates, and so on.
    """
    phi = PhaseFunction.from_polynomial(n, [tuple(edge) for edge in hyperedges])
    return phase_state(phi), phi


def complete_3_hypergraph_edges(n: int) -> list[tuple[int, int, int]]:
    """All (n choose 3) triples: edges of the complete 3-hypergraph K_n."""
    return list(combinations(range(1, n + 1), 3))


def dicke_state(n: int, k: int) -> StateVector:
    """Uniform superposition over weight-k computational strings."""
    if not 0 <= k <= n:
        raise DimensionError(f"k={k} outside 0..{n}")
    idx = np.arange(1 << n, dtype=np.uint64)
    amps = (popcount_array(idx) == k).astype(complex)
    return StateVector.normalized(amps)


def haar_random(n: int, rng: np.random.Generator) -> StateVector:
    """Haar-random pure state via normalized i.i.d. complex Gaussians."""
    z = rng.standard_normal(1 << n) + 1j * rng.standard_normal(1 << n)
    return StateVector.normalized(z)


def phase_strip(psi: StateVector):
    """Split psi into its modulus state and phase function, psi = D(phi)|psi_strip>.

    Zero amplitudes get phase 0 by convention.
    """
    amps = psi.amplitudes
    moduli = np.abs(amps)
    angles = np.where(moduli > 0, np.angle(amps), 0.0)
    phi = PhaseFunction.from_table(psi.n, np.mod(angles, 2 * np.pi))
    return StateVector(psi.n, moduli.astype(complex)), phi


def depolarize(psi: StateVector, p: float) -> TrajectoryMixture:
    """(1-p)|psi><psi| + p I/2^n as a trajectory mixture: the pure state with
    weight 1-p plus every computational basis state with weight p/2^n."""
    if not 0.0 <= p <= 1.0:
        raise ValueError(f"p={p} outside [0, 1]")
    n = psi.n
    comps: list[tuple[float, StateVector]] = []
    if p < 1.0:
        comps.append((1.0 - p, psi))
    if p > 0.0:
        for x in range(1 << n):
            e = np.zeros(1 << n, dtype=complex)
            e[x] = 1.0
            comps.append((p / (1 << n), StateVector(n, e)))
    return TrajectoryMixture(n, tuple(comps))


def depolarizing_p_for_fidelity(n: int, fidelity: float) -> float:
    """Depolarizing strength giving the requested fidelity with a pure target:
    solve (1-p) + p/2^n = fidelity."""
    return (1.0 - fidelity) / (1.0 - 2.0**-n)


def exact_fidelity(rho, psi: StateVector) -> float:
    """<psi|rho|psi>, the ground truth all estimators target."""
    if isinstance(rho, StateVector):
        if rho.n != psi.n:
            raise DimensionError("qubit count mismatch")
        return float(abs(np.vdot(psi.amplitudes, rho.amplitudes)) ** 2)
    if isinstance(rho, TrajectoryMixture):
        if rho.n != psi.n:
            raise DimensionError("qubit count mismatch")
        return float(sum(w * exact_fidelity(comp, psi) for w, comp in rho.components))
    if isinstance(rho, DenseState):
        if rho.n != psi.n:
            raise DimensionError("qubit count mismatch")
        val = np.vdot(psi.amplitudes, rho.matrix @ psi.amplitudes)
        return float(val.real)
    raise TypeError(f"not a state: {type(rho)!r}")


# ---------------------------------------------------------------------------
# Real matrix-product states


@dataclass(frozen=True)
class RealMPS:
    """Real MPS: per-site chi x chi tensors gammas[i, x] with boundary
    row vector ``left`` and column vector ``right``; amplitude(x) =
    left . gamma[1](x_1) ... gamma[n](x_n) . right."""

    n: int
    chi: int
    gammas: np.ndarray = field(repr=False)  # (n, 2, chi, chi)
    left: np.ndarray = field(repr=False)  # (chi,)
    right: np.ndarray = field(repr=False)  # (chi,)

    def __post_init__(self) -> None:
        gam = np.asarray(self.gammas, dtype=float)
        left = np.asarray(self.left, dtype=float)
        right = np.asarray(self.right, dtype=float)
        if gam.shape != (self.n, 2, self.chi, self.chi):
            raise DimensionError(f"gammas shape {gam.shape}")
        if left.shape != (self.chi,) or right.shape != (self.chi,):
            raise DimensionError("boundary vector shape mismatch")
        for arr in (gam, left, right):
            arr.flags.writeable = False
        object.__setattr__(self, "gammas", gam)
        object.__setattr__(self, "left", left)
        object.__setattr__(self, "right", right)

    def amplitude(self, x: int) -> float:
        vec = self.left
        for i in range(self.n):
            vec = vec @ self.gammas[i, (x >> (self.n - 1 - i)) & 1]
        return float(vec @ self.right)

    def norm_squared(self) -> float:
        env = np.outer(self.left, self.left).reshape(-1)
        for i in range(self.n):
            h = sum(np.kron(self.gammas[i, x], self.gammas[i, x]) for x in range(2))
            env = env @ h
        return float(env @ np.outer(self.right, self.right).reshape(-1))


def random_real_mps(n: int, chi: int, rng: np.random.Generator) -> RealMPS:
    """Random real Gaussian MPS, rescaled to unit norm."""
    gammas = rng.standard_normal((n, 2, chi, chi))
    left = rng.standard_normal(chi)
    right = rng.standard_normal(chi)
    mps = RealMPS(n, chi, gammas, left, right)
    norm2 = mps.norm_squared()
    if norm2 <= 0:
        raise NumericalHealthError("degenerate random MPS (zero norm)")
    return RealMPS(n, chi, gammas * norm2 ** (-0.5 / n), left, right)


def mps_to_statevector(m: RealMPS, n_cap: int = 12, chi_cap: int = 8) -> StateVector:
    """Contract an MPS to a dense (real) state vector, left to right."""
    if m.n > n_cap or m.chi > chi_cap:
        raise CapExceededError(f"conversion capped at n<={n_cap}, chi<={chi_cap}")
    acc = m.left.reshape(1, m.chi)  # (#prefixes, chi)
    for i in range(m.n):
        acc = np.einsum("pa,xab->pxb", acc, m.gammas[i]).reshape(-1, m.chi)
    amps = acc @ m.right
    return StateVector.normalized(amps.astype(complex))


# ---------------------------------------------------------------------------
# Measurement


def _normalize_frame(frame, n: int) -> tuple[str, ...]:
    labels = tuple(frame)
    if len(labels) != n:
        raise DimensionError(f"frame has {len(labels)} labels, expected {n}")
    if any(lab not in _FRAME_GATES for lab in labels):
        raise ValueError(f"frame labels must be Z/X/Y, got {labels}")
    return labels


def apply_single_qubit(amps: np.ndarray, n: int, i: int, gate: np.ndarray) -> np.ndarray:
    """Apply a 2x2 gate to 1-based qubit i of an amplitude array."""
    shaped = amps.reshape((1 << (i - 1), 2, 1 << (n - i)))
    return np.einsum("st,atb->asb", gate, shaped).reshape(amps.shape)


def rotate_to_frame(amps: np.ndarray, frame) -> np.ndarray:
    """Rotate amplitudes so a computational measurement realizes the
    requested per-qubit eigenbasis measurement."""
    n = amps.shape[0].bit_length() - 1
    labels = _normalize_frame(frame, n)
    out = amps
    for i, lab in enumerate(labels, start=1):
        if lab != "Z":
            out = apply_single_qubit(out, n, i, _FRAME_GATES[lab])
    return out


def frame_unitary(frame) -> np.ndarray:
    """Dense rotation matrix applied by :func:`rotate_to_frame`."""
    mats = [_FRAME_GATES[lab] for lab in frame]
    out = np.eye(1, dtype=complex)
    for m in mats:
        out = np.kron(out, m)
    return out


def born_probabilities(state, frame) -> np.ndarray:
    """Exact computational-basis outcome distribution after frame rotation."""
    if isinstance(state, DenseState):
        u = frame_unitary(_normalize_frame(frame, state.n))
        probs = np.real(np.einsum("ij,jk,ik->i", u, state.matrix, np.conj(u)))
    elif isinstance(state, TrajectoryMixture):
        probs = sum(
            w * born_probabilities(psi, frame) for w, psi in state.components
        )
    else:
        amps = rotate_to_frame(f2._amplitudes(state), frame)
        probs = np.abs(amps) ** 2
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def measure_computational(state, frame, rng: np.random.Generator) -> int:
    """One Born-rule outcome (an n-bit integer, qubit 1 = MSB) of measuring
    the state in the given per-qubit frame."""
    if isinstance(state, TrajectoryMixture):
        state = sample_component(state, rng)
    probs = born_probabilities(state, frame)
    return int(rng.choice(probs.shape[0], p=probs))


# ---------------------------------------------------------------------------
# Serialization


def state_to_dict(psi: StateVector) -> dict:
    return {
        "n": psi.n,
        "re": psi.amplitudes.real.tolist(),
        "im": psi.amplitudes.imag.tolist(),
    }


def state_from_dict(data: dict) -> StateVector:
    amps = np.array(data["re"], dtype=float) + 1j * np.array(data["im"], dtype=float)
    return StateVector(int(data["n"]), amps)


def save_state(psi: StateVector, path) -> None:
    with open(path, "w") as fh:
        json.dump(state_to_dict(psi), fh)


def load_state(path) -> StateVector:
    with open(path) as fh:
        return state_from_dict(json.load(fh))
