"""Fidelity estimators: alpha-DFE (Pauli-sampling direct fidelity
estimation), fan-out-based FE on phase-stripped targets (Hadamard-test
circuit with classical phase post-processing), and nonlinear DFE over
qubit-wise-commuting measurement groups, plus aggregation helpers.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field

import numpy as np

from .errors import CapExceededError, ConfigError, DimensionError
from .f2 import (COEFF_TOL, CoeffVector, PauliPoint, _apply_pauli_amps,
                 diagonalizing_frame, fwht, pauli_coefficients,
                 pauli_expectation, qubit_mask)
from .samplers import ExactSampler, UniformXSampler
from .states import (DenseState, PhaseFunction, StateVector,
                     TrajectoryMixture, born_probabilities, exact_fidelity,
                     phase_strip, rotate_to_frame, sample_component)

QWC_QUBIT_CAP = 9


@dataclass(frozen=True)
class ShotRecord:
    value: float
    point: object  # PauliPoint for DFE/FOFE, group index for NLDFE
    branch: str  # "povm" | "real" | "real+imag" | "group"
    outcome: tuple


@dataclass(frozen=True)
class EstimateReport:
    scheme: str
    shots: int
    mean: float
    variance: float
    stderr: float
    mom_estimate: float
    mom_batches: int
    exact_fidelity: float | None
    analytic_bound: float | None
    values: np.ndarray = field(repr=False, default=None)


def _make_report(scheme, values, mom_batches, exact, bound) -> EstimateReport:
    values = np.asarray(values, dtype=float)
    if values.size == 0:
        raise ConfigError("at least one shot required")
    mean = float(values.mean())
    var = float(values.var(ddof=1)) if values.size > 1 else 0.0
    stderr = math.sqrt(var / values.size) if values.size > 1 else 0.0
    mom = median_of_means(values, values.size // max(mom_batches, 1), mom_batches)
    return EstimateReport(scheme=scheme, shots=values.size, mean=mean,
                          variance=var, stderr=stderr, mom_estimate=mom,
                          mom_batches=mom_batches, exact_fidelity=exact,
                          analytic_bound=bound, values=values)


# ---------------------------------------------------------------------------
# alpha-DFE


def _dfe_weight(sampler, a: PauliPoint) -> float:
    c = sampler.coefficient(a)
    if abs(c) <= COEFF_TOL / 10:
        raise AssertionError(f"sampled zero-coefficient point {a}")
    return sampler.norm_sum * abs(c) ** (1.0 - 2.0 * sampler.alpha) * math.copysign(1.0, c)


def dfe_shot(rho, sampler, rng: np.random.Generator,
             povm: str = "trajectory") -> ShotRecord:
    """One alpha-DFE shot: draw a from the l_2a law, measure the
    two-outcome POVM of T_a on rho, return the importance-weighted sign.

    povm="trajectory": Bernoulli((1 + <T_a>)/2) on a sampled pure
    component.  povm="frame": rotate the component into the
    diagonalizing frame of T_a and take the parity a'.b of the
    computational outcome.  Both realize identical statistics.
    """
    a = sampler.draw(rng)
    w = _dfe_weight(sampler, a)
    comp = sample_component(rho, rng)
    if povm == "trajectory":
        t = pauli_expectation(comp, a)
        p = int(rng.random() >= (1.0 + t) / 2.0)
        outcome = (p,)
    elif povm == "frame":
        labels, aprime = diagonalizing_frame(a)
        probs = born_probabilities(
            StateVector(comp.n, rotate_to_frame(comp.amplitudes, labels)),
            ("Z",) * comp.n)
        b = int(rng.choice(probs.shape[0], p=probs))
        p = bin(aprime & b).count("1") & 1
        outcome = (p, b)
    else:
        raise ConfigError(f"unknown POVM path {povm!r}")
    return ShotRecord(value=(-1.0) ** p * w, point=a, branch="povm",
                      outcome=outcome)


def dfe_expected_value(rho, sampler) -> float:
    """Analytic shot expectation sum_a P(a) w(a) <T_a>_rho (test oracle)."""
    dist = sampler.distribution()
    n = sampler.n
    total = 0.0
    for idx in np.nonzero(dist > 0)[0]:
        a = PauliPoint.from_index(n, int(idx))
        total += dist[idx] * _dfe_weight(sampler, a) * pauli_expectation(rho, a)
    return total


# ---------------------------------------------------------------------------
# FOFE


def phase_difference_table(phase: PhaseFunction, ax: int) -> np.ndarray:
    """phi^(a)(x) = phi(x ^ a_x) - phi(x) mod 2pi, as a dense table."""
    t = phase.table()
    idx = np.arange(t.shape[0]) ^ ax
    return np.mod(t[idx] - t, 2.0 * np.pi)


def fofe_branch_amplitudes(psi: StateVector, a: PauliPoint,
                           branch: str) -> np.ndarray:
    """(n+1)-qubit pre-measurement amplitudes of the Hadamard-test
    circuit: ancilla |+> (most significant qubit), T_a applied on the
    ancilla-0 block, H on the ancilla; the imaginary branch further
    rotates the ancilla so a computational measurement realizes the Y
    eigenbasis (+1 eigenvector <-> bit 0)."""
    amps = psi.amplitudes
    b0 = _apply_pauli_amps(psi.n, a.ax, a.az, amps) / math.sqrt(2.0)
    b1 = amps / math.sqrt(2.0)
    h0 = (b0 + b1) / math.sqrt(2.0)
    h1 = (b0 - b1) / math.sqrt(2.0)
    if branch == "real":
        return np.concatenate([h0, h1])
    if branch == "imag":
        y0 = (h0 - 1j * h1) / math.sqrt(2.0)
        y1 = (h0 + 1j * h1) / math.sqrt(2.0)
        return np.concatenate([y0, y1])
    raise ConfigError(f"unknown branch {branch!r}")


def fofe_outcome_distribution(state, a: PauliPoint, branch: str) -> np.ndarray:
    """Exact outcome distribution over (b1, b') of one FOFE branch."""
    if isinstance(state, TrajectoryMixture):
        return sum(w * fofe_outcome_distribution(psi, a, branch)
                   for w, psi in state.components)
    if isinstance(state, DenseState):
        n = state.n
        dim = 1 << n
        ta = np.zeros((dim, dim), dtype=complex)
        for x in range(dim):
            e = np.zeros(dim, dtype=complex)
            e[x] = 1.0
            ta[:, x] = _apply_pauli_amps(n, a.ax, a.az, e)
        eye = np.eye(dim)
        u = np.block([[ta, eye], [ta, -eye]]) / math.sqrt(2.0)
        if branch == "imag":
            v = np.block([[eye, -1j * eye], [eye, 1j * eye]]) / math.sqrt(2.0)
            u = v @ u
        full = np.zeros((2 * dim, 2 * dim), dtype=complex)
        full[:dim, :dim] = full[dim:, dim:] = state.matrix / 2.0
        full[:dim, dim:] = full[dim:, :dim] = state.matrix / 2.0
        probs = np.real(np.einsum("ij,jk,ik->i", u, full, np.conj(u)))
        return np.clip(probs, 0.0, None)
    amps = fofe_branch_amplitudes(state, a, branch)
    return np.abs(amps) ** 2


def _fofe_branch_value(w: float, diff: np.ndarray, branch: str,
                       outcome: int, n: int) -> float:
    b1, brest = outcome >> n, outcome & ((1 << n) - 1)
    if branch == "real":
        return w * (-1.0) ** b1 * math.cos(diff[brest])
    return w * (-1.0) ** b1 * math.sin(diff[brest])


def fofe_shot(rho, sampler, phase: PhaseFunction,
              rng: np.random.Generator) -> ShotRecord:
    """One FOFE shot.  Draws a from the phase-stripped l_2a law, runs the
    real-branch Hadamard test, and — unless every phase lies in {0, pi}
    — an imaginary-branch test on an independent copy; the shot is the
    sum of the branch values."""
    n = sampler.n
    a = sampler.draw(rng)
    w = _dfe_weight(sampler, a)
    diff = phase_difference_table(phase, a.ax)
    comp = sample_component(rho, rng)
    probs = fofe_outcome_distribution(comp, a, "real")
    o_real = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
    value = _fofe_branch_value(w, diff, "real", o_real, n)
    if phase.is_real():
        return ShotRecord(value=value, point=a, branch="real",
                          outcome=(o_real,))
    comp2 = sample_component(rho, rng)
    probs = fofe_outcome_distribution(comp2, a, "imag")
    o_imag = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
    value += _fofe_branch_value(w, diff, "imag", o_imag, n)
    return ShotRecord(value=value, point=a, branch="real+imag",
                      outcome=(o_real, o_imag))


def fofe_expected_value(rho, sampler, phase: PhaseFunction) -> float:
    """Analytic FOFE shot expectation over exact outcome distributions
    (test oracle; enumerates the sampler's support)."""
    dist = sampler.distribution()
    n = sampler.n
    real_only = phase.is_real()
    total = 0.0
    outcomes = np.arange(1 << (n + 1))
    b1 = outcomes >> n
    brest = outcomes & ((1 << n) - 1)
    for idx in np.nonzero(dist > 0)[0]:
        a = PauliPoint.from_index(n, int(idx))
        w = _dfe_weight(sampler, a)
        diff = phase_difference_table(phase, a.ax)
        p = fofe_outcome_distribution(rho, a, "real")
        total += dist[idx] * float(
            np.sum(p * w * (-1.0) ** b1 * np.cos(diff[brest])))
        if not real_only:
            p = fofe_outcome_distribution(rho, a, "imag")
            total += dist[idx] * float(
                np.sum(p * w * (-1.0) ** b1 * np.sin(diff[brest])))
    return total


@dataclass(frozen=True)
class MultiTargetResult:
    reports: tuple
    shots: int
    executions: int  # circuit runs consumed (shared across all targets)


def fofe_multi_target(rho, sampler, phases, shots: int,
                      rng: np.random.Generator,
                      stripped: StateVector = None) -> MultiTargetResult:
    """Estimate M fidelities of targets D(phi_m)|stripped> from one shared
    outcome stream: each circuit execution is post-processed once per
    phase function, so executions scale with shots, not M * shots."""
    phases = list(phases)
    n = sampler.n
    for phi in phases:
        if phi.n != n:
            raise DimensionError("phase function size mismatch")
    need_imag = any(not phi.is_real() for phi in phases)
    values = np.zeros((len(phases), shots))
    executions = 0
    for j in range(shots):
        a = sampler.draw(rng)
        w = _dfe_weight(sampler, a)
        comp = sample_component(rho, rng)
        probs = fofe_outcome_distribution(comp, a, "real")
        o_real = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
        executions += 1
        o_imag = None
        if need_imag:
            comp2 = sample_component(rho, rng)
            probs = fofe_outcome_distribution(comp2, a, "imag")
            o_imag = int(rng.choice(probs.shape[0], p=probs / probs.sum()))
            executions += 1
        for m, phi in enumerate(phases):
            diff = phase_difference_table(phi, a.ax)
            v = _fofe_branch_value(w, diff, "real", o_real, n)
            if not phi.is_real():
                v += _fofe_branch_value(w, diff, "imag", o_imag, n)
            values[m, j] = v
    reports = []
    for m, phi in enumerate(phases):
        exact = None
        if stripped is not None:
            target = StateVector(n, np.exp(1j * phi.table()) * stripped.amplitudes)
            exact = exact_fidelity(rho, target)
        reports.append(_make_report("fofe", values[m], 1, exact, None))
    return MultiTargetResult(reports=tuple(reports), shots=shots,
                             executions=executions)


# ---------------------------------------------------------------------------
# NLDFE


@dataclass(frozen=True)
class QWCGroup:
    frame: tuple  # per-qubit basis labels
    coeffs: np.ndarray = field(repr=False)  # c^(S) over F2^n
    chat: np.ndarray = field(repr=False)  # WHT of coeffs
    weight: float  # ||chat||_inf
    claimed: tuple  # Pauli indices claimed by this group


@dataclass(frozen=True)
class QWCPartition:
    n: int
    groups: tuple
    total_weight: float
    ordering: str


def _frame_masks(labels, n: int):
    mx = mz = 0
    for i, lab in enumerate(labels, start=1):
        if lab in ("X", "Y"):
            mx |= qubit_mask(i, n)
        if lab in ("Z", "Y"):
            mz |= qubit_mask(i, n)
    return mx, mz


def frame_pauli_indices(labels, n: int) -> np.ndarray:
    """Pauli indices of {V Z^s V^dag : s in F2^n} for the frame V."""
    mx, mz = _frame_masks(labels, n)
    s = np.arange(1 << n, dtype=np.int64)
    return ((s & mx) << n) | (s & mz)


def build_qwc_partition(coeffs: CoeffVector, ordering: str = "canonical",
                        tol: float = 1e-12) -> QWCPartition:
    """Divide-and-conquer partition of the Pauli coefficients into
    qubit-wise-commuting groups, one per single-qubit frame choice in
    {Z, X, Y}^n, claiming each nonzero coefficient exactly once."""
    n = coeffs.n
    if n > QWC_QUBIT_CAP:
        raise CapExceededError(
            f"QWC partition needs 3^n 2^n work; capped at n <= {QWC_QUBIT_CAP}")
    frames = list(itertools.product("ZXY", repeat=n))
    if ordering == "greedy-weight":
        full = (1 << n) - 1

        def key(labels):
            mx, mz = _frame_masks(labels, n)
            return -abs(coeffs.values[((full & mx) << n) | (full & mz)])
        frames.sort(key=key)
    elif ordering != "canonical":
        raise ConfigError(f"unknown ordering {ordering!r}")
    values = coeffs.values
    claimed = np.zeros(values.shape[0], dtype=bool)
    groups = []
    for labels in frames:
        idx = frame_pauli_indices(labels, n)
        take = (~claimed[idx]) & (np.abs(values[idx]) > tol)
        if not take.any():
            continue
        c_s = np.where(take, values[idx], 0.0)
        claimed[idx[take]] = True
        chat = fwht(c_s)
        weight = float(np.abs(chat).max())
        groups.append(QWCGroup(frame=tuple(labels), coeffs=c_s, chat=chat,
                               weight=weight,
                               claimed=tuple(int(i) for i in idx[take])))
    total = float(sum(g.weight for g in groups))
    return QWCPartition(n=n, groups=tuple(groups), total_weight=total,
                        ordering=ordering)


def nldfe_shot(rho, part: QWCPartition, rng: np.random.Generator) -> ShotRecord:
    """One NLDFE shot: draw a group proportionally to its weight, measure
    rho in the group frame, return W * chat_b / ||chat||_inf."""
    if not part.groups:
        raise ConfigError("empty partition")
    weights = np.array([g.weight for g in part.groups])
    k = int(rng.choice(weights.size, p=weights / weights.sum()))
    g = part.groups[k]
    comp = sample_component(rho, rng)
    probs = born_probabilities(comp, g.frame)
    b = int(rng.choice(probs.shape[0], p=probs))
    value = part.total_weight * float(g.chat[b]) / g.weight
    return ShotRecord(value=value, point=k, branch="group", outcome=(b,))


def nldfe_expected_value(rho, part: QWCPartition) -> float:
    """Analytic NLDFE shot expectation sum_S sum_b P_S(b) chat^(S)_b."""
    total = 0.0
    for g in part.groups:
        probs = born_probabilities(rho, g.frame)
        total += float(np.dot(probs, g.chat))
    return total


# ---------------------------------------------------------------------------
# Aggregation and orchestration


def median_of_means(values, batch_size: int, batches: int) -> float:
    """Median of `batches` batch means; batches = 1 is the plain mean."""
    values = np.asarray(values, dtype=float)
    if batches < 1 or batch_size < 1 or batch_size * batches > values.size:
        raise ConfigError(
            f"need batch_size*batches <= {values.size}, got {batch_size}x{batches}")
    if batches == 1:
        return float(values.mean())
    used = values[:batch_size * batches].reshape(batches, batch_size)
    return float(np.median(used.mean(axis=1)))


def _is_flat_modulus(psi: StateVector) -> bool:
    target = 2.0 ** (-psi.n / 2.0)
    return bool(np.max(np.abs(np.abs(psi.amplitudes) - target)) < 1e-12)


def run_estimator(scheme: str, target: StateVector, rho, *, alpha: float = 0.5,
                  shots: int, seed: int = 0, workers: int = 1,
                  mom_batches: int = 1, povm: str = "trajectory",
                  coeff_cap: int = 10, ordering: str = "canonical",
                  phase: PhaseFunction = None) -> EstimateReport:
    """Run `shots` single-shot estimates of <target|rho|target> with the
    requested scheme.  Deterministic under fixed (seed, workers): shots
    are partitioned into worker ranges with independently seeded RNG
    streams and merged in range order."""
    if shots < 1:
        raise ConfigError("shots must be >= 1")
    if workers < 1:
        raise ConfigError("workers must be >= 1")
    if alpha not in (0.5, 1.0):
        raise ConfigError(f"alpha must be 1/2 or 1, got {alpha}")
    exact = exact_fidelity(rho, target)
    if scheme == "dfe":
        coeffs = pauli_coefficients(target, cap=coeff_cap)
        sampler = ExactSampler(coeffs, alpha)
        bound = float(sampler.norm_sum ** 2) if alpha == 0.5 else None

        def one(rng):
            return dfe_shot(rho, sampler, rng, povm=povm).value
    elif scheme == "fofe":
        stripped, phi = phase_strip(target)
        if phase is not None:
            phi = phase
        if _is_flat_modulus(stripped):
            sampler = UniformXSampler(target.n, alpha)
        else:
            sampler = ExactSampler(pauli_coefficients(stripped, cap=coeff_cap),
                                   alpha)
        branches = 1 if phi.is_real() else 2
        bound = branches * float(sampler.norm_sum ** 2) if alpha == 0.5 else None

        def one(rng):
            return fofe_shot(rho, sampler, phi, rng).value
    elif scheme == "nldfe":
        part = build_qwc_partition(pauli_coefficients(target, cap=coeff_cap),
                                   ordering=ordering)
        bound = part.total_weight ** 2

        def one(rng):
            return nldfe_shot(rho, part, rng).value
    else:
        raise ConfigError(f"unknown scheme {scheme!r}")
    values = np.empty(shots)
    bounds = np.linspace(0, shots, workers + 1).astype(int)
    streams = np.random.SeedSequence(seed).spawn(workers)
    for w in range(workers):
        rng = np.random.default_rng(streams[w])
        for j in range(bounds[w], bounds[w + 1]):
            values[j] = one(rng)
    return _make_report(scheme, values, mom_batches, exact, bound)
