"""Simulated noisy single-shot readout and grouped error-bar statistics."""

import re
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StateSpecError
from .model import full_tag

VALID_AXES = frozenset("ZXY")

# Basis pre-rotations: measuring axis A in the computational basis after U
# with U A U^dag = Z, so reported bit 0 is the +1 eigenvalue.
_SQ2 = 1.0 / np.sqrt(2.0)
_ROT = {
    "Z": np.eye(2, dtype=complex),
    # R_y(-pi/2)
    "X": np.array([[_SQ2, _SQ2], [-_SQ2, _SQ2]], dtype=complex),
    # R_x(+pi/2)
    "Y": np.array([[_SQ2, -1j * _SQ2], [-1j * _SQ2, _SQ2]], dtype=complex),
}


@dataclass(frozen=True)
class ConfusionMatrix:
    """Column-stochastic 2x2 readout map [[F0, 1-F1], [1-F0, F1]]."""

    f0: float
    f1: float

    def __post_init__(self):
        for name in ("f0", "f1"):
            v = float(getattr(self, name))
            if not 0.0 <= v <= 1.0:
                raise DomainError(f"{name} must be in [0, 1], got {v}")
            object.__setattr__(self, name, v)

    @property
    def matrix(self):
        return np.array([[self.f0, 1.0 - self.f1], [1.0 - self.f0, self.f1]])

    @property
    def is_singular(self):
        # det = F0 + F1 - 1
        return abs(self.f0 + self.f1 - 1.0) < 1e-12

    def inverse(self):
        if self.is_singular:
            raise DomainError(
                "confusion matrix is singular (F0 + F1 = 1), cannot invert"
            )
        return np.linalg.inv(self.matrix)

    @classmethod
    def perfect(cls):
        return cls(f0=1.0, f1=1.0)


def confusion_from_device(params):
    """One ConfusionMatrix per qubit from the device readout fidelities."""
    return [
        ConfusionMatrix(f0=f0, f1=f1)
        for f0, f1 in zip(params.readout_f0, params.readout_f1)
    ]


@dataclass(frozen=True)
class ShotRecord:
    bitstrings: tuple
    n_groups: int
    seed: int
    basis: str

    def __post_init__(self):
        basis = str(self.basis).upper()
        if not basis or any(a not in VALID_AXES for a in basis):
            raise DomainError(f"basis must be over {{Z,X,Y}}, got {self.basis!r}")
        object.__setattr__(self, "basis", basis)
        bits = tuple(str(b) for b in self.bitstrings)
        n_qubits = len(basis)
        pat = re.compile(r"^[01]+$")
        for b in bits:
            if len(b) != n_qubits or not pat.match(b):
                raise DomainError(f"bad bitstring {b!r} for {n_qubits} qubits")
        object.__setattr__(self, "bitstrings", bits)
        if self.n_groups < 1 or len(bits) % self.n_groups != 0:
            raise DomainError(
                f"{len(bits)} shots not divisible into {self.n_groups} groups"
            )

    @property
    def n_shots(self):
        return len(self.bitstrings)

    @property
    def n_qubits(self):
        return len(self.basis)

    def bit_array(self):
        return np.array(
            [[int(c) for c in b] for b in self.bitstrings], dtype=np.int64
        )


def save_shots(record, path):
    """Line-per-shot text format: basis header, then one bitstring per line."""
    with open(path, "w") as fh:
        fh.write(record.basis + "\n")
        for b in record.bitstrings:
            fh.write(b + "\n")


def load_shots(path, n_groups=1, seed=0):
    """Inverse of save_shots; group count and seed are not part of the wire
    format, so they are supplied by the caller (defaults documented here)."""
    with open(path) as fh:
        lines = [ln.strip() for ln in fh if ln.strip()]
    if not lines:
        raise DomainError(f"empty shot file {path}")
    return ShotRecord(
        bitstrings=tuple(lines[1:]), n_groups=n_groups, seed=seed, basis=lines[0]
    )


def _rotated_probabilities(state, basis):
    n = len(basis)
    if state.basis_tag != full_tag(n):
        raise StateSpecError(
            f"sampling needs a full-space state on {n} qubits, got {state.basis_tag!r}"
        )
    ops = [_ROT[a] for a in basis]
    u = ops[0]
    for op in ops[1:]:
        u = np.kron(u, op)
    if state.is_density:
        rho = u @ state.data @ u.conj().T
        probs = np.real(np.diag(rho)).copy()
    else:
        probs = np.abs(u @ state.data) ** 2
    probs = np.clip(probs, 0.0, None)
    return probs / probs.sum()


def sample_shots(state, confusion, basis, n_shots, seed, n_groups=1):
    """Draw noisy shots: basis pre-rotation, Born draw, per-qubit bit flips.

    The RNG is counter-based (Philox keyed by the seed) and all uniforms come
    from a single (n_shots, n_qubits + 1) block: column 0 drives each shot's
    Born draw, column q+1 the readout flip of qubit q. Any row can therefore
    be regenerated independently of the others, which is what makes the
    sampler deterministic under parallel evaluation as well.
    """
    basis = str(basis).upper()
    if any(a not in VALID_AXES for a in basis):
        raise DomainError(f"invalid basis axis in {basis!r}")
    n_qubits = len(basis)
    if len(confusion) != n_qubits:
        raise DomainError(
            f"need {n_qubits} confusion matrices, got {len(confusion)}"
        )
    if n_shots < 1:
        raise DomainError("n_shots must be positive")
    probs = _rotated_probabilities(state, basis)
    cdf = np.cumsum(probs)
    cdf[-1] = 1.0
    rng = np.random.Generator(np.random.Philox(key=int(seed)))
    u = rng.random((int(n_shots), n_qubits + 1))
    outcomes = np.searchsorted(cdf, u[:, 0], side="right")
    # bit q of outcome, site 1 = most significant
    shifts = n_qubits - 1 - np.arange(n_qubits)
    bits = (outcomes[:, None] >> shifts[None, :]) & 1
    flip0 = np.array([1.0 - c.f0 for c in confusion])  # P(report 1 | true 0)
    flip1 = np.array([1.0 - c.f1 for c in confusion])  # P(report 0 | true 1)
    p_flip = np.where(bits == 0, flip0[None, :], flip1[None, :])
    reported = np.where(u[:, 1:] < p_flip, 1 - bits, bits)
    strings = tuple(
        "".join("1" if b else "0" for b in row) for row in reported
    )
    return ShotRecord(
        bitstrings=strings, n_groups=int(n_groups), seed=int(seed), basis=basis
    )


_ESTIMATOR_RE = re.compile(r"^(P|XX|YY|XY|YX|ZZ)([1-9][0-9]*)$")


def _parse_estimator(name, record):
    m = _ESTIMATOR_RE.match(name)
    if not m:
        raise DomainError(f"unknown estimator {name!r} (use e.g. 'P3' or 'XX2')")
    kind, idx = m.group(1), int(m.group(2))
    n = record.n_qubits
    if kind == "P":
        if not 1 <= idx <= n:
            raise DomainError(f"site {idx} outside 1..{n}")
        return kind, (idx,)
    if not 1 <= idx <= n - 1:
        raise DomainError(f"bond {idx} outside 1..{n - 1}")
    want = kind  # two basis letters
    have = record.basis[idx - 1] + record.basis[idx]
    if have != want:
        raise DomainError(
            f"estimator {name!r} needs basis {want} on sites {idx},{idx + 1}; "
            f"record has {have}"
        )
    return kind, (idx, idx + 1)


def _joint_histogram(bits, sites):
    """Counts over the 2^k outcomes of the listed sites (site 1 first)."""
    k = len(sites)
    idx = np.zeros(bits.shape[0], dtype=np.int64)
    for s in sites:
        idx = (idx << 1) | bits[:, s - 1]
    return np.bincount(idx, minlength=2 ** k).astype(float)


def _correct_histogram(hist, mats):
    inv = mats[0]
    for m in mats[1:]:
        inv = np.kron(inv, m)
    out = inv @ hist
    out = np.clip(out, 0.0, None)
    total = out.sum()
    if total <= 0:
        raise DomainError("readout correction produced an empty histogram")
    return out * (hist.sum() / total)


def group_means(record, estimator, confusion=None):
    """Per-group estimates of one estimator, in group order.

    estimator: 'P{j}' for a site density, or a two-letter Pauli pair plus the
    bond index ('XX2', 'XY1', ...) evaluated as (1-2b_i)(1-2b_j). With
    confusion matrices given, each group's joint histogram is inverse-corrected
    before the estimate.
    """
    kind, sites = _parse_estimator(str(estimator), record)
    group_size = record.n_shots // record.n_groups
    if group_size == 0:
        raise DomainError("empty groups")
    mats = None
    if confusion is not None:
        mats = [confusion[s - 1].inverse() for s in sites]
    bits = record.bit_array()
    k = len(sites)
    # outcome values: P -> bit itself; Pauli pair -> product of (1-2b)
    vals = np.zeros(2 ** k)
    for outcome in range(2 ** k):
        obits = [(outcome >> (k - 1 - i)) & 1 for i in range(k)]
        if kind == "P":
            vals[outcome] = obits[0]
        else:
            vals[outcome] = np.prod([1.0 - 2.0 * b for b in obits])
    means = []
    for g in range(record.n_groups):
        chunk = bits[g * group_size:(g + 1) * group_size]
        hist = _joint_histogram(chunk, sites)
        if mats is not None:
            hist = _correct_histogram(hist, mats)
        means.append(float(np.dot(vals, hist) / hist.sum()))
    return np.asarray(means)


def grouped_statistics(record, estimator, confusion=None):
    """Grand mean and the std across group means (the convention used for all
    quoted error bars here: the spread of group estimates, not SEM)."""
    means = group_means(record, estimator, confusion=confusion)
    grand = float(means.mean())
    spread = float(means.std(ddof=1)) if means.shape[0] > 1 else 0.0
    return grand, spread


def readout_correct(measured, confusion):
    """Apply inverse confusion matrices to probabilities.

    measured of length n_qubits: per-qubit P(report 1) marginals, corrected
    qubit by qubit and clamped to [0, 1]. measured of length 2^n_qubits: a
    full histogram, corrected with the tensor-product inverse and
    renormalized.
    """
    measured = np.asarray(measured, dtype=float)
    n = len(confusion)
    if measured.shape == (n,):  # 2^n > n always, so the dispatch is unambiguous
        out = np.empty(n)
        for q, c in enumerate(confusion):
            vec = np.array([1.0 - measured[q], measured[q]])
            corrected = c.inverse() @ vec
            out[q] = np.clip(corrected[1], 0.0, 1.0)
        return out
    if measured.shape == (2 ** n,):
        inv = confusion[0].inverse()
        for c in confusion[1:]:
            inv = np.kron(inv, c.inverse())
        out = np.clip(inv @ measured, 0.0, None)
        total = out.sum()
        if total <= 0:
            raise DomainError("correction produced an empty distribution")
        return out / total
    raise DomainError(
        f"expected {n} marginals or a {2 ** n}-entry histogram, got shape "
        f"{measured.shape}"
    )
