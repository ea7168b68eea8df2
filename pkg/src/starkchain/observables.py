"""Expectation values and observable trajectories on state snapshots."""

from dataclasses import dataclass, field

import numpy as np

from .dynamics import evolve_lindblad, evolve_unitary, DEFAULT_LINDBLAD_STEP_NS
from .errors import DomainError, NumericalConsistencyError

IMAG_ERROR_TOL = 1e-8
IMAG_DISCARD_TOL = 1e-10


@dataclass(frozen=True)
class TrajectoryTable:
    """Time series of named observables, optionally with per-point errors.

    Column names follow the fixed scheme P{j}, K{j}, V{j}, J{j} (site or bond
    index) so CSV headers stay stable; nothing enforces the scheme here, the
    builders in the cli module use it.
    """

    times_ns: np.ndarray
    columns: dict
    errors: dict = field(default_factory=dict)

    def __post_init__(self):
        t = np.asarray(self.times_ns, dtype=float)
        object.__setattr__(self, "times_ns", t)
        nt = t.shape[0]
        cols = {}
        for name, vals in self.columns.items():
            v = np.asarray(vals, dtype=float)
            if v.shape != (nt,):
                raise DomainError(
                    f"column {name!r} has length {v.shape}, expected ({nt},)"
                )
            cols[str(name)] = v
        object.__setattr__(self, "columns", cols)
        errs = {}
        for name, vals in self.errors.items():
            if name not in cols:
                raise DomainError(f"error column {name!r} has no value column")
            v = np.asarray(vals, dtype=float)
            if v.shape != (nt,):
                raise DomainError(f"error column {name!r} length mismatch")
            if np.any(v < 0):
                raise DomainError(f"error column {name!r} has negative entries")
            errs[str(name)] = v
        object.__setattr__(self, "errors", errs)

    @property
    def names(self):
        return list(self.columns)

    def column(self, name):
        return self.columns[name]


def expectation(state, obs):
    """<psi|O|psi> or tr(rho O); the imaginary residue must be numerical noise.

    |Im| >= 1e-8 raises, anything smaller is discarded after the check.
    """
    if state.basis_tag != obs.basis_tag:
        raise DomainError(
            f"basis mismatch: state {state.basis_tag!r} vs operator {obs.basis_tag!r}"
        )
    if not obs.is_hermitian():
        raise DomainError("observable is not Hermitian")
    m = obs.matrix
    if state.is_density:
        val = complex(m.multiply(state.data.T).sum())
    else:
        val = complex(np.vdot(state.data, m @ state.data))
    if abs(val.imag) >= IMAG_ERROR_TOL:
        raise NumericalConsistencyError(
            f"expectation has imaginary part {val.imag:.3e} (tol {IMAG_ERROR_TOL:g})"
        )
    return val.real


def _expect_vec(vec, matrices):
    return [complex(np.vdot(vec, m @ vec)) for m in matrices]


def _expect_rho(rho, matrices):
    return [complex(m.multiply(rho.T).sum()) for m in matrices]


def trajectory(hamiltonian, state, times_ns, observables, mode="unitary",
               collapse=None, step=DEFAULT_LINDBLAD_STEP_NS):
    """Evolve once and tabulate exact expectations of each named observable.

    observables: mapping name -> OperatorMatrix (insertion order fixes the
    column order). mode "unitary" keeps a pure state; "lindblad" needs the
    collapse operator set and pays the density-matrix cost.
    """
    names = list(observables)
    ops = [observables[n] for n in names]
    for n, o in zip(names, ops):
        if o.basis_tag != state.basis_tag:
            raise DomainError(
                f"observable {n!r} basis {o.basis_tag!r} does not match state"
            )
        if not o.is_hermitian():
            raise DomainError(f"observable {n!r} is not Hermitian")
    times_ns = np.asarray(times_ns, dtype=float)
    mats = [o.matrix for o in ops]
    if mode == "unitary":
        amps = evolve_unitary(hamiltonian, state, times_ns)
        data = np.array([_expect_vec(v, mats) for v in amps])
    elif mode == "lindblad":
        if collapse is None:
            raise DomainError("lindblad mode needs a collapse operator set")
        rhos = evolve_lindblad(hamiltonian, state, times_ns, collapse, step=step)
        data = np.array([_expect_rho(r, mats) for r in rhos])
    else:
        raise DomainError(f"unknown evolution mode {mode!r}")
    imax = float(np.max(np.abs(data.imag)))
    if imax >= IMAG_ERROR_TOL:
        raise NumericalConsistencyError(f"trajectory imaginary residue {imax:.3e}")
    cols = {n: data[:, k].real for k, n in enumerate(names)}
    return TrajectoryTable(times_ns=times_ns, columns=cols)
