"""State preparation and time evolution (unitary and dissipative)."""

from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from .device import DeviceParams
from .errors import (DomainError, IntegrationAccuracyError,
                     NumericalConsistencyError, StateSpecError)
from .model import (NUMBER_OP, SIGMA_MINUS, OperatorMatrix, SectorBasis,
                    _site_operator, full_index, full_tag)

DEFAULT_LINDBLAD_STEP_NS = 0.05
LINDBLAD_DIM_CAP = 1024  # ten qubits
TRACE_TOL = 1e-6
POSITIVITY_TOL = 1e-6

# single-site kets used by the product-state parser
_LOCAL_KETS = {
    "0": np.array([1.0, 0.0], dtype=complex),
    "1": np.array([0.0, 1.0], dtype=complex),
    "X+": np.array([1.0, 1.0], dtype=complex) / np.sqrt(2.0),
    "X-": np.array([1.0, -1.0], dtype=complex) / np.sqrt(2.0),
}


@dataclass
class QuantumState:
    """State vector or density matrix together with its basis tag."""

    data: np.ndarray
    basis_tag: str

    def __post_init__(self):
        a = np.asarray(self.data, dtype=complex)
        if a.ndim == 1:
            norm = np.linalg.norm(a)
            if abs(norm - 1.0) > 1e-6:
                raise DomainError(f"state vector norm {norm} is not 1")
        elif a.ndim == 2:
            if a.shape[0] != a.shape[1]:
                raise DomainError(f"density matrix must be square, got {a.shape}")
            tr = np.trace(a)
            if abs(tr - 1.0) > 1e-6:
                raise DomainError(f"density matrix trace {tr} is not 1")
            if np.max(np.abs(a - a.conj().T)) > 1e-8:
                raise DomainError("density matrix is not Hermitian")
        else:
            raise DomainError("state data must be a vector or a square matrix")
        self.data = a

    @property
    def is_density(self):
        return self.data.ndim == 2

    @property
    def dim(self):
        return self.data.shape[0]

    def to_density(self):
        if self.is_density:
            return self
        return QuantumState(np.outer(self.data, self.data.conj()), self.basis_tag)


def _tokenize_state_spec(spec):
    tokens = []
    i = 0
    while i < len(spec):
        ch = spec[i]
        if ch in "01":
            tokens.append(ch)
            i += 1
        elif ch == "X":
            if i + 1 >= len(spec) or spec[i + 1] not in "+-":
                raise StateSpecError(f"dangling 'X' at position {i} in {spec!r}")
            tokens.append(spec[i:i + 2])
            i += 2
        else:
            raise StateSpecError(f"unknown token {ch!r} at position {i} in {spec!r}")
    return tokens


def prepare_initial_state(spec, n_sites, basis=None):
    """Product state from a per-site token string.

    Tokens: '0', '1', 'X+' (equal superposition), 'X-'.  Examples: "10000",
    "X+X+000".  With basis None the state lives on the full 2^L space; with a
    SectorBasis the spec must be a 0/1 string whose excitation count matches
    the sector.
    """
    tokens = _tokenize_state_spec(spec)
    if len(tokens) != n_sites:
        raise StateSpecError(
            f"{spec!r} describes {len(tokens)} sites, expected {n_sites}")
    if basis is not None:
        if not isinstance(basis, SectorBasis) or basis.n_sites != n_sites:
            raise DomainError("basis must be a SectorBasis over the same sites")
        if any(t not in "01" for t in tokens):
            raise StateSpecError(
                f"{spec!r} is not a computational state; it spans several sectors")
        occ = tuple(int(t) for t in tokens)
        if sum(occ) != basis.n_excitations:
            raise StateSpecError(
                f"{spec!r} has {sum(occ)} excitations, sector holds "
                f"{basis.n_excitations}")
        vec = np.zeros(basis.dim, dtype=complex)
        vec[basis.index[occ]] = 1.0
        return QuantumState(vec, basis.tag)
    vec = np.array([1.0], dtype=complex)
    for t in tokens:
        vec = np.kron(vec, _LOCAL_KETS[t])
    return QuantumState(vec, full_tag(n_sites))


def embed_in_full(state, basis):
    """Lift a sector state vector to the full 2^L space."""
    if state.basis_tag != basis.tag:
        raise DomainError(
            f"state tag {state.basis_tag!r} does not match basis {basis.tag!r}")
    if state.is_density:
        raise DomainError("embedding is implemented for state vectors")
    vec = np.zeros(2 ** basis.n_sites, dtype=complex)
    for i, occ in enumerate(basis.states):
        vec[full_index(occ)] = state.data[i]
    return QuantumState(vec, full_tag(basis.n_sites))


def _check_hermitian(h):
    if not isinstance(h, OperatorMatrix):
        raise DomainError("hamiltonian must be an OperatorMatrix")
    if not h.is_hermitian(1e-12):
        raise DomainError("hamiltonian is not Hermitian within 1e-12")


def _lanczos_expm(matrix, vec, dt, m_max=48, tol=1e-12):
    """Krylov approximation of expm(-i dt H) vec for Hermitian sparse H.

    Full reorthogonalization; if the subspace residual estimate exceeds tol
    the interval is split in half recursively.
    """
    norm0 = np.linalg.norm(vec)
    if norm0 == 0.0:
        return vec
    m_max = min(m_max, matrix.shape[0])
    basis = [vec / norm0]
    alphas, betas = [], []
    breakdown = False
    for k in range(m_max):
        w = matrix @ basis[k]
        alpha = float(np.real(np.vdot(basis[k], w)))
        alphas.append(alpha)
        w = w - alpha * basis[k]
        if k > 0:
            w = w - betas[k - 1] * basis[k - 1]
        for u in basis:  # full reorthogonalization, keeps small dims exact
            w = w - np.vdot(u, w) * u
        beta = np.linalg.norm(w)
        if beta < 1e-14:
            breakdown = True
            break
        betas.append(beta)
        basis.append(w / beta)
    m = len(alphas)
    tri = np.diag(alphas).astype(complex)
    if m > 1:
        off = np.array(betas[:m - 1])
        tri += np.diag(off, 1) + np.diag(off, -1)
    evals, evecs = np.linalg.eigh(tri)
    coef = evecs @ (np.exp(-1j * dt * evals) * evecs[0].conj())
    if not breakdown and abs(coef[-1]) > tol:
        half = _lanczos_expm(matrix, vec, 0.5 * dt, m_max, tol)
        return _lanczos_expm(matrix, half, 0.5 * dt, m_max, tol)
    out = np.zeros_like(vec)
    for k in range(m):
        out += coef[k] * basis[k]
    return out * norm0


def evolve_unitary(hamiltonian, state, times, method="auto"):
    """Pure-state evolution psi(t) = expm(-i H t) psi(0) on a time grid.

    Returns an (n_times, dim) array of state vectors.  method "eigh" uses a
    dense eigendecomposition (dim capped at 4096), "krylov" a Lanczos stepper
    for larger problems, "auto" picks by dimension.
    """
    _check_hermitian(hamiltonian)
    if state.is_density:
        raise DomainError("evolve_unitary expects a pure state vector")
    if state.basis_tag != hamiltonian.basis_tag:
        raise DomainError(
            f"state tag {state.basis_tag!r} does not match hamiltonian "
            f"{hamiltonian.basis_tag!r}")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if method == "auto":
        method = "eigh" if hamiltonian.dim <= 4096 else "krylov"
    if method == "eigh":
        hm = hamiltonian.todense()
        evals, evecs = np.linalg.eigh(hm)
        c0 = evecs.conj().T @ state.data
        phases = np.exp(-1j * np.outer(times, evals))
        return (phases * c0) @ evecs.T
    if method != "krylov":
        raise DomainError(f"unknown evolution method {method!r}")
    order = np.argsort(times, kind="stable")
    out = np.empty((times.size, state.dim), dtype=complex)
    current = state.data.copy()
    t_prev = 0.0
    for idx in order:
        t = times[idx]
        if t < 0:
            raise DomainError("krylov stepping requires non-negative times")
        dt = t - t_prev
        if dt != 0.0:
            current = _lanczos_expm(hamiltonian.matrix, current, dt)
            t_prev = t
        out[idx] = current
    return out


@dataclass(frozen=True)
class CollapseOperatorSet:
    """Rate-weighted jump operators sharing one basis."""

    operators: tuple
    basis_tag: str

    def __post_init__(self):
        for op in self.operators:
            if not isinstance(op, OperatorMatrix):
                raise DomainError("collapse operators must be OperatorMatrix")
            if op.basis_tag != self.basis_tag:
                raise DomainError(
                    f"collapse operator tag {op.basis_tag!r} does not match "
                    f"{self.basis_tag!r}")


def make_collapse_ops(params, dephasing="as-given"):
    """Per-qubit relaxation sqrt(1/T1) s- and dephasing sqrt(rate) n.

    dephasing "as-given" uses rate 1/T2* directly (coherences then decay at
    1/(2 T2*)); "pure" uses the relaxation-corrected rate
    max(1/T2* - 1/(2 T1), 0).
    """
    if not isinstance(params, DeviceParams):
        raise DomainError("params must be a DeviceParams")
    if dephasing not in ("as-given", "pure"):
        raise DomainError(f"dephasing must be 'as-given' or 'pure', got {dephasing!r}")
    n = params.n_qubits
    tag = full_tag(n)
    ops = []
    for q in range(1, n + 1):
        gamma1 = 1.0 / params.t1_ns[q - 1]
        ops.append(OperatorMatrix(
            matrix=np.sqrt(gamma1) * _site_operator(SIGMA_MINUS, q, n),
            basis_tag=tag))
        rate = 1.0 / params.t2star_ns[q - 1]
        if dephasing == "pure":
            rate = max(rate - 0.5 * gamma1, 0.0)
        if rate > 0.0:
            ops.append(OperatorMatrix(
                matrix=np.sqrt(rate) * _site_operator(NUMBER_OP, q, n),
                basis_tag=tag))
    return CollapseOperatorSet(operators=tuple(ops), basis_tag=tag)


def _liouvillian(hamiltonian, collapse):
    """Sparse generator acting on the row-major vectorized density matrix."""
    dim = hamiltonian.dim
    ident = sp.identity(dim, format="csr", dtype=complex)
    hm = hamiltonian.matrix
    gen = -1j * (sp.kron(hm, ident) - sp.kron(ident, hm.T))
    for op in collapse.operators:
        cm = op.matrix
        cdc = cm.getH() @ cm
        gen = gen + sp.kron(cm, cm.conj())
        gen = gen - 0.5 * (sp.kron(cdc, ident) + sp.kron(ident, cdc.T))
    return gen.tocsr()


def evolve_lindblad(hamiltonian, state, times, collapse, step=DEFAULT_LINDBLAD_STEP_NS):
    """Master-equation evolution with fixed-step classical RK4.

    drho/dt = -i[H, rho] + sum_k (C_k rho C_k+ - {C_k+ C_k, rho}/2)

    The state is re-symmetrized after every step; observables are sampled at
    the integration grid point nearest to each requested time.  Trace drift
    beyond 1e-6 raises IntegrationAccuracyError (reduce the step); an
    eigenvalue below -1e-6 at a snapshot raises NumericalConsistencyError.
    Returns an (n_times, dim, dim) array of density matrices.
    """
    _check_hermitian(hamiltonian)
    if hamiltonian.dim > LINDBLAD_DIM_CAP:
        raise DomainError(
            f"lindblad solver is capped at dim {LINDBLAD_DIM_CAP} (ten qubits)")
    if collapse.basis_tag != hamiltonian.basis_tag:
        raise DomainError("collapse operators and hamiltonian bases differ")
    if state.basis_tag != hamiltonian.basis_tag:
        raise DomainError("state and hamiltonian bases differ")
    if step <= 0:
        raise DomainError("step must be positive")
    times = np.atleast_1d(np.asarray(times, dtype=float))
    if np.any(times < 0):
        raise DomainError("times must be non-negative")
    dim = hamiltonian.dim
    rho = state.to_density().data.copy()
    gen = _liouvillian(hamiltonian, collapse)
    snap_index = np.rint(times / step).astype(int)
    n_steps = int(snap_index.max()) if snap_index.size else 0
    wanted = {}
    for pos, k in enumerate(snap_index):
        wanted.setdefault(int(k), []).append(pos)
    out = np.empty((times.size, dim, dim), dtype=complex)

    def record(k, mat):
        for pos in wanted.get(k, ()):
            tr = np.trace(mat).real
            if abs(tr - 1.0) > TRACE_TOL:
                raise IntegrationAccuracyError(
                    f"trace drifted to {tr} at step {k}; reduce the step size")
            low = np.linalg.eigvalsh(mat)[0]
            if low < -POSITIVITY_TOL:
                raise NumericalConsistencyError(
                    f"density matrix eigenvalue {low} at step {k}")
            out[pos] = mat

    vec = rho.reshape(-1)
    record(0, vec.reshape(dim, dim).copy())
    for k in range(1, n_steps + 1):
        k1 = gen @ vec
        k2 = gen @ (vec + 0.5 * step * k1)
        k3 = gen @ (vec + 0.5 * step * k2)
        k4 = gen @ (vec + step * k3)
        vec = vec + (step / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
        mat = vec.reshape(dim, dim)
        mat = 0.5 * (mat + mat.conj().T)
        vec = mat.reshape(-1)
        if k in wanted:
            record(k, mat.copy())
    return out
