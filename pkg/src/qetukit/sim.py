"""Dense statevector simulator and the filtering-circuit executors.

States live on ``n_sites`` registers of ``n_q`` qubits each (site 0 is the
most significant index block).  Diagonal evolutions act in the computational
basis; conjugate-basis diagonals act through per-site discrete Fourier
transforms with the 1/sqrt(N) unitary convention, FT|0...0> = uniform.
Momentum-side diagonal tables are expected in DFT-mode order (mode 0 pairs
with the zero eigenvalue) so that the plain transform realizes the physical
conjugate pairing.

The ladder executor supports the controlled form (block encodes
F(cos(tau H / 2))) and the control-free form (F(cos(tau H))), plus a dense
eigendecomposition oracle for both.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .qsp import PhaseSequence

__all__ = [
    "StateVector",
    "QetuRunReport",
    "GroupedHamiltonian",
    "FilteredToNothingError",
    "apply_diagonal_phase",
    "apply_qft",
    "apply_iqft",
    "site_ft",
    "trotter_step",
    "ExactEvolver",
    "TrotterEvolver",
    "DiagonalEvolver",
    "run_qetu",
    "qetu_block_matrix",
    "exact_filter_oracle",
    "pauli_sum_matrix",
    "group_pauli",
    "build_v_circuit",
    "circuit_matrix",
    "circuit_tallies",
    "sample_postselection",
]


class FilteredToNothingError(RuntimeError):
    """Post-selection norm fell below the representable threshold."""


@dataclass
class StateVector:
    amplitudes: np.ndarray
    n: int

    def __post_init__(self):
        self.amplitudes = np.asarray(self.amplitudes, dtype=complex)
        if self.amplitudes.shape != (2**self.n,):
            raise ValueError("amplitude length must be 2**n")

    @property
    def norm(self):
        return float(np.linalg.norm(self.amplitudes))

    @staticmethod
    def uniform(n):
        dim = 2**n
        return StateVector(np.full(dim, 1.0 / np.sqrt(dim), dtype=complex), n)

    @staticmethod
    def basis(n, index):
        amp = np.zeros(2**n, dtype=complex)
        amp[index] = 1.0
        return StateVector(amp, n)


def _as_array(state):
    if isinstance(state, StateVector):
        return state.amplitudes
    return np.asarray(state, dtype=complex)


# ----------------------------------------------------------------------
# primitives


def _site_axis_view(amps, n_total_qubits, qubits):
    """Reshape so the contiguous qubit block becomes one axis."""
    qubits = list(qubits)
    if qubits != list(range(qubits[0], qubits[0] + len(qubits))):
        raise ValueError("subregister qubits must be contiguous")
    start, width = qubits[0], len(qubits)
    left = 2**start
    mid = 2**width
    right = 2 ** (n_total_qubits - start - width)
    return amps.reshape(left, mid, right)


def apply_diagonal_phase(state, eigenvalues, angle, qubits=None):
    """Multiply amplitude j by exp(-i angle * lambda_j) on a subregister."""
    amps = _as_array(state)
    eig = np.asarray(eigenvalues, dtype=float)
    n = int(np.log2(len(amps)))
    if qubits is None:
        if len(eig) != len(amps):
            raise ValueError("eigenvalue table length must match state dimension")
        out = amps * np.exp(-1j * angle * eig)
    else:
        view = _site_axis_view(amps.copy(), n, qubits)
        if len(eig) != view.shape[1]:
            raise ValueError("eigenvalue table length must match subregister dimension")
        view *= np.exp(-1j * angle * eig)[None, :, None]
        out = view.reshape(-1)
    if isinstance(state, StateVector):
        return StateVector(out, state.n)
    return out


def apply_qft(state, qubits):
    """Unitary DFT on a contiguous qubit block: |k> -> sum_j e^{2 pi i jk/N}|j>/sqrt(N)."""
    amps = _as_array(state)
    n = int(np.log2(len(amps)))
    view = _site_axis_view(amps, n, qubits)
    out = np.fft.ifft(view, axis=1, norm="ortho").reshape(-1)
    if isinstance(state, StateVector):
        return StateVector(out, state.n)
    return out


def apply_iqft(state, qubits):
    amps = _as_array(state)
    n = int(np.log2(len(amps)))
    view = _site_axis_view(amps, n, qubits)
    out = np.fft.fft(view, axis=1, norm="ortho").reshape(-1)
    if isinstance(state, StateVector):
        return StateVector(out, state.n)
    return out


def site_ft(amps, n_sites, n_q, inverse=False):
    """Per-site DFT over every site register of a bare amplitude array."""
    shape = (2**n_q,) * n_sites
    view = amps.reshape(shape)
    fn = np.fft.fft if inverse else np.fft.ifft
    for axis in range(n_sites):
        view = fn(view, axis=axis, norm="ortho")
    return view.reshape(-1)


def _split_step(amps, model, dtau, adjoint=False):
    """One first-order split step of exp(-i dtau (H_pos + FT^dag H_mom FT)).

    Forward order: transform, momentum phase, transform back, position
    phase.  The adjoint reverses the order and conjugates the phases.
    """
    if not adjoint:
        amps = site_ft(amps, model.n_sites, model.n_q)
        amps = amps * np.exp(-1j * dtau * model.h_mom)
        amps = site_ft(amps, model.n_sites, model.n_q, inverse=True)
        amps = amps * np.exp(-1j * dtau * model.h_pos)
    else:
        amps = amps * np.exp(1j * dtau * model.h_pos)
        amps = site_ft(amps, model.n_sites, model.n_q)
        amps = amps * np.exp(1j * dtau * model.h_mom)
        amps = site_ft(amps, model.n_sites, model.n_q, inverse=True)
    return amps


def trotter_step(state, model, dtau, direction=1):
    """First-order split step; ``direction=-1`` applies the exact adjoint."""
    amps = _as_array(state)
    out = _split_step(amps, model, dtau, adjoint=(direction < 0))
    if isinstance(state, StateVector):
        return StateVector(out, state.n)
    return out


# ----------------------------------------------------------------------
# evolvers


class ExactEvolver:
    """e^{-i t H} through a cached dense eigendecomposition."""

    def __init__(self, model_or_matrix):
        if hasattr(model_or_matrix, "dense_hamiltonian"):
            H = model_or_matrix.dense_hamiltonian()
        else:
            H = np.asarray(model_or_matrix, dtype=complex)
        if H.shape[0] > 2**12:
            raise ValueError("exact evolver limited to 2**12 dimensions")
        if np.max(np.abs(H - H.conj().T)) > 1e-10 * (1 + np.max(np.abs(H))):
            raise ValueError("Hamiltonian is not Hermitian")
        self.energies, self.vectors = np.linalg.eigh((H + H.conj().T) / 2.0)

    @property
    def dim(self):
        return len(self.energies)

    def evolve(self, amps, t):
        coeff = self.vectors.conj().T @ amps
        coeff *= np.exp(-1j * t * self.energies)
        return self.vectors @ coeff

    def u_call(self, amps, tau, n_steps, adjoint=False):
        return self.evolve(amps, -tau if adjoint else tau)


class DiagonalEvolver:
    """e^{-i t D} for an operator diagonal in the computational basis."""

    def __init__(self, diagonal):
        self.diagonal = np.asarray(diagonal, dtype=float)

    @property
    def dim(self):
        return len(self.diagonal)

    def evolve(self, amps, t):
        return amps * np.exp(-1j * t * self.diagonal)

    def u_call(self, amps, tau, n_steps, adjoint=False):
        return self.evolve(amps, -tau if adjoint else tau)


class TrotterEvolver:
    """First-order product-formula evolution on a split model."""

    def __init__(self, model):
        self.model = model

    @property
    def dim(self):
        return len(self.model.h_pos)

    def evolve(self, amps, t):  # single signed split step, used by V calls
        return _split_step(amps, self.model, t)

    def u_call(self, amps, tau, n_steps, adjoint=False):
        dtau = tau / n_steps
        for _ in range(n_steps):
            amps = _split_step(amps, self.model, dtau, adjoint=adjoint)
        return amps


# ----------------------------------------------------------------------
# ladder executor


@dataclass
class QetuRunReport:
    output: StateVector
    success_prob: float
    calls: int
    gates: dict = field(default_factory=dict)


def _w_phases(phases):
    if isinstance(phases, PhaseSequence):
        return phases.w_convention
    return np.asarray(phases, dtype=float)


def _ladder(block0, block1, w, evolver, tau, n_steps, mode):
    """Apply the alternating rotation / evolution ladder in place."""
    d = len(w) - 1

    def rotate(phi):
        nonlocal block0, block1
        c, s = np.cos(phi), 1j * np.sin(phi)
        block0, block1 = c * block0 + s * block1, s * block0 + c * block1

    rotate(w[0])
    for k in range(1, d + 1):
        adjoint = k % 2 == 0
        if mode == "controlled":
            block1 = evolver.u_call(block1, tau, n_steps, adjoint=adjoint)
        elif mode == "control_free":
            if isinstance(evolver, TrotterEvolver):
                dtau = tau / n_steps
                for _ in range(n_steps):
                    block1 = _split_step(block1, evolver.model, dtau, adjoint=adjoint)
                    block0 = _split_step(block0, evolver.model, -dtau, adjoint=adjoint)
            else:
                block1 = evolver.u_call(block1, tau, n_steps, adjoint=adjoint)
                block0 = evolver.u_call(block0, -tau, n_steps, adjoint=adjoint)
        else:
            raise ValueError(f"unknown mode {mode!r}")
        rotate(w[k])
    # The quarter-pi shifted ladder block-encodes (-1)^{d/2} F; absorb the
    # sign as a global phase so the block equals +F exactly.
    if (d // 2) % 2 == 1:
        block0 = -block0
        block1 = -block1
    return block0, block1


def run_qetu(psi_init, phases, evolver, tau=1.0, n_steps=1, mode="controlled", gate_cost=None):
    """Ancilla ladder with post-selection on |0>.

    ``phases`` must be in the shifted (circuit) convention or be a
    PhaseSequence (shifted automatically).  Returns the renormalized output
    and the pre-normalization success probability.
    """
    w = _w_phases(phases)
    d = len(w) - 1
    if d % 2 != 0:
        raise ValueError("the filtering ladder needs an even number of calls")
    amps = _as_array(psi_init)
    n = int(np.log2(len(amps)))
    block0 = amps.astype(complex).copy()
    block1 = np.zeros_like(block0)
    block0, block1 = _ladder(block0, block1, w, evolver, tau, n_steps, mode)
    p = float(np.linalg.norm(block0) ** 2)
    if p < 1e-14:
        raise FilteredToNothingError("post-selection probability below 1e-14")
    out = StateVector(block0 / np.sqrt(p), n)
    gates = {"rx": d + 1, "u_calls": d, "trotter_steps": d * n_steps}
    if gate_cost is not None:
        cnot_per, rz_per = gate_cost
        gates["cnot"] = d * n_steps * cnot_per
        gates["rz"] = d * n_steps * rz_per
    return QetuRunReport(output=out, success_prob=p, calls=d, gates=gates)


def qetu_block_matrix(phases, evolver, tau=1.0, n_steps=1, mode="controlled"):
    """Dense <0|ladder|0> block: F(cos(tau H / 2)) or F(cos(tau H))."""
    w = _w_phases(phases)
    dim = evolver.dim
    block = np.empty((dim, dim), dtype=complex)
    for k in range(dim):
        b0 = np.zeros(dim, dtype=complex)
        b0[k] = 1.0
        b1 = np.zeros_like(b0)
        b0, b1 = _ladder(b0, b1, w, evolver, tau, n_steps, mode)
        block[:, k] = b0
    return block


def exact_filter_oracle(hamiltonian, poly, tau, psi, half_angle=True):
    """Eigenvalue-wise F(cos(tau E / 2)) (or F(cos(tau E))) reference.

    Returns ``(StateVector, p)`` with ``p`` the pre-normalization norm^2.
    """
    from .cheb import eval_cheb

    H = np.asarray(hamiltonian)
    amps = _as_array(psi)
    if H.ndim == 1:
        energies = H.astype(float)
        coeff = amps.copy()
        weights = eval_cheb(poly, np.cos(tau * energies / (2.0 if half_angle else 1.0)))
        filtered = weights * coeff
    else:
        if H.shape[0] > 2**12:
            raise ValueError("oracle limited to 2**12 dimensions")
        if np.max(np.abs(H - H.conj().T)) > 1e-10 * (1 + np.max(np.abs(H))):
            raise ValueError("Hamiltonian is not Hermitian")
        energies, vectors = np.linalg.eigh((H + H.conj().T) / 2.0)
        coeff = vectors.conj().T @ amps
        weights = eval_cheb(poly, np.cos(tau * energies / (2.0 if half_angle else 1.0)))
        filtered = vectors @ (weights * coeff)
    p = float(np.linalg.norm(filtered) ** 2)
    if p < 1e-14:
        raise FilteredToNothingError("filter annihilated the state")
    n = int(np.log2(len(filtered)))
    return StateVector(filtered / np.sqrt(p), n), p


def sample_postselection(p, shots, seed=None):
    """Binomial draw of post-selection successes, for shot-noise studies."""
    rng = np.random.default_rng(seed)
    return int(rng.binomial(shots, min(max(p, 0.0), 1.0)))


# ----------------------------------------------------------------------
# Pauli grouping and the simultaneous forward/backward oracle


_PAULI = {
    "I": np.eye(2, dtype=complex),
    "X": np.array([[0, 1], [1, 0]], dtype=complex),
    "Y": np.array([[0, -1j], [1j, 0]], dtype=complex),
    "Z": np.array([[1, 0], [0, -1]], dtype=complex),
}


def pauli_sum_matrix(terms, n=None):
    """Dense matrix of a list of (coefficient, pauli string) terms."""
    if n is None:
        n = len(terms[0][1])
    dim = 2**n
    H = np.zeros((dim, dim), dtype=complex)
    for coef, string in terms:
        if len(string) != n:
            raise ValueError("inconsistent string length")
        op = np.array([[1.0]], dtype=complex)
        for ch in string:
            op = np.kron(op, _PAULI[ch])
        H += coef * op
    return H


@dataclass
class GroupedHamiltonian:
    """Groups H^(j) each anticommuting with a single-qubit Pauli K_j."""

    groups: list  # list of (terms, (qubit, axis))
    identity_coeff: float = 0.0
    n: int = 0


class GroupingError(RuntimeError):
    pass


def group_pauli(terms):
    """Two-pass grouping: diagonal strings keyed by their first Z (K = X
    there), remaining strings by their first X or Y (K = Z there)."""
    terms = [(float(c), str(s).upper()) for c, s in terms]
    if not terms:
        raise ValueError("empty term list")
    n = len(terms[0][1])
    identity = 0.0
    diag, mixed = [], []
    for c, s in terms:
        if len(s) != n or any(ch not in "IXYZ" for ch in s):
            raise ValueError(f"bad pauli string {s!r}")
        if set(s) == {"I"}:
            identity += c
        elif set(s) <= {"I", "Z"}:
            diag.append((c, s))
        else:
            mixed.append((c, s))

    groups = []
    for q in range(n):
        bucket = [t for t in diag if t[1][q] == "Z"]
        diag = [t for t in diag if t[1][q] != "Z"]
        if bucket:
            groups.append((bucket, (q, "X")))
    for q in range(n):
        bucket = [t for t in mixed if t[1][q] in "XY"]
        mixed = [t for t in mixed if t[1][q] not in "XY"]
        if bucket:
            groups.append((bucket, (q, "Z")))
    if diag or mixed:
        raise GroupingError(f"ungrouped terms remain: {diag + mixed}")
    return GroupedHamiltonian(groups=groups, identity_coeff=identity, n=n)


@dataclass
class CircuitOp:
    kind: str
    qubits: tuple
    params: dict

    def to_json_dict(self):
        return {"kind": self.kind, "qubits": list(self.qubits), "params": self.params}


@dataclass
class Circuit:
    n_system: int
    ops: list

    def to_json_dict(self):
        return {
            "n_system": self.n_system,
            "ops": [op.to_json_dict() for op in self.ops],
            "tallies": circuit_tallies(self),
        }


def build_v_circuit(grouped, dtau):
    """Anti-controlled K_j sandwiches realizing diag(e^{i dtau H}, e^{-i dtau H}).

    Exact when the group exponentials commute; otherwise the corresponding
    first-order product.
    """
    ops = []
    for terms, (q, axis) in grouped.groups:
        ops.append(CircuitOp("anti_ctrl_pauli", (q,), {"axis": axis}))
        ops.append(
            CircuitOp(
                "exp_pauli_sum",
                tuple(range(grouped.n)),
                {"dtau": float(dtau), "terms": [(c, s) for c, s in terms]},
            )
        )
        ops.append(CircuitOp("anti_ctrl_pauli", (q,), {"axis": axis}))
    return Circuit(n_system=grouped.n, ops=ops)


def circuit_matrix(circuit):
    """Dense (2^{n+1})-dimensional matrix; ancilla is the leading qubit."""
    n = circuit.n_system
    dim = 2**n
    full = np.eye(2 * dim, dtype=complex)
    for op in circuit.ops:
        if op.kind == "anti_ctrl_pauli":
            P = _single_qubit_embed(_PAULI[op.params["axis"]], op.qubits[0], n)
            gate = np.zeros((2 * dim, 2 * dim), dtype=complex)
            gate[:dim, :dim] = P
            gate[dim:, dim:] = np.eye(dim)
        elif op.kind == "exp_pauli_sum":
            H = pauli_sum_matrix(op.params["terms"], n)
            evals, vecs = np.linalg.eigh(H)
            U = vecs @ np.diag(np.exp(-1j * op.params["dtau"] * evals)) @ vecs.conj().T
            gate = np.kron(np.eye(2), U)
        elif op.kind == "global_phase":
            gate = np.exp(1j * op.params["phi"]) * np.eye(2 * dim)
        else:
            raise ValueError(f"unknown op kind {op.kind!r}")
        full = gate @ full
    return full


def _single_qubit_embed(mat2, qubit, n):
    op = np.array([[1.0]], dtype=complex)
    for q in range(n):
        op = np.kron(op, mat2 if q == qubit else np.eye(2, dtype=complex))
    return op


def circuit_tallies(circuit):
    """Counting model: anti-controlled Pauli = 1 CNOT (+2 basis flips);
    each Pauli-string exponential = 1 Rz + a CNOT ladder of 2(weight-1).
    ``ctrl_cnot`` isolates the CNOTs added on top of the uncontrolled
    evolution circuit."""
    cnot = rz = rx = other = ctrl = 0
    for op in circuit.ops:
        if op.kind == "anti_ctrl_pauli":
            cnot += 1
            ctrl += 1
            other += 2
        elif op.kind == "exp_pauli_sum":
            for _, s in op.params["terms"]:
                wgt = sum(ch != "I" for ch in s)
                rz += 1
                cnot += max(0, 2 * (wgt - 1))
    return {"cnot": cnot, "rz": rz, "rx": rx, "other": other, "ctrl_cnot": ctrl}
