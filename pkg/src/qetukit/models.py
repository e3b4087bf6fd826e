"""Digitized Hamiltonians split as H = H_pos + FT^dag H_mom FT.

Two concrete families: the quadratic oscillator on a symmetric position
grid, and the compact U(1) gauge theory on a periodic 2 x N plaquette
lattice (original or weaved operator basis) with the coupling-dependent
magnetic-field range prescription.  Both expose diagonal eigenvalue tables
plus the per-site register structure the simulator needs, and the module
also carries the spectrum rescaling and the largest-entry upper-bound
machinery for the gap.

Momentum-side tables are stored in DFT-mode order (mode 0 <-> eigenvalue 0)
so that the plain unitary DFT realizes the conjugate pairing; spectra are
unchanged by this relabeling.
"""
from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .cheb import tau_max as _tau_max

__all__ = [
    "Digitization",
    "SplitModel",
    "U1Model",
    "RescaleParams",
    "SpectralBound",
    "WEAVE_NP3",
    "sho_model",
    "find_sho_xmax",
    "u1_model",
    "beta_match",
    "exact_spectrum",
    "ground_state",
    "first_energies",
    "rescale",
    "emax_upper_bound",
    "model_to_json_dict",
    "model_from_json_dict",
]


def _fft_order(values):
    """Reindex a monotone conjugate-variable table into DFT-mode order.

    With the e^{+2 pi i jk/N} transform kernel, mode m carries the value at
    monotone index (N/2 - m) mod N: mode 0 <-> 0, mode 1 <-> -delta, mode
    N-1 <-> +delta.  Quadratic tables are insensitive to the sign; the
    translation phases are not.
    """
    n = len(values)
    return values[(n // 2 - np.arange(n)) % n]


@dataclass(frozen=True)
class Digitization:
    """Symmetric position grid with the conjugate momentum grid."""

    n_q: int
    x_max: float

    @property
    def n_points(self):
        return 2**self.n_q

    @property
    def dx(self):
        return 2.0 * self.x_max / (self.n_points - 1)

    @property
    def p_max(self):
        return np.pi / self.dx

    @property
    def dp(self):
        return 2.0 * np.pi / (self.n_points * self.dx)

    @property
    def x_grid(self):
        return -self.x_max + self.dx * np.arange(self.n_points)

    @property
    def p_grid(self):
        return -self.p_max + self.dp * np.arange(self.n_points)

    @property
    def p_grid_fft(self):
        return _fft_order(self.p_grid)


@dataclass(eq=False)
class SplitModel:
    """Diagonal position table plus DFT-conjugated momentum table."""

    label: str
    n_sites: int
    n_q: int
    h_pos: np.ndarray
    h_mom: np.ndarray
    meta: dict = field(default_factory=dict)

    def __post_init__(self):
        self.h_pos = np.asarray(self.h_pos, dtype=float)
        self.h_mom = np.asarray(self.h_mom, dtype=float)
        self._spectrum = None
        self._ground = None

    @property
    def total_qubits(self):
        return self.n_sites * self.n_q

    @property
    def dimension(self):
        return 2**self.total_qubits

    def site_qubits(self, site):
        return range(site * self.n_q, (site + 1) * self.n_q)

    def dense_hamiltonian(self):
        if self.dimension > 2**12:
            raise ValueError("dense assembly limited to 2**12 dimensions")
        from .sim import site_ft

        dim = self.dimension
        # Columns of FT^dag diag(h_mom) FT, built by transforming identity
        # columns in one batch (axis 0 indexes the state).
        cols = np.eye(dim, dtype=complex)
        for k in range(dim):
            v = site_ft(cols[:, k].copy(), self.n_sites, self.n_q)
            v *= self.h_mom
            cols[:, k] = site_ft(v, self.n_sites, self.n_q, inverse=True)
        cols[np.diag_indices(dim)] += self.h_pos
        return cols

    def spectrum(self):
        if self._spectrum is None:
            self._spectrum = exact_spectrum(self)
        return self._spectrum


class DimensionError(ValueError):
    pass


def exact_spectrum(model):
    """Sorted eigenvalues of the assembled dense Hamiltonian."""
    if model.dimension > 2**12:
        raise DimensionError("exact_spectrum limited to 2**12 dimensions")
    H = model.dense_hamiltonian()
    return np.linalg.eigvalsh((H + H.conj().T) / 2.0)


def _linear_operator(model):
    from scipy.sparse.linalg import LinearOperator

    from .sim import site_ft

    def matvec(v):
        v = np.asarray(v, dtype=complex).ravel()
        out = model.h_pos * v
        w = site_ft(v.copy(), model.n_sites, model.n_q)
        w *= model.h_mom
        out += site_ft(w, model.n_sites, model.n_q, inverse=True)
        return out

    d = model.dimension
    return LinearOperator((d, d), matvec=matvec, dtype=complex)


def first_energies(model, k=2):
    """Lowest k eigenvalues; dense when small, Lanczos beyond 2**12."""
    if model.dimension <= 2**12:
        return model.spectrum()[:k]
    from scipy.sparse.linalg import eigsh

    vals = eigsh(_linear_operator(model), k=k, which="SA", return_eigenvectors=False)
    return np.sort(vals)


def ground_state(model):
    """Normalized ground-state vector in the computational basis."""
    if model._ground is not None:
        return model._ground
    if model.dimension <= 2**12:
        H = model.dense_hamiltonian()
        _, vecs = np.linalg.eigh((H + H.conj().T) / 2.0)
        g = vecs[:, 0]
    else:
        from scipy.sparse.linalg import eigsh

        _, vecs = eigsh(_linear_operator(model), k=1, which="SA")
        g = vecs[:, 0]
    g = g / np.linalg.norm(g)
    model._ground = g
    return g


# ----------------------------------------------------------------------
# oscillator


def sho_model(n_q, g, x_max):
    """H = (g^2/2) p^2 + x^2/(2 g^2) on a symmetric 2**n_q-point grid."""
    if n_q < 1 or x_max <= 0:
        raise ValueError("need n_q >= 1 and x_max > 0")
    dig = Digitization(n_q, x_max)
    h_pos = dig.x_grid**2 / (2.0 * g**2)
    h_mom = g**2 * dig.p_grid_fft**2 / 2.0
    return SplitModel(
        label=f"sho(n_q={n_q}, g={g}, x_max={x_max:g})",
        n_sites=1,
        n_q=n_q,
        h_pos=h_pos,
        h_mom=h_mom,
        meta={"type": "sho", "g": g, "x_max": x_max, "digitization": dig},
    )


def find_sho_xmax(n_q, g, eta=0.05, delta=None, bracket=(1.5, 12.0)):
    """Grid size for the oscillator, by the rescaled-window geometry.

    With ``delta`` given, returns the x_max whose rescaled gap/1.5 comes
    closest to it (requested window values need not be exactly
    attainable; they only have to bracket the true levels).  Without it,
    returns the balanced grid minimizing (E_max - E_0)/(E_1 - E_0), which
    maximizes the usable gap.
    """

    def ratio(xm):
        ev = exact_spectrum(sho_model(n_q, g, xm))
        return (ev[-1] - ev[0]) / (ev[1] - ev[0])

    target = None if delta is None else (np.pi - 2.0 * eta) / (1.5 * delta)
    score = (lambda xm: ratio(xm)) if target is None else (lambda xm: abs(ratio(xm) - target))
    xs = np.linspace(bracket[0], bracket[1], 120)
    vals = np.array([score(x) for x in xs])
    i = int(np.argmin(vals))
    lo = xs[max(i - 1, 0)]
    hi = xs[min(i + 1, len(xs) - 1)]
    for _ in range(50):
        m1 = lo + 0.382 * (hi - lo)
        m2 = lo + 0.618 * (hi - lo)
        if score(m1) < score(m2):
            hi = m2
        else:
            lo = m1
    return 0.5 * (lo + hi)


# ----------------------------------------------------------------------
# compact U(1) on a periodic 2 x N plaquette lattice


WEAVE_NP3 = np.array(
    [
        [np.sqrt(2.0), -2.0, 0.0],
        [np.sqrt(2.0), 1.0, -np.sqrt(3.0)],
        [np.sqrt(2.0), 1.0, np.sqrt(3.0)],
    ]
) / np.sqrt(6.0)

# Built-in per-plaquette ceilings for the N_p = 3 weave.  The generic
# smallest-coefficient rule applied to the same weave permutes these; the
# built-in keeps the values the weave was validated with.
_WEAVE_NP3_CEILINGS = np.array([np.sqrt(2.0), np.sqrt(6.0), np.sqrt(3.0)]) * np.pi


def _face_grid(n_p):
    if n_p < 3 or n_p % 2 == 0:
        raise ValueError("supported lattices are periodic 2 x N with N_p = 2N - 1 odd")
    n_cols = (n_p + 1) // 2
    return 2, n_cols


def _electric_matrix(n_p):
    """Quadratic-form matrix of sum_links (curl R)^2 after the canonical
    reduction.

    The flux constraint eliminates the last magnetic operator through
    B_last = -(sum of the others); its conjugate partner is removed by the
    pair change r_i = R_i - R_last, which in the link differences amounts to
    substituting R_last = 0.  (Substituting R_last = -sum(R) instead breaks
    the canonical pairing and distorts the low-lying window badly.)
    """
    n_rows, n_cols = _face_grid(n_p)
    n_faces = n_rows * n_cols

    def fid(r, c):
        return (r % n_rows) * n_cols + (c % n_cols)

    C_full = np.zeros((n_faces, n_faces))

    def add_link(a, b):
        C_full[a, a] += 1.0
        C_full[b, b] += 1.0
        C_full[a, b] -= 1.0
        C_full[b, a] -= 1.0

    for r in range(n_rows):
        for c in range(n_cols):
            add_link(fid(r, c), fid(r, c + 1))
            add_link(fid(r, c), fid(r + 1, c))

    return C_full[: n_faces - 1, : n_faces - 1]


@dataclass(eq=False)
class U1Model(SplitModel):
    n_p: int = 0
    g: float = 1.0
    basis: str = "original"
    W: np.ndarray | None = None
    c_matrix: np.ndarray | None = None
    cosine_vectors: np.ndarray | None = None
    b_max: np.ndarray | None = None
    beta_r: np.ndarray | None = None
    beta_b: np.ndarray | None = None
    ceilings: np.ndarray | None = None
    rotor_sign: int = 1

    def b_grid(self, p):
        n = 2**self.n_q
        db = 2.0 * self.b_max[p] / n
        return -self.b_max[p] + db * np.arange(n)

    def r_grid(self, p):
        n = 2**self.n_q
        dr = np.pi / self.b_max[p]
        return -np.pi * n / (2.0 * self.b_max[p]) + dr * np.arange(n)

    def r_grid_fft(self, p):
        # The construction fixes neither orientation of the rotor
        # grid relative to the transform kernel; both give identical
        # spectra.  rotor_sign=-1 selects the reversed pairing.
        vals = _fft_order(self.r_grid(p))
        if self.rotor_sign < 0:
            n = len(vals)
            vals = vals[(-np.arange(n)) % n]
        return vals


def _broadcast_site(values, site, n_sites):
    shape = [1] * n_sites
    shape[site] = len(values)
    return values.reshape(shape)


def u1_model(n_p, n_q, g, basis="original", W=None, b_max_overrides=None, grid_g=None, rotor_sign=1):
    """Compact U(1) model on N_p independent plaquettes, n_q qubits each.

    ``basis='weaved'`` uses the built-in rotation for N_p = 3 or a caller
    supplied orthogonal ``W``.  ``grid_g`` digitizes the operators at a
    different coupling than the Hamiltonian (used when ramping couplings on
    a fixed register).
    """
    n_p = int(n_p)
    C = _electric_matrix(n_p)
    vectors = np.vstack([np.eye(n_p), np.ones(n_p)])
    ceilings = np.full(n_p, np.pi)

    if basis == "weaved" or basis == "custom":
        if W is None:
            if n_p != 3:
                raise ValueError("weaved basis beyond N_p = 3 needs a caller-supplied W")
            W = WEAVE_NP3
            ceilings = _WEAVE_NP3_CEILINGS.copy()
        else:
            W = np.asarray(W, dtype=float)
            if np.max(np.abs(W @ W.T - np.eye(n_p))) > 1e-12:
                raise ValueError("W must be orthogonal")
            ceilings = None  # derived from the transformed vectors below
        C = W.T @ C @ W
        vectors = vectors @ W
        if ceilings is None:
            ceilings = np.empty(n_p)
            for p in range(n_p):
                col = np.abs(vectors[:, p])
                nz = col[col > 1e-12]
                ceilings[p] = np.pi / np.min(nz) if len(nz) else np.pi
    elif basis != "original":
        raise ValueError(f"unknown basis {basis!r}")

    beta_r = np.sqrt(np.diag(C))
    beta_b = np.sqrt(np.sum(vectors**2, axis=0))

    gg = g if grid_g is None else grid_g
    n = 2**n_q
    b_max = np.minimum(gg * (n / 2.0) * np.sqrt(beta_r / beta_b) * np.sqrt(2.0 * np.pi / n), ceilings)
    if b_max_overrides is not None:
        b_max = np.asarray(b_max_overrides, dtype=float).copy()

    model = U1Model(
        label=f"u1(N_p={n_p}, n_q={n_q}, g={g}, {basis})",
        n_sites=n_p,
        n_q=n_q,
        h_pos=np.zeros(n**n_p),
        h_mom=np.zeros(n**n_p),
        n_p=n_p,
        g=g,
        basis=basis,
        W=None if basis == "original" else W,
        c_matrix=C,
        cosine_vectors=vectors,
        b_max=b_max,
        beta_r=beta_r,
        beta_b=beta_b,
        ceilings=ceilings,
        rotor_sign=int(rotor_sign),
        meta={"type": "u1"},
    )

    # Magnetic (position-side) diagonal: (N_p+1)/g^2 - sum_t cos(v_t . B)/g^2.
    h_pos = np.full((n,) * n_p, (n_p + 1) / g**2, dtype=float)
    for v in vectors:
        arg = np.zeros((n,) * n_p)
        for p in range(n_p):
            if abs(v[p]) > 1e-15:
                arg = arg + v[p] * _broadcast_site(model.b_grid(p), p, n_p)
        h_pos -= np.cos(arg) / g**2
    # Electric (momentum-side) diagonal: (g^2/2) sum_ij C_ij R_i R_j on the
    # DFT-ordered rotor grids.
    h_mom = np.zeros((n,) * n_p)
    for i in range(n_p):
        ri = _broadcast_site(model.r_grid_fft(i), i, n_p)
        for j in range(n_p):
            if abs(C[i, j]) > 1e-15:
                rj = _broadcast_site(model.r_grid_fft(j), j, n_p)
                h_mom = h_mom + (g**2 / 2.0) * C[i, j] * ri * rj

    model.h_pos = h_pos.reshape(-1)
    model.h_mom = h_mom.reshape(-1)
    return model


def beta_match(model):
    """Diagonal quadratic coefficients, cross terms discarded."""
    return np.sqrt(np.diag(model.c_matrix)), np.sqrt(np.sum(model.cosine_vectors**2, axis=0))


# ----------------------------------------------------------------------
# rescaling and bounds


@dataclass(frozen=True)
class RescaleParams:
    c1: float
    c2: float
    eta: float
    e0: float
    e1: float
    emax: float
    mu: float
    delta: float
    tau_max: float


def rescale(model, eta, e0=None, e1=None, emax_or_bound=None, delta_preset="full"):
    """Affine map of the physical spectrum into [eta, pi - eta].

    ``delta_preset`` picks the gap convention: "full" uses the whole
    rescaled gap, "two_thirds" the (E1 - E0)/1.5 convention.
    """
    if eta >= np.pi / 2.0:
        raise ValueError("eta must be below pi/2")
    if e0 is None or e1 is None or emax_or_bound is None:
        if model is None:
            raise ValueError("need a model or explicit (e0, e1, emax)")
        ev = model.spectrum()
        e0 = float(ev[0]) if e0 is None else e0
        e1 = float(ev[1]) if e1 is None else e1
        emax_or_bound = float(ev[-1]) if emax_or_bound is None else emax_or_bound
    if not emax_or_bound >= e1 > e0:
        raise ValueError("need emax >= e1 > e0")
    c1 = (np.pi - 2.0 * eta) / (emax_or_bound - e0)
    c2 = eta - c1 * e0
    e0_r = c1 * e0 + c2
    e1_r = c1 * e1 + c2
    emax_r = c1 * emax_or_bound + c2
    gap = e1_r - e0_r
    if delta_preset == "full":
        delta = gap
    elif delta_preset == "two_thirds":
        delta = gap / 1.5
    else:
        raise ValueError(f"unknown delta_preset {delta_preset!r}")
    mu = 0.5 * (e0_r + e1_r)
    return RescaleParams(
        c1=c1,
        c2=c2,
        eta=eta,
        e0=e0_r,
        e1=e1_r,
        emax=emax_r,
        mu=mu,
        delta=delta,
        tau_max=_tau_max(eta, mu, delta),
    )


@dataclass(frozen=True)
class SpectralBound:
    emax_upper: float
    delta_lower: float
    per_term: dict


_ENUM_CAP = 2**20


def emax_upper_bound(model, eta=0.05, delta_preset="full"):
    """Largest-entry bound max(H) <= max(H_mom table) + per-term magnetic sum.

    For the gauge models the magnetic side is bounded cosine term by cosine
    term (each enumerated on its own support) and the electric side bilinear
    term by bilinear term; the oscillator reduces to the two table maxima.
    """
    per_term = {}
    if isinstance(model, U1Model):
        g = model.g
        elec = 0.0
        for i in range(model.n_p):
            for j in range(model.n_p):
                cij = model.c_matrix[i, j]
                if abs(cij) < 1e-15:
                    continue
                ri, rj = model.r_grid(i), model.r_grid(j)
                if i == j:
                    m = cij * np.max(ri**2)
                else:
                    cand = [
                        cij * a * b
                        for a in (ri.min(), ri.max())
                        for b in (rj.min(), rj.max())
                    ]
                    m = max(cand)
                elec += (g**2 / 2.0) * m
                per_term[f"electric[{i},{j}]"] = (g**2 / 2.0) * m
        mag = (model.n_p + 1) / g**2
        for t, v in enumerate(model.cosine_vectors):
            sup = [p for p in range(model.n_p) if abs(v[p]) > 1e-15]
            size = (2**model.n_q) ** len(sup)
            if size > _ENUM_CAP:
                raise DimensionError(f"cosine term {t} support too large to enumerate")
            arg = np.zeros((2**model.n_q,) * len(sup))
            for k, p in enumerate(sup):
                arg = arg + v[p] * _broadcast_site(model.b_grid(p), k, len(sup))
            contrib = -np.min(np.cos(arg)) / g**2
            mag += contrib
            per_term[f"magnetic[{t}]"] = contrib
        upper = elec + mag
    else:
        upper = float(np.max(model.h_pos) + np.max(model.h_mom))
        per_term = {"h_pos": float(np.max(model.h_pos)), "h_mom": float(np.max(model.h_mom))}

    e0, e1 = first_energies(model, k=2)
    gap = e1 - e0
    if delta_preset == "two_thirds":
        gap = gap / 1.5
    delta_lower = gap * (np.pi - 2.0 * eta) / (upper - e0)
    return SpectralBound(emax_upper=float(upper), delta_lower=float(delta_lower), per_term=per_term)


# ----------------------------------------------------------------------
# model files


def model_to_json_dict(model):
    doc = {
        "nq": model.n_q,
        "g": model.meta.get("g", getattr(model, "g", None)),
    }
    if isinstance(model, U1Model):
        doc.update(
            type="u1",
            Np=model.n_p,
            g=model.g,
            basis=model.basis,
            W=None if model.W is None else model.W.tolist(),
            electric_cij=model.c_matrix.tolist(),
            cosine_vectors=model.cosine_vectors.tolist(),
            bmax=model.b_max.tolist(),
        )
    else:
        doc.update(type="sho", xmax=model.meta["x_max"])
    return doc


def model_from_json_dict(doc):
    if doc["type"] == "sho":
        return sho_model(doc["nq"], doc["g"], doc["xmax"])
    if doc["type"] != "u1":
        raise ValueError(f"unknown model type {doc['type']!r}")
    W = None if doc.get("W") is None else np.asarray(doc["W"], dtype=float)
    if W is not None and np.max(np.abs(W @ W.T - np.eye(len(W)))) > 1e-12:
        raise ValueError("model file W is not orthogonal")
    cij = np.asarray(doc["electric_cij"], dtype=float)
    if np.max(np.abs(cij - cij.T)) > 1e-12:
        raise ValueError("model file electric_cij is not symmetric")
    basis = doc.get("basis", "original")
    model = u1_model(
        doc["Np"],
        doc["nq"],
        doc["g"],
        basis=basis if basis != "custom" else "weaved",
        W=W,
        b_max_overrides=doc.get("bmax"),
    )
    return model
