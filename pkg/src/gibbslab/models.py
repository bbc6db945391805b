"""Hamiltonian models with spectra normalized into [0, 1].

Three families: the transverse-field Ising model on a small open grid, an
adversarial Hamiltonian whose eigenvalues sit at (i + alpha/2)/2^n, and
random-spectrum Hamiltonians for ensemble statistics.  Every model carries
Hermitian coupling operators with spectral norm at most 1.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from functools import reduce

import numpy as np

from . import numerics
from .errors import ConfigError, PrecisionExceedsDimension, ResamplingBudgetExceeded, SizeExceeded

PAULI_X = np.array([[0, 1], [1, 0]], dtype=complex)
PAULI_Z = np.array([[1, 0], [0, -1]], dtype=complex)
MAX_GRID_SITES = 6
RESAMPLING_BUDGET = 100000


@dataclass
class HamiltonianModel:
    kind: str
    params: dict
    H: np.ndarray
    couplings: list  # list of (name, ndarray)
    scale: float  # lambda_max - lambda_min of the raw Hamiltonian
    shift: float  # lambda_min of the raw Hamiltonian
    # eigen-data known exactly from the construction, if any
    known_eigenvalues: np.ndarray | None = field(default=None, repr=False)
    known_eigenvectors: np.ndarray | None = field(default=None, repr=False)
    _spectrum: numerics.Spectrum | None = field(default=None, repr=False)

    def __post_init__(self):
        numerics.require_hermitian(self.H, what=f"{self.kind} Hamiltonian")
        evals = np.linalg.eigvalsh(self.H)
        if evals.min() < -1e-12 or evals.max() > 1 + 1e-12:
            raise SizeExceeded(
                f"{self.kind} spectrum [{evals.min():.3e}, {evals.max():.3e}] not in [0, 1]"
            )
        for name, S in self.couplings:
            numerics.require_hermitian(S, what=f"coupling {name}")
            if numerics.spectral_norm(S) > 1 + 1e-12:
                raise SizeExceeded(f"coupling {name} has norm > 1")

    @property
    def dim(self) -> int:
        return self.H.shape[0]

    def coupling_matrices(self) -> list:
        return [S for _, S in self.couplings]

    def spectrum(self, cluster_tol: float = 1e-9) -> numerics.Spectrum:
        """Clustered spectrum; synthesized models use their exact eigen-data."""
        if self._spectrum is None:
            if self.known_eigenvalues is not None:
                self._spectrum = _spectrum_from_synthesis(
                    self.known_eigenvalues, self.known_eigenvectors, cluster_tol
                )
            else:
                self._spectrum = numerics.eigh(self.H, cluster_tol)
        return self._spectrum


def _spectrum_from_synthesis(eigenvalues, eigenvectors, cluster_tol) -> numerics.Spectrum:
    order = np.argsort(eigenvalues)
    vals = np.asarray(eigenvalues, dtype=float)[order]
    vecs = np.asarray(eigenvectors, dtype=complex)[:, order]
    clusters: list[list[int]] = [[0]]
    for i in range(1, len(vals)):
        if vals[i] - vals[i - 1] <= cluster_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])
    lams, projs, mults, bases = [], [], [], []
    for idx in clusters:
        block = vecs[:, idx]
        projs.append(block @ numerics.dagger(block))
        lams.append(float(np.mean(vals[idx])))
        mults.append(len(idx))
        bases.append(block)
    return numerics.Spectrum(np.array(lams), projs, np.array(mults), bases)


def _site_operator(op: np.ndarray, site: int, nsites: int) -> np.ndarray:
    factors = [np.eye(2, dtype=complex)] * nsites
    factors[site] = op
    return reduce(np.kron, factors)


def normalize_spectrum(H: np.ndarray) -> tuple[np.ndarray, float, float]:
    """Affinely map the spectrum onto [0, 1]; returns (H', scale, shift).

    scale is lambda_max - lambda_min and shift is lambda_min, so that
    H = scale * H' + shift * I.  A degenerate spectrum maps to the zero
    matrix with scale 0.
    """
    H = np.asarray(H, dtype=complex)
    numerics.require_hermitian(H, what="normalize_spectrum input")
    evals = np.linalg.eigvalsh(H)
    lo, hi = float(evals.min()), float(evals.max())
    if hi - lo < 1e-14:
        return np.zeros_like(H), 0.0, lo
    out = (H - lo * np.eye(H.shape[0])) / (hi - lo)
    return out, hi - lo, lo


def tfim(n1: int, n2: int, v: float) -> HamiltonianModel:
    """Transverse-field Ising model on an open n1 x n2 grid, rescaled to [0, 1].

    H_raw = sum_<ij> Z_i Z_j + v sum_i X_i over nearest neighbors; couplings
    are every single-site X and Z.
    """
    nsites = n1 * n2
    if nsites < 1 or nsites > MAX_GRID_SITES:
        raise SizeExceeded(f"grid {n1}x{n2} has {nsites} sites; desk scale caps at {MAX_GRID_SITES}")
    dim = 2**nsites
    site = lambda r, c: r * n2 + c
    H_raw = np.zeros((dim, dim), dtype=complex)
    for r in range(n1):
        for c in range(n2):
            if c + 1 < n2:
                H_raw += _site_operator(PAULI_Z, site(r, c), nsites) @ _site_operator(
                    PAULI_Z, site(r, c + 1), nsites
                )
            if r + 1 < n1:
                H_raw += _site_operator(PAULI_Z, site(r, c), nsites) @ _site_operator(
                    PAULI_Z, site(r + 1, c), nsites
                )
    for k in range(nsites):
        H_raw += v * _site_operator(PAULI_X, k, nsites)
    H, scale, shift = normalize_spectrum(H_raw)
    couplings = [(f"X_{k}", _site_operator(PAULI_X, k, nsites)) for k in range(nsites)]
    couplings += [(f"Z_{k}", _site_operator(PAULI_Z, k, nsites)) for k in range(nsites)]
    return HamiltonianModel(
        kind="tfim",
        params={"n1": n1, "n2": n2, "v": v},
        H=H,
        couplings=couplings,
        scale=scale,
        shift=shift,
    )


def haar_unitary(dim: int, rng: np.random.Generator) -> np.ndarray:
    """Haar-random unitary via QR of a complex Ginibre matrix with phase fix."""
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    q, r = np.linalg.qr(g)
    phases = np.diag(r) / np.abs(np.diag(r))
    return q * phases


def random_hermitian_coupling(dim: int, rng: np.random.Generator) -> np.ndarray:
    g = rng.normal(size=(dim, dim)) + 1j * rng.normal(size=(dim, dim))
    S = (g + numerics.dagger(g)) / 2
    return S / numerics.spectral_norm(S)


def adversarial(q: int, n: int, alpha: float, seed: int) -> HamiltonianModel:
    """Spectrum placed at (i + alpha/2)/2^n on q qubits; alpha = 1 is maximally ambiguous.

    Each of the 2^n levels gets multiplicity 2^(q-n) and a Haar-random
    eigenbasis; the single coupling is a seeded random Hermitian with norm 1.
    The Hamiltonian is synthesized from its spectrum, so the eigenvalues are
    exact by construction and no rescaling is applied.
    """
    if 2**n > 2**q:
        raise PrecisionExceedsDimension(f"2^{n} levels do not fit in 2^{q} dimensions")
    if not 0 <= alpha <= 1:
        raise ValueError(f"adversariality alpha={alpha} outside [0, 1]")
    dim = 2**q
    mult = 2 ** (q - n)
    levels = (np.arange(2**n) + alpha / 2) / 2**n
    eigenvalues = np.repeat(levels, mult)
    rng = np.random.default_rng(seed)
    U = haar_unitary(dim, rng)
    H = (U * eigenvalues) @ numerics.dagger(U)
    H = (H + numerics.dagger(H)) / 2
    S = random_hermitian_coupling(dim, rng)
    return HamiltonianModel(
        kind="adversarial",
        params={"q": q, "n": n, "alpha": alpha, "seed": seed},
        H=H,
        couplings=[("S", S)],
        scale=1.0,
        shift=0.0,
        known_eigenvalues=eigenvalues,
        known_eigenvectors=U,
    )


def random_diag(dim: int, seed: int, min_gap: float = 0.0) -> HamiltonianModel:
    """Random Hamiltonian: uniform eigenvalues on [0, 1], Haar basis, one random coupling.

    Whole draws are resampled until all pairwise eigenvalue separations reach
    min_gap (vacuous at min_gap = 0).
    """
    if dim < 2:
        raise SizeExceeded(f"random_diag needs dim >= 2, got {dim}")
    rng = np.random.default_rng(seed)
    eigenvalues = None
    for _ in range(RESAMPLING_BUDGET):
        draw = np.sort(rng.uniform(0.0, 1.0, size=dim))
        if min_gap <= 0 or np.min(np.diff(draw)) >= min_gap:
            eigenvalues = draw
            break
    if eigenvalues is None:
        raise ResamplingBudgetExceeded(
            f"no draw with pairwise separation >= {min_gap} in {RESAMPLING_BUDGET} attempts"
        )
    U = haar_unitary(dim, rng)
    H = (U * eigenvalues) @ numerics.dagger(U)
    H = (H + numerics.dagger(H)) / 2
    S = random_hermitian_coupling(dim, rng)
    return HamiltonianModel(
        kind="random_diag",
        params={"dim": dim, "seed": seed, "min_gap": min_gap},
        H=H,
        couplings=[("S", S)],
        scale=1.0,
        shift=0.0,
        known_eigenvalues=eigenvalues,
        known_eigenvectors=U,
    )


def from_config(params: dict) -> HamiltonianModel:
    """Build a model from a config dictionary with a 'kind' discriminator."""
    kind = params.get("kind")
    if kind == "tfim":
        return tfim(int(params["n1"]), int(params["n2"]), float(params["v"]))
    if kind == "adversarial":
        return adversarial(
            int(params["q"]), int(params["n"]), float(params["alpha"]), int(params["seed"])
        )
    if kind == "random_diag":
        return random_diag(
            int(params["dim"]), int(params["seed"]), float(params.get("min_gap", 0.0))
        )
    raise ConfigError(f"unknown model kind {kind!r}")
