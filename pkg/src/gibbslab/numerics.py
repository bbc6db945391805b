"""Dense complex linear algebra for Lindbladian thermalization studies.

Everything in this module is exact dense numerics: Hermitian
eigendecompositions clustered into spectral projectors, operator functions
built by functional calculus, superoperators assembled from jump operators,
matrix-exponential time evolution, stationary states, spectral gaps, and the
norms and fidelities used to compare states.

Vectorization convention: column stacking throughout, ``vec(X)[i + d*j] =
X[i, j]``, so that ``vec(A X B) = (B^T (x) A) vec(X)``.  Superoperator
matrices act on column-stacked density matrices and are never meaningful
under any other stacking.
"""

from __future__ import annotations

import logging
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg

from .errors import (
    DegenerateKernel,
    DimensionMismatch,
    DomainError,
    EigensolverFailure,
    ExpmFailure,
    InvalidState,
    InvalidSuperoperator,
    NonHermitianInput,
    NotPSD,
    NumericalDrift,
)

logger = logging.getLogger(__name__)

HERMITICITY_TOL = 1e-12
TRACE_TOL = 1e-10
EIGENVALUE_FLOOR = -1e-10
KERNEL_BAND = 1e-9
DRIFT_BUDGET = 1e-8
EXPM_NORM_BUDGET = 1e6


# ---------------------------------------------------------------------------
# vectorization helpers
# ---------------------------------------------------------------------------

def vec(mat: np.ndarray) -> np.ndarray:
    """Column-stack a d x d matrix into a d^2 vector."""
    return np.asarray(mat).reshape(-1, order="F")


def devec(v: np.ndarray) -> np.ndarray:
    """Inverse of :func:`vec`."""
    v = np.asarray(v)
    d = int(round(np.sqrt(v.size)))
    if d * d != v.size:
        raise DimensionMismatch(f"vector of length {v.size} is not a square matrix")
    return v.reshape((d, d), order="F")


def dagger(mat: np.ndarray) -> np.ndarray:
    return np.conj(mat.T)


def herm_defect(mat: np.ndarray) -> float:
    """Max-entry deviation of a matrix from its Hermitian part."""
    return float(np.max(np.abs(mat - dagger(mat)))) if mat.size else 0.0


def require_hermitian(mat: np.ndarray, tol: float = HERMITICITY_TOL, what: str = "matrix") -> None:
    defect = herm_defect(mat)
    if defect > tol:
        raise NonHermitianInput(f"{what} deviates from Hermiticity by {defect:.3e} (tol {tol:.1e})")


def spectral_norm(mat: np.ndarray) -> float:
    return float(np.linalg.norm(mat, 2))


def trace_norm(mat: np.ndarray) -> float:
    """Sum of the singular values."""
    try:
        return float(np.sum(scipy.linalg.svdvals(mat)))
    except np.linalg.LinAlgError as exc:  # pragma: no cover
        raise EigensolverFailure(f"svd failed: {exc}") from exc


def trace_distance(a: "DensityMatrix | np.ndarray", b: "DensityMatrix | np.ndarray") -> float:
    """Trace norm of the difference of two operators (not halved)."""
    return trace_norm(as_matrix(a) - as_matrix(b))


def as_matrix(obj) -> np.ndarray:
    """Accept DensityMatrix or raw ndarray and return the ndarray."""
    if isinstance(obj, DensityMatrix):
        return obj.matrix
    return np.asarray(obj, dtype=complex)


# ---------------------------------------------------------------------------
# density matrices
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, PSD, unit-trace complex matrix.

    Validation happens at construction: Hermiticity to 1e-12 in max-entry
    norm, unit trace to 1e-10, and minimum eigenvalue >= -1e-10.
    """

    matrix: np.ndarray

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        if mat.ndim != 2 or mat.shape[0] != mat.shape[1]:
            raise InvalidState(f"density matrix must be square, got shape {mat.shape}")
        if not np.all(np.isfinite(mat)):
            raise InvalidState("density matrix has non-finite entries")
        defect = herm_defect(mat)
        if defect > HERMITICITY_TOL:
            raise InvalidState(f"density matrix not Hermitian: defect {defect:.3e}")
        tr = complex(np.trace(mat))
        if abs(tr - 1.0) > TRACE_TOL:
            raise InvalidState(f"density matrix trace {tr} is not 1 within {TRACE_TOL:.1e}")
        evals = np.linalg.eigvalsh((mat + dagger(mat)) / 2)
        if evals.min() < EIGENVALUE_FLOOR:
            raise InvalidState(f"density matrix min eigenvalue {evals.min():.3e} < {EIGENVALUE_FLOOR:.1e}")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    @staticmethod
    def pure(state: np.ndarray) -> "DensityMatrix":
        v = np.asarray(state, dtype=complex).reshape(-1)
        v = v / np.linalg.norm(v)
        return DensityMatrix(np.outer(v, v.conj()))

    @staticmethod
    def basis_state(dim: int, index: int) -> "DensityMatrix":
        v = np.zeros(dim, dtype=complex)
        v[index] = 1.0
        return DensityMatrix.pure(v)

    @staticmethod
    def maximally_mixed(dim: int) -> "DensityMatrix":
        return DensityMatrix(np.eye(dim, dtype=complex) / dim)

    @staticmethod
    def random(dim: int, rng: np.random.Generator, rank: int | None = None) -> "DensityMatrix":
        """Wishart-distributed random state of the given rank (full by default)."""
        r = dim if rank is None else rank
        g = rng.normal(size=(dim, r)) + 1j * rng.normal(size=(dim, r))
        w = g @ dagger(g)
        return DensityMatrix(w / np.trace(w))


def _clean_density(mat: np.ndarray, where: str) -> DensityMatrix:
    """Re-Hermitize and trace-renormalize, logging the drift.

    Raises NumericalDrift if either correction exceeds the 1e-8 budget;
    below that the corrections are silent floating-point hygiene.
    """
    herm_drift = herm_defect(mat) / 2
    sym = (mat + dagger(mat)) / 2
    tr = float(np.real(np.trace(sym)))
    trace_drift = abs(tr - 1.0)
    if herm_drift > DRIFT_BUDGET or trace_drift > DRIFT_BUDGET:
        raise NumericalDrift(
            f"{where}: hermiticity drift {herm_drift:.3e}, trace drift {trace_drift:.3e} "
            f"exceed budget {DRIFT_BUDGET:.1e}"
        )
    if herm_drift > 0 or trace_drift > 0:
        logger.debug("%s: drift herm=%.3e trace=%.3e", where, herm_drift, trace_drift)
    return DensityMatrix(sym / tr)


# ---------------------------------------------------------------------------
# spectra
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Spectrum:
    """Clustered eigendecomposition of a Hamiltonian with spectrum in [0, 1].

    ``eigenvalues`` are strictly increasing after degeneracy clustering,
    ``projectors[i]`` projects onto the eigenspace of ``eigenvalues[i]`` and
    has trace ``multiplicities[i]``.  ``bases[i]`` is a dim x mult_i matrix
    of orthonormal eigenvectors spanning that eigenspace.
    """

    eigenvalues: np.ndarray
    projectors: list = field(repr=False)
    multiplicities: np.ndarray
    bases: list = field(repr=False, default=None)

    def __post_init__(self):
        object.__setattr__(self, "eigenvalues", np.asarray(self.eigenvalues, dtype=float))
        object.__setattr__(self, "multiplicities", np.asarray(self.multiplicities, dtype=int))
        if self.bases is None:
            blocks = []
            for proj, mult in zip(self.projectors, self.multiplicities):
                vals, vecs = np.linalg.eigh(proj)
                blocks.append(vecs[:, np.argsort(vals)[::-1][:mult]])
            object.__setattr__(self, "bases", blocks)

    @property
    def dim(self) -> int:
        return self.projectors[0].shape[0]

    def hamiltonian(self) -> np.ndarray:
        """Reassemble sum_i lambda_i Pi_i."""
        out = np.zeros((self.dim, self.dim), dtype=complex)
        for lam, proj in zip(self.eigenvalues, self.projectors):
            out += lam * proj
        return out

    def validate(self, tol_resolution: float = 1e-10, tol_trace: float = 1e-8) -> None:
        total = sum(self.projectors)
        if np.max(np.abs(total - np.eye(self.dim))) > tol_resolution:
            raise EigensolverFailure("projectors do not resolve the identity")
        for i, pi in enumerate(self.projectors):
            if np.max(np.abs(pi @ pi - pi)) > tol_resolution:
                raise EigensolverFailure(f"projector {i} is not idempotent")
            if abs(np.trace(pi).real - self.multiplicities[i]) > tol_trace:
                raise EigensolverFailure(f"projector {i} trace does not match multiplicity")
        if np.any(np.diff(self.eigenvalues) <= 0):
            raise EigensolverFailure("clustered eigenvalues are not strictly increasing")


def eigh(H: np.ndarray, cluster_tol: float = 1e-9) -> Spectrum:
    """Eigendecompose a Hermitian matrix with spectrum in [0, 1].

    Raw eigenvalues within ``cluster_tol`` of each other (by chaining) are
    merged into a single eigenspace projector, so degenerate levels come out
    as one entry with the appropriate multiplicity.
    """
    H = np.asarray(H, dtype=complex)
    require_hermitian(H, what="eigh input")
    try:
        raw_vals, vecs = np.linalg.eigh(H)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"eigh did not converge: {exc}") from exc
    if raw_vals.min() < -1e-9 or raw_vals.max() > 1 + 1e-9:
        raise DomainError(
            f"spectrum [{raw_vals.min():.3e}, {raw_vals.max():.3e}] not contained in [0, 1]; "
            "normalize first (models.normalize_spectrum)"
        )
    raw_vals = np.clip(raw_vals, 0.0, 1.0)

    clusters: list[list[int]] = [[0]]
    for i in range(1, len(raw_vals)):
        if raw_vals[i] - raw_vals[i - 1] <= cluster_tol:
            clusters[-1].append(i)
        else:
            clusters.append([i])

    eigenvalues, projectors, mults, bases = [], [], [], []
    for idx in clusters:
        block = vecs[:, idx]
        projectors.append(block @ dagger(block))
        eigenvalues.append(float(np.mean(raw_vals[idx])))
        mults.append(len(idx))
        bases.append(block)
    return Spectrum(np.array(eigenvalues), projectors, np.array(mults), bases)


def apply_function(spectrum: Spectrum, f) -> np.ndarray:
    """Functional calculus: return sum_i f(lambda_i) Pi_i.

    ``f`` may be a SpectralProfile (evaluated through its domain checks) or
    any scalar callable accepting an ndarray of points in [0, 1].
    """
    values = np.asarray(f(spectrum.eigenvalues), dtype=complex)
    if not np.all(np.isfinite(values)):
        raise DomainError("profile evaluated to non-finite values on the spectrum")
    out = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
    for val, proj in zip(values, spectrum.projectors):
        out += val * proj
    return out


def gibbs_state(spectrum: Spectrum, beta: float) -> DensityMatrix:
    """Thermal state exp(-beta H)/Z built from the clustered spectrum."""
    shifted = spectrum.eigenvalues - spectrum.eigenvalues.min()
    weights = np.exp(-beta * shifted)
    z = float(np.sum(weights * spectrum.multiplicities))
    out = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
    for w, proj in zip(weights / z, spectrum.projectors):
        out += w * proj
    return DensityMatrix(out)


# ---------------------------------------------------------------------------
# superoperators
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Superoperator:
    """A d^2 x d^2 matrix acting on column-stacked density matrices."""

    dim: int
    matrix: np.ndarray = field(repr=False)

    def __post_init__(self):
        mat = np.asarray(self.matrix, dtype=complex)
        object.__setattr__(self, "matrix", mat)
        d2 = self.dim * self.dim
        if mat.shape != (d2, d2):
            raise DimensionMismatch(f"superoperator shape {mat.shape} != ({d2}, {d2})")

    def apply(self, rho) -> np.ndarray:
        return devec(self.matrix @ vec(as_matrix(rho)))

    def validate(self, rng_seed: int = 7) -> None:
        """Check the generator invariants: trace annihilation and Hermiticity preservation."""
        d = self.dim
        trace_row = vec(np.eye(d)).conj() @ self.matrix
        if np.max(np.abs(trace_row)) > 1e-8:
            raise InvalidSuperoperator(
                f"vec(I)^dag L = {np.max(np.abs(trace_row)):.3e} != 0; generator is not trace-annihilating"
            )
        rng = np.random.default_rng(rng_seed)
        g = rng.normal(size=(d, d)) + 1j * rng.normal(size=(d, d))
        x = (g + dagger(g)) / 2
        lx = self.apply(x)
        if herm_defect(lx) > 1e-10:
            raise InvalidSuperoperator("superoperator does not preserve Hermiticity")


def lindbladian_from_jumps(jumps: list, dim: int | None = None) -> Superoperator:
    """Assemble the GKLS superoperator matrix for a list of jump operators.

    Under column stacking each jump L contributes
    ``conj(L) (x) L - (I (x) L^dag L + (L^dag L)^T (x) I) / 2``.
    An empty jump list yields the zero superoperator (dim required then).
    """
    mats = [np.asarray(L, dtype=complex) for L in jumps]
    if not mats:
        if dim is None:
            raise DimensionMismatch("empty jump list needs an explicit dim")
        return zero_superoperator(dim)
    d = mats[0].shape[0]
    for L in mats:
        if L.shape != (d, d):
            raise DimensionMismatch(f"jump shape {L.shape} != ({d}, {d})")
    stack = np.stack(mats)
    # sum_k kron(conj(L_k), L_k) in one contraction
    total = np.einsum("aij,akl->ikjl", stack.conj(), stack, optimize=True).reshape(d * d, d * d)
    ldl = np.sum(np.conj(np.transpose(stack, (0, 2, 1))) @ stack, axis=0)
    eye = np.eye(d, dtype=complex)
    total -= 0.5 * (np.kron(eye, ldl) + np.kron(ldl.T, eye))
    return Superoperator(d, total)


def zero_superoperator(dim: int) -> Superoperator:
    return Superoperator(dim, np.zeros((dim * dim, dim * dim), dtype=complex))


def evolve(L: Superoperator, sigma: DensityMatrix, t: float) -> DensityMatrix:
    """Apply exp(t L) to a state by dense scaling-and-squaring."""
    if t < 0:
        raise ExpmFailure(f"evolution time must be nonnegative, got {t}")
    if sigma.dim != L.dim:
        raise DimensionMismatch(f"state dim {sigma.dim} != superoperator dim {L.dim}")
    scale = t * np.max(np.abs(L.matrix)) if L.matrix.size else 0.0
    if scale > EXPM_NORM_BUDGET:
        raise ExpmFailure(f"t*|L| = {scale:.3e} exceeds the expm norm budget {EXPM_NORM_BUDGET:.1e}")
    if t == 0:
        return sigma
    prop = scipy.linalg.expm(t * L.matrix)
    out = devec(prop @ vec(sigma.matrix))
    return _clean_density(out, where=f"evolve(t={t:g})")


def propagator(L: Superoperator, t: float) -> np.ndarray:
    """Dense matrix of exp(t L); useful when many states share one time."""
    return scipy.linalg.expm(t * L.matrix)


def superop_eigenvalues(L: Superoperator) -> np.ndarray:
    try:
        return np.linalg.eigvals(L.matrix)
    except np.linalg.LinAlgError as exc:
        raise EigensolverFailure(f"superoperator eigensolve failed: {exc}") from exc


def kernel_dimension(L: Superoperator, band: float = KERNEL_BAND) -> int:
    """Number of superoperator eigenvalues inside the kernel band |mu| <= band."""
    return int(np.sum(np.abs(superop_eigenvalues(L)) <= band))


def stationary_state(L: Superoperator, band: float = KERNEL_BAND) -> DensityMatrix:
    """Unique fixed point of a mixing generator.

    The kernel must be one-dimensional: the second-smallest eigenvalue
    magnitude has to exceed the kernel band, otherwise DegenerateKernel is
    raised.  The state itself is extracted from the most accurate null
    vector (smallest right singular vector), Hermitized and normalized.
    """
    mags = np.sort(np.abs(superop_eigenvalues(L)))
    if len(mags) > 1 and mags[1] <= band:
        raise DegenerateKernel(
            f"second-smallest |eigenvalue| {mags[1]:.3e} <= {band:.1e}: kernel is not one-dimensional"
        )
    _, _, vh = np.linalg.svd(L.matrix)
    candidate = devec(vh[-1].conj())
    candidate = (candidate + dagger(candidate)) / 2
    tr = float(np.real(np.trace(candidate)))
    if abs(tr) < 1e-12:
        raise DegenerateKernel("kernel vector is traceless; no stationary state in the kernel")
    rho = candidate / tr
    evals = np.linalg.eigvalsh(rho)
    if evals.min() < -1e-8:
        raise DegenerateKernel(f"kernel state has eigenvalue {evals.min():.3e}; generator is not mixing")
    rho = _psd_project(rho)
    residual = trace_norm(L.apply(rho))
    if residual > 1e-9:
        raise EigensolverFailure(f"stationary-state residual {residual:.3e} > 1e-9")
    return DensityMatrix(rho)


def _psd_project(mat: np.ndarray) -> np.ndarray:
    """Clip eigenvalues below zero (tiny negatives only) and renormalize."""
    vals, vecs = np.linalg.eigh(mat)
    vals = np.clip(vals, 0.0, None)
    out = (vecs * vals) @ dagger(vecs)
    return out / np.real(np.trace(out))


def spectral_gap(L: Superoperator, band: float = KERNEL_BAND) -> float:
    """Negated largest real part outside the kernel band; 0 if nothing is outside."""
    mus = superop_eigenvalues(L)
    outside = mus[np.abs(mus) > band]
    if outside.size == 0:
        return 0.0
    return max(0.0, -float(np.max(outside.real)))


# ---------------------------------------------------------------------------
# fidelity
# ---------------------------------------------------------------------------

def _psd_sqrt(mat: np.ndarray, tol: float = 1e-8) -> np.ndarray:
    vals, vecs = np.linalg.eigh(mat)
    if vals.min() < -tol:
        raise NotPSD(f"matrix has eigenvalue {vals.min():.3e}; not PSD")
    vals = np.clip(vals, 0.0, None)
    return (vecs * np.sqrt(vals)) @ dagger(vecs)


def fidelity(rho, sigma) -> float:
    """Uhlmann fidelity F = || sqrt(rho) sqrt(sigma) ||_1 (not squared)."""
    a = as_matrix(rho)
    b = as_matrix(sigma)
    if a.shape != b.shape:
        raise DimensionMismatch(f"fidelity shapes {a.shape} vs {b.shape}")
    require_hermitian(a, tol=1e-10, what="fidelity arg 1")
    require_hermitian(b, tol=1e-10, what="fidelity arg 2")
    return trace_norm(_psd_sqrt(a) @ _psd_sqrt(b))
