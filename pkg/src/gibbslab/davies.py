"""Davies generators, their promised variants, gaps, mixing times, and the
jump-operator perturbation checks.

A Davies generator couples a system to a thermal bath through coupling
operators resolved into fixed energy-difference blocks: the jump operator at
Bohr frequency omega is sqrt(G(omega)) sum_{lam_i - lam_j = omega}
Pi_i S Pi_j.  The detailed-balance weight G makes the thermal state
stationary.  The promised variant replaces eigenvalues by the interval
midpoints of a rounding promise and sandwiches the couplings between
attenuation operators so the dynamics never leave the promised subspace.

Sign convention: with jump blocks indexed so omega > 0 raises energy, the
Gibbs state exp(-beta H)/Z is stationary iff G(omega) = exp(-beta omega)
G(-omega).  That is the convention implemented and verified here.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import numerics, specfun
from .errors import (
    DegenerateKernel,
    DimensionMismatch,
    EnumerationMismatch,
    NotMixing,
)
from .models import HamiltonianModel
from .numerics import DensityMatrix, Spectrum, Superoperator, dagger
from .promises import PromiseFamily, RoundingPromise

BOHR_TOL = 1e-9
JUMP_NORM_TOL = 1e-9


# ---------------------------------------------------------------------------
# filter functions
# ---------------------------------------------------------------------------

def filter_value(kind: str, beta: float, omega) -> np.ndarray:
    """Detailed-balance filter weight G(omega) with G(w) = e^{-beta w} G(-w).

    metropolis: min(1, e^{-beta w}).  glauber: e^{-beta w / 2} normalized to
    peak at 1 over the Bohr-frequency range [-1, 1], i.e. e^{-beta (w+1)/2}.
    """
    if beta < 0:
        raise ValueError(f"inverse temperature beta={beta} must be nonnegative")
    w = np.asarray(omega, dtype=float)
    if kind == "metropolis":
        out = np.minimum(1.0, np.exp(-beta * w))
    elif kind == "glauber":
        out = np.exp(-beta * (w + 1.0) / 2.0)
    else:
        raise ValueError(f"unknown filter kind {kind!r}")
    return out if np.ndim(omega) else float(out)


@dataclass(frozen=True)
class FilterFunction:
    kind: str
    beta: float

    def __call__(self, omega):
        return filter_value(self.kind, self.beta, omega)


# ---------------------------------------------------------------------------
# Lindbladians
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class Lindbladian:
    """Jump operators tagged by frequency plus the assembled superoperator."""

    jumps: tuple  # ((nu, matrix), ...)
    superop: Superoperator
    metadata: dict = field(default_factory=dict)

    def __post_init__(self):
        slack = float(self.metadata.get("jump_norm_slack", 0.0))
        for nu, L in self.jumps:
            norm = numerics.spectral_norm(L)
            if norm > 1.0 + JUMP_NORM_TOL + slack:
                raise DimensionMismatch(
                    f"jump at nu={nu:g} has norm {norm:.12f} > 1 (+{slack:g} slack)"
                )

    @property
    def dim(self) -> int:
        return self.superop.dim

    def frequencies(self) -> np.ndarray:
        return np.array([nu for nu, _ in self.jumps])

    def apply(self, rho) -> np.ndarray:
        return self.superop.apply(rho)


def _assemble(jumps: list, dim: int, metadata: dict) -> Lindbladian:
    mats = [L for _, L in jumps]
    superop = (
        numerics.lindbladian_from_jumps(mats) if mats else numerics.zero_superoperator(dim)
    )
    return Lindbladian(jumps=tuple(jumps), superop=superop, metadata=metadata)


def _cluster_values(values: np.ndarray, tol: float) -> list:
    """Chain-cluster a 1d array; returns (representative, index list) pairs."""
    order = np.argsort(values)
    clusters: list[list[int]] = [[order[0]]]
    for idx in order[1:]:
        if values[idx] - values[clusters[-1][-1]] <= tol:
            clusters[-1].append(idx)
        else:
            clusters.append([idx])
    return [(float(np.mean(values[c])), c) for c in clusters]


def ideal_davies(
    model: HamiltonianModel,
    filt: FilterFunction,
    bohr_tol: float = BOHR_TOL,
) -> Lindbladian:
    """Davies generator of the model: one jump per Bohr frequency and coupling."""
    spectrum = model.spectrum()
    lams = spectrum.eigenvalues
    n = len(lams)
    diffs = (lams[:, None] - lams[None, :]).reshape(-1)
    pairs = [(i, j) for i in range(n) for j in range(n)]
    jumps = []
    for nu, members in _cluster_values(diffs, bohr_tol):
        g = math.sqrt(filter_value(filt.kind, filt.beta, nu))
        for _, S in model.couplings:
            block = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
            for flat in members:
                i, j = pairs[flat]
                block += spectrum.projectors[i] @ S @ spectrum.projectors[j]
            if numerics.spectral_norm(block) > 1e-14:
                jumps.append((nu, g * block))
    return _assemble(
        jumps,
        spectrum.dim,
        {"source": "ideal", "filter": filt, "model": model.kind},
    )


def promised_eigenspace_projectors(spectrum: Spectrum, promise: RoundingPromise) -> list:
    """P_x = sum of eigenspace projectors with eigenvalue in interval x."""
    out = []
    for x in range(promise.s):
        a, b = promise.intervals[x]
        block = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
        for lam, proj in zip(spectrum.eigenvalues, spectrum.projectors):
            if a <= lam <= b:
                block += proj
        out.append(block)
    return out


def promised_subspace_basis(spectrum: Spectrum, promise: RoundingPromise) -> np.ndarray:
    """Orthonormal columns spanning the promised subspace."""
    blocks = [
        basis
        for lam, basis in zip(spectrum.eigenvalues, spectrum.bases)
        if promise.contains(float(lam))
    ]
    if not blocks:
        return np.zeros((spectrum.dim, 0), dtype=complex)
    return np.hstack(blocks)


def promised_jumps(
    model: HamiltonianModel,
    filt: FilterFunction,
    promise: RoundingPromise,
    gamma: float,
    delta_leak: float = 1e-8,
    mode: str = "exact",
    delta_est: float | None = None,
    bohr_tol: float = BOHR_TOL,
    attenuation: specfun.SpectralProfile | None = None,
) -> tuple:
    """Jump operators of the promised Davies generator, plus their metadata."""
    spectrum = model.spectrum()
    if delta_est is None:
        delta_est = delta_leak
    profile = attenuation
    if profile is None:
        profile = specfun.attenuation_profile(promise, gamma, delta_leak, mode)
    A = numerics.apply_function(spectrum, profile)
    couplings = [(name, A @ S @ A) for name, S in model.couplings]

    if mode == "exact":
        blocks = promised_eigenspace_projectors(spectrum, promise)
        slack = 0.0
    else:
        bits = specfun.bit_projector_profiles(promise, delta_est, mode)
        blocks = [
            numerics.apply_function(spectrum, bits.interval_profile(x))
            for x in range(promise.s)
        ]
        slack = promise.s**2 * (2 * delta_est + delta_leak)

    mids = promise.midpoints
    s = promise.s
    diffs = (mids[:, None] - mids[None, :]).reshape(-1)
    pairs = [(x, y) for x in range(s) for y in range(s)]
    jumps = []
    for nu, members in _cluster_values(diffs, bohr_tol):
        g = math.sqrt(filter_value(filt.kind, filt.beta, nu))
        for name, S in couplings:
            block = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
            for flat in members:
                x, y = pairs[flat]
                block += blocks[x] @ S @ blocks[y]
            jumps.append((nu, g * block))
    metadata = {
        "source": "promised",
        "mode": mode,
        "filter": filt,
        "model": model.kind,
        "gamma": gamma,
        "delta_leak": delta_leak,
        "delta_est": delta_est,
        "promise": promise,
        "jump_norm_slack": slack,
    }
    return jumps, metadata


def promised_davies(
    model: HamiltonianModel,
    filt: FilterFunction,
    promise: RoundingPromise,
    gamma: float,
    delta_leak: float = 1e-8,
    mode: str = "exact",
    delta_est: float | None = None,
    bohr_tol: float = BOHR_TOL,
    attenuation: specfun.SpectralProfile | None = None,
) -> Lindbladian:
    """Davies generator confined to the promised subspace of a rounding promise.

    Couplings are conjugated by the attenuation operator A (a spectral
    function that vanishes off the promise), Bohr frequencies are midpoint
    differences, and the frequency blocks use the promised eigenspace
    projectors.  In exact mode those are true projectors and the generator
    acts as zero off the promised subspace; in poly mode both A and the
    projectors come from polynomial profiles with plateau errors delta_leak
    and delta_est.
    """
    jumps, metadata = promised_jumps(
        model, filt, promise, gamma, delta_leak, mode, delta_est, bohr_tol, attenuation
    )
    return _assemble(jumps, model.dim, metadata)


def restricted_superoperator(jumps, basis: np.ndarray) -> Superoperator:
    """Compress a generator onto the block spanned by the basis columns.

    ``jumps`` is a (nu, matrix) list or a Lindbladian.  Valid when the jumps
    map the block into itself (exact promised mode); used to strip the
    untouched complement before gap computations.
    """
    if isinstance(jumps, Lindbladian):
        jumps = jumps.jumps
    k = basis.shape[1]
    if k == 0:
        raise DegenerateKernel("cannot restrict to an empty subspace")
    restricted = [dagger(basis) @ Lnu @ basis for _, Lnu in jumps]
    restricted = [Lr for Lr in restricted if numerics.spectral_norm(Lr) > 1e-14]
    if not restricted:
        return numerics.zero_superoperator(k)
    return numerics.lindbladian_from_jumps(restricted)


# ---------------------------------------------------------------------------
# fixed points, gaps, mixing
# ---------------------------------------------------------------------------

def fixed_point_residual(L: Lindbladian, rho) -> float:
    """Trace norm of L(rho); zero iff rho is stationary."""
    mat = numerics.as_matrix(rho)
    if mat.shape[0] != L.dim:
        raise DimensionMismatch(f"state dim {mat.shape[0]} != generator dim {L.dim}")
    return numerics.trace_norm(L.apply(mat))


@dataclass(frozen=True)
class GapReport:
    gap: float
    kernel_dim: int
    stationary: DensityMatrix | None
    residual: float


def gap_report(superop: Superoperator) -> GapReport:
    gap = numerics.spectral_gap(superop)
    kdim = numerics.kernel_dimension(superop)
    if kdim == 1:
        rho = numerics.stationary_state(superop)
        residual = numerics.trace_norm(superop.apply(rho))
        return GapReport(gap, kdim, rho, residual)
    return GapReport(gap, kdim, None, math.nan)


def promised_gap_report(
    model: HamiltonianModel,
    filt: FilterFunction,
    promise: RoundingPromise,
    gamma: float,
) -> GapReport:
    """Gap data of the exact promised generator on its promised block.

    The full-space generator acts as zero on the complement, which would
    contribute spurious kernel directions; restricting to the promised block
    removes them before the eigensolve.  The jumps preserve the block, so
    the restricted residual equals the full-space one.
    """
    jumps, _ = promised_jumps(model, filt, promise, gamma, mode="exact")
    basis = promised_subspace_basis(model.spectrum(), promise)
    if basis.shape[1] == 0:
        raise DegenerateKernel("promise excludes every eigenvalue")
    restricted = restricted_superoperator(jumps, basis)
    rep = gap_report(restricted)
    if rep.stationary is None:
        return rep
    lifted = basis @ rep.stationary.matrix @ dagger(basis)
    rho = DensityMatrix(lifted)
    return GapReport(rep.gap, rep.kernel_dim, rho, rep.residual)


DEFAULT_PROBE_SEED = 1234


def default_probes(dim: int, seed: int = DEFAULT_PROBE_SEED) -> list:
    """Basis states, the maximally mixed state, and three seeded random states."""
    rng = np.random.default_rng(seed)
    probes = [DensityMatrix.basis_state(dim, i) for i in range(dim)]
    probes.append(DensityMatrix.maximally_mixed(dim))
    probes.extend(DensityMatrix.random(dim, rng) for _ in range(3))
    return probes


def mixing_time(
    L: Lindbladian,
    target: DensityMatrix,
    eps: float,
    probes: list | None = None,
) -> float:
    """Smallest t (on a doubling-then-bisection grid) with max_probe
    || e^{tL}(sigma) - target ||_1 <= eps."""
    if numerics.kernel_dimension(L.superop) != 1:
        raise NotMixing("generator kernel is not one-dimensional")
    if probes is None:
        probes = default_probes(L.dim)
    vecs = np.column_stack([numerics.vec(p.matrix) for p in probes])
    tvec = numerics.vec(target.matrix)

    def worst(t: float) -> float:
        prop = numerics.propagator(L.superop, t)
        evolved = prop @ vecs
        return max(
            numerics.trace_norm(numerics.devec(evolved[:, i]) - numerics.devec(tvec))
            for i in range(evolved.shape[1])
        )

    if worst(0.0) <= eps:
        return 0.0
    t = 1e-3
    for _ in range(100):
        if worst(t) <= eps:
            break
        t *= 2
    else:
        raise NotMixing(f"no mixing within the doubling budget (eps={eps})")
    lo, hi = t / 2, t
    for _ in range(20):
        mid = (lo + hi) / 2
        if worst(mid) <= eps:
            hi = mid
        else:
            lo = mid
    return hi


# ---------------------------------------------------------------------------
# perturbation lemmas
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PerturbationReport:
    delta_L: float
    m: int
    bound: float
    max_sampled: float

    @property
    def ok(self) -> bool:
        return self.max_sampled <= self.bound + 1e-12


def jump_perturbation_check(
    L: Lindbladian,
    L_tilde: Lindbladian,
    samples: int = 100,
    seed: int = 0,
) -> PerturbationReport:
    """Sampled check that || (L - L~)(rho) ||_1 <= 4 m delta_L + 2 delta_L^2.

    delta_L is the largest spectral-norm jump difference; the bound is the
    diamond-norm estimate, which dominates any per-state trace norm.
    """
    if len(L.jumps) != len(L_tilde.jumps):
        raise EnumerationMismatch(
            f"jump counts differ: {len(L.jumps)} vs {len(L_tilde.jumps)}"
        )
    for (nu_a, _), (nu_b, _) in zip(L.jumps, L_tilde.jumps):
        if abs(nu_a - nu_b) > 1e-9:
            raise EnumerationMismatch(f"frequency mismatch {nu_a} vs {nu_b}")
    delta_L = max(
        (numerics.spectral_norm(A - B) for (_, A), (_, B) in zip(L.jumps, L_tilde.jumps)),
        default=0.0,
    )
    m = len(L.jumps)
    bound = 4 * m * delta_L + 2 * delta_L**2
    rng = np.random.default_rng(seed)
    diff = L.superop.matrix - L_tilde.superop.matrix
    worst = 0.0
    for _ in range(samples):
        rho = DensityMatrix.random(L.dim, rng)
        out = numerics.devec(diff @ numerics.vec(rho.matrix))
        worst = max(worst, numerics.trace_norm(out))
    return PerturbationReport(delta_L=delta_L, m=m, bound=bound, max_sampled=worst)


def coupling_perturbation_check(S_exact: np.ndarray, S_poly: np.ndarray, delta_leak: float) -> float:
    """Spectral-norm distance of attenuated couplings; must be <= 2 delta_leak.

    Both arguments must come from the same raw coupling, promise, and gamma,
    with the exact attenuation defined to share the polynomial's ramps (see
    specfun.paired_attenuation_profiles), so only plateau errors contribute.
    """
    diff = numerics.spectral_norm(np.asarray(S_exact) - np.asarray(S_poly))
    if diff > 2 * delta_leak + 1e-12:
        raise EnumerationMismatch(
            f"coupling difference {diff:.3e} exceeds 2*delta_leak = {2 * delta_leak:.3e}"
        )
    return diff


# ---------------------------------------------------------------------------
# gap sweep and resource calculator
# ---------------------------------------------------------------------------

def gap_sweep(
    model: HamiltonianModel,
    filt: FilterFunction,
    family: PromiseFamily,
    gamma_grid,
) -> list:
    """Spectral gap of every promised generator across an attenuation grid.

    Returns one row dict per (j, gamma) cell with the ideal generator's gap
    as a shared baseline; non-mixing cells are flagged through kernel_dim
    rather than raised.
    """
    ideal = ideal_davies(model, filt)
    ideal_gap = numerics.spectral_gap(ideal.superop)
    params = model.params
    rows = []
    for j, promise in enumerate(family.coarse):
        for gamma in gamma_grid:
            rep = promised_gap_report(model, filt, promise, float(gamma))
            rows.append(
                {
                    "model": model.kind,
                    "n1": params.get("n1", ""),
                    "n2": params.get("n2", ""),
                    "v": params.get("v", ""),
                    "beta": filt.beta,
                    "filter": filt.kind,
                    "branch": family.branch,
                    "n": family.n,
                    "r": family.r,
                    "j": j,
                    "gamma": float(gamma),
                    "gap": rep.gap,
                    "gap_ideal": ideal_gap,
                    "kernel_dim": rep.kernel_dim,
                    "residual": rep.residual,
                }
            )
    return rows


def resource_estimate(
    n: float, r: float, gamma: float, t: float, delta_L: float, beta: float, eps: float
) -> dict:
    """Constant-1 evaluation of the query-count scalings.

    All implied constants are set to 1 and the polylog factor is evaluated
    at 1/delta_L (leaving the count exactly linear in t).  This is an
    asymptotic calculator, never an accuracy statement.
    """
    for name, val in [("gamma", gamma), ("t", t), ("delta_L", delta_L), ("beta", beta), ("eps", eps)]:
        if val <= 0:
            raise ValueError(f"{name} must be positive, got {val}")
    polylog = math.log2(max(1.0 / delta_L, 2.0)) ** 2
    h_queries = (1.0 / gamma) * n**2 * 2 ** (3 * n + r) * t * polylog
    logbe = max(math.log2(beta / eps), 1.0)
    total = t * (1.0 / gamma) * beta**3 * eps**-7 * polylog * logbe**2
    return {
        "convention": "constant-1",
        "h_queries_per_run": h_queries,
        "h_queries_total": total,
        "suggested_n": math.log2(beta * (eps / 2.0) ** -2),
        "suggested_r": math.log2(4.0 / eps),
    }
