"""Preparation protocol: left-right measurement, promise selection, ensemble
averaging, and the theorem-level accuracy bounds.

The protocol takes an arbitrary input state, projects it onto one of two
fine-grained promises by a two-outcome measurement with boosted majority
selection, picks one of 2^r coarse promises uniformly, and thermalizes under
that promise's Davies generator.  The j-average of the resulting promised
thermal states is provably close to the true thermal state:

    || rho* - rho_beta ||_1  <=  sqrt(beta 2^-n) + 2 * 2^-r

with the two terms coming from energy rounding (interval widths <= 2^-n) and
from eigenvalue exclusion (each energy missing from at most one promise).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import davies, numerics, specfun
from .errors import EmptyPromisedSubspace, GibbsLabError, NotMixing
from .models import HamiltonianModel
from .numerics import DensityMatrix, Spectrum, dagger
from .promises import PromiseFamily, RoundingPromise


# ---------------------------------------------------------------------------
# promised thermal states
# ---------------------------------------------------------------------------

def promised_subspace_projector(spectrum: Spectrum, promise: RoundingPromise) -> np.ndarray:
    """P^(M): projector onto the eigenspaces with eigenvalue inside the promise."""
    out = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
    for lam, proj in zip(spectrum.eigenvalues, spectrum.projectors):
        if promise.contains(float(lam)):
            out += proj
    return out


def approx_support(sigma, promise: RoundingPromise, spectrum: Spectrum) -> float:
    """Tr(sigma P^(M)): how much of the state lives on the promised subspace."""
    P = promised_subspace_projector(spectrum, promise)
    return float(np.real(np.trace(numerics.as_matrix(sigma) @ P)))


def _promise_weights(spectrum: Spectrum, promise: RoundingPromise, beta: float, rounded: bool):
    """Per-eigenvalue Boltzmann weights, zero outside the promise."""
    mids = promise.midpoints
    weights = np.zeros(len(spectrum.eigenvalues))
    for i, lam in enumerate(spectrum.eigenvalues):
        x = promise.locate(float(lam))
        if x is None:
            continue
        energy = mids[x] if rounded else lam
        weights[i] = math.exp(-beta * energy)
    z = float(np.sum(weights * spectrum.multiplicities))
    if z <= 0.0:
        raise EmptyPromisedSubspace("promise excludes every eigenvalue of the spectrum")
    return weights, z


def _state_from_weights(spectrum: Spectrum, weights: np.ndarray, z: float) -> DensityMatrix:
    out = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
    for w, proj in zip(weights / z, spectrum.projectors):
        if w:
            out += w * proj
    return DensityMatrix(out)


def promised_gibbs(spectrum: Spectrum, promise: RoundingPromise, beta: float) -> DensityMatrix:
    """Thermal state of the well-rounded Hamiltonian: weights exp(-beta m_x)."""
    weights, z = _promise_weights(spectrum, promise, beta, rounded=True)
    return _state_from_weights(spectrum, weights, z)


def exact_promised_gibbs(spectrum: Spectrum, promise: RoundingPromise, beta: float) -> DensityMatrix:
    """Promise-restricted thermal state keeping the true eigenvalues."""
    weights, z = _promise_weights(spectrum, promise, beta, rounded=False)
    return _state_from_weights(spectrum, weights, z)


def promised_partition_functions(
    spectrum: Spectrum, promise: RoundingPromise, beta: float
) -> tuple:
    """(Z^(M), Z-hat^(M)) for the rounded and exact promised states."""
    _, z_rounded = _promise_weights(spectrum, promise, beta, rounded=True)
    _, z_exact = _promise_weights(spectrum, promise, beta, rounded=False)
    return z_rounded, z_exact


# ---------------------------------------------------------------------------
# left-right POVM
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class PovmOutcome:
    label: str  # 'L' | 'R'
    probability: float  # conditioned on postselection success
    raw_probability: float  # unnormalized Tr(P^2 sigma P^2) resp. complement
    post_state: DensityMatrix | None
    success_probability: float


_LR_OPERATOR_CACHE: dict = {}


def _lr_operator(spectrum: Spectrum, n: int, r: int, delta_sup: float, mode: str) -> np.ndarray:
    key = (id(spectrum), spectrum.eigenvalues.tobytes(), n, r, delta_sup, mode)
    if key not in _LR_OPERATOR_CACHE:
        profile = specfun.lr_profile(n, r, delta_sup, mode)
        _LR_OPERATOR_CACHE[key] = numerics.apply_function(spectrum, profile)
    return _LR_OPERATOR_CACHE[key]


def left_right_povm(
    sigma: DensityMatrix,
    spectrum: Spectrum,
    n: int,
    r: int,
    delta_sup: float,
    mode: str = "poly",
) -> tuple:
    """Measure the two-outcome left-right POVM on sigma.

    Outcome L has post-state P^2 sigma P^2 / p_L where P is the spectral
    left-right operator; outcome R uses I - P^2.  Postselection succeeds
    with probability p_L + p_R >= 1/2 (min of x^4 + (1 - x^2)^2), and the
    reported outcome probabilities are conditioned on that success while the
    raw p_M values are kept for the support guarantee, which applies when
    p_M >= 1/3.
    """
    P = _lr_operator(spectrum, n, r, delta_sup, mode)
    P2 = P @ P
    comp = np.eye(spectrum.dim) - P2
    mat = sigma.matrix
    m_left = P2 @ mat @ P2
    m_right = comp @ mat @ comp
    p_left = float(np.real(np.trace(m_left)))
    p_right = float(np.real(np.trace(m_right)))
    success = p_left + p_right
    if success < 0.5 - 1e-10:
        raise GibbsLabError(f"postselection probability {success} below the 1/2 floor")

    def outcome(label, raw, block):
        post = None
        if raw > 1e-14:
            post = DensityMatrix((block + dagger(block)) / (2 * raw))
        return PovmOutcome(
            label=label,
            probability=raw / success,
            raw_probability=raw,
            post_state=post,
            success_probability=success,
        )

    return outcome("L", p_left, m_left), outcome("R", p_right, m_right)


def majority_trial_count(delta_fail: float) -> int:
    """Smallest odd integer exceeding 20 ln(1/delta_fail)."""
    n = int(math.floor(20.0 * math.log(1.0 / delta_fail))) + 1
    return n if n % 2 == 1 else n + 1


def majority_select(
    prepare,
    spectrum: Spectrum,
    n: int,
    r: int,
    delta_sup: float,
    delta_fail: float,
    rng: np.random.Generator,
    mode: str = "poly",
) -> tuple:
    """Repeat the POVM on fresh states and keep the majority branch.

    Runs N = smallest odd integer > 20 ln(1/delta_fail) independent trials,
    each on a new state from ``prepare``, sampling outcomes by their
    success-conditioned probabilities.  Returns (branch, post_state, stats)
    with one post-state from a trial that produced the majority branch.
    """
    if not 0 < delta_fail < 0.5:
        raise GibbsLabError(f"delta_fail={delta_fail} must lie in (0, 1/2)")
    trials = majority_trial_count(delta_fail)
    counts = {"L": 0, "R": 0}
    kept = {"L": None, "R": None}
    for _ in range(trials):
        sigma = prepare()
        left, right = left_right_povm(sigma, spectrum, n, r, delta_sup, mode)
        pick = left if rng.random() < left.probability else right
        counts[pick.label] += 1
        if pick.post_state is not None:
            kept[pick.label] = pick
    branch = "L" if counts["L"] > counts["R"] else "R"
    chosen = kept[branch]
    stats = {
        "N": trials,
        "K": counts[branch],
        "frequency": counts[branch] / trials,
        "raw_probability": None if chosen is None else chosen.raw_probability,
    }
    return branch, None if chosen is None else chosen.post_state, stats


# ---------------------------------------------------------------------------
# ensemble analysis
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EnsembleReport:
    branch: str
    n: int
    r: int
    beta: float
    states: tuple = field(repr=False)  # rounded promised Gibbs states per j
    exact_states: tuple = field(repr=False)
    average: DensityMatrix = field(repr=False)
    exact_average: DensityMatrix = field(repr=False)
    dist_avg: float  # || rho* - rho_beta ||_1
    dist_exact_avg: float  # || rho^* - rho_beta ||_1
    dist_rounding: float  # || rho^* - rho* ||_1
    bound_thm: float
    bound_47: float
    bound_48: float

    @property
    def violations(self) -> int:
        return sum(
            [
                self.dist_rounding > self.bound_47 + 1e-12,
                self.dist_exact_avg > self.bound_48 + 1e-12,
                self.dist_avg > self.bound_thm + 1e-12,
            ]
        )


def ensemble_report(
    model: HamiltonianModel,
    family: PromiseFamily,
    beta: float,
    strict: bool = True,
) -> EnsembleReport:
    """Build all 2^r promised Gibbs states and compare their average to rho_beta.

    Checks the rounding bound sqrt(beta 2^-n) on || rho^* - rho* ||_1, the
    exclusion bound 2 * 2^-r on || rho^* - rho_beta ||_1, and their sum on
    the full ensemble error, plus Z-hat <= Z for every member.
    """
    spectrum = model.spectrum()
    states, exact_states = [], []
    z_full = float(
        np.sum(np.exp(-beta * spectrum.eigenvalues) * spectrum.multiplicities)
    )
    for promise in family.coarse:
        states.append(promised_gibbs(spectrum, promise, beta))
        exact_states.append(exact_promised_gibbs(spectrum, promise, beta))
        _, z_exact = promised_partition_functions(spectrum, promise, beta)
        if z_exact > z_full * (1 + 1e-12):
            raise GibbsLabError("exact promised partition function exceeds the full one")
    avg = DensityMatrix(sum(s.matrix for s in states) / len(states))
    exact_avg = DensityMatrix(sum(s.matrix for s in exact_states) / len(exact_states))
    rho_beta = numerics.gibbs_state(spectrum, beta)
    report = EnsembleReport(
        branch=family.branch,
        n=family.n,
        r=family.r,
        beta=beta,
        states=tuple(states),
        exact_states=tuple(exact_states),
        average=avg,
        exact_average=exact_avg,
        dist_avg=numerics.trace_distance(avg, rho_beta),
        dist_exact_avg=numerics.trace_distance(exact_avg, rho_beta),
        dist_rounding=numerics.trace_distance(exact_avg, avg),
        bound_thm=math.sqrt(beta * 2.0**-family.n) + 2.0 * 2.0**-family.r,
        bound_47=math.sqrt(beta * 2.0**-family.n),
        bound_48=2.0 * 2.0**-family.r,
    )
    if strict and report.violations:
        raise GibbsLabError(
            f"ensemble bounds violated: dists=({report.dist_rounding:.3e}, "
            f"{report.dist_exact_avg:.3e}, {report.dist_avg:.3e})"
        )
    return report


# ---------------------------------------------------------------------------
# thermal-state comparison (fidelity bound)
# ---------------------------------------------------------------------------

def gibbs_of_hermitian(H: np.ndarray, beta: float) -> DensityMatrix:
    """exp(-beta H)/Z for any Hermitian H (no [0, 1] normalization needed)."""
    numerics.require_hermitian(H, what="gibbs_of_hermitian input")
    vals, vecs = np.linalg.eigh(H)
    weights = np.exp(-beta * (vals - vals.min()))
    weights /= weights.sum()
    return DensityMatrix((vecs * weights) @ dagger(vecs))


def fidelity_bound_check(H1: np.ndarray, H2: np.ndarray, beta: float) -> tuple:
    """Fidelity of two Gibbs states against the spectral-perturbation bound.

    Returns (F, bound) with bound = exp(-beta ||H1 - H2||); F >= bound holds
    for all Hamiltonian pairs, checked here with a 1e-9 float allowance.
    """
    f = numerics.fidelity(
        gibbs_of_hermitian(H1, beta).matrix, gibbs_of_hermitian(H2, beta).matrix
    )
    bound = math.exp(-beta * numerics.spectral_norm(np.asarray(H1) - np.asarray(H2)))
    if f < bound - 1e-9:
        raise GibbsLabError(f"fidelity {f:.12f} below thermal perturbation bound {bound:.12f}")
    return f, bound


# ---------------------------------------------------------------------------
# end-to-end protocol
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class EndToEndReport:
    branch: str
    n: int
    r: int
    beta: float
    gamma: float
    t: float
    j_sampled: int
    distance: float  # analytic j-average output vs rho_beta
    bound: float  # theorem ensemble bound
    eps_mix: float  # max_j distance of the evolved state to its promised Gibbs
    per_run_distance: float  # sampled-j output vs rho_beta
    initial_distance: float  # pre-evolution distance of the post-POVM state
    majority_stats: dict


def end_to_end(
    model: HamiltonianModel,
    family: PromiseFamily,
    beta: float,
    gamma: float,
    t: float,
    mode: str,
    rng: np.random.Generator,
    delta_sup: float = 1e-3,
    delta_fail: float = 1e-3,
    delta_leak: float = 1e-8,
    filter_kind: str = "metropolis",
) -> EndToEndReport:
    """Run the full preparation pipeline once.

    Step 1 measures the left-right POVM with majority selection on fresh
    random input states.  Step 2 samples a coarse promise index j uniformly.
    Step 3 evolves under that promise's Davies generator for time t.  The
    report carries both the sampled-j output and the analytic average over
    all j (exact 2^-r weights, no sampling noise), its distance to
    rho_beta, the theorem bound, and the convergence slack eps_mix.
    """
    spectrum = model.spectrum()
    filt = davies.FilterFunction(filter_kind, beta)

    def prepare() -> DensityMatrix:
        return DensityMatrix.random(model.dim, rng)

    branch, sigma, stats = majority_select(
        prepare, spectrum, family.n, family.r, delta_sup, delta_fail, rng, mode
    )
    if sigma is None:
        raise NotMixing("majority branch produced no usable post-state")
    fam = family if family.branch == branch else PromiseFamily.build(family.n, family.r, branch)
    j_sampled = int(rng.integers(2**fam.r))

    rho_beta = numerics.gibbs_state(spectrum, beta)
    outputs, slacks = [], []
    for promise in fam.coarse:
        L = davies.promised_davies(model, filt, promise, gamma, delta_leak, mode)
        basis = davies.promised_subspace_basis(spectrum, promise)
        restricted = davies.restricted_superoperator(L.jumps, basis)
        if numerics.kernel_dimension(restricted) != 1:
            raise NotMixing(f"promised generator for j has a degenerate kernel (branch {branch})")
        out = numerics.evolve(L.superop, sigma, t)
        outputs.append(out)
        slacks.append(numerics.trace_distance(out, promised_gibbs(spectrum, promise, beta)))
    average = DensityMatrix(sum(o.matrix for o in outputs) / len(outputs))
    return EndToEndReport(
        branch=branch,
        n=fam.n,
        r=fam.r,
        beta=beta,
        gamma=gamma,
        t=t,
        j_sampled=j_sampled,
        distance=numerics.trace_distance(average, rho_beta),
        bound=math.sqrt(beta * 2.0**-fam.n) + 2.0 * 2.0**-fam.r,
        eps_mix=max(slacks),
        per_run_distance=numerics.trace_distance(outputs[j_sampled], rho_beta),
        initial_distance=numerics.trace_distance(sigma, rho_beta),
        majority_stats=stats,
    )


def min_promised_gap(
    model: HamiltonianModel,
    filt: davies.FilterFunction,
    family: PromiseFamily,
    gamma: float,
) -> float:
    """Smallest spectral gap over the family's promised generators."""
    gaps = []
    for promise in family.coarse:
        rep = davies.promised_gap_report(model, filt, promise, gamma)
        if rep.kernel_dim != 1:
            raise NotMixing("non-mixing promised generator in gap scan")
        gaps.append(rep.gap)
    return min(gaps)
