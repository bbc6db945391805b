"""Approximate Davies generator from ambiguous energy estimation.

Instead of forcing a rounding promise, this variant works with the raw
phase-estimation kernel: the estimate register ends up in a superposition
over grid points x/2^n with amplitudes f(lambda, x), and the coupling
operator gets sandwiched between the non-projective operators
A(x) = sum_i f(lambda_i, x) Pi_i.  The resulting Lindbladian is completely
positive but is not the Davies generator of any nearby Hamiltonian, so its
stationary state can drift from the thermal state; the adversarial sweep
measures that drift as the spectrum slides from grid-aligned (alpha = 0) to
maximally ambiguous (alpha = 1).

Median amplification is modeled at the probability level: with m_med > 1
the weight of estimate x is the exact probability that the median of m_med
independent draws from |f|^2 equals x, and A(x) carries the square roots of
those weights (the paper level construction keeps amplitudes only for
m_med = 1; a fully coherent median model is not defined).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

from . import davies, numerics
from .errors import DimensionMismatch
from .models import HamiltonianModel, adversarial
from .numerics import Spectrum, dagger


def qpe_amplitude(lam: float, x: int, n: int) -> complex:
    """Phase-estimation amplitude for estimate x/2^n given true value lam.

    The geometric-sum kernel f = 2^-n sum_k exp(2 pi i k (lam - x/2^n)):
    modulus 1 at resonance and |f|^2 summing to 1 over the estimates.
    """
    size = 2**n
    if not 0 <= x < size:
        raise DimensionMismatch(f"estimate index {x} outside 0..{size - 1}")
    offset = lam - x / size
    phase = np.exp(2j * np.pi * offset * np.arange(size))
    return complex(np.sum(phase) / size)


def qpe_probabilities(lam: float, n: int) -> np.ndarray:
    """|f(lam, x)|^2 for all estimates x at once."""
    size = 2**n
    ks = np.arange(size)
    offsets = lam - ks / size
    # |sum_k e^{2 pi i k d}|^2 / N^2 with the resonant limit handled exactly
    num = np.sin(np.pi * size * offsets) ** 2
    den = np.sin(np.pi * offsets) ** 2
    probs = np.empty(size)
    resonant = den < 1e-30
    probs[resonant] = 1.0
    probs[~resonant] = num[~resonant] / (den[~resonant] * size**2)
    return probs


def median_distribution(lam: float, n: int, m_med: int) -> np.ndarray:
    """Distribution of the median of m_med iid estimate draws.

    Computed exactly from the CDF: the median of an odd number of draws is
    <= x iff at least (m_med + 1)/2 draws are, a binomial tail in F(x).
    """
    if m_med < 1 or m_med % 2 == 0:
        raise DimensionMismatch(f"median count m_med={m_med} must be odd and positive")
    probs = qpe_probabilities(lam, n)
    if m_med == 1:
        return probs
    cdf = np.clip(np.cumsum(probs), 0.0, 1.0)
    half = (m_med + 1) // 2

    def tail(q: np.ndarray) -> np.ndarray:
        total = np.zeros_like(q)
        for k in range(half, m_med + 1):
            total += math.comb(m_med, k) * q**k * (1.0 - q) ** (m_med - k)
        return total

    med_cdf = tail(cdf)
    out = np.diff(med_cdf, prepend=0.0)
    out = np.clip(out, 0.0, None)
    return out / out.sum()


@dataclass(frozen=True)
class EstimationKernel:
    """Energy-estimation amplitudes and (median-amplified) probabilities."""

    n: int
    m_med: int

    def amplitudes(self, lam: float) -> np.ndarray:
        size = 2**self.n
        return np.array([qpe_amplitude(lam, x, self.n) for x in range(size)])

    def probabilities(self, lam: float) -> np.ndarray:
        return median_distribution(lam, self.n, self.m_med)


@dataclass(frozen=True)
class AOperators:
    """The estimate-indexed operators A(x) sandwiching the coupling."""

    n: int
    m_med: int
    operators: tuple = field(repr=False)

    def validate(self, tol: float = 1e-8) -> None:
        dim = self.operators[0].shape[0]
        total = sum(dagger(A) @ A for A in self.operators)
        defect = float(np.max(np.abs(total - np.eye(dim))))
        if defect > tol:
            raise DimensionMismatch(f"sum_x A(x)^dag A(x) deviates from I by {defect:.3e}")


def a_operators(spectrum: Spectrum, n: int, m_med: int) -> AOperators:
    """A(x) = sum_i w(lambda_i, x) Pi_i with QPE amplitudes or median weights.

    m_med = 1 keeps the complex amplitudes f; m_med > 1 uses the square
    roots of the exact median probabilities, which preserves completeness.
    """
    size = 2**n
    kernel = EstimationKernel(n, m_med)
    weights = []
    for lam in spectrum.eigenvalues:
        if m_med == 1:
            weights.append(kernel.amplitudes(float(lam)))
        else:
            weights.append(np.sqrt(kernel.probabilities(float(lam))))
    ops = []
    for x in range(size):
        block = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
        for w, proj in zip(weights, spectrum.projectors):
            block += w[x] * proj
        ops.append(block)
    out = AOperators(n=n, m_med=m_med, operators=tuple(ops))
    out.validate()
    return out


def approx_lindbladian(
    model: HamiltonianModel,
    filt: davies.FilterFunction,
    n: int,
    m_med: int,
) -> davies.Lindbladian:
    """Lindbladian with jumps sqrt(G(nu)) sum_{x-y = 2^n nu} A(x) S A(y)^dag.

    Frequencies run over the estimate-grid differences (x - y)/2^n.  Uses
    the model's single coupling operator.
    """
    if len(model.couplings) != 1:
        raise DimensionMismatch("the estimation-based generator expects exactly one coupling")
    spectrum = model.spectrum()
    S = model.couplings[0][1]
    ops = a_operators(spectrum, n, m_med).operators
    size = 2**n
    jumps = []
    for k in range(-(size - 1), size):
        nu = k / size
        g = math.sqrt(davies.filter_value(filt.kind, filt.beta, nu))
        block = np.zeros((spectrum.dim, spectrum.dim), dtype=complex)
        for y in range(size):
            x = y + k
            if 0 <= x < size:
                block += ops[x] @ S @ dagger(ops[y])
        jumps.append((nu, g * block))
    superop = numerics.lindbladian_from_jumps([L for _, L in jumps])
    return davies.Lindbladian(
        jumps=tuple(jumps),
        superop=superop,
        metadata={
            "source": "approx",
            "filter": filt,
            "model": model.kind,
            "n": n,
            "m_med": m_med,
            # the A(x) sandwiches are not projectors, so frequency blocks can
            # overlap on an eigenspace and push a jump norm slightly past 1
            "jump_norm_slack": 1.0,
        },
    )


def adversarial_sweep(
    q: int,
    n: int,
    alpha_grid,
    m_med_grid,
    beta: float,
    seed: int,
    filter_kind: str = "metropolis",
) -> list:
    """Stationary-state error of the estimation-based generator vs alpha and m_med.

    Each row records the trace distance between the generator's stationary
    state and the true thermal state of the adversarial Hamiltonian, plus
    the stationary residual and kernel dimension (degenerate kernels are
    flagged, not raised).
    """
    filt = davies.FilterFunction(filter_kind, beta)
    rows = []
    for alpha in alpha_grid:
        model = adversarial(q, n, float(alpha), seed)
        rho_beta = numerics.gibbs_state(model.spectrum(), beta)
        for m_med in m_med_grid:
            L = approx_lindbladian(model, filt, n, int(m_med))
            kdim = numerics.kernel_dimension(L.superop)
            if kdim == 1:
                stat = numerics.stationary_state(L.superop)
                distance = numerics.trace_distance(stat, rho_beta)
                residual = numerics.trace_norm(L.apply(stat))
            else:
                distance, residual = math.nan, math.nan
            rows.append(
                {
                    "q": q,
                    "n": n,
                    "alpha": float(alpha),
                    "m_med": int(m_med),
                    "beta": beta,
                    "seed": seed,
                    "distance": distance,
                    "residual": residual,
                    "kernel_dim": kdim,
                }
            )
    return rows
