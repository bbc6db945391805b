"""Scalar spectral profiles: step polynomials, projection polynomials, and
their exact piecewise idealizations.

Profiles are scalar functions on a declared domain that get lifted to
operators through ``numerics.apply_function``.  Polynomial profiles are
Chebyshev series (plus factored compositions of such series, which are
still polynomials but are kept in product form for numerical conditioning);
exact profiles are piecewise linear with 0/1 plateaus.

The polynomial constructions follow one recipe: a smooth step built from a
Chebyshev expansion of erf(k x), steps shifted and summed into a multi-level
projection profile, and a cubic Chebyshev map -T3(p/2) that sharpens values
near {0, 1}.  Every polynomial profile produced here stays inside [0, 1] on
its domain by an explicit final rescaling.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field
from functools import lru_cache

import numpy as np
import scipy.fft
from numpy.polynomial import chebyshev
from scipy.special import erf

from .errors import (
    DegreeBudgetExceeded,
    DomainError,
    IntervalsTooClose,
    IntervalVanishes,
    TooManyIntervals,
)
from .promises import RoundingPromise, deletion_windows, promise_complement

MAX_INTERP_SIZE = 2**19


@dataclass(frozen=True)
class SpectralProfile:
    """A scalar function on [lo, hi], either exact piecewise or polynomial.

    ``degree`` is the polynomial degree (composite profiles track the degree
    of the expanded product without forming it); None for exact profiles.
    ``coefficients`` holds the Chebyshev coefficients when the profile is a
    plain series in the variable z = lam/half_width.
    """

    kind: str  # 'exact_piecewise' | 'polynomial'
    domain: tuple
    fn: callable = field(repr=False)
    degree: int | None = None
    coefficients: np.ndarray | None = field(default=None, repr=False)

    def __call__(self, lam):
        arr = np.asarray(lam, dtype=float)
        lo, hi = self.domain
        if arr.size and (arr.min() < lo - 1e-12 or arr.max() > hi + 1e-12):
            raise DomainError(
                f"profile evaluated at [{arr.min():g}, {arr.max():g}] outside domain [{lo:g}, {hi:g}]"
            )
        out = self.fn(arr)
        return out if np.ndim(lam) else float(out)

    def evaluate(self, lam):
        return self(lam)


def _series_profile(coeffs: np.ndarray, half_width: float, domain: tuple) -> SpectralProfile:
    c = np.asarray(coeffs, dtype=float)
    return SpectralProfile(
        kind="polynomial",
        domain=domain,
        fn=lambda lam: chebyshev.chebval(np.asarray(lam, dtype=float) / half_width, c),
        degree=len(c) - 1,
        coefficients=c,
    )


def piecewise_profile(breakpoints, values) -> SpectralProfile:
    """Piecewise-linear profile through (breakpoint, value) pairs on [0, 1]."""
    xs = np.asarray(breakpoints, dtype=float)
    ys = np.asarray(values, dtype=float)
    return SpectralProfile(
        kind="exact_piecewise",
        domain=(0.0, 1.0),
        fn=lambda lam: np.interp(np.asarray(lam, dtype=float), xs, ys),
    )


def constant_profile(value: float, domain=(0.0, 1.0)) -> SpectralProfile:
    return SpectralProfile(
        kind="polynomial",
        domain=domain,
        fn=lambda lam: np.full_like(np.asarray(lam, dtype=float), float(value)),
        degree=0,
        coefficients=np.array([float(value)]),
    )


# ---------------------------------------------------------------------------
# step polynomial
# ---------------------------------------------------------------------------

def _cheb_interp_coeffs(f, size: int) -> np.ndarray:
    """Chebyshev coefficients interpolating f at `size` first-kind nodes."""
    j = np.arange(size)
    nodes = np.cos(np.pi * (j + 0.5) / size)
    vals = f(nodes)
    c = scipy.fft.dct(vals, type=2) / size
    c[0] /= 2
    return c


@lru_cache(maxsize=None)
def step_poly(kappa: float, delta: float) -> SpectralProfile:
    """Polynomial smooth step on [-2, 2].

    Returns Theta with Theta <= delta for lam <= -kappa/2, Theta >= 1 - delta
    for lam >= kappa/2, and 0 <= Theta <= 1 on all of [-2, 2].  Built as
    (1 + C(lam))/2 where C is a truncated Chebyshev expansion of erf(k lam)
    with k chosen so the erf shortfall at the edges is delta/2; the
    truncation budget takes the other half.  Degree is O(kappa^-1 log(1/delta)).
    """
    if not 0 < kappa < 1:
        raise IntervalsTooClose(f"step width kappa={kappa} must lie in (0, 1)")
    if not 0 < delta < 0.5:
        raise DegreeBudgetExceeded(f"step error delta={delta} must lie in (0, 1/2)")
    k = (2.0 / kappa) * math.sqrt(math.log(2.0 / delta))
    tau = delta / 5.0
    target = lambda z: erf(2.0 * k * z)  # z = lam / 2 on [-1, 1]

    size = 256
    while size <= MAX_INTERP_SIZE and size < 4 * k:
        size *= 2
    coeffs = None
    while size <= MAX_INTERP_SIZE:
        c = _cheb_interp_coeffs(target, size)
        zgrid = np.linspace(-1.0, 1.0, max(8001, 4 * size + 1))
        interp_err = float(np.max(np.abs(chebyshev.chebval(zgrid, c) - target(zgrid))))
        if interp_err <= tau / 4:
            coeffs = c
            break
        size *= 2
    if coeffs is None:
        raise DegreeBudgetExceeded(f"no converged interpolant within size {MAX_INTERP_SIZE}")

    coeffs[0::2] = 0.0  # erf is odd; discard symmetric round-off
    tails = np.cumsum(np.abs(coeffs[::-1]))[::-1]
    keep = np.nonzero(tails > tau / 2)[0]
    d = int(keep[-1]) if keep.size else 1
    if d % 2 == 0:
        d += 1
    c = coeffs[: d + 1].copy()
    tail_bound = float(np.sum(np.abs(coeffs[d + 1 :])))

    zgrid = np.linspace(-1.0, 1.0, max(10001, 4 * d + 1))
    approx = chebyshev.chebval(zgrid, c)
    if np.max(np.abs(approx - target(zgrid))) > tau:
        raise DegreeBudgetExceeded("truncated step polynomial misses its error budget")
    # |erf| <= 1, so |series| <= 1 + tail_bound + interp error everywhere, not
    # just on the check grid; shrinking by that bound pins the range to [-1, 1].
    c /= 1.0 + tail_bound + 2.0 * interp_err + 1e-13
    theta = c / 2.0
    theta[0] += 0.5
    return _series_profile(theta, half_width=2.0, domain=(-2.0, 2.0))


# ---------------------------------------------------------------------------
# projection polynomials
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class ProfileSpec:
    """Labeled intervals for a multi-level projection profile."""

    intervals: tuple  # ((a, b), ...)
    labels: tuple  # matching 0/1 labels
    delta: float

    def __post_init__(self):
        ivals = tuple((float(a), float(b)) for a, b in self.intervals)
        labs = tuple(int(c) for c in self.labels)
        object.__setattr__(self, "intervals", ivals)
        object.__setattr__(self, "labels", labs)
        if len(ivals) != len(labs) or not ivals:
            raise IntervalsTooClose("need equally many intervals and labels")
        if any(c not in (0, 1) for c in labs):
            raise IntervalsTooClose("labels must be 0 or 1")
        for (a0, b0), (a1, b1) in zip(ivals, ivals[1:]):
            if a1 - b0 <= 0:
                raise IntervalsTooClose(f"intervals [{a0},{b0}] and [{a1},{b1}] overlap or touch")

    @property
    def kappa(self) -> float:
        seps = [a1 - b0 for (_, b0), (a1, _) in zip(self.intervals, self.intervals[1:])]
        return min(seps) if seps else 1.0

    @property
    def flips(self) -> list:
        """(gap midpoint, gap width, +1/-1) for each label change."""
        out = []
        for i in range(len(self.intervals) - 1):
            if self.labels[i] != self.labels[i + 1]:
                b0 = self.intervals[i][1]
                a1 = self.intervals[i + 1][0]
                out.append(((b0 + a1) / 2, a1 - b0, +1 if self.labels[i + 1] else -1))
        return out


def projection_poly(spec: ProfileSpec) -> SpectralProfile:
    """Polynomial within spec.delta of each interval's label, inside [0, 1] everywhere.

    One shifted step polynomial per label flip, summed on top of the first
    label, then affinely squeezed so the result cannot leave [0, 1].  The
    internal error budget is delta/2 so the squeeze costs at most a factor 2.
    """
    flips = spec.flips
    if not flips:
        return constant_profile(spec.labels[0])
    delta_i = spec.delta / 2.0
    per_flip = delta_i / len(flips)
    # one step polynomial per distinct gap width; evaluation batches all the
    # shifts sharing a coefficient array into a single broadcasted chebval
    groups: dict = {}
    for t, width, sign in flips:
        key = round(width, 15)
        if key not in groups:
            groups[key] = (step_poly(width, per_flip), [], [])
        groups[key][1].append(t)
        groups[key][2].append(sign)
    batches = [
        (theta.coefficients, np.array(ts)[:, None], np.array(signs, dtype=float))
        for theta, ts, signs in groups.values()
    ]
    c0 = float(spec.labels[0])
    squeeze = 1.0 + 2.0 * delta_i

    def fn(lam):
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        acc = np.full(arr.shape, c0)
        for coeffs, ts, signs in batches:
            vals = chebyshev.chebval((arr[None, :] - ts) / 2.0, coeffs)
            acc = acc + signs @ vals
        out = (acc + delta_i) / squeeze
        return out if np.ndim(lam) else out[0]

    return SpectralProfile(
        kind="polynomial",
        domain=(0.0, 1.0),
        fn=fn,
        degree=max(theta.degree for theta, _, _ in groups.values()),
    )


def amplify_t3(profile: SpectralProfile) -> SpectralProfile:
    """Sharpen a [0, 1]-valued profile by the Chebyshev map -T3(p/2) = (3p - p^3)/2.

    Values within delta of {0, 1} land within 2*delta; plateaus at exactly
    0 or 1 are fixed points.
    """
    def fn(lam):
        p = np.asarray(profile.fn(np.asarray(lam, dtype=float)))
        return (3.0 * p - p**3) / 2.0

    return SpectralProfile(
        kind=profile.kind,
        domain=profile.domain,
        fn=fn,
        degree=None if profile.degree is None else 3 * profile.degree,
    )


# ---------------------------------------------------------------------------
# promise-derived profiles
# ---------------------------------------------------------------------------

def indicator_profile(promise: RoundingPromise) -> SpectralProfile:
    """Exact indicator of the promise (closed intervals win at boundaries)."""
    return _ramp_profile(promise, margin=0.0)


def _ramp_profile(promise: RoundingPromise, margin: float) -> SpectralProfile:
    """0 off the promise, 1 on its margin-truncation, linear ramps between.

    Ramps anchor at 0 only on interval edges that adjoin the promise
    complement.  An edge at 0 or 1 has nothing outside it, and the
    polynomial construction plateaus near 1 there, so the idealized profile
    holds the value 1 across such boundary margins.
    """
    intervals = np.array(promise.intervals)

    def fn(lam):
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.zeros_like(arr)
        for a, b in intervals:
            inside = (arr >= a) & (arr <= b)
            if margin == 0.0:
                out = np.where(inside, 1.0, out)
            else:
                ramp = np.ones_like(arr)
                if a > 0.0:
                    ramp = np.minimum(ramp, (arr - a) / margin)
                if b < 1.0:
                    ramp = np.minimum(ramp, (b - arr) / margin)
                out = np.where(inside, np.clip(ramp, 0.0, 1.0), out)
        return out if np.ndim(lam) else out[0]

    return SpectralProfile(kind="exact_piecewise", domain=(0.0, 1.0), fn=fn)


@lru_cache(maxsize=None)
def attenuation_profile(
    promise: RoundingPromise, gamma: float, delta_leak: float, mode: str
) -> SpectralProfile:
    """Attenuation function: 0 off the promise, 1 on its kappa*gamma truncation.

    gamma is the fraction of the minimum gap width consumed by each ramp.
    Exact mode interpolates linearly across the margins; poly mode builds a
    projection polynomial (gaps -> 0, truncated intervals -> 1) sharpened by
    -T3(p/2) with total plateau error delta_leak.
    """
    if gamma < 0:
        raise IntervalVanishes(f"attenuation factor gamma={gamma} must be nonnegative")
    margin = promise.kappa * gamma
    if margin > 0:
        promise.truncate(margin)  # raises IntervalVanishes when margins collide
    if mode == "exact":
        return _ramp_profile(promise, margin)
    if mode != "poly":
        raise DomainError(f"unknown attenuation mode {mode!r}")
    if margin == 0.0:
        raise IntervalVanishes(
            "poly-mode attenuation needs a positive ramp margin (gamma > 0 and kappa > 0)"
        )
    truncated = promise.truncate(margin)
    labeled = [(iv, 0) for iv in promise_complement(promise)]
    labeled += [(iv, 1) for iv in truncated.intervals]
    labeled.sort(key=lambda item: item[0][0])
    spec = ProfileSpec(
        intervals=tuple(iv for iv, _ in labeled),
        labels=tuple(c for _, c in labeled),
        delta=delta_leak / 2.0,
    )
    return amplify_t3(projection_poly(spec))


def paired_attenuation_profiles(
    promise: RoundingPromise, gamma: float, delta_leak: float
) -> tuple:
    """(exact, approximate) attenuation pair that agree on the ramp regions.

    The exact member is the idealized limit of the polynomial one: hard 0/1
    plateaus off the promise and on its truncation, and the polynomial's own
    values across the ramps, so the two differ by at most delta_leak anywhere.
    """
    poly = attenuation_profile(promise, gamma, delta_leak, mode="poly")
    margin = promise.kappa * gamma
    truncated = promise.truncate(margin)
    intervals = np.array(promise.intervals)
    trunc = np.array(truncated.intervals)

    def fn(lam):
        arr = np.atleast_1d(np.asarray(lam, dtype=float))
        out = np.asarray(poly.fn(arr), dtype=float).copy()
        in_promise = np.zeros(arr.shape, dtype=bool)
        for a, b in intervals:
            in_promise |= (arr >= a) & (arr <= b)
        out[~in_promise] = 0.0
        for a, b in trunc:
            plateau = (arr >= a) & (arr <= b)
            out[plateau] = 1.0
        return out if np.ndim(lam) else out[0]

    exact = SpectralProfile(kind="exact_piecewise", domain=(0.0, 1.0), fn=fn)
    return exact, poly


@lru_cache(maxsize=None)
def lr_profile(n: int, r: int, delta_sup: float, mode: str) -> SpectralProfile:
    """Profile behind the left-right measurement operator.

    Deletion windows of branch L are labeled 0 and those of branch R are
    labeled 1.  In poly mode the projection error is delta_sup/6, which
    makes p^2 <= delta_sup/3 on L windows and 1 - p^2 <= delta_sup/3 on R
    windows; exact mode uses 0/1 plateaus with linear ramps.
    """
    windows = [(w, 0) for w in deletion_windows(n, r, "L")]
    windows += [(w, 1) for w in deletion_windows(n, r, "R")]
    windows.sort(key=lambda item: item[0][0])
    if mode == "exact":
        xs, ys = [], []
        for (lo, hi), label in windows:
            xs.extend([lo, hi])
            ys.extend([float(label)] * 2)
        return piecewise_profile(xs, ys)
    if mode != "poly":
        raise DomainError(f"unknown lr mode {mode!r}")
    spec = ProfileSpec(
        intervals=tuple(w for w, _ in windows),
        labels=tuple(c for _, c in windows),
        delta=delta_sup / 6.0,
    )
    return projection_poly(spec)


# ---------------------------------------------------------------------------
# energy-estimation bit projectors
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class BitProjectorSet:
    """Per-bit profiles p^(b) and the derived interval profiles p~_x.

    The x-th interval profile is the product over bits of (p^(b))^2 when bit
    b of x is set and 1 - (p^(b))^2 otherwise; on the promise it is within
    delta_est of the indicator of interval x.
    """

    promise: RoundingPromise
    delta_est: float
    mode: str
    bit_profiles: tuple
    n_bits: int

    def interval_profile(self, x: int) -> SpectralProfile:
        if not 0 <= x < self.promise.s:
            raise TooManyIntervals(f"interval index {x} outside 0..{self.promise.s - 1}")
        factors = []
        degree = 0
        for b, pb in enumerate(self.bit_profiles):
            take = (x >> b) & 1
            factors.append((take, pb))
            if pb.degree is not None:
                degree += 2 * pb.degree

        def fn(lam):
            arr = np.asarray(lam, dtype=float)
            acc = np.ones_like(arr)
            for bit, pb in factors:
                sq = np.asarray(pb.fn(arr)) ** 2
                acc = acc * (sq if bit else 1.0 - sq)
            return acc

        return SpectralProfile(
            kind="polynomial" if self.mode == "poly" else "exact_piecewise",
            domain=(0.0, 1.0),
            fn=fn,
            degree=degree if self.mode == "poly" else None,
        )

    def all_interval_profiles(self) -> list:
        return [self.interval_profile(x) for x in range(self.promise.s)]


@lru_cache(maxsize=None)
def bit_projector_profiles(
    promise: RoundingPromise, delta_est: float, mode: str
) -> BitProjectorSet:
    """Build the per-bit projector profiles for interval-index estimation.

    Bit b (counting from the least significant) flips roughly 2^(n_bits - b)
    times across the intervals, and receives error budget
    delta_b = (delta_est/2) * 2^-(n_bits - b), so the budgets sum below
    delta_est/2 and the squared-product construction stays within delta_est.
    """
    s = promise.s
    if s > 2**15:
        raise TooManyIntervals(f"{s} intervals exceed the bit-projector budget")
    n_bits = max(1, math.ceil(math.log2(s))) if s > 1 else 1
    profiles = []
    for b in range(n_bits):
        labels = tuple(((x >> b) & 1) for x in range(s))
        delta_b = (delta_est / 2.0) * 2.0 ** -(n_bits - b)
        if mode == "exact":
            xs, ys = [], []
            for (a, bb), c in zip(promise.intervals, labels):
                xs.extend([a, bb])
                ys.extend([float(c)] * 2)
            profiles.append(piecewise_profile(xs, ys))
        elif mode == "poly":
            spec = ProfileSpec(intervals=promise.intervals, labels=labels, delta=delta_b / 2.0)
            profiles.append(amplify_t3(projection_poly(spec)))
        else:
            raise DomainError(f"unknown bit-projector mode {mode!r}")
    return BitProjectorSet(
        promise=promise, delta_est=delta_est, mode=mode,
        bit_profiles=tuple(profiles), n_bits=n_bits,
    )


# ---------------------------------------------------------------------------
# diagnostics
# ---------------------------------------------------------------------------

def profile_range(profile: SpectralProfile, npoints: int = 10001) -> tuple:
    """(min, max) of the profile on a uniform grid over [0, 1]."""
    grid = np.linspace(0.0, 1.0, npoints)
    vals = profile(grid)
    return float(np.min(vals)), float(np.max(vals))


def dump_csv(profile: SpectralProfile, path, npoints: int = 2001) -> None:
    """Write (lambda, value) samples over [0, 1] for external plotting."""
    grid = np.linspace(0.0, 1.0, npoints)
    vals = profile(grid)
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lambda", "value"])
        for x, y in zip(grid, vals):
            writer.writerow([f"{x:.17g}", f"{y:.17g}"])
