"""Maximum-entropy treatment of unknown symptom-class shares.

When the class shares are only known to satisfy ``lower_s <= rho_s <=
upper_s``, the share vector is modelled as uniformly distributed on the
feasible region (the simplex cut by those box bounds), and the corrected
estimator uses its mean.  The mean is computed by rejection sampling from
the uniform distribution on the simplex, which is exact in distribution and
needs no assumptions about the region's geometry.

For the two-class convenience-sampling model, where a symptomatic individual
is at least as likely to be tested as an asymptomatic one, the data imply
``N_T1 / N <= rho_1 <= N_T1 / N_T`` and the mean has the closed form of
:func:`covid_shares`; the generic sampler serves as its independent check.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import EmptyRegion, InvalidSpec, RejectionStarvation
from .rng import as_generator

_SUM_TOL = 1e-12
MIN_ACCEPTANCE = 1e-6
_PROBE_PROPOSALS = 2_000_000
_MAX_PROPOSALS = 50_000_000


@dataclass(frozen=True, eq=False)
class SimplexSlab:
    """The set of share vectors with ``lower_s <= rho_s <= upper_s`` summing to 1."""

    lower: np.ndarray
    upper: np.ndarray

    def __post_init__(self):
        lower = np.asarray(self.lower, dtype=float)
        upper = np.asarray(self.upper, dtype=float)
        if lower.ndim != 1 or lower.shape != upper.shape or lower.size == 0:
            raise InvalidSpec("bounds must be two equal-length non-empty vectors")
        if np.any(lower < 0.0) or np.any(upper > 1.0):
            raise InvalidSpec("bounds must lie in [0, 1]")
        if np.any(lower > upper):
            raise InvalidSpec("each lower bound must not exceed its upper bound")
        if float(lower.sum()) > 1.0 + _SUM_TOL or float(upper.sum()) < 1.0 - _SUM_TOL:
            raise EmptyRegion(
                f"no share vector satisfies the bounds: sum(lower)={float(lower.sum())!r}, "
                f"sum(upper)={float(upper.sum())!r}"
            )
        lower.setflags(write=False)
        upper.setflags(write=False)
        object.__setattr__(self, "lower", lower)
        object.__setattr__(self, "upper", upper)

    @property
    def s(self) -> int:
        return self.lower.size

    @property
    def is_degenerate(self) -> bool:
        """True when the region is the single point ``lower`` (= ``upper``)."""
        return bool(np.array_equal(self.lower, self.upper))

    @classmethod
    def covid(cls, n: int, n_t: int, n_t1: int) -> "SimplexSlab":
        """Two-class bounds implied by convenience sampling of symptomatics."""
        _check_covid_counts(n, n_t, n_t1)
        a1 = n_t1 / n
        b1 = n_t1 / n_t
        return cls(lower=np.array([1.0 - b1, a1]), upper=np.array([1.0 - a1, b1]))


@dataclass(frozen=True, eq=False)
class ShareEstimate:
    """Monte Carlo estimate of the mean shares with per-class standard errors."""

    estimate: np.ndarray
    stderr: np.ndarray
    n_samples: int
    acceptance_rate: float


def expected_shares(slab: SimplexSlab, rng=None, n_samples: int = 4096) -> ShareEstimate:
    """Mean of the uniform distribution on the feasible share region.

    Proposes uniform points on the simplex and keeps those inside the box
    bounds until ``n_samples`` draws are accepted; the accepted points are
    exactly uniform on the region.  A degenerate (single-point) region is
    returned exactly, with zero standard errors and no randomness consumed.

    Raises
    ------
    RejectionStarvation
        If the acceptance rate stays below ``1e-6``, i.e. the region is too
        thin a sliver of the simplex for rejection sampling to be practical.
    """
    if slab.is_degenerate:
        zeros = np.zeros(slab.s)
        return ShareEstimate(
            estimate=slab.lower.copy(), stderr=zeros, n_samples=0, acceptance_rate=1.0
        )
    if rng is None:
        raise InvalidSpec("a non-degenerate region needs an RngStream for integration")
    if n_samples < 1:
        raise InvalidSpec("n_samples must be at least 1")

    gen = as_generator(rng)
    alpha = np.ones(slab.s)
    accepted: list[np.ndarray] = []
    n_accepted = 0
    proposals = 0
    batch = max(8192, int(n_samples))
    while n_accepted < n_samples:
        draws = gen.dirichlet(alpha, size=batch)
        keep = np.all((draws >= slab.lower) & (draws <= slab.upper), axis=1)
        kept = draws[keep]
        if kept.shape[0]:
            accepted.append(kept)
            n_accepted += kept.shape[0]
        proposals += batch
        rate = n_accepted / proposals
        if proposals >= _PROBE_PROPOSALS and rate < MIN_ACCEPTANCE:
            raise RejectionStarvation(
                f"acceptance rate {rate:.2e} below {MIN_ACCEPTANCE:.0e} "
                f"after {proposals} proposals"
            )
        if proposals >= _MAX_PROPOSALS:
            raise RejectionStarvation(
                f"gave up after {proposals} proposals with acceptance rate {rate:.2e}"
            )

    samples = np.concatenate(accepted, axis=0)[:n_samples]
    estimate = samples.mean(axis=0)
    estimate = estimate / estimate.sum()
    if n_samples > 1:
        stderr = samples.std(axis=0, ddof=1) / np.sqrt(n_samples)
    else:
        stderr = np.full(slab.s, np.nan)
    return ShareEstimate(
        estimate=estimate,
        stderr=stderr,
        n_samples=int(n_samples),
        acceptance_rate=n_accepted / proposals,
    )


def _check_covid_counts(n: int, n_t: int, n_t1: int) -> None:
    if not 0 < n_t <= n:
        raise InvalidSpec(f"need 0 < N_T <= N, got N_T={n_t}, N={n}")
    if not 0 <= n_t1 <= n_t:
        raise InvalidSpec(f"need 0 <= N_T1 <= N_T, got N_T1={n_t1}, N_T={n_t}")


def covid_shares(n: int, n_t: int, n_t1: int) -> np.ndarray:
    """Closed-form mean shares for the two-class convenience-sampling model.

    ``rho1_hat = (N_T1 / (2 N_T)) (N_T / N + 1)``, the midpoint of the
    interval ``(N_T1 / N, N_T1 / N_T)``, and ``rho0_hat = 1 - rho1_hat``.
    """
    _check_covid_counts(n, n_t, n_t1)
    rho1 = (n_t1 / (2.0 * n_t)) * (n_t / n + 1.0)
    return np.array([1.0 - rho1, rho1])
