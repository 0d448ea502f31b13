"""Exact stratified-population model and its closed-form summaries.

A population of ``N`` individuals splits into ``S x 2`` subpopulations indexed
by a symptom level ``s`` (0 = no symptoms, S-1 = strongest symptoms) and an
infection status ``i`` (0 = healthy, 1 = infected).  A share matrix
``rho[s, i]`` fixes the exact subpopulation sizes ``N * rho[s, i]``, and a
matrix ``pi[s, i]`` gives the probability that an individual of class
``(s, i)`` volunteers for testing.

Everything in this module is a deterministic function of that layout:

* ``population_prevalence``   -- the infected fraction of the whole population,
* ``testing_prevalence``      -- the expected infected fraction among tested
  individuals under the biased testing probabilities,
* ``active_info_testing``     -- ``log(p / p0)``, the information (in nats)
  that self-selection into testing carries about infection status,
* ``exact_quantities``        -- the asymptotic variance components ``V1..V4``
  and the limits used by the normal approximations,
* ``corrected_prevalence_limit`` -- the large-N limit of the share-weighted
  corrected estimator, useful as a bias oracle when the weighting assumption
  is wrong (testing probabilities that depend on infection status).

Randomness (one realised testing round) lives in :mod:`prevbias.sampler`;
estimators computed from realised counts live in :mod:`prevbias.estimators`.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from fractions import Fraction

import numpy as np

from .errors import (
    InvalidSpec,
    MechanismMismatch,
    UndefinedActiveInfo,
    ZeroTestingMass,
)

SHARE_SUM_TOL = 1e-12
_INT_ABS_TOL = 1e-6


def _coerce_matrix(values, name):
    """Convert a (S, 2) matrix of numbers into floats plus, where the caller
    supplied strings / Fractions / ints, an exact rational representation.

    Decimal strings are the lossless path: ``"0.05"`` stays 1/20 exactly, so
    integer subpopulation-size checks do not inherit binary-float drift.
    """
    rows = list(values)
    if not rows:
        raise InvalidSpec(f"{name} must have at least one symptom class")
    floats = np.zeros((len(rows), 2), dtype=float)
    exact: list[list[Fraction | None]] = []
    for s, row in enumerate(rows):
        cells = list(row)
        if len(cells) != 2:
            raise InvalidSpec(f"{name}[{s}] must have exactly two entries (healthy, infected)")
        exact_row: list[Fraction | None] = []
        for i, cell in enumerate(cells):
            if isinstance(cell, Fraction):
                frac = cell
            elif isinstance(cell, str):
                try:
                    frac = Fraction(cell)
                except ValueError as exc:
                    raise InvalidSpec(f"{name}[{s},{i}] is not a number: {cell!r}") from exc
            elif isinstance(cell, (int, np.integer)):
                frac = Fraction(int(cell))
            elif isinstance(cell, (float, np.floating)):
                frac = None
            else:
                raise InvalidSpec(f"{name}[{s},{i}] has unsupported type {type(cell).__name__}")
            floats[s, i] = float(cell) if frac is None else float(frac)
            exact_row.append(frac)
        exact.append(exact_row)
    return floats, exact


@dataclass(frozen=True, eq=False)
class PopulationSpec:
    """Exact stratified population: size, shares, and testing probabilities.

    Parameters
    ----------
    n : int
        Population size.
    rho : array-like, shape (S, 2)
        Subpopulation shares ``rho[s, i]``.  Entries may be floats, decimal
        strings, or :class:`fractions.Fraction`; the latter two are validated
        exactly.  Shares must sum to one and every ``n * rho[s, i]`` must be a
        whole number (the model is an exact finite population, not a density).
    pi : array-like, shape (S, 2)
        Testing probabilities ``pi[s, i]`` in ``[0, 1]``.
    """

    n: int
    rho: np.ndarray
    pi: np.ndarray

    def __post_init__(self):
        if not isinstance(self.n, (int, np.integer)) or self.n <= 0:
            raise InvalidSpec(f"population size must be a positive integer, got {self.n!r}")
        object.__setattr__(self, "n", int(self.n))

        rho_f, rho_exact = _coerce_matrix(self.rho, "rho")
        pi_f, _ = _coerce_matrix(self.pi, "pi")
        if pi_f.shape != rho_f.shape:
            raise InvalidSpec(f"pi shape {pi_f.shape} does not match rho shape {rho_f.shape}")
        if np.any((rho_f < 0.0) | (rho_f > 1.0)):
            raise InvalidSpec("all shares rho[s, i] must lie in [0, 1]")
        if np.any((pi_f < 0.0) | (pi_f > 1.0)):
            raise InvalidSpec("all testing probabilities pi[s, i] must lie in [0, 1]")

        all_exact = all(f is not None for row in rho_exact for f in row)
        if all_exact:
            total = sum(f for row in rho_exact for f in row)
            if total != 1:
                raise InvalidSpec(f"shares must sum to 1 exactly, got {total}")
        else:
            total = float(rho_f.sum())
            if abs(total - 1.0) > SHARE_SUM_TOL:
                raise InvalidSpec(f"shares must sum to 1 within {SHARE_SUM_TOL}, got {total!r}")

        n_si = np.zeros_like(rho_f, dtype=np.int64)
        for s in range(rho_f.shape[0]):
            for i in range(2):
                frac = rho_exact[s][i]
                if frac is not None:
                    size = frac * self.n
                    if size.denominator != 1:
                        raise InvalidSpec(
                            f"stratum (s={s}, i={i}): N*rho = {self.n}*{frac} = {size} is not an integer"
                        )
                    n_si[s, i] = int(size)
                else:
                    size_f = self.n * rho_f[s, i]
                    size_r = round(size_f)
                    if abs(size_f - size_r) > _INT_ABS_TOL:
                        raise InvalidSpec(
                            f"stratum (s={s}, i={i}): N*rho = {size_f!r} is not a whole number"
                        )
                    n_si[s, i] = int(size_r)
        if int(n_si.sum()) != self.n:
            raise InvalidSpec(
                f"stratum sizes sum to {int(n_si.sum())} but the population size is {self.n}"
            )

        rho_f.setflags(write=False)
        pi_f.setflags(write=False)
        n_si.setflags(write=False)
        object.__setattr__(self, "rho", rho_f)
        object.__setattr__(self, "pi", pi_f)
        object.__setattr__(self, "_n_si", n_si)

    @property
    def s(self) -> int:
        """Number of symptom classes."""
        return self.rho.shape[0]

    @property
    def n_si(self) -> np.ndarray:
        """Exact subpopulation sizes ``N * rho[s, i]`` (integers)."""
        return self._n_si

    @property
    def n_s(self) -> np.ndarray:
        """Symptom-class sizes ``N_s = N_s0 + N_s1``."""
        return self._n_si.sum(axis=1)

    @property
    def rho_s(self) -> np.ndarray:
        """Symptom-class shares ``rho_s = rho_s0 + rho_s1``."""
        return self.rho.sum(axis=1)

    @property
    def is_mar(self) -> bool:
        """True when testing probabilities depend on the symptom level only."""
        return bool(np.array_equal(self.pi[:, 0], self.pi[:, 1]))

    @property
    def pi_s(self) -> np.ndarray:
        """Per-symptom testing probability; defined only when :attr:`is_mar`."""
        if not self.is_mar:
            raise MechanismMismatch("pi[s, i] varies with infection status i")
        return self.pi[:, 0]

    @property
    def p0s(self) -> np.ndarray:
        """Within-class prevalences ``rho_s1 / rho_s`` (NaN for empty classes)."""
        rho_s = self.rho_s
        out = np.full(self.s, np.nan)
        np.divide(self.rho[:, 1], rho_s, out=out, where=rho_s > 0)
        return out


MCAR = "mcar"
MAR = "mar"
MAXENT = "maxent"
_KINDS = (MCAR, MAR, MAXENT)


@dataclass(frozen=True, eq=False)
class Mechanism:
    """How the bias correction treats the unknown sampling scheme.

    ``mcar``   assumes one common testing probability (no correction needed),
    ``mar``    assumes per-symptom probabilities with *known* class shares
    ``rho_s``, and ``maxent`` assumes per-symptom probabilities with the class
    shares only known to lie in ``[lower_s, upper_s]`` (corrected through the
    mean of the uniform distribution on the feasible share region).
    """

    kind: str
    rho_s: np.ndarray | None = None
    lower: np.ndarray | None = None
    upper: np.ndarray | None = None

    def __post_init__(self):
        if self.kind not in _KINDS:
            raise InvalidSpec(f"mechanism kind must be one of {_KINDS}, got {self.kind!r}")
        if self.kind == MAR:
            if self.rho_s is None:
                raise InvalidSpec("mar mechanism requires known class shares rho_s")
            shares = np.asarray(self.rho_s, dtype=float)
            if shares.ndim != 1 or shares.size == 0:
                raise InvalidSpec("rho_s must be a non-empty vector")
            if np.any((shares < 0.0) | (shares > 1.0)):
                raise InvalidSpec("rho_s entries must lie in [0, 1]")
            if abs(float(shares.sum()) - 1.0) > SHARE_SUM_TOL:
                raise InvalidSpec(f"rho_s must sum to 1 within {SHARE_SUM_TOL}")
            shares.setflags(write=False)
            object.__setattr__(self, "rho_s", shares)
        if self.kind == MAXENT and self.lower is not None:
            lower = np.asarray(self.lower, dtype=float)
            upper = np.asarray(self.upper, dtype=float)
            if lower.shape != upper.shape or lower.ndim != 1:
                raise InvalidSpec("maxent bounds must be two equal-length vectors")
            if np.any(lower < 0.0) or np.any(upper > 1.0) or np.any(lower > upper):
                raise InvalidSpec("maxent bounds must satisfy 0 <= lower_s <= upper_s <= 1")
            lower.setflags(write=False)
            upper.setflags(write=False)
            object.__setattr__(self, "lower", lower)
            object.__setattr__(self, "upper", upper)

    @classmethod
    def mcar(cls) -> "Mechanism":
        return cls(kind=MCAR)

    @classmethod
    def mar(cls, rho_s) -> "Mechanism":
        return cls(kind=MAR, rho_s=rho_s)

    @classmethod
    def maxent(cls, lower=None, upper=None) -> "Mechanism":
        """Bounded-share correction; omit the bounds to derive them from the
        observed counts (two-class convenience-sampling form)."""
        if (lower is None) != (upper is None):
            raise InvalidSpec("provide both maxent bounds or neither")
        return cls(kind=MAXENT, lower=lower, upper=upper)

    def check_against(self, spec: PopulationSpec) -> None:
        """Validate mechanism metadata against a concrete population."""
        if self.kind == MAR:
            if self.rho_s.shape != (spec.s,):
                raise InvalidSpec(f"rho_s has {self.rho_s.size} classes, population has {spec.s}")
            if np.max(np.abs(self.rho_s - spec.rho_s)) > SHARE_SUM_TOL:
                raise InvalidSpec("mar mechanism shares are inconsistent with the population shares")
        elif self.kind == MAXENT and self.lower is not None:
            if self.lower.shape != (spec.s,):
                raise InvalidSpec(f"maxent bounds have {self.lower.size} classes, population has {spec.s}")


@dataclass(frozen=True, eq=False)
class AsymptoticQuantities:
    """Deterministic inputs to the normal approximations.

    ``v1`` captures sampling noise of the within-class prevalence estimates
    inside the biased estimator, ``v2`` the noise of the tested-class
    proportions around their expectations, ``v3`` the noise of the corrected
    estimator given the share weights, and ``v4`` the covariance that couples
    the biased and corrected errors.  ``p_tilde0`` is the testing-rate
    weighted average of the class prevalences and ``p_bar0`` the probability
    limit of the corrected estimator.
    """

    p0: float
    p: float
    p0s: np.ndarray
    rho_tilde: np.ndarray
    p_tilde0: float
    rho_bar: np.ndarray
    p_bar0: float
    v1: float
    v2: float
    v3: float
    v4: float
    i_plus_t: float

    def validate(self) -> None:
        """Raise if a mathematical invariant is violated (bug guard)."""
        for name in ("p0", "p", "p_tilde0", "p_bar0"):
            value = getattr(self, name)
            if not 0.0 <= value <= 1.0:
                raise InvalidSpec(f"{name}={value!r} outside [0, 1]")
        if abs(float(self.rho_tilde.sum()) - 1.0) > SHARE_SUM_TOL:
            raise InvalidSpec("rho_tilde does not sum to 1")
        if min(self.v1, self.v2, self.v3) < 0.0:
            raise InvalidSpec("variance components must be nonnegative")
        if self.v4 **2 > self.v1 * self.v3 + 1e-9:
            raise InvalidSpec("v4^2 exceeds v1*v3 beyond tolerance")


def population_prevalence(spec: PopulationSpec) -> float:
    """Infected fraction of the full population, ``sum_s rho_s1``."""
    return float(spec.rho[:, 1].sum())


def testing_prevalence(spec: PopulationSpec) -> float:
    """Expected infected fraction among tested individuals.

    ``p = sum_s rho_s1 pi_s1 / sum_{s,i} rho_si pi_si``; reduces to the
    population prevalence when all testing probabilities coincide.
    """
    denominator = float((spec.rho * spec.pi).sum())
    if denominator <= 0.0:
        raise ZeroTestingMass("no individual has a positive testing probability")
    numerator = float((spec.rho[:, 1] * spec.pi[:, 1]).sum())
    return numerator / denominator


def active_info_testing(spec: PopulationSpec) -> float:
    """Active information of testing bias, ``log(p / p0)`` in nats."""
    p0 = population_prevalence(spec)
    p = testing_prevalence(spec)
    if p0 <= 0.0 or p <= 0.0:
        raise UndefinedActiveInfo(f"log(p/p0) undefined for p={p!r}, p0={p0!r}")
    return math.log(p / p0)


def corrected_prevalence_limit(spec: PopulationSpec, weights=None) -> float:
    """Large-N limit of the share-weighted corrected estimator.

    Each symptom class contributes its limiting positive-test rate
    ``rho_s1 pi_s1 / (rho_s0 pi_s0 + rho_s1 pi_s1)`` weighted by ``weights``
    (the true class shares by default).  When testing probabilities depend on
    infection status this limit differs from the population prevalence; the
    gap ``|limit - p0|`` is the asymptotic bias floor of the correction.
    """
    w = spec.rho_s if weights is None else np.asarray(weights, dtype=float)
    if w.shape != (spec.s,):
        raise InvalidSpec("weights must have one entry per symptom class")
    total = 0.0
    for s in range(spec.s):
        if w[s] <= 0.0:
            continue
        mass = spec.rho[s, 0] * spec.pi[s, 0] + spec.rho[s, 1] * spec.pi[s, 1]
        if mass <= 0.0:
            raise ZeroTestingMass(f"symptom class {s} has zero testing mass but positive weight")
        total += w[s] * (spec.rho[s, 1] * spec.pi[s, 1] / mass)
    return float(total)


def exact_quantities(
    spec: PopulationSpec,
    mech: Mechanism,
    rho_bar=None,
) -> AsymptoticQuantities:
    """Evaluate the closed-form asymptotic quantities for a population.

    Requires per-symptom testing probabilities (``pi[s, i] = pi_s``).  The
    limiting share weights ``rho_bar`` are the true class shares under the
    mcar/mar mechanisms; under maxent they must be supplied by the caller
    (the mean shares over the feasible region, see
    :func:`prevbias.maxent.expected_shares`).

    Returns
    -------
    AsymptoticQuantities
        With variance components

        ``v1 = sum_s rho_s pi_s (1-pi_s) p0s (1-p0s) / (sum_s rho_s pi_s)^2``,
        ``v2 = sum_s rho_s pi_s (1-pi_s) (p0s - p_tilde0)^2 / (sum_s rho_s pi_s)^2``,
        ``v3 = sum_s rho_bar_s^2 rho_s^{-1} ((1-pi_s)/pi_s) p0s (1-p0s)``,
        ``v4 = sum_s rho_tilde_s rho_bar_s rho_s^{-1} ((1-pi_s)/pi_s) p0s (1-p0s)``.
    """
    if not spec.is_mar:
        raise MechanismMismatch(
            "asymptotic quantities require pi[s, i] = pi_s; "
            "for general populations only p0, p and the testing information are defined"
        )
    rho_s = spec.rho_s
    pi_s = spec.pi_s
    if np.any(rho_s <= 0.0):
        raise InvalidSpec("every symptom class must have positive share")
    if np.any(pi_s <= 0.0):
        raise ZeroTestingMass("every symptom class must have positive testing probability")

    if mech.kind == MAXENT:
        if rho_bar is None:
            raise InvalidSpec("maxent mechanism requires limiting expected shares rho_bar")
        rb = np.asarray(rho_bar, dtype=float)
        if rb.shape != (spec.s,):
            raise InvalidSpec("rho_bar must have one entry per symptom class")
    else:
        if mech.kind == MAR:
            mech.check_against(spec)
        rb = np.array(rho_s, dtype=float, copy=True)

    p0s = spec.p0s
    d = float(rho_s @ pi_s)
    rho_tilde = rho_s * pi_s / d
    p = float(rho_tilde @ p0s)
    p_tilde0 = float((rho_s * pi_s * p0s).sum() / d)

    noise = p0s * (1.0 - p0s)
    v1 = float((rho_s * pi_s * (1.0 - pi_s) * noise).sum() / d**2)
    v2 = float((rho_s * pi_s * (1.0 - pi_s) * (p0s - p_tilde0) ** 2).sum() / d**2)
    odds = (1.0 - pi_s) / pi_s
    v3 = float((rb**2 / rho_s * odds * noise).sum())
    v4 = float((rho_tilde * rb / rho_s * odds * noise).sum())

    p0 = population_prevalence(spec)
    p_bar0 = float(rb @ p0s)
    i_plus_t = math.log(p / p0) if p > 0.0 and p0 > 0.0 else math.nan

    return AsymptoticQuantities(
        p0=p0,
        p=p,
        p0s=p0s,
        rho_tilde=rho_tilde,
        p_tilde0=p_tilde0,
        rho_bar=rb,
        p_bar0=p_bar0,
        v1=v1,
        v2=v2,
        v3=v3,
        v4=v4,
        i_plus_t=i_plus_t,
    )
