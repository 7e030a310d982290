"""Fluctuation scales, Gaussian limit laws and the confidence interval for p."""

from __future__ import annotations

import math
from dataclasses import dataclass

from scipy.special import ndtri

from .errors import DegenerateEstimate, MixedRegime
from .estimators import Estimate, delta_schedule
from .kernels import ModelParams, check_subcritical

SEPARATION_THRESHOLD = 5.0
REGIMES = ("i", "ii", "iii")


@dataclass(frozen=True)
class RateTerms:
    """r1 = 1/sqrt(K), r2 = (N/K) sqrt(Delta_t/t), r3 = N/(t sqrt(K)).

    ``dominant`` is "i" (r1), "iii" (r2), "ii" (r3) or "mixed".  Regime
    labels follow the limit theorem: regime ii is driven by r3.
    """

    r1: float
    r2: float
    r3: float
    gamma: float
    delta_t: float
    dominant: str
    separation: float


def _verdict(r1: float, r2: float, r3: float, threshold: float) -> tuple[str, float]:
    terms = {"i": r1, "iii": r2, "ii": r3}
    label = max(terms, key=terms.get)
    top = terms[label]
    rest = sum(terms.values()) - top
    sep = math.inf if rest == 0 else top / rest
    return (label if sep >= threshold else "mixed"), sep


def rate_terms(N: int, K: int, t: float, q: int, threshold: float = SEPARATION_THRESHOLD) -> RateTerms:
    if not 1 <= K <= N:
        raise ValueError("need 1 <= K <= N")
    delta = delta_schedule(t, q)
    r1 = 1.0 / math.sqrt(K)
    r2 = N / K * math.sqrt(delta / t)
    r3 = N / (t * math.sqrt(K))
    dominant, sep = _verdict(r1, r2, r3, threshold)
    return RateTerms(r1=r1, r2=r2, r3=r3, gamma=K / N, delta_t=delta, dominant=dominant, separation=sep)


@dataclass(frozen=True)
class TheoreticalLaw:
    regime: str
    scale: float
    variance: float

    @property
    def sd(self) -> float:
        return math.sqrt(self.variance)


def regime_variance(regime: str, mu: float, Lambda: float, p: float, gamma: float) -> float:
    b = Lambda * p
    if regime == "i":
        return (p * (1 - p)) ** 2
    if regime == "ii":
        return 2 * (1 - b) ** 2 / (mu**2 * Lambda**4)
    if regime == "iii":
        inner = (1 - gamma) * (1 - b) ** 3 + gamma * (1 - b)
        return 6 * (1 - p) ** 2 / Lambda**2 * inner**2
    raise ValueError(f"unknown regime {regime!r}")


def regime_scale(regime: str, terms: RateTerms) -> float:
    """Multiplier applied to (p_hat - p): the reciprocal of the regime's rate term."""
    if regime == "i":
        return 1.0 / terms.r1
    if regime == "ii":
        return 1.0 / terms.r3
    if regime == "iii":
        return 1.0 / terms.r2
    raise ValueError(f"unknown regime {regime!r}")


def theoretical_law(params: ModelParams, terms: RateTerms, regime: str | None = None) -> TheoreticalLaw:
    """Limit law of scale * (p_hat - p) in the dominant regime.

    ``regime`` forces a regime regardless of the dominance verdict.
    """
    regime = terms.dominant if regime is None else regime
    if regime == "mixed":
        raise MixedRegime(
            f"no single dominant rate term (r1={terms.r1:.4g}, r2={terms.r2:.4g}, "
            f"r3={terms.r3:.4g}, separation {terms.separation:.3g})"
        )
    if not params.p > 0:
        raise ValueError("the limit laws need p > 0")
    check_subcritical(params)
    if regime == "iii" and not 0.0 <= terms.gamma <= 1.0:
        raise ValueError("gamma must lie in [0, 1]")
    var = regime_variance(regime, params.mu, params.Lambda, params.p, terms.gamma)
    return TheoreticalLaw(regime=regime, scale=regime_scale(regime, terms), variance=var)


def _plug_in_terms(est: Estimate, N: int, K: int, t: float, delta_t: float, gamma: float) -> tuple[float, float, float]:
    mu, lam, p = est.mu_hat, est.Lambda_hat, est.p_hat
    if not (N > 0 and K > 0 and t > 0 and delta_t > 0):
        raise ValueError("N, K, t and Delta_t must be positive")
    t1 = p * (1 - p) / math.sqrt(K)
    if mu == 0 and lam == 0 and p == 0:
        return t1, 0.0, 0.0
    if mu <= 0 or lam <= 0:
        raise DegenerateEstimate(f"plug-in needs mu_hat > 0 and Lambda_hat > 0 (got {mu}, {lam})")
    b = 1 - lam * p
    t2 = math.sqrt(2) * b / (mu * lam**2) * N / (t * math.sqrt(K))
    t3 = (1 - p) / lam * ((1 - gamma) * b**3 + gamma * b) * N / K * math.sqrt(6 * delta_t / t)
    return t1, t2, t3


def combined_normalizer(est: Estimate, N: int, K: int, t: float, delta_t: float, gamma: float) -> float:
    """max of the three plug-in scaled rate terms; (p_hat - p) / this is ~ N(0, 1)."""
    return max(_plug_in_terms(est, N, K, t, delta_t, gamma))


def normal_quantile(prob: float) -> float:
    """Standard normal quantile Phi^{-1}(prob)."""
    if not 0.0 < prob < 1.0:
        raise ValueError("prob must lie in (0, 1)")
    return float(ndtri(prob))


def confidence_interval(
    est: Estimate, N: int, K: int, t: float, delta_t: float, gamma: float, alpha: float
) -> float:
    """Half-width I with P(|p_hat - p| <= I) -> 1 - alpha."""
    if not 0.0 < alpha <= 1.0:
        raise ValueError("alpha must lie in (0, 1]")
    if alpha == 1.0:
        return 0.0
    z = normal_quantile(1.0 - alpha / 2.0)
    return z * sum(_plug_in_terms(est, N, K, t, delta_t, gamma))
