"""Memory kernels and model parameters.

Every kernel here is non-increasing on [0, inf) and has finite moments of all
orders, which is what the thinning sampler and the block schedule rely on.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import ClassVar

import numpy as np

from .errors import SupercriticalModel

# integer codes understood by the compiled simulation loops
KIND_ZERO = 0
KIND_EXPONENTIAL = 1
KIND_INDICATOR = 2


class Kernel:
    """Base class; concrete kernels are frozen dataclasses below."""

    kind: ClassVar[int]

    def __call__(self, t):
        t = np.asarray(t, dtype=float)
        if np.any(t < 0):
            raise ValueError("kernel evaluated at negative time")
        out = self._eval(t)
        return float(out) if out.ndim == 0 else out

    def _eval(self, t: np.ndarray) -> np.ndarray:
        raise NotImplementedError

    @property
    def mass(self) -> float:
        """Total mass Lambda = int_0^inf phi."""
        raise NotImplementedError

    def moment(self, q: int) -> float:
        raise NotImplementedError

    @property
    def l2_sq(self) -> float:
        raise NotImplementedError

    @property
    def peak(self) -> float:
        """phi(0), the largest value the kernel takes."""
        return float(self._eval(np.zeros(())))

    def cumulative(self, t):
        """int_0^t phi(s) ds."""
        raise NotImplementedError

    def sample_delays(self, rng: np.random.Generator, size: int) -> np.ndarray:
        """Draw from the normalized density phi / Lambda."""
        raise NotImplementedError

    @property
    def support(self) -> float:
        return math.inf

    def packed(self) -> tuple[int, float, float]:
        """(kind, p0, p1) for the compiled loops."""
        raise NotImplementedError


@dataclass(frozen=True)
class Zero(Kernel):
    kind: ClassVar[int] = KIND_ZERO

    def _eval(self, t):
        return np.zeros_like(t)

    @property
    def mass(self):
        return 0.0

    def moment(self, q):
        return 0.0

    @property
    def l2_sq(self):
        return 0.0

    def cumulative(self, t):
        return np.zeros_like(np.asarray(t, dtype=float)) + 0.0

    def sample_delays(self, rng, size):
        if size:
            raise ValueError("the zero kernel has no delay distribution")
        return np.empty(0)

    @property
    def support(self):
        return 0.0

    def packed(self):
        return (KIND_ZERO, 0.0, 0.0)


@dataclass(frozen=True)
class Exponential(Kernel):
    """phi(t) = alpha * exp(-beta t); Lambda = alpha / beta."""

    beta: float
    alpha: float
    kind: ClassVar[int] = KIND_EXPONENTIAL

    def __post_init__(self):
        if not self.beta > 0:
            raise ValueError(f"beta must be > 0, got {self.beta}")
        if not self.alpha >= 0:
            raise ValueError(f"alpha must be >= 0, got {self.alpha}")

    @classmethod
    def from_mass(cls, mass: float, beta: float = 1.0) -> Exponential:
        return cls(beta=beta, alpha=mass * beta)

    def _eval(self, t):
        return self.alpha * np.exp(-self.beta * t)

    @property
    def mass(self):
        return self.alpha / self.beta

    def moment(self, q):
        return self.alpha * math.factorial(q) / self.beta ** (q + 1)

    @property
    def l2_sq(self):
        return self.alpha**2 / (2.0 * self.beta)

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        return self.mass * -np.expm1(-self.beta * t)

    def sample_delays(self, rng, size):
        return rng.exponential(1.0 / self.beta, size)

    def packed(self):
        return (KIND_EXPONENTIAL, self.alpha, self.beta)


@dataclass(frozen=True)
class Indicator(Kernel):
    """phi(t) = height * 1[0 <= t <= width]; Lambda = height * width."""

    width: float
    height: float
    kind: ClassVar[int] = KIND_INDICATOR

    def __post_init__(self):
        if not self.width > 0:
            raise ValueError(f"width must be > 0, got {self.width}")
        if not self.height >= 0:
            raise ValueError(f"height must be >= 0, got {self.height}")

    @classmethod
    def from_mass(cls, mass: float, width: float = 1.0) -> Indicator:
        return cls(width=width, height=mass / width)

    def _eval(self, t):
        return np.where(t <= self.width, self.height, 0.0)

    @property
    def mass(self):
        return self.height * self.width

    def moment(self, q):
        return self.height * self.width ** (q + 1) / (q + 1)

    @property
    def l2_sq(self):
        return self.height**2 * self.width

    def cumulative(self, t):
        t = np.asarray(t, dtype=float)
        return self.height * np.minimum(t, self.width)

    def sample_delays(self, rng, size):
        return rng.uniform(0.0, self.width, size)

    @property
    def support(self):
        return self.width

    def packed(self):
        return (KIND_INDICATOR, self.height, self.width)


@dataclass(frozen=True)
class KernelStats:
    Lambda: float
    q_moment_value: float
    l2_norm: float


def kernel_eval(k: Kernel, t: float) -> float:
    return k(t)


def kernel_stats(k: Kernel, q: int) -> KernelStats:
    """Closed-form Lambda, int s^q phi(s) ds and int phi^2.

    ``l2_norm`` is the squared L2 norm, int_0^inf phi(s)^2 ds.
    """
    if q < 1:
        raise ValueError("q must be >= 1")
    return KernelStats(k.mass, k.moment(q), k.l2_sq)


@dataclass(frozen=True)
class ModelParams:
    mu: float
    p: float
    kernel: Kernel = field(default_factory=Zero)
    q_moment: int = 7

    def __post_init__(self):
        if not self.mu > 0:
            raise ValueError(f"mu must be > 0, got {self.mu}")
        if not 0.0 <= self.p <= 1.0:
            raise ValueError(f"p must lie in [0, 1], got {self.p}")

    @property
    def Lambda(self) -> float:
        return self.kernel.mass

    @property
    def branching(self) -> float:
        return self.kernel.mass * self.p


@dataclass(frozen=True)
class SubcriticalConstants:
    branching: float
    a: float
    c_pLambda: float


def check_subcritical(params: ModelParams) -> SubcriticalConstants:
    """Derived constants Lambda p, a = (1 + Lambda p)/2 and c_{p,Lambda}.

    Raises SupercriticalModel when Lambda p >= 1.
    """
    lam = params.Lambda
    b = lam * params.p
    if b >= 1.0:
        raise SupercriticalModel(
            f"Lambda * p = {lam:g} * {params.p:g} = {b:g} violates Lambda * p < 1"
        )
    c = (1.0 - b) ** 2 / (2.0 * lam**2) if lam > 0 else math.inf
    return SubcriticalConstants(branching=b, a=(1.0 + b) / 2.0, c_pLambda=c)
