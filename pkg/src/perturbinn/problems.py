"""Problem descriptions for the weakly nonlinear systems the toolkit solves.

A problem is a linear operator plus a polynomial nonlinearity scaled by a
small parameter.  Four families are supported: the canonical nonlinear
oscillator, the equilibrium-centered predator-prey system, and the weakly
nonlinear reaction-diffusion and wave equations.
"""

import warnings
from dataclasses import dataclass, field

import numpy as np

__all__ = ["OscillatorSpec", "PdeOperatorSpec", "NonlinearProblemSpec",
           "distribute_initial_conditions"]


@dataclass(frozen=True)
class OscillatorSpec:
    """x'' + 2*zeta*omega0*x' + omega0^2*x + eps*P(x) = sum Gamma_k cos(Omega_k t + phi_k).

    ``nonlinearity`` is either an integer power q >= 2 (monomial x^q) or a
    list of (coefficient, power) pairs for polynomial P(x).
    """

    omega0: float = 1.0
    zeta: float = 0.0
    nonlinearity: object = 3
    forcing: tuple = ()          # (Gamma_k, Omega_k, phi_k) triples
    ic: tuple = (1.0, 0.0)

    def __post_init__(self):
        if self.omega0 <= 0:
            raise ValueError(f"omega0 must be positive, got {self.omega0}")
        if self.zeta < 0:
            raise ValueError(f"zeta must be nonnegative, got {self.zeta}")
        poly = self.polynomial()
        if not poly:
            raise ValueError("nonlinearity must be nonempty")
        for _, q in poly:
            if q < 2 or q != int(q):
                raise ValueError(f"nonlinearity powers must be integers >= 2, got {q}")

    def polynomial(self):
        """Nonlinearity as a list of (coefficient, power) pairs."""
        if isinstance(self.nonlinearity, (int, np.integer)):
            return [(1.0, int(self.nonlinearity))]
        return [(float(c), int(q)) for c, q in self.nonlinearity]

    def external_forcing(self, t):
        t = np.asarray(t, dtype=float)
        f = np.zeros_like(t)
        for gam, om, phi in self.forcing:
            f += gam * np.cos(om * t + phi)
        return f


@dataclass(frozen=True)
class PdeOperatorSpec:
    """Spatial operator data for the PDE families.

    kind "kpp_fisher": u_t - D u_xx - eps u(1-u) = f, Dirichlet boundaries.
    kind "wave":       u_tt - c^2 u_xx + eps u^q = f, Dirichlet, u_t(x,0)=0.
    """

    kind: str = "kpp_fisher"
    diffusion: float = 0.1
    speed: float = 1.0
    q: int = 3
    ic: object = None            # callable u(x, 0)
    bc: tuple = (0.0, 0.0)       # Dirichlet values at x_min, x_max

    def __post_init__(self):
        if self.kind not in ("kpp_fisher", "wave"):
            raise ValueError(f"unknown pde kind {self.kind!r}")
        if self.kind == "kpp_fisher" and self.diffusion <= 0:
            raise ValueError("diffusion coefficient must be positive")
        if self.kind == "wave" and self.speed <= 0:
            raise ValueError("wave speed must be positive")


@dataclass(frozen=True)
class NonlinearProblemSpec:
    """One weakly nonlinear problem instance.

    kind: "oscillator" | "lotka_volterra" | "kpp_fisher" | "wave"
    """

    kind: str
    epsilon: float
    max_order: int = 5
    oscillator: OscillatorSpec = None
    lv_alpha: float = None
    lv_ic: tuple = None          # (x(0), y(0)) populations
    pde: PdeOperatorSpec = None
    time_domain: tuple = (0.0, 10.0)
    space_domain: tuple = None
    ic_strategy: str = "leading_order"
    external_forcing: object = None   # PDE forcing f(x, t); None means unforced

    def __post_init__(self):
        if self.kind not in ("oscillator", "lotka_volterra", "kpp_fisher", "wave"):
            raise ValueError(f"unknown problem kind {self.kind!r}")
        if self.max_order < 0:
            raise ValueError(f"max_order must be >= 0, got {self.max_order}")
        if not np.isfinite(self.epsilon):
            raise ValueError("epsilon must be finite")
        if abs(self.epsilon) > 1.0:
            warnings.warn(f"|epsilon| = {abs(self.epsilon)} > 1: the series is "
                          "asymptotic in epsilon and may diverge", stacklevel=2)
        t0, t1 = self.time_domain
        if not t1 > t0:
            raise ValueError(f"time domain must satisfy t_max > t_min, got {self.time_domain}")
        if self.ic_strategy not in ("leading_order", "uniform"):
            raise ValueError(f"unknown ic strategy {self.ic_strategy!r}")
        if self.kind == "oscillator" and self.oscillator is None:
            raise ValueError("oscillator problems need an OscillatorSpec")
        if self.kind == "lotka_volterra":
            if self.lv_alpha is None or self.lv_alpha <= 0:
                raise ValueError("lotka_volterra needs alpha > 0")
            if self.lv_ic is None:
                raise ValueError("lotka_volterra needs an initial population pair")
        if self.kind in ("kpp_fisher", "wave"):
            if self.pde is None or self.space_domain is None:
                raise ValueError("pde problems need a PdeOperatorSpec and space domain")

    def lv_perturbation_ic(self):
        """Initial values of the equilibrium-offset variables (xi, eta).

        Populations are x = 1 + eps*xi and y = 1 + eps*eta around the
        nontrivial steady state (1, 1).
        """
        x0, y0 = self.lv_ic
        return (x0 - 1.0) / self.epsilon, (y0 - 1.0) / self.epsilon


def distribute_initial_conditions(strategy, ic, epsilon, p):
    """Split the user initial condition across hierarchy orders 0..p.

    "leading_order" puts the full condition at order 0; "uniform" gives every
    order ic / sum_{k<=p} eps^k.  Either way
    sum_n eps^n * ic_n reproduces the user condition exactly.
    """
    ic = tuple(float(v) for v in ic)
    if strategy == "leading_order":
        zero = tuple(0.0 for _ in ic)
        return [ic] + [zero] * p
    if strategy == "uniform":
        denom = sum(epsilon ** k for k in range(p + 1))
        share = tuple(v / denom for v in ic)
        return [share] * (p + 1)
    raise ValueError(f"unknown ic strategy {strategy!r}")
