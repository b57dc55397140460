"""Truncated modal system definition and standing-assumption certificates.

A system is a finite family of undamped modes with angular frequencies
``omega_1 < omega_2 < ... < omega_N``, scalar output coefficients ``c_j != 0``
and an output-injection gain ``gamma > 0``.  All downstream spectral
certificates refer to this truncated system.

Standing assumptions checked here:

* strictly increasing positive frequencies with nonzero coefficients
  (enforced at construction);
* a uniform frequency gap ``omega_{j+1} - omega_j >= kappa > 0``;
* a coupling lower bound ``|c_k| * omega_k**(alpha/2) >= beta`` for
  ``k0 <= k <= N`` (finite-range by necessity: only N modes exist).
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Optional, Sequence

import numpy as np

# Feasibility grid for the coupling exponent alpha.  The inequality only
# pins a feasible region; a fixed coarse grid keeps certificates reproducible.
ALPHA_GRID_STEP = 0.1
ALPHA_GRID_MAX = 8.0


@dataclass(frozen=True)
class SystemSpec:
    """Validated truncated modal system.

    Attributes
    ----------
    gamma : float
        Observer output-injection gain, > 0.
    omegas : np.ndarray
        Mode frequencies, strictly increasing, all > 0.
    cs : np.ndarray
        Output coefficients, all nonzero.
    generator : dict or None
        Provenance record when the system came from a closed-form family
        (enables closed-form tail bounds for truncated series).
    """

    gamma: float
    omegas: np.ndarray
    cs: np.ndarray
    generator: Optional[dict] = None

    def __post_init__(self):
        omegas = np.asarray(self.omegas, dtype=float)
        cs = np.asarray(self.cs, dtype=float)
        if omegas.ndim != 1 or cs.ndim != 1:
            raise ValueError("omegas and cs must be 1-d sequences")
        if omegas.size == 0:
            raise ValueError("at least one mode is required")
        if omegas.size != cs.size:
            raise ValueError(
                f"omegas and cs must have equal length, got {omegas.size} and {cs.size}"
            )
        if not np.all(np.isfinite(omegas)) or not np.all(np.isfinite(cs)):
            raise ValueError("omegas and cs must be finite")
        if omegas[0] <= 0.0:
            raise ValueError("frequencies must be positive")
        if np.any(np.diff(omegas) <= 0.0):
            raise ValueError("frequencies must be strictly increasing")
        if np.any(cs == 0.0):
            raise ValueError("output coefficients must be nonzero")
        if not (isinstance(self.gamma, (int, float)) and math.isfinite(self.gamma)):
            raise ValueError("gamma must be a finite number")
        if self.gamma <= 0.0:
            raise ValueError("gamma must be positive")
        object.__setattr__(self, "gamma", float(self.gamma))
        object.__setattr__(self, "omegas", omegas)
        object.__setattr__(self, "cs", cs)

    @property
    def N(self) -> int:
        return self.omegas.size

    def min_gap(self) -> float:
        """Smallest frequency gap; +inf for a single-mode system."""
        if self.N < 2:
            return math.inf
        return float(np.min(np.diff(self.omegas)))

    def coupling_sum(self) -> float:
        """Partial sum of c_j^2 / omega_j over the retained modes."""
        return float(np.sum(self.cs**2 / self.omegas))

    def coupling_sum_tail_bound(self) -> Optional[float]:
        """Closed-form bound on the dropped tail of sum c_j^2/omega_j.

        Only available when the system carries generator provenance.  For the
        quadratic-frequency family (omega_j = theta j^2, c_j = sigma/j) the
        tail is sum_{j>N} sigma^2/(theta j^4) <= sigma^2 / (3 theta N^3).
        """
        if self.generator is None or self.generator.get("type") != "beam":
            return None
        theta = self.generator["theta"]
        sigma = self.generator["sigma"]
        return sigma**2 / (3.0 * theta * self.N**3)

    def to_json_dict(self) -> dict:
        if self.generator is not None:
            return {"gamma": self.gamma, "generator": dict(self.generator)}
        return {
            "gamma": self.gamma,
            "modes": [
                {"omega": float(w), "c": float(c)} for w, c in zip(self.omegas, self.cs)
            ],
        }

    def to_json(self) -> str:
        return json.dumps(self.to_json_dict(), sort_keys=True)

    @staticmethod
    def from_json_dict(doc: dict) -> "SystemSpec":
        if "gamma" not in doc:
            raise ValueError("system document must carry 'gamma'")
        gamma = doc["gamma"]
        if "generator" in doc:
            gen = doc["generator"]
            if gen.get("type") != "beam":
                raise ValueError(f"unknown generator type: {gen.get('type')!r}")
            return beam_example(gen["theta"], gen["sigma"], gen["N"], gamma=gamma)
        if "modes" in doc:
            modes = doc["modes"]
            omegas = [m["omega"] for m in modes]
            cs = [m["c"] for m in modes]
            return build_system(gamma, omegas, cs)
        raise ValueError("system document must carry 'modes' or 'generator'")

    @staticmethod
    def from_json(text: str) -> "SystemSpec":
        return SystemSpec.from_json_dict(json.loads(text))


@dataclass(frozen=True)
class AssumptionCertificate:
    """Result of checking the gap and coupling assumptions on one system.

    ``kappa`` is the smallest frequency gap (+inf for N = 1); ``alpha`` is the
    smallest grid exponent making ``|c_k| omega_k**(alpha/2) >= beta`` hold on
    ``k0 <= k <= N``, or the grid maximum when none does (``holds_A3`` False).
    The certificate is finite-range: it reports what holds up to mode N.
    """

    kappa: float
    alpha: float
    beta: float
    k0: int
    holds_A2: bool
    holds_A3: bool

    @property
    def holds(self) -> bool:
        return self.holds_A2 and self.holds_A3

    def to_json_dict(self) -> dict:
        return {
            "kappa": None if math.isinf(self.kappa) else self.kappa,
            "alpha": self.alpha,
            "beta": self.beta,
            "k0": self.k0,
            "holds_A2": self.holds_A2,
            "holds_A3": self.holds_A3,
        }


def build_system(gamma: float, omegas: Sequence[float], cs: Sequence[float]) -> SystemSpec:
    """Validate and freeze a truncated modal system.

    Raises ValueError for non-increasing frequencies, zero coefficients,
    non-positive gamma, or empty/mismatched sequences.
    """
    return SystemSpec(gamma=gamma, omegas=np.asarray(omegas, float), cs=np.asarray(cs, float))


def beam_example(theta: float, sigma: float, N: int, gamma: float = 1.0) -> SystemSpec:
    """Quadratic-frequency family: omega_j = theta j^2, c_j = sigma / j.

    This is the standard flexible-beam-like test family; theta = sigma = 1,
    N = 23 is the reference configuration used throughout the test suite.
    """
    if not isinstance(N, (int, np.integer)) or isinstance(N, bool):
        raise ValueError("N must be an integer")
    if N < 1:
        raise ValueError("N must be >= 1")
    if theta <= 0.0 or sigma <= 0.0:
        raise ValueError("theta and sigma must be positive")
    j = np.arange(1, N + 1, dtype=float)
    return SystemSpec(
        gamma=gamma,
        omegas=theta * j**2,
        cs=sigma / j,
        generator={"type": "beam", "theta": float(theta), "sigma": float(sigma), "N": int(N)},
    )


def alpha_grid() -> np.ndarray:
    """The declared search grid for the coupling exponent: 0.1, 0.2, ..., 8.0."""
    n = int(round(ALPHA_GRID_MAX / ALPHA_GRID_STEP))
    return np.round(np.arange(1, n + 1) * ALPHA_GRID_STEP, 10)


def certify_assumptions(sys: SystemSpec, beta: float = 1.0, k0: int = 2) -> AssumptionCertificate:
    """Check the gap and coupling assumptions for one system.

    Parameters
    ----------
    sys : SystemSpec
    beta : float
        Coupling lower-bound level, > 0.
    k0 : int
        First mode index the coupling bound must cover, 1 <= k0 <= N.
    """
    if beta <= 0.0:
        raise ValueError("beta must be positive")
    if not 1 <= k0 <= sys.N:
        raise ValueError(f"k0 must lie in [1, {sys.N}], got {k0}")
    kappa = sys.min_gap()
    holds_a2 = kappa > 0.0  # guaranteed by construction at finite N

    tail_c = np.abs(sys.cs[k0 - 1 :])
    tail_w = sys.omegas[k0 - 1 :]
    alpha = None
    for a in alpha_grid():
        if np.all(tail_c * tail_w ** (a / 2.0) >= beta):
            alpha = float(a)
            break
    holds_a3 = alpha is not None
    if alpha is None:
        alpha = ALPHA_GRID_MAX

    return AssumptionCertificate(
        kappa=kappa, alpha=alpha, beta=float(beta), k0=int(k0),
        holds_A2=holds_a2, holds_A3=holds_a3,
    )
