"""Characteristic function of the error generator and per-mode root localization.

The eigenvalues of the error generator are the zeros of the scalar
meromorphic function

    f(lam) = sum_j (c_j^2/omega_j) * (1/(lam - i omega_j) - 1/(lam + i omega_j))
             + 2i/(gamma lam),

equivalently ``2i * (sum_j c_j^2/(omega_j^2 + lam^2) + 1/(gamma lam))``.
Near the k-th mode frequency the pole at ``i omega_k`` is cleared by passing
to ``F(lam) = (lam - i omega_k) f(lam)``, which is analytic there.  Its
linearization at the center has the explicit root

    lam_k_star = i omega_k - F(i omega_k)/F'(i omega_k),

and a Rouche-type comparison of the linear part against the quadratic
remainder certifies that f has exactly one zero inside an explicit disk
around lam_k_star.  The certificate also records whether the disk stays a
fixed fraction away from the imaginary axis.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import SystemSpec

M_SAMPLES_DEFAULT = 256
M_SAMPLES_CAP = 4096
M_SAFETY_DEFAULT = 1.25
M_REFINE_RTOL = 0.02
R1_FRACTION_DEFAULT = 0.9
THETA_FRACTION_DEFAULT = 0.5


class PoleError(ValueError):
    """Evaluation requested exactly at a pole of the characteristic function."""


class LocalizationError(RuntimeError):
    """The Rouche disk interval is empty; no certified enclosure at this mode."""


@dataclass(frozen=True)
class CharContext:
    """A system together with the mode index the expansion is centered on."""

    sys: SystemSpec
    k: int

    def __post_init__(self):
        if not 1 <= self.k <= self.sys.N:
            raise ValueError(f"mode index must lie in [1, {self.sys.N}], got {self.k}")

    @property
    def omega_k(self) -> float:
        return float(self.sys.omegas[self.k - 1])

    @property
    def c_k(self) -> float:
        return float(self.sys.cs[self.k - 1])

    @property
    def center(self) -> complex:
        return 1j * self.omega_k


@dataclass(frozen=True)
class LocalizationCertificate:
    """Per-mode enclosure disk with the constants that back it.

    ``lambda_star`` is the predicted eigenvalue (root of the linearized
    characteristic function), ``(lambda_star, Rk)`` the enclosure disk.
    ``M`` bounds the quadratic remainder on the sampling disk of radius
    ``R1``; ``b`` and ``c_const`` define the admissible radius interval
    ``sqrt(Rk) in (b - sqrt(b^2 - c), b + sqrt(b^2 - c))``.

    Flags:

    * ``cond_Mneq1``  -- remainder bound small enough for the Rouche argument;
    * ``cond_Mneq2``  -- stronger bound guaranteeing axis separation is
      compatible with the radius interval (meaningful for omega_k > 1);
    * ``interval_ok`` -- the chosen Rk actually lies in the admissible interval;
    * ``contained``   -- the enclosure disk stays inside the sampling disk;
    * ``separated``   -- certified disk with Rk <= theta_frac * |Re lambda_star|.
    """

    k: int
    lambda_star: complex
    F0: complex
    F1: complex
    M: float
    R0: float
    R1: float
    b: float
    c_const: float
    Rk: float
    theta_frac: float
    cond_Mneq1: bool
    cond_Mneq2: bool
    interval_ok: bool
    contained: bool
    separated: bool
    omega_gt_1: bool

    @property
    def rouche_ok(self) -> bool:
        """All hypotheses of the one-zero enclosure verified numerically."""
        return self.cond_Mneq1 and self.interval_ok and self.contained

    def to_json_dict(self) -> dict:
        return {
            "k": self.k,
            "lambda_star": [self.lambda_star.real, self.lambda_star.imag],
            "F0": [self.F0.real, self.F0.imag],
            "F1": [self.F1.real, self.F1.imag],
            "M": self.M,
            "R0": self.R0,
            "R1": self.R1,
            "b": self.b,
            "c_const": self.c_const,
            "Rk": self.Rk,
            "theta_frac": self.theta_frac,
            "cond_Mneq1": self.cond_Mneq1,
            "cond_Mneq2": self.cond_Mneq2,
            "interval_ok": self.interval_ok,
            "contained": self.contained,
            "separated": self.separated,
            "omega_gt_1": self.omega_gt_1,
            "rouche_ok": self.rouche_ok,
        }


def _as_complex_array(lam) -> tuple[np.ndarray, bool]:
    arr = np.asarray(lam, dtype=complex)
    return arr, arr.ndim == 0


def _check_poles(sys: SystemSpec, lam: np.ndarray, exclude_center: int | None = None):
    """Reject evaluation points that sit exactly on a pole.

    ``exclude_center`` names a mode whose upper pole i*omega_k has been
    cleared and is therefore admissible.
    """
    if np.any(lam == 0):
        raise PoleError("characteristic function has a pole at 0")
    iw = 1j * sys.omegas
    lam_col = lam[..., None]
    upper_hit = lam_col == iw
    if exclude_center is not None:
        upper_hit = upper_hit & (np.arange(sys.N) != exclude_center - 1)
    if np.any(upper_hit) or np.any(lam_col == -iw):
        raise PoleError("characteristic function has a pole at +/- i*omega_j")


def eval_f(sys: SystemSpec, lam):
    """Characteristic function f(lam); scalar or vectorized over lam.

    Summation order is fixed (ascending mode index), so results are
    bitwise reproducible.
    """
    arr, scalar = _as_complex_array(lam)
    _check_poles(sys, arr)
    w = sys.omegas
    c2_over_w = sys.cs**2 / w
    L = arr[..., None]
    terms = c2_over_w * (1.0 / (L - 1j * w) - 1.0 / (L + 1j * w))
    val = np.sum(terms, axis=-1) + 2j / (sys.gamma * arr)
    return complex(val) if scalar else val


def eval_f_rational(sys: SystemSpec, lam):
    """Equivalent rational form 2i * (sum_j c_j^2/(omega_j^2 + lam^2) + 1/(gamma lam))."""
    arr, scalar = _as_complex_array(lam)
    _check_poles(sys, arr)
    L = arr[..., None]
    val = 2j * (np.sum(sys.cs**2 / (sys.omegas**2 + L**2), axis=-1) + 1.0 / (sys.gamma * arr))
    return complex(val) if scalar else val


def eval_f_prime(sys: SystemSpec, lam):
    """Derivative f'(lam); scalar or vectorized over lam."""
    arr, scalar = _as_complex_array(lam)
    _check_poles(sys, arr)
    w = sys.omegas
    c2_over_w = sys.cs**2 / w
    L = arr[..., None]
    terms = c2_over_w * (-1.0 / (L - 1j * w) ** 2 + 1.0 / (L + 1j * w) ** 2)
    val = np.sum(terms, axis=-1) - 2j / (sys.gamma * arr**2)
    return complex(val) if scalar else val


def eval_F(ctx: CharContext, lam):
    """Pole-cleared product F(lam) = (lam - i omega_k) f(lam).

    Evaluated in the regrouped form whose k-th term is
    ``2i c_k^2 / (lam + i omega_k)``, finite at the center i*omega_k.
    """
    sys = ctx.sys
    arr, scalar = _as_complex_array(lam)
    _check_poles(sys, arr, exclude_center=ctx.k)
    mask = np.arange(sys.N) != ctx.k - 1
    w = sys.omegas[mask]
    c2_over_w = sys.cs[mask] ** 2 / w
    L = arr[..., None]
    others = np.sum(c2_over_w * (1.0 / (L - 1j * w) - 1.0 / (L + 1j * w)), axis=-1)
    shift = arr - 1j * ctx.omega_k
    val = shift * (others + 2j / (sys.gamma * arr)) + 2j * ctx.c_k**2 / (arr + 1j * ctx.omega_k)
    return complex(val) if scalar else val


def char_linearization(ctx: CharContext) -> tuple[complex, complex]:
    """Closed-form value and derivative of F at the center i*omega_k.

    F(i omega_k)  = c_k^2 / omega_k
    F'(i omega_k) = 2i sum_{j != k} c_j^2/(omega_j^2 - omega_k^2)
                    + i c_k^2 / (2 omega_k^2) + 2/(gamma omega_k)
    """
    sys = ctx.sys
    wk = ctx.omega_k
    ck = ctx.c_k
    mask = np.arange(sys.N) != ctx.k - 1
    s = 2.0 * float(np.sum(sys.cs[mask] ** 2 / (sys.omegas[mask] ** 2 - wk**2)))
    s += ck**2 / (2.0 * wk**2)
    f0 = complex(ck**2 / wk)
    f1 = 2.0 / (sys.gamma * wk) + 1j * s
    return f0, f1


def lambda_star(ctx: CharContext) -> complex:
    """First-order eigenvalue prediction near mode k.

    Root of the linear part of F at the center:
    ``lam_k_star = i omega_k - F(i omega_k) / F'(i omega_k)``.  Its real part
    is strictly negative for admissible systems (the real part of F' is
    2/(gamma omega_k) > 0 while F(i omega_k) > 0).
    """
    f0, f1 = char_linearization(ctx)
    return 1j * ctx.omega_k - f0 / f1


def convergence_radius(ctx: CharContext) -> float:
    """Distance from the center i*omega_k to the nearest other singularity.

    Singularities of f are 0 and +/- i*omega_j.  The nearest ones are the
    neighbouring upper poles and the origin; lower poles are farther away.
    """
    sys = ctx.sys
    wk = ctx.omega_k
    candidates = [wk]  # distance to 0 (and a lower bound for all -i omega_j)
    if ctx.k > 1:
        candidates.append(wk - float(sys.omegas[ctx.k - 2]))
    if ctx.k < sys.N:
        candidates.append(float(sys.omegas[ctx.k]) - wk)
    return min(candidates)


def _remainder_max(ctx: CharContext, R1: float, samples: int,
                   f0: complex, f1: complex) -> float:
    t = 2.0 * np.pi * np.arange(samples) / samples
    lam = ctx.center + R1 * np.exp(1j * t)
    shift = lam - ctx.center
    resid = eval_F(ctx, lam) - f0 - shift * f1
    return float(np.max(np.abs(resid) / np.abs(shift) ** 2))


def estimate_M(ctx: CharContext, R1: float, samples: int = M_SAMPLES_DEFAULT,
               safety_factor: float = M_SAFETY_DEFAULT) -> float:
    """Sampled bound on the quadratic-remainder factor of F.

    Maximizes ``|F(lam) - F(center) - (lam - center) F'(center)| / |lam - center|^2``
    over equispaced points of the circle ``|lam - center| = R1`` and multiplies
    by a safety factor.  The maximum principle pushes the circle maximum to the
    closed disk, up to the sampling error the refinement loop controls: the
    sample count doubles until the estimate moves by less than 2% (cap 4096).
    """
    R0 = convergence_radius(ctx)
    if not 0.0 < R1 < R0:
        raise ValueError(f"R1 must lie in (0, {R0}), got {R1}")
    if samples < 8:
        raise ValueError("need at least 8 boundary samples")
    f0, f1 = char_linearization(ctx)
    m = int(samples)
    current = _remainder_max(ctx, R1, m, f0, f1)
    while m < M_SAMPLES_CAP:
        m *= 2
        refined = _remainder_max(ctx, R1, m, f0, f1)
        done = abs(refined - current) <= M_REFINE_RTOL * refined
        current = refined
        if done:
            break
    return safety_factor * current


def localize(ctx: CharContext, theta_frac: float = THETA_FRACTION_DEFAULT,
             r1_frac: float = R1_FRACTION_DEFAULT,
             samples: int = M_SAMPLES_DEFAULT,
             safety_factor: float = M_SAFETY_DEFAULT) -> LocalizationCertificate:
    """Build the enclosure certificate for one mode.

    The disk radius is chosen as
    ``min(theta_frac * |Re lambda_star|, (0.5 * (b + sqrt(b^2 - c)))^2)`` and,
    when that falls outside the admissible interval, clamped just inside it
    provided axis separation survives; otherwise the certificate degrades to
    an uncertified disk of radius ``theta_frac * |Re lambda_star|``.

    Raises LocalizationError when the admissible interval is empty (b^2 <= c).
    """
    if not 0.0 < theta_frac < 1.0:
        raise ValueError("theta_frac must lie in (0, 1)")
    sys = ctx.sys
    f0, f1 = char_linearization(ctx)
    lam_s = 1j * ctx.omega_k - f0 / f1
    R0 = convergence_radius(ctx)
    R1 = r1_frac * R0
    M = estimate_M(ctx, R1, samples=samples, safety_factor=safety_factor)

    abs_f0, abs_f1 = abs(f0), abs(f1)
    b = math.sqrt(abs_f1 / (4.0 * M))
    c_const = abs(f0 / f1)
    cond1 = 0.0 < M < abs_f1**2 / (4.0 * abs_f0)
    wk = ctx.omega_k
    gw = sys.gamma * wk
    cond2 = M < gw * abs_f1**3 / (ctx.c_k**2 * (gw * abs_f1 + 1.0) ** 2)

    if b * b <= c_const:
        raise LocalizationError(
            f"mode {ctx.k}: empty admissible radius interval (b^2 = {b*b:.3e} "
            f"<= c = {c_const:.3e})"
        )
    root = math.sqrt(b * b - c_const)
    lo = (b - root) ** 2
    hi = (b + root) ** 2
    sep_target = theta_frac * abs(lam_s.real)

    candidate = min(sep_target, (0.5 * (b + root)) ** 2)
    if lo < candidate < hi:
        rk, interval_ok = candidate, True
    else:
        clamped = min(max(candidate, lo * (1.0 + 1e-9)), hi * (1.0 - 1e-9))
        if lo < clamped < hi and clamped <= sep_target:
            rk, interval_ok = clamped, True
        else:
            rk = sep_target
            interval_ok = lo < rk < hi

    contained = c_const + rk <= R1
    separated = bool(
        interval_ok and cond1 and contained and rk <= sep_target * (1.0 + 1e-12)
    )

    return LocalizationCertificate(
        k=ctx.k, lambda_star=lam_s, F0=f0, F1=f1, M=M, R0=R0, R1=R1,
        b=b, c_const=c_const, Rk=rk, theta_frac=theta_frac,
        cond_Mneq1=bool(cond1), cond_Mneq2=bool(cond2),
        interval_ok=bool(interval_ok), contained=bool(contained),
        separated=separated, omega_gt_1=bool(wk > 1.0),
    )


def rouche_margin(ctx: CharContext, cert: LocalizationCertificate,
                  samples: int = 64) -> float:
    """Smallest value of |g| - |r| on the enclosure circle.

    ``g`` is the linear part of F at the center, ``r = F - g`` the remainder.
    A positive margin is the dominance hypothesis behind the one-zero
    enclosure, checked directly at the sampled contour points.
    """
    t = 2.0 * np.pi * np.arange(samples) / samples
    lam = cert.lambda_star + cert.Rk * np.exp(1j * t)
    shift = lam - ctx.center
    g = cert.F0 + shift * cert.F1
    r = eval_F(ctx, lam) - g
    return float(np.min(np.abs(g) - np.abs(r)))
