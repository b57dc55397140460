"""Eigenvectors, Riesz-basis diagnostics, and diagonalization of the generator.

Each root lam of the characteristic function has the explicit eigenvector

    q_j = -c_j / (i omega_j + lam),    p_j = c_j / (i omega_j - lam),

rescaled so that the "own" component equals one: the upper-half vector for
mode n gets p_n = 1, its lower-half partner gets q_n = 1.  With that scaling
the eigenvectors approach the canonical unit vectors as the coupling fades,
and the column matrix Q of all 2N of them diagonalizes the generator:
A = Q G Q^{-1} with G the diagonal of eigenvalues (lower half first).

The squared distances between scaled eigenvectors and their canonical
comparisons ("closeness increments") quantify how far the eigenbasis is
from orthonormal; their partial sums are the finite-truncation stand-in for
the quadratic-closeness property that makes the infinite family a Riesz
basis.
"""

from __future__ import annotations

from dataclasses import dataclass, field
import numpy as np
import scipy.linalg

from .charfn import PoleError
from .dynamics import apply_generator, dense_generator
from .model import SystemSpec
from .spectrum import SpectrumReport
from .state import StateVector

EIGENVECTOR_RESIDUAL_RTOL = 1e-9
FACTORIZATION_RESIDUAL_RTOL = 1e-8
COND_Q_LIMIT = 1e12
DENSE_NORM_MAX_DIM = 128
POWER_ITER_TOL = 1e-8
POWER_ITER_MAX = 500


class BasisError(RuntimeError):
    """The eigenvector matrix is unusable (numerically singular or inconsistent)."""


class ResidualError(ValueError):
    """A claimed eigenpair fails its residual check."""


def comparison_vector(n_modes: int, n: int, half: str) -> StateVector:
    """Canonical comparison vector: p_n = 1 for "upper", q_n = 1 for "lower"."""
    if not 1 <= n <= n_modes:
        raise ValueError(f"mode index must lie in [1, {n_modes}]")
    q = np.zeros(n_modes, dtype=complex)
    p = np.zeros(n_modes, dtype=complex)
    if half == "upper":
        p[n - 1] = 1.0
    elif half == "lower":
        q[n - 1] = 1.0
    else:
        raise ValueError(f"half must be 'upper' or 'lower', got {half!r}")
    return StateVector(q=q, p=p)


def eigenvector(sys: SystemSpec, lam: complex, n: int, half: str,
                check_residual: bool = True) -> StateVector:
    """Scaled eigenvector of the generator for the eigenvalue lam near mode n.

    Raises ResidualError when (A - lam I) applied to the result is larger
    than 1e-9 times the vector norm, i.e. when lam is not actually an
    eigenvalue.
    """
    lam = complex(lam)
    if not 1 <= n <= sys.N:
        raise ValueError(f"mode index must lie in [1, {sys.N}]")
    if np.any(1j * sys.omegas == lam) or np.any(-1j * sys.omegas == lam):
        raise PoleError("lam coincides with a mode frequency; not an eigenvalue")
    wn = sys.omegas[n - 1]
    cn = sys.cs[n - 1]
    if half == "upper":
        scale = (1j * wn - lam) / cn
    elif half == "lower":
        scale = -(1j * wn + lam) / cn
    else:
        raise ValueError(f"half must be 'upper' or 'lower', got {half!r}")
    q = -sys.cs / (1j * sys.omegas + lam) * scale
    p = sys.cs / (1j * sys.omegas - lam) * scale
    vec = StateVector(q=q, p=p)
    if check_residual:
        diff = apply_generator(sys, vec).to_array() - lam * vec.to_array()
        resid = float(np.linalg.norm(diff))
        if resid > EIGENVECTOR_RESIDUAL_RTOL * vec.norm():
            raise ResidualError(
                f"residual {resid:.3e} exceeds {EIGENVECTOR_RESIDUAL_RTOL} * norm; "
                f"lam = {lam} is not an eigenvalue for mode {n} ({half})"
            )
    return vec


def _spectral_norm(mat: np.ndarray) -> float:
    """Largest singular value: dense SVD at small size, power iteration beyond."""
    if max(mat.shape) <= DENSE_NORM_MAX_DIM:
        return float(np.max(np.linalg.svd(mat, compute_uv=False)))
    rng = np.random.default_rng(0)
    v = rng.normal(size=mat.shape[1]) + 1j * rng.normal(size=mat.shape[1])
    v /= np.linalg.norm(v)
    herm = mat.conj().T @ mat
    prev = 0.0
    for _ in range(POWER_ITER_MAX):
        v = herm @ v
        cur = float(np.linalg.norm(v))
        v /= cur
        if abs(cur - prev) <= POWER_ITER_TOL * cur:
            break
        prev = cur
    return float(np.sqrt(cur))


@dataclass(frozen=True)
class ModalBasis:
    """Eigenvector matrix Q, eigenvalue diagonal G, and quality numbers.

    Column order matches G: the first N columns are lower-half eigenvectors
    (eigenvalues near -i omega_n), the last N upper-half ones.  ``beta1`` and
    ``beta2`` are the operator norms of Q and its inverse; their product is
    the basis condition number entering every norm-equivalence bound.
    ``closeness`` holds partial sums of the per-mode squared distances to the
    canonical comparison vectors.
    """

    Q: np.ndarray
    G: np.ndarray
    beta1: float
    beta2: float
    cond_Q: float
    closeness_increments: tuple[float, ...]
    closeness: tuple[float, ...]
    factorization_residual: float
    _lu: tuple = field(repr=False, compare=False, default=None)

    @property
    def n_modes(self) -> int:
        return self.G.size // 2

    def solve(self, vec: np.ndarray) -> np.ndarray:
        """Q^{-1} vec via the stored LU factorization."""
        return scipy.linalg.lu_solve(self._lu, vec)

    def propagate(self, eps: StateVector, t: float) -> StateVector:
        """Exact modal propagation Q exp(G t) Q^{-1} eps."""
        coeffs = self.solve(eps.to_array())
        return StateVector.from_array(self.Q @ (np.exp(self.G * t) * coeffs))

    def to_json_dict(self) -> dict:
        return {
            "beta1": self.beta1,
            "beta2": self.beta2,
            "cond_Q": self.cond_Q,
            "closeness_tail": self.closeness[-1] if self.closeness else 0.0,
            "factorization_residual": self.factorization_residual,
        }


def build_basis(sys: SystemSpec, spectrum: SpectrumReport) -> ModalBasis:
    """Assemble the diagonalizing eigenbasis from a computed spectrum.

    Requires a complete report (all 2N residual-verified roots present).
    Raises BasisError when Q is numerically singular or the factorization
    residual ||A Q - Q G||_F exceeds 1e-8 ||A||_F.
    """
    if not spectrum.complete:
        raise BasisError(f"spectrum report is incomplete: {spectrum.failures}")
    n = sys.N
    uppers = {e.k: e for e in spectrum.upper()}
    lowers = {e.k: e for e in spectrum.lower()}
    if set(uppers) != set(range(1, n + 1)) or set(lowers) != set(range(1, n + 1)):
        raise BasisError("spectrum report does not cover every (mode, half) pair")

    dim = 2 * n
    q_mat = np.empty((dim, dim), dtype=complex)
    g_diag = np.empty(dim, dtype=complex)
    increments = []
    for k in range(1, n + 1):
        lo = eigenvector(sys, lowers[k].lam, k, "lower")
        up = eigenvector(sys, uppers[k].lam, k, "upper")
        q_mat[:, k - 1] = lo.to_array()
        q_mat[:, n + k - 1] = up.to_array()
        g_diag[k - 1] = lowers[k].lam
        g_diag[n + k - 1] = uppers[k].lam
        d_lo = lo.to_array() - comparison_vector(n, k, "lower").to_array()
        d_up = up.to_array() - comparison_vector(n, k, "upper").to_array()
        increments.append(float(np.sum(np.abs(d_up) ** 2) + np.sum(np.abs(d_lo) ** 2)))

    beta1 = _spectral_norm(q_mat)
    try:
        lu = scipy.linalg.lu_factor(q_mat)
    except scipy.linalg.LinAlgError as exc:
        raise BasisError(f"eigenvector matrix is singular: {exc}") from None
    q_inv = scipy.linalg.lu_solve(lu, np.eye(dim, dtype=complex))
    beta2 = _spectral_norm(q_inv)
    cond_q = beta1 * beta2
    if not np.isfinite(cond_q) or cond_q > COND_Q_LIMIT:
        raise BasisError(f"eigenvector matrix is numerically singular (cond = {cond_q:.3e})")

    a_dense = dense_generator(sys)
    fact_resid = float(np.linalg.norm(a_dense @ q_mat - q_mat * g_diag[None, :]))
    a_scale = float(np.linalg.norm(a_dense))
    if fact_resid > FACTORIZATION_RESIDUAL_RTOL * a_scale:
        raise BasisError(
            f"factorization residual {fact_resid:.3e} exceeds "
            f"{FACTORIZATION_RESIDUAL_RTOL} * ||A||_F = {FACTORIZATION_RESIDUAL_RTOL * a_scale:.3e}"
        )

    return ModalBasis(
        Q=q_mat, G=g_diag, beta1=beta1, beta2=beta2, cond_Q=cond_q,
        closeness_increments=tuple(increments),
        closeness=tuple(np.cumsum(increments).tolist()),
        factorization_residual=fact_resid,
        _lu=lu,
    )


def to_diagonal_coords(basis: ModalBasis, eps: StateVector) -> StateVector:
    """Coordinates of a state in the eigenbasis: Q^{-1} eps."""
    if eps.n_modes != basis.n_modes:
        raise ValueError("state size does not match the basis")
    return StateVector.from_array(basis.solve(eps.to_array()))


def from_diagonal_coords(basis: ModalBasis, coords: StateVector) -> StateVector:
    """Inverse of :func:`to_diagonal_coords`: Q coords."""
    if coords.n_modes != basis.n_modes:
        raise ValueError("coordinate size does not match the basis")
    return StateVector.from_array(basis.Q @ coords.to_array())
