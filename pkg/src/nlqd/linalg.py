"""Dense complex-matrix primitives.

Hermitian spectral decompositions, fractional powers, tensor products,
partial traces, support projectors, square-root factorization and the
scalar diagnostics (purity, entropy, mutual information) everything else
is built on.  All functions are pure and operate on plain ndarrays;
the thin dataclass wrappers validate the physical invariants once at
construction time.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np

from .errors import ValidationError

# Tolerances fixed once, used by every consumer.
HERM_TOL = 1e-12
EIG_NEG_TOL = 1e-10
TRACE_TOL = 1e-12
HS_NORM_TOL = 1e-10
SUPPORT_REL_TOL = 1e-10


def _as_complex(a) -> np.ndarray:
    a = np.asarray(a, dtype=complex)
    if a.ndim != 2:
        raise ValidationError(f"expected a matrix, got ndim={a.ndim}")
    return a


def _require_square(a: np.ndarray) -> np.ndarray:
    if a.shape[0] != a.shape[1]:
        raise ValidationError(f"expected a square matrix, got shape {a.shape}")
    return a


def max_abs(a) -> float:
    """Entrywise max-norm ||A||_max."""
    return float(np.max(np.abs(a))) if np.size(a) else 0.0


def is_hermitian(a: np.ndarray, tol: float = HERM_TOL) -> bool:
    return max_abs(a - a.conj().T) <= tol


def dagger(a: np.ndarray) -> np.ndarray:
    return a.conj().T


@dataclass(frozen=True)
class DensityMatrix:
    """Hermitian, positive-semidefinite, unit-trace state."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _require_square(_as_complex(self.matrix))
        object.__setattr__(self, "matrix", m)
        if not is_hermitian(m, HERM_TOL):
            raise ValidationError("density matrix is not Hermitian to 1e-12")
        if abs(np.trace(m) - 1.0) > TRACE_TOL:
            raise ValidationError(f"density matrix trace {np.trace(m)} != 1")
        lo = float(np.min(np.linalg.eigvalsh((m + m.conj().T) / 2)))
        if lo < -EIG_NEG_TOL:
            raise ValidationError(f"density matrix has eigenvalue {lo} < -1e-10")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]


@dataclass(frozen=True)
class StateOperator:
    """Square-root factor gamma with rho = gamma gamma^dagger, unit HS norm."""

    matrix: np.ndarray

    def __post_init__(self):
        m = _require_square(_as_complex(self.matrix))
        object.__setattr__(self, "matrix", m)
        norm = np.trace(m.conj().T @ m).real
        if abs(norm - 1.0) > HS_NORM_TOL:
            raise ValidationError(f"state operator HS norm {norm} != 1")

    @property
    def dim(self) -> int:
        return self.matrix.shape[0]

    def density(self) -> np.ndarray:
        return self.matrix @ self.matrix.conj().T


@dataclass(frozen=True)
class SpectralDecomposition:
    eigenvalues: np.ndarray  # real, ascending
    eigenvectors: np.ndarray  # columns orthonormal

    def reconstruct(self) -> np.ndarray:
        v = self.eigenvectors
        return (v * self.eigenvalues) @ v.conj().T


def herm_eig(a, tol: float = 1e-10) -> SpectralDecomposition:
    """Spectral decomposition of a Hermitian matrix, eigenvalues ascending."""
    a = _require_square(_as_complex(a))
    if not is_hermitian(a, tol):
        raise ValidationError("herm_eig: input is not Hermitian to tolerance")
    w, v = np.linalg.eigh(a)
    return SpectralDecomposition(eigenvalues=w, eigenvectors=v)


def _clipped_eigs(rho: np.ndarray) -> SpectralDecomposition:
    """Eigendecomposition with small negative eigenvalues clipped to zero.

    Eigenvalues in [-1e-10, 0) come from integration roundoff and are
    treated as 0; anything more negative is a hard error.
    """
    dec = herm_eig(rho)
    w = dec.eigenvalues.copy()
    if np.min(w) < -EIG_NEG_TOL:
        raise ValidationError(f"matrix has eigenvalue {np.min(w)} < -1e-10")
    w[w < 0.0] = 0.0
    return SpectralDecomposition(eigenvalues=w, eigenvectors=dec.eigenvectors)


def matrix_power(rho, s: float) -> np.ndarray:
    """Hermitian PSD power rho^s via the spectral decomposition, s > 0."""
    if s <= 0:
        raise ValidationError(f"matrix_power exponent must be > 0, got {s}")
    dec = _clipped_eigs(_as_complex(rho))
    v = dec.eigenvectors
    return (v * dec.eigenvalues**s) @ v.conj().T


def tensor_product(a, b) -> np.ndarray:
    """Kronecker product; the first factor carries the major (slow) index."""
    return np.kron(_as_complex(a), _as_complex(b))


def partial_trace(w, dims: tuple[int, int], over: str) -> np.ndarray:
    """Partial trace of a matrix on H (x) K over the named factor.

    ``dims`` is (d_H, d_K); ``over`` is "H" or "K".  H is the major index
    in the flattened product basis.
    """
    d_h, d_k = dims
    w = _require_square(_as_complex(w))
    if w.shape[0] != d_h * d_k:
        raise ValidationError(f"partial_trace: shape {w.shape} != {d_h * d_k}")
    t = w.reshape(d_h, d_k, d_h, d_k)
    if over == "K":
        return np.trace(t, axis1=1, axis2=3)
    if over == "H":
        return np.trace(t, axis1=0, axis2=2)
    raise ValidationError(f"partial_trace: over must be 'H' or 'K', got {over!r}")


def support_projector(rho, rel_tol: float = SUPPORT_REL_TOL) -> np.ndarray:
    """Orthogonal projector onto the span of eigenvectors with lambda_i
    above rel_tol times the largest eigenvalue."""
    if not (0.0 < rel_tol < 1.0):
        raise ValidationError(f"rel_tol must lie in (0, 1), got {rel_tol}")
    dec = _clipped_eigs(_as_complex(rho))
    lmax = float(np.max(dec.eigenvalues))
    if lmax <= 0.0:
        raise ValidationError("support_projector: matrix is (numerically) zero")
    keep = dec.eigenvalues > rel_tol * lmax
    v = dec.eigenvectors[:, keep]
    return v @ v.conj().T


def sqrt_factor(rho: DensityMatrix | np.ndarray) -> StateOperator:
    """Canonical (Hermitian positive) square root of a density matrix.

    Any other factor differs by a right unitary gauge gamma' = gamma U.
    """
    m = rho.matrix if isinstance(rho, DensityMatrix) else _as_complex(rho)
    dec = _clipped_eigs(m)
    v = dec.eigenvectors
    g = (v * np.sqrt(dec.eigenvalues)) @ v.conj().T
    return StateOperator(matrix=g)


def purity(rho) -> float:
    m = rho.matrix if isinstance(rho, DensityMatrix) else _as_complex(rho)
    return float(np.trace(m @ m).real)


def von_neumann_entropy(rho) -> float:
    """-sum lambda_i ln lambda_i over strictly positive eigenvalues."""
    m = rho.matrix if isinstance(rho, DensityMatrix) else _as_complex(rho)
    w = _clipped_eigs(m).eigenvalues
    w = w[w > 0.0]
    return float(-np.sum(w * np.log(w)))


def mutual_information(rho_hk, dims: tuple[int, int]) -> float:
    """S(rho_H) + S(rho_K) - S(rho_HK)."""
    m = rho_hk.matrix if isinstance(rho_hk, DensityMatrix) else _as_complex(rho_hk)
    s_h = von_neumann_entropy(partial_trace(m, dims, "K"))
    s_k = von_neumann_entropy(partial_trace(m, dims, "H"))
    return s_h + s_k - von_neumann_entropy(m)
