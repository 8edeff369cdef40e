"""Hermitian operators on a tensor-product space and the product projectors
that live on it.

Operators are dense complex matrices tagged with the factor structure
``Dims``.  Product projectors keep one unit vector per factor and are only
turned into a matrix on request (:func:`embed`).
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass
from typing import Callable, Sequence

import numpy as np

HERMITIAN_TOL = 1e-12
TRACE_TOL = 1e-10
PSD_TOL = 1e-10
UNIT_TOL = 1e-12


class DimensionError(ValueError):
    """Raised when operands disagree on their tensor-factor structure."""


class InvalidStateError(ValueError):
    """Raised when a matrix fails the density-operator invariants."""


@dataclass(frozen=True)
class Dims:
    factor_dims: tuple[int, ...]

    def __post_init__(self):
        fd = tuple(int(d) for d in self.factor_dims)
        if not fd or any(d < 1 for d in fd):
            raise DimensionError(f"factor dimensions must be positive, got {self.factor_dims}")
        object.__setattr__(self, "factor_dims", fd)

    @classmethod
    def of(cls, dims: "Dims | Sequence[int]") -> "Dims":
        return dims if isinstance(dims, Dims) else cls(tuple(dims))

    @property
    def total_dim(self) -> int:
        return math.prod(self.factor_dims)

    @property
    def n_factors(self) -> int:
        return len(self.factor_dims)

    @property
    def real_dim(self) -> int:
        """Real dimension of the space of Hermitian operators."""
        return self.total_dim**2

    def __str__(self):
        return "x".join(str(d) for d in self.factor_dims)


def _check_same(a: Dims, b: Dims) -> None:
    if a != b:
        raise DimensionError(f"dimension mismatch: {a} vs {b}")


class HermitianOperator:
    """Immutable Hermitian matrix over a ``Dims`` factor structure.

    The input is symmetrized as ``(A + A^dagger)/2`` so that small drift from
    arithmetic never breaks Hermiticity downstream.
    """

    __slots__ = ("dims", "matrix")

    def __init__(self, matrix, dims: Dims | Sequence[int] | None = None):
        a = np.array(matrix, dtype=complex)
        if a.ndim != 2 or a.shape[0] != a.shape[1]:
            raise DimensionError(f"expected a square matrix, got shape {a.shape}")
        dims = Dims((a.shape[0],)) if dims is None else Dims.of(dims)
        if dims.total_dim != a.shape[0]:
            raise DimensionError(f"matrix of size {a.shape[0]} does not fit dims {dims}")
        a = 0.5 * (a + a.conj().T)
        a.setflags(write=False)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "matrix", a)

    def __setattr__(self, name, value):
        raise AttributeError("HermitianOperator is immutable")

    # constructors
    @classmethod
    def zeros(cls, dims) -> "HermitianOperator":
        dims = Dims.of(dims)
        return cls(np.zeros((dims.total_dim, dims.total_dim)), dims)

    @classmethod
    def identity(cls, dims) -> "HermitianOperator":
        dims = Dims.of(dims)
        return cls(np.eye(dims.total_dim), dims)

    @classmethod
    def from_real_vector(cls, vec, dims) -> "HermitianOperator":
        dims = Dims.of(dims)
        return cls(vector_to_matrix(np.asarray(vec, dtype=float), dims.total_dim), dims)

    def real_vector(self) -> np.ndarray:
        """Coordinates in an orthonormal (trace inner product) Hermitian basis."""
        return matrix_to_vector(self.matrix)

    # arithmetic
    def _coerce(self, other) -> np.ndarray:
        if isinstance(other, HermitianOperator):
            _check_same(self.dims, other.dims)
            return other.matrix
        return NotImplemented

    def __add__(self, other):
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return HermitianOperator(self.matrix + m, self.dims)

    def __sub__(self, other):
        m = self._coerce(other)
        if m is NotImplemented:
            return m
        return HermitianOperator(self.matrix - m, self.dims)

    def __neg__(self):
        return HermitianOperator(-self.matrix, self.dims)

    def __mul__(self, scalar):
        if not np.isscalar(scalar) or np.iscomplexobj(scalar):
            return NotImplemented
        return HermitianOperator(float(scalar) * self.matrix, self.dims)

    __rmul__ = __mul__

    def __truediv__(self, scalar):
        return self * (1.0 / float(scalar))

    def shift(self, lam: float) -> "HermitianOperator":
        """Return ``X + lam * I``."""
        return HermitianOperator(self.matrix + lam * np.eye(self.dims.total_dim), self.dims)

    # scalars
    def trace(self) -> float:
        return float(np.trace(self.matrix).real)

    def inner(self, other: "HermitianOperator") -> float:
        """Trace pairing ``tr(X Y)``."""
        _check_same(self.dims, other.dims)
        return float(np.vdot(self.matrix, other.matrix).real)

    def eigvalsh(self) -> np.ndarray:
        return np.linalg.eigvalsh(self.matrix)

    def __repr__(self):
        return f"HermitianOperator(dims={self.dims}, hs_norm={hs_norm(self):.6g})"


class DensityOperator(HermitianOperator):
    """Hermitian operator with unit trace and no eigenvalue below ``-1e-10``."""

    __slots__ = ()

    def __init__(self, matrix, dims=None, *, validate: bool = True):
        if isinstance(matrix, HermitianOperator):
            dims = matrix.dims if dims is None else dims
            matrix = matrix.matrix
        raw = np.array(matrix, dtype=complex)
        if validate and raw.ndim == 2 and raw.shape[0] == raw.shape[1]:
            asym = np.max(np.abs(raw - raw.conj().T)) if raw.size else 0.0
            scale = max(1.0, float(np.max(np.abs(raw)))) if raw.size else 1.0
            if asym > 1e-9 * scale:
                raise InvalidStateError(f"matrix is not Hermitian (max |A - A^dagger| = {asym:.3g})")
        super().__init__(raw, dims)
        if validate:
            tr = self.trace()
            if abs(tr - 1.0) > TRACE_TOL:
                raise InvalidStateError(f"trace is {tr:.12g}, expected 1")
            lo = float(self.eigvalsh()[0])
            if lo < -PSD_TOL:
                raise InvalidStateError(f"negative eigenvalue {lo:.3g}")

    @classmethod
    def maximally_mixed(cls, dims) -> "DensityOperator":
        dims = Dims.of(dims)
        return cls(np.eye(dims.total_dim) / dims.total_dim, dims)

    def __repr__(self):
        return f"DensityOperator(dims={self.dims}, purity={self.inner(self):.6g})"


@dataclass(frozen=True, eq=False)
class ProductProjector:
    """Pure product projector ``P = P1 x ... x PN`` stored as factor vectors."""

    dims: Dims
    vectors: tuple[np.ndarray, ...]

    def __post_init__(self):
        dims = Dims.of(self.dims)
        if len(self.vectors) != dims.n_factors:
            raise DimensionError(f"{len(self.vectors)} vectors for {dims.n_factors} factors")
        vecs = []
        for v, d in zip(self.vectors, dims.factor_dims):
            v = np.array(v, dtype=complex).reshape(-1)
            if v.shape[0] != d:
                raise DimensionError(f"factor vector of length {v.shape[0]} for factor dim {d}")
            n = np.linalg.norm(v)
            if n == 0:
                raise ValueError("zero factor vector")
            if abs(n - 1.0) > UNIT_TOL:
                v = v / n
            v.setflags(write=False)
            vecs.append(v)
        object.__setattr__(self, "dims", dims)
        object.__setattr__(self, "vectors", tuple(vecs))

    def product_vector(self) -> np.ndarray:
        out = np.ones(1, dtype=complex)
        for v in self.vectors:
            out = np.kron(out, v)
        return out


def embed(p: ProductProjector) -> HermitianOperator:
    v = p.product_vector()
    return HermitianOperator(np.outer(v, v.conj()), p.dims)


def _contract(x: np.ndarray, dims: Dims, kets: Sequence[np.ndarray], bras: Sequence[np.ndarray]) -> complex:
    # ⟨bra_1 ⊗ ... ⊗ bra_N| X |ket_1 ⊗ ... ⊗ ket_N⟩ by contracting one slot at a time
    t = x.reshape(dims.factor_dims * 2)
    for ket in reversed(kets):
        t = t @ ket
    # remaining tensor carries the n row indices
    for bra in reversed(bras):
        t = t @ bra.conj()
    return complex(t)


def trace_pair(x: HermitianOperator, p: ProductProjector) -> float:
    """``tr(X P)`` evaluated as ``<v|X|v>`` without forming ``P``."""
    _check_same(x.dims, p.dims)
    return _contract(x.matrix, x.dims, p.vectors, p.vectors).real


def hs_norm(x: HermitianOperator) -> float:
    return float(np.linalg.norm(x.matrix))


def traceless_part(x: HermitianOperator) -> HermitianOperator:
    return x.shift(-x.trace() / x.dims.total_dim)


def max_asymmetry(a: np.ndarray) -> float:
    return float(np.max(np.abs(a - a.conj().T)))


def partial_transpose(rho: HermitianOperator, factor_index: int) -> HermitianOperator:
    dims = rho.dims
    n = dims.n_factors
    if not 0 <= factor_index < n:
        raise IndexError(f"factor index {factor_index} out of range for {n} factors")
    t = rho.matrix.reshape(dims.factor_dims * 2)
    axes = list(range(2 * n))
    axes[factor_index], axes[n + factor_index] = axes[n + factor_index], axes[factor_index]
    d = dims.total_dim
    return HermitianOperator(t.transpose(axes).reshape(d, d), dims)


def multipolarize(
    q: Callable[[Sequence[np.ndarray]], complex],
    e: Sequence[np.ndarray],
    f: Sequence[np.ndarray],
) -> complex:
    """Recover ``<e1 x ... x eN| Y |f1 x ... x fN>`` from diagonal values of ``Y``.

    ``q`` receives one (unnormalized) vector per factor and must return
    ``<u|Y|u>`` for the product vector ``u``.  Uses the ``4**N``-term sum over
    phases ``i**k`` per factor; the weight ``(-i)**sum(k)`` selects the
    matrix element that is antilinear in ``e``.
    """
    if len(e) != len(f):
        raise DimensionError(f"factor-count mismatch: {len(e)} vs {len(f)}")
    n = len(e)
    e = [np.asarray(v, dtype=complex) for v in e]
    f = [np.asarray(v, dtype=complex) for v in f]
    phases = (1, 1j, -1, -1j)
    total = 0j
    for ks in itertools.product(range(4), repeat=n):
        u = [ei + phases[k] * fi for ei, fi, k in zip(e, f, ks)]
        total += phases[(-sum(ks)) % 4] * complex(q(u))
    return total / 4**n


def quadratic_form(y: np.ndarray | HermitianOperator, dims=None) -> Callable[[Sequence[np.ndarray]], complex]:
    """Evaluator ``u -> <u|Y|u>`` on product vectors given per factor."""
    if isinstance(y, HermitianOperator):
        dims, y = y.dims, y.matrix
    dims = Dims.of(dims) if dims is not None else Dims((np.shape(y)[0],))
    y = np.asarray(y, dtype=complex)

    def q(us):
        return _contract(y, dims, us, us)

    return q


# --- real coordinates -------------------------------------------------------
_SQRT2 = math.sqrt(2.0)


def _offdiag_index(d: int):
    return np.triu_indices(d, k=1)


def matrix_to_vector(a: np.ndarray) -> np.ndarray:
    """Hermitian ``d x d`` matrix to its ``d**2`` real coordinates.

    Basis: ``E_jj``, ``(E_jk + E_kj)/sqrt2``, ``i(E_jk - E_kj)/sqrt2`` for
    ``j < k``.  It is orthonormal for ``tr(A B)`` so the Euclidean inner
    product of coordinates equals the trace pairing.
    """
    d = a.shape[0]
    iu = _offdiag_index(d)
    off = a[iu]
    return np.concatenate([np.diagonal(a).real, _SQRT2 * off.real, _SQRT2 * off.imag])


def vector_to_matrix(v: np.ndarray, d: int) -> np.ndarray:
    if v.shape[-1] != d * d:
        raise DimensionError(f"expected {d * d} real coordinates, got {v.shape[-1]}")
    iu = _offdiag_index(d)
    m = iu[0].size
    a = np.zeros((d, d), dtype=complex)
    a[np.diag_indices(d)] = v[:d]
    off = (v[d : d + m] + 1j * v[d + m :]) / _SQRT2
    a[iu] = off
    a[(iu[1], iu[0])] = off.conj()
    return a


def projector_vectors(psi: np.ndarray) -> np.ndarray:
    """Real coordinates of the rank-1 projectors ``|psi_i><psi_i|``.

    ``psi`` has shape ``(M, d)``; returns shape ``(M, d**2)``.
    """
    d = psi.shape[1]
    iu = _offdiag_index(d)
    outer = psi[:, iu[0]] * psi[:, iu[1]].conj()
    return np.concatenate([np.abs(psi) ** 2, _SQRT2 * outer.real, _SQRT2 * outer.imag], axis=1)


def scalar_direction(dims) -> np.ndarray:
    """Unit real-coordinate vector of ``I / sqrt(d)``."""
    dims = Dims.of(dims)
    d = dims.total_dim
    v = np.zeros(d * d)
    v[:d] = 1.0 / math.sqrt(d)
    return v


def random_hermitian(dims, rng: np.random.Generator, scale: float = 1.0) -> HermitianOperator:
    dims = Dims.of(dims)
    d = dims.total_dim
    g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
    return HermitianOperator(scale * (g + g.conj().T) / 2, dims)


def random_product_projector(dims, rng: np.random.Generator) -> ProductProjector:
    dims = Dims.of(dims)
    return ProductProjector(
        dims, tuple(rng.standard_normal(d) + 1j * rng.standard_normal(d) for d in dims.factor_dims)
    )
