"""Finite approximations of the local-unitary-invariant probability measure on
pure product projectors, plus a handful of seeded test-state generators.
"""

from __future__ import annotations

import itertools
import math
from dataclasses import dataclass, field
from functools import cached_property
from typing import Sequence

import numpy as np
from scipy.optimize import linprog

from .linalg_core import (
    Dims,
    DensityOperator,
    HermitianOperator,
    InvalidStateError,
    ProductProjector,
    projector_vectors,
)

MOMENT_TOL = 1e-10
MAX_QUBIT_STRENGTH = 64


class UnsupportedDesignError(ValueError):
    """No exact design construction for the requested (dim, strength)."""


def haar_vectors(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """``m`` unit vectors in ``C^d`` from normalized complex Gaussians."""
    z = rng.standard_normal((m, 2 * d))
    v = z[:, :d] + 1j * z[:, d:]
    return v / np.linalg.norm(v, axis=1, keepdims=True)


def _rng(seed: int) -> np.random.Generator:
    # Philox is counter based: row i of a draw depends only on (seed, i)
    return np.random.Generator(np.random.Philox(key=int(seed)))


@dataclass(frozen=True, eq=False)
class MeasureApprox:
    """Weighted point set standing in for the invariant measure.

    Factor vectors are held as one ``(M, d_k)`` array per factor; the
    ``ProductProjector`` objects in :attr:`points` are built lazily.
    """

    dims: Dims
    factor_vectors: tuple[np.ndarray, ...]
    weights: np.ndarray
    kind: str  # "monte_carlo" | "design"
    seed: int | None = None
    strength: int | None = None
    construction: str = ""
    info: dict = field(default_factory=dict)

    def __post_init__(self):
        dims = Dims.of(self.dims)
        object.__setattr__(self, "dims", dims)
        w = np.array(self.weights, dtype=float)
        if w.ndim != 1 or w.size == 0:
            raise ValueError("a measure needs at least one point")
        if np.any(w <= 0):
            raise ValueError("all weights must be positive")
        if abs(w.sum() - 1.0) > 1e-12:
            raise ValueError(f"weights sum to {w.sum():.15g}, expected 1")
        if len(self.factor_vectors) != dims.n_factors:
            raise ValueError("one vector array per factor required")
        fv = []
        for arr, d in zip(self.factor_vectors, dims.factor_dims):
            arr = np.array(arr, dtype=complex)
            if arr.shape != (w.size, d):
                raise ValueError(f"factor vectors have shape {arr.shape}, expected {(w.size, d)}")
            arr.setflags(write=False)
            fv.append(arr)
        w.setflags(write=False)
        object.__setattr__(self, "factor_vectors", tuple(fv))
        object.__setattr__(self, "weights", w)

    def __len__(self):
        return self.weights.size

    @cached_property
    def points(self) -> list[ProductProjector]:
        return [
            ProductProjector(self.dims, tuple(fv[i] for fv in self.factor_vectors))
            for i in range(len(self))
        ]

    @cached_property
    def product_vectors(self) -> np.ndarray:
        """Full product vectors, shape ``(M, total_dim)``."""
        out = np.ones((len(self), 1), dtype=complex)
        for fv in self.factor_vectors:
            out = (out[:, :, None] * fv[:, None, :]).reshape(len(self), -1)
        out.setflags(write=False)
        return out

    @cached_property
    def features(self) -> np.ndarray:
        """Real coordinates of every projector, shape ``(M, d**2)``.

        ``features @ x.real_vector()`` gives all ``tr(X P_i)`` at once.
        """
        f = projector_vectors(self.product_vectors)
        f.setflags(write=False)
        return f

    def barycenter(self) -> HermitianOperator:
        v = self.product_vectors
        return HermitianOperator((v.T * self.weights) @ v.conj(), self.dims)

    def label(self) -> str:
        if self.kind == "monte_carlo":
            tag = ",balanced" if self.info.get("balanced") else ""
            return f"mc(M={len(self)},seed={self.seed}{tag})"
        return f"design(t={self.strength},{self.construction})"

    def to_dict(self) -> dict:
        return {
            "kind": self.kind,
            "dims": list(self.dims.factor_dims),
            "seed": self.seed,
            "strength": self.strength,
            "construction": self.construction,
            "info": self.info,
            "weights": self.weights.tolist(),
            "points": [
                [{"re": fv[i].real.tolist(), "im": fv[i].imag.tolist()} for fv in self.factor_vectors]
                for i in range(len(self))
            ],
        }

    @classmethod
    def from_dict(cls, data: dict) -> "MeasureApprox":
        dims = Dims(tuple(data["dims"]))
        pts = data["points"]
        fvs = tuple(
            np.array([np.array(p[k]["re"]) + 1j * np.array(p[k]["im"]) for p in pts])
            for k in range(dims.n_factors)
        )
        return cls(
            dims,
            fvs,
            np.array(data["weights"], dtype=float),
            data["kind"],
            seed=data.get("seed"),
            strength=data.get("strength"),
            construction=data.get("construction", ""),
            info=data.get("info", {}),
        )


def haar_unitaries(rng: np.random.Generator, m: int, d: int) -> np.ndarray:
    """``m`` Haar-random ``d x d`` unitaries (QR of Ginibre, phases fixed)."""
    z = rng.standard_normal((m, d, 2 * d))
    g = z[:, :, :d] + 1j * z[:, :, d:]
    q, r = np.linalg.qr(g)
    ph = np.diagonal(r, axis1=1, axis2=2)
    return q * (ph / np.abs(ph))[:, None, :]


def sample_haar(dims, m: int, seed: int, balanced: bool = False) -> MeasureApprox:
    """Monte Carlo measure from ``m`` independent Haar product draws.

    With ``balanced=True`` every factor draw is completed to a Haar-random
    orthonormal basis and all basis products are kept, so the measure has
    ``m * total_dim`` points and its barycenter is exactly ``I/d``.
    """
    dims = Dims.of(dims)
    if m < 1:
        raise ValueError("need at least one sample")
    rng = _rng(seed)
    if balanced:
        bases = [haar_unitaries(rng, m, d) for d in dims.factor_dims]
        combos = np.array(list(itertools.product(*[range(d) for d in dims.factor_dims])))
        fvs = tuple(
            b[:, :, combos[:, k]].transpose(0, 2, 1).reshape(-1, dims.factor_dims[k])
            for k, b in enumerate(bases)
        )
        n = m * len(combos)
    else:
        z = rng.standard_normal((m, 2 * sum(dims.factor_dims)))
        fvs, pos = [], 0
        for d in dims.factor_dims:
            v = z[:, pos : pos + d] + 1j * z[:, pos + d : pos + 2 * d]
            fvs.append(v / np.linalg.norm(v, axis=1, keepdims=True))
            pos += 2 * d
        fvs, n = tuple(fvs), m
    info = {"draws": m, "balanced": balanced}
    return MeasureApprox(dims, fvs, np.full(n, 1.0 / n), "monte_carlo", seed=seed, info=info)


# --- designs ---------------------------------------------------------------


def _monomial_exponents(d: int, t: int) -> list[tuple[int, ...]]:
    return [
        tuple(np.bincount(c, minlength=d))
        for c in itertools.combinations_with_replacement(range(d), t)
    ]


def haar_moment(alpha: Sequence[int], d: int) -> float:
    """``E |v_1|^{2 a_1} ... |v_d|^{2 a_d}`` for Haar-random unit ``v``."""
    t = sum(alpha)
    num = math.prod(math.factorial(a) for a in alpha) * math.factorial(d - 1)
    return num / math.factorial(d - 1 + t)


def _moment_system(vectors: np.ndarray, t: int):
    """Rows: real/imag parts of every bidegree-(t, t) monomial; target: Haar values."""
    d = vectors.shape[1]
    exps = np.array(_monomial_exponents(d, t))
    mono = np.prod(vectors[:, None, :] ** exps[None, :, :], axis=2)  # (m, n_mono)
    block = mono.conj()[:, :, None] * mono[:, None, :]  # (m, a, b) = conj(v^a) v^b
    n = exps.shape[0]
    target = np.diag([haar_moment(a, d) for a in exps]).astype(complex)
    a = block.reshape(vectors.shape[0], n * n).T
    b = target.reshape(-1)
    return np.vstack([a.real, a.imag]), np.concatenate([b.real, b.imag])


def moment_residual(vectors: np.ndarray, weights: np.ndarray, t: int) -> float:
    """Largest deviation of the weighted degree-``t`` moments from Haar values."""
    if t == 0:
        return abs(float(np.sum(weights)) - 1.0)
    a, b = _moment_system(vectors, t)
    return float(np.max(np.abs(a @ weights - b)))


def _gauss_sphere_design(t: int) -> tuple[np.ndarray, np.ndarray]:
    # Gauss-Legendre in cos(theta) (exact to degree 2n-1) times t+1 equally
    # spaced azimuths: exact for all spherical harmonics of degree <= t.
    n = t // 2 + 1
    z, wz = np.polynomial.legendre.leggauss(n)
    m = t + 1
    phi = 2 * np.pi * np.arange(m) / m
    zz, pp = np.meshgrid(z, phi, indexing="ij")
    ww = np.outer(wz / 2.0, np.full(m, 1.0 / m))
    theta = np.arccos(zz.ravel())
    vec = np.stack(
        [np.cos(theta / 2) + 0j, np.exp(1j * pp.ravel()) * np.sin(theta / 2)], axis=1
    )
    return vec, ww.ravel()


def _moment_matched_design(d: int, t: int, seed: int) -> tuple[np.ndarray, np.ndarray, float]:
    rng = _rng(seed)
    n_mono = len(_monomial_exponents(d, t))
    batch = max(4 * n_mono * n_mono, 64)
    best = (None, None, np.inf)
    for _ in range(4):
        vecs = haar_vectors(rng, batch, d)
        a, b = _moment_system(vecs, t)
        res = linprog(np.zeros(batch), A_eq=a, b_eq=b, bounds=(0, None), method="highs")
        if res.status != 0:
            batch *= 2
            continue
        keep = res.x > 1e-14
        v, w = vecs[keep], res.x[keep]
        # polish on the support; basic solutions make this system well posed
        a_s, _ = _moment_system(v, t)
        w = w + np.linalg.lstsq(a_s, b - a_s @ w, rcond=None)[0]
        if np.any(w <= 0):
            batch *= 2
            continue
        w = w / w.sum()
        r = moment_residual(v, w, t)
        if r < best[2]:
            best = (v, w, r)
        if r <= MOMENT_TOL:
            break
        batch *= 2
    return best


def factor_design(d: int, t: int, seed: int = 0) -> tuple[np.ndarray, np.ndarray, str]:
    """Weighted complex projective ``t``-design on ``C^d``.

    Qubits use an exact Gauss product rule on the Bloch sphere.  Larger
    factors use positive weights on a seeded Haar batch solved by linear
    programming against the Haar moments; if that cannot reach the moment
    tolerance an :class:`UnsupportedDesignError` is raised.
    """
    if t < 1:
        raise ValueError("design strength must be at least 1")
    if d == 1:
        return np.ones((1, 1), dtype=complex), np.ones(1), "trivial"
    if d == 2:
        if t > MAX_QUBIT_STRENGTH:
            raise UnsupportedDesignError(
                f"qubit design strength {t} > {MAX_QUBIT_STRENGTH}; use sample_haar instead"
            )
        v, w = _gauss_sphere_design(t)
        return v, w, "gauss-sphere"
    if math.comb(d + t - 1, t) > 15:
        raise UnsupportedDesignError(
            f"no design construction for factor dim {d}, strength {t}; "
            "fall back to sample_haar (Monte Carlo)"
        )
    v, w, r = _moment_matched_design(d, t, seed)
    if v is None or r > MOMENT_TOL:
        raise UnsupportedDesignError(
            f"moment matching for factor dim {d}, strength {t} reached residual {r:.2e}; "
            "fall back to sample_haar (Monte Carlo)"
        )
    return v, w, "moment-matched"


def design_quadrature(dims, strength: int, seed: int = 0) -> MeasureApprox:
    """Product of factor-wise ``strength``-designs.

    Integrates exactly every function that is a polynomial of degree at most
    ``strength`` in each factor's projector; in particular the binomial
    objective of order ``k`` whenever ``strength >= 2k``.
    """
    dims = Dims.of(dims)
    parts = [factor_design(d, strength, seed + i) for i, d in enumerate(dims.factor_dims)]
    residuals = [moment_residual(v, w, strength) for v, w, _ in parts]
    if max(residuals) > MOMENT_TOL:
        raise UnsupportedDesignError(f"design moment check failed: residuals {residuals}")
    sizes = [len(w) for _, w, _ in parts]
    idx = np.array(list(itertools.product(*[range(s) for s in sizes])))
    fvs = tuple(parts[k][0][idx[:, k]] for k in range(len(parts)))
    w = np.prod([parts[k][1][idx[:, k]] for k in range(len(parts))], axis=0)
    w = w / w.sum()
    constructions = sorted({c for _, _, c in parts})
    return MeasureApprox(
        dims,
        fvs,
        w,
        "design",
        seed=seed,
        strength=strength,
        construction="+".join(constructions),
        info={"moment_residuals": residuals},
    )


# --- test states -----------------------------------------------------------

SINGLET = np.array([0, 1, -1, 0], dtype=complex) / math.sqrt(2)


@dataclass(frozen=True)
class StateFamily:
    """Generator tag for test states: ``werner``, ``ginibre``,
    ``pure_product`` or ``maximally_mixed``."""

    name: str
    p: float | None = None
    seed: int | None = None

    @classmethod
    def werner(cls, p: float) -> "StateFamily":
        return cls("werner", p=p)

    @classmethod
    def ginibre(cls, seed: int) -> "StateFamily":
        return cls("ginibre", seed=seed)

    @classmethod
    def pure_product(cls, seed: int) -> "StateFamily":
        return cls("pure_product", seed=seed)

    @classmethod
    def maximally_mixed(cls) -> "StateFamily":
        return cls("maximally_mixed")


def werner(p: float) -> DensityOperator:
    """``p |psi-><psi-| + (1 - p) I/4`` on two qubits."""
    if not 0.0 <= p <= 1.0:
        raise InvalidStateError(f"Werner parameter must lie in [0, 1], got {p}")
    rho = p * np.outer(SINGLET, SINGLET.conj()) + (1 - p) * np.eye(4) / 4
    return DensityOperator(rho, (2, 2))


def make_state(family: StateFamily, dims=(2, 2)) -> DensityOperator:
    dims = Dims.of(dims)
    d = dims.total_dim
    if family.name == "werner":
        if dims.factor_dims != (2, 2):
            raise InvalidStateError("Werner states are defined on dims [2, 2] only")
        return werner(float(family.p))
    if family.name == "maximally_mixed":
        return DensityOperator.maximally_mixed(dims)
    if family.seed is None:
        raise InvalidStateError(f"{family.name} states need a seed")
    rng = _rng(family.seed)
    if family.name == "ginibre":
        g = rng.standard_normal((d, d)) + 1j * rng.standard_normal((d, d))
        rho = g @ g.conj().T
        return DensityOperator(rho / np.trace(rho).real, dims)
    if family.name == "pure_product":
        v = np.ones(1, dtype=complex)
        for dk in dims.factor_dims:
            v = np.kron(v, haar_vectors(rng, 1, dk)[0])
        return DensityOperator(np.outer(v, v.conj()), dims)
    raise InvalidStateError(f"unknown state family {family.name!r}")
