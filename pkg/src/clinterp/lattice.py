"""Finite-dimensional quasi-Banach lattices on R^n with coordinatewise order.

Four quasi-norm families: lp (any 0 < p <= inf), weighted lp, l-infinity, and
the L_p(phi_n) pathology space whose vectors are simple functions over the
basic-set family (their norms delegate to module pathology through nested
level sets). Functional calculus of interpolation functions is coordinatewise
here, and the Riesz decomposition is the deterministic proportional split,
which achieves factor 1 where the operation's contract promises factor 2.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from . import pathology
from .errors import DescriptorError, DomainError, InfeasibleDecompositionError
from .quasiconcave import InterpolationFunction, eval_phi


@dataclass(frozen=True)
class LatticeSpec:
    """One lattice: family tag, dimension, exponent, optional weights/handle."""

    family: str  # "lp" | "wlp" | "linf" | "sub"
    dim: int
    p: float
    weights: tuple | None = None
    pathology_space: pathology.PathologySpace | None = None

    @property
    def modulus_constant(self) -> float:
        # quasi-triangle constant: 1 in the convex range, 2^{1/p-1} below it
        if self.p >= 1.0:
            return 1.0
        return 2.0 ** (1.0 / self.p - 1.0)

    def describe(self) -> str:
        if self.family == "lp":
            return f"lp:{self.p:g}:{self.dim}"
        if self.family == "wlp":
            return f"wlp:{self.p:g}:{self.dim}:" + ",".join(f"{w:g}" for w in self.weights)
        if self.family == "linf":
            return f"linf:{self.dim}"
        return f"sub:{self.p:g}:{self.dim}"


def lp(p: float, dim: int) -> LatticeSpec:
    if not 0.0 < p <= math.inf:
        raise DomainError("lp exponent must be positive")
    if math.isinf(p):
        return linf(dim)
    return LatticeSpec("lp", _check_dim(dim), float(p))


def weighted_lp(p: float, dim: int, weights) -> LatticeSpec:
    w = tuple(float(x) for x in weights)
    if not 0.0 < p < math.inf:
        raise DomainError("weighted lp needs a finite positive exponent")
    if len(w) != dim or any(x <= 0 for x in w):
        raise DomainError("weights must be positive, one per coordinate")
    return LatticeSpec("wlp", _check_dim(dim), float(p), weights=w)


def linf(dim: int) -> LatticeSpec:
    return LatticeSpec("linf", _check_dim(dim), math.inf)


def submeasure_lp(p: float, n: int) -> LatticeSpec:
    sp = pathology.PathologySpace(n, float(p))
    return LatticeSpec("sub", n, float(p), pathology_space=sp)


def _check_dim(dim: int) -> int:
    if int(dim) != dim or dim < 1:
        raise DomainError("dimension must be a positive integer")
    return int(dim)


def parse_lattice(text: str) -> LatticeSpec:
    """Parse `lp:0.5:4`, `wlp:1:4:1,2,3,4`, `linf:4`, or `sub:0.5:3`."""
    parts = text.strip().split(":")
    try:
        if parts[0] == "lp" and len(parts) == 3:
            return lp(float(parts[1]), int(parts[2]))
        if parts[0] == "wlp" and len(parts) == 4:
            return weighted_lp(float(parts[1]), int(parts[2]),
                               [float(w) for w in parts[3].split(",")])
        if parts[0] == "linf" and len(parts) == 2:
            return linf(int(parts[1]))
        if parts[0] == "sub" and len(parts) == 3:
            return submeasure_lp(float(parts[1]), int(parts[2]))
    except (ValueError, DomainError) as exc:
        raise DescriptorError(f"bad lattice descriptor {text!r}: {exc}") from exc
    raise DescriptorError(f"unknown lattice family in descriptor {text!r}")


@dataclass(frozen=True)
class LatticeVector:
    entries: np.ndarray
    space: LatticeSpec


def vector(space: LatticeSpec, entries) -> LatticeVector:
    arr = np.asarray(entries, dtype=float).reshape(-1)
    if arr.shape != (space.dim,):
        raise DomainError(f"expected {space.dim} entries, got {arr.shape[0]}")
    if not np.all(np.isfinite(arr)):
        raise DomainError("vector entries must be finite")
    return LatticeVector(arr, space)


def _entries(x) -> np.ndarray:
    return x.entries if isinstance(x, LatticeVector) else np.asarray(x, dtype=float)


def norm(space: LatticeSpec, x) -> float:
    """The family's quasi-norm; submeasure spaces delegate to the layer-cake."""
    arr = _entries(x)
    if isinstance(x, LatticeVector) and x.space.dim != space.dim:
        raise DomainError("vector belongs to a lattice of different dimension")
    if arr.shape != (space.dim,):
        raise DomainError(f"expected {space.dim} entries, got {arr.shape}")
    a = np.abs(arr)
    if space.family == "linf":
        return float(np.max(a))
    if space.family == "lp":
        return float(np.sum(a**space.p) ** (1.0 / space.p))
    if space.family == "wlp":
        return float(np.sum(np.asarray(space.weights) * a**space.p) ** (1.0 / space.p))
    # submeasure space: coordinate j carries the basic set B_{e_j}, so the
    # level sets of the simple function are unions of these, nested by value
    vals = sorted(set(float(v) for v in a if v > 0.0))
    layers = []
    prev_val = 0.0
    for v in vals:  # ascending: largest level set first
        members = np.flatnonzero(a >= v)
        basis = [[1 if j == i else 0 for j in range(space.dim)] for i in members]
        layers.append((v - prev_val, pathology.b_union(space.dim, basis)))
        prev_val = v
    if not layers:
        return 0.0
    return pathology.lp_norm_simple(space.pathology_space, layers)


def abs_vector(x: LatticeVector) -> LatticeVector:
    return LatticeVector(np.abs(x.entries), x.space)


def join(x: LatticeVector, y: LatticeVector) -> LatticeVector:
    _same_space(x, y)
    return LatticeVector(np.maximum(x.entries, y.entries), x.space)


def meet(x: LatticeVector, y: LatticeVector) -> LatticeVector:
    _same_space(x, y)
    return LatticeVector(np.minimum(x.entries, y.entries), x.space)


def _same_space(x: LatticeVector, y: LatticeVector) -> None:
    if x.space.dim != y.space.dim:
        raise DomainError("lattice operations need equal dimensions")


def krivine_apply(f: InterpolationFunction, x0: LatticeVector, x1: LatticeVector) -> LatticeVector:
    """Functional calculus: coordinatewise phi on a nonnegative pair."""
    _same_space(x0, x1)
    if np.any(x0.entries < 0) or np.any(x1.entries < 0):
        raise DomainError("functional calculus needs nonnegative inputs")
    return LatticeVector(eval_phi(f, x0.entries, x1.entries), x0.space)


def riesz_decompose(zs, u: LatticeVector, v: LatticeVector):
    """Split each z_i = u_i + v_i compatibly with sum |z_i| <= u + v.

    The proportional rule u_i = z_i * u/(u+v) is deterministic and gives the
    coordinatewise factor-1 bounds sum |u_i| <= u and sum |v_i| <= v, strictly
    stronger than the factor-2 contract this operation promises.
    """
    _same_space(u, v)
    if np.any(u.entries < 0) or np.any(v.entries < 0):
        raise DomainError("the dominating pair must be nonnegative")
    zs = list(zs)
    if not zs:
        return []
    total = np.zeros_like(u.entries)
    for z in zs:
        _same_space(z, u)
        total = total + np.abs(z.entries)
    denom = u.entries + v.entries
    bad = total > denom * (1.0 + 1e-12)
    if np.any(bad):
        j = int(np.flatnonzero(bad)[0])
        raise InfeasibleDecompositionError(
            f"sum of |z_i| exceeds u+v at coordinate {j}: {total[j]} > {denom[j]}",
            coordinate=j,
        )
    with np.errstate(invalid="ignore"):
        ratio = np.where(denom > 0.0, u.entries / np.where(denom > 0.0, denom, 1.0), 0.0)
    out = []
    for z in zs:
        ui = z.entries * ratio
        out.append((LatticeVector(ui, u.space), LatticeVector(z.entries - ui, u.space)))
    return out
