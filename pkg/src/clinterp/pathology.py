"""A normalized pathological submeasure on the sphere of l-infinity^n.

Sets live on Omega_n, the unit sphere of l_inf^n. The tractable family is
Omega_n itself plus finite unions of the basic sets

    B_u = {v in Omega_n : sum_i u_i v_i != 0},  u != 0 rational,

on which the submeasure has an exact linear-algebra form: a family S of
vectors covers union_j B_{a_j} iff the intersection of the hyperplanes u^perp
over u in S is contained in every a_j^perp, i.e. span{a_j} is contained in
span(S). The minimal cover size is therefore rank{a_j}, and

    phi_n(A) = rank{a_1..a_k} / n,    phi_n(Omega_n) = 1.

All rank computations run over exact rationals. The L_p(phi_n) quasi-norm of
nested simple functions is the layer-cake sum, and the certificate operation
packages the example showing the K_{inf,1} constant grows like n^{1/p-1}.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations

from .errors import (
    DescriptorError,
    DomainError,
    InvalidFunctionError,
    UnsupportedExpressionError,
)


@dataclass(frozen=True)
class SphereSetExpr:
    """Omega_n ("full") or a finite union of B_u sets ("bunion")."""

    kind: str
    n: int
    vectors: tuple = ()

    def __post_init__(self):
        if self.kind not in ("full", "bunion"):
            raise InvalidFunctionError(f"unknown set kind {self.kind!r}")
        if self.n < 1:
            raise DomainError("ambient dimension must be positive")
        if self.kind == "full" and self.vectors:
            raise InvalidFunctionError("the full sphere carries no vector list")
        for u in self.vectors:
            if len(u) != self.n:
                raise DomainError("vector length must match the ambient dimension")
            if all(c == 0 for c in u):
                raise InvalidFunctionError("zero vector defines no basic set")


def full_sphere(n: int) -> SphereSetExpr:
    return SphereSetExpr("full", n)


def b_union(n: int, vectors) -> SphereSetExpr:
    vecs = tuple(tuple(Fraction(c) for c in u) for u in vectors)
    return SphereSetExpr("bunion", n, vecs)


def parse_set(text: str) -> SphereSetExpr:
    """Parse `full:4` or `bu:4:[1,0,0,0];[0,1,0,0]` (entries may be fractions)."""
    parts = text.strip().split(":", 2)
    try:
        if parts[0] == "full" and len(parts) == 2:
            return full_sphere(int(parts[1]))
        if parts[0] == "bu" and len(parts) == 3:
            n = int(parts[1])
            vecs = []
            for chunk in parts[2].split(";"):
                chunk = chunk.strip()
                if not (chunk.startswith("[") and chunk.endswith("]")):
                    raise ValueError(f"vector {chunk!r} must be bracketed")
                vecs.append([Fraction(c.strip()) for c in chunk[1:-1].split(",")])
            return b_union(n, vecs)
    except (ValueError, ZeroDivisionError, InvalidFunctionError, DomainError) as exc:
        raise DescriptorError(f"bad set expression {text!r}: {exc}") from exc
    raise DescriptorError(
        f"bad set expression {text!r}: only full:<n> and bu:<n>:<vectors> exist"
    )


def _rank(rows) -> int:
    """Rank over the rationals by Gaussian elimination."""
    mat = [list(r) for r in rows]
    if not mat:
        return 0
    n_cols = len(mat[0])
    rank = 0
    col = 0
    while rank < len(mat) and col < n_cols:
        pivot = next((r for r in range(rank, len(mat)) if mat[r][col] != 0), None)
        if pivot is None:
            col += 1
            continue
        mat[rank], mat[pivot] = mat[pivot], mat[rank]
        inv = Fraction(1, 1) / mat[rank][col]
        mat[rank] = [inv * c for c in mat[rank]]
        for r in range(len(mat)):
            if r != rank and mat[r][col] != 0:
                factor = mat[r][col]
                mat[r] = [a - factor * b for a, b in zip(mat[r], mat[rank])]
        rank += 1
        col += 1
    return rank


def submeasure(n: int, a: SphereSetExpr) -> Fraction:
    """phi_n(A), exact: 1 for the sphere, rank of the defining vectors over n."""
    if a.n != n:
        raise DomainError("set expression lives in a different dimension")
    if a.kind == "full":
        return Fraction(1)
    return Fraction(_rank(a.vectors), n)


def covers(candidates, a: SphereSetExpr) -> bool:
    """Does the union of B_u over u in candidates contain A?

    Containment is the span condition: every defining vector of A must lie in
    span(candidates); for the full sphere the candidates must span everything.
    """
    cand = list(candidates)
    base = _rank(cand)
    if a.kind == "full":
        return base == a.n
    return all(_rank(cand + [list(v)]) == base for v in a.vectors)


def minimal_cover_brute(a: SphereSetExpr) -> int:
    """Smallest number of basic sets covering A, by exhaustive subset search.

    The candidate pool is A's own defining vectors (the standard basis for the
    full sphere); covering is decided by the span condition, so this is an
    independent check of the rank formula, not a reuse of it.
    """
    if a.kind == "full":
        pool = [
            [Fraction(int(i == j)) for j in range(a.n)] for i in range(a.n)
        ]
        target = a
    else:
        if not a.vectors:
            return 0
        pool = [list(v) for v in a.vectors]
        target = a
    for size in range(0, len(pool) + 1):
        for subset in combinations(pool, size):
            if covers(list(subset), target):
                return size
    raise AssertionError("the full pool always covers its own union")


@dataclass(frozen=True)
class PathologySpace:
    """L_p(Omega_n, phi_n) restricted to the closed-form set family."""

    n: int
    p: float

    def __post_init__(self):
        if not 0.0 < self.p < 1.0:
            raise DomainError("the pathology space needs p in (0, 1)")
        if self.n < 1:
            raise DomainError("dimension must be positive")


def _is_subset(inner: SphereSetExpr, outer: SphereSetExpr) -> bool:
    if outer.kind == "full":
        return True
    if inner.kind == "full":
        return _rank(outer.vectors) == outer.n
    if not inner.vectors:
        return True
    return covers([list(v) for v in outer.vectors], inner)


def lp_norm_simple(sp: PathologySpace, layers) -> float:
    """Quasi-norm of a nested simple function sum_j c_j chi_{A_j}.

    Layers are (c_j, A_j) pairs with c_j > 0 and A_1 containing A_2 containing
    the rest; the function equals C_j = c_1+...+c_j on A_j \\ A_{j+1} and the
    layer-cake integral collapses to sum_j phi(A_j) (C_j^p - C_{j-1}^p).
    """
    if isinstance(layers, tuple) and len(layers) == 2 and not isinstance(layers[0], tuple):
        layers = [layers]
    layers = list(layers)
    if not layers:
        return 0.0
    for c, a in layers:
        if c <= 0:
            raise DomainError("layer coefficients must be positive")
        if a.n != sp.n:
            raise DomainError("layer set dimension mismatch")
    for (_, outer), (_, inner) in zip(layers, layers[1:]):
        if not _is_subset(inner, outer):
            raise UnsupportedExpressionError(
                "layers must be nested outermost-first; level sets would leave the family"
            )
    total = 0.0
    running = 0.0
    for c, a in layers:
        prev = running
        running += c
        total += float(submeasure(sp.n, a)) * (running**sp.p - prev**sp.p)
    return total ** (1.0 / sp.p)


def kinfty1_certificate(n: int, p: float) -> dict:
    """Witness that no uniform (inf,1) tuple bound holds on these spaces.

    The coordinate functions f_i(v) = v_i satisfy max_i |f_i| = chi_Omega with
    quasi-norm exactly 1, while any signed combination obeys |sum a_i f_i| <=
    n chi_{B_a}, whose quasi-norm is n^{1-1/p}. The best tuple constant is
    therefore at least n^{1/p-1}, which grows without bound as n does.
    """
    if n < 2:
        raise DomainError("the certificate needs n >= 2")
    if not 0.0 < p < 1.0:
        raise DomainError("the certificate regime is 0 < p < 1; at p >= 1 the bound is trivial")
    sp = PathologySpace(n, p)
    sup_norm = lp_norm_simple(sp, (1.0, full_sphere(n)))
    ones = b_union(n, [[1] * n])
    dominating = lp_norm_simple(sp, (float(n), ones))
    phi_ba = submeasure(n, ones)
    return {
        "n": n,
        "p": p,
        "sup_norm": sup_norm,  # || max_i |f_i| ||, exactly 1
        "phi_basic": f"{phi_ba.numerator}/{phi_ba.denominator}",
        "domination_bound": dominating,  # n * phi_n(B_a)^{1/p} = n^{1-1/p}
        "constant_lower": sup_norm / dominating,  # n^{1/p-1}
        "witness": "coordinate functions f_i(v) = v_i, i = 1..n",
    }
