"""Second-quantized state reconstruction over evolved single-particle modes.

A physical mode a^dag[phi] is expressed as a coefficient vector over an
orthonormal basis {b_j}; many-boson states are sparse maps from occupation
vectors to complex coefficients.  The evolved packets are generally
nonorthogonal, so the orthonormal basis comes from their Gram matrix:
symmetric (Loewdin) orthonormalization within each subsystem block keeps
results independent of packet enumeration order.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from itertools import combinations_with_replacement
from math import factorial, sqrt

import numpy as np

from .errors import DegenerateInputError, UsageError

GRAM_EIGENVALUE_FLOOR = 1e-10


def lowdin_orthonormalize(gram: np.ndarray) -> np.ndarray:
    """Symmetric orthonormalization: T = G^(-1/2), so T G T^dag = identity.

    Rows of T give the orthonormal modes as combinations of the original
    (nonorthogonal) ones.  Raises DegenerateInputError when the modes are
    numerically linearly dependent.
    """
    gram = np.asarray(gram, dtype=complex)
    vals, vecs = np.linalg.eigh(gram)
    if vals.min() <= GRAM_EIGENVALUE_FLOOR:
        raise DegenerateInputError(
            f"Gram matrix is numerically singular: smallest eigenvalue "
            f"{vals.min():.3e} <= {GRAM_EIGENVALUE_FLOOR:.0e}",
            offending_value=float(vals.min()),
        )
    return (vecs * (1.0 / np.sqrt(vals))) @ vecs.conj().T


def gram_sqrt(gram: np.ndarray) -> np.ndarray:
    """Hermitian square root G^(1/2) (inverse of the Loewdin transform).

    Column j is the coefficient vector of original mode j in the Loewdin
    orthonormal basis: overlaps of the columns reproduce G exactly.
    """
    gram = np.asarray(gram, dtype=complex)
    vals, vecs = np.linalg.eigh(gram)
    if vals.min() <= GRAM_EIGENVALUE_FLOOR:
        raise DegenerateInputError(
            f"Gram matrix is numerically singular: smallest eigenvalue "
            f"{vals.min():.3e} <= {GRAM_EIGENVALUE_FLOOR:.0e}",
            offending_value=float(vals.min()),
        )
    return (vecs * np.sqrt(vals)) @ vecs.conj().T


@dataclass
class FockExpansion:
    """Sparse many-boson state over an orthonormal mode basis.

    coeffs maps occupation tuples (n_1, ..., n_k) to complex amplitudes; all
    stored occupations share one total boson number.  `split` marks how many
    leading modes belong to subsystem 1 (None when no bipartition applies).
    """

    n_modes: int
    coeffs: dict[tuple[int, ...], complex] = field(default_factory=dict)
    split: int | None = None

    @classmethod
    def vacuum(cls, n_modes: int) -> "FockExpansion":
        return cls(n_modes, {(0,) * n_modes: 1.0 + 0.0j})

    def total_number(self) -> int:
        totals = {sum(occ) for occ in self.coeffs}
        if len(totals) > 1:
            raise UsageError(f"mixed total boson numbers in expansion: {totals}")
        return totals.pop() if totals else 0

    def norm(self) -> float:
        return sqrt(sum(abs(c) ** 2 for c in self.coeffs.values()))

    def normalized(self) -> "FockExpansion":
        n = self.norm()
        if n == 0.0:
            raise DegenerateInputError("cannot normalize a zero expansion")
        return FockExpansion(
            self.n_modes, {occ: c / n for occ, c in self.coeffs.items()}, self.split
        )

    def overlap(self, other: "FockExpansion") -> complex:
        """<self|other> in the shared orthonormal occupation basis."""
        if self.n_modes != other.n_modes:
            raise UsageError("overlap requires expansions over the same basis")
        shared = self.coeffs.keys() & other.coeffs.keys()
        return complex(sum(np.conj(self.coeffs[k]) * other.coeffs[k] for k in shared))

    def scaled(self, factor: complex) -> "FockExpansion":
        return FockExpansion(
            self.n_modes,
            {occ: c * factor for occ, c in self.coeffs.items()},
            self.split,
        )

    def add(self, other: "FockExpansion") -> "FockExpansion":
        if self.n_modes != other.n_modes:
            raise UsageError("cannot add expansions over different bases")
        out = dict(self.coeffs)
        for occ, c in other.coeffs.items():
            out[occ] = out.get(occ, 0.0 + 0.0j) + c
        return FockExpansion(self.n_modes, out, self.split)


def _check_coefficients(c: np.ndarray, n_modes: int) -> np.ndarray:
    c = np.asarray(c, dtype=complex).ravel()
    if c.shape != (n_modes,):
        raise UsageError(
            f"mode coefficients live on {c.shape[0]} basis modes, expected {n_modes}"
        )
    return c


def apply_creation(e: FockExpansion, c) -> FockExpansion:
    """Apply sum_j c_j b_j^dag with exact ladder factors sqrt(n_j + 1).

    The result is NOT renormalized; callers keep control of factorial
    bookkeeping.
    """
    c = _check_coefficients(c, e.n_modes)
    out: dict[tuple[int, ...], complex] = {}
    for occ, amp in e.coeffs.items():
        for j in range(e.n_modes):
            cj = c[j]
            if cj == 0.0:
                continue
            lifted = list(occ)
            lifted[j] += 1
            key = tuple(lifted)
            out[key] = out.get(key, 0.0 + 0.0j) + amp * cj * sqrt(occ[j] + 1.0)
    return FockExpansion(e.n_modes, out, e.split)


def creation_power(c, power: int, n_modes: int) -> FockExpansion:
    """(sum_j c_j b_j^dag)^power |0> by closed-form multinomial expansion.

    The coefficient on occupation n is power! * prod_j c_j^(n_j) / sqrt(n_j!).
    """
    c = _check_coefficients(c, n_modes)
    if power < 0:
        raise UsageError(f"creation power must be >= 0, got {power}")
    out: dict[tuple[int, ...], complex] = {}
    fact = factorial(power)
    for combo in combinations_with_replacement(range(n_modes), power):
        occ = [0] * n_modes
        for j in combo:
            occ[j] += 1
        key = tuple(occ)
        if key in out:
            continue
        amp = fact + 0.0j
        for j, nj in enumerate(key):
            if nj:
                amp *= c[j] ** nj / sqrt(factorial(nj))
        if amp != 0.0:
            out[key] = amp
    if not out:
        out[(0,) * n_modes] = 1.0 + 0.0j
    return FockExpansion(n_modes, out)


def pair_block_state(cL, cR, boson_number: int) -> FockExpansion:
    """Normalized ((a^dag_L)^N + (a^dag_R)^N)|0> for one subsystem block.

    cL and cR are coefficient vectors over a common orthonormal basis; they
    need not be orthogonal.  The normalization absorbs the nonorthogonality
    through 1 + Re(<phi_L|phi_R>^N).
    """
    if boson_number < 1:
        raise UsageError(f"boson_number must be >= 1, got {boson_number}")
    cL = np.asarray(cL, dtype=complex).ravel()
    cR = np.asarray(cR, dtype=complex).ravel()
    if cL.shape != cR.shape:
        raise UsageError("cL and cR must live on the same basis")
    n_modes = cL.shape[0]
    state = creation_power(cL, boson_number, n_modes).add(
        creation_power(cR, boson_number, n_modes)
    )
    return state.normalized()


def tensor_blocks(e1: FockExpansion, e2: FockExpansion) -> FockExpansion:
    """Tensor product with concatenated occupation vectors.

    The result records the bipartition: the first e1.n_modes basis modes are
    subsystem 1, the rest subsystem 2.
    """
    out: dict[tuple[int, ...], complex] = {}
    for occ1, c1 in e1.coeffs.items():
        for occ2, c2 in e2.coeffs.items():
            out[occ1 + occ2] = c1 * c2
    return FockExpansion(e1.n_modes + e2.n_modes, out, split=e1.n_modes)


def nboson_overlap(s: complex, boson_number: int) -> complex:
    """Overlap of two normalized N-boson Fock states with mode overlap s.

    <0| a[phi]^N (a^dag[psi])^N |0> = N! <phi|psi>^N, so after the 1/sqrt(N!)
    normalizations the N-boson overlap is simply s^N.
    """
    return complex(s) ** boson_number


def mode_coefficients_from_gram(gram: np.ndarray) -> list[np.ndarray]:
    """Coefficient vectors (one per original mode) in the Loewdin basis.

    Returned vectors v_i satisfy sum_k conj(v_i[k]) v_j[k] = G_ij exactly.
    """
    root = gram_sqrt(gram)
    return [root[:, j].copy() for j in range(root.shape[1])]
