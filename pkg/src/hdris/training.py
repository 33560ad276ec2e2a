"""Deterministic pilot and surface-phase training design.

The pilot stage transmits one symbol block from the base-station array
while the surface cycles through a set of phase profiles, one per block.
The joint training operator (Kronecker product of the profile matrix with
the pilot block) must have orthonormal rows so that a single matched
filter inverts it; with DFT rows this holds exactly and every entry of
the joint operator has the same modulus.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .channel import SystemDims
from .tensors import kron

__all__ = [
    "TrainingInfeasibleError",
    "TrainingDesign",
    "TrainingReport",
    "make_training",
    "validate_training",
]


class TrainingInfeasibleError(ValueError):
    """The requested pilot budget cannot produce a row-orthonormal design."""


@dataclass(frozen=True)
class TrainingDesign:
    """Pilot block (n_bs x n_pilots), surface profiles (n_ris x n_blocks)
    and their Kronecker product (n_bs*n_ris x n_pilots*n_blocks).  Plain
    container; see :func:`validate_training` for the consistency checks."""

    bs_pilots: np.ndarray
    ris_phases: np.ndarray
    combined: np.ndarray


def _dft_rows(rows: int, points: int) -> np.ndarray:
    """First ``rows`` rows of the unitary ``points``-point DFT matrix."""
    grid = np.outer(np.arange(rows), np.arange(points))
    return np.exp(-2j * np.pi * grid / points) / np.sqrt(points)


def make_training(dims: SystemDims) -> TrainingDesign:
    """Build the deterministic DFT-based training design for ``dims``.

    The pilot block is the first n_bs rows of the n_pilots-point unitary
    DFT and the profile matrix the first n_ris rows of the n_blocks-point
    unitary DFT, so each has orthonormal rows and so does their Kronecker
    product, exactly.  Every profile entry has the same modulus
    (constant-modulus surface states) and every entry of the combined
    operator has modulus 1/sqrt(n_pilots*n_blocks).

    Raises
    ------
    TrainingInfeasibleError
        If the total pilot budget n_pilots*n_blocks is smaller than the
        n_bs*n_ris unknowns, or if n_pilots < n_bs or n_blocks < n_ris,
        in which case no Kronecker-structured design with orthonormal
        rows exists at all.
    """
    budget = dims.n_pilots * dims.n_blocks
    unknowns = dims.n_bs * dims.n_ris
    if budget < unknowns:
        raise TrainingInfeasibleError(
            "training design requires n_pilots*n_blocks >= n_bs*n_ris "
            "(got %d < %d)" % (budget, unknowns)
        )
    if dims.n_pilots < dims.n_bs or dims.n_blocks < dims.n_ris:
        raise TrainingInfeasibleError(
            "Kronecker-structured training needs n_pilots >= n_bs and "
            "n_blocks >= n_ris (got n_pilots=%d, n_bs=%d, n_blocks=%d, "
            "n_ris=%d)" % (dims.n_pilots, dims.n_bs, dims.n_blocks, dims.n_ris)
        )
    bs_pilots = _dft_rows(dims.n_bs, dims.n_pilots)
    ris_phases = _dft_rows(dims.n_ris, dims.n_blocks)
    return TrainingDesign(
        bs_pilots=bs_pilots,
        ris_phases=ris_phases,
        combined=kron(ris_phases, bs_pilots),
    )


@dataclass(frozen=True)
class TrainingReport:
    """Residuals of the three training-design contracts."""

    row_orthonormality: float   # max |combined @ combined^H - I|
    modulus_spread: float       # max - min modulus over profile entries
    kron_consistency: float     # max |combined - kron(profiles, pilots)|

    def ok(self, tol: float = 1e-10) -> bool:
        return (
            self.row_orthonormality <= tol
            and self.modulus_spread <= tol
            and self.kron_consistency <= tol
        )


def validate_training(design: TrainingDesign) -> TrainingReport:
    """Measure how far a design is from its contracts (all zero when built
    by :func:`make_training`)."""
    joint = design.combined
    gram = joint @ joint.conj().T
    row_orth = float(np.max(np.abs(gram - np.eye(joint.shape[0]))))
    mods = np.abs(design.ris_phases)
    spread = float(np.max(mods) - np.min(mods))
    kron_res = float(
        np.max(np.abs(joint - kron(design.ris_phases, design.bs_pilots)))
    )
    return TrainingReport(
        row_orthonormality=row_orth,
        modulus_spread=spread,
        kron_consistency=kron_res,
    )
