import logging
from dataclasses import dataclass

import numpy as np

from src.common.config import CONFIG
from src.common.errors import BlochNormError, DensityOperatorError

logger = logging.getLogger("BlochModel")

# Angular momentum convention: J_z = σ_z/2, J_y = σ_y/2, so that
# ρ = (I + xσ_x + yσ_y + zσ_z)/2 and the linear measurement solution carries
# the prefactor e^{-γt}.
TRACE_TOL = 1e-12


@dataclass(frozen=True)
class BlochVector:
    """
    Qubit state as Bloch components (x, y, z).

    Args:
        x, y, z (float): Components; the length may exceed 1 by at most
            CONFIG["bloch_tol"].
    """

    x: float = 0.0
    y: float = 0.0
    z: float = 0.0

    def __post_init__(self):
        tol = CONFIG["bloch_tol"]
        if not np.all(np.isfinite([self.x, self.y, self.z])):
            raise BlochNormError(f"Bloch vector {self.as_tuple()} is not finite")
        if self.length() > 1.0 + tol:
            raise BlochNormError(
                f"Bloch vector {self.as_tuple()} has length {self.length():.12g} > 1 + {tol:g}"
            )

    def length(self):
        return float(np.sqrt(self.x * self.x + self.y * self.y + self.z * self.z))

    def as_tuple(self):
        return (self.x, self.y, self.z)

    def as_array(self):
        return np.array([self.x, self.y, self.z], dtype=float)

    @classmethod
    def from_array(cls, values):
        x, y, z = (float(v) for v in values)
        return cls(x, y, z)


@dataclass(frozen=True)
class DensityOperator:
    """
    2×2 Hermitian operator stored as ρ00, ρ11 and ρ01 = re01 + i·im01.

    A normalized operator has unit trace and non-negative eigenvalues; an
    unnormalized one (the linear-trajectory state) only needs a positive
    trace, which is its norm.
    """

    rho00: float
    rho11: float
    re01: float = 0.0
    im01: float = 0.0
    normalized: bool = True

    def __post_init__(self):
        trace = self.trace()
        if self.normalized:
            if abs(trace - 1.0) > TRACE_TOL:
                raise DensityOperatorError(f"trace {trace!r} differs from 1")
            # states of length up to 1 + bloch_tol are valid input
            floor = -max(TRACE_TOL, CONFIG["bloch_tol"] / 2.0)
            if self.eigenvalues()[0] < floor:
                raise DensityOperatorError(
                    f"negative eigenvalue {self.eigenvalues()[0]:.3g} in normalized state"
                )
        elif not trace > 0.0:
            raise DensityOperatorError(f"unnormalized state needs trace > 0, got {trace!r}")

    def trace(self):
        return self.rho00 + self.rho11

    def matrix(self):
        off = complex(self.re01, self.im01)
        return np.array([[self.rho00, off], [off.conjugate(), self.rho11]], dtype=complex)

    def eigenvalues(self):
        """Ascending eigenvalues in closed form."""
        half_trace = 0.5 * self.trace()
        radius = np.hypot(0.5 * (self.rho00 - self.rho11), np.hypot(self.re01, self.im01))
        return np.array([half_trace - radius, half_trace + radius])

    def normalize(self):
        norm = self.trace()
        if not norm > 0.0:
            raise DensityOperatorError(f"cannot normalize a state with trace {norm!r}")
        return DensityOperator(
            self.rho00 / norm, self.rho11 / norm, self.re01 / norm, self.im01 / norm, normalized=True
        )

    @classmethod
    def from_matrix(cls, matrix, normalized=True):
        matrix = np.asarray(matrix, dtype=complex)
        if matrix.shape != (2, 2):
            raise DensityOperatorError(f"expected a 2x2 matrix, got shape {matrix.shape}")
        if not np.allclose(matrix, matrix.conj().T, rtol=0.0, atol=TRACE_TOL):
            raise DensityOperatorError("matrix is not Hermitian")
        return cls(
            float(matrix[0, 0].real),
            float(matrix[1, 1].real),
            float(matrix[0, 1].real),
            float(matrix[0, 1].imag),
            normalized=normalized,
        )


def bloch_to_density(b):
    if not isinstance(b, BlochVector):
        b = BlochVector.from_array(b)
    return DensityOperator(
        rho00=0.5 * (1.0 + b.z),
        rho11=0.5 * (1.0 - b.z),
        re01=0.5 * b.x,
        im01=-0.5 * b.y,
    )


def density_to_bloch(rho):
    """
    Bloch components of a normalized state.

    Args:
        rho (DensityOperator or array-like): Normalized state; a 2×2 matrix is
            checked for hermiticity and unit trace first.

    Returns:
        BlochVector: (2 Re ρ01, -2 Im ρ01, ρ00 - ρ11).
    """
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator.from_matrix(rho)
    if not rho.normalized:
        raise DensityOperatorError("density_to_bloch needs a normalized state; call normalize() first")
    return BlochVector(2.0 * rho.re01, -2.0 * rho.im01, rho.rho00 - rho.rho11)


def lambda_max(rho):
    if not isinstance(rho, DensityOperator):
        rho = DensityOperator.from_matrix(rho)
    if not rho.normalized:
        raise DensityOperatorError("lambda_max needs a normalized state; call normalize() first")
    return float(rho.eigenvalues()[1])


def bloch_lengths(states):
    """Row-wise Bloch lengths of an (n, 3) state array."""
    return np.linalg.norm(np.asarray(states, dtype=float), axis=-1)
