#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""Dense real matrix algebra shared by every estimator in the package.

A Matrix is a read-only, two dimensional numpy float64 array and a vector is a read-only
one dimensional float64 array.  Every function here returns a new frozen array and raises
NonFiniteMatrixError rather than handing back NaN or Inf values."""

import math
from typing import Union, Sequence

import numpy as np

from fusekit.utils import LogHelper, Logger

Matrix = np.ndarray
Vector = np.ndarray

# Tolerances are read at call time so tests can override them on the module
INVERSION_PIVOT_TOLERANCE:float = 1e-12
SERIES_TERM_TOLERANCE:float = 1e-14
SERIES_MAX_TERMS:int = 64
SCALING_NORM_LIMIT:float = 0.5
SYMMETRY_TOLERANCE:float = 1e-12
PSD_PIVOT_TOLERANCE:float = 1e-12

_LOG:Logger = LogHelper.logger("matlib")


def matrix(values:Union[Sequence, np.ndarray, float]) -> Matrix:
    """Create a Matrix from nested sequences or an array.  A scalar becomes a 1x1
    matrix and a flat sequence becomes a single row."""
    result = np.array(values, dtype=np.float64)
    if result.ndim == 0:
        result = result.reshape(1, 1)
    elif result.ndim == 1:
        result = result.reshape(1, result.size)
    elif result.ndim > 2:
        raise MatrixShapeError("A matrix must have at most 2 dimensions, got shape {0}".format(result.shape))

    if result.shape[0] < 1 or result.shape[1] < 1:
        raise MatrixShapeError("A matrix must have at least one row and one column, got shape {0}".
            format(result.shape))

    return _freeze(result, "matrix")


def vector(values:Union[Sequence, np.ndarray, float]) -> Vector:
    """Create a vector, a column or row matrix is flattened"""
    result = np.array(values, dtype=np.float64).reshape(-1)
    return _freeze(result, "vector")


def identity(n:int) -> Matrix:
    return _freeze(np.eye(n), "identity")


def zeros(rows:int, cols:int) -> Matrix:
    return _freeze(np.zeros((rows, cols)), "zeros")


def transpose(m:Matrix) -> Matrix:
    _require_matrix(m, "transpose")
    return _freeze(m.T, "transpose")


def add(a:Matrix, b:Matrix) -> Matrix:
    _require_same_shape(a, b, "add")
    return _freeze(np.add(a, b), "add")


def subtract(a:Matrix, b:Matrix) -> Matrix:
    _require_same_shape(a, b, "subtract")
    return _freeze(np.subtract(a, b), "subtract")


def scale(m:Matrix, factor:float) -> Matrix:
    return _freeze(np.multiply(m, factor), "scale")


def trace(m:Matrix) -> float:
    _require_square(m, "trace")
    return float(np.trace(m))


def max_abs(m:np.ndarray) -> float:
    if m.size == 0:
        return 0.0
    return float(np.max(np.abs(m)))


def multiply(a:Matrix, b:Union[Matrix, Vector]) -> Union[Matrix, Vector]:
    """The matrix product a x b.  When b is a vector the result is a vector."""
    _require_matrix(a, "multiply")
    if b.ndim not in (1, 2) or a.shape[1] != b.shape[0]:
        raise MatrixShapeError("Cannot multiply shape {0} by shape {1}".format(
            _shape_label(a), _shape_label(b)))

    return _freeze(np.matmul(a, b), "multiply")


def invert(m:Matrix) -> Matrix:
    """Invert a square matrix with Gauss-Jordan elimination and partial pivoting.
    Raises SingularMatrixError when a pivot's magnitude falls below
    INVERSION_PIVOT_TOLERANCE."""
    _require_square(m, "invert")

    n = m.shape[0]
    augmented = np.hstack((np.array(m, dtype=np.float64), np.eye(n)))
    for col in range(n):
        pivot_row = col + int(np.argmax(np.abs(augmented[col:, col])))
        pivot = augmented[pivot_row, col]
        if abs(pivot) < INVERSION_PIVOT_TOLERANCE:
            raise SingularMatrixError(
                "Matrix is singular or ill-conditioned, pivot {0:.3e} in column {1} is below {2:.1e}".
                format(pivot, col, INVERSION_PIVOT_TOLERANCE))

        if pivot_row != col:
            augmented[[col, pivot_row]] = augmented[[pivot_row, col]]

        augmented[col] /= pivot
        factors = augmented[:, col].copy()
        factors[col] = 0.0
        augmented -= np.outer(factors, augmented[col])

    return _freeze(augmented[:, n:].copy(), "invert")


def matrix_exponential(a:Matrix, t:float, truncated:bool=False) -> Matrix:
    """Compute e^(a t).

    The series I + At + (At)^2/2! + ... is summed until the max-abs of the next term is
    below SERIES_TERM_TOLERANCE, after scaling At down by powers of two until its max-abs
    norm is at most SCALING_NORM_LIMIT.  The result is then squared back up.

    With truncated set only the first order terms I + At are returned."""
    _require_square(a, "matrix_exponential")
    if not math.isfinite(t):
        raise DomainError("Time argument to matrix_exponential must be finite, got {0}".format(t))

    n = a.shape[0]
    at = np.multiply(a, t)
    if not np.all(np.isfinite(at)):
        raise NonFiniteMatrixError("A·t is not finite for t = {0}".format(t))

    if truncated:
        return _freeze(np.eye(n) + at, "matrix_exponential")

    norm = max_abs(at)
    squarings = 0
    while norm > SCALING_NORM_LIMIT:
        at = at / 2.0
        norm /= 2.0
        squarings += 1

    result = np.eye(n)
    term = np.eye(n)
    for k in range(1, SERIES_MAX_TERMS + 1):
        term = np.matmul(term, at) / k
        result = result + term
        if max_abs(term) < SERIES_TERM_TOLERANCE:
            break
    else:
        raise ConvergenceError("Matrix exponential series did not converge within {0} terms".
            format(SERIES_MAX_TERMS))

    for _ in range(squarings):
        result = np.matmul(result, result)

    _LOG.debug("matrix_exponential: {0} terms, {1} squarings", k, squarings)
    return _freeze(result, "matrix_exponential")


def symmetrize(m:Matrix) -> Matrix:
    _require_square(m, "symmetrize")
    return _freeze((m + m.T) / 2.0, "symmetrize")


def is_symmetric(m:Matrix, tolerance:float=None) -> bool:
    if tolerance is None:
        tolerance = SYMMETRY_TOLERANCE

    if m.ndim != 2 or m.shape[0] != m.shape[1]:
        return False
    return max_abs(m - m.T) <= tolerance


def ldl_pivots(m:Matrix) -> Vector:
    """The diagonal of D in the LDL^T factorization of a symmetric matrix, the
    pivots of a Cholesky factorization without the square roots.  Pivots of a
    semidefinite matrix that vanish leave the matching column of L at zero."""
    _require_square(m, "ldl_pivots")

    n = m.shape[0]
    lower = np.eye(n)
    pivots = np.zeros(n)
    for i in range(n):
        for j in range(i):
            value = m[i, j] - np.dot(lower[i, :j] * lower[j, :j], pivots[:j])
            lower[i, j] = value / pivots[j] if abs(pivots[j]) > PSD_PIVOT_TOLERANCE else 0.0
        pivots[i] = m[i, i] - np.dot(lower[i, :i] ** 2, pivots[:i])

    return pivots


def is_psd(m:Matrix, symmetry_tolerance:float=None, pivot_tolerance:float=None) -> bool:
    """True when m is symmetric and every LDL^T pivot is at least -pivot_tolerance"""
    if pivot_tolerance is None:
        pivot_tolerance = PSD_PIVOT_TOLERANCE

    if not is_symmetric(m, symmetry_tolerance):
        return False
    return bool(np.all(ldl_pivots(m) >= -pivot_tolerance))


def is_pd(m:Matrix, symmetry_tolerance:float=None) -> bool:
    """True when m is symmetric and every LDL^T pivot is strictly positive"""
    if not is_symmetric(m, symmetry_tolerance):
        return False
    return bool(np.all(ldl_pivots(m) > 0.0))


def _freeze(result:np.ndarray, operation:str) -> np.ndarray:
    if not np.all(np.isfinite(result)):
        raise NonFiniteMatrixError("Operation {0} produced non-finite values".format(operation))

    result.setflags(write=False)
    return result


def _shape_label(m:np.ndarray) -> str:
    return "x".join(str(dim) for dim in m.shape) if m.ndim > 0 else "scalar"


def _require_matrix(m:np.ndarray, operation:str):
    if not isinstance(m, np.ndarray) or m.ndim != 2:
        raise MatrixShapeError("{0} expects a 2 dimensional matrix, got shape {1}".format(
            operation, _shape_label(np.asarray(m))))


def _require_square(m:np.ndarray, operation:str):
    _require_matrix(m, operation)
    if m.shape[0] != m.shape[1]:
        raise MatrixShapeError("{0} expects a square matrix, got shape {1}".format(operation, _shape_label(m)))


def _require_same_shape(a:np.ndarray, b:np.ndarray, operation:str):
    if a.shape != b.shape:
        raise MatrixShapeError("{0} expects matching shapes, got {1} and {2}".format(
            operation, _shape_label(a), _shape_label(b)))


class MatrixShapeError(ValueError):
    """Raised when matrix dimensions don't conform to an operation"""
    pass


class DomainError(ValueError):
    """Raised when an argument is outside the domain of an operation"""
    pass


class SingularMatrixError(ArithmeticError):
    """Raised when a matrix that must be inverted is singular or ill-conditioned"""
    pass


class ConvergenceError(ArithmeticError):
    """Raised when a series fails to converge within its iteration cap"""
    pass


class NonFiniteMatrixError(ArithmeticError):
    """Raised when an operation would produce NaN or Inf entries"""
    pass
