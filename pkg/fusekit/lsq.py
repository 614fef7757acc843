#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""Least squares estimators of a constant vector x from noisy linear measurements
y = H x + v.  Batch and weighted solutions use the normal equations, the recursive
estimator refines an estimate one measurement block at a time."""

from typing import Tuple, Union, Sequence, Iterable

import numpy as np

from fusekit import matlib
from fusekit.matlib import Matrix, Vector, MatrixShapeError, DomainError
from fusekit.utils import LogHelper, Logger

ArrayLike = Union[Sequence, np.ndarray, float]

STATE_TOLERANCE:float = 1e-9

_LOG:Logger = LogHelper.logger("lsq")


class RlsState:
    """The recursive estimator's current estimate x_hat, its error covariance p and
    the number of updates k that produced it"""

    def __init__(self, x_hat:ArrayLike, p:ArrayLike, k:int=0):
        self.__x_hat:Vector = matlib.vector(x_hat)
        self.__p:Matrix = matlib.matrix(p)
        self.__k = k

        n = self.__x_hat.size
        if self.__p.shape != (n, n):
            raise MatrixShapeError("Covariance shape {0} does not match estimate of length {1}".
                format(self.__p.shape, n))

        if not matlib.is_psd(self.__p, STATE_TOLERANCE, STATE_TOLERANCE):
            raise DomainError("Estimate covariance must be symmetric positive semidefinite, got {0}".
                format(self.__p.tolist()))

        if k < 0:
            raise DomainError("Update count must be 0 or greater, got {0}".format(k))

    def __str__(self):
        return "k: {0}, x_hat: {1}, p: {2}".format(self.__k, self.__x_hat.tolist(), self.__p.tolist())

    def x_hat(self) -> Vector:
        return self.__x_hat

    def p(self) -> Matrix:
        return self.__p

    def k(self) -> int:
        return self.__k


def batch_ls(h:ArrayLike, y:ArrayLike) -> Vector:
    """The least squares solution x_hat = (H^T H)^-1 H^T y"""
    h = matlib.matrix(h)
    y = matlib.vector(y)
    _check_system(h, y)

    h_t = matlib.transpose(h)
    normal_inverse = matlib.invert(matlib.multiply(h_t, h))
    return matlib.multiply(normal_inverse, matlib.multiply(h_t, y))


def weighted_ls(h:ArrayLike, y:ArrayLike, r:ArrayLike) -> Tuple[Vector, Matrix]:
    """The weighted least squares solution x_hat = (H^T R^-1 H)^-1 H^T R^-1 y and its
    covariance (H^T R^-1 H)^-1, each measurement weighted by its noise covariance"""
    h = matlib.matrix(h)
    y = matlib.vector(y)
    r = matlib.matrix(r)
    _check_system(h, y)
    _check_noise(r, h.shape[0])

    h_t_weight = matlib.multiply(matlib.transpose(h), matlib.invert(r))
    cov = matlib.symmetrize(matlib.invert(matlib.multiply(h_t_weight, h)))
    x_hat = matlib.multiply(cov, matlib.multiply(h_t_weight, y))
    return x_hat, cov


def residual(h:ArrayLike, y:ArrayLike, x_hat:ArrayLike) -> Vector:
    """The measurement residual y - H x_hat"""
    return matlib.subtract(matlib.vector(y), matlib.multiply(matlib.matrix(h), matlib.vector(x_hat)))


def line_design_matrix(r:ArrayLike) -> Matrix:
    """Design matrix with rows [r_i, 1] for fitting y = slope r + intercept"""
    r = matlib.vector(r)
    return matlib.matrix(np.column_stack((r, np.ones(r.size))))


def rls_init(x0:ArrayLike, p0:ArrayLike) -> RlsState:
    """Start the recursive estimator from the expected value x0 of x and the
    covariance p0 of that guess"""
    return RlsState(x0, p0, 0)


def rls_update(state:RlsState, h:ArrayLike, y:ArrayLike, r:ArrayLike) -> RlsState:
    """Refine the estimate with the measurement block y = H x + v, v having
    covariance r.  A single row h and a scalar y are accepted."""
    h = matlib.matrix(h)
    y = matlib.vector(y)
    r = matlib.matrix(r)

    if h.shape[1] != state.x_hat().size:
        raise MatrixShapeError("Measurement matrix has {0} columns but the estimate has {1} elements".
            format(h.shape[1], state.x_hat().size))
    if h.shape[0] != y.size:
        raise MatrixShapeError("Measurement matrix has {0} rows but {1} measurements were given".
            format(h.shape[0], y.size))
    _check_noise(r, y.size)

    x_hat, p, innovation, s, gain = joseph_update(state.x_hat(), state.p(), h, y, r)
    _LOG.debug("rls_update k: {0}, innovation: {1}", state.k() + 1, innovation)
    return RlsState(x_hat, p, state.k() + 1)


def rls_run(state:RlsState, hs:Iterable[ArrayLike], ys:Iterable[ArrayLike], rs:Iterable[ArrayLike]) -> RlsState:
    """Fold rls_update over a sequence of measurement blocks"""
    for h, y, r in zip(hs, ys, rs):
        state = rls_update(state, h, y, r)
    return state


def joseph_update(x_hat:Vector, p:Matrix, h:Matrix, y:Vector, r:Matrix) -> \
        Tuple[Vector, Matrix, Vector, Matrix, Matrix]:
    """The gain update shared by the recursive estimator and the Kalman filter.

        S  = H P H^T + R
        K  = P H^T S^-1
        x' = x + K (y - H x)
        P' = (I - K H) P (I - K H)^T + K R K^T

    Returns x', P' (re-symmetrized), the innovation y - H x, S and K"""
    h_t = matlib.transpose(h)
    p_h_t = matlib.multiply(p, h_t)
    s = matlib.symmetrize(matlib.add(matlib.multiply(h, p_h_t), r))
    gain = matlib.multiply(p_h_t, matlib.invert(s))

    innovation = matlib.subtract(y, matlib.multiply(h, x_hat))
    x_new = matlib.add(x_hat, matlib.multiply(gain, innovation))

    i_kh = matlib.subtract(matlib.identity(x_hat.size), matlib.multiply(gain, h))
    p_new = matlib.add(
        matlib.multiply(matlib.multiply(i_kh, p), matlib.transpose(i_kh)),
        matlib.multiply(matlib.multiply(gain, r), matlib.transpose(gain)))

    return x_new, matlib.symmetrize(p_new), innovation, s, gain


def _check_system(h:Matrix, y:Vector):
    if h.shape[0] < h.shape[1]:
        raise UnderdeterminedError("System has {0} measurements but {1} unknowns, at least {1} are needed".
            format(h.shape[0], h.shape[1]))

    if h.shape[0] != y.size:
        raise MatrixShapeError("Measurement matrix has {0} rows but {1} measurements were given".
            format(h.shape[0], y.size))


def _check_noise(r:Matrix, size:int):
    if r.shape != (size, size):
        raise MatrixShapeError("Noise covariance must have shape ({0}, {0}), got {1}".format(size, r.shape))

    if not matlib.is_pd(r):
        raise DomainError("Noise covariance must be symmetric positive definite, got {0}".format(r.tolist()))


class UnderdeterminedError(DomainError):
    """Raised when there are fewer measurements than unknowns"""
    pass
