#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

import math
from typing import Tuple, Union, Sequence

import numpy as np

from fusekit import matlib
from fusekit.matlib import Matrix, Vector, MatrixShapeError, DomainError, SingularMatrixError, \
    ConvergenceError
from fusekit.utils import LogHelper, Logger

ArrayLike = Union[Sequence, np.ndarray, float]

GAUSSIAN_TOLERANCE:float = 1e-9

_LOG:Logger = LogHelper.logger("statespace")


class ContinuousLinearModel:
    """The linear system x' = A x + B u"""

    def __init__(self, a:ArrayLike, b:ArrayLike):
        self.__a:Matrix = matlib.matrix(a)
        self.__b:Matrix = matlib.matrix(b)

        if self.__a.shape[0] != self.__a.shape[1]:
            raise MatrixShapeError("System matrix A must be square, got shape {0}".format(self.__a.shape))

        if self.__b.shape[0] != self.__a.shape[0]:
            raise MatrixShapeError("Control matrix B must have {0} rows to match A, got shape {1}".
                format(self.__a.shape[0], self.__b.shape))

    def a(self) -> Matrix:
        return self.__a

    def b(self) -> Matrix:
        return self.__b

    def state_dim(self) -> int:
        return self.__a.shape[0]

    def input_dim(self) -> int:
        return self.__b.shape[1]

    def discretize(self, dt:float) -> Tuple[Matrix, Matrix]:
        return discretize(self, dt)


class DiscreteLinearModel:
    """The process model x_k = F x_k-1 + G u_k-1 + L w_k-1 where w has covariance Q.
    G defaults to a single zero input column, L to the identity and Q to zero."""

    def __init__(self, f:ArrayLike, dt:float, g:ArrayLike=None, l:ArrayLike=None, q:ArrayLike=None):
        self.__f:Matrix = matlib.matrix(f)
        n = self.__f.shape[0]
        if self.__f.shape[1] != n:
            raise MatrixShapeError("State transition matrix F must be square, got shape {0}".format(self.__f.shape))

        if not (math.isfinite(dt) and dt > 0.0):
            raise DomainError("Time step dt must be a positive number of seconds, got {0}".format(dt))
        self.__dt = float(dt)

        self.__g:Matrix = matlib.zeros(n, 1) if g is None else matlib.matrix(g)
        self.__l:Matrix = matlib.identity(n) if l is None else matlib.matrix(l)

        if self.__g.shape[0] != n:
            raise MatrixShapeError("Control input matrix G must have {0} rows, got shape {1}".
                format(n, self.__g.shape))

        if self.__l.shape[0] != n:
            raise MatrixShapeError("Noise input matrix L must have {0} rows, got shape {1}".
                format(n, self.__l.shape))

        p = self.__l.shape[1]
        self.__q:Matrix = matlib.zeros(p, p) if q is None else matlib.matrix(q)
        if self.__q.shape != (p, p):
            raise MatrixShapeError("Process noise covariance Q must have shape ({0}, {0}) to match L, got {1}".
                format(p, self.__q.shape))

        if not matlib.is_psd(self.__q):
            raise DomainError("Process noise covariance Q must be symmetric positive semidefinite, got {0}".
                format(self.__q.tolist()))

    def f(self) -> Matrix:
        return self.__f

    def g(self) -> Matrix:
        return self.__g

    def l(self) -> Matrix:
        return self.__l

    def q(self) -> Matrix:
        return self.__q

    def dt(self) -> float:
        return self.__dt

    def state_dim(self) -> int:
        return self.__f.shape[0]

    def input_dim(self) -> int:
        return self.__g.shape[1]

    def noise_dim(self) -> int:
        return self.__l.shape[1]

    def process_noise(self) -> Matrix:
        """The covariance L Q L^T that the noise adds to the state"""
        return propagate_covariance(self.__l, self.__q)


class MeasurementModel:
    """The measurement model z_k = H x_k + M v_k where v has covariance R.
    M defaults to the identity."""

    def __init__(self, h:ArrayLike, r:ArrayLike, m:ArrayLike=None):
        self.__h:Matrix = matlib.matrix(h)
        d = self.__h.shape[0]
        self.__m:Matrix = matlib.identity(d) if m is None else matlib.matrix(m)
        self.__r:Matrix = matlib.matrix(r)

        if self.__m.shape[0] != d:
            raise MatrixShapeError("Noise input matrix M must have {0} rows to match H, got shape {1}".
                format(d, self.__m.shape))

        q = self.__m.shape[1]
        if self.__r.shape != (q, q):
            raise MatrixShapeError("Measurement noise covariance R must have shape ({0}, {0}) to match M, got {1}".
                format(q, self.__r.shape))

        if not matlib.is_pd(self.__r):
            raise DomainError("Measurement noise covariance R must be symmetric positive definite, got {0}".
                format(self.__r.tolist()))

        self.__effective_r:Matrix = propagate_covariance(self.__m, self.__r)

    def h(self) -> Matrix:
        return self.__h

    def m(self) -> Matrix:
        return self.__m

    def r(self) -> Matrix:
        return self.__r

    def effective_r(self) -> Matrix:
        """The covariance M R M^T of the noise as it appears in z"""
        return self.__effective_r

    def measurement_dim(self) -> int:
        return self.__h.shape[0]

    def state_dim(self) -> int:
        return self.__h.shape[1]

    def check_state_dim(self, state_dim:int):
        if self.state_dim() != state_dim:
            raise MatrixShapeError("Observation matrix H has {0} columns but the state has {1} elements".
                format(self.state_dim(), state_dim))


class Gaussian:
    """A belief over the state, a mean vector and its covariance"""

    def __init__(self, mean:ArrayLike, cov:ArrayLike):
        self.__mean:Vector = matlib.vector(mean)
        self.__cov:Matrix = matlib.matrix(cov)

        n = self.__mean.size
        if self.__cov.shape != (n, n):
            raise MatrixShapeError("Covariance shape {0} does not match mean of length {1}".
                format(self.__cov.shape, n))

        if not matlib.is_psd(self.__cov, GAUSSIAN_TOLERANCE, GAUSSIAN_TOLERANCE):
            raise DomainError("Covariance must be symmetric positive semidefinite, got {0}".
                format(self.__cov.tolist()))

    def __str__(self):
        return "mean: {0}, cov: {1}".format(self.__mean.tolist(), self.__cov.tolist())

    def mean(self) -> Vector:
        return self.__mean

    def cov(self) -> Matrix:
        return self.__cov

    def dim(self) -> int:
        return self.__mean.size


def discretize(model:ContinuousLinearModel, dt:float) -> Tuple[Matrix, Matrix]:
    """Convert a continuous model to discrete F and G with the input held constant
    across each step.  F = e^(A dt).  G = F (I - e^(-A dt)) A^-1 B when A can be
    inverted, otherwise G is the term by term integral of e^(A v) B over the step."""
    if not (math.isfinite(dt) and dt > 0.0):
        raise DomainError("Time step dt must be a positive number of seconds, got {0}".format(dt))

    a = model.a()
    f = matlib.matrix_exponential(a, dt)
    try:
        a_inverse = matlib.invert(a)
        backward = matlib.subtract(matlib.identity(model.state_dim()), matlib.matrix_exponential(a, -dt))
        g = matlib.multiply(matlib.multiply(matlib.multiply(f, backward), a_inverse), model.b())
    except SingularMatrixError:
        _LOG.debug("A is singular, discretizing the input with the series for dt {0}", dt)
        g = matlib.multiply(integrated_exponential(a, dt), model.b())

    return f, g


def integrated_exponential(a:Matrix, dt:float) -> Matrix:
    """The integral of e^(A v) from 0 to dt, summed as the series
    sum over j of A^j dt^(j+1) / (j+1)!"""
    n = a.shape[0]
    term = np.eye(n) * dt
    result = term.copy()
    for j in range(1, matlib.SERIES_MAX_TERMS + 1):
        term = np.matmul(term, a) * (dt / (j + 1))
        result = result + term
        if matlib.max_abs(term) < matlib.SERIES_TERM_TOLERANCE:
            break
    else:
        raise ConvergenceError("Integrated exponential series did not converge within {0} terms".
            format(matlib.SERIES_MAX_TERMS))

    return matlib.matrix(result)


def step_discrete(model:DiscreteLinearModel, x:ArrayLike, u:ArrayLike=None, w:ArrayLike=None) -> Vector:
    """Advance the state one step, F x + G u + L w.  Missing u or w are zero."""
    x = matlib.vector(x)
    u = np.zeros(model.input_dim()) if u is None else matlib.vector(u)
    w = np.zeros(model.noise_dim()) if w is None else matlib.vector(w)

    result = matlib.multiply(model.f(), x)
    result = matlib.add(result, matlib.multiply(model.g(), u))
    return matlib.add(result, matlib.multiply(model.l(), w))


def measure(model:MeasurementModel, x:ArrayLike, v:ArrayLike=None) -> Vector:
    """The measurement H x + M v.  A missing v is zero."""
    x = matlib.vector(x)
    v = np.zeros(model.m().shape[1]) if v is None else matlib.vector(v)
    return matlib.add(matlib.multiply(model.h(), x), matlib.multiply(model.m(), v))


def propagate_covariance(a:Matrix, p:Matrix) -> Matrix:
    """Covariance of a x given the covariance p of x, a p a^T"""
    return matlib.symmetrize(matlib.multiply(matlib.multiply(a, p), matlib.transpose(a)))
