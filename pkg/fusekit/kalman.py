#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""The linear Kalman filter over Gaussian beliefs.

A filter is a chain of immutable FilterEstimate values.  kf_predict turns a posterior
into the next step's prior, kf_update turns a prior into a posterior using a
measurement and kf_coast does the same at a step that has no measurement."""

from enum import Enum
from typing import Tuple, Union, Sequence

import numpy as np
from scipy.stats import chi2

from fusekit import matlib, lsq, statespace
from fusekit.matlib import Matrix, Vector, MatrixShapeError, DomainError
from fusekit.statespace import Gaussian, DiscreteLinearModel, MeasurementModel
from fusekit.utils import LogHelper, Logger

ArrayLike = Union[Sequence, np.ndarray, float]

UNOBSERVED_VARIANCE_FACTOR:float = 10.0

_LOG:Logger = LogHelper.logger("kalman")


class EstimateKind(Enum):
    PRIOR = "prior"
    POSTERIOR = "posterior"


class FilterEstimate:
    """The belief about the state at step k, either before (prior) or after
    (posterior) the step's measurement is accounted for"""

    def __init__(self, belief:Gaussian, kind:EstimateKind, k:int):
        if k < 0:
            raise DomainError("Step index must be 0 or greater, got {0}".format(k))

        self.__belief = belief
        self.__kind = kind
        self.__k = k

    def __str__(self):
        return "{0} k: {1}, {2}".format(self.__kind.value, self.__k, self.__belief)

    def belief(self) -> Gaussian:
        return self.__belief

    def kind(self) -> EstimateKind:
        return self.__kind

    def k(self) -> int:
        return self.__k

    def mean(self) -> Vector:
        return self.__belief.mean()

    def cov(self) -> Matrix:
        return self.__belief.cov()


class InnovationRecord:
    """The innovation nu = z - H x_prior of an update, its covariance s and the
    normalized innovation squared nis = nu^T s^-1 nu"""

    def __init__(self, nu:ArrayLike, s:ArrayLike):
        self.__nu:Vector = matlib.vector(nu)
        self.__s:Matrix = matlib.matrix(s)

        if self.__s.shape != (self.__nu.size, self.__nu.size):
            raise MatrixShapeError("Innovation covariance shape {0} does not match innovation of length {1}".
                format(self.__s.shape, self.__nu.size))

        if not matlib.is_pd(self.__s):
            raise DomainError("Innovation covariance must be symmetric positive definite, got {0}".
                format(self.__s.tolist()))

        nis = float(np.dot(self.__nu, matlib.multiply(matlib.invert(self.__s), self.__nu)))
        self.__nis = max(nis, 0.0)

    def nu(self) -> Vector:
        return self.__nu

    def s(self) -> Matrix:
        return self.__s

    def nis(self) -> float:
        return self.__nis

    def dim(self) -> int:
        return self.__nu.size


class InnovationSummary:
    """Sample statistics of the innovations over a run.  For a consistent filter the
    mean is near zero and the mean NIS is near the measurement dimension."""

    def __init__(self, mean:Vector, sample_cov:Matrix, mean_nis:float, count:int):
        self.__mean = mean
        self.__sample_cov = sample_cov
        self.__mean_nis = mean_nis
        self.__count = count

    def mean(self) -> Vector:
        return self.__mean

    def sample_cov(self) -> Matrix:
        return self.__sample_cov

    def mean_nis(self) -> float:
        return self.__mean_nis

    def count(self) -> int:
        return self.__count

    def dim(self) -> int:
        return self.__mean.size

    def nis_interval(self, alpha:float=0.05) -> Tuple[float, float]:
        """Two sided acceptance interval for the mean NIS at significance alpha.  The sum of
        count NIS values of a consistent filter is chi-square with count x dim degrees of freedom."""
        if not 0.0 < alpha < 1.0:
            raise DomainError("Significance level must be between 0 and 1, got {0}".format(alpha))

        dof = self.__count * self.dim()
        return chi2.ppf(alpha / 2.0, dof) / self.__count, chi2.ppf(1.0 - alpha / 2.0, dof) / self.__count

    def is_consistent(self, alpha:float=0.05) -> bool:
        low, high = self.nis_interval(alpha)
        return low <= self.__mean_nis <= high


def kf_predict(est:FilterEstimate, model:DiscreteLinearModel, u:ArrayLike=None) -> FilterEstimate:
    """The process update: x_prior = F x + G u, P_prior = F P F^T + L Q L^T"""
    if est.kind() != EstimateKind.POSTERIOR:
        raise FilterSequenceError("kf_predict expects a posterior estimate, got a {0} at step {1}".
            format(est.kind().value, est.k()))

    if model.state_dim() != est.belief().dim():
        raise MatrixShapeError("Process model has {0} states but the estimate has {1}".
            format(model.state_dim(), est.belief().dim()))

    mean = statespace.step_discrete(model, est.mean(), u)
    cov = matlib.symmetrize(matlib.add(statespace.propagate_covariance(model.f(), est.cov()),
        model.process_noise()))
    return FilterEstimate(Gaussian(mean, cov), EstimateKind.PRIOR, est.k() + 1)


def kf_update(est:FilterEstimate, meas:MeasurementModel, z:ArrayLike) -> Tuple[FilterEstimate, InnovationRecord]:
    """The measurement update, the Joseph form gain update shared with the recursive
    least squares estimator using the noise covariance M R M^T"""
    if est.kind() != EstimateKind.PRIOR:
        raise FilterSequenceError("kf_update expects a prior estimate, got a {0} at step {1}".
            format(est.kind().value, est.k()))

    meas.check_state_dim(est.belief().dim())
    z = matlib.vector(z)
    if z.size != meas.measurement_dim():
        raise MatrixShapeError("Measurement has {0} elements but the model expects {1}".
            format(z.size, meas.measurement_dim()))

    mean, cov, nu, s, gain = lsq.joseph_update(est.mean(), est.cov(), meas.h(), z, meas.effective_r())
    _LOG.debug("Update at step {0}, innovation {1}", est.k(), nu)
    posterior = FilterEstimate(Gaussian(mean, cov), EstimateKind.POSTERIOR, est.k())
    return posterior, InnovationRecord(nu, s)


def kf_coast(est:FilterEstimate) -> FilterEstimate:
    """The posterior at a step without a measurement, the belief is unchanged"""
    if est.kind() != EstimateKind.PRIOR:
        raise FilterSequenceError("kf_coast expects a prior estimate, got a {0} at step {1}".
            format(est.kind().value, est.k()))

    return FilterEstimate(est.belief(), EstimateKind.POSTERIOR, est.k())


def initialize_from_measurement(meas:MeasurementModel, z:ArrayLike, state_dim:int,
        unobserved_factor:float=None) -> FilterEstimate:
    """The initial posterior taken from a first measurement.  Each measurement row that
    observes a single state sets that state's mean and variance, every other state starts
    at 0 with unobserved_factor times the largest observed variance."""
    if unobserved_factor is None:
        unobserved_factor = UNOBSERVED_VARIANCE_FACTOR

    meas.check_state_dim(state_dim)
    z = matlib.vector(z)
    h = meas.h()
    r = meas.effective_r()

    mean = np.zeros(state_dim)
    variance = np.full(state_dim, np.nan)
    for row in range(h.shape[0]):
        columns = np.flatnonzero(h[row])
        if columns.size == 1:
            col = columns[0]
            if np.isnan(variance[col]):
                mean[col] = z[row] / h[row, col]
                variance[col] = r[row, row] / h[row, col] ** 2

    observed = ~np.isnan(variance)
    if not np.any(observed):
        raise DomainError("Measurement model does not observe any single state directly")

    variance[~observed] = unobserved_factor * np.max(variance[observed])
    return FilterEstimate(Gaussian(mean, np.diag(variance)), EstimateKind.POSTERIOR, 0)


def innovation_stats(records:Sequence[InnovationRecord]) -> InnovationSummary:
    """Sample mean and covariance of the innovations and the mean NIS"""
    if len(records) < 2:
        raise DomainError("Innovation statistics need at least 2 records, got {0}".format(len(records)))

    dim = records[0].dim()
    if any(record.dim() != dim for record in records):
        raise MatrixShapeError("Innovation records must all have dimension {0}".format(dim))

    innovations = np.array([record.nu() for record in records])
    mean = matlib.vector(innovations.mean(axis=0))
    sample_cov = matlib.matrix(np.cov(innovations, rowvar=False, ddof=1).reshape(dim, dim))
    mean_nis = float(np.mean([record.nis() for record in records]))
    return InnovationSummary(mean, sample_cov, mean_nis, len(records))


def estimation_cost(est:FilterEstimate) -> float:
    """The filter's cost, the expected squared estimation error, trace(P)"""
    return matlib.trace(est.cov())


class FilterSequenceError(DomainError):
    """Raised when a filter step is applied to the wrong kind of estimate"""
    pass
