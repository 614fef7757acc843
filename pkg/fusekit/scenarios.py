#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""Simulated estimation experiments: a pendulum whose angle is measured and a target
moving in a plane whose position is measured.  A run simulates the truth, draws noisy
measurements, runs the linear Kalman filter and records everything in a ScenarioTrace."""

import math
from enum import Enum
from typing import Dict, Any, List, Tuple, Sequence, Union, Callable

import numpy as np

from fusekit import matlib, statespace, kalman
from fusekit.kalman import InnovationRecord, InnovationSummary
from fusekit.matlib import Vector, DomainError
from fusekit.statespace import ContinuousLinearModel, DiscreteLinearModel, MeasurementModel
from fusekit.utils import LogHelper, Logger, FusekitProperties

# Containment comparisons allow this much rounding past the three-sigma bound
BOUNDARY_TOLERANCE:float = 1e-12
RATE_TOLERANCE:float = 1e-9

PROCESS_STREAM:int = 0
MEASUREMENT_STREAM:int = 1

TruthSample = Tuple[float, Vector]


class ScenarioKind(Enum):
    PENDULUM = "pendulum"
    TRACKING = "tracking"


class TruthModel(Enum):
    NONLINEAR = "nonlinear"
    LINEAR = "linear"


class GaussianSource:
    """Standard normal draws for a seed.  Uniforms come from numpy's PCG64 generator seeded
    with the pair (seed, stream) and are turned into normals with the Box-Muller transform,
    so each stream reproduces exactly for a given seed."""

    def __init__(self, seed:int, stream:int=PROCESS_STREAM):
        if seed < 0:
            raise DomainError("Seeds must be 0 or greater, got {0}".format(seed))

        self.__generator = np.random.Generator(np.random.PCG64(np.random.SeedSequence([seed, stream])))
        self.__spare:float = None

    def normal(self, std:float=1.0) -> float:
        if self.__spare is not None:
            value = self.__spare
            self.__spare = None
        else:
            # 1 - U keeps the log argument in (0, 1]
            radius = math.sqrt(-2.0 * math.log(1.0 - self.__generator.random()))
            angle = 2.0 * math.pi * self.__generator.random()
            value = radius * math.cos(angle)
            self.__spare = radius * math.sin(angle)

        return std * value

    def normals(self, count:int, std:float=1.0) -> Vector:
        return matlib.vector([self.normal(std) for _ in range(count)])


class ScenarioParams:
    """Common parameters of a scenario, a time step, a duration and a measurement rate.
    Parameter objects are immutable, replace() makes a modified copy."""

    def __init__(self, values:Dict[str, Any]):
        self._values:Dict[str, Any] = values
        self.__validate_timing()

    def __eq__(self, other):
        return type(self) is type(other) and self._values == other._values

    def __str__(self):
        return ", ".join("{0}: {1}".format(key, value) for key, value in self._values.items())

    def as_dict(self) -> Dict[str, Any]:
        return dict(self._values)

    def replace(self, **changes):
        values = self.as_dict()
        values.update(changes)
        return type(self)(**values)

    def dt(self) -> float:
        return self._values["dt"]

    def duration(self) -> float:
        return self._values["duration"]

    def rate_hz(self) -> float:
        return self._values["rate_hz"]

    def step_count(self) -> int:
        return int(round(self.duration() / self.dt()))

    def steps_per_measurement(self) -> int:
        return int(round(1.0 / (self.rate_hz() * self.dt())))

    def step_time(self, k:int) -> float:
        """Time of step k.  Measurement steps land exactly on multiples of 1 / rate_hz."""
        per_measurement = self.steps_per_measurement()
        if k % per_measurement == 0:
            return (k // per_measurement) / self.rate_hz()
        return k * self.dt()

    @staticmethod
    def _require_positive(name:str, value:float):
        if value is None or not (math.isfinite(value) and value > 0.0):
            raise DomainError("Parameter {0} must be greater than 0, got {1}".format(name, value))

    @staticmethod
    def _require_non_negative(name:str, value:float):
        if value is None or not (math.isfinite(value) and value >= 0.0):
            raise DomainError("Parameter {0} must be 0 or greater, got {1}".format(name, value))

    def __validate_timing(self):
        for name in ("dt", "duration", "rate_hz"):
            ScenarioParams._require_positive(name, self._values[name])

        interval = 1.0 / self.rate_hz()
        per_measurement = round(interval / self.dt())
        if per_measurement < 1 or abs(interval - per_measurement * self.dt()) > RATE_TOLERANCE:
            raise DomainError("Time step dt {0} must divide the measurement interval {1}".
                format(self.dt(), interval))

        if self.step_count() < 1:
            raise DomainError("Duration {0} must cover at least one time step of {1}".
                format(self.duration(), self.dt()))


class PendulumParams(ScenarioParams):
    """The pendulum experiment, angles in radians.  The filter's noise levels default to
    the simulated ones, filter_sigma_r and filter_sigma_o mistune the filter on purpose."""

    def __init__(self, g:float=9.81, l:float=1.0, m:float=1.0, theta0:float=math.radians(10.0),
            theta_dot0:float=0.0, sigma_r:float=0.5, sigma_o:float=0.05, dt:float=0.01,
            duration:float=10.0, rate_hz:float=10.0, filter_sigma_r:float=None,
            filter_sigma_o:float=None, truth_model:Union[TruthModel, str]=TruthModel.NONLINEAR):
        super().__init__({"g": g, "l": l, "m": m, "theta0": theta0, "theta_dot0": theta_dot0,
            "sigma_r": sigma_r, "sigma_o": sigma_o, "dt": dt, "duration": duration, "rate_hz": rate_hz,
            "filter_sigma_r": filter_sigma_r, "filter_sigma_o": filter_sigma_o,
            "truth_model": TruthModel(truth_model)})

        for name in ("g", "l", "m"):
            ScenarioParams._require_positive(name, self._values[name])
        for name in ("sigma_r", "sigma_o"):
            ScenarioParams._require_non_negative(name, self._values[name])
        for name in ("filter_sigma_r", "filter_sigma_o"):
            if self._values[name] is not None:
                ScenarioParams._require_non_negative(name, self._values[name])
        for name in ("theta0", "theta_dot0"):
            if not math.isfinite(self._values[name]):
                raise DomainError("Parameter {0} must be finite, got {1}".format(name, self._values[name]))

    def g(self) -> float:
        return self._values["g"]

    def length(self) -> float:
        return self._values["l"]

    def mass(self) -> float:
        return self._values["m"]

    def theta0(self) -> float:
        return self._values["theta0"]

    def theta_dot0(self) -> float:
        return self._values["theta_dot0"]

    def sigma_r(self) -> float:
        return self._values["sigma_r"]

    def sigma_o(self) -> float:
        return self._values["sigma_o"]

    def filter_sigma_r(self) -> float:
        value = self._values["filter_sigma_r"]
        return self.sigma_r() if value is None else value

    def filter_sigma_o(self) -> float:
        value = self._values["filter_sigma_o"]
        return self.sigma_o() if value is None else value

    def truth_model(self) -> TruthModel:
        return self._values["truth_model"]

    def inertia(self) -> float:
        return self.mass() * self.length() ** 2

    def small_angle_period(self) -> float:
        return 2.0 * math.pi * math.sqrt(self.length() / self.g())


class TrackingParams(ScenarioParams):
    """The planar tracking experiment with state [px, vx, py, vy].  rate_hz defaults to
    one position measurement per time step."""

    def __init__(self, dt:float=0.1, duration:float=10.0, sigma_a:float=0.5, sigma_pos:float=1.0,
            x0:Sequence[float]=(0.0, 1.0, 0.0, 2.0), rate_hz:float=None, filter_sigma_a:float=None,
            filter_sigma_pos:float=None):
        if dt is not None and rate_hz is None and math.isfinite(dt) and dt > 0.0:
            rate_hz = 1.0 / dt

        super().__init__({"dt": dt, "duration": duration, "sigma_a": sigma_a, "sigma_pos": sigma_pos,
            "x0": tuple(float(item) for item in x0), "rate_hz": rate_hz,
            "filter_sigma_a": filter_sigma_a, "filter_sigma_pos": filter_sigma_pos})

        for name in ("sigma_a", "sigma_pos"):
            ScenarioParams._require_non_negative(name, self._values[name])
        for name in ("filter_sigma_a", "filter_sigma_pos"):
            if self._values[name] is not None:
                ScenarioParams._require_non_negative(name, self._values[name])
        if len(self._values["x0"]) != 4 or not all(math.isfinite(item) for item in self._values["x0"]):
            raise DomainError("Parameter x0 must be 4 finite values [px, vx, py, vy], got {0}".
                format(self._values["x0"]))

    def sigma_a(self) -> float:
        return self._values["sigma_a"]

    def sigma_pos(self) -> float:
        return self._values["sigma_pos"]

    def x0(self) -> Vector:
        return matlib.vector(self._values["x0"])

    def filter_sigma_a(self) -> float:
        value = self._values["filter_sigma_a"]
        return self.sigma_a() if value is None else value

    def filter_sigma_pos(self) -> float:
        value = self._values["filter_sigma_pos"]
        return self.sigma_pos() if value is None else value


class TraceRecord:
    """One time step of a run.  z, nu and nis are None at steps without a measurement."""

    def __init__(self, t:float, x_true:Vector, x_hat:Vector, p_diag:Vector, z:Vector=None,
            innovation:InnovationRecord=None):
        self.__t = t
        self.__x_true = x_true
        self.__x_hat = x_hat
        self.__p_diag = p_diag
        self.__z = z
        self.__innovation = innovation
        self.__three_sigma = matlib.vector(3.0 * np.sqrt(np.maximum(p_diag, 0.0)))

    def t(self) -> float:
        return self.__t

    def x_true(self) -> Vector:
        return self.__x_true

    def z(self) -> Vector:
        return self.__z

    def x_hat(self) -> Vector:
        return self.__x_hat

    def p_diag(self) -> Vector:
        return self.__p_diag

    def innovation(self) -> InnovationRecord:
        return self.__innovation

    def nu(self) -> Vector:
        return None if self.__innovation is None else self.__innovation.nu()

    def nis(self) -> float:
        return None if self.__innovation is None else self.__innovation.nis()

    def three_sigma(self) -> Vector:
        return self.__three_sigma

    def error(self) -> Vector:
        return self.__x_hat - self.__x_true


class ScenarioSummary:
    """Metrics of one or more runs: per state RMSE and three-sigma containment and
    the innovation statistics, None when fewer than two updates were made"""

    def __init__(self, rmse:Vector, containment:Vector, innovation:InnovationSummary,
            record_count:int, update_count:int, run_count:int):
        self.__rmse = rmse
        self.__containment = containment
        self.__innovation = innovation
        self.__record_count = record_count
        self.__update_count = update_count
        self.__run_count = run_count

    def rmse(self) -> Vector:
        return self.__rmse

    def containment(self) -> Vector:
        """Fraction of steps where each state's error is within its three-sigma bound"""
        return self.__containment

    def containment_fraction(self) -> float:
        """The worst containment over the states"""
        return float(np.min(self.__containment))

    def innovation(self) -> InnovationSummary:
        return self.__innovation

    def innovation_mean(self) -> Vector:
        return None if self.__innovation is None else self.__innovation.mean()

    def innovation_cov(self):
        return None if self.__innovation is None else self.__innovation.sample_cov()

    def mean_nis(self) -> float:
        return None if self.__innovation is None else self.__innovation.mean_nis()

    def record_count(self) -> int:
        return self.__record_count

    def update_count(self) -> int:
        return self.__update_count

    def run_count(self) -> int:
        return self.__run_count


class ScenarioTrace:

    STATE_LABELS:Dict[ScenarioKind, List[str]] = {
        ScenarioKind.PENDULUM: ["theta", "theta_dot"],
        ScenarioKind.TRACKING: ["px", "vx", "py", "vy"]}

    def __init__(self, kind:ScenarioKind, params:ScenarioParams, seed:int, records:List[TraceRecord],
            measurement_dim:int):
        self.__kind = kind
        self.__params = params
        self.__seed = seed
        self.__records = records
        self.__measurement_dim = measurement_dim
        self.__summary:ScenarioSummary = None

    def kind(self) -> ScenarioKind:
        return self.__kind

    def params(self) -> ScenarioParams:
        return self.__params

    def seed(self) -> int:
        return self.__seed

    def records(self) -> List[TraceRecord]:
        return self.__records

    def state_dim(self) -> int:
        return len(ScenarioTrace.STATE_LABELS[self.__kind])

    def measurement_dim(self) -> int:
        return self.__measurement_dim

    def state_labels(self) -> List[str]:
        return ScenarioTrace.STATE_LABELS[self.__kind]

    def innovations(self) -> List[InnovationRecord]:
        return [record.innovation() for record in self.__records if record.innovation() is not None]

    def summary(self) -> ScenarioSummary:
        if self.__summary is None:
            self.__summary = compute_metrics(self)
        return self.__summary


_LOG:Logger = LogHelper.logger("scenarios")


def build_pendulum_models(p:PendulumParams) -> Tuple[DiscreteLinearModel, MeasurementModel]:
    """The filter's models of the pendulum, the small angle linearization discretized
    with F = e^(A dt) and an angle measurement"""
    process = _pendulum_process(p, p.filter_sigma_r())
    measurement = MeasurementModel([[1.0, 0.0]], [[p.filter_sigma_o() ** 2]])
    return process, measurement


def build_tracking_models(p:TrackingParams) -> Tuple[DiscreteLinearModel, MeasurementModel]:
    """The filter's models of the target, a constant velocity block per axis observed
    through its position"""
    process = _tracking_process(p, p.filter_sigma_a())
    measurement = MeasurementModel([[1.0, 0.0, 0.0, 0.0], [0.0, 0.0, 1.0, 0.0]],
        np.eye(2) * p.filter_sigma_pos() ** 2)
    return process, measurement


def pendulum_derivative(x:np.ndarray, g_over_l:float, acceleration:float) -> np.ndarray:
    """The nonlinear pendulum, theta'' = -(g/l) sin(theta) + tau / (m l^2)"""
    return np.array([x[1], -g_over_l * math.sin(x[0]) + acceleration])


def rk4_step(derivative:Callable[[np.ndarray], np.ndarray], x:np.ndarray, dt:float) -> np.ndarray:
    k1 = derivative(x)
    k2 = derivative(x + 0.5 * dt * k1)
    k3 = derivative(x + 0.5 * dt * k2)
    k4 = derivative(x + dt * k3)
    return x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)


def pendulum_energy(p:PendulumParams, x:Sequence[float]) -> float:
    """Energy per unit mass, (1 - cos(theta)) g l + l^2 theta'^2 / 2"""
    return (1.0 - math.cos(x[0])) * p.g() * p.length() + 0.5 * p.length() ** 2 * x[1] ** 2


def simulate_pendulum_truth(p:PendulumParams, noise_seed:int) -> List[TruthSample]:
    """Simulate the pendulum from (theta0, theta_dot0).  A random torque drawn from
    N(0, sigma_r^2) is held constant over each step.  The nonlinear truth integrates the
    full equation with fixed step RK4, the linear truth steps the discretized model."""
    source = GaussianSource(noise_seed, PROCESS_STREAM)
    linear_model = _pendulum_process(p, p.sigma_r()) if p.truth_model() == TruthModel.LINEAR else None
    g_over_l = p.g() / p.length()

    x = np.array([p.theta0(), p.theta_dot0()])
    samples = [(0.0, matlib.vector(x))]
    for k in range(1, p.step_count() + 1):
        torque = source.normal(p.sigma_r())
        if linear_model is not None:
            x = statespace.step_discrete(linear_model, x, w=[torque * p.dt() / p.inertia()])
        else:
            acceleration = torque / p.inertia()
            x = rk4_step(lambda state: pendulum_derivative(state, g_over_l, acceleration), x, p.dt())
        samples.append((p.step_time(k), matlib.vector(x)))

    return samples


def simulate_pendulum_linear(p:PendulumParams) -> List[TruthSample]:
    """The noise free response of the small angle model, stepped exactly with F = e^(A dt)"""
    return simulate_pendulum_truth(p.replace(sigma_r=0.0, truth_model=TruthModel.LINEAR), 0)


def linearization_gap(p:PendulumParams) -> float:
    """Largest difference between the noise free nonlinear and small angle responses over
    the run, as a fraction of the initial amplitude"""
    nonlinear = simulate_pendulum_truth(p.replace(sigma_r=0.0, truth_model=TruthModel.NONLINEAR), 0)
    linear = simulate_pendulum_linear(p)
    gap = max(abs(lin[1][0] - nl[1][0]) for lin, nl in zip(linear, nonlinear))
    return gap / abs(p.theta0())


def simulate_tracking_truth(p:TrackingParams, noise_seed:int) -> List[TruthSample]:
    """Propagate the constant velocity model from x0 with an acceleration drawn from
    N(0, sigma_a^2) per axis and step"""
    source = GaussianSource(noise_seed, PROCESS_STREAM)
    model = _tracking_process(p, p.sigma_a())

    x = p.x0()
    samples = [(0.0, x)]
    for k in range(1, p.step_count() + 1):
        x = statespace.step_discrete(model, x, w=source.normals(2, p.sigma_a()))
        samples.append((p.step_time(k), x))

    return samples


def run_scenario(kind:Union[ScenarioKind, str], params:ScenarioParams, seed:int) -> ScenarioTrace:
    """Simulate the truth, measure it at rate_hz and run the filter.  The filter predicts
    every dt, updates at each measurement and starts from the first measurement.  A
    diverging filter is recorded in the trace, not raised."""
    kind = ScenarioKind(kind)
    if kind == ScenarioKind.PENDULUM:
        _require_params(params, PendulumParams, kind)
        process, measurement = build_pendulum_models(params)
        truth = simulate_pendulum_truth(params, seed)
        sensor_sigma = params.sigma_o()
    else:
        _require_params(params, TrackingParams, kind)
        process, measurement = build_tracking_models(params)
        truth = simulate_tracking_truth(params, seed)
        sensor_sigma = params.sigma_pos()

    _LOG.info("Running {0} scenario with seed {1}, {2} steps", kind.value, seed, params.step_count())

    source = GaussianSource(seed, MEASUREMENT_STREAM)
    dim = measurement.measurement_dim()
    per_measurement = params.steps_per_measurement()

    t, x_true = truth[0]
    z = statespace.measure(measurement, x_true, source.normals(dim, sensor_sigma))
    estimate = kalman.initialize_from_measurement(measurement, z, process.state_dim())
    records = [TraceRecord(t, x_true, estimate.mean(), np.diag(estimate.cov()).copy(), z)]

    for k in range(1, len(truth)):
        t, x_true = truth[k]
        estimate = kalman.kf_predict(estimate, process)
        if k % per_measurement == 0:
            z = statespace.measure(measurement, x_true, source.normals(dim, sensor_sigma))
            estimate, innovation = kalman.kf_update(estimate, measurement, z)
            records.append(TraceRecord(t, x_true, estimate.mean(), np.diag(estimate.cov()).copy(), z, innovation))
        else:
            estimate = kalman.kf_coast(estimate)
            records.append(TraceRecord(t, x_true, estimate.mean(), np.diag(estimate.cov()).copy()))

    trace = ScenarioTrace(kind, params, seed, records, dim)
    summary = trace.summary()
    _LOG.info("Finished {0} scenario with seed {1}, rmse {2}, containment {3}, mean nis {4}",
        kind.value, seed, summary.rmse().tolist(), summary.containment().tolist(), summary.mean_nis())

    alpha = FusekitProperties.get_property("NisSignificance", 0.05)
    if summary.innovation() is not None and not summary.innovation().is_consistent(alpha):
        _LOG.warning("Seed {0}: mean NIS {1:.4f} is outside its {2} chi-square interval {3}",
            seed, summary.mean_nis(), alpha, summary.innovation().nis_interval(alpha))

    return trace


def compute_metrics(trace:ScenarioTrace) -> ScenarioSummary:
    """Per state RMSE against the truth, the fraction of steps with |x_hat - x| within
    3 sqrt(P_ii), boundary included, and the innovation statistics"""
    return pool_metrics([trace])


def pool_metrics(traces:Sequence[ScenarioTrace]) -> ScenarioSummary:
    """compute_metrics over the records of several runs taken together"""
    records = [record for trace in traces for record in trace.records()]
    if len(records) == 0:
        raise DomainError("Cannot compute metrics of an empty trace")

    errors = np.array([record.error() for record in records])
    bounds = np.array([record.three_sigma() for record in records])
    rmse = matlib.vector(np.sqrt(np.mean(errors ** 2, axis=0)))
    containment = matlib.vector(np.mean(np.abs(errors) - bounds <= BOUNDARY_TOLERANCE, axis=0))

    innovations = [record.innovation() for record in records if record.innovation() is not None]
    innovation = kalman.innovation_stats(innovations) if len(innovations) >= 2 else None
    return ScenarioSummary(rmse, containment, innovation, len(records), len(innovations), len(traces))


def windowed_mean_nis(trace:ScenarioTrace, window_s:float) -> List[float]:
    """Mean NIS of the updates in consecutive windows (0, w], (w, 2w], ...  Windows
    without updates are left out."""
    ScenarioParams._require_positive("window_s", window_s)

    windows:Dict[int, List[float]] = dict()
    for record in trace.records():
        if record.innovation() is not None:
            index = max(int(math.ceil(record.t() / window_s - RATE_TOLERANCE)) - 1, 0)
            windows.setdefault(index, []).append(record.nis())

    return [float(np.mean(windows[index])) for index in sorted(windows)]


def _pendulum_process(p:PendulumParams, sigma_r:float) -> DiscreteLinearModel:
    # torque enters theta'' as tau / (m l^2), held over one step
    continuous = ContinuousLinearModel([[0.0, 1.0], [-p.g() / p.length(), 0.0]], [[0.0], [1.0 / p.inertia()]])
    f, g = statespace.discretize(continuous, p.dt())
    noise_std = p.dt() * sigma_r / p.inertia()
    return DiscreteLinearModel(f, p.dt(), g=g, l=[[0.0], [1.0]], q=[[noise_std ** 2]])


def _tracking_process(p:TrackingParams, sigma_a:float) -> DiscreteLinearModel:
    dt = p.dt()
    axis = np.array([[0.0, 1.0], [0.0, 0.0]])
    continuous = ContinuousLinearModel(np.kron(np.eye(2), axis), np.zeros((4, 1)))
    f, g = statespace.discretize(continuous, dt)
    noise_input = np.kron(np.eye(2), np.array([[dt ** 2 / 2.0], [dt]]))
    return DiscreteLinearModel(f, dt, g=g, l=noise_input, q=np.eye(2) * sigma_a ** 2)


def _require_params(params:ScenarioParams, expected:type, kind:ScenarioKind):
    if not isinstance(params, expected):
        raise DomainError("A {0} scenario needs {1}, got {2}".format(
            kind.value, expected.__name__, type(params).__name__))
