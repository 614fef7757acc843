#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.
import math

from fusekit import kalman, scenarios, statespace
from fusekit.kalman import FilterEstimate, EstimateKind
from fusekit.scenarios import PendulumParams, GaussianSource, ScenarioKind, ScenarioTrace
from fusekit.plotting import TraceFigure
from samples import project_path


def pendulum_filter_sample():
    # Parameters for the pendulum, everything has a default so we only
    # set the release angle here.  Angles are in radians.  Parameter objects
    # are immutable, use replace to get a modified copy
    params = PendulumParams(theta0=math.radians(20.0))
    print("small angle period {0:.4f} s".format(params.small_angle_period()))

    # The filter's models, a discretized linear pendulum with torque noise
    # entering the rate and an angle sensor.  These are the same models
    # run_scenario uses
    process, measurement = scenarios.build_pendulum_models(params)
    print("F =\n{0}".format(process.f()))

    # The truth comes from integrating the full nonlinear pendulum, here with
    # the random torque turned off so we can see the shape of the motion
    truth = scenarios.simulate_pendulum_truth(params.replace(sigma_r=0.0), 0)

    # Run the filter by hand.  Measurements come every steps_per_measurement
    # time steps, in between the filter coasts on its prediction
    noise = GaussianSource(1, scenarios.MEASUREMENT_STREAM)
    t, x = truth[0]
    estimate:FilterEstimate = kalman.initialize_from_measurement(measurement,
        statespace.measure(measurement, x, noise.normals(1, params.sigma_o())), 2)

    for k in range(1, params.step_count() + 1):
        estimate = kalman.kf_predict(estimate, process)
        if k % params.steps_per_measurement() == 0:
            t, x = truth[k]
            z = statespace.measure(measurement, x, noise.normals(1, params.sigma_o()))
            estimate, innovation = kalman.kf_update(estimate, measurement, z)
        else:
            estimate = kalman.kf_coast(estimate)

    # Each step is tagged as a prior or a posterior, the filter functions
    # check they're called in the right order
    assert estimate.kind() == EstimateKind.POSTERIOR
    t, x = truth[-1]
    print("at t {0:.2f} truth {1}, estimate {2}".format(t, x, estimate.mean()))
    print("cost trace(P) {0:.3e}".format(kalman.estimation_cost(estimate)))

    # Or let run_scenario do all of the above, including the noisy truth,
    # and compute the metrics for us
    trace:ScenarioTrace = scenarios.run_scenario(ScenarioKind.PENDULUM, params, 1)
    summary = trace.summary()
    print("rmse {0}, containment {1}, mean NIS {2:.3f}".format(
        summary.rmse(), summary.containment(), summary.mean_nis()))

    # How far the linear model is from the nonlinear truth for this release angle
    print("linearization gap {0:.3f}".format(scenarios.linearization_gap(params)))

    # Save a plot of the run in the project directory
    TraceFigure(trace).save(project_path / "pendulum_sample.png")


if __name__ == '__main__':
    pendulum_filter_sample()
