#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.
import numpy as np

from fusekit import lsq
from fusekit.lsq import RlsState


def least_squares_sample():
    # Ten range readings r_i of a sensor whose output is roughly y = 2 r + 1
    # with some noise added.  We'll fit the slope and offset three ways.
    rng = np.random.default_rng(12)
    r = np.linspace(0.0, 9.0, 10)
    y = 2.0 * r + 1.0 + rng.normal(0.0, 0.5, size=r.size)

    # line_design_matrix builds the k x 2 matrix with rows [r_i, 1] so
    # the unknowns are [slope, offset]
    h = lsq.line_design_matrix(r)

    # Batch least squares solves the normal equations in one go.  It needs at
    # least as many readings as unknowns and H must have full column rank,
    # otherwise you'll get an UnderdeterminedError or a SingularMatrixError
    x_hat = lsq.batch_ls(h, y)
    print("batch fit slope {0:.4f}, offset {1:.4f}".format(x_hat[0], x_hat[1]))

    # The residual is orthogonal to every column of H, check that here
    residual = lsq.residual(h, y, x_hat)
    print("H^T residual {0}".format(h.T @ residual))

    # Suppose the last three readings came from a worse sensor with 4 times
    # the noise standard deviation.  Weighted least squares takes the noise
    # covariance R and also returns the covariance of the estimate
    variances = np.full(r.size, 0.25)
    variances[-3:] = 4.0
    x_weighted, cov = lsq.weighted_ls(h, y, np.diag(variances))
    print("weighted fit slope {0:.4f} +/- {1:.4f}".format(x_weighted[0], np.sqrt(cov[0, 0])))

    # Recursive least squares folds in the readings one at a time.  Start
    # from a vague prior, a large P, and the answer approaches the weighted fit
    state:RlsState = lsq.rls_init(np.zeros(2), 1e8 * np.eye(2))
    for row, reading, variance in zip(h, y, variances):
        state = lsq.rls_update(state, row.reshape(1, 2), [reading], [[variance]])

        # Uncomment to watch the estimate settle
        # print("k {0}, x_hat {1}, trace P {2}".format(state.k(), state.x_hat(), np.trace(state.p())))

    print("recursive fit slope {0:.4f}, offset {1:.4f} after {2} readings".format(
        state.x_hat()[0], state.x_hat()[1], state.k()))
    print("difference from weighted fit {0}".format(state.x_hat() - x_weighted))


if __name__ == '__main__':
    least_squares_sample()
