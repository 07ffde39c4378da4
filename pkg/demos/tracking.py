"""Kalman tracking of mobile users, with and without regular position reports.

Gauss-Markov users move for 300 slots of 0.2 s. The filter sees noisy position
reports either every slot or only every fourth slot, and predicts in between.
"""

import numpy as np

from posnoma.mobility import TABLE_I, StateSpaceModel, generate_trajectories, observe_state
from posnoma.tracking import DEFAULT_SIGMA_W2, FeedbackSchedule, position_rmse, track_trajectory

rng = np.random.default_rng(3)
truth = generate_trajectories(TABLE_I["gm"], 300, 100, rng)
pos = truth[..., [0, 2]]
for sigma_ob2 in (25.0, 50.0):
    model = StateSpaceModel(T=0.2, sigma_w2=DEFAULT_SIGMA_W2["gm"], sigma_ob2=sigma_ob2)
    z = observe_state(truth, model, rng)
    full = track_trajectory(z, model, FeedbackSchedule.full(300))
    sparse = track_trajectory(z, model, FeedbackSchedule.periodic(300, 0.25))
    print(f"sigma_ob2 = {sigma_ob2:g}: raw RMSE {position_rmse(z, pos, 25):.2f} m, "
          f"filtered {position_rmse(full.positions, pos, 25):.2f} m, "
          f"25% reports {position_rmse(sparse.positions, pos, 25):.2f} m")
