#!/usr/bin/env python3
"""How decomposition error grows towards the window edges.

The truth is a pair of known tones.  Every replication decomposes their sum
with fresh noise pairs and compares each recovered mode with its tone.  Errors
are then binned by the distance ``|lambda|`` from the window centre.
"""
import numpy as np

from hhtlab import EnsembleConfig
from hhtlab.ceemd import characterize_end_effect


def main():
    t = np.arange(1, 1001)
    truth = [np.sin(2 * np.pi * 0.2 * t), 0.8 * np.sin(2 * np.pi * 0.02 * t)]
    report = characterize_end_effect(truth, EnsembleConfig(seed=5, trials=10),
                                     replications=20)
    edges = report.lambda_bins
    print("|lambda| bin      mode 1 RMSE   mode 2 RMSE")
    for b in range(edges.size - 1):
        print(f"[{edges[b]:.1f}, {edges[b + 1]:.1f})     "
              f"{report.rmse[0, b]:.5f}      {report.rmse[1, b]:.5f}")
    # With two components whose errors sum to zero at every t, the two
    # columns are necessarily the same.
    ratio = report.rmse[0, -1] / report.rmse[0, 0]
    print(f"\nThe outermost decile is {ratio:.1f}x worse than the centre for mode 1.")


if __name__ == "__main__":
    main()
