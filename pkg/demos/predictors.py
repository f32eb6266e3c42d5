"""Fit the linear and the neural predictor to one window of a saturated AR signal.

Shows the pieces the codec calls at every refit: the autocorrelation
method for LPC and multistart Levenberg-Marquardt for the 10x2x1 network.
"""

import numpy as np

from nladpcm.corpus import tanhar_signal
from nladpcm.lpc import fit_lpc
from nladpcm.mlp import TrainingSet, format_weights, mlp_forward, multistart_train

rng = np.random.default_rng(4)
x = tanhar_signal(rng, 1200, gain=2.5)
train, test = x[:200], x[200:400]


def gain_db(target, pred):
    return 10 * np.log10(np.sum(target ** 2) / np.sum((target - pred) ** 2))


coeffs = fit_lpc(train, 10)
print("reflection coefficients:", np.round(coeffs.reflection, 3))

test_set = TrainingSet.from_window(test)
lin = test_set.inputs[:, ::-1] @ coeffs.a  # inputs are oldest first
print(f"LPC-10 prediction gain on held-out window: {gain_db(test_set.targets, lin):.2f} dB")

res = multistart_train(None, TrainingSet.from_window(train), n_random=4, epochs_random=6, rng_seed=1)
nl = mlp_forward(res.weights, test_set.inputs)
print(f"MLP prediction gain on held-out window:    {gain_db(test_set.targets, nl):.2f} dB")

# Continue on the next window, warm-starting from the weights just found.
nxt = TrainingSet.from_window(x[400:600])
warm = multistart_train(res.weights, nxt, n_random=3, epochs_random=6, epochs_prev=3, rng_seed=2)
print("next window picked the previous weights:", warm.selected_prev)
snapshot = format_weights(warm.weights)
print(f"weight snapshot: {len(snapshot.split())} values, first lines:")
print("\n".join(snapshot.splitlines()[:3]))
