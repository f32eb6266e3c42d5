"""Refit interval study: a 100-sample training window reused for 1 to 100 samples.

With ``computing_window=1`` the coefficients are refit at every sample.
"""

from nladpcm.corpus import make_corpus
from nladpcm.experiments import Method, SweepSpec, run_sweep, table

signals = make_corpus("mixed", 3, 1500, seed=2)
windows = [1, 10, 50, 100]
spec = SweepSpec(["mixed"], [Method("lpc", "backward"), Method("mlp", "backward")], [3, 4],
                 training_windows=[100], computing_windows=windows)
rows = run_sweep(spec, signals=signals)

for cw in windows:
    print(f"computing_window={cw}")
    print(table([r for r in rows if r.computing_window == cw], spec.methods))
    speed = {r.method: round(r.samples_per_second) for r in rows if r.computing_window == cw and r.nq == 4}
    print("samples/s at Nq=4:", speed)
    print()
