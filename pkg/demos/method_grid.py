"""SEGSNR of the seven standard coder configurations against quantizer bits.

Runs on a small synthetic corpus so it finishes in about a minute; raise
N_FILES and N_SAMPLES for steadier numbers.
"""

import numpy as np

from nladpcm.corpus import make_corpus
from nladpcm.experiments import STANDARD_METHODS, SweepSpec, csv_text, run_sweep, table

N_FILES = 6
N_SAMPLES = 4000

signals = make_corpus("mixed", N_FILES, N_SAMPLES, seed=0)
spec = SweepSpec(["mixed"], list(STANDARD_METHODS), [2, 3, 4, 5])
rows = run_sweep(spec, signals=signals)

print(table(rows, spec.methods))
print()

# The same rows as CSV, as written by ``nladpcm sweep``.
print(csv_text(rows[:4]))

fwd = {r.nq: r.segsnr_db for r in rows if r.method == "ADPCMF-MLP"}
bwd = {r.nq: r.segsnr_db for r in rows if r.method == "ADPCMB-MLP"}
print("forward minus backward MLP:", {nq: round(fwd[nq] - bwd[nq], 2) for nq in sorted(fwd)})
print("mean selected_prev fraction (backward MLP):",
      np.round(np.mean([r.selected_prev_fraction for r in rows if r.method == "ADPCMB-MLP"]), 3))
