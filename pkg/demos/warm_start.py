"""Previous-frame weights as one multistart candidate.

Compares three random starts plus the previous weights against four
random starts at the same number of training epochs per refit, and shows
how often the previous weights win.
"""

from dataclasses import replace

import numpy as np

from nladpcm import CodecConfig, MlpConfig, encode_stats, segsnr
from nladpcm.corpus import make_corpus
from nladpcm.signal_io import pcm16

signals = make_corpus("mixed", 4, 3000, seed=5)
warm = MlpConfig(n_random=3, use_prev=True, epochs_random=7, epochs_prev=3)
cold = MlpConfig(n_random=4, use_prev=False, epochs_random=6)

for nq in (2, 3, 4, 5):
    base = CodecConfig(predictor="mlp", adaptation="backward").with_bits(nq)
    scores, picked = {}, []
    for name, mc in (("warm", warm), ("cold", cold)):
        vals = []
        for x in signals:
            rep = encode_stats(x, replace(base, mlp=mc))
            vals.append(segsnr(x, pcm16(rep.reconstruction.samples), 100).segsnr_db)
            if name == "warm":
                picked.append(rep.selected_prev_fraction)
        scores[name] = np.mean(vals)
    print(f"Nq={nq}: warm {scores['warm']:6.2f} dB  cold {scores['cold']:6.2f} dB  "
          f"previous weights chosen in {100 * np.mean(picked):4.1f}% of refits")
