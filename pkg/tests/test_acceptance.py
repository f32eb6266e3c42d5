"""Acceptance gate: one test per criterion, each printing a PASS/FAIL line.

Run on its own with ``pytest tests/test_acceptance.py -v`` (a summary of
verdicts is printed at the end) or ``python3 tests/test_acceptance.py``.
"""

import sys
from dataclasses import replace

import numpy as np
import pytest
import scipy.linalg

from conftest import record
from nladpcm import bitstream, decode, encode, encode_stats
from nladpcm.codec import CodecConfig, MlpConfig
from nladpcm.corpus import GENERATORS, make_corpus
from nladpcm.experiments import STANDARD_METHODS, Method, SweepSpec, evaluate_file, read_csv, run_sweep
from nladpcm.lpc import levinson_durbin
from nladpcm.mlp import MlpWeights, TrainConfig, TrainingSet, lm_train, mlp_forward, mlp_jacobian, multistart_train
from nladpcm.quantizer import QuantizerConfig, dequantize, step

N_FILES = 10
N_SAMPLES = 4000
BITS = (2, 3, 4, 5)


def corpus_mean(signals, cfg):
    return float(np.mean([evaluate_file(x, cfg)[0].segsnr_db for x in signals]))


@pytest.fixture(scope="module")
def mixed():
    return make_corpus("mixed", N_FILES, N_SAMPLES, seed=0)


@pytest.fixture(scope="module")
def grid(mixed):
    """Corpus-mean SEGSNR for every standard method and bit count."""
    rows = run_sweep(SweepSpec(["mixed"], list(STANDARD_METHODS), list(BITS)), signals=mixed)
    return {(r.method, r.nq): r.segsnr_db for r in rows}


# -- 1: encoder/decoder synchrony ------------------------------------------------


def random_signal(rng, n):
    kind = rng.choice(["ar", "sines", "voiced", "nlar", "tanhar", "noise", "bursts", "square"])
    if kind in GENERATORS:
        return GENERATORS[kind](rng, n)
    if kind == "noise":
        return rng.uniform(-1, 1) * rng.normal(size=n).clip(-3, 3) / 3
    if kind == "bursts":
        x = np.zeros(n)
        start = int(rng.integers(n // 2))
        x[start:start + n // 4] = 0.9 * rng.normal(size=len(x[start:start + n // 4])).clip(-1, 1)
        return x
    # Full-scale square wave drives the predictor and reconstruction clips.
    return np.where(np.sin(np.arange(n) * rng.uniform(0.01, 0.3)) >= 0, 1.0, -1.0)


def random_case(rng, n=N_SAMPLES):
    predictor = str(rng.choice(["lpc", "mlp", "hybrid"]))
    adaptation = "backward" if predictor == "hybrid" else str(rng.choice(["forward", "backward"]))
    frame_len = int(rng.choice([40, 64, 100, 160]))
    order = int(rng.integers(1, 26))
    tw = max(int(rng.choice([frame_len, 2 * frame_len, frame_len // 2])), order + 1, 11)
    if predictor == "hybrid":
        cw = frame_len
    elif predictor == "lpc":
        cw = int(rng.choice([frame_len, frame_len // 2, 7, 1]))
    else:
        cw = int(rng.choice([frame_len, frame_len // 2, 50]))
    use_prev = bool(rng.integers(2))
    mlp = MlpConfig(
        n_random=int(rng.integers(0 if use_prev else 1, 4)),
        use_prev=use_prev,
        epochs_random=int(rng.integers(0, 7)),
        epochs_prev=int(rng.integers(0, 4)),
        activation=str(rng.choice(["tanh", "sigmoid"])),
        selection=str(rng.choice(["open", "closed", "auto"])),
        init_scale=float(rng.choice([0.0, 0.2, 0.5])),
    )
    cfg = CodecConfig(
        predictor=predictor,
        lpc_order=order,
        adaptation=adaptation,
        frame_len=frame_len,
        training_window=tw,
        computing_window=cw,
        quantizer=QuantizerConfig(int(rng.integers(2, 6))),
        mlp=mlp,
        hybrid_metric=str(rng.choice(["closed", "open"])),
        lpc_taper=str(rng.choice(["rect", "hamming"])),
        rng_seed=int(rng.integers(2 ** 32)),
        max_refits=None if rng.random() < 0.8 else int(rng.integers(0, 20)),
    )
    return cfg, random_signal(rng, n)


def test_criterion_01_synchrony():
    rng = np.random.default_rng(2024)
    mismatches = []
    modes = set()
    for k in range(200):
        cfg, x = random_case(rng)
        stream, recon = encode(x, cfg)
        out = decode(bitstream.from_bytes(bitstream.to_bytes(stream)))
        modes.add((cfg.predictor, cfg.adaptation, cfg.bits))
        if not np.array_equal(out.samples, recon.samples):
            mismatches.append(k)
    ok = not mismatches
    record(1, ok, f"200 configs x {N_SAMPLES} samples, {len(modes)} predictor/adaptation/bits modes, "
                  f"{len(mismatches)} mismatches")
    assert ok, mismatches


# -- 2: Levinson-Durbin against a dense solve ------------------------------------


def test_criterion_02_levinson_oracle():
    rng = np.random.default_rng(7)
    worst_err, worst_k = 0.0, 0.0
    for _ in range(1000):
        order = int(rng.integers(1, 26))
        if rng.random() < 0.5:
            w = rng.normal(size=int(rng.integers(order + 1, 8 * order + 20)))
        else:
            w = GENERATORS[str(rng.choice(["ar", "sines", "voiced"]))](rng, 400)
            w = w + 1e-3 * rng.normal(size=len(w))
        r = np.array([w[: len(w) - k] @ w[k:] for k in range(order + 1)])
        coeffs = levinson_durbin(r, order)
        dense = np.linalg.solve(scipy.linalg.toeplitz(r[:order]), r[1:])
        worst_err = max(worst_err, np.linalg.norm(coeffs.a - dense) / np.linalg.norm(dense))
        worst_k = max(worst_k, float(np.max(np.abs(coeffs.reflection))))
    ok = worst_err <= 1e-9 and worst_k < 1.0
    record(2, ok, f"1000 systems, orders 1-25: max relative error {worst_err:.2e}, max |k| {worst_k:.6f}")
    assert ok


# -- 3: Jacobian and LM monotonicity ---------------------------------------------


def test_criterion_03_gradient_check():
    rng = np.random.default_rng(11)
    worst = 0.0
    rises = 0
    for draw in range(100):
        activation = "tanh" if draw % 2 == 0 else "sigmoid"
        w = MlpWeights.random(rng, 1.0, activation=activation)
        x = rng.uniform(-1, 1, size=(8, 10))
        jac = mlp_jacobian(w, x)
        theta = w.to_vector()
        fd = np.empty_like(jac)
        h = 1e-6
        for j in range(len(theta)):
            up, dn = theta.copy(), theta.copy()
            up[j] += h
            dn[j] -= h
            fd[:, j] = (mlp_forward(w.like(up), x) - mlp_forward(w.like(dn), x)) / (2 * h)
        worst = max(worst, float(np.max(np.abs(jac - fd)) / np.max(np.abs(fd))))

        data = TrainingSet.from_window(rng.normal(size=60) * 0.3)
        start = MlpWeights.random(rng, 0.2, activation=activation)
        before = float(np.sum((mlp_forward(start, data.inputs) - data.targets) ** 2))
        _, after = lm_train(start, data, TrainConfig(epochs=int(rng.integers(1, 8))))
        rises += after > before
    ok = worst < 1e-4 and rises == 0
    record(3, ok, f"100 draws: max Jacobian relative error {worst:.2e}; LM runs ending above start {rises}")
    assert ok


# -- 4: multistart contract ------------------------------------------------------


def test_criterion_04_multistart():
    rng = np.random.default_rng(5)
    generator = MlpWeights.random(rng, 0.8)
    inputs = rng.uniform(-1, 1, size=(200, 10))
    data = TrainingSet(inputs, mlp_forward(generator, inputs))
    a = multistart_train(generator, data, n_random=3, epochs_random=6, epochs_prev=3, rng_seed=99)
    b = multistart_train(generator, data, n_random=3, epochs_random=6, epochs_prev=3, rng_seed=99)
    resid = float(np.sum((mlp_forward(a.weights, inputs) - data.targets) ** 2))
    same = a.weights.to_vector().tobytes() == b.weights.to_vector().tobytes() and a.selected_prev == b.selected_prev
    ok = a.selected_prev and resid <= 1e-12 and same
    record(4, ok, f"selected_prev={a.selected_prev}, SSE {resid:.1e}, repeat bit-identical={same}")
    assert ok


# -- 5: quantizer invariants -----------------------------------------------------


def test_criterion_05_quantizer():
    rng = np.random.default_rng(3)
    steps = 0
    out_of_range = desync = too_far = 0
    for bits in BITS:
        cfg = QuantizerConfig(bits)
        n = 250_000
        # Log-uniform magnitudes sweep the step through both clamps.
        e = (rng.choice([-1.0, 1.0], size=n) * 10.0 ** rng.uniform(-7, 0.5, size=n)).tolist()
        enc = cfg.delta_init
        dec = cfg.initial_state()
        lo, hi = cfg.delta_min, cfg.delta_max
        for v in e:
            code, e_hat, nxt = step(v, enc, cfg)
            d_hat, dec = dequantize(code, dec, cfg)
            if d_hat != e_hat:
                desync += 1
            if -cfg.half * enc <= v < cfg.half * enc and abs(v - e_hat) > enc / 2:
                too_far += 1
            enc = nxt
            if dec.delta != enc:
                desync += 1
            if not lo <= enc <= hi:
                out_of_range += 1
        steps += n
    ok = steps >= 1_000_000 and not (out_of_range or desync or too_far)
    record(5, ok, f"{steps} steps: step out of range {out_of_range}, decoder desync {desync}, "
                  f"granular error above half step {too_far}")
    assert ok


# -- 6: forward beats backward ---------------------------------------------------


def test_criterion_06_forward_beats_backward(grid):
    lines, ok = [], True
    for fwd, bwd in (("ADPCMF-LPC10", "ADPCMB-LPC10"), ("ADPCMF-MLP", "ADPCMB-MLP")):
        for nq in (3, 4, 5):
            f, b = grid[fwd, nq], grid[bwd, nq]
            ok &= f > b
            lines.append(f"{fwd[7:]} Nq={nq} {f:.2f}>{b:.2f}")
    record(6, ok, "; ".join(lines))
    assert ok


# -- 7: nonlinear gain on a saturated AR corpus -----------------------------------


def test_criterion_07_nonlinear_gain():
    sat = make_corpus("tanhar", N_FILES, N_SAMPLES, seed=0)
    lpc = corpus_mean(sat, CodecConfig(predictor="lpc", adaptation="forward"))
    mlp = corpus_mean(sat, CodecConfig(predictor="mlp", adaptation="forward"))
    fb = make_corpus("nlar", N_FILES, N_SAMPLES, seed=0)
    fb_gain = (corpus_mean(fb, CodecConfig(predictor="mlp", adaptation="forward"))
               - corpus_mean(fb, CodecConfig(predictor="lpc", adaptation="forward")))
    ok = mlp - lpc >= 0.5
    record(7, ok, f"tanh(AR(2)) Nq=4: forward MLP {mlp:.2f} vs LPC10 {lpc:.2f} (gain {mlp - lpc:.2f} dB); "
                  f"nonlinear-feedback AR gain {fb_gain:.2f} dB (reported)")
    assert ok


# -- 8: hybrid takes the better branch -------------------------------------------


def test_criterion_08_hybrid_dominance(mixed, grid):
    frames = bad = 0
    for x in mixed[:3]:
        for nq in BITS:
            rep = encode_stats(x, CodecConfig(predictor="hybrid").with_bits(nq))
            recon = rep.reconstruction.samples
            for f in rep.frames:
                sl = slice(f.start, f.start + f.length)
                committed = float(np.sum((x[sl] - recon[sl]) ** 2))
                best = min(f.lpc_branch_error, f.mlp_branch_error)
                frames += 1
                bad += not np.isclose(committed, best, rtol=1e-9, atol=1e-15)
    trend = {nq: (grid["ADPCMB-HYBRID", nq], grid["ADPCMB-LPC10", nq]) for nq in BITS}
    ok = bad == 0 and all(h >= l for h, l in trend.values())
    record(8, ok, f"{frames} instrumented frames, {bad} not at the branch minimum; hybrid vs LPC10 "
                  + " ".join(f"Nq={nq} {h:.2f}>={l:.2f}" for nq, (h, l) in trend.items()))
    assert ok


# -- 9: more bits, higher SEGSNR -------------------------------------------------


def test_criterion_09_monotone_in_bits(grid):
    failures = []
    for m in STANDARD_METHODS:
        vals = [grid[m.label, nq] for nq in BITS]
        if not all(b > a for a, b in zip(vals, vals[1:])):
            failures.append(f"{m.label} {np.round(vals, 2).tolist()}")
    ok = not failures
    record(9, ok, f"{len(STANDARD_METHODS)} methods x Nq 2..5" + ("" if ok else ": " + "; ".join(failures)))
    assert ok


# -- 10: computing-window sweep --------------------------------------------------


def test_criterion_10_window_sweep(tmp_path):
    signals = make_corpus("mixed", 2, 800, seed=1)
    out = tmp_path / "windows.csv"
    spec = SweepSpec(["mixed"], [Method("lpc", "backward"), Method("mlp", "backward")], [4],
                     training_windows=[100], computing_windows=[1, 10, 50, 100], output_path=str(out))
    run_sweep(spec, signals=signals)
    rows = read_csv(out)
    by = {(r["method"], int(r["computing_window"])): float(r["segsnr_db"]) for r in rows}
    ok = len(rows) == 8 and all(r["training_window"] == "100" for r in rows)
    detail = "; ".join(f"{m[7:]} " + " ".join(f"cw={cw}:{by[m, cw]:.2f}" for cw in (1, 10, 50, 100))
                       for m in ("ADPCMB-LPC10", "ADPCMB-MLP"))
    record(10, ok, f"CSV with {len(rows)} rows; {detail}")
    assert ok


# -- 11: previous-weights start at equal epoch budget ----------------------------


def test_criterion_11_previous_weights(mixed):
    # 24 epochs per refit either way: 3 x 7 random + 3 warm, against 4 x 6 random.
    warm = MlpConfig(n_random=3, use_prev=True, epochs_random=7, epochs_prev=3)
    cold = MlpConfig(n_random=4, use_prev=False, epochs_random=6)
    diffs = {}
    for adaptation in ("backward", "forward"):
        for nq in BITS:
            base = CodecConfig(predictor="mlp", adaptation=adaptation).with_bits(nq)
            w = corpus_mean(mixed, replace(base, mlp=warm))
            c = corpus_mean(mixed, replace(base, mlp=cold))
            diffs[adaptation, nq] = w - c
    ok = all(diffs["backward", nq] >= -0.2 for nq in BITS)
    fmt = lambda a: " ".join(f"Nq={nq}:{diffs[a, nq]:+.2f}" for nq in BITS)  # noqa: E731
    record(11, ok, f"warm minus cold, backward (gated) {fmt('backward')}; forward (reported) {fmt('forward')}")
    assert ok


if __name__ == "__main__":
    sys.exit(pytest.main([__file__, "-q"]))
