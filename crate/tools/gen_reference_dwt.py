"""Generate crates/core/tests/data/mixture_lowpass.txt.

Input: 300 samples at 1 kHz of a Gaussian bump (sigma = 1 / (2 pi 2 Hz),
centred at 150 ms) plus a 40 Hz sinusoid of amplitude 0.5. Output: the
approximation-only reconstruction computed by PyWavelets with the vendored
dmey taps, symmetric extension, at the deepest level PyWavelets allows for
this length and filter.
"""
import sys
import numpy as np
import pywt


def load_dmey(path):
    bank = {}
    block = None
    for line in open(path):
        parts = line.split()
        if not parts or parts[0].startswith("#"):
            continue
        if parts[0] == "name":
            block = parts[1]
        elif block == "dmey" and parts[0] in ("lo_d", "hi_d", "lo_r", "hi_r"):
            bank[parts[0]] = [float(v) for v in parts[1:]]
    return pywt.Wavelet("dmey_vendored", filter_bank=[bank["lo_d"], bank["hi_d"], bank["lo_r"], bank["hi_r"]])


def main(taps, out):
    w = load_dmey(taps)
    t = np.arange(300) / 1000.0
    sigma = 1.0 / (2.0 * np.pi * 2.0)
    x = np.exp(-((t - 0.15) ** 2) / (2.0 * sigma**2)) + 0.5 * np.sin(2.0 * np.pi * 40.0 * t)
    level = min(6, pywt.dwt_max_level(len(x), w.dec_len))
    coeffs = pywt.wavedec(x, w, mode="symmetric", level=level)
    coeffs = [coeffs[0]] + [np.zeros_like(d) for d in coeffs[1:]]
    y = pywt.waverec(coeffs, w, mode="symmetric")[: len(x)]
    with open(out, "w") as f:
        f.write(f"# PyWavelets {pywt.__version__}, vendored dmey, symmetric, level {level}\n")
        f.write("# input output\n")
        for a, b in zip(x, y):
            f.write(f"{float(a)!r} {float(b)!r}\n")


if __name__ == "__main__":
    main(sys.argv[1], sys.argv[2])
