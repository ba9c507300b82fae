"""Generate crates/core/data/wavelets.txt.

dmey: the 62-tap discrete Meyer FIR approximation shipped with PyWavelets is
not exactly orthonormal (sum h^2 = 1.0022). It is projected onto the set of
orthonormal 2-channel filters (sum_n h[n]h[n+2k] = delta_k, even and odd tap
sums both 1/sqrt 2, so the high-pass has an exact zero at DC) by
minimum-norm Gauss-Newton steps starting from the published taps.
sym4: published 8-tap symlet, used as is.
"""
import sys
import numpy as np
import pywt


def constraints(h, split):
    n = len(h)
    c = []
    for k in range(n // 2):
        c.append(np.dot(h[: n - 2 * k], h[2 * k:]) - (1.0 if k == 0 else 0.0))
    if split:
        c.append(h[0::2].sum() - np.sqrt(0.5))
        c.append(h[1::2].sum() - np.sqrt(0.5))
    else:
        c.append(h.sum() - np.sqrt(2.0))
    return np.array(c)


def jacobian(h, split):
    n = len(h)
    rows = []
    for k in range(n // 2):
        g = np.zeros(n)
        g[: n - 2 * k] += h[2 * k:]
        g[2 * k:] += h[: n - 2 * k]
        rows.append(g)
    if split:
        even = np.zeros(n)
        even[0::2] = 1.0
        rows.append(even)
        rows.append(1.0 - even)
    else:
        rows.append(np.ones(n))
    return np.array(rows)


def newton(h, split):
    for _ in range(50):
        c = constraints(h, split)
        if np.max(np.abs(c)) < 1e-16:
            break
        step, *_ = np.linalg.lstsq(jacobian(h, split), c, rcond=1e-9)
        h = h - step
    return h


def project(h0):
    # Orthonormality alone fixes the high-pass DC gain only to sqrt(eps), so
    # a second pass pins the even and odd sums once the taps are close.
    h = newton(np.array(h0, dtype=np.float64), split=False)
    return newton(h, split=True)


def bank(rec_lo):
    dec_lo, dec_hi, rl, rec_hi = pywt.orthogonal_filter_bank(rec_lo)
    return [np.asarray(v, dtype=np.float64) for v in (dec_lo, dec_hi, rl, rec_hi)]


def emit(out, name, note, fb):
    out.write(f"# {note}\n")
    out.write(f"name {name}\n")
    out.write(f"taps {len(fb[0])}\n")
    for label, arr in zip(("lo_d", "hi_d", "lo_r", "hi_r"), fb):
        out.write(label + " " + " ".join(repr(float(v)) for v in arr) + "\n")
    out.write("\n")


def main(path):
    std = pywt.Wavelet("dmey")
    rec = project(std.rec_lo)
    dev = np.max(np.abs(rec - np.array(std.rec_lo)))
    with open(path, "w") as out:
        out.write("# Wavelet filter banks, format version 1.\n")
        out.write("# Each block: name, tap count, then lo_d hi_d lo_r hi_r as decimal text.\n\n")
        emit(out, "dmey",
             "discrete Meyer, 62 taps: PyWavelets 'dmey' rec_lo projected onto exactly "
             f"orthonormal filters (max tap change {dev:.3e}); other bands by QMF",
             bank(rec))
        s = pywt.Wavelet("sym4")
        emit(out, "sym4", "Symlet 4, 8 taps, as published in PyWavelets",
             [np.asarray(v) for v in (s.dec_lo, s.dec_hi, s.rec_lo, s.rec_hi)])
    print("max tap change", dev, file=sys.stderr)


if __name__ == "__main__":
    main(sys.argv[1])
