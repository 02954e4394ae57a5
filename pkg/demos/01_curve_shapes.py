"""Shapes of bounded multi-phase logistic curves.

Walks through building one-, two-, and three-phase models, evaluating
them together with their first and second derivatives, and the exact
identities that hold at each peak inflection.  Saves a figure next to
this script when matplotlib is available.
"""

from pathlib import Path

import numpy as np

from nlsig import NlsigModel, Partition, classic_from_partition

# ---------------------------------------------------------------------------
# A single growth phase lives on a finite input interval [x_min, x_max]
# and a finite output range [y_min, y_max].  Its peak inflection sits at
# delta, where the growth rate is maximal.

one = NlsigModel((
    Partition(x_min=0, x_max=10, delta=5, y_min=0, y_max=1, lam=6),
))

print("single phase, value at the peak:", one.value(5.0))
print("  (exactly half the rise: the defining property of the peak)")
print("growth rate at the peak:", one.derivative(5.0))
print("  (closed form alpha*ln(base)*dy/4 = 1.2 * 1 * 0.25 = 0.3)")
print("acceleration at the peak:", one.second_derivative(5.0))
print("  (zero: the rate is at its maximum)")

# A one-phase model is algebraically identical to the textbook logistic
# step with rate alpha = 2*lam/(x_max - x_min).
classic = classic_from_partition(one.partitions[0])
grid = np.linspace(-2, 12, 9)
print("\nmax gap to the classic closed form:",
      np.max(np.abs(one.value(grid) - classic.value(grid))))

# ---------------------------------------------------------------------------
# Multiple phases simply add their contributions.  Each keeps its own
# interval, rise, and intensity, so waves of different speeds and sizes
# compose freely.

three = NlsigModel((
    Partition(x_min=0, x_max=30, delta=18, y_min=0, y_max=1.0, lam=5),
    Partition(x_min=30, x_max=55, delta=41, y_min=1.0, y_max=1.6, lam=7),
    Partition(x_min=55, x_max=100, delta=76, y_min=1.6, y_max=3.2, lam=6),
))

print("\nthree phases:")
print("  floor", three.floor, "ceiling", three.ceiling)
print("  cumulative levels between phases:", three.chained_levels())

xs = np.linspace(-5, 105, 601)
ys = three.value(xs)
rates = three.derivative(xs)

print("  value is bounded:", three.floor <= ys.min(), ys.max() <= three.ceiling)
print("  rate is one bell per phase; maxima near deltas:")
for p in three.partitions:
    print(f"    delta={p.delta}: rate {three.derivative(p.delta):.4f}")

# ---------------------------------------------------------------------------
# Optional picture: the curve, its bell-shaped rate, and the sign-flipping
# acceleration that marks each peak.

try:
    import matplotlib
    matplotlib.use("Agg")
    import matplotlib.pyplot as plt
except ImportError:
    print("\nmatplotlib not installed; skipping the figure")
else:
    fig, axes = plt.subplots(3, 1, figsize=(8, 9), sharex=True)
    axes[0].plot(xs, ys, "r-")
    axes[0].set_ylabel("value")
    axes[1].plot(xs, rates, "b-")
    axes[1].set_ylabel("growth rate")
    axes[2].plot(xs, three.second_derivative(xs), "g-")
    axes[2].axhline(0.0, color="gray", lw=0.5)
    axes[2].set_ylabel("acceleration")
    axes[2].set_xlabel("x")
    for ax in axes:
        for p in three.partitions:
            ax.axvline(p.delta, color="k", ls=":", lw=0.7)
    out = Path(__file__).with_name("curve_shapes.png")
    fig.savefig(out, dpi=120)
    print(f"\nfigure saved to {out}")
