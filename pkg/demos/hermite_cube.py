"""Low-degree Hermite weight of the half-volume cube.

The cube [-c, c]^n with volume 1/2 is a product of 1-D intervals, so its
degree <= 2 weight comes out in closed form. It decays like ln^2 n / n. The
first line checks the 1-D coefficient against sampling.
"""
import math

from gausskk import RngStream, cube
from gausskk.hermite import HermiteIndex, cube_degree2_coeff, cube_low_weight_exact, hermite_coeff

c = 0.6744897501960817
est = hermite_coeff(cube(1, c), HermiteIndex(((0, 2),)), 1_000_000, RngStream(11, 0))
print(f"1-D degree-2 coefficient: sampled {est.mean:.5f} +- {est.std_error:.5f}, "
      f"closed form {2 * cube_degree2_coeff(c):.5f}")

for n in [16, 64, 256, 1024, 4096]:
    w = cube_low_weight_exact(n)
    print(f"n={n:5d}  c={w.c:.4f}  W<=2={w.w_pm1:.5f}  W*n/ln^2 n={w.w_pm1 * n / math.log(n) ** 2:.3f}")
