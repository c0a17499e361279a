"""Tour of the natural-spline roughness penalty.

A vector of grid values b is identified with the natural spline that
interpolates it. The penalty b'Ab is that spline's integrated squared m-th
derivative, so it vanishes on low-degree polynomials and grows with wiggle.
"""

import numpy as np

from sflr.spline import build_spline_system, reconstruct_function

p = 21
system = build_spline_system(p, m=2)
t = system.grid.points

print(f"grid: {p} points from {t[0]:.3f} to {t[-1]:.3f}")
print(f"penalty of a straight line 2 - 3t: {system.penalty(2 - 3 * t):.2e}")
print(f"penalty of t^2:                    {system.penalty(t**2):.4f}")
print(f"penalty of sin(6 pi t):            {system.penalty(np.sin(6 * np.pi * t)):.1f}")

# The interpolating spline passes through every grid value and is smooth in between.
b = np.sin(2 * np.pi * t)
fine = np.linspace(t[0], 1, 7)
print("\n  t      spline    sin(2 pi t)")
for ti, si in zip(fine, reconstruct_function(system, b)(fine)):
    print(f"{ti:5.2f}  {si:8.4f}  {np.sin(2 * np.pi * ti):8.4f}")
