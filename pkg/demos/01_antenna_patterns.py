"""Panel radiation patterns: element choice, steering, and width mapping.

Prints small text tables; no plotting dependencies. Run with:
    python3 demos/01_antenna_patterns.py
"""

import math

import numpy as np

from cellless.antenna import (ISOTROPIC, THREEGPP_8DBI, PanelGeometry,
                              SteeringDirection, panel_field, width_to_panel)


def gain_db(geom, theta, phi, steer):
    f = panel_field(geom, theta, phi, steer)
    return 20.0 * np.log10(np.maximum(np.abs(f), 1e-12))


def main():
    print("=== Azimuth cut of a 16x32 panel steered to 20 deg ===")
    geom = PanelGeometry(16, 32, element_pattern=ISOTROPIC)
    steer = SteeringDirection(math.radians(100.0), math.radians(20.0))
    phis = np.radians(np.arange(-90, 91, 10))
    g = gain_db(geom, math.radians(100.0), phis, steer)
    for p, v in zip(np.degrees(phis), g):
        bar = "#" * max(0, int(v + 12))
        print(f"  phi {p:6.1f} deg  {v:7.2f} dB  {bar}")

    print()
    print("=== Mirror ambiguity of a half-wavelength row ===")
    print("A row of columns cannot tell phi from 180-phi; the directive")
    print("element breaks the tie:")
    steer = SteeringDirection(math.pi / 2, math.radians(30.0))
    for pattern in (ISOTROPIC, THREEGPP_8DBI):
        geom = PanelGeometry(1, 16, element_pattern=pattern)
        at = gain_db(geom, math.pi / 2, math.radians(30.0), steer)
        mirror = gain_db(geom, math.pi / 2, math.radians(150.0), steer)
        print(f"  {pattern:>14}: steered dir {float(at):6.2f} dB, "
              f"mirror dir {float(mirror):6.2f} dB")

    print()
    print("=== Beam width -> effective column count (32-column panel) ===")
    geom = PanelGeometry(16, 32)
    for width_deg in (2, 5, 10, 20, 45, 90, 180):
        n = width_to_panel(math.radians(width_deg), geom)
        print(f"  width {width_deg:4d} deg -> {n:2d} columns")


if __name__ == "__main__":
    main()
