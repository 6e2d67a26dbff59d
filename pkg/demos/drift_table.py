"""Show why double-integrating tilted accelerometer data is hopeless.

A constant orientation error of even one degree misprojects gravity into
the horizontal plane; integrating twice turns that into position error
growing with the square of time.  The table prints simulated drift next
to the closed form for a few tilt angles.  Run from the repository root:

    python3 demos/drift_table.py
"""

import numpy as np

from gesturekit.synthetic import G_MS2, drift_curve


def main() -> None:
    angles_deg = (0.5, 1.0, 2.0, 5.0)
    angles = tuple(np.radians(a) for a in angles_deg)
    times, curves = drift_curve(angles, duration=10.0, dt=0.02)

    print(f"{'t (s)':>6}" + "".join(f"  {a:g} deg (m)" for a in angles_deg))
    for t_mark in (1.0, 2.0, 5.0, 10.0):
        i = int(np.argmin(np.abs(times - t_mark)))
        row = "".join(f"  {curves[j, i]:>9.3f}" for j in range(len(angles)))
        print(f"{times[i]:>6.1f}{row}")

    closed = 0.5 * G_MS2 * np.sin(angles[1]) * 10.0**2
    print(f"\n1 deg after 10 s: simulated {curves[1, -1]:.3f} m, "
          f"closed form 0.5*g*sin(da)*t^2 = {closed:.3f} m")

    # slope of log(drift) vs log(t) confirms the quadratic growth law
    mask = times >= 1.0
    slope = np.polyfit(np.log(times[mask]), np.log(curves[1, mask]), 1)[0]
    print(f"log-log slope over t >= 1 s: {slope:.4f} (quadratic law -> 2)")


if __name__ == "__main__":
    main()
