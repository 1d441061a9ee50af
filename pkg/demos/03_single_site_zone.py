"""The single-site inconsistency zone.

For a constant-state root, likelihood reconstruction can prefer a WRONG
state when edges are long enough, provided the frequency pair
(true state, alternative) falls in a zone determined by a one-sided
binomial divergence.  This script prints the closed-form single-site
threshold, scans the zone for several sequence lengths, and renders the
rasters.  As the number of sites grows the zone collapses onto the
plurality region (alternative frequency above the true one).
"""

import pathlib

import numpy as np

from staranc import StationaryDistribution, single_site_threshold, v_function, zone_scan
from staranc.asymptotics import zone_to_csv, zone_to_svg

OUT = pathlib.Path(__file__).parent / "output"
OUT.mkdir(exist_ok=True)

pi = StationaryDistribution((0.1, 0.1, 0.2, 0.6))
print("single-site thresholds on mean copy probability (truth r vs alternative a):")
for r, a in [(1, 4), (4, 1), (1, 3), (2, 1)]:
    thr = single_site_threshold(pi, r, a)
    verdict = f"inconsistent when mean s < {thr:.4f}" if thr else "never preferred"
    print(f"  truth state {r}, alternative {a}: {verdict}")

print("\nthe criterion behind the zone: v(p) at one site is -p log p,")
print("maximised at p = 1/e, so even a RARER alternative can win:")
for p in (0.1, 0.2, 1 / np.e, 0.6, 0.9):
    print(f"  v({p:.3f}, N=1) = {v_function(float(p), 1):.4f}")

for n_sites in (1, 2, 5, 20):
    zone = zone_scan(n_sites, 0.01)
    vals = np.asarray(zone.values)
    plurality = vals[None, :] > vals[:, None]
    agree = np.mean(zone.in_zone == plurality)
    zone_to_csv(zone, OUT / f"zone_N{n_sites}.csv")
    zone_to_svg(zone, OUT / f"zone_N{n_sites}.svg")
    print(f"N={n_sites:>2}: {zone.in_zone.mean():.1%} of cells flagged, "
          f"{agree:.1%} agreement with the plurality region "
          f"-> zone_N{n_sites}.svg")

print(f"\nrasters and grids under {OUT} (black cells = zone)")
