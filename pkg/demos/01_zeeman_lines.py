"""
Where the resonances sit
========================

A bias field along [110] projects equally onto two of the four NV
orientations and is orthogonal to the other two.
"""

import numpy as np

from nvsinglet.spin import MagneticFieldVec, all_resonances

# 1 mT along [110]
res = all_resonances(MagneticFieldVec.along((1, 1, 0), 1e-3))
for a in res.axes:
    print(f"{a.axis.label:>9}  B_nv = {a.b_projection * 1e3:+.4f} mT  "
          f"f- = {a.f_minus / 1e9:.6f} GHz  f+ = {a.f_plus / 1e9:.6f} GHz")
print("degenerate groups:", res.degenerate_groups)

# the shifted pair is split by 2 gamma B sqrt(2/3)
a = res.axes[0]
print(f"splitting {(a.f_plus - a.f_minus) / 1e6:.3f} MHz")

# every line carries the 14N hyperfine triplet
print("lines of the lower transition (MHz):", np.round(a.lines_minus / 1e6, 3))
