"""Distortion of the hypocycloid map along rays: blow-up as the Jacobian vanishes on |z| = 1.

Writes a table r,d,det to stdout, evaluated from the closed-form differential.
"""

import numpy as np

from sigmaqc.cases import make_case
from sigmaqc.dilatation import sigma_distortion


def main(samples=25):
    case = make_case("hypocycloid")
    r = 1 - np.logspace(0, -6, samples)  # 0 up to 1 - 1e-6
    du = case.exact_du_fn(r, 0 * r)
    d = sigma_distortion(du, np.eye(2))
    det = np.linalg.det(du)
    print("r,d,det")
    for row in zip(r, d, det):
        print(",".join(format(v, ".10g") for v in row))


if __name__ == "__main__":
    main()
