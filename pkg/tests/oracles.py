"""Independent transcriptions of the first-order MSE expressions, used as test oracles.

These are written from the error moments E(e0^2), E(e1^2), E(e0 e1) rather
than from the coefficient forms the package uses.
"""

import math

import numpy as np
from scipy.optimize import minimize


def moments_oracle(s, nr):
    """E(e0^2), E(e1^2), E(e0 e1) written out from the population symbols."""
    v0 = s.theta * (1 + (s.n - 1) * s.rho_y) * s.s2_y / s.ybar**2
    v0 += (nr.l_factor - 1) / s.n * nr.k_rate * nr.s2_y2 / s.ybar**2
    v1 = s.theta * (1 + (s.n - 1) * s.rho_x) * s.s2_x / s.xbar**2
    c01 = (
        s.theta
        * math.sqrt(1 + (s.n - 1) * s.rho_y)
        * math.sqrt(1 + (s.n - 1) * s.rho_x)
        * s.rho
        * math.sqrt(s.s2_y * s.s2_x)
        / (s.ybar * s.xbar)
    )
    return v0, v1, c01


def oracle_mse_t1(s, nr, w):
    """Expected squared error of w11*Y(1+e0) - w12*X*e1 about Y, from the moments."""
    v0, v1, c01 = moments_oracle(s, nr)
    Y, X = s.ybar, s.xbar
    w11, w12 = w
    return Y**2 * (w11 - 1) ** 2 + w11**2 * Y**2 * v0 + w12**2 * X**2 * v1 - 2 * w11 * w12 * X * Y * c01


def oracle_mse_t2(s, nr, w, delta, alpha):
    """Second-order expansion of t2 about Y, squared and averaged term by term."""
    v0, v1, c01 = moments_oracle(s, nr)
    Y, X = s.ybar, s.xbar
    a = delta * (1 - alpha)
    c = delta * (delta + 1) * (1 - alpha) ** 2 / 2
    w21, w22 = w
    # t2 ~ w21 Y (1 + e0 - a e1 - a e0 e1 + c e1^2) - w22 X (e1 - a e1^2)
    mean = w21 * Y * (1 - a * c01 + c * v1) + w22 * X * a * v1
    second = (
        w21**2 * Y**2 * (1 + v0 + a * a * v1 - 2 * a * c01 + 2 * (c * v1 - a * c01))
        + w22**2 * X**2 * v1
        - 2 * w21 * w22 * X * Y * (c01 - 2 * a * v1)
    )
    return second - 2 * Y * mean + Y**2


def oracle_mse_t3(s, nr, gamma, b):
    v0, v1, c01 = moments_oracle(s, nr)
    Y, X = s.ybar, s.xbar
    return (gamma - 1) ** 2 * Y**2 + gamma**2 * (Y**2 * v0 + b * b * X * X * v1 - 2 * b * X * Y * c01)


def numeric_min(f, x0, scale):
    """BFGS on variables divided by ``scale``; the MSE surfaces are quadratics so this converges tightly."""
    unit = abs(f(x0)) or 1.0
    res = minimize(lambda u: f(u * scale) / unit, x0 / scale, method="BFGS", options={"gtol": 1e-12})
    return f(res.x * scale)


def weight_scale(s):
    return np.array([1.0, s.ybar / s.xbar])
