#!/usr/bin/env python3
"""Independent recomputation of the numeric constants frozen into the test
suite.

Every value below is derived from first principles with nothing but the
math module, so the Rust implementation and this script share no code.
Each line of output is `name = <repr>`; the test suite compares these
values against the library to 1e-9.
"""

import math


def normalized_error(x, lo, hi):
    """Position inside [lo, hi] mapped affinely onto (-1, 1)."""
    return (2.0 * x - lo - hi) / (hi - lo)


def transform_error(e):
    """Barrier transform: finite error -> unbounded coordinate."""
    return math.log((1.0 + e) / (1.0 - e))


def gain(e, width):
    """Slope of the barrier transform, scaled by the interval width."""
    return 4.0 / (width * (1.0 - e * e))


def stage_control(kappa, e, width):
    return -kappa * gain(e, width) * transform_error(e)


def funnel(p, q, mu, t):
    """Exponentially converging error envelope."""
    return (p - q) * math.exp(-mu * t) + q


def main():
    out = []

    # scalar controller pieces
    out.append(("normalized_error_mid", normalized_error(0.0, -2.0, 2.0)))
    out.append(("normalized_error_quarter", normalized_error(1.0, -2.0, 2.0)))
    out.append(("transform_error_half", transform_error(0.5)))
    out.append(("transform_error_04", transform_error(0.4)))
    out.append(("gain_04_08", gain(0.4, 0.8)))
    out.append(("stage_control_1_05_2", stage_control(1.0, 0.5, 2.0)))
    out.append(("stage_control_1_04_08", stage_control(1.0, 0.4, 0.8)))
    out.append(("funnel_2_01_1_1", funnel(2.0, 0.1, 1.0, 1.0)))

    # funnel anchoring: p = |dev|*(1+rho) + rho_abs, q = max(q_rel*p, q_abs)
    dev, rho, rho_abs, q_rel, q_abs = 0.3, 1.0, 0.15, 0.3, 0.4
    p = abs(dev) * (1.0 + rho) + rho_abs
    q = max(q_rel * p, q_abs)
    out.append(("anchor_p", p))
    out.append(("anchor_q", q))
    out.append(("anchor_radius_half", funnel(p, q, 1.5, 0.5)))

    # two-stage cascade: x = [1, -1], stage-1 interval [-2, 2],
    # stage-2 funnel (p=2, q=0.1, mu=1) evaluated at tau=1
    x1, x2 = 1.0, -1.0
    lo, hi = -2.0, 2.0
    e1 = normalized_error(x1, lo, hi)
    r2 = -1.0 * gain(e1, hi - lo) * transform_error(e1)
    g = funnel(2.0, 0.1, 1.0, 1.0)
    e2 = normalized_error(x2, r2 - g, r2 + g)
    u = -1.0 * gain(e2, 2.0 * g) * transform_error(e2)
    out.append(("chain_e1", e1))
    out.append(("chain_r2", r2))
    out.append(("chain_e2", e2))
    out.append(("chain_u", u))

    # one classical fourth-order Runge-Kutta step of x' = x from x(0) = 1
    # with dt = 0.1, against exp(0.1)
    dt, x = 0.1, 1.0
    k1 = x
    k2 = x + 0.5 * dt * k1
    k3 = x + 0.5 * dt * k2
    k4 = x + dt * k3
    out.append(("rk4_exp_step", x + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4)))

    # two-link arm with unit masses and lengths, uniform rods, g = 9.81:
    # mass matrix, gravity torque, and free-fall acceleration at rest
    m, l, grav = 1.0, 1.0, 9.81
    th1, th2 = 0.0, 0.0
    m11 = (5.0 / 3.0 + math.cos(th2)) * m * l * l
    m12 = (1.0 / 3.0 + math.cos(th2) / 2.0) * m * l * l
    m22 = (1.0 / 3.0) * m * l * l
    det = m11 * m22 - m12 * m12
    g1 = 1.5 * m * grav * l * math.cos(th1) + 0.5 * m * grav * l * math.cos(th1 + th2)
    g2 = 0.5 * m * grav * l * math.cos(th1 + th2)
    # at rest the Coriolis terms vanish; acc = -M^{-1} G
    a1 = -(m22 * g1 - m12 * g2) / det
    a2 = -(-m12 * g1 + m11 * g2) / det
    out.append(("manip_m11", m11))
    out.append(("manip_m12", m12))
    out.append(("manip_m22", m22))
    out.append(("manip_det_m", det))
    out.append(("manip_g1", g1))
    out.append(("manip_g2", g2))
    out.append(("manip_acc1", a1))
    out.append(("manip_acc2", a2))

    # three-wheel omnidirectional base: wheel directions pi, -pi/3, 2pi/3,
    # arm length 0.2, wheel gain 0.05. Rows of the wheel map are
    # [-sin(phi), cos(phi), L]; body velocity = gain * inv(map) @ u.
    phis = [math.pi, -math.pi / 3.0, 2.0 * math.pi / 3.0]
    arm, wheel_gain = 0.2, 0.05
    rows = [[-math.sin(p_), math.cos(p_), arm] for p_ in phis]
    dd = (
        rows[0][0] * (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1])
        - rows[0][1] * (rows[1][0] * rows[2][2] - rows[1][2] * rows[2][0])
        + rows[0][2] * (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0])
    )
    inv = [
        [
            (rows[1][1] * rows[2][2] - rows[1][2] * rows[2][1]) / dd,
            (rows[0][2] * rows[2][1] - rows[0][1] * rows[2][2]) / dd,
            (rows[0][1] * rows[1][2] - rows[0][2] * rows[1][1]) / dd,
        ],
        [
            (rows[1][2] * rows[2][0] - rows[1][0] * rows[2][2]) / dd,
            (rows[0][0] * rows[2][2] - rows[0][2] * rows[2][0]) / dd,
            (rows[0][2] * rows[1][0] - rows[0][0] * rows[1][2]) / dd,
        ],
        [
            (rows[1][0] * rows[2][1] - rows[1][1] * rows[2][0]) / dd,
            (rows[0][1] * rows[2][0] - rows[0][0] * rows[2][1]) / dd,
            (rows[0][0] * rows[1][1] - rows[0][1] * rows[1][0]) / dd,
        ],
    ]
    u = [1.0, 1.0, 1.0]
    xdot = [wheel_gain * sum(inv[i][j] * u[j] for j in range(3)) for i in range(3)]
    out.append(("omni_inv_00", inv[0][0]))
    out.append(("omni_inv_01", inv[0][1]))
    out.append(("omni_inv_02", inv[0][2]))
    out.append(("omni_xdot_1", xdot[0]))
    out.append(("omni_xdot_2", xdot[1]))
    out.append(("omni_xdot_3", xdot[2]))

    for name, value in out:
        print(f"{name} = {value!r}")


if __name__ == "__main__":
    main()
