"""Fixed points of the reduced flow and their linear stability.

Setting dS/dt = 0 pins the phase through sin(theta) =
-(Gamma/2 Omega) sqrt(1-S); eliminating theta from dtheta/dt = 0 with
sin^2 + cos^2 = 1 leaves a real cubic in S,

    (9 G^2 + 64 C^2) S^3
  - (15 G^2 - 36 Om^2 + 64 C^2 + 128 C R) S^2
  - (24 Om^2 - 7 G^2 - 64 R^2 - 128 C R) S
  - (G^2 - 4 Om^2 + 64 R^2)  =  0.

Interior fixed points are the validated real roots in (-1, 1); a
boundary family lives at S = -1 with theta = arccos(-sqrt2 (C+R)/Omega).
Roots come from companion-matrix eigenvalues (with explicit degree
reduction when the leading coefficient vanishes), are polished by
safeguarded Newton refinement, and every candidate is re-verified
against the raw vector field, which rejects the spurious roots
introduced by the squaring step.

Stability follows from the 2x2 Jacobian of the flow.  Its trace equals
2 Gamma S identically, so any non-saddle fixed point is a repeller when
Gamma and S share a sign and an attractor when they differ.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .model import EPS_POLE, ReducedParams, angle_distance, reduced_deriv, wrap_angle

KIND_CENTER = "center"
KIND_SPIRAL_ATTRACTOR = "spiral-attractor"
KIND_SPIRAL_REPELLER = "spiral-repeller"
KIND_NODE_ATTRACTOR = "node-attractor"
KIND_NODE_REPELLER = "node-repeller"
KIND_SADDLE = "saddle"
KIND_INDETERMINATE = "indeterminate"

ATTRACTOR_KINDS = (KIND_SPIRAL_ATTRACTOR, KIND_NODE_ATTRACTOR)
REPELLER_KINDS = (KIND_SPIRAL_REPELLER, KIND_NODE_REPELLER)

# Residual gate on reported fixed points, max(|dS/dt|, |dtheta/dt|).
RESIDUAL_TOL = 1e-9

# Interior roots closer than this to S = -1 sit on a census bifurcation.
BOUNDARY_MARGIN = 1e-9


@dataclass(frozen=True)
class CubicCoefficients:
    """Coefficients of the fixed-point cubic, highest power first."""

    c3: float
    c2: float
    c1: float
    c0: float

    def as_array(self) -> np.ndarray:
        return np.array([self.c3, self.c2, self.c1, self.c0])

    def evaluate(self, s):
        return ((self.c3 * s + self.c2) * s + self.c1) * s + self.c0

    def derivative(self, s):
        return (3.0 * self.c3 * s + 2.0 * self.c2) * s + self.c1


@dataclass(frozen=True)
class FixedPoint:
    """Location, stability class, and diagnostics of one fixed point."""

    s: float
    theta: float
    kind: str
    eigenvalues: tuple[complex, complex]
    residual: float
    on_boundary: bool = False
    multiplicity: int = 1


def cubic_coefficients(q: ReducedParams) -> CubicCoefficients:
    """Fixed-point polynomial in S for the reduced flow."""
    g2 = q.gamma * q.gamma
    om2 = q.omega * q.omega
    c2_ = q.c * q.c
    r2 = q.r * q.r
    cr = q.c * q.r
    return CubicCoefficients(
        c3=9.0 * g2 + 64.0 * c2_,
        c2=-(15.0 * g2 - 36.0 * om2 + 64.0 * c2_ + 128.0 * cr),
        c1=-(24.0 * om2 - 7.0 * g2 - 64.0 * r2 - 128.0 * cr),
        c0=-(g2 - 4.0 * om2 + 64.0 * r2),
    )


def eliminated_phase_polynomial(q: ReducedParams, s):
    """Independent derivation of the fixed-point cubic.

    Eliminates theta between the stationarity conditions through
    sin^2 + cos^2 = 1 and clears denominators:

        4 Om^2 (1-3S)^2 - G^2 (1-S)(1-3S)^2 - 64 (CS-R)^2 (1-S).

    Must agree with cubic_coefficients (same polynomial, different
    algebraic route); kept separate as a cross-check oracle.
    """
    s = np.asarray(s, dtype=float)
    one_m3s2 = (1.0 - 3.0 * s) ** 2
    return (4.0 * q.omega ** 2 * one_m3s2
            - q.gamma ** 2 * (1.0 - s) * one_m3s2
            - 64.0 * (q.c * s - q.r) ** 2 * (1.0 - s))


def _newton_polish(cc: CubicCoefficients, x: float, iters: int = 50) -> float:
    """Plain Newton refinement of a simple real root."""
    best, best_val = x, abs(cc.evaluate(x))
    for _ in range(iters):
        d = cc.derivative(x)
        if d == 0.0:
            break
        step = cc.evaluate(x) / d
        x -= step
        val = abs(cc.evaluate(x))
        if val < best_val:
            best, best_val = x, val
        if abs(step) < 1e-16 * max(1.0, abs(x)):
            break
    return best


def _critical_points(cc: CubicCoefficients) -> list[float]:
    """Real roots of the cubic's derivative (closed form)."""
    a, b, c = 3.0 * cc.c3, 2.0 * cc.c2, cc.c1
    if a == 0.0:
        return [] if b == 0.0 else [-c / b]
    disc = b * b - 4.0 * a * c
    if disc < 0.0:
        return []
    root = math.sqrt(disc)
    qf = -0.5 * (b + math.copysign(root, b)) if b != 0.0 else 0.5 * root
    out = []
    if qf != 0.0:
        out.extend([qf / a, c / qf])
    else:
        out.append(0.0)
    return out


def real_cubic_roots(cc: CubicCoefficients) -> list[tuple[float, int]]:
    """Real roots of the cubic with multiplicities.

    Companion-matrix eigenvalues (or closed-form after explicit degree
    reduction when c3 vanishes), Newton-polished; double roots are
    relocated to the critical point of the polynomial, where refinement
    is well conditioned.
    """
    coeffs = cc.as_array()
    scale = float(np.max(np.abs(coeffs)))
    if scale == 0.0:
        return []

    if abs(cc.c3) <= 1e-14 * scale:
        # degree reduction instead of dividing by a tiny leading term
        a, b, c = cc.c2, cc.c1, cc.c0
        if abs(a) <= 1e-14 * scale:
            if abs(b) <= 1e-14 * scale:
                return []
            return [(-c / b, 1)]
        disc = b * b - 4.0 * a * c
        crit = -b / (2.0 * a)
        if disc < 0.0:
            return []
        tol_d = 1e-14 * max(b * b, abs(4.0 * a * c))
        if disc <= tol_d:
            return [(crit, 2)]
        root = math.sqrt(disc)
        qf = -0.5 * (b + math.copysign(root, b)) if b != 0.0 else 0.5 * root
        roots = sorted([qf / a, c / qf])
        return [(r, 1) for r in roots]

    raw = np.roots(coeffs)
    candidates = [float(z.real) for z in raw
                  if abs(z.imag) <= 1e-6 * (1.0 + abs(z.real))]
    polished = [_newton_polish(cc, x) for x in candidates]

    # double roots: |p| and |p'| both vanish at a critical point
    doubles = []
    for x in _critical_points(cc):
        local = max(abs(cc.c3 * x ** 3), abs(cc.c2 * x ** 2),
                    abs(cc.c1 * x), abs(cc.c0), 1e-300)
        if abs(cc.evaluate(x)) <= 1e-10 * local:
            doubles.append(x)

    roots: list[tuple[float, int]] = [(x, 2) for x in doubles]
    for x in polished:
        if any(abs(x - d) <= 1e-5 * (1.0 + abs(d)) for d in doubles):
            continue
        if any(abs(x - r) <= 1e-9 * (1.0 + abs(r)) for r, _ in roots):
            continue
        roots.append((x, 1))
    roots.sort(key=lambda rm: rm[0])
    return roots


def jacobian(s: float, theta: float, q: ReducedParams,
             eps_pole: float = EPS_POLE) -> np.ndarray:
    """Analytic Jacobian of the reduced flow at (s, theta).

    Satisfies trace(J) = 2*Gamma*S identically: the theta-dependent
    parts of dSdot/dS and dthetadot/dtheta cancel exactly.
    """
    if s >= 1.0 - eps_pole:
        raise ValueError(f"jacobian evaluated too close to the S = 1 pole: {s}")
    root = math.sqrt(1.0 - s)
    sin_t = math.sin(theta)
    cos_t = math.cos(theta)
    shear = q.omega * (1.0 - 3.0 * s) / root
    j11 = -shear * sin_t + 2.0 * q.gamma * s
    j12 = -2.0 * q.omega * (1.0 + s) * root * cos_t
    j21 = 4.0 * q.c + q.omega * (5.0 - 3.0 * s) * cos_t / (2.0 * root ** 3)
    j22 = shear * sin_t
    return np.array([[j11, j12], [j21, j22]])


def eigenvalues_2x2(j: np.ndarray) -> tuple[complex, complex]:
    """Closed-form eigenvalues of a real 2x2 matrix."""
    tr = j[0, 0] + j[1, 1]
    det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
    disc = 0.25 * tr * tr - det
    if disc >= 0.0:
        root = math.sqrt(disc)
        return complex(0.5 * tr + root), complex(0.5 * tr - root)
    root = math.sqrt(-disc)
    return complex(0.5 * tr, root), complex(0.5 * tr, -root)


def classify(j: np.ndarray, tol: float = 1e-9) -> str:
    """Stability class from the Jacobian eigenvalues.

    tol is scaled by the eigenvalue magnitude.  Both real parts below
    -tol give an attractor, both above +tol a repeller (node or spiral
    by the sign of the discriminant), opposite signs a saddle, and
    vanishing real parts with rotation a center.  A doubly degenerate
    spectrum is reported as indeterminate.
    """
    lam1, lam2 = eigenvalues_2x2(j)
    t = tol * max(1.0, abs(lam1), abs(lam2))
    re1, re2 = lam1.real, lam2.real
    spiral = abs(lam1.imag) > t
    if abs(lam1) <= t and abs(lam2) <= t:
        return KIND_INDETERMINATE
    if re1 < -t and re2 < -t:
        return KIND_SPIRAL_ATTRACTOR if spiral else KIND_NODE_ATTRACTOR
    if re1 > t and re2 > t:
        return KIND_SPIRAL_REPELLER if spiral else KIND_NODE_REPELLER
    if (re1 > t and re2 < -t) or (re1 < -t and re2 > t):
        return KIND_SADDLE
    if abs(re1) <= t and abs(re2) <= t and spiral:
        return KIND_CENTER
    return KIND_INDETERMINATE


def residual(s: float, theta: float, q: ReducedParams) -> float:
    """max(|dS/dt|, |dtheta/dt|) of the raw vector field."""
    ds, dtheta = reduced_deriv(s, theta, q.c, q.omega, q.r, q.gamma,
                               eps_pole=0.0)
    return max(abs(ds), abs(dtheta))


def _polish_point(s: float, theta: float, q: ReducedParams,
                  iters: int = 20) -> tuple[float, float]:
    """Safeguarded 2D Newton refinement on the raw vector field."""
    best = (s, theta)
    best_res = residual(s, theta, q)
    for _ in range(iters):
        if best_res < 1e-14:
            break
        try:
            j = jacobian(s, theta, q, eps_pole=1e-14)
        except ValueError:
            break
        det = j[0, 0] * j[1, 1] - j[0, 1] * j[1, 0]
        norm = max(abs(j).max(), 1e-300)
        if abs(det) < 1e-12 * norm * norm:
            break
        ds_dt, dth_dt = reduced_deriv(s, theta, q.c, q.omega, q.r, q.gamma,
                                      eps_pole=0.0)
        step_s = (j[1, 1] * ds_dt - j[0, 1] * dth_dt) / det
        step_t = (-j[1, 0] * ds_dt + j[0, 0] * dth_dt) / det
        s_new = s - step_s
        t_new = theta - step_t
        if not -1.0 < s_new < 1.0 - 1e-14:
            break
        res = residual(s_new, t_new, q)
        s, theta = s_new, t_new
        if res < best_res:
            best, best_res = (s, theta), res
        else:
            break
    return best


def interior_fixed_points(q: ReducedParams,
                          residual_tol: float = RESIDUAL_TOL,
                          eps_pole: float = EPS_POLE) -> list[FixedPoint]:
    """All validated fixed points with -1 < S < 1.

    Candidate S values are the real cubic roots; the phase is recovered
    from the sine condition with the cosine branch fixed by the
    stationarity of theta.  Where the cosine coefficient vanishes
    (S = 1/3 with C S = R) both phase branches are returned.  Every
    candidate is polished on the raw vector field and must pass the
    residual gate, which rejects spurious squaring roots.
    """
    if not q.omega > 0:
        raise ValueError("interior fixed points require omega > 0")
    cc = cubic_coefficients(q)
    points: list[FixedPoint] = []
    for s_root, mult in real_cubic_roots(cc):
        if not (-1.0 + BOUNDARY_MARGIN < s_root < 1.0 - eps_pole):
            continue
        root1ms = math.sqrt(1.0 - s_root)
        sin_c = -q.gamma * root1ms / (2.0 * q.omega)
        if abs(sin_c) > 1.0 + 1e-9:
            continue
        sin_c = min(1.0, max(-1.0, sin_c))
        coef = q.omega * (1.0 - 3.0 * s_root) / root1ms
        inhom = 4.0 * q.c * s_root - 4.0 * q.r
        if abs(coef) <= 1e-6 * q.omega:
            # cosine equation vacuous: S = 1/3 with C S = R
            if abs(inhom) > 1e-6 * max(1.0, abs(4.0 * q.c) + abs(4.0 * q.r)):
                continue
            cos_m = math.sqrt(max(0.0, 1.0 - sin_c * sin_c))
            candidates = [math.atan2(sin_c, cos_m)]
            if cos_m > 1e-12:
                candidates.append(math.atan2(sin_c, -cos_m))
        else:
            candidates = [math.atan2(sin_c, inhom / coef)]
        for theta_c in candidates:
            s_fp, theta_fp = _polish_point(s_root, theta_c, q)
            res = residual(s_fp, theta_fp, q)
            if res >= residual_tol:
                continue
            theta_fp = float(wrap_angle(theta_fp))
            if any(abs(p.s - s_fp) < 1e-7
                   and angle_distance(p.theta, theta_fp) < 1e-7
                   for p in points):
                continue
            j = jacobian(s_fp, theta_fp, q)
            points.append(FixedPoint(
                s=s_fp, theta=theta_fp, kind=classify(j),
                eigenvalues=eigenvalues_2x2(j), residual=res,
                on_boundary=False, multiplicity=mult,
            ))
    points.sort(key=lambda p: (p.s, p.theta))
    return points


def boundary_fixed_point(q: ReducedParams) -> FixedPoint | None:
    """Fixed point of the S = -1 boundary family, when it exists.

    Present iff |sqrt2 (C+R)| <= Omega, at theta =
    arccos(-sqrt2 (C+R)/Omega).  The (S, theta) chart is degenerate on
    the boundary; the linearization uses the local coordinate p = 1 + S
    (same partial derivatives, one-sided in p >= 0) where the Jacobian
    is lower triangular with real eigenvalues.
    """
    if not q.omega > 0:
        raise ValueError("boundary fixed point requires omega > 0")
    x = -math.sqrt(2.0) * (q.c + q.r) / q.omega
    if abs(x) > 1.0:
        return None
    theta = math.acos(x)
    j = jacobian(-1.0, theta, q)
    return FixedPoint(s=-1.0, theta=theta, kind=classify(j),
                      eigenvalues=eigenvalues_2x2(j),
                      residual=residual(-1.0, theta, q), on_boundary=True)


def all_fixed_points(q: ReducedParams) -> list[FixedPoint]:
    """Interior points plus the boundary point when present."""
    points = interior_fixed_points(q)
    bfp = boundary_fixed_point(q)
    if bfp is not None:
        points.append(bfp)
    return points


def _threshold_by_bisection(c: float, r: float, omega: float) -> float | None:
    """Locate the Gamma where the cubic gains a root at S = -1.

    The cubic's value at S = -1 is monotone decreasing in Gamma^2, so
    plain bisection on Gamma >= 0 brackets the sign change.
    """

    def value_at_minus1(gamma):
        cc = cubic_coefficients(ReducedParams(c=c, omega=omega, r=r,
                                              gamma=gamma))
        return cc.evaluate(-1.0)

    lo, hi = 0.0, 1.0
    if value_at_minus1(lo) < 0.0:
        return None
    while value_at_minus1(hi) > 0.0:
        hi *= 2.0
        if hi > 1e9:
            return None
    for _ in range(200):
        mid = 0.5 * (lo + hi)
        if mid == lo or mid == hi:
            break
        if value_at_minus1(mid) > 0.0:
            lo = mid
        else:
            hi = mid
    return 0.5 * (lo + hi)


def threshold_gamma(c: float, r: float, omega: float) -> float | None:
    """Decoherence rate at which a root reaches the S = -1 boundary.

    Closed form sqrt(2 Omega^2 - 4 (C+R)^2) when the radicand is
    non-negative, absent otherwise; cross-checked against bisection on
    the cubic's boundary value (the two routes must agree to 1e-6).
    """
    if not omega > 0:
        raise ValueError("threshold requires omega > 0")
    radicand = 2.0 * omega * omega - 4.0 * (c + r) ** 2
    if radicand < 0.0:
        return None
    closed = math.sqrt(radicand)
    bisected = _threshold_by_bisection(c, r, omega)
    if bisected is None or abs(closed - bisected) > 1e-6:
        raise AssertionError(
            f"threshold routes disagree: closed={closed!r} bisection={bisected!r}")
    return closed
