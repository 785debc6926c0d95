"""Parameter-plane cartography: labels, boundaries, loci."""

import math

import numpy as np
import pytest

from atomol.model import ReducedParams
from atomol.regimes import (
    LABEL_BOUNDARY,
    boundary_fp_existence_curve,
    classify_regime,
    fixed_point_locus,
    scan_plane,
    trace_boundaries,
)

OMEGA = 1.0


def label_at(c, r, gamma=0.0, omega=OMEGA):
    return classify_regime(ReducedParams(c=c, omega=omega, r=r, gamma=gamma))


class TestClassifyRegime:
    def test_anchor_detuned_localized(self):
        lab = label_at(0.0, 1.0)
        assert lab.label == "I"
        assert lab.n_interior == 1
        assert not lab.has_boundary_fp

    def test_anchor_self_trapping(self):
        lab = label_at(2.0, 0.0)
        assert lab.label == "II"
        assert lab.n_interior == 3
        assert sorted(lab.kinds) == ["center", "center", "saddle"]

    def test_anchor_oscillation(self):
        lab = label_at(0.0, 0.0)
        assert lab.label == "III"
        assert lab.n_interior == 2
        assert lab.has_boundary_fp

    def test_anchor_inverted_detuning(self):
        lab = label_at(0.0, -1.0)
        assert lab.label == "IV"
        assert lab.n_interior == 1

    def test_exact_bifurcation_is_boundary(self):
        # a root exactly at S = -1: the threshold curve C + R = Om/sqrt2
        lab = label_at(0.0, OMEGA / math.sqrt(2.0))
        assert lab.label == LABEL_BOUNDARY

    def test_regime_three_vanishes_above_threshold(self):
        # gamma > sqrt(2) Omega: the two-point census is gone everywhere
        lab = label_at(0.0, 0.0, gamma=1.5)
        assert lab.label != "III"
        assert lab.n_interior == 3  # symmetric pair plus bottom saddle


class TestScanPlane:
    def test_all_four_regimes_present(self):
        rmap = scan_plane(resolution=(31, 41), omega=OMEGA, gamma=0.0)
        labels = {lab.label for _, _, lab in rmap.cells()}
        assert {"I", "II", "III", "IV"} <= labels

    def test_label_census_consistency(self):
        rmap = scan_plane(resolution=(13, 17), omega=OMEGA, gamma=0.7)
        from atomol.fixed_points import interior_fixed_points
        for c, r, lab in rmap.cells():
            pts = interior_fixed_points(ReducedParams(c=c, omega=OMEGA, r=r,
                                                      gamma=0.7))
            assert lab.n_interior == len(pts)

    def test_regime_three_area_shrinks_with_loss(self):
        counts = []
        for gamma in (0.0, 0.6, 1.2):
            rmap = scan_plane(resolution=(31, 41), omega=OMEGA, gamma=gamma)
            counts.append(rmap.count("III"))
        assert counts[0] > counts[1] > counts[2] > 0

    def test_regime_three_absent_at_large_loss(self):
        # threshold sqrt(2 Om^2 - 4 (C+R)^2) <= sqrt2 < gamma on the window
        rmap = scan_plane(resolution=(21, 21), omega=OMEGA, gamma=2.4)
        assert rmap.count("III") == 0

    def test_determinism(self):
        m1 = scan_plane(resolution=(11, 11), gamma=0.3)
        m2 = scan_plane(resolution=(11, 11), gamma=0.3)
        assert np.array_equal(m1.label_grid(), m2.label_grid())

    def test_resolution_validation(self):
        with pytest.raises(ValueError):
            scan_plane(resolution=1)


class TestTraceBoundaries:
    def test_crossing_on_r_axis_matches_closed_form(self):
        # at C = 0 the oscillation regime ends where a root exits through
        # S = -1, i.e. |R| = Omega/sqrt2; bisection against that oracle
        rmap = scan_plane(c_range=(0.0, 0.25), r_range=(0.2, 1.2),
                          resolution=(6, 41), omega=OMEGA, gamma=0.0)
        polys = trace_boundaries(rmap, refine_tol=1e-6)
        r0_expected = OMEGA / math.sqrt(2.0)
        near_axis = [
            float(pt[1])
            for poly in polys if "III" in poly.labels
            for pt in poly.points if pt[0] < 0.06
        ]
        assert near_axis
        assert min(abs(r - r0_expected) for r in near_axis) < 2e-4

    def test_loss_shifts_crossing_down(self):
        # R1(gamma=0.9) < R0(gamma=0)
        def crossing(gamma):
            lo, hi = 0.2, 1.2
            for _ in range(40):
                mid = 0.5 * (lo + hi)
                if label_at(0.0, mid, gamma=gamma).label == "III":
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        r0 = crossing(0.0)
        r1 = crossing(0.9)
        assert r0 == pytest.approx(OMEGA / math.sqrt(2.0), abs=1e-6)
        assert r1 == pytest.approx(math.sqrt(0.5 - 0.9 ** 2 / 4.0), abs=1e-6)
        assert r1 < r0

    def test_symmetric_crossings_at_zero_loss(self):
        # boundaries at C = 0 are symmetric under R -> -R
        def crossing(sign):
            lo, hi = 0.2, 1.2
            for _ in range(45):
                mid = 0.5 * (lo + hi)
                if label_at(0.0, sign * mid).label == "III":
                    lo = mid
                else:
                    hi = mid
            return 0.5 * (lo + hi)

        assert crossing(+1.0) == pytest.approx(crossing(-1.0), abs=1e-9)

    def test_polylines_separate_distinct_labels(self):
        rmap = scan_plane(resolution=(21, 29), gamma=0.0)
        for poly in trace_boundaries(rmap, refine_tol=1e-4):
            assert poly.labels[0] != poly.labels[1]
            assert len(poly.points) >= 1

    def test_refinement_keeps_vertices_on_the_bifurcation_curve(self):
        # at zero loss every boundary adjacent to regime III sits exactly
        # on the straight lines |C + R| = Omega/sqrt2 (a root crossing
        # S = -1), an exact oracle: vertices of both the coarse and the
        # 2x-refined map must stay within 2*refine_tol of that curve
        refine_tol = 1e-4
        window = dict(c_range=(0.0, 0.6), r_range=(-1.0, 1.0), gamma=0.0)
        level = OMEGA / math.sqrt(2.0)
        counts = []
        for resolution in ((13, 41), (25, 81)):
            rmap = scan_plane(resolution=resolution, **window)
            polys = [p for p in trace_boundaries(rmap, refine_tol=refine_tol)
                     if "III" in p.labels]
            n_vertices = 0
            for poly in polys:
                for c, r in poly.points:
                    dist = abs(abs(c + r) - level) / math.sqrt(2.0)
                    assert dist < 2.0 * refine_tol
                    n_vertices += 1
            counts.append(n_vertices)
        assert counts[0] > 20
        assert counts[1] > counts[0]

    def test_existence_curve_is_the_threshold_locus(self):
        curves = boundary_fp_existence_curve(OMEGA)
        assert curves
        for curve in curves:
            for c, r in curve[::7]:
                assert abs(abs(math.sqrt(2.0) * (c + r)) - OMEGA) < 1e-9


def _point_to_polyline(pt, points):
    pts = np.asarray(points, dtype=float)
    if len(pts) == 1:
        return float(np.hypot(*(pts[0] - pt)))
    best = math.inf
    for a, b in zip(pts[:-1], pts[1:]):
        ab = b - a
        denom = float(ab @ ab)
        if denom == 0.0:
            d = float(np.hypot(*(a - pt)))
        else:
            t = float(np.clip((np.asarray(pt) - a) @ ab / denom, 0.0, 1.0))
            d = float(np.hypot(*(a + t * ab - pt)))
        best = min(best, d)
    return best


class TestFixedPointLocus:
    def test_r_sweep_passes_through_symmetric_point(self):
        branches = fixed_point_locus("R", (-0.5, 0.5), 101, 0.0, OMEGA, 0.0)
        at_zero = [s for br in branches
                   for p, s in zip(br.param, br.s) if p == 0.0]
        assert at_zero == pytest.approx([1.0 / 3.0], abs=1e-9)

    def test_c_sweep_branch_count_jumps_at_threshold(self):
        # the third branch appears where the cubic roots the boundary,
        # C0 = Omega/sqrt2 at zero loss
        branches = fixed_point_locus("C", (0.0, 2.0), 161, 0.0, OMEGA, 0.0)

        def count_at(c):
            return sum(1 for br in branches
                       for p in br.param if abs(p - c) < 1e-9)

        c0 = OMEGA / math.sqrt(2.0)
        assert count_at(0.5) == 2
        assert count_at(1.0) == 3
        below = max(p for br in branches for p in br.param
                    if count_at(p) == 2)
        above = min(p for br in branches for p in br.param
                    if count_at(p) == 3)
        assert below < c0 < above + 1e-9

    def test_loss_lowers_self_trapping_threshold(self):
        # with gamma = 1.5 the third branch is present from C = 0 on
        branches = fixed_point_locus("C", (0.0, 2.0), 41, 0.0, OMEGA, 1.5)

        def count_at(c):
            return sum(1 for br in branches
                       for p in br.param if abs(p - c) < 1e-9)

        assert count_at(0.05) == 3  # C1 below the grid start, < C0
