"""LOS guidance and depth reference tests."""

import numpy as np
import pytest

from auvgnc import guidance
from auvgnc.guidance import (
    GuidanceParams,
    PathGuidance,
    Waypoint,
    depth_reference,
    los_yaw_reference,
    vertical_guidance,
)


class TestDepthReference:
    @pytest.mark.parametrize("s,expected", [(0.0, 10.0), (1.0, 20.0), (0.5, 15.0)])
    def test_values(self, s, expected):
        assert depth_reference(10.0, 20.0, s) == expected


class TestLosYaw:
    def test_on_path_no_drift(self):
        assert los_yaw_reference(0.7, 0.0, 4.0, 0.0, 0.5) == pytest.approx(0.7)

    def test_cross_track_equal_lookahead(self):
        psi = los_yaw_reference(0.0, 4.0, 4.0, 0.0, 0.5)
        assert psi == pytest.approx(-np.pi / 4)

    def test_sideslip_shift(self):
        beta = np.deg2rad(5.0)
        v = 0.5 * np.tan(beta)
        psi = los_yaw_reference(0.3, 0.0, 4.0, v, 0.5)
        assert psi == pytest.approx(0.3 - beta, abs=1e-12)

    def test_sideslip_disabled_at_low_surge(self):
        psi = los_yaw_reference(0.3, 0.0, 4.0, 0.2, 0.01)
        assert psi == pytest.approx(0.3)

    def test_correction_bounded(self):
        for h_e in np.linspace(-1e4, 1e4, 41):
            psi = los_yaw_reference(0.0, h_e, 4.0, 0.0, 0.5)
            assert abs(psi) < np.pi / 2 + 1e-9


class TestVerticalGuidance:
    def test_zero_error(self):
        assert vertical_guidance(0.0, 4.0) == 0.0

    def test_error_equal_lookahead(self):
        theta = vertical_guidance(4.0, 4.0, max_pitch=np.pi / 2)
        assert abs(theta) == pytest.approx(np.pi / 4)

    def test_too_shallow_commands_nose_down(self):
        # positive depth error (reference deeper than vehicle) -> dive
        assert vertical_guidance(2.0, 4.0) < 0.0

    def test_clamped_to_20_deg(self):
        assert vertical_guidance(100.0, 4.0) == pytest.approx(-np.deg2rad(20.0))
        assert vertical_guidance(-100.0, 4.0) == pytest.approx(np.deg2rad(20.0))


class TestPathGuidance:
    def make(self):
        wps = [
            Waypoint(0, 0, 10, heading=0.0),
            Waypoint(30, 0, 12, heading=0.0),
            Waypoint(60, 20, 12),
        ]
        g = PathGuidance(wps, GuidanceParams())
        g.start(np.array([0.0, 0.0, 0.0]), 10.0)
        return g

    def test_reference_on_straight_leg(self):
        g = self.make()
        ref = g.step(np.array([10.0, 0.0, 10.6667]), 0.0, 0.5, 0.0)
        assert ref.psi_d == pytest.approx(0.0, abs=1e-9)
        assert ref.d_ref == pytest.approx(10.0 + 10 / 30 * 2.0, abs=0.05)
        assert not ref.goal_reached

    def test_cross_track_steers_back(self):
        g = self.make()
        ref = g.step(np.array([10.0, 2.0, 11.0]), 0.0, 0.5, 0.0)
        assert ref.psi_d < 0.0  # east of path, steer back north-west
        assert ref.cross_track == pytest.approx(2.0, abs=0.05)

    def test_waypoint_switch_and_goal(self):
        g = self.make()
        g.step(np.array([29.0, 0.0, 12.0]), 0.0, 0.5, 0.0)
        assert g.target_idx == 2
        g.step(np.array([59.0, 19.5, 12.0]), 0.6, 0.5, 0.0)
        assert g.finished

    def test_nominal_plan_covers_waypoints(self):
        g = self.make()
        segs = g.nominal_plan()
        assert len(segs) == 2
        np.testing.assert_allclose(segs[0].points[0], [0, 0], atol=1e-9)
        np.testing.assert_allclose(segs[-1].points[-1], [60, 20], atol=1e-6)
