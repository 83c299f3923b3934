import math

import numpy as np
import pytest

from srdf_kit import (
    DomainError,
    FieldModel,
    FieldSamplingSet,
    GaussMarkovKernel,
    InfeasibleDistortion,
    TabulatedKernel,
    field_distortion_rate,
    field_gram,
    field_max_distortion,
    field_min_distortion,
    field_spectrum,
    field_srdf,
    gm_min_distortion_pinned,
    gm_min_distortion_single,
    gm_segment_explained,
    optimize_placement,
)


def gm_field(p, quad_points=2048):
    return FieldModel(GaussMarkovKernel(p), quad_points=quad_points)


class TestKernels:
    def test_gauss_markov_values(self):
        kern = GaussMarkovKernel(0.5)
        s = np.array([0.0, 0.25])
        u = np.array([1.0, 0.25])
        got = kern.corr(s, u)
        assert got == pytest.approx([0.5, 1.0])

    @pytest.mark.parametrize("p", [0.0, 1.0, -0.2, 1.5])
    def test_gauss_markov_domain(self, p):
        with pytest.raises(DomainError):
            GaussMarkovKernel(p)

    def test_tabulated_interpolates_exactly_at_mesh(self):
        grid = np.linspace(0.0, 1.0, 9)
        vals = 0.5 ** np.abs(grid[:, None] - grid[None, :])
        kern = TabulatedKernel(vals)
        got = kern.corr(grid, np.full_like(grid, 0.5))
        assert got == pytest.approx(0.5 ** np.abs(grid - 0.5), abs=1e-12)

    def test_tabulated_close_to_smooth_kernel(self):
        # bilinear meshes undershoot the diagonal kink by ~h|ln p|/3, so the
        # gap to the smooth kernel shrinks linearly with the mesh step
        grid = np.linspace(0.0, 1.0, 201)
        vals = 0.5 ** np.abs(grid[:, None] - grid[None, :])
        fm = FieldModel(TabulatedKernel(vals), quad_points=512)
        exact = gm_min_distortion_single(0.5, 0.5)
        got = field_min_distortion(fm, FieldSamplingSet((0.5,)))
        assert got == pytest.approx(exact, abs=2e-3)

    def test_tabulated_rejects_asymmetric(self):
        vals = np.eye(4)
        vals[0, 1] = 0.5
        with pytest.raises(DomainError):
            TabulatedKernel(vals)

    def test_mesh_csv_round_trip(self, tmp_path):
        grid = np.linspace(0.0, 1.0, 5)
        vals = 0.7 ** np.abs(grid[:, None] - grid[None, :])
        path = tmp_path / "mesh.csv"
        lines = ["5"]
        for i in range(5):
            for j in range(5):
                lines.append(f"{i},{j},{vals[i, j]:.17g}")
        path.write_text("\n".join(lines) + "\n", encoding="utf-8")
        kern = TabulatedKernel.from_mesh_csv(path)
        assert np.allclose(kern.values, vals)

    def test_mesh_csv_missing_entry(self, tmp_path):
        path = tmp_path / "mesh.csv"
        path.write_text("2\n0,0,1.0\n0,1,0.5\n1,0,0.5\n", encoding="utf-8")
        with pytest.raises(DomainError):
            TabulatedKernel.from_mesh_csv(path)


class TestSingleSiteField:
    # closed form for the exponential kernel: explained mass splits at the site
    @pytest.mark.parametrize("p", [0.3, 0.5, 0.8])
    @pytest.mark.parametrize("a", [0.0, 0.2, 0.5, 0.9, 1.0])
    def test_min_distortion_matches_closed_form(self, p, a):
        fm = gm_field(p, quad_points=1024)
        got = field_min_distortion(fm, FieldSamplingSet((a,)))
        assert got == pytest.approx(gm_min_distortion_single(p, a), abs=1e-9)

    def test_known_values(self):
        # frozen from the antiderivative form with natural logs
        assert gm_min_distortion_single(0.5, 0.5) == pytest.approx(0.2786524795555183, abs=1e-12)
        assert gm_min_distortion_single(0.5, 0.0) == pytest.approx(0.4589893596666387, abs=1e-12)

    def test_center_is_best(self):
        vals = [gm_min_distortion_single(0.5, a) for a in np.linspace(0.0, 1.0, 21)]
        center = gm_min_distortion_single(0.5, 0.5)
        assert min(vals) == pytest.approx(center)
        # monotone in |a - 0.5| on each side
        left = vals[:11]
        assert all(left[i] > left[i + 1] for i in range(10))
        right = vals[10:]
        assert all(right[i] < right[i + 1] for i in range(10))

    def test_field_srdf_closed_form_k1(self):
        # one sample point: a single weighted mode of mass delta_max - delta_min
        fm = gm_field(0.5)
        pts = FieldSamplingSet((0.3,))
        dmin = field_min_distortion(fm, pts)
        dmax = field_max_distortion(fm)
        assert dmax == pytest.approx(1.0, abs=1e-10)
        for delta in (dmin + 0.05, dmin + 0.2, 0.9):
            want = 0.5 * math.log2((dmax - dmin) / (delta - dmin))
            assert field_srdf(fm, pts, delta).rate_bits == pytest.approx(want, abs=1e-7)


class TestSegments:
    def test_gamma_frozen_value(self):
        assert gm_segment_explained(0.5, 1.0) == pytest.approx(0.7760283747816492, abs=1e-9)

    def test_gamma_domain(self):
        with pytest.raises(DomainError):
            gm_segment_explained(0.5, 0.0)
        with pytest.raises(DomainError):
            gm_segment_explained(0.5, 1.5)

    @pytest.mark.parametrize("p", [0.3, 0.6])
    @pytest.mark.parametrize("inner", [(0.5,), (0.25, 0.75), (0.2, 0.4, 0.9)])
    def test_pinned_identity_vs_quadrature(self, p, inner):
        points = (0.0,) + inner + (1.0,)
        fm = gm_field(p)
        got = field_min_distortion(fm, FieldSamplingSet(points))
        want = gm_min_distortion_pinned(p, points)
        assert got == pytest.approx(want, abs=1e-7)

    def test_pinned_requires_endpoints(self):
        with pytest.raises(DomainError):
            gm_min_distortion_pinned(0.5, (0.1, 0.9))


class TestFieldSrdfProperties:
    def test_spectrum_sum_identity(self):
        fm = gm_field(0.4)
        pts = FieldSamplingSet((0.2, 0.7))
        lams = field_spectrum(fm, pts)
        total = field_max_distortion(fm) - field_min_distortion(fm, pts)
        assert float(np.sum(lams)) == pytest.approx(total, rel=1e-8)

    def test_gram_is_kernel_at_points(self):
        fm = gm_field(0.6)
        pts = FieldSamplingSet((0.1, 0.4, 0.9))
        gram = field_gram(fm, pts)
        arr = np.array(pts.points)
        want = 0.6 ** np.abs(arr[:, None] - arr[None, :])
        assert np.allclose(gram, want, atol=1e-12)

    def test_infeasible_below_floor(self):
        fm = gm_field(0.5)
        pts = FieldSamplingSet((0.5,))
        dmin = field_min_distortion(fm, pts)
        with pytest.raises(InfeasibleDistortion):
            field_srdf(fm, pts, dmin * 0.99)

    def test_distortion_rate_round_trip(self):
        fm = gm_field(0.5)
        pts = FieldSamplingSet((0.25, 0.8))
        delta = 0.5
        rate = field_srdf(fm, pts, delta).rate_bits
        assert field_distortion_rate(fm, pts, rate) == pytest.approx(delta, rel=1e-7)

    def test_under_resolved_quadrature_raises(self):
        # near-delta kernel: the Richardson pair must disagree at a tiny budget
        from srdf_kit import QuadratureUnderResolved

        fm = FieldModel(GaussMarkovKernel(1e-6), quad_points=16)
        with pytest.raises(QuadratureUnderResolved):
            field_min_distortion(fm, FieldSamplingSet((0.37,)))

    def test_point_set_validation(self):
        with pytest.raises(DomainError):
            FieldSamplingSet((0.5, 0.5))
        with pytest.raises(DomainError):
            FieldSamplingSet((-0.1,))
        with pytest.raises(DomainError):
            FieldSamplingSet(())


class TestPlacement:
    def test_single_point_center(self):
        fm = gm_field(0.5, quad_points=512)
        res = optimize_placement(fm, 1, "min_delta_min", restarts=4, seed=0)
        assert res.points[0] == pytest.approx(0.5, abs=1e-3)

    def test_pinned_three_points_uniform(self):
        fm = gm_field(0.6, quad_points=512)
        res = optimize_placement(fm, 3, "min_delta_min", restarts=2, pin_endpoints=True, seed=0)
        assert res.points[0] == 0.0 and res.points[-1] == 1.0
        assert res.points[1] == pytest.approx(0.5, abs=1e-2)

    def test_deterministic(self):
        fm = gm_field(0.5, quad_points=256)
        r1 = optimize_placement(fm, 2, "min_delta_min", restarts=3, seed=5)
        r2 = optimize_placement(fm, 2, "min_delta_min", restarts=3, seed=5)
        assert r1.points == r2.points and r1.value == r2.value

    def test_threads_match_serial(self):
        fm = gm_field(0.5, quad_points=256)
        r1 = optimize_placement(fm, 2, "min_delta_min", restarts=4, seed=2, threads=1)
        r2 = optimize_placement(fm, 2, "min_delta_min", restarts=4, seed=2, threads=4)
        assert r1.points == r2.points

    def test_min_rate_objective(self):
        fm = gm_field(0.5, quad_points=256)
        res = optimize_placement(fm, 1, ("min_rate_at", 0.6), restarts=3, seed=1)
        assert res.points[0] == pytest.approx(0.5, abs=5e-3)
        assert res.objective.startswith("min_rate_at")
