"""Diagnostics: splits, concentration radii, virial series, exponent fits."""

import numpy as np
import pytest

from critwave import analysis
from critwave.errors import DegenerateInputError, InvalidParameterError
from critwave.ground_state import GroundStateParams, energy, eval_w, w_constants, w_field
from critwave.mesh import FieldState, RadialMesh
from critwave import solver


BUMP = {"amp": 0.3, "sigma": 1.0, "center": 3.0}


@pytest.fixture(scope="module")
def bump_run():
    cfg = solver.RunConfig(
        mesh_h=0.02, rmax=10.0, t_end=1.0, family="bump", params=BUMP, output_every=0.05
    )
    return solver.run(cfg)


class TestConcentrationRadii:
    def test_scaling_covariance(self):
        # mu and lambda1 scale linearly with the concentration scale of W
        radii = {}
        for lam in (0.5, 0.25):
            mesh = RadialMesh.uniform(0.01, 100.0)
            state = w_field(mesh, GroundStateParams(lam=lam))
            radii[lam] = analysis.concentration_radii(state)
        assert radii[0.25].mu == pytest.approx(0.5 * radii[0.5].mu, rel=1e-3)
        # nu sees the truncated far tail of W, so covariance is O(lam/rmax)
        assert radii[0.25].nu == pytest.approx(0.5 * radii[0.5].nu, rel=2e-2)

    def test_unattainable_returns_none(self):
        mesh = RadialMesh.uniform(0.05, 10.0)
        tiny = FieldState.from_u(mesh, 1e-3 * np.exp(-mesh.nodes**2), np.zeros(mesh.nodes.size))
        radii = analysis.concentration_radii(tiny)
        assert radii.mu is None and radii.lambda1 is None

    def test_nu_trivial_when_below_half(self):
        mesh = RadialMesh.uniform(0.05, 10.0)
        tiny = FieldState.from_u(mesh, 1e-3 * np.exp(-mesh.nodes**2), np.zeros(mesh.nodes.size))
        assert analysis.concentration_radii(tiny).nu == 0.0


class TestSignProjection:
    def test_sign_tracks_iota(self):
        mesh = RadialMesh.uniform(0.005, 40.0)
        plus = w_field(mesh, GroundStateParams(lam=0.3, iota=1))
        minus = w_field(mesh, GroundStateParams(lam=0.3, iota=-1))
        assert analysis.sign_projection(plus, 0.3) > 0
        assert analysis.sign_projection(minus, 0.3) < 0

    def test_rejects_bad_scale(self):
        mesh = RadialMesh.uniform(0.05, 10.0)
        with pytest.raises(InvalidParameterError):
            analysis.sign_projection(w_field(mesh), 0.0)


class TestVirial:
    def test_rhs_vanishes_on_ground_state(self):
        # kinetic - gradient + potential = 0 for (W, 0), by the stationarity
        # identity; full-space quadrature values
        c = w_constants(3)
        assert abs(0.0 - c["grad_norm_sq"] + c["potential_w"]) < 1e-6

    def test_defect_small_on_smooth_run(self, bump_run):
        vs = analysis.virial_series(bump_run.snapshots)
        assert np.max(vs.z1_defect[2:-2]) < 0.2
        assert np.allclose(vs.Z, 0.5 * vs.z1 + vs.z2)

    def test_needs_three_snapshots(self, bump_run):
        with pytest.raises(InvalidParameterError):
            analysis.virial_series(bump_run.snapshots[:2])


class TestDFunctional:
    def test_zero_on_mesh_consistent_w(self):
        mesh = RadialMesh.uniform(0.02, 15.0)
        state = w_field(mesh)
        ref = energy(state).gradient_sq
        assert analysis.d_functional(state, grad_ref=ref) == pytest.approx(0.0, abs=1e-12)

    def test_default_reference_is_full_space(self):
        mesh = RadialMesh.uniform(0.02, 15.0)
        state = w_field(mesh)
        # truncation makes the mesh gradient fall below the full-space norm
        assert analysis.d_functional(state) < 0.0


class TestGRandTails:
    def test_g_r_series_shapes(self, bump_run):
        g = analysis.g_r_series(bump_run.snapshots, 4.0)
        n = len(bump_run.snapshots)
        assert g.g.shape == g.d.shape == g.defect.shape == (n,)

    def test_rho_tail_monotone_in_radius(self, bump_run):
        r_small = analysis.rho_tail(bump_run.snapshots, 2.0)
        r_large = analysis.rho_tail(bump_run.snapshots, 6.0)
        assert r_large <= r_small + 1e-12


class TestSingularPart:
    def test_exterior_agreement_at_restart(self, bump_run):
        split = analysis.singular_part(bump_run.snapshots, T_est=3.0)
        u0 = bump_run.snapshots[0]
        v0 = split.v_fields[0]
        mask = u0.mesh.nodes > split.cone_radius + split.margin
        assert np.max(np.abs(u0.h[mask] - v0.h[mask])) == 0.0

    def test_split_is_additive(self, bump_run):
        split = analysis.singular_part(bump_run.snapshots, T_est=3.0)
        for u, v, a in zip(bump_run.snapshots, split.v_fields, split.a_fields):
            assert np.allclose(u.h, v.h + a.h, atol=1e-12)

    def test_rejects_past_t_est(self, bump_run):
        with pytest.raises(InvalidParameterError):
            analysis.singular_part(bump_run.snapshots, T_est=-1.0)


class TestConeEnergy:
    def test_vanishes_after_t_est(self, bump_run):
        times, vals = analysis.cone_energy(bump_run.snapshots, T_est=0.5)
        assert np.all(vals[times >= 0.5] == 0.0)
        assert vals[0] > 0.0


class TestFitExponent:
    def test_exact_power_law(self):
        T = 2.0
        ts = np.linspace(0.0, 1.9, 60)
        for nu in (0.0, 0.6, 2.3):
            lam = 0.7 * (T - ts) ** (1.0 + nu)
            fit = analysis.fit_exponent(ts, lam, T)
            assert fit.nu_hat == pytest.approx(nu, abs=1e-6)
            assert fit.r_squared > 1.0 - 1e-12

    def test_constant_series_not_concentrating(self):
        ts = np.linspace(0.0, 1.0, 30)
        fit = analysis.fit_exponent(ts, np.full(30, 0.4), 2.0)
        assert fit.slope == pytest.approx(0.0, abs=1e-12)
        assert fit.nu_hat == pytest.approx(-1.0)
        assert not fit.concentrating

    def test_too_few_points(self):
        with pytest.raises(DegenerateInputError):
            analysis.fit_exponent(np.arange(5.0), np.ones(5), 10.0)

    def test_nan_points_dropped(self):
        T = 1.0
        ts = np.linspace(0.0, 0.9, 40)
        lam = (T - ts) ** 2
        lam[::3] = np.nan
        fit = analysis.fit_exponent(ts, lam, T)
        assert fit.nu_hat == pytest.approx(1.0, abs=1e-9)


class TestSeries:
    def test_columns_and_csv(self, bump_run, tmp_path):
        series = analysis.diagnostics_series(bump_run, ball_radii=(2.0,), g_radii=(4.0,))
        assert series.columns[:11] == ["t", "E", "sup_u", "mu", "nu", "lambda1", "f", "z1", "z2", "Z", "d"]
        assert "E_ball_2" in series.columns and "g_4" in series.columns
        out = tmp_path / "series.csv"
        series.to_csv(out)
        header = out.read_text().splitlines()[0]
        assert header == ",".join(series.columns)

    def test_stationary_w_d_column_near_zero(self):
        cfg = solver.RunConfig(
            mesh_h=0.02, rmax=12.0, t_end=0.5, family="perturbed_w",
            params={"lambda": 1.0, "eps": 0.0}, output_every=0.1,
        )
        rep = solver.run(cfg)
        series = analysis.diagnostics_series(rep)
        assert np.max(np.abs(series.data["d"])) < 1e-2
