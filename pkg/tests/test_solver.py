"""Time-domain solver: configs, stepping, conservation, blow-up handling."""

import numpy as np
import pytest

from critwave.errors import InvalidConfigError
from critwave.ground_state import energy
from critwave.mesh import RadialMesh
from critwave.radial import gaussian_bump
from critwave import solver


BUMP = {"amp": 0.3, "sigma": 1.0, "center": 3.0}


class TestConfig:
    def test_defaults_valid(self):
        cfg = solver.RunConfig()
        assert cfg.mesh().is_uniform

    def test_cfl_bound(self):
        with pytest.raises(InvalidConfigError):
            solver.RunConfig(cfl=0.6)
        with pytest.raises(InvalidConfigError):
            solver.RunConfig(cfl=0.0)

    def test_json_and_keyvalue_agree(self, tmp_path):
        j = tmp_path / "c.json"
        j.write_text(
            '{"mesh": {"h": 0.05, "rmax": 8.0}, "t_end": 1.5,'
            ' "data": {"family": "bump", "amp": 0.2}}'
        )
        k = tmp_path / "c.cfg"
        k.write_text("mesh.h = 0.05\nmesh.rmax = 8.0\nt_end = 1.5\ndata.family = bump\ndata.amp = 0.2\n")
        assert solver.load_config(j) == solver.load_config(k)

    def test_unknown_key(self):
        with pytest.raises(InvalidConfigError):
            solver.RunConfig.from_dict({"mesh": {"h": 0.1, "rmax": 5.0}, "wrong": 1})

    def test_unknown_family(self):
        cfg = solver.RunConfig(family="nope")
        with pytest.raises(InvalidConfigError):
            solver.make_initial_data(cfg.mesh(), cfg.family, cfg.params)


class TestSnapshots:
    def test_roundtrip(self, tmp_path):
        mesh = RadialMesh.uniform(0.1, 5.0)
        state = solver.make_initial_data(mesh, "bump", BUMP)
        path = tmp_path / "snap.csv"
        solver.save_snapshot(state, path)
        back = solver.load_snapshot(path)
        assert np.array_equal(back.h, state.h)
        assert np.array_equal(back.hdot, state.hdot)


class TestRun:
    def test_linear_energy_conserved(self):
        cfg = solver.RunConfig(
            mesh_h=0.02, rmax=10.0, t_end=1.0, nonlinear=False, family="bump", params=BUMP
        )
        rep = solver.run(cfg)
        assert rep.outcome == "Completed"
        assert rep.energy_drift < 1e-3

    def test_determinism(self):
        cfg = solver.RunConfig(mesh_h=0.05, rmax=8.0, t_end=0.5, family="bump", params=BUMP)
        a, b = solver.run(cfg), solver.run(cfg)
        assert np.array_equal(a.snapshots[-1].h, b.snapshots[-1].h)
        assert np.array_equal(a.energies, b.energies)

    def test_outflow_absorbs_pulse(self):
        # an outgoing pulse should leave the domain with little reflection
        cfg = solver.RunConfig(
            mesh_h=0.01, rmax=6.0, t_end=12.0, nonlinear=False, family="bump",
            params={"amp": 0.5, "sigma": 0.5, "center": 3.0},
        )
        rep = solver.run(cfg)
        e0 = energy(rep.snapshots[0])
        e1 = energy(rep.snapshots[-1])
        start = 0.5 * (e0.gradient_sq + e0.kinetic_sq)
        end = 0.5 * (e1.gradient_sq + e1.kinetic_sq)
        assert end < 0.02 * start

    def test_blowup_detected(self):
        cfg = solver.RunConfig(
            mesh_h=0.02, rmax=6.0, t_end=5.0, family="near_w",
            params={"delta": 0.1, "lambda": 0.05, "r_cut": 2.0},
        )
        rep = solver.run(cfg)
        assert rep.outcome == "BlowUpDetected"
        assert rep.t_star is not None and 0.0 < rep.t_star < 5.0
        # the last stable state is retained for diagnostics
        assert rep.snapshots[-1].t == pytest.approx(rep.t_star)

    def test_finite_speed_small_leakage(self):
        cfg = solver.RunConfig(
            mesh_h=0.02, rmax=10.0, t_end=1.5, nonlinear=True, family="bump", params=BUMP
        )
        pert = gaussian_bump(0.05, 0.3, 1.0)
        leak, ts, leaks = solver.finite_speed_check(cfg, pert, rho=2.5)
        assert leak < 1e-4
        assert len(ts) == len(leaks) > 0

    def test_strichartz_monitor_positive(self):
        cfg = solver.RunConfig(mesh_h=0.05, rmax=8.0, t_end=0.5, family="bump", params=BUMP)
        rep = solver.run(cfg)
        assert solver.strichartz_monitor(rep) > 0.0
