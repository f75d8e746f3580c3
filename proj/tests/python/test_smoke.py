import json
import math

import pytest

import stepdelay as sd


def test_import_and_version():
    assert sd.__version__


def test_potential_constructors_and_config():
    step = sd.make_pure_step(0.0, 1.0)
    assert step(-1.0) == 0.0
    assert step(2.0) == 1.0
    assert step.kind() == "pure-step"

    smooth = sd.make_smooth_step(0.0, 1.0, 1.0)
    assert smooth(0.0) == pytest.approx(0.5)

    doc = step.serialize()
    back = sd.load_potential_config(doc)
    assert back(-3.0) == 0.0 and back(3.0) == 1.0

    with pytest.raises(sd.ConfigError):
        sd.load_potential_config('{"kind": "pure-step", "v_left": 0.0}')
    with pytest.raises(ValueError):
        sd.make_pure_step(1.0, 0.0)


def test_pure_step_s_matrix_matches_matching_formulas():
    step = sd.make_pure_step(0.0, 1.0)
    p = sd.s_matrix_at(step, 2.0)
    kl, kr = math.sqrt(2.0), 1.0
    assert p.channels == 2
    assert abs(p.s_rl - 2.0 * math.sqrt(kl * kr) / (kl + kr)) < 1e-8
    assert abs(p.s_ll - (kl - kr) / (kl + kr)) < 1e-8
    assert p.unitarity_defect < 1e-9

    one = sd.s_matrix_at(step, 0.5)
    assert one.channels == 1
    assert abs(abs(one.s_ll) - 1.0) < 1e-9


def test_sweep_unitarity_and_csv():
    pot = sd.make_smooth_step(0.0, 1.0, 1.0)
    energies = sd.linspace(1.2, 3.0, 32)
    data = sd.scattering_sweep(pot, energies, threads=2)
    assert max(p.unitarity_defect for p in data.s) < 1e-6
    assert max(abs(p.s_rl - p.s_lr) for p in data.s) < 1e-6
    csv = data.to_csv()
    assert csv.startswith("E,")
    assert len(csv.splitlines()) == len(energies) + 1
    assert len(data.ew_points()) > 0


def test_packet_and_spectral_norms():
    grid = sd.SpatialGrid(2048, 0.5)
    pk = sd.make_admissible_packet(0.0, 1.4, 5.0, [(1.5, 2.5)], 0.0, 1.0, grid)
    assert pk.state.norm() == pytest.approx(1.0, abs=1e-10)
    assert pk.state.norm_p() == pytest.approx(1.0, abs=1e-10)
    assert pk.leakage < 1e-6

    e_grid = pk.default_e_grid(512)
    rep = sd.to_in_representation(pk.state, 0.0, 1.0, e_grid)
    assert rep.norm() == pytest.approx(1.0, abs=1e-6)


def test_apply_s_preserves_norm_and_ew_vanishes_for_free():
    grid = sd.SpatialGrid(2048, 0.5)
    pk = sd.make_admissible_packet(0.0, 1.4, 5.0, [(1.5, 2.5)], 0.0, 1.0, grid)
    e_grid = pk.default_e_grid(512)

    bump = sd.make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0)
    data = sd.scattering_sweep(bump, e_grid)
    rep = sd.to_in_representation(pk.state, 0.0, 1.0, e_grid)
    out = sd.apply_s(rep, data)
    assert out.norm() == pytest.approx(rep.norm(), abs=1e-6)

    free = sd.make_pure_step(0.0, 0.0)
    pk0 = sd.make_admissible_packet(0.0, 1.4, 5.0, [(1.5, 2.5)], 0.0, 0.0, grid)
    e0 = pk0.default_e_grid(512)
    data0 = sd.scattering_sweep(free, e0)
    rep0 = sd.to_in_representation(pk0.state, 0.0, 0.0, e0)
    assert abs(sd.ew_expectation(rep0, data0)) < 1e-10


def test_channel_evolution_is_unitary():
    grid = sd.SpatialGrid(2048, 0.5)
    pk = sd.make_admissible_packet(0.0, 1.4, 5.0, [(1.5, 2.5)], 0.0, 1.0, grid)
    moved = sd.evolve_channel(pk.state, 0.0, 7.5)
    assert moved.norm() == pytest.approx(1.0, abs=1e-12)
    # the packet moves right at roughly 2 p
    assert moved.window_mass(10.0, 40.0) > pk.state.window_mass(10.0, 40.0)


def test_run_config_writes_artifacts(tmp_path):
    config = {
        "experiment": "sweep",
        "potential": {"kind": "pure-step", "v_left": 0.0, "v_right": 1.0},
        "sweep": {"e_min": 1.2, "e_max": 2.0, "points": 12},
        "output_dir": str(tmp_path / "out"),
    }
    files = sd.run_config(json.dumps(config))
    assert "scattering.csv" in files
    assert (tmp_path / "out" / "MANIFEST.json").exists()
    manifest = json.loads((tmp_path / "out" / "MANIFEST.json").read_text())
    assert any(f["name"] == "scattering.csv" for f in manifest["files"])
