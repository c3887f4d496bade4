import math

import numpy as np
import pytest

import speclab


def test_domain_and_hamiltonian():
    dom = speclab.Domain(1, 2, 4)
    assert dom.size == 16
    assert dom.volume == 4.0
    assert dom.cube_count == 4
    h = speclab.hamiltonian(dom, kappa=1.0, master_seed=3, realization=0)
    assert h.shape == (16, 16)
    assert np.allclose(h, h.T)
    lap = speclab.laplacian(dom)
    omegas = np.array(speclab.disorder(dom, 3, 0))
    assert np.all((omegas >= 0) & (omegas <= 1))
    # Potential is omega_k on cube k.
    pot = np.diag(h - lap)
    assert np.allclose(pot, np.repeat(omegas, 4))


def test_bad_domain_raises_config_error():
    with pytest.raises(speclab.ConfigError):
        speclab.Domain(1, 2, 4, bc="robin")
    with pytest.raises(ValueError):
        speclab.Domain(0, 2, 4)


def test_constants():
    c1 = speclab.constants(1, 0.1)
    c2 = speclab.constants(2, 0.1)
    pi2 = math.pi**2
    assert c1["E0"] == pytest.approx(0.5 * pi2 / (2 * pi2 + 1), abs=1e-12)
    assert c2["E0"] == pytest.approx(0.45400, abs=1e-4)
    assert c2["c_bd"] == pytest.approx(2.5650, abs=1e-4)
    with pytest.raises(ValueError, match="E0"):
        speclab.constants(1, 0.3)


def test_spectral_average_scalar_case():
    fam = speclab.Family(np.zeros((1, 1)), np.ones(1))
    # H_w = w: the eigenvalue sweeps I = [0.2, 0.5] within [0, 1].
    val = speclab.spectral_average(fam, np.ones(1), 0.2, 0.5, 0.0, 1.0)
    assert val == pytest.approx(0.3, abs=1e-10)


def test_averaging_bound_and_full_line():
    fam = speclab.random_family(11, 0, 8, 3)
    rng = np.random.default_rng(0)
    phi = rng.normal(size=8)
    phi /= np.linalg.norm(phi)
    support = np.asarray(fam.coupling) > 0
    bound = 0.7 * np.sum(phi[support] ** 2)
    lhs = speclab.spectral_average(fam, phi, -0.2, 0.5, -1.0, 1.0)
    assert lhs <= bound + 1e-6
    full = speclab.spectral_average_full_line(fam, phi, -0.2, 0.5)
    assert full["value"] == pytest.approx(full["expected"], rel=1e-4)
    assert full["expected"] == pytest.approx(bound, rel=1e-12)


def test_crossings_are_eigenvalues():
    fam = speclab.random_family(5, 1, 6, 2)
    energy = float(np.linalg.eigvalsh(fam.base)[2]) + 0.05
    for w in speclab.crossings(fam, energy):
        ev = np.linalg.eigvalsh(fam.at(w))
        assert np.min(np.abs(ev - energy)) < 1e-8


def test_spectral_shift_routes():
    fam = speclab.random_family(2, 0, 8, 2)
    ev = np.linalg.eigvalsh(fam.at(0.0))
    r = speclab.spectral_shift(fam, float(ev[3]) + 0.3, 0.0, 1.5)
    assert r["routes_agree"]
    assert r["bound_holds"]
    if not r["unstable"]:
        assert r["limit"] == pytest.approx(r["xi_trace"], abs=1e-3)
    ev1 = np.linalg.eigvalsh(fam.at(0.0))
    ev2 = np.linalg.eigvalsh(fam.at(1.5))
    assert speclab.ssf_trace_difference(ev1, ev2, r["energy"]) == r["xi_trace"]


def test_ldos_is_deterministic_across_workers():
    dom = speclab.Domain(1, 2, 4)
    a = speclab.ldos_measure(dom, 0.0, 2.0, 64, master_seed=9, workers=1)
    b = speclab.ldos_measure(dom, 0.0, 2.0, 64, master_seed=9, workers=3)
    assert a == b
    values, errs = speclab.ldos_function(dom, [0.5, 1.0], 0.1, 64, master_seed=9)
    assert len(values) == 2 and all(e >= 0 for e in errs)


def test_run_small_suite(tmp_path):
    cfg = {
        "suite": "wegner",
        "domain": {"d": 1, "L": 2, "m": 4},
        "n_samples": 50,
        "master_seed": 1,
        "output_dir": str(tmp_path),
        "wegner": {"interval": [0.1, 0.6], "kappas": [1.0]},
    }
    summary = speclab.run(cfg, workers=1)
    assert summary["passed"]
    assert (tmp_path / "wegner.csv").exists()
    assert (tmp_path / "summary.json").exists()
    with pytest.raises(speclab.ConfigError):
        speclab.run({"suite": "wegner", "bogus": 1})
