"""Smoke test of the Python bindings: python python/smoke_test.py"""

import math
import pathlib
import tempfile

import numpy as np

import polyscatter as ps

ROOT = pathlib.Path(__file__).resolve().parent.parent

SMALL = """
seed = 3

[grid]
d = 2
half_width = 1.0
n_points = 64

[model]
n = 2

[potential]
m1 = 2.0
m2 = 2.0
a1.bumps = [{ amplitude = 1.0, center = [0.0, 0.0], radius = 0.4 }]
a2.bumps = [{ amplitude = 0.5, center = [0.0, 0.0], radius = 0.3 }]

[solver]
born_order = 1

[sweep]
q = 4.0
kappa_step = 0.5
tau_count = 6
direction_count = 8

[inverse]
grid_points = 32
"""


def main():
    # special functions and the Green function
    h = ps.hankel0(1 + 0j)
    assert abs(h - complex(0.7651976865579666, 0.08825696421567696)) < 1e-12
    assert abs(ps.hankel0(1j).imag + 0.2680325) < 1e-6
    roots = ps.roots(2.0, 3)
    for k in roots:
        assert abs(k**6 - 64.0) < 1e-10
    g3 = ps.green(1.0, 1.0, 2, 3)
    assert abs(g3 - complex(-0.0068605, -0.0334811)) < 1e-6
    assert abs(ps.farfield_amplitude(1.0, 2, 3) + 1 / (8 * math.pi)) < 1e-15

    cfg = ps.Config.from_toml(SMALL)
    assert cfg.d == 2 and cfg.n == 2 and cfg.m == 2.0
    # [Q, 2Q + tau_max] = [4, 10.5] in steps of 0.5
    assert len(cfg.kappas()) == 14
    rho = ps.sample_potential(cfg)
    arr = np.array(rho.values()).reshape(rho.shape)
    assert arr.shape == (64, 64) and np.isfinite(arr).all()
    again = np.array(ps.sample_potential(cfg).values())
    assert np.array_equal(arr.ravel(), again), "sampling is not deterministic"

    u, residual, iterations = ps.forward(cfg, rho, 4.0, [1.0, 0.0], tol=1e-10, born_order="full")
    assert residual <= 1e-10, residual
    assert iterations >= 1

    sweep = ps.sweep(cfg, rho)
    est = ps.estimate(cfg, sweep)
    assert len(est) == len(cfg.directions) * len(cfg.taus)
    rec = ps.reconstruct(cfg, est)
    assert len(rec["a_c"]) == 32 * 32
    assert math.isfinite(rec["errors"]["l2_error_c"])

    with tempfile.TemporaryDirectory() as tmp:
        path = pathlib.Path(tmp) / "rho.psfd"
        rho.write(str(path), "potential", cfg)
        back = np.array(ps.Field.read(str(path)).values())
        assert np.max(np.abs(back - arr.ravel())) <= 1e-6 * np.max(np.abs(arr))
        summary = ps.reproduce(cfg, tmp)
        assert summary["config_hash"] == cfg.hash
        report = ps.verify(cfg, tmp)
        assert report["pass"], report["invariants"]

    try:
        ps.Config.from_toml(SMALL.replace("m1 = 2.0", "m1 = 3.5"))
    except ValueError as e:
        assert "m1" in str(e)
    else:
        raise AssertionError("invalid order accepted")

    demo = ps.Config.load(str(ROOT / "configs" / "demo.toml"))
    print("demo config", demo, "warnings:", demo.warnings)
    print("python smoke test passed")


if __name__ == "__main__":
    main()
