"""Smoke test for the pcf_fwm extension module.

Build and install with
    pip install --no-build-isolation ./crates/python
then run
    python python/smoke_test.py
"""

import math

import pcf_fwm


def main() -> None:
    config = pcf_fwm.Config.paper()
    assert pcf_fwm.Config.from_toml(config.to_toml()).to_toml() == config.to_toml()
    try:
        pcf_fwm.Config.from_toml(config.to_toml().replace("hole_ratio = 0.4", "hole_ratio = 1.2"))
    except pcf_fwm.PcfFwmError as e:
        assert "fibre.hole_ratio" in str(e)
    else:
        raise AssertionError("invalid hole ratio accepted")

    source = pcf_fwm.Source(config)
    assert abs(source.zdw_nm - 1058.0) < 0.1
    signal, idler = source.pair_nm
    assert signal < 1029.0 < idler
    s, i, dk = source.phasematch(1029.0)
    assert abs(2 / 1029.0 - 1 / s - 1 / i) < 1e-12 and abs(dk) < 1e-3
    n_eff, beta, beta1, beta2, d = source.dispersion(1058.0)
    assert 1.3 < n_eff < 1.46 and abs(d) < 1.0
    print(f"pair {signal:.2f} / {idler:.2f} nm, walk-off {source.walkoff_length(signal):.3f} m")

    coefficients, purity, k = source.schmidt(grid=128)
    assert math.isclose(sum(c * c for c in coefficients), 1.0, rel_tol=1e-9)
    assert math.isclose(purity * k, 1.0, rel_tol=1e-9)
    print(f"purity {purity:.3f}, Schmidt number {k:.2f}")

    p = pcf_fwm.pair_distribution(0.3, 8)
    assert math.isclose(p[1] / p[0], 0.09, rel_tol=1e-12)

    h = source.simulate(seed=42, pulses=10_000_000)
    again = source.simulate(seed=42, pulses=10_000_000)
    assert h.counts == again.counts
    assert len(h.counts) == len(h.delays_ns) and h.car > 1
    print(h)

    pairs, per_mw = source.infer_generated_rate(9600.0, 480.0)
    assert math.isclose(per_mw * 150.0, pairs, rel_tol=1e-12)
    print(f"generated {pairs:.3e} pairs/s ({per_mw:.3e} per mW)")
    print("smoke test passed")


if __name__ == "__main__":
    main()
