#!/usr/bin/env python3
"""Smoke test for the infoflow_py extension module.

Builds expectations from the closed-form Gaussian values and a couple of
inequality checks. Run after `cargo build -p infoflow-py`:

    python3 python/smoke_test.py [--release]
"""

import math
import shutil
import sys
import tempfile
from pathlib import Path


def import_extension():
    repo = Path(__file__).resolve().parent.parent
    profile = "release" if "--release" in sys.argv[1:] else "debug"
    built = repo / "target" / profile / "libinfoflow_py.so"
    if not built.exists():
        sys.exit(
            f"{built} not found - run `cargo build -p infoflow-py"
            + (" --release" if profile == "release" else "")
            + "` first"
        )
    stage = Path(tempfile.mkdtemp(prefix="infoflow_py_"))
    shutil.copy2(built, stage / "infoflow_py.so")
    sys.path.insert(0, str(stage))
    import infoflow_py

    return infoflow_py


def approx(a, b, tol):
    assert abs(a - b) <= tol, f"{a} != {b} (tol {tol})"


def main():
    iflow = import_extension()
    checks = 0

    # Gaussian closed forms.
    oracle = iflow.gaussian_oracle(1.0, 1)
    assert (oracle.entropy_power, oracle.fisher, oracle.j, oracle.k) == (1.0, 1.0, 1.0, 2.0)
    checks += 1

    # A record along the flow matches the oracle at the summed variance.
    d = iflow.Density("gaussian:mu=0,sigma2=1")
    rec = d.record(t=1.0)
    approx(rec.entropy_power, 2.0, 1e-6)
    approx(rec.fisher, 0.5, 1e-6)
    approx(rec.j, 0.25, 1e-6)
    approx(rec.k, 0.25, 1e-4)
    approx(rec.entropy, 0.5 * math.log(2 * math.pi * math.e * 2.0), 1e-6)
    checks += 1

    # Log-concavity: gaussian yes (curvature -1), separated mixture no.
    verdict, worst, _ = d.is_log_concave()
    assert verdict and abs(worst + 1.0) < 1e-8
    mix = iflow.Density("mix:0.5*gaussian:mu=-3,sigma2=1+0.5*gaussian:mu=3,sigma2=1")
    assert not mix.is_log_concave()[0]
    checks += 1

    # Dilation scaling: I(aX) = I(X)/a^2.
    logi = iflow.Density("logistic:scale=1")
    approx(logi.dilate(2.0).fisher(), logi.fisher() / 4.0, 1e-7)
    checks += 1

    # Evolution: variance additivity through a product density.
    prod = iflow.Density("product:gaussian:sigma2=1|gaussian:sigma2=2")
    assert prod.dim() == 2
    rec2 = prod.record(t=0.5)
    assert rec2.p >= 1.0 - 1e-6
    checks += 1

    # Cross term with the heat kernel: H(X, Z_t) = I(X)/t.
    t = 0.4
    zt = iflow.Density(f"gaussian:mu=0,sigma2={t}")
    approx(iflow.cross_term(logi, zt), logi.fisher() / t, 1e-6)
    checks += 1

    # Concavity of the reciprocal of Fisher information: equality on the
    # Gaussian, strict for a smoothed gamma.
    reports = iflow.run_check("fisher_concavity", d, [0.3, 0.7])
    conc = [r for r in reports if r["name"] == "fisher_concavity"][0]
    assert conc["verdict"] == "equality", conc
    gamma = iflow.Density("gamma:shape=2,scale=1")
    reports = iflow.run_check("fisher_concavity", gamma, [0.3, 0.7])
    conc = [r for r in reports if r["name"] == "fisher_concavity"][0]
    assert conc["verdict"] == "holds" and conc["min_slack"] > 0, conc
    checks += 1

    # Third derivative of the entropy power is nonnegative (certificate too).
    reports = iflow.run_check("third_derivative", gamma, [0.3, 0.7])
    r = reports[0]
    assert r["min_slack"] >= -r["err_gate"]
    assert all(c >= -1e-6 for c in r["certificate_series"])
    checks += 1

    # EPI on a pair: equality for Gaussians, strict for logistic.
    r = iflow.run_check("epi", d, [], g=iflow.Density("gaussian:mu=0,sigma2=2"))[0]
    assert r["verdict"] == "equality", r
    r = iflow.run_check("epi", logi, [], g=logi)[0]
    assert r["min_slack"] > 0
    checks += 1

    # Optimal alpha: in [0,1], gap shrinks ~quadratically in t.
    a1, gap1 = iflow.optimal_alpha(d, 1e-2)
    _, gap2 = iflow.optimal_alpha(d, 5e-3)
    assert 0.0 <= a1 <= 1.0
    assert 2.5 <= gap1 / gap2 <= 5.5
    checks += 1

    # Errors surface as Python exceptions.
    try:
        iflow.Density("gamma:shape=0.5,scale=1")
        raise AssertionError("non-log-concave parameters must be rejected")
    except ValueError:
        pass
    try:
        iflow.Density("laplace:scale=1").fisher()
        raise AssertionError("Fisher information of a kinked density at t=0 must fail")
    except RuntimeError:
        pass
    checks += 1

    assert "shape >= 1" in iflow.families()
    checks += 1

    print(f"smoke test: PASS ({checks} checks)")


if __name__ == "__main__":
    main()
