#!/usr/bin/env python3
"""Smoke test for the pyqam extension module.

Run `cargo build -p qam-py` first, then `python3 python/smoke_test.py`.
The script stages the built shared library into a temp directory so the
import works without installing anything.
"""

import json
import shutil
import sys
import tempfile
from pathlib import Path


def locate_extension() -> Path:
    root = Path(__file__).resolve().parents[1]
    candidates = [
        root / "target" / profile / name
        for profile in ("debug", "release")
        for name in ("libpyqam.so", "libpyqam.dylib", "pyqam.dll")
    ]
    for candidate in candidates:
        if candidate.exists():
            return candidate
    sys.exit("pyqam extension not found; run `cargo build -p qam-py` first")


def import_pyqam():
    ext = locate_extension()
    stage = Path(tempfile.mkdtemp(prefix="pyqam-"))
    suffix = ".pyd" if ext.suffix == ".dll" else ".so"
    shutil.copy2(ext, stage / f"pyqam{suffix}")
    sys.path.insert(0, str(stage))
    import pyqam

    return pyqam


def main() -> None:
    qam = import_pyqam()
    print(f"pyqam {qam.__version__} loaded from {sys.path[0]}")

    # Generator algebra: catalog, round trip, idempotent mean.
    kinds = qam.Generator.kinds()
    assert "clayton" in kinds and len(kinds) == 9, kinds
    g = qam.Generator("clayton", [1.5])
    assert g.is_completely_monotone()
    t = 0.37
    assert abs(g.phi(g.phi_inv(t)) - t) <= 1e-12
    mean = qam.quasi_arithmetic_mean("gumbel", [3.0], [0.42, 0.42], weights=[0.5, 0.5])
    assert abs(mean - 0.42) <= 1e-12, mean

    # A space-time family from JSON: evaluation, validation, Gram report.
    model = qam.Model.from_json(
        json.dumps(
            {
                "family": "clayton",
                "sigma2": 1.0,
                "lambda1": 0.5,
                "lambda2": 1.0,
                "lambda3": 2.0,
                "dim": 3,
            }
        )
    )
    assert model.describe() == "space_time"
    assert model.dim() == 4
    assert abs(model.eval([0.0, 0.0, 0.0, 0.0]) - 1.0) <= 1e-15
    report = model.validate(case="b")
    assert report["passed"] is True, report

    points = [[0.1 * i, 0.05 * i, 0.2 * i, 0.1 * i] for i in range(6)]
    gram_report = model.gram_report(points)
    assert gram_report["psd"] and gram_report["n"] == 6, gram_report
    gram = model.gram(points)
    assert len(gram) == 6 and abs(gram[2][2] - 1.0) <= 1e-15
    assert gram[0][3] == gram[3][0]

    # Product-field simulation is deterministic in the seed.
    field = qam.Model.from_json(
        json.dumps(
            {
                "nu_s": [{"form": "power", "coeff": 1.0, "exponent": 1.0}],
                "nu_t": {"form": "power", "coeff": 1.0, "exponent": 1.0},
                "mixing": {"law": "point_mass", "location": 1.0},
                "variance": 1.0,
            }
        )
    )
    sims_a = field.simulate([[0.0, 0.0], [1.0, 0.0]], replicates=32, seed=7)
    sims_b = field.simulate([[0.0, 0.0], [1.0, 0.0]], replicates=32, seed=7)
    assert sims_a == sims_b and len(sims_a) == 32 and len(sims_a[0]) == 2

    # Nonstationary mixture: quadrature agrees with the closed form.
    stein = qam.Model.from_json(
        json.dumps(
            {
                "model": "stein",
                "sigma_field": {"form": "scalar_quadratic", "a": 1.0, "b": 0.1, "dim": 2},
                "shape": 1.5,
                "rate": 1.0,
            }
        )
    )
    s1, s2 = [0.1, 0.2], [0.4, 0.1]
    quad = stein.mixture_cov(s1, s2)
    closed = stein.mixture_cov(s1, s2, closed=True)
    assert abs(quad - closed) <= 1e-5 * max(1.0, abs(quad)), (quad, closed)

    # Bad specs surface as ValueError with a helpful message.
    try:
        qam.Model.from_json('{"family": "frobnicate"}')
    except ValueError as e:
        assert "clayton" in str(e), e
    else:
        raise AssertionError("unknown family accepted")

    print("smoke test passed: generators, spec models, gram/psd, simulate, mixtures")


if __name__ == "__main__":
    main()
