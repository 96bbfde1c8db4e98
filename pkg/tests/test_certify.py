import numpy as np
import pytest

from swobs import (
    BimodalSystem,
    ObserverSpec,
    certify_observer,
    certify_plant,
    certify_pwa_exact,
)
from swobs.certify import surface_points
from swobs.measures import MeasureKind

K1, KI = MeasureKind.L1, MeasureKind.LINF
BOX = [[-5.0, 5.0], [-5.0, 5.0]]


def test_pwa_exact_reference_gains(ex2):
    cert = certify_pwa_exact(ex2.observer(), K1)
    assert cert.verdict == "certified"
    assert cert.c1 == 1.0 and cert.c2 == 1.0 and cert.rate == 1.0
    assert cert.sliding_residual == 0.0
    assert cert.exact

    fast = certify_pwa_exact(ObserverSpec(ex2.system, [[1.5], [2.0]], [[1.5], [2.0]]), K1)
    assert fast.verdict == "certified" and fast.rate == 2.5

    bad = certify_pwa_exact(ObserverSpec(ex2.system, [[0.0], [0.0]], [[0.0], [0.0]]), K1)
    assert bad.verdict == "falsified"
    assert bad.c1 == -1.0  # mu1(A1) = 1


def test_sampled_matches_exact_on_pwa(ex2):
    obs = ex2.observer()
    exact = certify_pwa_exact(obs, K1)
    sampled = certify_observer(obs, K1, BOX, [[-10.0, 10.0]], [41, 41])
    assert abs(sampled.rate - exact.rate) <= 1e-12
    assert sampled.verdict == exact.verdict == "certified"


def test_nonlinear_observer_certificate(ex1):
    cert = certify_observer(ex1.observer(), K1, BOX, [[0.0, 25.0]], [41, 41])
    assert cert.verdict == "certified"
    assert abs(cert.rate - 4.0) <= 1e-9
    assert cert.sliding_residual <= 1e-9


def test_plant_certificates(ex1, ex2):
    good = certify_plant(ex1.system, K1, BOX, [41, 41])
    assert good.verdict == "certified" and good.c1 == 4.0 and good.c2 == 4.0

    bad = certify_plant(ex2.system, K1, BOX, [41, 41])
    assert bad.verdict == "falsified"
    assert bad.c1 == -1.0


def test_trivial_contracting_plant():
    sys = BimodalSystem.from_sources(2, ["-x1", "-x2"], ["-x1", "-x2"], "x1")
    cert = certify_plant(sys, K1, BOX, [21, 21])
    assert cert.verdict == "certified"
    assert cert.c1 == 1.0 and cert.c2 == 1.0
    assert cert.sliding_residual == 0.0  # zero jump matrix


def test_friction_observer_certificate(ex3):
    cert = certify_observer(ex3.observer(), KI, [[-2, 2], [-2, 2]], [[-2, 2]], [41, 41])
    assert cert.verdict == "certified"
    assert abs(cert.rate - 0.1) <= 1e-9
    assert cert.sliding_residual == 0.0
    assert cert.sliding_min == 0.0  # row max of the jump matrix is 0 everywhere


def test_grid_refinement_keeps_falsified(ex1, ex2):
    bad1 = ObserverSpec(ex1.system, [[-4.0], [0.0]], [[2.0], [0.0]])
    coarse = certify_observer(bad1, K1, BOX, [[0.0, 25.0]], [21, 21])
    fine = certify_observer(bad1, K1, BOX, [[0.0, 25.0]], [41, 41])
    assert coarse.verdict == "falsified" and fine.verdict == "falsified"
    assert fine.c1 <= coarse.c1 + 1e-12  # worst case over a superset of points

    bad2 = ObserverSpec(ex2.system, [[0.0], [0.0]], [[0.0], [0.0]])
    for grid in ([21, 21], [41, 41]):
        assert certify_observer(bad2, K1, BOX, [[-10, 10]], grid).verdict == "falsified"


def test_sliding_residual_falsifies(ex1):
    # gain jump of the wrong sign turns the surface term positive for large y
    obs = ObserverSpec(ex1.system, [[2.0], [0.0]], [[-2.0], [0.0]])
    cert = certify_observer(obs, K1, BOX, [[0.0, 25.0]], [41, 41])
    assert cert.sliding_residual > 1e-9
    assert cert.verdict == "falsified"
    assert cert.rate == 4.0  # mode conditions alone would have passed


def test_inconclusive_when_region_misses_one_side(ex1):
    cert = certify_observer(ex1.observer(), K1, [[1.0, 5.0], [-5.0, 5.0]],
                            [[0.0, 25.0]], [21, 21])
    assert cert.verdict == "inconclusive"
    assert cert.diagnostics


def test_surface_points_axis_aligned(ex1):
    pts = surface_points(ex1.system, BOX, [41, 41])
    assert len(pts) == 41
    assert np.allclose(pts[:, 0], 0.0, atol=1e-12)


def test_surface_points_bisected_curve():
    sys = BimodalSystem.from_sources(2, ["-x1", "-x2"], ["-x1", "-x2"], "x1^2 + x2^2 - 1")
    pts = surface_points(sys, [[-2.0, 2.0], [-2.0, 2.0]], [41, 41])
    assert len(pts) > 40
    assert np.max(np.abs([sys.h(p) for p in pts])) <= 1e-10


def test_pwa_exact_requires_pwa(ex1):
    with pytest.raises(TypeError):
        certify_pwa_exact(ex1.observer(), K1)


def test_pwa_exact_needs_region_when_surface_term_varies():
    A1 = [[-3.0, 0.0], [1.0, -3.0]]
    A2 = [[-3.0, 0.0], [0.0, -3.0]]  # A1 - A2 acts on the surface subspace
    sys = BimodalSystem.from_pwa(A1, [0, 0], A2, [0, 0], None, [0, 1], [1, 0])
    obs = ObserverSpec(sys, [[0.0], [0.0]], [[0.0], [0.0]])
    with pytest.raises(ValueError, match="sigma_region"):
        certify_pwa_exact(obs, K1)
    cert = certify_pwa_exact(obs, K1, sigma_region=[[-1, 1], [-1, 1]], sigma_grid=[11, 11])
    assert not cert.exact
    assert cert.verdict in ("certified", "falsified")


def test_certificate_serialization(ex2):
    cert = certify_pwa_exact(ex2.observer(), K1)
    text = cert.to_text()
    assert "certified" in text and "rate" in text
    row = cert.to_csv_row().split(",")
    header = cert.CSV_HEADER.split(",")
    assert len(row) == len(header)
    assert float(row[header.index("rate")]) == 1.0
