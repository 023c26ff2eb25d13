import numpy as np
import pytest
from conftest import central_fd, rel_err, small_F, vec3
from hypothesis import given
from hypothesis import strategies as st

from polyconvex_ee import icnn
from polyconvex_ee.constitutive import (COMPRESSIBLE, FULL_F_SELECTORS, INCOMPRESSIBLE, SELECTORS,
                                        ConstitutiveModel, DirectModel, ScaledState, consistent_V, energy,
                                        energy_on_V, load_model, pvol, response, save_model, scale,
                                        stress_and_field, unscale)
from polyconvex_ee.invariants import evaluate
from polyconvex_ee.tensors import random_deformation, random_rotation


def constant_model(selector, c):
    m = ConstitutiveModel.create(selector, hidden=(4,), seed=0)
    p = m.params.with_arrays([np.zeros_like(a) for a in m.params.arrays()])
    p.biases[-1][:] = c
    return m.with_params(p)


def test_pvol_examples():
    for tag in (COMPRESSIBLE, INCOMPRESSIBLE):
        v, d, _ = pvol(1.0, tag, 3.0)
        assert v == 0.0 and d == 0.0
    assert pvol(2.0, COMPRESSIBLE, 1.0)[0] == pytest.approx(0.25, abs=1e-15)
    with pytest.raises(ValueError):
        pvol(0.0, COMPRESSIBLE, 1.0)
    with pytest.raises(ValueError):
        pvol(1.0, "unknown", 1.0)


@given(st.floats(0.2, 5.0), st.sampled_from([COMPRESSIBLE, INCOMPRESSIBLE]))
def test_pvol_derivatives_and_convexity(J, tag):
    h = 1e-6 * J
    v, d, dd = pvol(J, tag, 2.0)
    assert d == pytest.approx((pvol(J + h, tag, 2.0)[0] - pvol(J - h, tag, 2.0)[0]) / (2 * h), rel=1e-7, abs=1e-9)
    assert dd == pytest.approx((pvol(J + h, tag, 2.0)[1] - pvol(J - h, tag, 2.0)[1]) / (2 * h), rel=1e-7, abs=1e-7)
    assert dd > 0.0


def test_constant_core():
    for sel in SELECTORS:
        m = constant_model(sel, 1.25)
        F = np.diag([2.0, 0.5, 1.0])  # det 1, so the volumetric term vanishes too
        assert energy(m, F, np.array([0.3, 0.0, 1.0])) == pytest.approx(1.25, abs=1e-15)
        P, e0 = stress_and_field(m, F, np.array([0.3, 0.0, 1.0]))
        assert np.max(np.abs(P)) <= 1e-15 and np.max(np.abs(e0)) == 0.0


def test_energy_recomposes_by_hand(rng):
    m = ConstitutiveModel.create("ti", hidden=(6, 6), seed=3)
    F = random_deformation(rng, 5)
    d0 = rng.standard_normal((5, 3))
    x = evaluate(SELECTORS["ti"][0], F, d0).values
    ref = icnn.forward(m.params, x)[:, 0] + pvol(np.linalg.det(F), COMPRESSIBLE, 25.0)[0]
    assert np.allclose(energy(m, F, d0), ref, rtol=1e-13)


@pytest.mark.parametrize("selector", list(SELECTORS))
def test_stress_and_field_are_energy_gradients(selector, rng):
    m = ConstitutiveModel.create(selector, hidden=(8, 8), seed=1)
    F = random_deformation(rng, 20)
    d0 = rng.standard_normal((20, 3))
    P, e0 = stress_and_field(m, F, d0)
    for n in range(20):
        fP = central_fd(lambda X: energy(m, X, d0[n]), F[n])
        fe = central_fd(lambda x: energy(m, F[n], x), d0[n])
        assert rel_err(fP, P[n]) <= 1e-6 and rel_err(fe, e0[n]) <= 1e-6


@pytest.mark.parametrize("selector", list(SELECTORS))
def test_objectivity_and_angular_momentum(selector, rng):
    m = ConstitutiveModel.create(selector, hidden=(8,), seed=2)
    F = random_deformation(rng, 100)
    d0 = rng.standard_normal((100, 3))
    Q = random_rotation(rng, 100)
    a, b = energy(m, F, d0), energy(m, Q @ F, d0)
    assert np.max(np.abs(a - b) / np.maximum(1.0, np.abs(a))) <= 1e-12
    P, _ = stress_and_field(m, F, d0)
    tau = F @ np.swapaxes(P, 1, 2)
    assert np.max(np.abs(tau - np.swapaxes(tau, 1, 2))) <= 1e-9


@pytest.mark.parametrize("selector", list(SELECTORS))
def test_consistent_V_reproduces_energy(selector, rng):
    m = ConstitutiveModel.create(selector, hidden=(8,), seed=4)
    F = random_deformation(rng, 30)
    d0 = rng.standard_normal((30, 3))
    assert np.allclose(energy_on_V(m, *consistent_V(F, d0)), energy(m, F, d0), rtol=1e-13)


def _random_V(rng, n):
    F = random_deformation(rng, n, 0.5)
    H = random_deformation(rng, n, 0.5)
    return F, H, rng.uniform(0.3, 2.5, n), rng.standard_normal((n, 3)), rng.standard_normal((n, 3))


@pytest.mark.parametrize("selector", FULL_F_SELECTORS)
def test_midpoint_convexity_on_V(selector, rng):
    m = ConstitutiveModel.create(selector, hidden=(8, 8), seed=5)
    V1, V2 = _random_V(rng, 1000), _random_V(rng, 1000)
    mid = energy_on_V(m, *[(a + b) / 2 for a, b in zip(V1, V2)])
    assert np.max(mid - 0.5 * (energy_on_V(m, *V1) + energy_on_V(m, *V2))) <= 1e-12


def test_negated_weight_breaks_midpoint_convexity(rng):
    m = ConstitutiveModel.create("iso_compressible", hidden=(8,), seed=6)
    p = m.params.copy()
    p.weights[-1][0, int(np.argmax(p.weights[-1][0]))] = -10.0
    bad = m.with_params(p)
    V1, V2 = _random_V(rng, 1000), _random_V(rng, 1000)
    mid = energy_on_V(bad, *[(a + b) / 2 for a, b in zip(V1, V2)])
    assert np.max(mid - 0.5 * (energy_on_V(bad, *V1) + energy_on_V(bad, *V2))) > 1e-6


def test_isochoric_invariant_convex_near_identity(rng):
    ib1 = lambda F: evaluate(["Ib1"], F, np.zeros(3)).values[..., 0]  # noqa: E731
    A = np.eye(3) + 0.3 * rng.uniform(-1, 1, (1000, 3, 3)) / 3.0
    B = np.eye(3) + 0.3 * rng.uniform(-1, 1, (1000, 3, 3)) / 3.0
    assert np.max(ib1(0.5 * (A + B)) - 0.5 * (ib1(A) + ib1(B))) <= 1e-12


def test_rejects_bad_configuration():
    m = ConstitutiveModel.create("ti", seed=0)
    with pytest.raises(ValueError):
        ConstitutiveModel("iso_compressible", m.params)
    with pytest.raises(ValueError):
        ConstitutiveModel.create("ti", alpha=0.0)
    with pytest.raises(ValueError):
        energy(m, np.diag([1.0, 1.0, -1.0]), np.zeros(3))


def test_scaling_examples():
    s = ScaledState(np.eye(3), np.array([2.0, 0.0, 0.0]), np.eye(3) * 4.0, np.array([1.0, 0.0, 0.0]))
    same = scale(s, 1.0, 1.0)
    assert np.array_equal(same.d0, s.d0) and np.array_equal(same.P, s.P) and np.array_equal(same.e0, s.e0)
    h = scale(s, 4.0, 1.0)
    assert np.array_equal(h.d0, [1.0, 0.0, 0.0]) and np.array_equal(h.P, np.eye(3))
    assert np.array_equal(h.e0, [2.0, 0.0, 0.0])
    with pytest.raises(ValueError):
        scale(s, 0.0, 1.0)


@given(vec3, st.floats(0.01, 100.0), st.floats(0.01, 100.0))
def test_scaling_round_trip(d0, mu1, eps1):
    s = ScaledState(np.eye(3), d0, np.outer(d0, d0), -d0)
    r = unscale(scale(s, mu1, eps1), mu1, eps1)
    for a, b in [(r.d0, s.d0), (r.P, s.P), (r.e0, s.e0)]:
        assert np.max(np.abs(a - b)) <= 1e-15 * max(1.0, float(np.max(np.abs(b))))


@given(small_F, vec3)
def test_checkpoint_round_trip(tmp_path_factory, F, d0):
    path = tmp_path_factory.mktemp("ckpt") / "m.json"
    for m in (ConstitutiveModel.create("cubic", hidden=(5,), seed=9), DirectModel.create((6,), seed=9)):
        save_model(m, path)
        back = load_model(path)
        assert type(back) is type(m)
        a, b = response(m, F, d0), response(back, F, d0)
        assert np.array_equal(a[0], b[0]) and np.array_equal(a[1], b[1])


def test_direct_model_shapes(rng):
    m = DirectModel.create(seed=0)
    P, e0 = response(m, random_deformation(rng, 4), rng.standard_normal((4, 3)))
    assert P.shape == (4, 3, 3) and e0.shape == (4, 3)
