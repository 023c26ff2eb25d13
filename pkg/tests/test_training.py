import math

import numpy as np
import pytest
from conftest import central_fd, rel_err
from hypothesis import given
from hypothesis import strategies as st

from polyconvex_ee import icnn
from polyconvex_ee.analytic import ti_response
from polyconvex_ee.constitutive import ConstitutiveModel, DirectModel, response
from polyconvex_ee.data import Dataset, LoadPath
from polyconvex_ee.sampling import SamplingPlan, build_ti_dataset, random_dev_directions, sample_stretch
from polyconvex_ee.training import (AdamState, FitProblem, TrainConfig, TrainingDiverged, adam_step, calibrate,
                                    mse_loss, path_weight, row_weights, train)


def one_row(P, e0=np.zeros(3), pid="p"):
    return LoadPath(pid, np.eye(3), np.zeros(3), P, e0)


def small_ti(seed=0):
    plan = SamplingPlan(n_dev_directions=2, dev_amplitudes=np.linspace(0.1, 0.6, 6), n_sphere_dirs=2,
                        d0_amplitudes=np.linspace(0.0, 2.0, 6), seed=seed)
    return build_ti_dataset(plan)


def test_path_weight_examples():
    assert path_weight(one_row(np.zeros((3, 3)))) == 1e-8
    assert path_weight(one_row(np.eye(3))) == pytest.approx(math.sqrt(3.0), rel=1e-15)
    with pytest.raises(ValueError):
        path_weight(LoadPath("e", np.zeros((0, 3, 3)), np.zeros((0, 3)), np.zeros((0, 3, 3)), np.zeros((0, 3))))


@given(st.floats(1e-3, 1e3), st.integers(0, 1000))
def test_path_weight_is_homogeneous(c, seed):
    rng = np.random.default_rng(seed)
    P = rng.standard_normal((4, 3, 3))
    p = LoadPath("p", np.repeat(np.eye(3)[None], 4, 0), np.zeros((4, 3)), P, np.zeros((4, 3)))
    q = LoadPath("q", p.F, p.d0, c * P, p.e0)
    assert path_weight(q) == pytest.approx(c * path_weight(p), rel=1e-13)


class Fixed:
    """Stand-in model returning the same prediction everywhere."""

    def __init__(self, P, e0):
        self.P, self.e0 = np.asarray(P), np.asarray(e0)


def _fixed_response(monkeypatch):
    import polyconvex_ee.training as tr
    monkeypatch.setattr(tr, "response", lambda m, F, d0: (np.broadcast_to(m.P, F.shape).copy(),
                                                          np.broadcast_to(m.e0, d0.shape).copy()))


def test_mse_single_term(monkeypatch):
    _fixed_response(monkeypatch)
    ds = Dataset([one_row(np.eye(3))])
    # prediction 0 leaves residual stress I and field 0; w = sqrt(3)
    assert mse_loss(Fixed(np.zeros((3, 3)), np.zeros(3)), ds) == pytest.approx(math.sqrt(3.0), rel=1e-15)


def test_mse_zero_for_exact_model():
    m = ConstitutiveModel.create("ti", hidden=(4,), seed=0)
    ds = small_ti()
    labelled = Dataset([LoadPath(p.path_id, p.F, p.d0, *response(m, p.F, p.d0)) for p in ds.paths])
    assert mse_loss(m, labelled) == 0.0


def test_mse_matches_naive_double_loop():
    m = ConstitutiveModel.create("cubic", hidden=(5,), seed=2)
    ds = small_ti(3)
    total = 0.0
    for p in ds.paths:
        w = sum(math.sqrt(sum(x * x for x in P.ravel())) for P in p.P) / len(p)
        s = 0.0
        for F, d0, P, e0 in p.rows:
            Pm, em = response(m, F[None], d0[None])
            s += sum((a - b) ** 2 for a, b in zip(P.ravel(), Pm[0].ravel()))
            s += sum((a - b) ** 2 for a, b in zip(e0, em[0]))
        total += s / (len(p) * w)
    assert mse_loss(m, ds) == pytest.approx(total, rel=1e-13)
    assert mse_loss(m, ds, per_path_mean=True) == pytest.approx(total / len(ds.paths), rel=1e-13)


def test_row_weights_use_full_paths():
    ds = small_ti()
    c = row_weights(ds)
    assert len(c) == len(ds)
    assert c[0] == pytest.approx(1.0 / (len(ds.paths[0]) * path_weight(ds.paths[0])), rel=1e-15)


def _toy():
    return icnn.NetworkParams([np.array([[0.5, -0.2]])], [np.array([0.1])], [False])


def test_adam_zero_gradient():
    p = _toy()
    st_ = AdamState([np.full((1, 2), 0.3), np.full(1, 0.2)], [np.full((1, 2), 0.5), np.full(1, 0.5)], 3)
    z = AdamState.zeros(p)
    q, s = adam_step(p, [np.zeros((1, 2)), np.zeros(1)], z, TrainConfig(lr=0.1))
    assert all(np.array_equal(a, b) for a, b in zip(q.arrays(), p.arrays()))
    assert s.t == 1 and all(np.all(m == 0.0) for m in s.m)
    q, s = adam_step(p, [np.zeros((1, 2)), np.zeros(1)], st_, TrainConfig(lr=0.1))
    assert np.allclose(s.m[0], 0.9 * 0.3) and np.allclose(s.v[0], 0.999 * 0.5)


@given(st.floats(0.1, 100.0), st.booleans(), st.floats(1e-4, 1e-1))
def test_adam_first_step_is_signed_lr(mag, negative, lr):
    # the first step is lr |g| / (|g| + eps); within 1e-6 lr once |g| >= eps / 1e-6
    g = -mag if negative else mag
    p = _toy()
    q, _ = adam_step(p, [np.full((1, 2), g), np.full(1, g)], AdamState.zeros(p), TrainConfig(lr=lr))
    for a, b in zip(q.arrays(), p.arrays()):
        assert np.all(np.abs((a - b) + lr * np.sign(g)) <= 1e-6 * lr)


def test_adam_two_steps_by_hand():
    lr, b1, b2, eps = 0.01, 0.9, 0.999, 1e-7
    w = np.array([0.5, -0.2])
    g1, g2 = np.array([0.3, -1.2]), np.array([-0.1, 0.4])
    m = (1 - b1) * g1
    v = (1 - b2) * g1 ** 2
    w1 = w - lr * (m / (1 - b1)) / (np.sqrt(v / (1 - b2)) + eps)
    m = b1 * m + (1 - b1) * g2
    v = b2 * v + (1 - b2) * g2 ** 2
    w2 = w1 - lr * (m / (1 - b1 ** 2)) / (np.sqrt(v / (1 - b2 ** 2)) + eps)

    p = icnn.NetworkParams([w[None].copy()], [np.zeros(1)], [False])
    cfg = TrainConfig(lr=lr)
    p, s = adam_step(p, [g1[None], np.zeros(1)], AdamState.zeros(p), cfg)
    p, s = adam_step(p, [g2[None], np.zeros(1)], s, cfg)
    assert np.max(np.abs(p.weights[0][0] - w2)) <= 1e-12


def test_adam_projects_and_checks_shapes():
    p = icnn.NetworkParams([np.array([[0.001, 1.0]])], [np.zeros(1)], [True])
    q, _ = adam_step(p, [np.array([[1.0, 0.0]]), np.zeros(1)], AdamState.zeros(p), TrainConfig(lr=0.1))
    assert q.weights[0][0, 0] == 0.0
    q, _ = adam_step(p, [np.array([[1.0, 0.0]]), np.zeros(1)], AdamState.zeros(p), TrainConfig(lr=0.1, project=False))
    assert q.weights[0][0, 0] < 0.0
    with pytest.raises(ValueError):
        adam_step(p, [np.zeros((2, 2)), np.zeros(1)], AdamState.zeros(p), TrainConfig())


def test_config_validation():
    with pytest.raises(ValueError):
        TrainConfig(lr=-1.0)
    with pytest.raises(ValueError):
        TrainConfig(epochs=0)


def test_zero_learning_rate_keeps_model():
    m = ConstitutiveModel.create("ti", hidden=(4,), seed=1)
    ds = small_ti()
    out, hist = train(m, ds, TrainConfig(lr=0.0, epochs=1, batch_size=8))
    assert all(np.array_equal(a, b) for a, b in zip(out.params.arrays(), m.params.arrays()))
    assert hist.epochs == [0, 1] and hist.losses[0] == mse_loss(m, ds) == hist.losses[1]


def _linear_target_data(rng, n=40):
    # isochoric states: the volumetric term and its derivative vanish at J = 1
    F = np.array([sample_stretch(c, a) for c, a in zip(random_dev_directions(n, rng), rng.uniform(0.0, 0.5, n))])
    return Dataset([LoadPath("lin", F, np.zeros((n, 3)), 2.0 * F, np.zeros((n, 3)))])


def test_linear_target_is_fitted():
    rng = np.random.default_rng(0)
    ds = _linear_target_data(rng)
    params = icnn.init_icnn([1, 1], rng)
    m = ConstitutiveModel("iso_compressible", params, invariant_names=("I1",))
    out, hist = train(m, ds, TrainConfig(lr=0.01, epochs=2000, batch_size=None))
    assert hist.final <= 1e-6
    assert out.params.weights[0][0, 0] == pytest.approx(1.0, abs=1e-3)


def test_loss_gradient_matches_fd_for_both_model_kinds():
    ds = small_ti()
    sub = Dataset([LoadPath(p.path_id, p.F[:3], p.d0[:3], p.P[:3], p.e0[:3]) for p in ds.paths[:2]])
    for m in (ConstitutiveModel.create("ti", hidden=(3, 3), seed=4), DirectModel.create((4,), seed=4)):
        prob = FitProblem(m, sub)
        _, grads = prob.loss_and_grad(m.params)
        g = np.concatenate([a.ravel() for a in grads])
        fd = central_fd(lambda v: prob.loss(m.params.from_vector(v)), m.params.to_vector())
        assert rel_err(fd, g) <= 1e-5
        assert prob.loss(m.params) == pytest.approx(mse_loss(m, sub), rel=1e-13)


def test_constraints_hold_after_every_epoch():
    ds = small_ti()
    seen = []

    def check(epoch, loss, params):
        seen.append(icnn.constraint_violation(params))

    train(ConstitutiveModel.create("ti", hidden=(6,), seed=5), ds, TrainConfig(lr=0.05, epochs=30, batch_size=16),
          callback=check)
    assert len(seen) == 30 and min(seen) == 0.0


def test_training_is_deterministic():
    ds = small_ti()
    make = lambda s: ConstitutiveModel.create("ti", hidden=(5,), seed=s)  # noqa: E731
    cfg = TrainConfig(lr=0.01, epochs=15, batch_size=10, seed=7)
    a = calibrate(make, ds, cfg, restarts=2, seed=3)
    b = calibrate(make, ds, cfg, restarts=2, seed=3)
    assert a[1].losses == b[1].losses and a[1].to_csv() == b[1].to_csv() and a[2] == b[2]
    assert a[1].final == min(a[2])


def test_direct_model_training_reduces_loss():
    ds = small_ti()
    _, hist = train(DirectModel.create((8,), seed=0), ds, TrainConfig(lr=0.01, epochs=40, batch_size=16))
    assert hist.final < hist.losses[0]


@pytest.mark.filterwarnings("ignore::RuntimeWarning")
def test_divergence_is_reported():
    ds = small_ti()
    with pytest.raises(TrainingDiverged) as info:
        train(DirectModel.create((4,), seed=0), ds, TrainConfig(lr=1e300, epochs=5, batch_size=None))
    assert info.value.epoch >= 1 and not math.isfinite(info.value.loss)


def test_history_csv():
    ds = small_ti()
    _, hist = train(ConstitutiveModel.create("ti", hidden=(3,), seed=0), ds, TrainConfig(lr=0.01, epochs=3))
    lines = hist.to_csv().splitlines()
    assert lines[0] == "epoch,loss,log10_loss" and len(lines) == 5
    e, l, lg = lines[-1].split(",")
    assert int(e) == 3 and float(lg) == pytest.approx(math.log10(float(l)))


def test_labels_are_the_analytic_oracle():
    # guards the dataset used in these tests
    p = small_ti().paths[0]
    P, e0 = ti_response(p.F, p.d0)
    assert np.array_equal(P, p.P) and np.array_equal(e0, p.e0)
