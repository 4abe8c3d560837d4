import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from qsp_pulse.errors import MismatchedConfig, OutOfDomain, TooFewPoints
from qsp_pulse.numkit import loglog_slope
from qsp_pulse.pipeline import bias_scaling_experiment
from qsp_pulse.pulse import PRESETS, Linear, segment_averages
from qsp_pulse.reconstruct import (
    ReconstructedPulse,
    de_average,
    error_report,
    reconstruct,
    reconstruct_differentiating,
    reconstruct_midpoint,
    richardson,
)

SIN3 = PRESETS["sin3pi"]()


def _quad_averages(L):
    # closed-form cell averages of q(t) = 1 - 2t + 3t^2
    e = np.linspace(0, 1, L + 1)
    Q = lambda t: t - t**2 + t**3
    return (Q(e[1:]) - Q(e[:-1])) * L, 1 - 2 * (m := (e[1:] + e[:-1]) / 2) + 3 * m**2


def _interior_sup(f, g, lo, hi):
    t = np.linspace(lo, hi, 801)
    return np.abs(f(t) - g(t)).max()


def test_de_average_constant_unchanged():
    for order in ("second", "fourth"):
        assert np.allclose(de_average(np.full(9, 0.4), order), 0.4, atol=1e-15)


def test_de_average_quadratic_exact():
    for L in (3, 4, 11):
        avg, mid = _quad_averages(L)
        assert np.allclose(de_average(avg, "fourth"), mid, atol=1e-12)


def test_de_average_errors():
    with pytest.raises(TooFewPoints):
        de_average([0.1, 0.2], "fourth")
    with pytest.raises(ValueError):
        de_average([0.1, 0.2, 0.3], "sixth")


def _midpoint_errors(order, Ls):
    errs = []
    for L in Ls:
        a = segment_averages(SIN3, L)
        d = de_average(a.values, order) - SIN3(a.midpoints)
        errs.append(np.abs(d[1:-1]).max())
    return errs


def test_de_average_orders():
    Ls = [16, 32, 64, 128]
    assert -2.5 <= loglog_slope(Ls, _midpoint_errors("second", Ls)) <= -1.5
    # interior cells; the one-sided edge stencil converges faster before settling
    assert -4.5 <= loglog_slope(Ls, _midpoint_errors("fourth", Ls)) <= -3.5


@settings(max_examples=50, deadline=None)
@given(st.lists(st.floats(-1, 1), min_size=5, max_size=30))
def test_interior_stencil_sup_stability(values):
    v = np.array(values)
    out = de_average(v, "fourth")
    assert np.abs(out[1:-1]).max() <= 7 / 6 * np.abs(v).max() + 1e-12


def test_midpoint_linear_exact():
    p = Linear(slope=1.0)
    est = reconstruct_midpoint(segment_averages(p, 10).values, 1.0)
    assert _interior_sup(est, p, 0.1, 0.9) < 1e-10


def test_midpoint_unwrap_invariance():
    raw = segment_averages(SIN3, 12).values + 2.0
    wrapped = raw.copy()
    wrapped[5] -= 2 * np.pi
    t = np.linspace(0, 1, 101)
    assert np.allclose(reconstruct(raw, 1.0)(t), reconstruct(wrapped, 1.0)(t), atol=1e-12)


def test_differentiating_constant():
    est = reconstruct_differentiating(np.full(12, -0.3), 1.0)
    assert _interior_sup(est, lambda t: np.full_like(t, -0.3), 1 / 12, 11 / 12) < 1e-10


def test_differentiating_order():
    Ls = [16, 32, 64, 128]
    errs = [_interior_sup(reconstruct_differentiating(segment_averages(SIN3, L).values, 1.0), SIN3, 0.2, 0.8)
            for L in Ls]
    assert -3.5 <= loglog_slope(Ls, errs) <= -2.5


def test_refined_midpoint_order():
    Ls = [16, 32, 64, 128]
    errs = [_interior_sup(reconstruct(segment_averages(SIN3, L).values, 1.0, "refined-midpoint"), SIN3, 0.1, 0.9)
            for L in Ls]
    assert loglog_slope(Ls, errs) <= -3.5


def test_methods_agree_on_smooth_data():
    raw = segment_averages(SIN3, 64).values
    a = reconstruct(raw, 1.0, "direct-midpoint")
    b = reconstruct(raw, 1.0, "differentiating")
    assert _interior_sup(a, b, 0.1, 0.9) < 2e-3


def test_too_few_points():
    for m in ("direct-midpoint", "differentiating"):
        with pytest.raises(TooFewPoints):
            reconstruct([0.1, 0.2, 0.3], 1.0, m)
    with pytest.raises(ValueError):
        reconstruct(np.zeros(8), 1.0, "nearest")


def test_eval_domain():
    est = reconstruct(np.zeros(8), 1.0)
    assert est.eval(1.0) == pytest.approx(0.0)
    with pytest.raises(OutOfDomain):
        est.eval(1.01)


def test_richardson_cancels_linear_bias():
    f = lambda t: np.sin(t)
    b = lambda t: np.cos(3 * t)
    fh = ReconstructedPulse(lambda t: f(t) + b(t) / 8, 1.0, 8, "direct-midpoint")
    fh2 = ReconstructedPulse(lambda t: f(t) + b(t) / 16, 1.0, 16, "direct-midpoint")
    re = richardson(fh, fh2)
    t = np.linspace(0, 1, 51)
    assert np.allclose(re(t), f(t), atol=1e-15)
    assert re.re_applied and re.L == 8


def test_richardson_idempotent_on_equal_inputs():
    g = ReconstructedPulse(np.cos, 1.0, 8, "direct-midpoint")
    g2 = ReconstructedPulse(np.cos, 1.0, 16, "direct-midpoint")
    t = np.linspace(0, 1, 11)
    assert np.allclose(richardson(g, g2)(t), np.cos(t), atol=1e-15)


def test_richardson_mismatch():
    a = reconstruct(np.zeros(8), 1.0)
    with pytest.raises(MismatchedConfig):
        richardson(a, reconstruct(np.zeros(12), 1.0))
    with pytest.raises(MismatchedConfig):
        richardson(a, reconstruct(np.zeros(16), 1.0, "differentiating"))


def test_error_report_zero_for_truth():
    est = ReconstructedPulse(SIN3, 1.0, 8, "direct-midpoint")
    rep = error_report(est, SIN3)
    assert rep.sup_full == 0 and rep.sup_interior == 0
    assert rep.table.shape == (1001, 4)
    with pytest.raises(ValueError):
        error_report(est, SIN3, n_grid=50)


def test_bias_drops_tenfold_from_8_to_64():
    res = bias_scaling_experiment(SIN3, [8, 64])
    assert res.errors[1] < 1e-2
    assert res.errors[0] / res.errors[1] > 10


def test_spline_locality():
    L = 40
    base = np.zeros(L)
    bump = base.copy()
    eps = 1e-3
    bump[5] = eps
    d = reconstruct(bump, 1.0)
    far = (np.arange(L) + 0.5) / L
    far = far[np.abs(np.arange(L) - 5) >= 10]
    assert np.abs(d(far)).max() < 0.01 * eps


def test_re_noise_amplification_bounded():
    rng = np.random.default_rng(0)
    base8 = segment_averages(SIN3, 16).values
    base16 = segment_averages(SIN3, 32).values
    t = np.linspace(0.1, 0.9, 81)
    pre, post = [], []
    for _ in range(200):
        f8 = reconstruct(base8 + rng.normal(0, 0.01, 16), 1.0)
        f16 = reconstruct(base16 + rng.normal(0, 0.01, 32), 1.0)
        pre.append(f8(t))
        post.append(richardson(f8, f16)(t))
    assert np.all(np.std(post, 0) <= 3 * np.std(pre, 0))
