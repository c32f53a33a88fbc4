import math
from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from pbdplan.belief import LinearGaussianObservation, kalman_update
from pbdplan.domains.target_monitor import (
    HOVER,
    TargetMonitorAdapter,
    TargetMonitorDomain,
    TmBelief,
    TmSpec,
    TmState,
    axis_moves,
    prob_in_regions,
    sensor_cov,
    tm_belief_update,
    tm_expected_obs_cov,
    tm_macros,
    tm_observe,
    tm_report,
    tm_step,
    wrap_angle,
)
from pbdplan.errors import ConfigError, InvalidPose
from pbdplan.gaussian import Gaussian, make_rng
from pbdplan.planner.policies import WorstTargetPolicy, greedy_policy
from pbdplan.planner.search import PlannerConfig, mac_expand, pbd_expand, plan

T0 = dict(x=40.0, y=50.0, heading=0.3, speed=1.0, turn_rate=0.02, speed_sd=0.2, turn_sd=0.05)
T1 = dict(x=70.0, y=20.0, heading=2.0, speed=0.5, turn_rate=0.0, speed_sd=0.1, turn_sd=0.02)
SPEC = TmSpec(targets=[T0, T1], regions=[(0.0, 0.0, 50.0, 100.0)])


def belief(spec=SPEC, agent=(50.0, 50.0, 10.0), cov_scale=4.0):
    means = np.array([[t.x, t.y, t.heading] for t in spec.targets])
    T = spec.n_targets
    return TmBelief(agent, means, np.repeat(np.eye(2)[None] * cov_scale, T, 0), np.full(T, 0.01))


def quiet(spec=SPEC, **kw):
    targets = [replace(t, speed_sd=0.0, turn_sd=0.0) for t in spec.targets]
    return replace(spec, targets=tuple(targets), agent_sd=0.0, **kw)


# -- spec ------------------------------------------------------------------------------


@pytest.mark.parametrize(
    "kw",
    [
        dict(regions=[(0, 0, 150, 10)]),
        dict(c1=-1.0),
        dict(altitudes=(25.0,)),
        dict(h_min=5.0, h_max=2.0),
    ],
)
def test_spec_rejects_bad_values(kw):
    base = dict(targets=[T0], regions=[(0, 0, 50, 50)])
    base.update(kw)
    with pytest.raises(ConfigError):
        TmSpec(**base)


def test_spec_needs_targets():
    with pytest.raises(ConfigError):
        TmSpec(targets=[], regions=[(0, 0, 1, 1)])


@given(st.floats(-50, 50))
def test_wrap_angle_range(a):
    w = float(wrap_angle(a))
    assert -math.pi < w <= math.pi
    assert math.isclose(math.cos(w), math.cos(a), abs_tol=1e-9) and math.isclose(math.sin(w), math.sin(a), abs_tol=1e-9)


# -- sensor ------------------------------------------------------------------------------


def test_expected_cov_directly_below():
    g = Gaussian([30.0, 40.0, 0.0], np.zeros((3, 3)))
    out = tm_expected_obs_cov(g, (30.0, 40.0, 8.0), SPEC)
    assert out == pytest.approx((SPEC.c1 * 8.0 + SPEC.c3) * np.eye(2))


def test_expected_cov_matches_monte_carlo():
    cov = np.array([[4.0, 1.2, 0.0], [1.2, 2.5, 0.0], [0.0, 0.0, 0.1]])
    g = Gaussian([33.0, 46.0, 0.2], cov)
    agent = (30.0, 40.0, 6.0)
    rng = make_rng(3)
    s = rng.multivariate_normal(g.mean[:2], cov[:2, :2], size=1_000_000)
    mc = sensor_cov(SPEC, agent, s).mean(axis=0)
    exact = tm_expected_obs_cov(g, agent, SPEC)
    assert np.linalg.norm(mc - exact) / np.linalg.norm(exact) < 0.01


def test_expected_cov_linear_in_belief_cov():
    agent = (30.0, 40.0, 6.0)
    c = np.diag([2.0, 3.0, 0.1])
    base = tm_expected_obs_cov(Gaussian([35.0, 41.0, 0.0], np.zeros((3, 3))), agent, SPEC)
    one = tm_expected_obs_cov(Gaussian([35.0, 41.0, 0.0], c), agent, SPEC)
    two = tm_expected_obs_cov(Gaussian([35.0, 41.0, 0.0], 2 * c), agent, SPEC)
    assert two - base == pytest.approx(2 * (one - base), abs=1e-12)


def test_expected_cov_rejects_ground_level():
    with pytest.raises(InvalidPose):
        tm_expected_obs_cov(Gaussian([1.0, 1.0, 0.0], np.eye(3)), (0.0, 0.0, 0.0), SPEC)


@settings(max_examples=60, deadline=None)
@given(
    st.floats(0, 100), st.floats(0, 100), st.floats(0.5, 20),
    st.floats(0, 100), st.floats(0, 100), st.floats(0.0, 30), st.floats(0.0, 30), st.floats(-0.99, 0.99),
)
def test_expected_cov_psd_and_grows_with_uncertainty(ax, ay, h, mx, my, sx, sy, rho):
    c = np.zeros((3, 3))
    c[0, 0], c[1, 1] = sx, sy
    c[0, 1] = c[1, 0] = rho * math.sqrt(sx * sy)
    out = tm_expected_obs_cov(Gaussian([mx, my, 0.0], c), (ax, ay, h), SPEC)
    assert np.allclose(out, out.T)
    ev = np.linalg.eigvalsh(out)
    assert ev.min() > 0
    bigger = tm_expected_obs_cov(Gaussian([mx, my, 0.0], c + np.diag([1.0, 1.0, 0.0])), (ax, ay, h), SPEC)
    assert np.all(np.linalg.eigvalsh(bigger) > ev)


def test_observation_gated_by_view():
    s = TmState((50.0, 50.0, 5.0), np.array([[52.0, 50.0, 0.0], [80.0, 80.0, 0.0]]))
    z = tm_observe(SPEC, s, make_rng(0))
    assert z[0] is not None and z[1] is None


def test_noiseless_observation_is_the_pose():
    spec = replace(SPEC, c1=0.0, c2=0.0, c3=0.0, heading_obs_var=0.0)
    s = TmState((50.0, 50.0, 20.0), np.array([[52.0, 47.0, 0.4], [45.0, 55.0, -1.0]]))
    z = tm_observe(spec, s, make_rng(0))
    assert np.allclose(np.array(z), s.targets)


def test_observation_noise_statistics():
    s = TmState((50.0, 50.0, 8.0), np.array([[54.0, 47.0, 0.4]]))
    spec = TmSpec(targets=[T0], regions=[(0, 0, 50, 50)])
    rng = make_rng(8)
    z = np.array([tm_observe(spec, s, rng)[0][:2] for _ in range(100_000)])
    emp = np.cov(z.T)
    g = sensor_cov(spec, s.agent, s.targets[0, :2])
    assert np.linalg.norm(emp - g) / np.linalg.norm(g) < 0.03
    assert np.allclose(z.mean(axis=0), s.targets[0, :2], atol=0.02)


def test_infinite_view_sees_everything():
    spec = replace(SPEC, fov_slope=1e6)
    dom = TargetMonitorDomain(spec)
    s = dom.initial_state(0)
    rng = make_rng(1)
    for _ in range(20):
        assert all(z is not None for z in tm_observe(spec, s, rng))
        s, _ = tm_step(spec, s, HOVER, rng)


# -- belief updates -------------------------------------------------------------------------


def test_missed_detection_adds_process_noise():
    b = belief()
    b2 = tm_belief_update(b, HOVER, (b.agent, [None, None]), SPEC)
    model = TargetMonitorDomain(SPEC).adapter().model
    m, cxy, cth = model.predict(b.means, b.cov_xy, b.var_heading)
    assert np.allclose(b2.cov_xy, cxy) and np.allclose(b2.var_heading, cth)
    assert np.all(np.linalg.eigvalsh(b2.cov_xy - b.cov_xy) >= -1e-12)
    th = b.means[:, 2]
    expected_xy = b.means[:, :2] + np.stack([[1.0, 0.5] * np.cos(th), [1.0, 0.5] * np.sin(th)], axis=1)
    assert np.allclose(b2.means[:, :2], expected_xy)


def test_repeated_observation_of_stationary_target():
    tgt = dict(x=50.0, y=50.0, heading=0.0, speed=0.0, turn_rate=0.0, speed_sd=0.0, turn_sd=0.0)
    spec = TmSpec(targets=[tgt], regions=[(0, 0, 50, 50)], c2=0.0, agent_sd=0.0)
    s = TmState((50.0, 50.0, 10.0), np.array([[50.0, 50.0, 0.0]]))
    b = TmBelief(s.agent, np.array([[49.0, 52.0, 0.0]]), np.eye(2)[None] * 9.0, np.array([0.04]))
    r = spec.c1 * 10.0 + spec.c3
    rng = make_rng(0)
    traces = []
    for n in range(1, 30):
        b = tm_belief_update(b, HOVER, (s.agent, tm_observe(spec, s, rng)), spec)
        traces.append(np.trace(b.cov_xy[0]))
        # information form fixed-point iterate with constant noise r
        assert b.cov_xy[0] == pytest.approx(np.eye(2) / (1 / 9.0 + n / r), rel=1e-9)
    assert all(a >= b_ for a, b_ in zip(traces, traces[1:]))


def test_update_matches_plain_kalman_update():
    spec = replace(SPEC, c2=0.0)
    b = belief(spec)
    z0 = np.array([42.0, 49.0, 0.35])
    b2 = tm_belief_update(b, HOVER, (b.agent, [z0, None]), spec)
    model = TargetMonitorDomain(spec).adapter().model
    m, cxy, _ = model.predict(b.means, b.cov_xy, b.var_heading)
    Q = tm_expected_obs_cov(Gaussian(m[0], np.pad(cxy[0], (0, 1))), b.agent, spec)
    ref = kalman_update(Gaussian(m[0, :2], cxy[0]), z0[:2], LinearGaussianObservation(np.eye(2), Q))
    assert b2.means[0, :2] == pytest.approx(ref.mean, abs=1e-12)
    assert b2.cov_xy[0] == pytest.approx(ref.cov, abs=1e-12)


def test_planning_gain_matches_kalman_with_expected_noise():
    b = belief(agent=(45.0, 48.0, 12.0))
    model = TargetMonitorDomain(SPEC).adapter().model
    m, cxy, cth = model.predict(b.means, b.cov_xy, b.var_heading)
    vis, K, _, post, _, inc, _ = model.gains(b.agent, m, cxy, cth)
    assert vis[0] and not vis[1]
    Q = tm_expected_obs_cov(Gaussian(m[0], np.pad(cxy[0], (0, 1))), b.agent, SPEC)
    ref = kalman_update(Gaussian(m[0, :2], cxy[0]), m[0, :2], LinearGaussianObservation(np.eye(2), Q))
    assert post[0] == pytest.approx(ref.cov, abs=1e-12)
    assert inc[0] + post[0] == pytest.approx(cxy[0], abs=1e-12)
    assert post[1] == pytest.approx(cxy[1])


def test_targets_stay_factored():
    b = belief()
    z = [np.array([41.0, 50.5, 0.3]), None]
    b2 = tm_belief_update(b, HOVER, (b.agent, z), SPEC)
    b3 = tm_belief_update(b, HOVER, (b.agent, [None, None]), SPEC)
    assert np.array_equal(b2.means[1], b3.means[1]) and np.array_equal(b2.cov_xy[1], b3.cov_xy[1])
    assert b2.target(0).cov[0, 2] == 0.0


# -- simulator ---------------------------------------------------------------------------------


def test_zero_action_without_noise_is_identity():
    spec = quiet(replace(SPEC, targets=(replace(SPEC.targets[0], speed=0.0, turn_rate=0.0),)))
    s = TmState((50.0, 50.0, 10.0), np.array([[10.0, 10.0, 0.5]]))
    s2, r = tm_step(spec, s, HOVER, make_rng(0))
    assert s2.agent == s.agent and np.allclose(s2.targets, s.targets) and r == 0.0


def test_unicycle_forward_motion():
    spec = quiet(replace(SPEC, targets=(replace(SPEC.targets[0], speed=1.5, turn_rate=0.0),)))
    s = TmState((50.0, 50.0, 10.0), np.array([[10.0, 10.0, 0.0]]))
    s2, _ = tm_step(spec, s, HOVER, make_rng(0))
    assert s2.targets[0] == pytest.approx([11.5, 10.0, 0.0])


def test_motion_cost_and_report_outcomes():
    spec = quiet()
    s = TmState((50.0, 50.0, 10.0), np.array([[20.0, 20.0, 0.0], [70.0, 20.0, 0.0]]))
    _, r = tm_step(spec, s, (3.0, 4.0, 0.0), make_rng(0), reports=[True, True])
    assert r == pytest.approx(10.0 - 10.0 - 0.5)
    _, r = tm_step(spec, s, (3.0, 4.0, 0.0), make_rng(0), reports=[True, False])
    assert r == pytest.approx(10.0 - 0.5)


def test_planning_model_matches_simulator_one_step():
    spec = TmSpec(targets=[dict(x=50, y=50, heading=0.4, speed=2.0, turn_rate=0.05, speed_sd=0.5, turn_sd=0.1)],
                  regions=[(0, 0, 50, 50)])
    mean = np.array([50.0, 50.0, 0.4])
    cxy = np.array([[1.0, 0.3], [0.3, 0.8]])
    cth = 0.02
    model = TargetMonitorDomain(spec).adapter().model
    pm, pc, pth = model.predict(mean[None], cxy[None], np.array([cth]))
    rng = make_rng(6)
    n = 100_000
    xy = rng.multivariate_normal(mean[:2], cxy, size=n)
    th = mean[2] + math.sqrt(cth) * rng.standard_normal(n)
    v = 2.0 + 0.5 * rng.standard_normal(n)
    w = 0.05 + 0.1 * rng.standard_normal(n)
    nxt = np.column_stack([xy[:, 0] + v * np.cos(th), xy[:, 1] + v * np.sin(th), th + w])
    assert np.linalg.norm(nxt.mean(axis=0) - pm[0]) / np.linalg.norm(pm[0]) < 0.03
    emp = np.cov(nxt[:, :2].T)
    assert np.linalg.norm(emp - pc[0]) / np.linalg.norm(pc[0]) < 0.03
    assert abs(nxt[:, 2].var() - pth[0]) / pth[0] < 0.03


def test_step_reflects_at_world_edge():
    spec = quiet(replace(SPEC, targets=(replace(SPEC.targets[0], speed=2.0, turn_rate=0.0),)))
    s = TmState((50.0, 50.0, 10.0), np.array([[99.0, 10.0, 0.0]]))
    s2, _ = tm_step(spec, s, HOVER, make_rng(0))
    assert s2.targets[0, 0] == pytest.approx(99.0) and abs(s2.targets[0, 2]) == pytest.approx(math.pi)


# -- reporting ------------------------------------------------------------------------------------


def test_region_mass_against_sampling():
    rng = make_rng(2)
    pts = rng.normal([48.0, 60.0], [3.0, 5.0], size=(400_000, 2))
    inside = (pts[:, 0] <= 50) & (pts[:, 1] <= 100)
    p = prob_in_regions(SPEC, np.array([48.0, 60.0]), 9.0, 25.0)
    assert abs(inside.mean() - p) < 3 * math.sqrt(p * (1 - p) / pts.shape[0])


def test_report_certain_cases():
    b = belief(cov_scale=1e-6)
    b = TmBelief(b.agent, np.array([[20.0, 20.0, 0.0], [80.0, 20.0, 0.0]]), b.cov_xy, b.var_heading)
    rep, val = tm_report(b, SPEC)
    assert list(rep) == [True, False]
    assert val == pytest.approx([10.0, 0.0])


@pytest.mark.parametrize("p", np.linspace(0.0, 1.0, 41))
def test_report_rule_maximizes_expected_value(p):
    # brute force over the two outcomes of each choice
    report_in = p * 10.0 + (1 - p) * -10.0
    report_out = 0.0
    x = 50.0 + 3.0 * _norm_ppf(p)
    b = TmBelief((0.0, 0.0, 10.0), np.array([[x, 50.0, 0.0]]), np.eye(2)[None] * 9.0, np.array([0.01]))
    spec = TmSpec(targets=[T0], regions=[(50.0, 0.0, 100.0, 100.0)])
    rep, val = tm_report(b, spec)
    best = max(report_in, report_out)
    assert val[0] == pytest.approx(best, abs=1e-6)
    if abs(report_in) > 1e-6:
        assert bool(rep[0]) == (report_in > report_out)


def _norm_ppf(p):
    from scipy.stats import norm

    return float(np.clip(norm.ppf(p), -8, 8))


# -- macros ---------------------------------------------------------------------------------------


def test_macro_count_and_hover():
    ms = tm_macros(belief(), SPEC)
    assert len(ms) == 5
    assert ms[-1].actions == (HOVER,) * 4


def test_goto_macro_reaches_goal_with_bounded_steps():
    b = belief(agent=(10.0, 10.0, 3.0))
    for m in tm_macros(b, SPEC)[:-1]:
        total = np.sum(np.array(m.actions), axis=0)
        i = int(m.label[6])
        h = float(m.label.split("@")[1])
        assert total == pytest.approx(np.array([b.means[i, 0], b.means[i, 1], h]) - np.array(b.agent))
        assert max(np.linalg.norm(a) for a in m.actions) <= SPEC.max_step + 1e-9
        assert len(m) == max(1, math.ceil(np.linalg.norm(total) / SPEC.max_step))


def test_goto_degenerates_when_already_there():
    b = belief(agent=(40.0, 50.0, 5.0))
    m = tm_macros(b, SPEC)[0]
    assert m.actions == ((0.0, 0.0, 0.0),)


# -- planning -----------------------------------------------------------------------------------------


def test_batched_leaf_values_match_one_at_a_time():
    dom = TargetMonitorDomain(SPEC)
    ad = dom.adapter()
    rng = make_rng(0)
    b = belief()
    means = b.means[None] + rng.normal(0, 4, (6, 2, 3))
    cxy = np.repeat(b.cov_xy[None], 6, 0) * rng.uniform(0.5, 3, (6, 1, 1, 1))
    batch = (means, cxy, np.repeat(b.var_heading[None], 6, 0))
    ctx = (45.0, 45.0, 8.0)
    for marginal in (True, False):
        fast, count = ad.leaf_values(ctx, batch, 0.95, marginal)
        assert count == 30
        slow = []
        for one in ad.split(batch):
            f = ad.pbd_macro if marginal else ad.nbo_macro
            slow.append(max(f(ctx, one, m, 0.95, False)[0][0] for m in ad.macros(ctx, one)))
        assert fast == pytest.approx(np.array(slow), abs=1e-12)


def test_pbd_and_mac_agree_on_macro_values():
    spec = TmSpec(targets=[T0, T1], regions=[(0, 0, 50, 100)], gamma=0.95)
    b = belief(spec, agent=(38.0, 46.0, 10.0), cov_scale=9.0)
    ad = TargetMonitorAdapter(spec)
    cfg = PlannerConfig("PBD", gamma=0.95, depth=1, samples=4000)
    for m in tm_macros(b, spec)[:2]:
        q_pbd = pbd_expand(m, b, ad, cfg, 1)
        q_mac = mac_expand(m, b, ad, cfg.with_(kind="MAC"), 1, 5)
        assert q_pbd == pytest.approx(q_mac, rel=0.03)


def test_planners_return_candidate_actions():
    dom = TargetMonitorDomain(SPEC)
    b = belief()
    ad = dom.adapter()
    for kind in ("PBD", "NBO"):
        p = plan(b, ad, PlannerConfig(kind, depth=2, samples=3))
        assert p.action in [m.first for m in p.macros]
    a = greedy_policy(b, ad)
    assert a in ad.greedy_candidates(*ad.root(b))
    assert set(axis_moves(SPEC)) <= set(ad.greedy_candidates(*ad.root(b)))


def test_worst_target_goes_to_most_uncertain():
    b = belief()
    b = TmBelief(b.agent, b.means, b.cov_xy * np.array([1.0, 5.0])[:, None, None], b.var_heading)
    ad = TargetMonitorDomain(SPEC).adapter()
    assert int(np.argmax(ad.target_uncertainties(b))) == 1
    pol = WorstTargetPolicy(ad, committed=False)
    a = pol.act(b, make_rng(0))
    assert a == ad.approach_macro(b, 1).first


def test_domain_rejects_discrete_planning():
    from pbdplan.errors import UnsupportedDomain

    dom = TargetMonitorDomain(SPEC)
    with pytest.raises(UnsupportedDomain):
        dom.adapter(discrete=True)
