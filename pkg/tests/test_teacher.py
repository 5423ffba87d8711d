"""Reference trajectory generation aligned to a student schedule."""

import numpy as np
import pytest

from fewstep.metrics import energy_distance
from fewstep.mixture import GmmSpec, sample_gmm
from fewstep.rng import stream
from fewstep.schedule import make_schedule, refine_schedule
from fewstep.solvers import initial_noise, sample
from fewstep.teacher import TeacherSet, gen_teachers

from conftest import OracleDenoiser

SPEC = GmmSpec()


def test_shapes_and_seed_bookkeeping():
    net = OracleDenoiser(SPEC)
    student = make_schedule("polynomial", 5)
    ts = gen_teachers(net, student, k=3, kind="ipndm", seed_lo=10, seed_hi=17)
    assert ts.states.shape == (8, 5, 2)
    assert ts.n_seeds == 8
    assert np.array_equal(ts.seeds, np.arange(10, 18))
    assert np.array_equal(ts.student.times, student.times)


def test_k1_ddim_equals_plain_rollout():
    net = OracleDenoiser(SPEC)
    student = make_schedule("polynomial", 6)
    ts = gen_teachers(net, student, k=1, kind="ddim", seed_lo=3, seed_hi=3)
    traj = sample("ddim", student, OracleDenoiser(SPEC), seed=3, n=1)
    assert np.array_equal(ts.states[0], traj.states[:, 0, :])


def test_states_are_refined_rollout_subsequence():
    net = OracleDenoiser(SPEC)
    student = make_schedule("polynomial", 4)
    k = 3
    ts = gen_teachers(net, student, k=k, kind="ipndm", seed_lo=5, seed_hi=7)
    refined = refine_schedule(student, k)
    x_init = np.vstack([initial_noise(refined, s, 1, 2) for s in (5, 6, 7)])
    traj = sample("ipndm", refined, OracleDenoiser(SPEC), x_init=x_init)
    for i in range(len(student)):
        assert np.array_equal(ts.states[:, i, :], traj.states[i * k])


def test_refinement_counts_match_nfe_budget():
    # 4 student intervals at k=5 integrate over 20 teacher intervals
    student = make_schedule("polynomial", 5)
    assert refine_schedule(student, 5).n_intervals == 20


def test_endpoint_error_weakly_decreases_in_k(oracle_net):
    student = make_schedule("polynomial", 5)
    ref_sched = make_schedule("polynomial", 1025)
    x_init = np.vstack([initial_noise(ref_sched, s, 1, 2) for s in range(20, 36)])
    ref = sample("ddim", ref_sched, oracle_net, x_init=x_init).endpoints
    errs = []
    for k in (2, 5, 10):
        ts = gen_teachers(OracleDenoiser(SPEC), student, k=k, kind="ipndm", seed_lo=20, seed_hi=35)
        errs.append(float(np.linalg.norm(ts.states[:, -1, :] - ref, axis=1).mean()))
    assert errs[0] >= errs[1] >= errs[2]


def test_empty_seed_range_rejected():
    with pytest.raises(ValueError, match="seed range"):
        gen_teachers(OracleDenoiser(SPEC), make_schedule("polynomial", 4), seed_lo=9, seed_hi=8)


def test_state_shape_validation():
    student = make_schedule("polynomial", 4)
    with pytest.raises(ValueError, match="teacher states"):
        TeacherSet(student=student, k=2, solver="ipndm", seed_lo=0, seed_hi=3,
                   states=np.zeros((4, 3, 2)))


def test_trained_backbone_teachers_land_on_the_mixture(backbone, teachers_train, gmm):
    # endpoint cloud of the default teacher run stays close to exact draws.
    # At 256 points the energy-distance sampling floor is ~0.03 (max ~0.08
    # over reference seeds), so the absolute bound carries that plus the
    # 20-interval solver bias; the sharp check is beating the coarse student.
    draws = sample_gmm(gmm, 10000, stream(1, "gmm-sample"))
    ed = energy_distance(teachers_train.states[:, -1, :], draws)
    coarse = sample("ddim", teachers_train.student, backbone, seed=1, n=256).endpoints
    assert ed < 0.15
    assert ed < energy_distance(coarse, draws)
