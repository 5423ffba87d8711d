"""Shared fixtures: one trained backbone and distilled banks for the session.

The expensive artifacts (pretrained net, teacher sets, trained banks) are
session-scoped so the acceptance checks and the slower unit tests share a
single pipeline run. Everything derives deterministically from seed 0.
"""

import numpy as np
import pytest

from fewstep.denoiser import NetConfig
from fewstep.distill import DistillConfig, init_bank, train
from fewstep.mixture import GmmSpec, analytic_denoiser, sample_gmm
from fewstep.pretrain import TrainBackboneConfig, train_backbone
from fewstep.rng import stream
from fewstep.schedule import make_schedule
from fewstep.teacher import gen_teachers
from fewstep.tensor import Tensor

# The sigma law here spreads mass wide enough that the net also learns the
# large-noise regime the default law essentially never samples.
ACCEPT_PRETRAIN = dict(
    n_samples=8192,
    epochs=400,
    sigma_log_mean=float(np.log(1.0)),
    sigma_log_std=1.8,
)


class OracleDenoiser:
    """Exact posterior-mean denoiser with the solver calling convention."""

    cfg = NetConfig()

    def __init__(self, spec):
        self.spec = spec
        self.calls = 0

    def __call__(self, x, t, ov=None):
        self.calls += 1
        arr = x.data if isinstance(x, Tensor) else np.asarray(x)
        return Tensor(analytic_denoiser(self.spec, arr, float(t)))


@pytest.fixture(scope="session")
def gmm():
    return GmmSpec()


@pytest.fixture()
def oracle_net(gmm):
    return OracleDenoiser(gmm)


@pytest.fixture(scope="session")
def backbone(gmm):
    net, _ = train_backbone(gmm, TrainBackboneConfig(seed=0, **ACCEPT_PRETRAIN))
    return net


@pytest.fixture(scope="session")
def schedule5():
    return make_schedule("polynomial", 5)


@pytest.fixture(scope="session")
def teachers_train(backbone, schedule5):
    return gen_teachers(backbone, schedule5, k=5, kind="ipndm", seed_lo=50000, seed_hi=50255)


@pytest.fixture(scope="session")
def teachers_held(backbone, schedule5):
    return gen_teachers(backbone, schedule5, k=5, kind="ipndm", seed_lo=50256, seed_hi=50319)


def _train_bank(variant, backbone, schedule5, teachers_train):
    # budget high enough that every variant converges on every step; the
    # variant-ordering comparison is about optima, not optimizer speed
    bank = init_bank(backbone, schedule5, variant)
    return train(bank, teachers_train, backbone, kind="ddim", cfg=DistillConfig(seed=0, max_epochs=2400))


@pytest.fixture(scope="session")
def bank_multi(backbone, schedule5, teachers_train):
    return _train_bank("multi-layer", backbone, schedule5, teachers_train)


@pytest.fixture(scope="session")
def bank_single(backbone, schedule5, teachers_train):
    return _train_bank("single", backbone, schedule5, teachers_train)


@pytest.fixture(scope="session")
def bank_deep(backbone, schedule5, teachers_train):
    return _train_bank("deep", backbone, schedule5, teachers_train)


@pytest.fixture(scope="session")
def reference_draws(gmm):
    return sample_gmm(gmm, 20000, stream(0, "eval-reference"))
