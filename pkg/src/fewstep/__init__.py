"""Desk-scale laboratory for few-step diffusion sampling with per-step,
per-layer trainable time conditioning.

The pipeline: pretrain a small preconditioned denoiser on an analytic 2-D
Gaussian mixture, roll out high-step teacher trajectories, then distill a bank
of per-step conditioning overrides against the teacher states while the
backbone stays frozen. Analysis probes measure where inside each solver
interval the best conditioning time lies, how that varies per block, and what
the trained override vectors look like in embedding space.
"""

from .analysis import (
    CapacitySweep,
    EmbeddingPcaResult,
    FilmCapacityResult,
    GainDropResult,
    PcaResult,
    SweepResult,
    default_sweep_grid,
    embedding_pca,
    feature_trajectory_pca,
    film_capacity,
    film_capacity_sweep,
    gain_drop,
    layer_time_sweep,
    pca,
    step_transfer,
    time_sweep,
)
from .config import apply_overrides, default_config, load_config, parse_config_text
from .denoiser import Denoiser, FilmParams, LayerOverride, NetConfig, film, precondition_coeffs
from .distill import (
    VARIANTS,
    DistillConfig,
    EmbeddingBank,
    TrainReport,
    init_bank,
    train,
    train_deep,
    train_single,
    trajectory_losses,
)
from .metrics import energy_distance, sliced_wasserstein
from .mixture import GmmSpec, analytic_denoiser, circle_means, sample_gmm
from .persist import (
    load_backbone,
    load_bank,
    load_teachers,
    load_trajectory,
    read_container,
    save_backbone,
    save_bank,
    save_teachers,
    save_trajectory,
    write_container,
)
from .pretrain import TrainBackboneConfig, train_backbone
from .rng import stream
from .schedule import Schedule, make_schedule, refine_schedule
from .solvers import (
    SolverKind,
    SolverState,
    Trajectory,
    ddim_step,
    dpmpp3m_step,
    initial_noise,
    ipndm_step,
    sample,
    solver_kind,
)
from .teacher import TeacherSet, gen_teachers
from .tensor import (
    Adam,
    Tensor,
    backward,
    tape,
    zero_grad,
)

__version__ = "0.1.0"
