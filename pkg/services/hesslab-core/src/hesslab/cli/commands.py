# =============================================================================
# hesslab - Command Implementations
# =============================================================================
"""
The work behind each subcommand. Every ``cmd_*`` takes a validated run
config, writes its results under ``config.out`` and returns the manifest
path. Outputs depend only on the config and the input files.
"""

from pathlib import Path
from typing import Dict, List, Tuple

import numpy as np
import pandas as pd
from loguru import logger

from ..core.config import settings
from ..core.errors import ConfigError
from ..data.datasets import (
    Dataset,
    gaussian_synthetic,
    load_idx,
    randomize_labels,
    relabel_mnist2,
    subset,
)
from ..hessian.factors import input_mean, layer_factors
from ..hessian.spectrum import kron_approx_spectrum, true_layer_spectrum
from ..metrics.autocorr import autocorr_stats
from ..metrics.correspondence import correspondence_input, correspondence_output
from ..metrics.cross_model import cross_model_overlap
from ..metrics.subspace import overlap_curve, top_singular_ratio
from ..network.checkpoint import load_checkpoint, save_array, save_checkpoint
from ..network.model import MlpModel, classification_error, init_gaussian_rowscaled, init_xavier
from ..network.training import train_sgd
from ..pacbayes.optimize import final_bound, init_state, optimize
from ..theory.theorem import grid_frame, theorem_grid
from .io import write_csv, write_json, write_manifest
from .run_config import (
    AnalysisConfig,
    CorrespondenceConfig,
    DataConfig,
    OverlapConfig,
    PacBayesConfig,
    SpectraConfig,
    TheoremConfig,
    TrainConfig,
)

MNIST_KEYS = ("train_images", "train_labels", "test_images", "test_labels")


# =============================================================================
# Inputs
# =============================================================================


def _mnist_paths(cfg: DataConfig) -> Dict[str, str]:
    defaults = settings.mnist_files() or {}
    paths = {key: getattr(cfg, key) or defaults.get(key) for key in MNIST_KEYS}
    missing = [k for k, v in paths.items() if v is None]
    if missing:
        raise ConfigError("MNIST file paths are not configured and HESSLAB_MNIST_DIR is unset", {"missing": missing})
    return paths


def load_datasets(cfg: DataConfig) -> Tuple[Dataset, Dataset]:
    """Training and test sets as configured (subsets and relabelings applied)."""
    if cfg.source == "gaussian":
        train = gaussian_synthetic(cfg.gaussian_samples, cfg.gaussian_dim, cfg.num_classes, cfg.data_seed)
        test = gaussian_synthetic(cfg.gaussian_test_samples, cfg.gaussian_dim, cfg.num_classes, cfg.data_seed + 1)
        return train, test

    paths = _mnist_paths(cfg)
    train = load_idx(paths["train_images"], paths["train_labels"])
    test = load_idx(paths["test_images"], paths["test_labels"], name="mnist-test")
    if cfg.subset is not None:
        train = subset(train, min(cfg.subset, train.n_samples), cfg.data_seed)
    if cfg.test_subset is not None:
        test = subset(test, min(cfg.test_subset, test.n_samples), cfg.data_seed)
    if cfg.source == "mnist2":
        train, test = relabel_mnist2(train), relabel_mnist2(test)
    elif cfg.source == "mnist_random":
        train = randomize_labels(train, cfg.data_seed)
    logger.info(f"loaded {cfg.source}: {train.n_samples} train / {test.n_samples} test samples")
    return train, test


def _load_model(path: str) -> MlpModel:
    model, header = load_checkpoint(path)
    logger.debug(f"loaded checkpoint {path} (seed {header.get('seed')}, epoch {header.get('epoch')})")
    return model


def _layers(cfg: AnalysisConfig, model: MlpModel) -> List[int]:
    layers = cfg.layers if cfg.layers is not None else list(range(model.num_layers))
    bad = [p for p in layers if not 0 <= p < model.num_layers]
    if bad:
        raise ConfigError("layer indices out of range", {"layers": bad, "num_layers": model.num_layers})
    return layers


def _check_architecture(model: MlpModel, data: Dataset) -> None:
    if model.layer_dims[0] != data.dim or model.num_classes != data.num_classes:
        raise ConfigError(
            "checkpoint does not fit the dataset",
            {"layer_dims": list(model.layer_dims), "data_dim": data.dim, "num_classes": data.num_classes},
        )


# =============================================================================
# Commands
# =============================================================================


def cmd_train(cfg: TrainConfig) -> Path:
    out = Path(cfg.out)
    train, test = load_datasets(cfg.data)
    dims = [train.dim, *cfg.hidden, train.num_classes]
    init = init_xavier if cfg.init == "xavier" else init_gaussian_rowscaled
    files: List[Path] = []
    runs = []
    for seed in cfg.seeds:
        run_dir = out / f"seed_{seed}"
        model = init(dims, seed)
        files.append(save_checkpoint(run_dir / "init.ckpt", model, seed, 0))
        run = train_sgd(
            model,
            train,
            lr=cfg.lr,
            batch=cfg.batch,
            epochs=cfg.epochs,
            momentum=cfg.momentum,
            weight_decay=cfg.weight_decay,
            seed=seed,
            snapshot_epochs=cfg.snapshot_epochs,
        )
        for epoch, snap in sorted(run.snapshots.items()):
            files.append(save_checkpoint(run_dir / f"epoch_{epoch}.ckpt", snap, seed, epoch))
        files.append(save_checkpoint(run_dir / "final.ckpt", run.model, seed, cfg.epochs))
        runs.append(
            {
                "seed": seed,
                "train_error": classification_error(run.model, train.inputs, train.labels),
                "test_error": classification_error(run.model, test.inputs, test.labels),
                "final_loss": run.epoch_losses[-1] if run.epoch_losses else None,
            }
        )
        logger.info(f"seed {seed}: train error {runs[-1]['train_error']:.4f}, test error {runs[-1]['test_error']:.4f}")
    return write_manifest(out, "train", files, layer_dims=dims, runs=runs)


def cmd_spectra(cfg: SpectraConfig) -> Path:
    out = Path(cfg.out)
    train, _ = load_datasets(cfg.data)
    model = _load_model(cfg.checkpoint)
    _check_architecture(model, train)
    files: List[Path] = []
    for p in _layers(cfg, model):
        m, n = model.layer_shape(p, cfg.include_bias)
        k = min(cfg.k, m * n)
        true = true_layer_spectrum(
            model, train, p, k, cfg.include_bias, iters=cfg.lanczos_iters, seed=cfg.seed, threads=cfg.threads
        )
        factors = layer_factors(model, train, p, cfg.include_bias, cfg.threads)
        approx = kron_approx_spectrum(factors, k)

        eig_frame = pd.DataFrame({"index": np.arange(k), "true": true.values, "approx": approx.values})
        files.append(write_csv(eig_frame, out / f"layer{p}_eigenvalues.csv"))
        curve = overlap_curve(true.vectors, approx.vectors)
        files.append(write_csv(curve.to_frame().drop(columns="std"), out / f"layer{p}_overlap.csv"))
        ratios = [top_singular_ratio(true.vectors[:, i], m, n) for i in range(k)]
        ratio_frame = pd.DataFrame({"index": np.arange(k), "ratio": ratios})
        files.append(write_csv(ratio_frame, out / f"layer{p}_singular_ratio.csv"))

        plain = layer_factors(model, train, p, include_bias=False, threads=cfg.threads)
        stats = autocorr_stats(plain, input_mean(model, train, p, include_bias=False, threads=cfg.threads))
        files.append(write_json(stats.model_dump(mode="json"), out / f"layer{p}_autocorr.json"))
        logger.info(f"layer {p}: top eigenvalue {true.values[0]:.4e}, top-{k} overlap {curve.overlaps[-1]:.3f}")
    return write_manifest(out, "spectra", files, checkpoint=cfg.checkpoint, k=cfg.k)


def cmd_overlap(cfg: OverlapConfig) -> Path:
    out = Path(cfg.out)
    train, _ = load_datasets(cfg.data)
    models = [_load_model(path) for path in cfg.checkpoints]
    if len({m.layer_dims for m in models}) != 1:
        raise ConfigError("checkpoints have different architectures", {"checkpoints": cfg.checkpoints})
    _check_architecture(models[0], train)
    files: List[Path] = []
    for p in _layers(cfg, models[0]):
        m, n = models[0].layer_shape(p, cfg.include_bias)
        curve = cross_model_overlap(
            models,
            train,
            p,
            min(cfg.k_max, m * n),
            cfg.include_bias,
            iters=cfg.lanczos_iters,
            seed=cfg.seed,
            threads=cfg.threads,
        )
        files.append(write_csv(curve.to_frame(), out / f"layer{p}_overlap.csv"))
    return write_manifest(out, "overlap", files, checkpoints=cfg.checkpoints, k_max=cfg.k_max)


def cmd_correspondence(cfg: CorrespondenceConfig) -> Path:
    out = Path(cfg.out)
    train, _ = load_datasets(cfg.data)
    model = _load_model(cfg.checkpoint)
    _check_architecture(model, train)
    files: List[Path] = []
    for p in _layers(cfg, model):
        m, n = model.layer_shape(p, cfg.include_bias)
        t = min(cfg.top, m * n)
        true = true_layer_spectrum(
            model, train, p, t, cfg.include_bias, iters=cfg.lanczos_iters, seed=cfg.seed, threads=cfg.threads
        )
        factors = layer_factors(model, train, p, cfg.include_bias, cfg.threads)
        c_in = correspondence_input(true.vectors, factors.in_eig.vectors, m, n)
        c_out = correspondence_output(true.vectors, factors.out_eig.vectors, m, n)
        files.append(write_csv(c_in.to_frame(), out / f"layer{p}_corr_input.csv"))
        files.append(write_csv(c_out.to_frame(), out / f"layer{p}_corr_output.csv"))
    return write_manifest(out, "correspondence", files, checkpoint=cfg.checkpoint, top=cfg.top)


def cmd_verify_theorem(cfg: TheoremConfig) -> Path:
    out = Path(cfg.out)
    reports = theorem_grid(cfg.widths, cfg.dims, cfg.c, cfg.n_samples, cfg.seeds, cfg.threads)
    for r in reports:
        logger.info(f"n={r.n} d={r.d} seed={r.seed}: {r.runtime_secs:.1f}s")
    files = [
        write_json([r.model_dump(exclude={"runtime_secs"}) for r in reports], out / "reports.json"),
        write_csv(grid_frame(reports), out / "grid.csv"),
    ]
    return write_manifest(out, "verify-theorem", files, cells=len(reports))


def cmd_pacbayes(cfg: PacBayesConfig) -> Path:
    if cfg.init_checkpoint is None:
        raise ConfigError("pacbayes needs init_checkpoint: the prior mean is the network's random initialization")
    out = Path(cfg.out)
    train, test = load_datasets(cfg.data)
    model = _load_model(cfg.checkpoint)
    theta0 = _load_model(cfg.init_checkpoint)
    if theta0.layer_dims != model.layer_dims:
        raise ConfigError("init checkpoint does not match the trained checkpoint")
    _check_architecture(model, train)

    state = init_state(model, theta0.flatten())
    state = optimize(
        state,
        model,
        train,
        variant=cfg.variant,
        tau=cfg.tau,
        T=cfg.iterations,
        eta=cfg.eta,
        seed=cfg.seed,
        batch=cfg.batch,
        delta=cfg.delta,
        b_prec=cfg.b_prec,
        c_lambda=cfg.c_lambda,
        lr_decay_every=cfg.lr_decay_every,
        lr_decay_factor=cfg.lr_decay_factor,
        threads=cfg.threads,
    )
    report = final_bound(
        state,
        model,
        train,
        test,
        mc_iters=cfg.mc_iters,
        mc_freq=cfg.mc_freq,
        delta=cfg.delta,
        delta_prime=cfg.delta_prime,
        b_prec=cfg.b_prec,
        c_lambda=cfg.c_lambda,
        seed=cfg.seed,
        threads=cfg.threads,
    )
    files = [
        write_json(report.model_dump(), out / "bound.json"),
        save_checkpoint(out / "posterior.ckpt", model.with_params(state.w), cfg.seed, cfg.iterations),
        save_array(out / "varsigma.bin", state.varsigma, {"varrho": state.varrho, "variant": cfg.variant.value}),
    ]
    return write_manifest(out, "pacbayes", files, variant=cfg.variant.value)
