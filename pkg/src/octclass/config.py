"""File-backed run configuration.

One YAML file drives every CLI command; unknown keys are hard errors so a
typo cannot silently fall back to a default. Flags override file values.
"""

from __future__ import annotations

from dataclasses import dataclass, field, fields

import yaml

from .augment import MixParams
from .errors import ConfigError, InvalidFractions
from .models import ModelConfig
from .training import OptimizerParams, TrainConfig, TrainSeeds
from .xai import LimeConfig, OcclusionConfig


@dataclass
class DatasetConfig:
    root: str = ""
    fractions: tuple[float, float, float] = (0.7, 0.15, 0.15)
    split_seed: int = 17

    def __post_init__(self):
        self.fractions = tuple(float(f) for f in self.fractions)
        if len(self.fractions) != 3 or any(f <= 0 for f in self.fractions):
            raise InvalidFractions(
                f"dataset.fractions must be three positive values: {self.fractions}"
            )
        if abs(sum(self.fractions) - 1.0) > 1e-9:
            raise InvalidFractions(
                f"dataset.fractions must sum to 1.0: {self.fractions}"
            )


@dataclass
class XaiDefaults:
    overlay_alpha: float = 0.4
    gradcam_layer: str | None = None
    lime: LimeConfig = field(default_factory=LimeConfig)
    occlusion: OcclusionConfig = field(default_factory=OcclusionConfig)


@dataclass
class ServiceConfig:
    host: str = "127.0.0.1"
    port: int = 8080
    explain_timeout_s: float = 60.0
    max_upload_mb: float = 10.0
    max_concurrent_explains: int = 2


@dataclass
class RunConfig:
    dataset: DatasetConfig = field(default_factory=DatasetConfig)
    model: ModelConfig = field(default_factory=ModelConfig)
    train: TrainConfig = field(default_factory=TrainConfig)
    xai: XaiDefaults = field(default_factory=XaiDefaults)
    service: ServiceConfig = field(default_factory=ServiceConfig)
    output_dir: str = "runs"


def _build(cls, doc: dict, path: str):
    """Construct a dataclass from a mapping, rejecting unknown keys."""
    if not isinstance(doc, dict):
        raise ConfigError(f"{path}: expected a mapping, got {type(doc).__name__}")
    known = {f.name for f in fields(cls)}
    unknown = sorted(set(doc) - known)
    if unknown:
        raise ConfigError(f"{path}: unknown keys {unknown}; known keys: {sorted(known)}")
    try:
        return cls(**doc)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"{path}: {exc}") from exc


def _section(doc: dict, name: str) -> dict:
    value = doc.get(name, {})
    if not isinstance(value, dict):
        raise ConfigError(f"{name}: expected a mapping, got {type(value).__name__}")
    return dict(value)


def run_config_from_mapping(doc: dict) -> RunConfig:
    if not isinstance(doc, dict):
        raise ConfigError(f"config root must be a mapping, got {type(doc).__name__}")
    sections = {"dataset", "model", "train", "augment", "xai", "service", "output_dir"}
    unknown = sorted(set(doc) - sections)
    if unknown:
        raise ConfigError(f"unknown config sections {unknown}; known: {sorted(sections)}")

    dataset = _build(DatasetConfig, _section(doc, "dataset"), "dataset")

    model_doc = _section(doc, "model")
    if "input_shape" in model_doc:
        model_doc["input_shape"] = tuple(model_doc["input_shape"])
    model = _build(ModelConfig, model_doc, "model")

    train_doc = _section(doc, "train")
    if "optimizer" in train_doc:
        train_doc["optimizer"] = _build(
            OptimizerParams, train_doc["optimizer"], "train.optimizer")
    if "seeds" in train_doc:
        train_doc["seeds"] = _build(TrainSeeds, train_doc["seeds"], "train.seeds")
    if "mix_params" in train_doc:
        raise ConfigError("train.mix_params: use the top-level 'augment' section")
    mix = _build(MixParams, doc.get("augment", {}), "augment")
    train_doc["mix_params"] = mix
    train = _build(TrainConfig, train_doc, "train")

    xai_doc = _section(doc, "xai")
    if "lime" in xai_doc:
        xai_doc["lime"] = _build(LimeConfig, xai_doc["lime"], "xai.lime")
    if "occlusion" in xai_doc:
        xai_doc["occlusion"] = _build(OcclusionConfig, xai_doc["occlusion"], "xai.occlusion")
    xai = _build(XaiDefaults, xai_doc, "xai")

    service = _build(ServiceConfig, doc.get("service", {}), "service")

    output_dir = doc.get("output_dir", "runs")
    if not isinstance(output_dir, str):
        raise ConfigError(f"output_dir must be a string, got {output_dir!r}")
    return RunConfig(dataset=dataset, model=model, train=train, xai=xai,
                     service=service, output_dir=output_dir)


def load_run_config(path: str) -> RunConfig:
    try:
        with open(path) as f:
            doc = yaml.safe_load(f)
    except FileNotFoundError as exc:
        raise ConfigError(f"config file not found: {path}") from exc
    except yaml.YAMLError as exc:
        raise ConfigError(f"could not parse config {path}: {exc}") from exc
    return run_config_from_mapping(doc or {})


def dump_run_config(config: RunConfig) -> str:
    """Echo the effective configuration as YAML (written into output dirs)."""
    doc = {
        "dataset": {
            "root": config.dataset.root,
            "fractions": list(config.dataset.fractions),
            "split_seed": config.dataset.split_seed,
        },
        "model": config.model.to_dict(),
        "train": {
            "batch_size": config.train.batch_size,
            "learning_rate": config.train.learning_rate,
            "max_epochs": config.train.max_epochs,
            "patience": config.train.patience,
            "min_delta": config.train.min_delta,
            "loss": config.train.loss,
            "optimizer": {
                "beta1": config.train.optimizer.beta1,
                "beta2": config.train.optimizer.beta2,
                "epsilon": config.train.optimizer.epsilon,
            },
            "seeds": {
                "data": config.train.seeds.data,
                "model": config.train.seeds.model,
                "augment": config.train.seeds.augment,
            },
        },
        "augment": {
            "alpha_mixup": config.train.mix_params.alpha_mixup,
            "alpha_cutmix": config.train.mix_params.alpha_cutmix,
            "apply_probability": config.train.mix_params.apply_probability,
            "rng_seed": config.train.mix_params.rng_seed,
        },
        "xai": {
            "overlay_alpha": config.xai.overlay_alpha,
            "gradcam_layer": config.xai.gradcam_layer,
            "lime": config.xai.lime.__dict__.copy(),
            "occlusion": config.xai.occlusion.__dict__.copy(),
        },
        "service": config.service.__dict__.copy(),
        "output_dir": config.output_dir,
    }
    return yaml.safe_dump(doc, sort_keys=False)
