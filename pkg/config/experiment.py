"""Experiment configuration: environment block, policy blocks, run settings.

Files are YAML. Unknown keys anywhere are configuration errors so that typos
in sweep files fail loudly instead of silently using a default.
"""

from __future__ import annotations

from pathlib import Path
from typing import Annotated, Any, List, Literal, Optional, Union

import yaml
from pydantic import BaseModel, ConfigDict, Field, ValidationError, model_validator

from config.settings import settings
from environments.bandit_env import BetaScheme, NoiseLaw
from models.vb_spike_slab import ConstantLambda, LambdaMode, PracticalSqrt, TheoryLambda
from utils.errors import ConfigurationError


class _Strict(BaseModel):
    model_config = ConfigDict(extra="forbid", validate_assignment=True)


class EnvConfig(_Strict):
    kind: Literal["synthetic", "dataset"] = "synthetic"
    num_arms: int = Field(5, ge=1)
    dim: int = Field(100, ge=1)
    sparsity: int = Field(3, ge=1)
    context: Literal["equicorrelated", "autoregressive", "truncated_gaussian"] = "equicorrelated"
    rho: float = Field(0.3, ge=0.0, lt=1.0)
    phi: float = Field(0.3, gt=-1.0, lt=1.0)
    x_max: float = Field(1.0, gt=0.0)
    clip_x_max: Optional[float] = Field(None, gt=0.0)
    noise_sigma: float = Field(0.5, ge=0.0)
    noise_law: NoiseLaw = NoiseLaw.GAUSSIAN
    beta_scheme: BetaScheme = BetaScheme.SETUP1
    beta_seed: int = 0
    dataset_path: Optional[str] = None
    label_column: str = "label"
    transform: Literal["none", "log2"] = "none"
    reference_sparsity: Optional[int] = Field(None, ge=1)
    dataset_noise_sigma: Optional[float] = Field(None, gt=0.0)

    @model_validator(mode="after")
    def _check_kind(self) -> "EnvConfig":
        if self.kind == "dataset" and not self.dataset_path:
            raise ValueError("dataset environments need dataset_path")
        if self.kind == "synthetic" and self.sparsity > self.dim:
            raise ValueError(f"sparsity {self.sparsity} exceeds dim {self.dim}")
        return self


class _PolicyBase(_Strict):
    label: Optional[str] = None

    @property
    def display_name(self) -> str:
        return self.label or self.policy


class VBTSConfig(_PolicyBase):
    policy: Literal["vbts"] = "vbts"
    lambda_mode: Literal["constant", "practical", "theory"] = "constant"
    lambda_value: float = Field(1.0, gt=0.0)
    lambda_star: float = Field(0.3, gt=0.0)
    x_max: float = Field(1.0, gt=0.0)
    inclusion_exponent: float = Field(1.0, gt=0.0)
    inclusion_a0: float = Field(1.0, gt=0.0)
    refit_every: int = Field(1, ge=1)
    noise_sigma: Optional[float] = Field(None, gt=0.0)
    tol: Optional[float] = Field(None, gt=0.0)
    max_sweeps: Optional[int] = Field(None, ge=1)

    def schedule(self) -> LambdaMode:
        if self.lambda_mode == "theory":
            return TheoryLambda()
        if self.lambda_mode == "practical":
            return PracticalSqrt(self.lambda_star)
        return ConstantLambda(self.lambda_value)


class LinTSConfig(_PolicyBase):
    policy: Literal["lints"] = "lints"
    scale: float = Field(1.0, ge=0.0)


class LinUCBConfig(_PolicyBase):
    policy: Literal["linucb"] = "linucb"
    alpha: float = Field(1.0, ge=0.0)


class ESTCConfig(_PolicyBase):
    policy: Literal["estc"] = "estc"
    explore_len: Optional[int] = Field(None, ge=0)
    noise_sigma: Optional[float] = Field(None, ge=0.0)
    x_max: float = Field(1.0, gt=0.0)


class LassoL1Config(_PolicyBase):
    policy: Literal["lasso_l1"] = "lasso_l1"
    radius_scale: float = Field(1.0, ge=0.0)
    sparsity: Optional[int] = Field(None, ge=1)
    noise_sigma: Optional[float] = Field(None, ge=0.0)
    x_max: float = Field(1.0, gt=0.0)


class OracleConfig(_PolicyBase):
    policy: Literal["oracle"] = "oracle"


class UniformConfig(_PolicyBase):
    policy: Literal["uniform"] = "uniform"


PolicyConfig = Annotated[
    Union[VBTSConfig, LinTSConfig, LinUCBConfig, ESTCConfig, LassoL1Config, OracleConfig, UniformConfig],
    Field(discriminator="policy"),
]


class ExperimentConfig(_Strict):
    name: str = "experiment"
    env: EnvConfig = Field(default_factory=EnvConfig)
    policies: List[PolicyConfig] = Field(min_length=1)
    horizon: int = Field(ge=1)
    replications: int = Field(1, ge=1)
    base_seed: int = 0
    log_every: int = Field(0, ge=0)
    output_dir: Optional[str] = None
    n_jobs: int = Field(1, ge=1)
    common_environment: bool = True
    record_micros: bool = False
    record_noise: bool = False

    @model_validator(mode="after")
    def _unique_labels(self) -> "ExperimentConfig":
        labels = [p.display_name for p in self.policies]
        duplicates = sorted({name for name in labels if labels.count(name) > 1})
        if duplicates:
            raise ValueError(f"policy labels must be unique, duplicated: {', '.join(duplicates)}")
        return self

    @property
    def output_path(self) -> Path:
        return Path(self.output_dir) if self.output_dir else Path(settings.output_root) / self.name

    @property
    def labels(self) -> List[str]:
        return [p.display_name for p in self.policies]


def _format_errors(exc: ValidationError) -> str:
    parts = []
    for error in exc.errors():
        location = ".".join(str(piece) for piece in error["loc"]) or "<root>"
        parts.append(f"{location}: {error['msg']}")
    return "; ".join(parts)


def parse_config(data: Any) -> ExperimentConfig:
    try:
        return ExperimentConfig.model_validate(data)
    except ValidationError as exc:
        raise ConfigurationError(f"invalid experiment config: {_format_errors(exc)}") from None


def load_config(path: Union[str, Path]) -> ExperimentConfig:
    path = Path(path)
    try:
        with open(path, "r", encoding="utf-8") as f:
            data = yaml.safe_load(f)
    except FileNotFoundError:
        raise ConfigurationError(f"config file not found: {path}") from None
    except yaml.YAMLError as exc:
        raise ConfigurationError(f"could not parse {path}: {exc}") from None
    if not isinstance(data, dict):
        raise ConfigurationError(f"{path} does not contain a mapping")
    return parse_config(data)


def config_to_dict(config: ExperimentConfig) -> dict:
    return config.model_dump(mode="json")


def dump_config(config: ExperimentConfig, path: Union[str, Path]) -> Path:
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8") as f:
        yaml.safe_dump(config_to_dict(config), f, default_flow_style=False, sort_keys=False)
    return path


def parse_value(text: str) -> Any:
    """Interpret a command-line value the way the config file would."""
    try:
        return yaml.safe_load(text)
    except yaml.YAMLError:
        return text


def with_override(config: ExperimentConfig, key: str, value: Any) -> ExperimentConfig:
    """Copy of ``config`` with one dotted key replaced.

    ``env.rho`` and ``horizon`` address fields directly. ``policies.<label>.<field>``
    or ``policies.<index>.<field>`` address one policy block; a bare policy
    field name such as ``lambda_star`` is applied to every block that has it.
    """
    data = config_to_dict(config)
    parts = key.split(".")
    if parts[0] == "policies" and len(parts) == 3:
        selector, field_name = parts[1], parts[2]
        labels = config.labels
        if selector.isdigit() and int(selector) < len(labels):
            index = int(selector)
        elif selector in labels:
            index = labels.index(selector)
        else:
            raise ConfigurationError(f"no policy block matches {selector!r}")
        data["policies"][index][field_name] = value
    elif len(parts) == 1 and parts[0] not in data:
        touched = [block for block in data["policies"] if parts[0] in block]
        if not touched:
            raise ConfigurationError(f"unknown config key {key!r}")
        for block in touched:
            block[parts[0]] = value
    else:
        target = data
        for piece in parts[:-1]:
            if not isinstance(target, dict) or piece not in target:
                raise ConfigurationError(f"unknown config key {key!r}")
            target = target[piece]
        if not isinstance(target, dict) or parts[-1] not in target:
            raise ConfigurationError(f"unknown config key {key!r}")
        target[parts[-1]] = value
    return parse_config(data)
