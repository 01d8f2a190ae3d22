"""JSON documents: model configs (read) and scale plans (read/write)."""
from __future__ import annotations

import json
import os
from dataclasses import asdict, dataclass
from typing import Optional

import numpy as np

from .extensions import Method, ScalePlan
from .rope_core import RopeParams


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ModelConfigDoc:
    """The RoPE-relevant subset of an open-model ``config.json``."""

    rope_theta: float
    max_position_embeddings: int
    head_dim: Optional[int] = None
    hidden_size: Optional[int] = None
    num_attention_heads: Optional[int] = None

    @classmethod
    def from_dict(cls, doc: dict) -> "ModelConfigDoc":
        if not isinstance(doc, dict):
            raise ConfigError("model config must be a JSON object")
        for key in ("rope_theta", "max_position_embeddings"):
            if doc.get(key) is None:
                raise ConfigError(f"model config is missing required field '{key}'")
        return cls(
            rope_theta=float(doc["rope_theta"]),
            max_position_embeddings=int(doc["max_position_embeddings"]),
            head_dim=_opt_int(doc, "head_dim"),
            hidden_size=_opt_int(doc, "hidden_size"),
            num_attention_heads=_opt_int(doc, "num_attention_heads"),
        )

    @classmethod
    def load(cls, path: str | os.PathLike) -> "ModelConfigDoc":
        try:
            with open(path, encoding="utf-8") as fh:
                doc = json.load(fh)
        except OSError as exc:
            raise ConfigError(f"cannot read model config {path}: {exc.strerror}") from exc
        except json.JSONDecodeError as exc:
            raise ConfigError(f"model config {path} is not valid JSON: {exc}") from exc
        return cls.from_dict(doc)

    def resolved_head_dim(self) -> int:
        if self.head_dim is not None:
            d = self.head_dim
        elif self.hidden_size is not None and self.num_attention_heads is not None:
            if self.num_attention_heads <= 0 or self.hidden_size % self.num_attention_heads:
                raise ConfigError(
                    f"hidden_size {self.hidden_size} is not divisible by "
                    f"num_attention_heads {self.num_attention_heads}"
                )
            d = self.hidden_size // self.num_attention_heads
        else:
            raise ConfigError(
                "model config needs 'head_dim' or both 'hidden_size' and 'num_attention_heads'"
            )
        if d <= 0 or d % 2:
            raise ConfigError(f"resolved head_dim {d} must be a positive even integer")
        return d

    def to_params(self) -> RopeParams:
        try:
            return RopeParams(self.rope_theta, self.resolved_head_dim(), self.max_position_embeddings)
        except ValueError as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from exc


def _opt_int(doc, key):
    value = doc.get(key)
    if value is None:
        return None
    if isinstance(value, bool) or int(value) != value:
        raise ConfigError(f"field '{key}' must be an integer, got {value!r}")
    return int(value)


@dataclass
class ScalePlanDoc:
    method: str
    scale: float
    alpha: float
    beta_hp: float
    d_low: int
    d_high: int
    original_max_position_embeddings: int
    temperature: float
    lambdas: list
    inv_freq_multipliers: list
    rope_theta: Optional[float] = None
    head_dim: Optional[int] = None

    def __post_init__(self):
        if not self.inv_freq_multipliers or self.inv_freq_multipliers[0] != 1.0:
            raise ValueError("inv_freq_multipliers must start with 1")
        if len(self.lambdas) != len(self.inv_freq_multipliers):
            raise ValueError("lambdas and inv_freq_multipliers differ in length")

    @classmethod
    def from_plan(cls, plan: ScalePlan, params: RopeParams) -> "ScalePlanDoc":
        return cls(
            method=plan.method.value,
            scale=plan.scale,
            alpha=plan.alpha,
            beta_hp=plan.beta_hp,
            d_low=plan.d_low,
            d_high=plan.d_high,
            original_max_position_embeddings=params.trained_len,
            temperature=plan.temperature,
            lambdas=[float(x) for x in plan.lambdas],
            inv_freq_multipliers=[float(x) for x in plan.cumulative],
            rope_theta=params.base,
            head_dim=params.head_dim,
        )

    def to_plan(self) -> ScalePlan:
        return ScalePlan(
            Method.parse(self.method), self.scale, self.d_low, self.d_high,
            np.asarray(self.lambdas), np.asarray(self.inv_freq_multipliers),
            self.temperature, self.alpha, self.beta_hp,
        )

    def params(self) -> RopeParams:
        if self.rope_theta is None or self.head_dim is None:
            raise ValueError("plan document does not record rope_theta/head_dim")
        return RopeParams(self.rope_theta, self.head_dim, self.original_max_position_embeddings)

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=2) + "\n"

    @classmethod
    def from_json(cls, text: str) -> "ScalePlanDoc":
        doc = json.loads(text)
        fields = cls.__dataclass_fields__
        return cls(**{k: v for k, v in doc.items() if k in fields})

    def save(self, path) -> None:
        with open(path, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(self.to_json())

    @classmethod
    def load(cls, path) -> "ScalePlanDoc":
        with open(path, encoding="utf-8") as fh:
            return cls.from_json(fh.read())
