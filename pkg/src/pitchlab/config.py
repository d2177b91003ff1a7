"""Training configuration files.

Configs are line-oriented ``key: value`` YAML with ``[a, b, c]`` list
syntax. List-valued hyperparameter fields define the random-search
space; scalars are fixed. Unknown keys warn and are echoed into run
manifests, never rejected.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Union

import yaml

from .core import PitchlabError

# Keys the event-model trainer understands. device and
# dataloader_num_worker are accepted for compatibility and ignored
# (single-process CPU training only).
EVENT_CONFIG_KEYS = frozenset(
    {
        "train_path",
        "valid_path",
        "test_path",
        "save_path",
        "test",
        "num_epoch",
        "print_freq",
        "early_stop_patience",
        "dataloader_num_worker",
        "device",
        "basic_features",
        "other_features",
        "use_other_features",
        "num_actions",
        "seq_len",
        "optuna",
        "optuna_n_trials",
        "learning_rate",
        "eps",
        "batch_size",
        "hidden_dim",
        "num_layers",
        "NN_deltaT_num_layers",
        "NN_location_num_layers",
        "NN_action_num_layers",
        "seed",
        "model",
    }
)

RL_CONFIG_KEYS = frozenset(
    {
        "save_path",
        "gamma",
        "lambda1",
        "lambda2",
        "learning_rate",
        "num_epoch",
        "epochs",
        "batch_size",
        "seed",
        "hidden_dim",
        "print_freq",
        "device",
    }
)

# fields whose values (or list elements) must be numeric
_NUMERIC_KEYS = frozenset(
    {
        "num_epoch",
        "epochs",
        "print_freq",
        "early_stop_patience",
        "num_actions",
        "seq_len",
        "optuna_n_trials",
        "learning_rate",
        "eps",
        "batch_size",
        "hidden_dim",
        "num_layers",
        "NN_deltaT_num_layers",
        "NN_location_num_layers",
        "NN_action_num_layers",
        "seed",
        "gamma",
        "lambda1",
        "lambda2",
    }
)


class ConfigError(PitchlabError, ValueError):
    pass


@dataclass
class LoadedConfig:
    values: Dict[str, object]
    warnings: List[str] = field(default_factory=list)

    def get(self, key: str, default=None):
        return self.values.get(key, default)

    def scalar(self, key: str, default=None):
        """Value of a key, unwrapping singleton lists."""
        value = self.values.get(key, default)
        if isinstance(value, list):
            if len(value) != 1:
                raise ConfigError(
                    f"{key!r} is a search space {value}; run the search command"
                )
            return value[0]
        return value

    def search_space(self) -> Dict[str, list]:
        searchable = ("learning_rate", "batch_size", "hidden_dim", "num_layers")
        return {
            k: list(v)
            for k, v in self.values.items()
            if k in searchable and isinstance(v, list)
        }


def _coerce(key: str, value):
    if isinstance(value, list):
        return [_coerce(key, v) for v in value]
    if key in _NUMERIC_KEYS and isinstance(value, str):
        try:
            return int(value)
        except ValueError:
            try:
                return float(value)  # covers YAML-as-string forms like 1e-16
            except ValueError:
                raise ConfigError(f"{key!r} expects a number, got {value!r}") from None
    return value


def load_config(
    path: Union[str, Path, bytes],
    known_keys: frozenset = EVENT_CONFIG_KEYS,
) -> LoadedConfig:
    """Parse a config file; unknown keys warn, bad syntax fails."""
    if isinstance(path, bytes):
        text = path.decode("utf-8")
    else:
        text = Path(path).read_text(encoding="utf-8")
    try:
        raw = yaml.safe_load(text)
    except yaml.YAMLError as exc:
        raise ConfigError(f"config is not valid YAML: {exc}") from exc
    if raw is None:
        raw = {}
    if not isinstance(raw, dict):
        raise ConfigError(f"config must be a key: value mapping, got {type(raw).__name__}")

    loaded = LoadedConfig(values={})
    for key, value in raw.items():
        if key not in known_keys:
            loaded.warnings.append(f"unknown config key {key!r} ignored")
            continue
        loaded.values[key] = _coerce(key, value)

    num_actions = loaded.values.get("num_actions")
    if num_actions not in (None, 9):
        loaded.warnings.append(
            f"num_actions={num_actions} unsupported; the action vocabulary is 9 classes"
        )
        loaded.values["num_actions"] = 9
    return loaded
