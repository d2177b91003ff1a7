"""Config parsing and model-container round trips."""

import json

import numpy as np
import pytest

from pitchlab import artifacts, config as configmod, eventmodel as em, nn

FULL_KEYSET_CONFIG = b"""\
# Event model training
train_path: /path/to/train
valid_path: /path/to/valid
save_path: /path/to/save
test: False

num_epoch: 50
print_freq: 10
early_stop_patience: 5
dataloader_num_worker: 4
device: None

basic_features: ['action', 'delta_T', 'start_x','start_y']
other_features: ['team','home_team']
use_other_features: True
num_actions: 9
seq_len: 40

optuna: True
optuna_n_trials: 100

learning_rate: [0.01]
eps: [1e-16]
batch_size: [256]
hidden_dim: [16,256,512,1024,2048]
"""


class TestLoadConfig:
    def test_full_keyset_file(self, tmp_path):
        path = tmp_path / "config.yaml"
        path.write_bytes(FULL_KEYSET_CONFIG)
        cfg = configmod.load_config(path)
        assert cfg.scalar("num_epoch") == 50
        assert cfg.scalar("early_stop_patience") == 5
        assert cfg.values["hidden_dim"] == [16, 256, 512, 1024, 2048]
        assert cfg.scalar("learning_rate") == 0.01
        assert cfg.scalar("optuna") is True
        assert cfg.scalar("optuna_n_trials") == 100
        assert cfg.warnings == []

    def test_string_exponent_coerced(self):
        cfg = configmod.load_config(b"eps: [1e-16]\n")
        assert cfg.values["eps"] == [1e-16]

    def test_unknown_keys_warn_never_fail(self):
        cfg = configmod.load_config(b"definitely_not_a_key: 3\nnum_epoch: 2\n")
        assert cfg.scalar("num_epoch") == 2
        assert any("definitely_not_a_key" in w for w in cfg.warnings)

    def test_unsupported_num_actions_warns_and_resets(self):
        cfg = configmod.load_config(b"num_actions: 12\n")
        assert cfg.values["num_actions"] == 9
        assert any("num_actions" in w for w in cfg.warnings)

    def test_search_space_extraction(self):
        cfg = configmod.load_config(b"hidden_dim: [16, 32]\nlearning_rate: 0.01\n")
        assert cfg.search_space() == {"hidden_dim": [16, 32]}

    def test_scalar_on_search_field_rejected(self):
        cfg = configmod.load_config(b"hidden_dim: [16, 32]\n")
        with pytest.raises(configmod.ConfigError):
            cfg.scalar("hidden_dim")

    def test_non_mapping_rejected(self):
        with pytest.raises(configmod.ConfigError):
            configmod.load_config(b"- just\n- a list\n")


class TestModelContainers:
    def test_mlp_round_trip(self, tmp_path):
        model = nn.mlp_init([4, 8, 3], seed=5)
        path = tmp_path / "m.model"
        artifacts.save_mlp(path, model, config_echo={"note": 1})
        loaded = artifacts.load_model(path)
        for a, b in zip(model.layers, loaded.layers):
            assert np.array_equal(a.w, b.w)
            assert np.array_equal(a.b, b.b)
            assert a.activation == b.activation
        assert loaded.seed == 5
        assert artifacts.model_config_echo(path) == {"note": 1}

    def test_chain_round_trip(self, tmp_path):
        chain = em.lem_init(3, hidden_dim=8, seed=2)
        path = tmp_path / "chain.model"
        artifacts.save_lem_chain(path, chain, config_echo={"hidden_dim": 8})
        loaded = artifacts.load_model(path)
        assert isinstance(loaded, em.LemChain)
        assert loaded.context_depth == 3
        assert loaded.codec == chain.codec
        assert np.array_equal(loaded.model_c.layers[0].w, chain.model_c.layers[0].w)

    def test_maj_round_trip(self, tmp_path):
        model = em.MajModel("short_pass", 3.25, 51.0, 35.5)
        path = tmp_path / "maj.model"
        artifacts.save_maj(path, model)
        loaded = artifacts.load_model(path)
        assert loaded == model

    def test_write_is_byte_deterministic(self, tmp_path):
        chain = em.lem_init(1, hidden_dim=4, seed=0)
        p1, p2 = tmp_path / "a.model", tmp_path / "b.model"
        artifacts.save_lem_chain(p1, chain, {"k": "v"})
        artifacts.save_lem_chain(p2, chain, {"k": "v"})
        assert p1.read_bytes() == p2.read_bytes()

    def test_bad_magic_rejected(self, tmp_path):
        path = tmp_path / "junk.model"
        path.write_bytes(b"not a container")
        with pytest.raises(artifacts.ArtifactError):
            artifacts.load_model(path)


class TestRunManifest:
    def test_fields_present(self, tmp_path):
        path = artifacts.write_run_manifest(
            tmp_path, "train event", {"x": 1}, {"lr": 0.01}, 7, 1.5,
            ["model.bin"], ["warn A"],
        )
        manifest = json.loads(path.read_text())
        assert manifest["command"] == "train event"
        assert manifest["seed"] == 7
        assert manifest["config"] == {"lr": 0.01}
        assert manifest["outputs"] == ["model.bin"]
        assert manifest["version"]
        assert manifest["wall_time_s"] == 1.5
