import json

import pytest

from groundeval import EngineConfig, load_config, make_backend
from groundeval.backends import HttpScorerBackend, MockBackend
from groundeval.errors import InputError


class TestDefaults:
    def test_published_operating_point(self):
        config = EngineConfig()
        assert (config.w_format, config.w_correct, config.w_ground) == (1.0, 1.0, 2.0)
        assert config.tau == 0.80
        assert config.top_k == 3
        assert config.group_size == 8
        assert config.bootstrap_resamples == 1000
        assert config.bootstrap_level == 0.95
        assert config.grounded_threshold == 0.5
        assert config.contradicted_threshold == -0.5
        assert config.cluster_threshold == 0.85
        assert config.chunk_size == 320
        assert config.chunk_overlap == 64

    def test_weights_property(self):
        assert EngineConfig().weights.total == 4.0


class TestPrecedence:
    def test_file_overrides_defaults(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"tau": 0.9, "top_k": 5}))
        config = load_config(path, env={})
        assert config.tau == 0.9
        assert config.top_k == 5
        assert config.group_size == 8  # untouched default

    def test_env_overrides_file(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"tau": 0.9}))
        config = load_config(path, env={"GROUNDEVAL_TAU": "0.7",
                                        "GROUNDEVAL_SEED": "99"})
        assert config.tau == 0.7
        assert config.seed == 99

    def test_flags_override_env(self, tmp_path):
        config = load_config(None, env={"GROUNDEVAL_TAU": "0.7"},
                             flags={"tau": 0.6, "top_k": None})
        assert config.tau == 0.6
        assert config.top_k == 3  # None flags are "not given"

    def test_env_bool_coercion(self):
        config = load_config(None, env={"GROUNDEVAL_STRICT_PARSE": "true",
                                        "GROUNDEVAL_MOCK": "1"})
        assert config.strict_parse is True
        assert config.mock is True

    def test_unknown_file_key_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text(json.dumps({"no_such_option": 1}))
        with pytest.raises(InputError):
            load_config(path, env={})

    def test_malformed_file_rejected(self, tmp_path):
        path = tmp_path / "config.json"
        path.write_text("{not json")
        with pytest.raises(InputError):
            load_config(path, env={})


class TestMakeBackend:
    def test_mock_by_default(self):
        assert isinstance(make_backend(EngineConfig()), MockBackend)

    def test_mock_flag_beats_url(self):
        config = EngineConfig(mock=True, backend_url="http://example.test")
        assert isinstance(make_backend(config), MockBackend)

    def test_url_builds_http_client(self):
        config = EngineConfig(backend_url="http://example.test")
        assert isinstance(make_backend(config), HttpScorerBackend)

    def test_mock_seed_flows_through(self):
        backend = make_backend(EngineConfig(mock_seed=5))
        assert backend.identifier == "mock:seed=5,dim=64"
