"""
Unit tests for detector checkpoint files
"""

import numpy as np
import pytest
import yaml

from src.components.checkpoint import (
    CheckpointError,
    document_to_params,
    load_checkpoint,
    params_to_document,
    save_checkpoint,
)
from src.models.lstm import LstmNetwork, init_lstm_params
from src.models.rnn_basic import RnnNetwork, init_rnn_params


@pytest.fixture
def lstm():
    params = init_lstm_params(4, 2, 3, 3, np.random.default_rng(0))
    params.meta.update({"detector": "lstm3", "stride": 2})
    return LstmNetwork(params)


@pytest.fixture
def rnn():
    params = init_rnn_params(4, 2, 5, np.random.default_rng(1))
    params.meta.update({"detector": "rnn", "stride": 2})
    return RnnNetwork(params)


class TestRoundTrip:
    """Test save and load"""

    @pytest.mark.parametrize("network_name", ["rnn", "lstm"])
    def test_byte_identical_resave(self, network_name, request, tmp_path):
        network = request.getfixturevalue(network_name)
        first = save_checkpoint(network, tmp_path / "first.yaml")
        second = save_checkpoint(load_checkpoint(first), tmp_path / "second.yaml")
        assert first.read_bytes() == second.read_bytes()

    def test_parameters_exact(self, lstm, tmp_path):
        restored = load_checkpoint(save_checkpoint(lstm, tmp_path / "lstm.yaml"))
        assert isinstance(restored, LstmNetwork)
        assert restored.params.names == lstm.params.names
        for name in lstm.params:
            np.testing.assert_array_equal(restored.params[name], lstm.params[name])
        assert restored.params.meta == lstm.params.meta

    def test_restored_network_predicts_identically(self, rnn, tmp_path):
        restored = load_checkpoint(save_checkpoint(rnn, tmp_path / "rnn.yaml"))
        assert isinstance(restored, RnnNetwork)
        x = np.array([[1.0, 0.0, 1.0, 1.0], [0.0, 0.0, 1.0, 0.0]])
        np.testing.assert_array_equal(restored.forward(x)[1], rnn.forward(x)[1])

    def test_creates_parent_directory(self, rnn, tmp_path):
        path = save_checkpoint(rnn, tmp_path / "nested" / "dir" / "rnn.yaml")
        assert path.is_file()

    def test_document_layout(self, lstm):
        document = params_to_document(lstm.params)
        assert list(document) == ["format_version", "arch", "header", "parameters"]
        assert document["arch"] == "lstm"
        assert document["header"]["depth"] == 3
        assert list(document["header"]) == sorted(document["header"])
        assert document["parameters"][0]["name"] == "layer1.W_fs"
        assert document["parameters"][0]["shape"] == [3, 4]


class TestErrors:
    """Test rejection of bad checkpoint files"""

    def test_missing_file(self, tmp_path):
        with pytest.raises(FileNotFoundError):
            load_checkpoint(tmp_path / "absent.yaml")

    def test_wrong_version(self, rnn):
        document = params_to_document(rnn.params)
        document["format_version"] = 99
        with pytest.raises(CheckpointError, match="format_version"):
            document_to_params(document)

    def test_unknown_arch(self, rnn):
        document = params_to_document(rnn.params)
        document["arch"] = "transformer"
        with pytest.raises(CheckpointError, match="arch"):
            document_to_params(document)

    def test_value_count_mismatch(self, rnn):
        document = params_to_document(rnn.params)
        document["parameters"][0]["values"].pop()
        with pytest.raises(CheckpointError, match="values"):
            document_to_params(document)

    def test_inconsistent_shapes(self, rnn, tmp_path):
        document = params_to_document(rnn.params)
        for entry in document["parameters"]:
            if entry["name"] == "W_hh":
                entry["shape"] = [1, 25]
        path = tmp_path / "bad.yaml"
        path.write_text(yaml.safe_dump(document))
        with pytest.raises(CheckpointError, match="inconsistent"):
            load_checkpoint(path)

    def test_not_a_mapping(self, tmp_path):
        path = tmp_path / "list.yaml"
        path.write_text("- 1\n- 2\n")
        with pytest.raises(CheckpointError, match="mapping"):
            load_checkpoint(path)

    def test_malformed_yaml(self, tmp_path):
        path = tmp_path / "broken.yaml"
        path.write_text("format_version: [1\n")
        with pytest.raises(CheckpointError, match="malformed"):
            load_checkpoint(path)

    def test_is_value_error(self):
        assert issubclass(CheckpointError, ValueError)
