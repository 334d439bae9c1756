"""Single-line JSON model files, float and quantized."""

import json

import numpy as np
import pytest

from lidarcount.modelio import ModelFormatError, load_model, save_model
from lidarcount.nn.model import Model, ModelSpec, dense, init_params, relu, softmax
from lidarcount.quantize import QuantizedModel, quantize_model


def sample_model():
    spec = ModelSpec("io-test", (5,), (dense(4), relu(), dense(2), softmax()))
    model = Model(spec, init_params(spec, 3)).finalize()
    model.threshold = 0.125
    model.metadata["normalizer_mean"] = [0.0] * 5
    model.metadata["epochs"] = 7
    return model


class TestFloatRoundTrip:
    def test_everything_survives(self, tmp_path):
        model = sample_model()
        path = str(tmp_path / "m.json")
        save_model(model, path)
        back = load_model(path)
        assert isinstance(back, Model)
        assert back.spec == model.spec
        for pa, pb in zip(model.params, back.params):
            assert sorted(pa) == sorted(pb)
            for k in pa:
                np.testing.assert_array_equal(pa[k], pb[k])
        assert back.threshold == 0.125
        assert back.metadata["normalizer_mean"] == [0.0] * 5
        assert back.metadata["epochs"] == 7

    def test_file_is_one_json_line(self, tmp_path):
        path = str(tmp_path / "m.json")
        save_model(sample_model(), path)
        text = (tmp_path / "m.json").read_text()
        assert text.endswith("\n") and text.count("\n") == 1
        json.loads(text)  # the single line is a complete document

    def test_awkward_floats_bit_exact(self, tmp_path):
        model = sample_model()
        model.params[0]["w"] = np.full((5, 4), 1 / 3)
        model.params[0]["w"][0, 0] = 1e-300
        path = str(tmp_path / "m.json")
        save_model(model, path)
        back = load_model(path)
        np.testing.assert_array_equal(back.params[0]["w"], model.params[0]["w"])

    def test_loaded_arrays_read_only(self, tmp_path):
        path = str(tmp_path / "m.json")
        save_model(sample_model(), path)
        back = load_model(path)
        with pytest.raises(ValueError):
            back.params[0]["w"][0, 0] = 9.0


class TestQuantizedRoundTrip:
    def test_everything_survives(self, tmp_path):
        model = sample_model()
        q = quantize_model(model, np.random.default_rng(0).normal(size=(8, 5)))
        path = str(tmp_path / "q.json")
        save_model(q, path)
        back = load_model(path)
        assert isinstance(back, QuantizedModel)
        assert back.spec == q.spec
        for la, lb in zip(q.weights, back.weights):
            assert sorted(la) == sorted(lb)
            for k in la:
                np.testing.assert_array_equal(la[k].data, lb[k].data)
                assert la[k].params == lb[k].params
        assert back.activations == q.activations
        assert back.threshold == q.threshold
        assert back.metadata["epochs"] == 7

    def test_save_load_save_stable(self, tmp_path):
        model = sample_model()
        q = quantize_model(model, np.random.default_rng(1).normal(size=(4, 5)))
        p1, p2 = str(tmp_path / "a.json"), str(tmp_path / "b.json")
        save_model(q, p1)
        save_model(load_model(p1), p2)
        assert (tmp_path / "a.json").read_bytes() == (tmp_path / "b.json").read_bytes()


class TestFormatErrors:
    def write(self, tmp_path, text):
        path = tmp_path / "bad.json"
        path.write_text(text)
        return str(path)

    def test_not_json(self, tmp_path):
        with pytest.raises(ModelFormatError, match="not valid JSON"):
            load_model(self.write(tmp_path, "{oops\n"))

    def test_not_an_object(self, tmp_path):
        with pytest.raises(ModelFormatError, match="JSON object"):
            load_model(self.write(tmp_path, "[1,2,3]\n"))

    def test_wrong_version(self, tmp_path):
        with pytest.raises(ModelFormatError, match="format_version"):
            load_model(self.write(tmp_path, '{"format_version": 99}\n'))

    def test_missing_keys(self, tmp_path):
        doc = {"format_version": 1, "model_type": "x", "quantized": False,
               "input_shape": [5]}
        with pytest.raises(ModelFormatError, match="missing key 'layers'"):
            load_model(self.write(tmp_path, json.dumps(doc)))

    def test_bad_layer_spec(self, tmp_path):
        doc = {
            "format_version": 1, "model_type": "x", "quantized": False,
            "input_shape": [5],
            "layers": [{"spec": {"kind": "teleport"}, "params": {}}],
        }
        with pytest.raises(ModelFormatError, match="bad layer spec"):
            load_model(self.write(tmp_path, json.dumps(doc)))

    def test_quantized_needs_activations(self, tmp_path):
        model = sample_model()
        q = quantize_model(model, np.random.default_rng(2).normal(size=(4, 5)))
        path = str(tmp_path / "q.json")
        save_model(q, path)
        doc = json.loads((tmp_path / "q.json").read_text())
        del doc["activations"]
        with pytest.raises(ModelFormatError, match="activations"):
            load_model(self.write(tmp_path, json.dumps(doc)))

    def test_missing_file_is_oserror(self, tmp_path):
        with pytest.raises(OSError):
            load_model(str(tmp_path / "nope.json"))
