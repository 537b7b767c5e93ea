import json

import pytest
from hypothesis import given, strategies as st

from uavinfer.cnn import (
    CnnError,
    LayerKind,
    alexnet,
    build_model,
    conv,
    conv_load,
    fc,
    fc_load,
    layer_memory_bits,
    lenet5,
    model_from_dict,
    model_to_dict,
    profile_model,
    profile_table,
    resolve_model,
)


def test_conv_load_lenet_layers():
    assert conv_load(conv(3, 6, 5, 28)) == 352_800
    assert conv_load(conv(6, 16, 5, 10)) == 240_000
    assert conv_load(conv(1, 1, 1, 1)) == 1


def test_fc_load():
    assert fc_load(fc(120, 84)) == 10_080
    assert fc_load(fc(1, 1)) == 1
    assert fc_load(fc(4096, 4096)) == 16_777_216


def test_load_rejects_wrong_kind():
    with pytest.raises(CnnError):
        conv_load(fc(2, 3))
    with pytest.raises(CnnError):
        fc_load(conv(1, 1, 1, 1))


def test_memory_bits():
    assert layer_memory_bits(conv(6, 16, 5, 10)) == 76_800
    assert layer_memory_bits(fc(10, 10, weight_count=0)) == 0
    assert layer_memory_bits(fc(10, 100, weight_count=1000, weight_bits=8)) == 8000


def test_layer_validation():
    with pytest.raises(CnnError):
        conv(3, 6, 0, 28)
    with pytest.raises(CnnError):
        conv(3, 6, 5, 28, weight_bits=12)
    with pytest.raises(CnnError):
        fc(3, 6, weight_count=-1)


def test_lenet_profile():
    prof = profile_model(lenet5())
    assert len(prof) == 5
    assert [p.load for p in prof] == [352_800, 240_000, 48_000, 10_080, 840]
    assert prof[1].memory_bytes == 76_800 // 8
    assert lenet5().input_bits == 32 * 32 * 3 * 8


def test_alexnet_profile_uses_wide_integers():
    prof = profile_model(alexnet())
    assert len(prof) == 8
    assert prof[6].load == 16_777_216
    fc6 = alexnet().layers[5]
    # the load x weight product overflows 32-bit integers; Python ints stay exact
    assert fc_load(fc6) * fc6.weight_count == 9216 * 4096 * 37_748_736
    assert fc_load(fc6) * fc6.weight_count > 2**31
    assert all(isinstance(p.load, int) and p.load >= 0 for p in prof)


def test_single_layer_model_profile():
    layer = fc(50, 20)
    (p,) = profile_model(build_model("one", [layer], input_bits=400))
    assert p.load == fc_load(layer)
    assert p.memory_bytes == layer_memory_bits(layer) // 8


def test_total_load_is_sum_of_layers():
    prof = profile_model(alexnet())
    total = 0
    for layer in alexnet().layers:
        total += conv_load(layer) if layer.kind is LayerKind.CONV else fc_load(layer)
    assert sum(p.load for p in prof) == total


def test_intermediate_sizes_follow_output_shape():
    m = lenet5()
    assert m.inter_layer_bits == (6 * 28 * 28 * 32, 16 * 10 * 10 * 32, 120 * 32, 84 * 32)
    assert m.output_bits == 10 * 32


def test_descriptor_round_trip(tmp_path):
    for model in (lenet5(), alexnet()):
        assert model_from_dict(model_to_dict(model)) == model
    path = tmp_path / "m.json"
    path.write_text(json.dumps(model_to_dict(lenet5())))
    assert resolve_model(str(path)) == lenet5()


def test_descriptor_rejects_unknown_keys():
    d = model_to_dict(lenet5())
    d["colour"] = "red"
    with pytest.raises(ValueError):
        model_from_dict(d)


def test_resolve_unknown_model():
    with pytest.raises(CnnError):
        resolve_model("vgg16")


def test_profile_table_lists_every_layer():
    text = profile_table(lenet5())
    assert "conv1" in text and "fc3" in text and "651720" in text


@given(st.lists(st.tuples(st.integers(1, 64), st.integers(1, 64)), min_size=1, max_size=6))
def test_random_fc_models_round_trip_and_sum(dims):
    layers = [fc(a, b) for a, b in dims]
    model = build_model("rand", layers, input_bits=8)
    assert model_from_dict(model_to_dict(model)) == model
    assert sum(p.load for p in profile_model(model)) == sum(a * b for a, b in dims)
