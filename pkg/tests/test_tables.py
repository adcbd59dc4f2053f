"""Named model variants reconstruct with exact parameter counts."""
import pytest

from dseno import ConfigError
from dseno.model import parameter_count, receptive_field
from dseno.spectral import fno_parameter_count
from dseno.tables import (
    list_fno_rows,
    list_table_rows,
    normalize_name,
    parse_fno_row,
    reconstruct_fno_config,
    reconstruct_table_config,
)

LADDER_COUNTS = {
    "airfoil-a": 156097, "airfoil-b": 303745, "airfoil-c": 451393,
    "airfoil-d": 599041, "airfoil-e": 746689, "airfoil-f": 894337,
    "airfoil-g": 1041985,
    "pipe-a": 197313, "pipe-b": 382017, "pipe-c": 566721, "pipe-d": 751425,
    "pipe-e": 936129, "pipe-f": 1120833, "pipe-g": 1305537,
    "darcy-a": 89409, "darcy-b": 172497, "darcy-c": 255585,
    "darcy-d": 338673, "darcy-e": 421761, "darcy-f": 504849,
    "ns-a": 666369,
}

VARIANT_COUNTS = {
    "airfoil-g-wo-se": 983745, "airfoil-g-wo-se-pm": 1041985,
    "airfoil-g-alt": 1041985,
    "pipe-g-wo-se": 1175169, "pipe-g-wo-se-pm": 1305537, "pipe-g-alt": 1305537,
    "darcy-f-wo-se": 476625, "darcy-f-wo-se-pm": 504849, "darcy-f-alt": 504849,
    "ns-a-wo-se": 599809, "ns-a-wo-se-pm": 666369, "ns-a-alt": 666369,
}

RESOLUTION_COUNTS = {
    "darcy-res32": 255585, "darcy-res64": 587937,
    "darcy-res128": 504849, "darcy-res256": 587937,
}

FNO_COUNTS = {
    ("airfoil", 8): 2122241, ("airfoil", 16): 8413697, ("airfoil", 24): 18899457,
    ("pipe", 8): 4768449, ("pipe", 16): 18924225, ("pipe", 32): 75547329,
    ("darcy", 8): 1195377, ("darcy", 16): 4734321, ("darcy", 32): 18890097,
    ("darcy", 42): 32529777,
    ("ns", 8): 2122753, ("ns", 16): 8414209, ("ns", 32): 33580033,
}


@pytest.mark.parametrize("name,expected",
                         sorted({**LADDER_COUNTS, **VARIANT_COUNTS,
                                 **RESOLUTION_COUNTS}.items()))
def test_row_parameter_counts_are_exact(name, expected):
    assert parameter_count(reconstruct_table_config(name)) == expected


def test_registry_lists_every_published_row():
    rows = list_table_rows()
    assert set(LADDER_COUNTS) | set(VARIANT_COUNTS) | set(RESOLUTION_COUNTS) == set(rows)
    assert len(rows) == 37


def test_ladder_depth_equals_row_letter():
    for letter, depth in zip("abcdefg", range(1, 8)):
        assert len(reconstruct_table_config(f"airfoil-{letter}").blocks) == depth
        assert len(reconstruct_table_config(f"pipe-{letter}").blocks) == depth
        if letter <= "f":
            assert len(reconstruct_table_config(f"darcy-{letter}").blocks) == depth
    assert len(reconstruct_table_config("ns-a").blocks) == 8


def test_dilation_schedules_round_trip():
    cfg = reconstruct_table_config("darcy-c")
    assert [b.dilation for b in cfg.blocks] == [(1, 1), (11, 11), (19, 19)]
    cfg = reconstruct_table_config("airfoil-c")
    assert [b.dilation[0] for b in cfg.blocks] == [16, 48, 2]
    assert [b.dilation[1] for b in cfg.blocks] == [1, 6, 4]


def test_family_kernel_and_bias_conventions():
    airfoil = reconstruct_table_config("airfoil-a").blocks[0]
    assert (airfoil.k1, airfoil.bias1, airfoil.k2, airfoil.bias2) == (3, True, 5, False)
    pipe = reconstruct_table_config("pipe-a").blocks[0]
    assert (pipe.k1, pipe.bias1, pipe.k2, pipe.bias2) == (3, True, 3, True)
    darcy = reconstruct_table_config("darcy-a").blocks[0]
    assert (darcy.k1, darcy.bias1, darcy.k2, darcy.bias2) == (3, True, 5, False)
    ns = reconstruct_table_config("ns-a").blocks[0]
    assert (ns.k1, ns.bias1, ns.k2, ns.bias2) == (3, True, 3, True)


def test_periodic_benchmark_uses_circular_padding():
    assert all(b.padding_mode == "circular"
               for b in reconstruct_table_config("ns-a").blocks)
    for name in ["airfoil-a", "pipe-a", "darcy-a"]:
        assert all(b.padding_mode == "zero"
                   for b in reconstruct_table_config(name).blocks)


def test_channel_conventions_per_family():
    assert reconstruct_table_config("airfoil-a").in_channels == 2
    assert reconstruct_table_config("pipe-a").in_channels == 2
    assert reconstruct_table_config("darcy-a").in_channels == 1
    ns = reconstruct_table_config("ns-a")
    assert ns.in_channels == 10 and ns.out_channels == 1


def test_name_normalization():
    assert normalize_name("Model Airfoil-G w/o SE (PM)") == "airfoil-g-wo-se-pm"
    assert normalize_name("  DARCY-C ") == "darcy-c"
    assert normalize_name("ns-a-alt") == "ns-a-alt"
    a = reconstruct_table_config("Model Pipe-G w/o SE")
    b = reconstruct_table_config("pipe-g-wo-se")
    assert a == b


def test_unknown_row_raises_config_error():
    with pytest.raises(ConfigError):
        reconstruct_table_config("darcy-z")
    with pytest.raises(ConfigError):
        reconstruct_table_config("burgers-a")


def test_width_override_rescales_counts():
    cfg = reconstruct_table_config("darcy-c", width=96)
    assert cfg.width == 96
    assert all(b.width == 96 for b in cfg.blocks)
    assert [b.dilation for b in cfg.blocks] == [(1, 1), (11, 11), (19, 19)]
    assert parameter_count(cfg) > LADDER_COUNTS["darcy-c"]
    assert reconstruct_table_config("darcy-c", width=48) == \
        reconstruct_table_config("darcy-c")


def test_alt_rows_change_dilations_not_counts():
    for base_name in ["airfoil-g", "pipe-g", "darcy-f", "ns-a"]:
        base = reconstruct_table_config(base_name)
        alt = reconstruct_table_config(f"{base_name}-alt")
        assert parameter_count(base) == parameter_count(alt)
        assert [b.dilation for b in base.blocks] != [b.dilation for b in alt.blocks]
    # the alternative pipe ladder keeps the receptive field while reshuffling
    assert receptive_field(reconstruct_table_config("pipe-g-alt")) == (293, 293)


@pytest.mark.parametrize("key,expected", sorted(FNO_COUNTS.items()))
def test_spectral_baseline_parameter_counts_are_exact(key, expected):
    benchmark, modes = key
    assert fno_parameter_count(reconstruct_fno_config(benchmark, modes)) == expected


def test_fno_row_names_parse():
    assert parse_fno_row("fno-darcy-m8") == ("darcy", 8)
    assert parse_fno_row("FNO-Pipe-m32") == ("pipe", 32)
    with pytest.raises(ConfigError):
        parse_fno_row("fno-darcy")
    with pytest.raises(ConfigError):
        reconstruct_fno_config("burgers", 8)
    assert len(list_fno_rows()) == 13
