import pytest

from apme.config import ConfigError, parse_config, serialize

MINIMAL = """
[exponents]
m = 0.8, 1.2

[grid]
sizes = 64, 32
half_widths = 12, 5

[initial]
generator = gaussian
amplitude = 1
widths = 0.5

[run]
t_end = 1
"""


def test_minimal_config_defaults():
    cfg = parse_config(MINIMAL)
    assert cfg.m == (0.8, 1.2)
    assert cfg.get("run", "safety") == 0.9
    assert cfg.get("run", "eps") == 1e-6
    assert cfg.get("barrier", "grouping") == "outside"
    assert cfg.get("checks", "k_list") == (1.0, 2.0, 4.0, 8.0, 16.0, 64.0)
    assert cfg.checks == ()
    assert cfg.grid.sizes == (64, 32)
    assert cfg.seed == 0


def test_round_trip():
    cfg = parse_config(MINIMAL + "\n[checks]\nnames = mass, decay\ndecay_window = 1, 4\n")
    again = parse_config(serialize(cfg))
    assert again.sections == cfg.sections


def test_errors_are_aggregated():
    bad = """
[exponents]
m = 0.8, 1.2, x

[grid]
sizes = 64
half_widths = 12, 5

[initial]
generator = gaussian
radius = 2

[run]
t_end = -1
snapshot_times = 0.5, 0.2

[checks]
names = mass, nonsense

[colours]
a = 1
"""
    with pytest.raises(ConfigError) as info:
        parse_config(bad)
    errs = "\n".join(info.value.errors)
    for fragment in ("[colours]: unknown section", "[exponents] m", "[run] t_end", "[run] snapshot_times",
                     "nonsense", "[initial] radius"):
        assert fragment in errs
    assert len(info.value.errors) >= 6


def test_missing_sections():
    with pytest.raises(ConfigError) as info:
        parse_config("[exponents]\nm = 1\n")
    assert sum("missing required section" in e for e in info.value.errors) == 3


@pytest.mark.parametrize("extra", [
    "[sweep]\nscalings = 1, 2\n",
    "[checks]\ndecay_window = 4, 1\n",
    "[checks]\nk_list = 1, 2\n",
    "[checks]\nrescaled_sizes = 10, 10\n",
    "[barrier]\ngrouping = sideways\n",
])
def test_invalid_options(extra):
    with pytest.raises(ConfigError):
        parse_config(MINIMAL + extra)


def test_missing_snapshot_file(tmp_path):
    text = MINIMAL.replace("generator = gaussian\namplitude = 1\nwidths = 0.5",
                           "generator = from_snapshot\npath = nowhere.apme")
    with pytest.raises(ConfigError, match="does not exist"):
        parse_config(text, base_dir=tmp_path)
