import pytest
from hypothesis import given, settings, strategies as st

from liecover.config import (
    KEYS,
    ConfigError,
    RunConfig,
    config_hash,
    parse_config,
    serialize_config,
    stream_seed,
)

finite = st.floats(min_value=1e-6, max_value=1e6, allow_nan=False, allow_infinity=False)


@st.composite
def configs(draw):
    group = draw(st.sampled_from(["Torus1", "Torus2", "SU2"]))
    n = {"Torus1": 1, "Torus2": 2, "SU2": 3}[group]
    family = draw(st.sampled_from(["heat", "polynomial", "subgaussian", "zero", "custom"]))
    kw = dict(group=group, symbol_family=family, symbol_t=None)
    if family == "heat":
        kw["symbol_t"] = draw(finite)
    elif family == "polynomial":
        kw["symbol_beta"] = n + draw(finite)
    elif family == "subgaussian":
        kw["symbol_omega"] = draw(finite)
        kw["symbol_gamma"] = draw(finite)
    elif family == "custom":
        kw["symbol_file"] = draw(st.from_regex(r"[A-Za-z0-9_./-]{1,20}", fullmatch=True).filter(
            lambda s: s.lower() != "none"))
        kw["symbol_strict"] = draw(st.booleans())
    small = draw(st.floats(1.0001, 50.0))
    large = small * draw(st.floats(1.0001, 4.0))
    kw.update(
        lambda_max=large * draw(st.floats(1.0, 3.0)),
        seed=draw(st.integers(0, 2 ** 64 - 1)),
        grid_resolution=draw(st.sampled_from([0, 2, 64, 4096])),
        kernel_points=draw(st.integers(1, 500)),
        sweep_lambdas=tuple(draw(st.lists(st.floats(1.001, 1e4), min_size=1, max_size=6))),
        sweep_alpha=draw(st.floats(-0.999, 5.0)),
        eps_grid=tuple(draw(st.lists(finite, min_size=1, max_size=5))),
        eps_scale=draw(st.sampled_from(["normQ", "absolute"])),
        cover_cloud_size=draw(st.integers(1, 100000)),
        cover_lambda_small=small,
        cover_lambda_large=large,
        cover_slack=draw(st.floats(1.0, 10.0)),
        bounds_convention=draw(st.sampled_from(["display", "raw"])),
        bounds_beta=draw(st.none() | st.floats(n + 0.01, 50.0)),
        bounds_gamma=draw(st.none() | finite),
        bounds_lambda_fit=draw(st.none() | st.floats(1.01, 1e3)),
    )
    return RunConfig(**kw)


@settings(max_examples=100, deadline=None)
@given(cfg=configs())
def test_round_trip(cfg):
    text = serialize_config(cfg)
    back = parse_config(text)
    assert back == cfg
    assert config_hash(back) == config_hash(cfg)


def test_defaults_and_empty_text():
    assert parse_config("") == RunConfig()
    assert parse_config("# only a comment\n\n") == RunConfig()


def test_every_key_is_serialized_once():
    text = serialize_config(RunConfig())
    keys = [line.split("=")[0].strip() for line in text.splitlines()]
    assert keys == list(KEYS)


def test_hash_changes_with_content():
    assert config_hash(RunConfig()) != config_hash(RunConfig(seed=1))


def test_family_switch_drops_default_t():
    cfg = parse_config("symbol.family = polynomial\nsymbol.beta = 2.5\n")
    assert cfg.symbol_t is None and cfg.symbol_beta == 2.5


@pytest.mark.parametrize("text,line,column,fragment", [
    ("group = SU2\nsymbol.family = polynomial\nsymbol.beta = 0.5\n", 3, 1, "beta"),
    ("seed = 1\nseed = 2\n", 2, 1, "duplicate"),
    ("  colour = red\n", 1, 3, "unknown key"),
    ("lambda_max = twelve\n", 1, 14, "bad value"),
    ("just words\n", 1, 1, "key = value"),
    ("symbol.t = none\n", 1, 1, "needs symbol.t"),
    ("seed = none\n", 1, 8, "none"),
    ("cover.lambda_small = 5\n", 1, 1, "cover.lambda"),
    ("eps.grid = 0.5, -1\n", 1, 1, "eps.grid"),
    ("lambda_max = inf\n", 1, 14, "non-finite"),
    ("symbol.family = custom\n", 1, 1, "symbol.file"),
])
def test_errors_carry_line_and_column(text, line, column, fragment):
    with pytest.raises(ConfigError) as info:
        parse_config(text)
    err = info.value
    assert fragment in str(err)
    assert (err.line, err.column) == (line, column)
    assert str(err).startswith(f"line {line}, column {column}: ")


def test_stream_seeds_are_distinct_and_stable():
    a, b = stream_seed(0, "kernel"), stream_seed(0, "cover")
    assert a != b
    assert stream_seed(0, "kernel") == a
    assert stream_seed(1, "kernel") != a
