import pytest
from hypothesis import given, strategies as st

from maxwell_tails.config import ConfigError, SCHEMA, defaults, normalize, parse_config, serialize

MINIMAL = """
[mode]
s = -1
l = 1

[grid]
N = 257
"""


def test_minimal_roundtrip():
    cfg = parse_config(MINIMAL)
    assert serialize(parse_config(serialize(cfg))) == normalize(MINIMAL)
    assert parse_config(normalize(MINIMAL)) == cfg


def test_defaults_filled():
    cfg = parse_config(MINIMAL)
    assert cfg.get("integration.cfl") == 0.5
    assert cfg.get("grid.dissipation") == 1e-2
    assert cfg.get("observers.sigma") == (0.0, 0.2)
    assert set(cfg.as_dict()) == set(SCHEMA)


@pytest.mark.parametrize("text,key", [
    ("[background]\nM = 1\na = 1.5\n", "background.a"),
    ("[background]\na = 1.0\n", "background.a"),
    ("[background]\na = 0.5\n", "background.a"),
    ("[grid]\nNN = 5\n", "grid.NN"),
    ("[gird]\nN = 5\n", "gird"),
    ("[grid]\nN = 12\n", "grid.N"),
    ("[grid]\nN = abc\n", "grid.N"),
    ("[integration]\ncfl = 1.5\n", "integration.cfl"),
    ("[data]\nfamily = npc-charged\n[mode]\nl = 2\n", "mode.l"),
    ("[data]\nfamily = monopole-charge\n", "data.family"),
    ("[observers]\nsigma = scri, 1.5\n", "observers.sigma"),
    ("[outputs]\nformats = csv, png\n", "outputs.formats"),
    ("not an ini", "<document>"),
])
def test_errors_name_the_key(text, key):
    with pytest.raises(ConfigError) as exc:
        parse_config(text)
    assert exc.value.key == key
    assert str(exc.value).startswith(key)


def test_scri_observer_keyword():
    cfg = parse_config("[observers]\nsigma = scri 0.2 0.5\n")
    assert cfg.get("observers.sigma") == (0.0, 0.2, 0.5)


def test_replace_revalidates():
    cfg = parse_config("")
    assert cfg.replace(**{"grid.N": 513}).get("grid.N") == 513
    with pytest.raises(ConfigError):
        cfg.replace(**{"grid.N": 3})
    with pytest.raises(ConfigError):
        cfg.replace(**{"grid.X": 3})


@given(st.integers(64, 5000), st.floats(0.05, 1.0), st.floats(1.0, 1e4), st.floats(0, 0.1),
       st.sampled_from([-1, 1]), st.integers(1, 4), st.text(alphabet="abcxyz_-0123", min_size=1, max_size=12))
def test_roundtrip_property(N, cfl, tau_end, eps, s, l, name):
    cfg = parse_config("").replace(**{"grid.N": N, "integration.cfl": cfl, "integration.tau_end": tau_end,
                                      "grid.dissipation": eps, "mode.s": s, "mode.l": l, "run.name": name})
    assert parse_config(serialize(cfg)) == cfg


def test_defaults_match_schema():
    d = defaults()
    assert d["integration"]["scheme"] == "hyperboloidal"
    assert d["run"]["seed"] == 0
