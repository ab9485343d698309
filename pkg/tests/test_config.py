import pytest

from critnls.config import ConfigError, config_from_dict, load_config
from critnls.functional import critical_exponent

BASE = {"domain": {"N": 3, "R_max": 40, "n": 512}, "potential": {"family": "well", "depth": 7}}


def _cfg(**problem):
    return {**BASE, "problem": problem}


def test_mu_given():
    cfg = config_from_dict(_cfg(mu=0.05))
    assert cfg.mu == 0.05 and cfg.domain["kind"] == "radial-log-spaced"
    assert cfg.solver_config().mu == 0.05


def test_rho_converted_to_mu():
    cfg = config_from_dict(_cfg(rho=2.0))
    assert cfg.mu == pytest.approx(2.0 ** (critical_exponent(3) - 2))


@pytest.mark.parametrize("problem", [{}, {"mu": 0.1, "rho": 1.0}])
def test_exactly_one_of_mu_rho(problem):
    with pytest.raises(ConfigError):
        config_from_dict(_cfg(**problem))


@pytest.mark.parametrize(
    "raw",
    [
        {**BASE, "problem": {"mu": 0.1}, "extra": {}},
        {**BASE, "problem": {"mu": 0.1, "typo": 1}},
        {**BASE, "problem": {"mu": 0.1, "solver": {"nope": 1}}},
        {**BASE, "problem": {"mu": -1}},
        {"domain": {"N": 7, "R_max": 1, "n": 100}, "potential": {"family": "zero"}, "problem": {"mu": 1}},
        {"domain": {"N": 3, "kind": "cube", "R_max": 1, "n": 100}, "potential": {"family": "zero"}, "problem": {"mu": 1}},
    ],
)
def test_invalid_configs(raw):
    with pytest.raises(ConfigError):
        config_from_dict(raw)


def test_table_path_must_exist(tmp_path):
    raw = {**BASE, "potential": {"family": "table", "path": "missing.csv"}, "problem": {"mu": 0.1}}
    with pytest.raises(ConfigError):
        config_from_dict(raw, tmp_path)
    (tmp_path / "v.csv").write_text("r,V\n0,-1\n1,0\n")
    raw["potential"]["path"] = "v.csv"
    cfg = config_from_dict(raw, tmp_path)
    assert cfg.potential["path"] == str((tmp_path / "v.csv").resolve())


def test_load_config_errors(tmp_path):
    with pytest.raises(ConfigError):
        load_config(tmp_path / "absent.yaml")
    bad = tmp_path / "bad.yaml"
    bad.write_text("domain: [unclosed")
    with pytest.raises(ConfigError):
        load_config(bad)
