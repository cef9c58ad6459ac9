import pytest

from tilestream.config import Config, ValidationError


def test_defaults_match_simulation_setup():
    c = Config()
    assert (c.cp_seconds, c.lambda_target, c.k_dof, c.cs, c.omega, c.xi, c.rho) == (4.0, 0.5, 0.1, 1000.0, 0.05, 1.0, 2.5)
    assert len(c.sfov_ladder) == 7 and min(c.sfov_ladder) == 0.7


def test_dict_round_trip():
    c = Config(xi=2.0, sfov_ladder=(1.0, 0.8))
    assert Config.from_dict(c.to_dict()) == c


@pytest.mark.parametrize(
    "kw",
    [
        dict(lambda_target=1.0),
        dict(sfov_ladder=(1.0, 0.5)),
        dict(sfov_ladder=(0.8, 1.0)),
        dict(bw_unit=0.0),
        dict(epsilon=0.0),
        dict(dof_choices=(2,)),
        dict(alpha=0),
    ],
)
def test_invalid_values_rejected(kw):
    with pytest.raises(ValidationError):
        Config(**kw)


def test_unknown_keys_rejected():
    with pytest.raises(ValidationError, match="bogus"):
        Config.from_dict({"bogus": 1})
