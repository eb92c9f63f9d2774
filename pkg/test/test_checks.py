import pytest

from checks import run_checks
from store import CHECK_REGISTRY


def test_registered_checks():
    assert list(CHECK_REGISTRY) == [
        "exp-log",
        "lemma",
        "subgroups",
        "components",
        "merge-bound",
        "layer-counts",
        "bas",
        "vqe-sweep",
        "scaling",
        "gradients",
    ]


def test_unknown_check():
    with pytest.raises(ValueError):
        run_checks(["exp-log", "bogus"])


@pytest.mark.parametrize("name", list(CHECK_REGISTRY))
def test_quick_check_passes(name):
    (result,) = run_checks([name], quick=True, seed=0)
    assert result.name == name
    assert result.passed, result.detail
    assert result.seconds >= 0
