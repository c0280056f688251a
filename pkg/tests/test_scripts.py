from types import SimpleNamespace

import pytest

from constants import ExitCode
from scripts.run_fig2 import fig2_exit_code


def _record(optimal, certified, success=True):
    return SimpleNamespace(
        solution=SimpleNamespace(is_optimal=optimal),
        certificate=SimpleNamespace(certified=certified),
        recovery=SimpleNamespace(success=success),
    )


@pytest.mark.parametrize("optimal, certified, success, expected", [
    (True, True, True, ExitCode.OK),
    (True, False, True, ExitCode.NOT_CERTIFIED),
    (True, True, False, ExitCode.OK),
    (False, True, True, ExitCode.SOLVER_NON_OPTIMAL),
])
def test_fig2_exit_code_follows_certificate(optimal, certified, success, expected):
    assert fig2_exit_code(_record(optimal, certified, success)) == expected
