import os

from hypothesis import HealthCheck, settings

settings.register_profile(
    "repo",
    derandomize=True,
    deadline=None,
    max_examples=int(os.environ.get("LOGBM_HYPOTHESIS_EXAMPLES", "25")),
    suppress_health_check=[HealthCheck.too_slow],
)
settings.load_profile("repo")

# acceptance verdicts, printed once at the end of the session
VERDICTS = {}


def pytest_terminal_summary(terminalreporter):
    if not VERDICTS:
        return
    terminalreporter.section("acceptance criteria")
    for key in sorted(VERDICTS):
        ok, detail = VERDICTS[key]
        terminalreporter.write_line(f"CRITERION {key:>2}: {'PASS' if ok else 'FAIL'}  {detail}")
