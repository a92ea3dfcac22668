"""Pinned reference environment.

Fixtures are only meaningful for exact reference versions; the
generator refuses to run against anything else and reports what it
found instead.
"""

import numpy
import sklearn

PINNED_VERSIONS = {
    "scikit-learn": "1.7.2",
    "numpy": "2.2.6",
}


def installed_versions() -> dict:
    return {"scikit-learn": sklearn.__version__, "numpy": numpy.__version__}


def environment_report() -> str:
    lines = ["reference environment report:"]
    installed = installed_versions()
    for name, pinned in PINNED_VERSIONS.items():
        got = installed[name]
        marker = "ok" if got == pinned else "MISMATCH"
        lines.append(f"  {name}: pinned {pinned}, installed {got} [{marker}]")
    return "\n".join(lines)


def environment_matches() -> bool:
    return installed_versions() == PINNED_VERSIONS
