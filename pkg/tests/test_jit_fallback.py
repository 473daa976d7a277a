"""The interpreted kernels must reproduce the compiled ones."""

import json
import os
import subprocess
import sys

import numpy as np

from tdqho._jit import JIT_ENABLED, backend_name

SCRIPT = r"""
import json
import numpy as np
from tdqho._jit import backend_name
from tdqho.ermakov import adiabatic_ics, equilibrium_ics, integrate
from tdqho.protocols import LinearSymmetric, OscillatorParams, SuddenQuench, Tanh
from tdqho.specfun import airy

out = {"backend": backend_name()}
params = OscillatorParams()
p = Tanh(1.0, 3.0, 0.0, 0.5)
tr = integrate(p, params, equilibrium_ics(p, p.start_time, params), (p.start_time, 5.0))
out["tanh"] = tr.at(np.linspace(p.start_time, 5.0, 50))[0].tolist()
p = SuddenQuench(1.0, 3.0, 0.0)
tr = integrate(p, params, equilibrium_ics(p, -1.0, params), (-1.0, 3.0))
out["quench_steps"] = int(tr.t.size)
out["quench"] = tr.sigma.tolist()
q = OscillatorParams(c=0.25)
p = LinearSymmetric(1.0)
tr = integrate(p, q, adiabatic_ics(p, -20.0, q), (-20.0, 5.0))
out["ramp"] = tr.sigma.tolist()
out["airy"] = np.array(airy(np.linspace(-30, 5, 101))).tolist()
print(json.dumps(out))
"""


def _run(disable):
    env = dict(os.environ)
    env.pop("TDQHO_DISABLE_JIT", None)
    if disable:
        env["TDQHO_DISABLE_JIT"] = "1"
    res = subprocess.run([sys.executable, "-c", SCRIPT], env=env, capture_output=True, text=True,
                         check=True, timeout=600)
    return json.loads(res.stdout)


def test_backend_flag_in_process():
    assert backend_name() == ("numba" if JIT_ENABLED else "python")


def test_python_fallback_matches_compiled():
    py = _run(True)
    jit = _run(False)
    assert py["backend"] == "python"
    assert jit["backend"] in ("numba", "python")
    assert py["quench_steps"] == jit["quench_steps"]
    for key in ("tanh", "quench", "ramp", "airy"):
        a, b = np.array(py[key]), np.array(jit[key])
        assert a.shape == b.shape
        assert np.allclose(a, b, rtol=1e-12, atol=1e-14), key
