"""File formats: model and system documents, atomic output writes."""

from __future__ import annotations

import json
import os
import tempfile
from pathlib import Path

import numpy as np

from .errors import ConfigError, NonHermitianError, QgdError
from .lindblad import LindbladModel, ising_model
from .linsys import LinearSystem
from .pauli import PauliSum, StateVector

MODEL_KEYS = {"n_sites", "hamiltonian", "jumps"}
ISING_KEYS = {"n", "J", "h", "mu"}
SYSTEM_KEYS = {"a", "b", "form"}


def write_text_atomic(path, text: str):
    """Write via a temporary file in the same directory and rename."""
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def write_json_atomic(path, doc):
    write_text_atomic(path, json.dumps(doc, indent=2, sort_keys=True) + "\n")


def read_json(path):
    path = Path(path)
    if not path.is_file():
        raise ConfigError(f"file not found: {path}")
    try:
        return json.loads(path.read_text())
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON ({exc})") from exc


def _terms(data, n=None, hermitian=None, what="operator") -> PauliSum:
    if not isinstance(data, list):
        raise ConfigError(f"{what}: expected a list of {{coeff, pauli}} terms")
    try:
        return PauliSum.from_json(data, n_qubits=n, hermitian=hermitian)
    except NonHermitianError as exc:
        raise ConfigError(f"{what} is not hermitian: {exc}") from exc
    except (KeyError, TypeError, ValueError, QgdError) as exc:
        raise ConfigError(f"{what}: {exc}") from exc


def model_from_dict(doc: dict) -> LindbladModel:
    if not isinstance(doc, dict):
        raise ConfigError("model must be a mapping")
    try:
        if "ising" in doc:
            if set(doc) != {"ising"}:
                raise ConfigError(f"unexpected model keys {sorted(set(doc) - {'ising'})}")
            p = doc["ising"]
            extra = set(p) - ISING_KEYS
            if extra:
                raise ConfigError(f"unknown ising keys {sorted(extra)}")
            n = int(p.get("n", 2))
            mu = p.get("mu", [0.1] * n)
            if any(float(r) < 0 for r in mu):
                raise ConfigError("jump rates must be non-negative")
            return ising_model(n, float(p.get("J", 1.0)), float(p.get("h", 1.0)), mu)
        extra = set(doc) - MODEL_KEYS
        if extra:
            raise ConfigError(f"unknown model keys {sorted(extra)}")
        n = int(doc["n_sites"])
        ham = _terms(doc["hamiltonian"], n, True, "hamiltonian")
        jumps = []
        for j in doc.get("jumps", []):
            rate = float(j["rate"])
            if rate < 0:
                raise ConfigError(f"negative jump rate {rate}")
            jumps.append((_terms(j["terms"], n, None, "jump operator"), rate))
        return LindbladModel(n, ham, tuple(jumps))
    except KeyError as exc:
        raise ConfigError(f"model is missing field {exc}") from exc
    except QgdError as exc:
        if isinstance(exc, ConfigError):
            raise
        raise ConfigError(str(exc)) from exc


def model_to_dict(model: LindbladModel) -> dict:
    return {
        "n_sites": model.n_sites,
        "hamiltonian": model.hamiltonian.to_json(),
        "jumps": [{"rate": r, "terms": op.to_json()} for op, r in model.jumps],
    }


def _b_vector(b, n: int):
    if isinstance(b, str):
        if len(b) != n or set(b) - {"0", "1"}:
            raise ConfigError(f"b bitstring {b!r} does not fit {n} qubits")
        return b
    if not isinstance(b, list):
        raise ConfigError("b must be a bitstring or an amplitude array")
    amps = [complex(x[0], x[1]) if isinstance(x, (list, tuple)) else complex(x) for x in b]
    try:
        return StateVector(np.array(amps), n).normalized()
    except QgdError as exc:
        raise ConfigError(f"b: {exc}") from exc


def system_from_dict(doc: dict) -> LinearSystem:
    if not isinstance(doc, dict):
        raise ConfigError("system must be a mapping")
    extra = set(doc) - SYSTEM_KEYS
    if extra:
        raise ConfigError(f"unknown system keys {sorted(extra)}")
    if "a" not in doc or "b" not in doc:
        raise ConfigError("system needs fields a and b")
    a = _terms(doc["a"], None, None, "matrix A")
    form = doc.get("form", "extended")
    if form not in ("extended", "projector", "matvec"):
        raise ConfigError(f"unknown form {form!r}")
    try:
        return LinearSystem.create(a, _b_vector(doc["b"], a.n_qubits), form)
    except QgdError as exc:
        raise ConfigError(str(exc)) from exc


def reference_system_dict() -> dict:
    return {
        "a": [{"coeff": [0.9, 0.0], "pauli": "ZZI"},
              {"coeff": [0.3692, 0.0], "pauli": "IXI"},
              {"coeff": [0.1112, 0.0], "pauli": "XII"}],
        "b": "000",
        "form": "extended",
    }
