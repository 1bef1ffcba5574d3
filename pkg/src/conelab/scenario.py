"""Scenario files: INI-style `key = value` entries inside named sections.

Three sections are recognised: [model] (the lattice Hamiltonian), [mixing]
(PMNS angles plus splitting vectors) and [run] (driver parameters).  Every
key is validated against a whitelist so that typos fail loudly instead of
silently falling back to defaults.  The grammar is documented in the
project README.
"""

from __future__ import annotations

import configparser
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from .errors import ValidationError
from .lattice import BlochModel, RhoVector, rho4_from_angles, su2_rho
from .mixing import FLAVOURS, MixingSpec, PmnsParams

_MODEL_KEYS = {
    "n", "su2", "rho", "theta", "phi", "rho_norm", "t_x", "t_y", "onsite",
}
_MIXING_KEYS = {"theta12", "theta13", "theta23", "delta", "h", "h1", "h2", "h3"}
_RUN_KEYS = {
    "out", "seed", "nk",
    "flavour", "branch", "p_mag", "phi_p", "t_max", "n_times",
    "n_dirs", "t_probe", "deltas",
    "layers", "g", "c_l", "p_min", "p_max", "n_samples", "direction",
    "loop_radius", "n_loop",
}
_SECTIONS = {"model": _MODEL_KEYS, "mixing": _MIXING_KEYS, "run": _RUN_KEYS}


@dataclass(frozen=True)
class Scenario:
    """Validated key/value content of one scenario file."""

    path: str
    sections: dict

    def has(self, section: str, key: str | None = None) -> bool:
        if section not in self.sections:
            return False
        return key is None or key in self.sections[section]

    def _raw(self, section: str, key: str, default=None):
        try:
            return self.sections[section][key]
        except KeyError:
            if default is not None:
                return default
            raise ValidationError(
                f"{self.path}: missing required key '{key}' in section [{section}]"
            ) from None

    def get_float(self, section: str, key: str, default: float | None = None) -> float:
        raw = self._raw(section, key, default)
        if isinstance(raw, float):
            return raw
        try:
            return float(raw)
        except ValueError:
            raise ValidationError(
                f"{self.path}: key '{key}' in [{section}] is not a number: {raw!r}"
            ) from None

    def get_int(self, section: str, key: str, default: int | None = None) -> int:
        raw = self._raw(section, key, default)
        if isinstance(raw, int):
            return raw
        try:
            return int(raw)
        except ValueError:
            raise ValidationError(
                f"{self.path}: key '{key}' in [{section}] is not an integer: {raw!r}"
            ) from None

    def get_bool(self, section: str, key: str, default: bool = False) -> bool:
        raw = self.sections[section].get(key)
        if raw is None:
            return default
        lowered = str(raw).strip().lower()
        if lowered in ("true", "yes", "on", "1"):
            return True
        if lowered in ("false", "no", "off", "0"):
            return False
        raise ValidationError(
            f"{self.path}: key '{key}' in [{section}] is not a boolean: {raw!r}"
        )

    def get_floats(self, section: str, key: str, default=None) -> np.ndarray:
        raw = self._raw(section, key, default)
        if isinstance(raw, np.ndarray):
            return raw
        try:
            return np.array([float(tok) for tok in str(raw).split(",")])
        except ValueError:
            raise ValidationError(
                f"{self.path}: key '{key}' in [{section}] is not a comma list "
                f"of numbers: {raw!r}"
            ) from None

    def get_str(self, section: str, key: str, default: str | None = None) -> str:
        return str(self._raw(section, key, default)).strip()

    # ------------------------------------------------------------------
    # typed builders

    def build_model(self) -> BlochModel:
        """BlochModel from [model]; exactly one rho form must be present."""
        if not self.has("model"):
            raise ValidationError(f"{self.path}: section [model] is required")
        sec = self.sections["model"]
        forms = [name for name in ("su2", "rho", "theta") if name in sec]
        if "phi" in sec and "theta" not in sec:
            raise ValidationError(f"{self.path}: key 'phi' needs 'theta' as well")
        if len(forms) != 1:
            raise ValidationError(
                f"{self.path}: [model] must use exactly one of su2 / rho / "
                f"theta+phi, found {forms or 'none'}"
            )
        form = forms[0]
        if form == "su2":
            if not self.get_bool("model", "su2"):
                raise ValidationError(f"{self.path}: su2 = false is not a rho form")
            rho = su2_rho(self.get_int("model", "n"))
        elif form == "rho":
            rho = RhoVector(self.get_floats("model", "rho"))
            if "n" in sec and self.get_int("model", "n") != rho.n:
                raise ValidationError(
                    f"{self.path}: n = {sec['n']} contradicts the rho entry count"
                )
        else:
            if "n" in sec and self.get_int("model", "n") != 4:
                raise ValidationError(
                    f"{self.path}: the theta/phi parametrisation fixes n = 4"
                )
            rho = rho4_from_angles(
                self.get_float("model", "rho_norm", 1.0),
                self.get_float("model", "theta"),
                self.get_float("model", "phi"),
            )
        onsite = None
        if "onsite" in sec:
            entries = [complex(tok) for tok in str(sec["onsite"]).split(",")]
            n = rho.n
            if len(entries) != n * n:
                raise ValidationError(
                    f"{self.path}: onsite needs {n * n} row-major entries, "
                    f"got {len(entries)}"
                )
            onsite = np.array(entries, dtype=np.complex128).reshape(n, n)
        return BlochModel(
            rho,
            t_x=self.get_float("model", "t_x", 1.0),
            t_y=self.get_float("model", "t_y", 1.0),
            onsite=onsite,
        )

    def build_mixing(self) -> MixingSpec:
        """MixingSpec from [mixing] (hoppings come from [model] when given)."""
        if not self.has("mixing"):
            raise ValidationError(f"{self.path}: section [mixing] is required")
        sec = self.sections["mixing"]
        pmns = PmnsParams(
            self.get_float("mixing", "theta12"),
            self.get_float("mixing", "theta13"),
            self.get_float("mixing", "theta23"),
            self.get_float("mixing", "delta", 0.0),
        )
        t_x = self.get_float("model", "t_x", 1.0) if self.has("model") else 1.0
        t_y = self.get_float("model", "t_y", 1.0) if self.has("model") else 1.0
        if "h" in sec:
            if any(k in sec for k in ("h1", "h2", "h3")):
                raise ValidationError(
                    f"{self.path}: give either 'h' or explicit h1/h2/h3, not both"
                )
            h = self.get_floats("mixing", "h")
            if h.shape != (3,):
                raise ValidationError(f"{self.path}: 'h' must have 3 components")
            return MixingSpec.symmetric(pmns, h, t_x, t_y)
        missing = [k for k in ("h1", "h2", "h3") if k not in sec]
        if missing:
            raise ValidationError(
                f"{self.path}: [mixing] needs 'h' or all of h1/h2/h3 "
                f"(missing {missing})"
            )
        hs = [self.get_floats("mixing", k) for k in ("h1", "h2", "h3")]
        if any(h.shape != (3,) for h in hs):
            raise ValidationError(f"{self.path}: h vectors must have 3 components")
        return MixingSpec(pmns, np.stack(hs), t_x, t_y)

    def flavour_index(self, key: str = "flavour", default: str = "e") -> int:
        name = self.get_str("run", key, default) if self.has("run") else default
        if name not in FLAVOURS:
            raise ValidationError(
                f"{self.path}: flavour must be one of {FLAVOURS}, got {name!r}"
            )
        return FLAVOURS.index(name)

    def times(self) -> np.ndarray:
        t_max = self.get_float("run", "t_max")
        n_times = self.get_int("run", "n_times")
        if t_max <= 0 or n_times < 2:
            raise ValidationError(
                f"{self.path}: need t_max > 0 and n_times >= 2 in [run]"
            )
        return np.linspace(0.0, t_max, n_times)


def parse_scenario(path) -> Scenario:
    """Read and validate a scenario file; unknown keys are hard errors."""
    path = Path(path)
    if not path.is_file():
        raise ValidationError(f"scenario file not found: {path}")
    parser = configparser.ConfigParser(
        delimiters=("=",), inline_comment_prefixes=("#", ";"), strict=True,
        interpolation=None,
    )
    try:
        with open(path, "r", encoding="utf-8") as fh:
            parser.read_file(fh)
    except configparser.Error as exc:
        raise ValidationError(f"{path}: parse error: {exc}") from None
    sections: dict[str, dict[str, str]] = {}
    for name in parser.sections():
        if name not in _SECTIONS:
            raise ValidationError(
                f"{path}: unknown section [{name}] (expected one of "
                f"{sorted(_SECTIONS)})"
            )
        allowed = _SECTIONS[name]
        content = {}
        for key, value in parser.items(name):
            if key not in allowed:
                raise ValidationError(
                    f"{path}: unknown key '{key}' in section [{name}]"
                )
            content[key] = value
        sections[name] = content
    return Scenario(str(path), sections)
