"""Run configuration: TOML parsing, validation, serialization, overrides.

A run is described by a TOML file with sections [molecule], [basis],
[interaction], [propagation], [sweep] and [output]; every physical value
carries its unit in the key name.  ``--set section.key=value`` overrides
are applied after parsing.  Serialization round-trips: parse ->
serialize -> parse is the identity on the resolved dictionary.
"""

import copy
import sys
from dataclasses import dataclass

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import units
from .monomer import MOLECULE_PRESETS, MoleculeParams
from .pair_basis import BASIS_PRESETS, BasisSpec
from .propagator import PropagationConfig


class ConfigError(ValueError):
    """Invalid or inconsistent run configuration."""


DEFAULTS = {
    "molecule": {
        "preset": "CaF-40-19",
        "n_max": 20,
    },
    "basis": {
        "preset": "small",
        "ntilde_max": 5,
        "l_max": 6,
        "l_parity": "even",
        "include_spin": False,
        "mtot": [0],
        "incoming": "auto",
    },
    "interaction": {
        "c6_elec": 2300.0,
        "denominator_floor_GHz": 1.0,
        "class_margin_GHz": 3.0,
    },
    "propagation": {
        "r_absorb_a0": 50.0,
        "r_mid_a0": 300.0,
        "r_max_a0": 1.0e4,
        "inner_step_a0": 0.02,
        "step_growth": 1.02,
        "wavelength_fraction": 0.1,
        "absorbing": True,
        "match_tolerance": 3.0e-3,
        "auto_extend_r_max": True,
    },
    "sweep": {
        "field_kVcm": [23.0],
        "ecoll_uK": [10.0],
        "b_G": [0.0],
    },
    "output": {
        "dir": "out",
        "format": "csv",
        "digits": 12,
        "timestamp": False,
        "deterministic": True,
    },
    "convergence": {
        "axis": "lmax",
        "lmax_values": [4, 8, 12, 16, 20],
        "rotor_basis_values": ["minimal", "small", "large"],
        "r_absorb_values_a0": [10.0, 50.0, 80.0],
    },
}

# spectroscopic keys accepted in [molecule] for explicit parameters
_MOLECULE_KEYS = {
    "rotational_constant_GHz": "b_ghz",
    "dipole_D": "dipole_debye",
    "mass_amu": "mass_amu",
    "spin_rotation_MHz": "gamma_mhz",
    "fermi_contact_MHz": "zeta_f_mhz",
    "anisotropic_hf_MHz": "t_mhz",
    "nuclear_spin_rotation_MHz": "c_f_mhz",
    "electron_g": "g_s",
}


def _expand_grid(value, key):
    """A grid is a sorted list or an inline table {start, stop, num[, log]}."""
    import numpy as np
    if isinstance(value, dict):
        try:
            start, stop = value["start"], value["stop"]
            num = value["num"]
        except KeyError as exc:
            raise ConfigError(f"grid {key} needs start/stop/num") from exc
        if num < 1 or stop < start:
            raise ConfigError(f"grid {key} must be non-empty and ordered")
        if value.get("log", False):
            if start <= 0:
                raise ConfigError(f"log grid {key} needs start > 0")
            return [float(x) for x in np.geomspace(start, stop, int(num))]
        return [float(x) for x in np.linspace(start, stop, int(num))]
    vals = [float(x) for x in value]
    if not vals:
        raise ConfigError(f"grid {key} is empty")
    if sorted(vals) != vals:
        raise ConfigError(f"grid {key} must be sorted ascending")
    return vals


@dataclass
class RunConfig:
    """Validated run configuration with resolved physical objects."""

    raw: dict                       # resolved dictionary (round-trippable)
    molecule: MoleculeParams
    n_max: int
    basis_preset: object            # preset name or explicit pair list
    ntilde_max: int
    l_max: int
    l_parity: str
    include_spin: bool
    mtot_list: list
    incoming: tuple
    c6_elec: float
    denominator_floor: float
    class_margin: float
    propagation: PropagationConfig
    fields: list                    # au
    energies: list                  # au
    b_fields: list                  # au
    out_dir: str
    out_format: str
    digits: int
    timestamp: bool

    def basis_spec(self, m_tot: int) -> BasisSpec:
        return BasisSpec(ntilde_max=self.ntilde_max, l_max=self.l_max,
                         m_tot=m_tot, l_parity=self.l_parity,
                         class1=self.basis_preset,
                         include_spin=self.include_spin)


def _merge(base, override, path=""):
    out = copy.deepcopy(base)
    for key, val in override.items():
        if key not in out:
            out[key] = copy.deepcopy(val)
        elif isinstance(out[key], dict) and isinstance(val, dict) \
                and "start" not in val:
            out[key] = _merge(out[key], val, f"{path}{key}.")
        else:
            out[key] = copy.deepcopy(val)
    return out


def load_config(path=None, text=None, overrides=()) -> RunConfig:
    """Parse TOML (file or literal text), apply overrides, validate."""
    if text is None and path is not None:
        with open(path, "rb") as fh:
            user = tomllib.load(fh)
    elif text is not None:
        user = tomllib.loads(text)
    else:
        user = {}
    merged = _merge(DEFAULTS, user)
    for item in overrides:
        _apply_override(merged, item)
    return resolve_config(merged)


def _coerce_like(old, text):
    if isinstance(old, bool):
        if text.lower() in ("true", "1", "yes"):
            return True
        if text.lower() in ("false", "0", "no"):
            return False
        raise ConfigError(f"cannot parse boolean from {text!r}")
    if isinstance(old, int) and not isinstance(old, bool):
        return int(text)
    if isinstance(old, float):
        return float(text)
    if isinstance(old, list):
        return tomllib.loads(f"x = {text}")["x"]
    return text


def _apply_override(cfg, item):
    if "=" not in item:
        raise ConfigError(f"override {item!r} is not of the form key=value")
    dotted, text = item.split("=", 1)
    keys = dotted.strip().split(".")
    node = cfg
    for key in keys[:-1]:
        if key not in node or not isinstance(node[key], dict):
            node[key] = {}
        node = node[key]
    leaf = keys[-1]
    old = node.get(leaf)
    if old is None:
        node[leaf] = tomllib.loads(f"x = {text}")["x"] \
            if text[:1] in "[{0123456789-+.tf\"'" else text
    else:
        node[leaf] = _coerce_like(old, text.strip())


def resolve_config(cfg: dict) -> RunConfig:
    mol = cfg["molecule"]
    preset = mol.get("preset")
    spectro = {}
    if preset:
        if preset not in MOLECULE_PRESETS:
            raise ConfigError(f"unknown molecule preset {preset!r}")
        spectro.update(MOLECULE_PRESETS[preset])
    for key, arg in _MOLECULE_KEYS.items():
        if key in mol:
            spectro[arg] = float(mol[key])
    if "b_ghz" not in spectro:
        raise ConfigError("molecule parameters incomplete: need a preset "
                          "or explicit rotational_constant_GHz etc.")
    try:
        molecule = MoleculeParams.from_spectroscopic(**spectro)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    bas = cfg["basis"]
    if bas["l_parity"] not in ("even", "odd"):
        raise ConfigError("basis.l_parity must be 'even' or 'odd'")
    include_spin = bool(bas["include_spin"])
    preset_b = bas.get("preset", "custom")
    if preset_b == "custom":
        if "class1" not in bas:
            raise ConfigError("basis.preset = 'custom' requires basis.class1")
        basis_sel = [tuple(tuple(int(x) for x in lab) for lab in pair)
                     for pair in bas["class1"]]
    else:
        if preset_b != "all" and preset_b not in BASIS_PRESETS:
            raise ConfigError(f"unknown basis preset {preset_b!r}; known: "
                              f"{BASIS_PRESETS + ('all', 'custom')}")
        basis_sel = preset_b
    if preset_b == "spin-N13" and not include_spin:
        raise ConfigError("basis preset spin-N13 requires "
                          "basis.include_spin = true")

    mtot = bas["mtot"]
    l_max = int(bas["l_max"])
    if mtot == "auto":
        mtot_list = list(range(-l_max, l_max + 1))
    else:
        mtot_list = [int(m) for m in mtot]
    if not mtot_list:
        raise ConfigError("basis.mtot must be non-empty")

    incoming = bas.get("incoming", "auto")
    if incoming == "auto":
        incoming = (((1, 0, 0, 0), (1, 0, 0, 0)) if include_spin
                    else ((1, 0), (1, 0)))
    else:
        incoming = tuple(tuple(int(x) for x in lab) for lab in incoming)
        want = 4 if include_spin else 2
        if any(len(lab) != want for lab in incoming):
            raise ConfigError(f"incoming labels must have {want} entries")

    inter = cfg["interaction"]
    prop = cfg["propagation"]
    sweep = cfg["sweep"]
    out = cfg["output"]
    if out["format"] not in ("csv", "json"):
        raise ConfigError("output.format must be 'csv' or 'json'")
    if not out.get("deterministic", True):
        raise ConfigError("non-deterministic mode is not supported")

    fields = [f * units.KVCM_TO_AU
              for f in _expand_grid(sweep["field_kVcm"], "sweep.field_kVcm")]
    energies = [e * units.UK_TO_AU
                for e in _expand_grid(sweep["ecoll_uK"], "sweep.ecoll_uK")]
    b_fields = [b * units.GAUSS_TO_AU
                for b in _expand_grid(sweep["b_G"], "sweep.b_G")]

    try:
        propagation = PropagationConfig(
            r_absorb=float(prop["r_absorb_a0"]),
            r_mid=float(prop["r_mid_a0"]),
            r_max=float(prop["r_max_a0"]),
            inner_step=float(prop["inner_step_a0"]),
            step_growth=float(prop["step_growth"]),
            wavelength_fraction=float(prop["wavelength_fraction"]),
            absorbing=bool(prop["absorbing"]),
            match_tolerance=float(prop["match_tolerance"]),
            auto_extend_r_max=bool(prop["auto_extend_r_max"]),
            collision_energy=energies[0],
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc

    return RunConfig(
        raw=cfg, molecule=molecule, n_max=int(mol["n_max"]),
        basis_preset=basis_sel, ntilde_max=int(bas["ntilde_max"]),
        l_max=l_max, l_parity=bas["l_parity"], include_spin=include_spin,
        mtot_list=mtot_list, incoming=incoming,
        c6_elec=float(inter["c6_elec"]),
        denominator_floor=float(inter["denominator_floor_GHz"])
        * units.GHZ_TO_AU,
        class_margin=float(inter["class_margin_GHz"]) * units.GHZ_TO_AU,
        propagation=propagation,
        fields=fields, energies=energies, b_fields=b_fields,
        out_dir=str(out["dir"]), out_format=out["format"],
        digits=int(out["digits"]), timestamp=bool(out["timestamp"]))


def _fmt_toml(value):
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, str):
        return '"' + value.replace("\\", "\\\\").replace('"', '\\"') + '"'
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, int):
        return str(value)
    if isinstance(value, (list, tuple)):
        return "[" + ", ".join(_fmt_toml(v) for v in value) + "]"
    if isinstance(value, dict):
        inner = ", ".join(f"{k} = {_fmt_toml(v)}" for k, v in value.items())
        return "{" + inner + "}"
    raise TypeError(f"cannot serialize {type(value)} to TOML")


def dumps_config(cfg: dict) -> str:
    """Serialize a resolved configuration dictionary back to TOML."""
    lines = []
    for section, body in cfg.items():
        if not isinstance(body, dict):
            raise TypeError("top level must contain sections only")
        lines.append(f"[{section}]")
        for key, val in body.items():
            lines.append(f"{key} = {_fmt_toml(val)}")
        lines.append("")
    return "\n".join(lines)


def reference_config() -> str:
    """The fully documented default configuration as TOML text."""
    return dumps_config(DEFAULTS)
