"""Scenario files: flat ``key = value`` text under ``[section]`` headers.

Every key is validated when the file is loaded, and an error names the file,
the line, the section and the key. Unknown sections and keys are rejected.
The effective configuration can be written back out with :func:`dump_config`
and reloads to an equal :class:`ScenarioConfig`.
"""
import configparser
import re
from dataclasses import dataclass, field, fields, replace

from .calculus import PAIRS
from .errors import ConfigurationError
from .hilbert import SpectralGrid
from .solver import SchemeConfig
from .stability import SHIFT_MODES, StabilityScenario

RUN_KINDS = ("stability", "riemann")


class ConfigError(ConfigurationError):
    """Malformed scenario file; ``line`` is 1-based or ``None``."""

    def __init__(self, message, path=None, line=None, section=None, key=None):
        where = str(path) if path is not None else "<config>"
        if line is not None:
            where += f":{line}"
        if section is not None:
            where += f": [{section}]"
            if key is not None:
                where += f" {key}"
        super().__init__(f"{where}: {message}")
        self.path, self.line, self.section, self.key = path, line, section, key


# ---------------------------------------------------------------------------
# value parsers; each raises ValueError with a human-readable reason

def _float(text):
    v = float(text)
    if v != v or v in (float("inf"), float("-inf")):
        raise ValueError(f"expected a finite number, got {text!r}")
    return v


def _positive(text):
    v = _float(text)
    if not v > 0:
        raise ValueError(f"must be positive, got {text}")
    return v


def _int(text):
    try:
        return int(text, 0)
    except ValueError:
        raise ValueError(f"expected an integer, got {text!r}") from None


def _seed(text):
    v = _int(text)
    if not 0 <= v < 2 ** 64:
        raise ValueError("seed must be an unsigned 64-bit integer")
    return v


def _grid_n(text):
    v = _int(text)
    SpectralGrid(v)          # raises for non powers of two
    return v


def _bool(text):
    low = text.strip().lower()
    if low in ("1", "true", "yes", "on"):
        return True
    if low in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"expected true or false, got {text!r}")


def _choice(*options):
    def parse(text):
        v = text.strip()
        if v not in options:
            raise ValueError(f"must be one of {', '.join(options)}; got {v!r}")
        return v
    return parse


def _list(item):
    def parse(text):
        parts = [p for p in re.split(r"[,\s]+", text.strip()) if p]
        if not parts:
            raise ValueError("expected a non-empty comma separated list")
        return tuple(item(p) for p in parts)
    return parse


def _cfl(text):
    v = _float(text)
    SchemeConfig(cfl=v)
    return v


def _optional(parse):
    def wrapped(text):
        return None if text.strip().lower() in ("", "none") else parse(text)
    return wrapped


def _ladder(text):
    vals = _list(_int)(text)
    if any(v < 1 for v in vals):
        raise ValueError("mollification levels must be positive")
    return vals


_SC = StabilityScenario()

# section -> key -> (parser, default, attribute on ScenarioConfig or StabilityScenario)
SCHEMA = {
    "run": {
        "kind": (_choice(*RUN_KINDS), "stability", "kind"),
        "out": (str, "out", "out"),
    },
    "grid": {
        "n": (_grid_n, _SC.n, "sc.n"),
        "length": (_positive, _SC.length, "sc.length"),
    },
    "physics": {
        "pair": (_choice(*PAIRS), _SC.pair, "sc.pair"),
        "bound": (_positive, _SC.bound, "sc.bound"),
        "source": (_choice("hilbert", "zero"), _SC.source, "sc.source"),
    },
    "reference": {
        "kind": (_choice("fitted", "analytic"), _SC.reference, "sc.reference"),
        "profile": (_bool, _SC.profile, "sc.profile"),
        "a_left": (_float, _SC.a_left, "sc.a_left"),
        "b_left": (_float, _SC.b_left, "sc.b_left"),
        "a_right": (_float, _SC.a_right, "sc.a_right"),
        "b_right": (_float, _SC.b_right, "sc.b_right"),
        "s0": (_float, _SC.s0, "sc.s0"),
        "delta": (_positive, _SC.delta, "sc.delta"),
    },
    "perturbation": {
        "shape": (_choice("bump", "random", "none"), _SC.shape, "sc.shape"),
        "amplitude": (_float, _SC.amplitude, "sc.amplitude"),
        "width": (_positive, _SC.width, "sc.width"),
        "center": (_float, _SC.center, "sc.center"),
        "seed": (_seed, _SC.seed, "sc.seed"),
    },
    "scheme": {
        "cfl": (_cfl, _SC.cfl, "sc.cfl"),
        "t_end": (_positive, _SC.t_end, "sc.t_end"),
    },
    "shift": {
        "mode": (_choice(*SHIFT_MODES), _SC.shift_mode, "sc.shift_mode"),
        "ladder": (_optional(_ladder), None, "sc.ladder"),
    },
    "riemann": {
        "u_left": (_float, 1.5, "u_left"),
        "u_right": (_float, -0.5, "u_right"),
        "x0": (_float, 0.0, "x0"),
    },
    "sweep": {
        "amplitudes": (_optional(_list(_float)), None, "amplitudes"),
        "refinements": (_optional(_list(_grid_n)), None, "refinements"),
    },
    "verdicts": {
        "e_max": (_optional(_float), None, "e_max"),
        "gamma_check": (_bool, False, "gamma_check"),
    },
}


@dataclass(frozen=True)
class ScenarioConfig:
    """A validated scenario file."""

    kind: str = "stability"
    out: str = "out"
    scenario: StabilityScenario = field(default_factory=StabilityScenario)
    u_left: float = 1.5
    u_right: float = -0.5
    x0: float = 0.0
    amplitudes: tuple | None = None
    refinements: tuple | None = None
    e_max: float | None = None
    gamma_check: bool = False
    source_path: str | None = field(default=None, compare=False)

    @property
    def is_sweep(self):
        return bool(self.amplitudes) or bool(self.refinements)

    def with_seed(self, seed):
        return replace(self, scenario=replace(self.scenario, seed=int(seed)))


def _key_lines(text):
    """Map ``(section, key)`` and ``(section, None)`` to 1-based line numbers."""
    lines = {}
    section = None
    for no, raw in enumerate(text.splitlines(), start=1):
        s = raw.strip()
        if not s or s[0] in "#;":
            continue
        m = re.fullmatch(r"\[([^\]]*)\]", s)
        if m:
            section = m.group(1).strip()
            lines.setdefault((section, None), no)
            continue
        key = re.split(r"[=:]", s, maxsplit=1)[0].strip().lower()
        lines.setdefault((section, key), no)
    return lines


def parse_config(text, path=None):
    """Parse and validate scenario text, returning a :class:`ScenarioConfig`."""
    cp = configparser.ConfigParser(interpolation=None, strict=True,
                                   inline_comment_prefixes=("#", ";"))
    try:
        cp.read_string(text, source=str(path) if path is not None else "<config>")
    except configparser.MissingSectionHeaderError as exc:
        raise ConfigError("key outside any [section]", path, exc.lineno) from None
    except (configparser.DuplicateSectionError, configparser.DuplicateOptionError) as exc:
        raise ConfigError(exc.message.split(": ", 1)[-1], path, exc.lineno,
                          exc.section, getattr(exc, "option", None)) from None
    except configparser.ParsingError as exc:
        lineno = exc.errors[0][0] if exc.errors else None
        raise ConfigError("line is neither a section header nor key = value", path, lineno) from None

    lines = _key_lines(text)
    top, sc_kw = {}, {}
    for section in cp.sections():
        if section not in SCHEMA:
            raise ConfigError(f"unknown section (expected one of {', '.join(SCHEMA)})",
                              path, lines.get((section, None)), section)
        for key, raw in cp.items(section):
            if key not in SCHEMA[section]:
                raise ConfigError(f"unknown key (expected one of {', '.join(SCHEMA[section])})",
                                  path, lines.get((section, key)), section, key)
            parse, _, attr = SCHEMA[section][key]
            try:
                value = parse(raw)
            except (ValueError, ConfigurationError) as exc:
                raise ConfigError(str(exc), path, lines.get((section, key)), section, key) from None
            if attr.startswith("sc."):
                sc_kw[attr[3:]] = value
            else:
                top[attr] = value

    def fail(message, section, key=None):
        raise ConfigError(message, path, lines.get((section, key), lines.get((section, None))),
                          section, key)

    try:
        scenario = StabilityScenario(**sc_kw)
    except (ValueError, ConfigurationError) as exc:
        raise ConfigError(str(exc), path) from None
    cfg = ScenarioConfig(scenario=scenario, source_path=None if path is None else str(path), **top)

    bound = scenario.bound
    if cfg.kind == "riemann":
        for key in ("u_left", "u_right"):
            if abs(getattr(cfg, key)) > bound:
                fail(f"state {getattr(cfg, key)} outside [-{bound}, {bound}]", "riemann", key)
        if abs(cfg.x0) >= 0.5 * scenario.length:
            fail("initial discontinuity must lie inside the box", "riemann", "x0")
        if cfg.is_sweep:
            fail("sweeps are only defined for stability runs", "sweep")
    if abs(scenario.s0) >= 0.5 * scenario.length:
        fail("initial shock position must lie inside the box", "reference", "s0")
    if not _jump_ok(cfg):
        fail("reference traces must start at least delta apart", "reference", "delta")
    if cfg.amplitudes is not None and any(abs(a) > bound for a in cfg.amplitudes):
        fail("amplitude outside the state bound", "sweep", "amplitudes")
    if abs(scenario.amplitude) > bound:
        fail("amplitude outside the state bound", "perturbation", "amplitude")
    return cfg


def _jump_ok(cfg):
    if cfg.kind != "stability":
        return True
    # the profile vanishes at the shock, so the initial traces are those of w
    w_plus, w_minus = cfg.scenario.perturbation().traces(0.0)
    return w_minus - w_plus >= cfg.scenario.delta


def load_config(path):
    """Read and validate a scenario file."""
    try:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read file ({exc.strerror})", path) from None
    return parse_config(text, path)


def _fmt(value):
    if value is None:
        return "none"
    if isinstance(value, bool):
        return "true" if value else "false"
    if isinstance(value, float):
        return repr(value)
    if isinstance(value, tuple):
        return ", ".join(_fmt(v) for v in value)
    return str(value)


def dump_config(cfg):
    """Text of the effective configuration, every key spelled out."""
    out = []
    sc = cfg.scenario
    for section, keys in SCHEMA.items():
        out.append(f"[{section}]")
        for key, (_, _, attr) in keys.items():
            value = getattr(sc, attr[3:]) if attr.startswith("sc.") else getattr(cfg, attr)
            out.append(f"{key} = {_fmt(value)}")
        out.append("")
    return "\n".join(out)


def scenario_config_fields():
    return [f.name for f in fields(ScenarioConfig)]
