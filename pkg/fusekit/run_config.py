#  fusekit - multi-sensor fusion and state estimation toolkit
#  Copyright (c) 2026. All rights reserved.

"""The run configuration document.

A config is a flat text document of key = value lines.  Blank lines and lines starting
with # are ignored, as is anything after a # following a value.  Keys are strict, an
unknown key is an error.  Example:

    # the pendulum experiment
    scenario = pendulum
    theta0_deg = 10
    duration_s = 10
    rate_hz = 10
    seeds = 50
    base_seed = 1000
"""

import math
import re
from pathlib import Path
from typing import Dict, List, Callable, Any, Union, Tuple

from fusekit.matlib import DomainError
from fusekit.scenarios import ScenarioKind, ScenarioParams, PendulumParams, TrackingParams, TruthModel
from fusekit.utils import LogHelper, Logger


class ConfigKey:
    """A document key, the scenario parameter it sets and how its text is read"""

    POSITIVE = "greater than 0"
    NON_NEGATIVE = "0 or greater"

    def __init__(self, name:str, param:str, reader:Callable[[str, str], Any], constraint:str=None):
        self.__name = name
        self.__param = param
        self.__reader = reader
        self.__constraint = constraint

    def name(self) -> str:
        return self.__name

    def param(self) -> str:
        return self.__param

    def read(self, value:str) -> Any:
        result = self.__reader(self.__name, value)
        if self.__constraint == ConfigKey.POSITIVE and not result > 0.0:
            raise ConfigValueError(self.__name, "must be {0}, got {1}".format(self.__constraint, value))
        if self.__constraint == ConfigKey.NON_NEGATIVE and not result >= 0.0:
            raise ConfigValueError(self.__name, "must be {0}, got {1}".format(self.__constraint, value))
        return result


def _read_real(key:str, value:str) -> float:
    try:
        result = float(value)
    except ValueError:
        raise ConfigValueError(key, "must be a real number, got '{0}'".format(value))

    if not math.isfinite(result):
        raise ConfigValueError(key, "must be finite, got '{0}'".format(value))
    return result


def _read_degrees(key:str, value:str) -> float:
    return math.radians(_read_real(key, value))


def _read_reals(key:str, value:str) -> List[float]:
    return [_read_real(key, item.strip()) for item in value.split(",")]


def _read_int(key:str, value:str) -> int:
    try:
        return int(value)
    except ValueError:
        raise ConfigValueError(key, "must be an integer, got '{0}'".format(value))


def _read_seeds(key:str, value:str) -> List[int]:
    seeds = [_read_int(key, item.strip()) for item in value.split(",")]
    if any(seed < 0 for seed in seeds):
        raise ConfigValueError(key, "seeds must be 0 or greater, got {0}".format(value))
    return seeds


def _read_bool(key:str, value:str) -> bool:
    if value.lower() == "true":
        return True
    if value.lower() == "false":
        return False
    raise ConfigValueError(key, "must be true or false, got '{0}'".format(value))


def _read_truth_model(key:str, value:str) -> TruthModel:
    try:
        return TruthModel(value.lower())
    except ValueError:
        raise ConfigValueError(key, "must be one of {0}, got '{1}'".format(
            ", ".join(model.value for model in TruthModel), value))


class RunConfig:
    """A validated run configuration, the scenario and its parameters, the seeds to run,
    where to write results and which results to write"""

    def __init__(self, scenario:ScenarioKind, params:ScenarioParams, seeds:List[int]=None,
            output_dir:str=".", emit_trace_csv:bool=True, emit_summary:bool=True,
            emit_plot_data:bool=False, defaulted_keys:List[str]=None):
        self.__scenario = ScenarioKind(scenario)
        self.__params = params
        self.__seeds = [0] if seeds is None else list(seeds)
        self.__output_dir = output_dir
        self.__emit_trace_csv = emit_trace_csv
        self.__emit_summary = emit_summary
        self.__emit_plot_data = emit_plot_data
        self.__defaulted_keys = [] if defaulted_keys is None else list(defaulted_keys)

        if len(self.__seeds) == 0:
            raise ConfigValueError("seeds", "at least one seed is needed")
        # a config document can't hold a '#' in a value, it starts a comment
        if "#" in str(self.__output_dir):
            raise ConfigValueError("output_dir", "must not contain '#', got '{0}'".format(self.__output_dir))

    def __eq__(self, other):
        return isinstance(other, RunConfig) and \
            self.__scenario == other.scenario() and \
            self.__params == other.params() and \
            self.__seeds == other.seeds() and \
            self.__output_dir == other.output_dir() and \
            self.__emit_trace_csv == other.emit_trace_csv() and \
            self.__emit_summary == other.emit_summary() and \
            self.__emit_plot_data == other.emit_plot_data()

    def __str__(self):
        return "scenario: {0}, seeds: {1}, params: {2}".format(self.__scenario.value, self.__seeds, self.__params)

    def scenario(self) -> ScenarioKind:
        return self.__scenario

    def params(self) -> ScenarioParams:
        return self.__params

    def seeds(self) -> List[int]:
        return list(self.__seeds)

    def output_dir(self) -> str:
        return self.__output_dir

    def emit_trace_csv(self) -> bool:
        return self.__emit_trace_csv

    def emit_summary(self) -> bool:
        return self.__emit_summary

    def emit_plot_data(self) -> bool:
        return self.__emit_plot_data

    def defaulted_keys(self) -> List[str]:
        """Parameter keys the document left out, filled in with their defaults"""
        return list(self.__defaulted_keys)

    def with_seeds(self, seeds:List[int]):
        return RunConfig(self.__scenario, self.__params, seeds, self.__output_dir, self.__emit_trace_csv,
            self.__emit_summary, self.__emit_plot_data, self.__defaulted_keys)

    def with_output_dir(self, output_dir:str):
        return RunConfig(self.__scenario, self.__params, self.__seeds, output_dir, self.__emit_trace_csv,
            self.__emit_summary, self.__emit_plot_data, self.__defaulted_keys)


_LOG:Logger = LogHelper.logger("run_config")

_SCENARIO = "scenario"
_SEED = "seed"
_SEEDS = "seeds"
_BASE_SEED = "base_seed"
_OUTPUT_DIR = "output_dir"
_EMIT_TRACE_CSV = "emit_trace_csv"
_EMIT_SUMMARY = "emit_summary"
_EMIT_PLOT_DATA = "emit_plot_data"

_COMMON_KEYS = [_SCENARIO, _SEED, _SEEDS, _BASE_SEED, _OUTPUT_DIR, _EMIT_TRACE_CSV, _EMIT_SUMMARY, _EMIT_PLOT_DATA]

_SCENARIO_KEYS:Dict[ScenarioKind, List[ConfigKey]] = {
    ScenarioKind.PENDULUM: [
        ConfigKey("g_mps2", "g", _read_real, ConfigKey.POSITIVE),
        ConfigKey("length_m", "l", _read_real, ConfigKey.POSITIVE),
        ConfigKey("mass_kg", "m", _read_real, ConfigKey.POSITIVE),
        ConfigKey("theta0_rad", "theta0", _read_real),
        ConfigKey("theta0_deg", "theta0", _read_degrees),
        ConfigKey("theta_dot0_rad_s", "theta_dot0", _read_real),
        ConfigKey("theta_dot0_dps", "theta_dot0", _read_degrees),
        ConfigKey("sigma_r_nm", "sigma_r", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("sigma_o_rad", "sigma_o", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("filter_sigma_r_nm", "filter_sigma_r", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("filter_sigma_o_rad", "filter_sigma_o", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("truth_model", "truth_model", _read_truth_model),
        ConfigKey("dt_s", "dt", _read_real, ConfigKey.POSITIVE),
        ConfigKey("duration_s", "duration", _read_real, ConfigKey.POSITIVE),
        ConfigKey("rate_hz", "rate_hz", _read_real, ConfigKey.POSITIVE)],
    ScenarioKind.TRACKING: [
        ConfigKey("dt_s", "dt", _read_real, ConfigKey.POSITIVE),
        ConfigKey("duration_s", "duration", _read_real, ConfigKey.POSITIVE),
        ConfigKey("rate_hz", "rate_hz", _read_real, ConfigKey.POSITIVE),
        ConfigKey("sigma_a_mps2", "sigma_a", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("sigma_pos_m", "sigma_pos", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("x0", "x0", _read_reals),
        ConfigKey("filter_sigma_a_mps2", "filter_sigma_a", _read_real, ConfigKey.NON_NEGATIVE),
        ConfigKey("filter_sigma_pos_m", "filter_sigma_pos", _read_real, ConfigKey.NON_NEGATIVE)]}

# keys written by render_config, the alternative unit forms are only read
_RENDER_SKIPS = ["theta0_deg", "theta_dot0_dps"]

# the filter's measurement noise param and the sensor param it falls back to
_MEASUREMENT_NOISE:Dict[ScenarioKind, Tuple[str, str]] = {
    ScenarioKind.PENDULUM: ("filter_sigma_o", "sigma_o"),
    ScenarioKind.TRACKING: ("filter_sigma_pos", "sigma_pos")}

_PARAMS_TYPES:Dict[ScenarioKind, type] = {
    ScenarioKind.PENDULUM: PendulumParams,
    ScenarioKind.TRACKING: TrackingParams}


def read_document(text:str) -> Dict[str, str]:
    """Split a document into its key value pairs.  Raises ConfigSyntaxError with the
    offending line number for a line that isn't key = value or a repeated key."""
    values:Dict[str, str] = dict()
    for line_number, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if len(line) == 0:
            continue

        if re.search("=", line) is None:
            raise ConfigSyntaxError(line_number, "expected 'key = value', got '{0}'".format(line))

        line_pair:List[str] = re.split("=", line, 1)
        key = line_pair[0].strip()
        value = line_pair[1].strip()
        if re.fullmatch("[A-Za-z_][A-Za-z0-9_]*", key) is None:
            raise ConfigSyntaxError(line_number, "'{0}' is not a valid key".format(key))
        if len(value) == 0:
            raise ConfigSyntaxError(line_number, "key '{0}' has no value".format(key))
        if key in values:
            raise ConfigSyntaxError(line_number, "key '{0}' is repeated".format(key))

        values[key] = value

    return values


def parse_config(text:str) -> RunConfig:
    """Parse and validate a run config document, filling in defaults for the scenario
    parameters it leaves out"""
    values = read_document(text)
    if _SCENARIO not in values:
        raise MissingConfigKeyError(_SCENARIO)

    try:
        scenario = ScenarioKind(values[_SCENARIO].lower())
    except ValueError:
        raise ConfigValueError(_SCENARIO, "must be one of {0}, got '{1}'".format(
            ", ".join(kind.value for kind in ScenarioKind), values[_SCENARIO]))

    keys = {key.name(): key for key in _SCENARIO_KEYS[scenario]}
    for name in values:
        if name not in _COMMON_KEYS and name not in keys:
            raise UnknownConfigKeyError(name, scenario)

    param_values:Dict[str, Any] = dict()
    for name, value in values.items():
        if name in keys:
            key = keys[name]
            if key.param() in param_values:
                raise ConfigValueError(name, "sets {0} which another key already set".format(key.param()))
            param_values[key.param()] = key.read(value)

    params = _build_params(scenario, param_values)
    _check_measurement_noise(scenario, params, param_values)
    defaulted = [key.name() for key in _SCENARIO_KEYS[scenario]
        if key.param() not in param_values and key.name() not in _RENDER_SKIPS]

    config = RunConfig(scenario, params, _seed_list(values),
        values.get(_OUTPUT_DIR, "."),
        _read_bool(_EMIT_TRACE_CSV, values.get(_EMIT_TRACE_CSV, "true")),
        _read_bool(_EMIT_SUMMARY, values.get(_EMIT_SUMMARY, "true")),
        _read_bool(_EMIT_PLOT_DATA, values.get(_EMIT_PLOT_DATA, "false")),
        defaulted)

    _LOG.debug("Parsed config {0}, defaults used for {1}", config, defaulted)
    return config


def load_config(file_name:Union[str, Path]) -> RunConfig:
    path = Path(file_name)
    _LOG.info("Reading config {0}", path)
    return parse_config(path.read_text())


def render_config(config:RunConfig) -> str:
    """Write a config back out as a document that parses to an equal config.  Every
    parameter is written, angles in radians and reals at full precision."""
    lines = ["{0} = {1}".format(_SCENARIO, config.scenario().value),
        "{0} = {1}".format(_SEED, ", ".join(str(seed) for seed in config.seeds())),
        "{0} = {1}".format(_OUTPUT_DIR, config.output_dir()),
        "{0} = {1}".format(_EMIT_TRACE_CSV, str(config.emit_trace_csv()).lower()),
        "{0} = {1}".format(_EMIT_SUMMARY, str(config.emit_summary()).lower()),
        "{0} = {1}".format(_EMIT_PLOT_DATA, str(config.emit_plot_data()).lower())]

    params = config.params().as_dict()
    for key in _SCENARIO_KEYS[config.scenario()]:
        if key.name() in _RENDER_SKIPS or params[key.param()] is None:
            continue
        lines.append("{0} = {1}".format(key.name(), _render_value(params[key.param()])))

    return "\n".join(lines) + "\n"


def _render_value(value:Any) -> str:
    if isinstance(value, TruthModel):
        return value.value
    if isinstance(value, (tuple, list)):
        return ", ".join(repr(float(item)) for item in value)
    return repr(float(value))


def _seed_list(values:Dict[str, str]) -> List[int]:
    if _SEED in values and (_SEEDS in values or _BASE_SEED in values):
        raise ConfigValueError(_SEED, "cannot be combined with {0} or {1}".format(_SEEDS, _BASE_SEED))

    if _SEED in values:
        return _read_seeds(_SEED, values[_SEED])

    if _SEEDS in values:
        count = _read_int(_SEEDS, values[_SEEDS])
        base = _read_int(_BASE_SEED, values.get(_BASE_SEED, "0"))
        if count < 1:
            raise ConfigValueError(_SEEDS, "must be {0}, got {1}".format(ConfigKey.POSITIVE, count))
        if base < 0:
            raise ConfigValueError(_BASE_SEED, "must be {0}, got {1}".format(ConfigKey.NON_NEGATIVE, base))
        return list(range(base, base + count))

    if _BASE_SEED in values:
        raise ConfigValueError(_BASE_SEED, "needs {0} to be set".format(_SEEDS))

    return [0]


def _build_params(scenario:ScenarioKind, param_values:Dict[str, Any]) -> ScenarioParams:
    keys = {key.param(): key.name() for key in _SCENARIO_KEYS[scenario]}
    try:
        return _PARAMS_TYPES[scenario](**param_values)
    except DomainError as error:
        names = [keys[param] for param in param_values if re.search(r"\b{0}\b".format(param), str(error))]
        raise ConfigValueError("/".join(names) if names else scenario.value, str(error))


def _check_measurement_noise(scenario:ScenarioKind, params:ScenarioParams, param_values:Dict[str, Any]):
    """The filter's measurement noise must be positive even when the simulated sensor is noiseless"""
    override, sensor = _MEASUREMENT_NOISE[scenario]
    param = override if param_values.get(override) is not None else sensor
    value = params.as_dict()[param]
    if value <= 0.0:
        names = {key.param(): key.name() for key in _SCENARIO_KEYS[scenario]}
        raise ConfigValueError(names[param], "the filter needs a positive measurement noise, got {0}".
            format(value))


class RunConfigError(Exception):
    """Raised when a run config document can't be used"""
    pass


class ConfigSyntaxError(RunConfigError):
    """Raised when a line of a config document is malformed"""

    def __init__(self, line_number:int, message:str):
        super().__init__("Line {0}: {1}".format(line_number, message))
        self.line_number = line_number


class UnknownConfigKeyError(RunConfigError):
    """Raised when a config document has a key the scenario doesn't know"""

    def __init__(self, key:str, scenario:ScenarioKind):
        super().__init__("Unknown key '{0}' for a {1} scenario".format(key, scenario.value))
        self.key = key


class MissingConfigKeyError(RunConfigError):
    """Raised when a required key is missing from a config document"""

    def __init__(self, key:str):
        super().__init__("Missing required key '{0}'".format(key))
        self.key = key


class ConfigValueError(RunConfigError, DomainError):
    """Raised when a config value is outside the range its key allows"""

    def __init__(self, key:str, message:str):
        super().__init__("Invalid value for '{0}': {1}".format(key, message))
        self.key = key
