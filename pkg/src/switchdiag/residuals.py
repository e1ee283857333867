"""Time-domain residual evaluation on a single-submodule cell plant.

The plant integrates the one-RC-link cell model with truth parameters and
emits sensor signals with injected step faults.  Three residuals compare
measured against predicted behavior:

* ``setup1``: an observer rebuilds the RC-link voltage from the measured
  output current and predicts the cell voltage; only valid with the cell
  inserted (forward or backward), since a bypassed cell carries no output
  current information.
* ``cell_current``: output-current vs cell-current sensor comparison, unit
  fault gain, insertion modes only.
* ``redundant_output``: two output-current sensors compared; valid in
  every mode, including bypass.

The reported steady-state gain of the ``setup1`` residual is the full
stationary response (charge-transfer plus ohmic resistance); the ohmic
term alone is only the direct feedthrough and understates the stationary
deviation.
"""

import math
from collections.abc import Callable
from dataclasses import dataclass

import numpy as np

from .bimmc import NOMINAL_CELL, CellParameters
from .errors import (
    InputError,
    NonStationaryError,
    ResidualModeError,
    SimulationDivergedError,
)

__all__ = [
    "FAULT_SIGNALS",
    "MODE_BACKWARD",
    "MODE_BYPASS",
    "MODE_FORWARD",
    "FaultStep",
    "PlantSignals",
    "ResidualTrace",
    "SimScenario",
    "residual_cell_current",
    "residual_redundant_output",
    "residual_setup1",
    "scenario_from_dict",
    "simulate_plant",
    "steady_state_gain",
]

MODE_FORWARD = "insertion-forward"
MODE_BACKWARD = "insertion-backward"
MODE_BYPASS = "bypass"
_MODE_SIGNS = {MODE_FORWARD: 1.0, MODE_BACKWARD: -1.0, MODE_BYPASS: 0.0}

FAULT_SIGNALS = ("f_iout", "f_icell", "f_iout_extra")
SENSOR_OPTIONS = ("cell_current", "extra_output_current")


@dataclass(frozen=True)
class FaultStep:
    """Step fault on a sensor signal: 0 before onset, ``magnitude`` after."""

    signal: str
    onset: float
    magnitude: float
    profile: str = "step"

    def __post_init__(self):
        if self.signal not in FAULT_SIGNALS:
            raise InputError(f"unknown fault signal {self.signal!r}")
        if self.profile != "step":
            raise InputError("only step fault profiles are supported")


@dataclass(frozen=True)
class SimScenario:
    """One plant run: mode, timing, parameters, drive current and faults."""

    mode: str
    dt: float = 1e-5
    duration: float = 0.02
    truth: CellParameters = NOMINAL_CELL
    nominal: CellParameters = NOMINAL_CELL
    i_out: Callable[[float], float] | float = 0.0
    faults: tuple[FaultStep, ...] = ()
    v_p_initial: float = 0.0
    sensors: frozenset[str] = frozenset()

    def __post_init__(self):
        if self.mode not in _MODE_SIGNS:
            raise InputError(
                f"unknown mode {self.mode!r}; expected one of {sorted(_MODE_SIGNS)}"
            )
        if not self.dt > 0:
            raise InputError("dt must be positive")
        if self.duration < self.dt:
            raise InputError("duration must be at least one timestep")
        sensors = frozenset(self.sensors)
        if not sensors <= set(SENSOR_OPTIONS):
            raise InputError(f"unknown sensors {sorted(sensors - set(SENSOR_OPTIONS))}")
        for fault in self.faults:
            if not 0 <= fault.onset <= self.duration:
                raise InputError(f"fault onset {fault.onset} outside [0, {self.duration}]")
            if fault.signal == "f_icell" and "cell_current" not in sensors:
                raise InputError("f_icell injection requires the cell_current sensor")
            if fault.signal == "f_iout_extra" and "extra_output_current" not in sensors:
                raise InputError("f_iout_extra injection requires the extra_output_current sensor")
        object.__setattr__(self, "faults", tuple(self.faults))
        object.__setattr__(self, "sensors", sensors)

    def current_at(self, t: float) -> float:
        if callable(self.i_out):
            return float(self.i_out(t))
        return float(self.i_out)


@dataclass(frozen=True)
class PlantSignals:
    """Sensor traces of one simulated run (True plant state in ``v_p``)."""

    times: np.ndarray
    mode: str
    v_p: np.ndarray
    y_vcell: np.ndarray
    y_iout: np.ndarray
    y_icell: np.ndarray | None = None
    y_iout_extra: np.ndarray | None = None

    @property
    def dt(self) -> float:
        return float(self.times[1] - self.times[0])


@dataclass(frozen=True)
class ResidualTrace:
    """Residual time series; ``kind`` names the generating residual."""

    times: np.ndarray
    values: np.ndarray
    kind: str

    def __post_init__(self):
        if len(self.times) != len(self.values):
            raise InputError("times and values must have equal length")
        if len(self.times) < 2:
            raise InputError("a trace needs at least two samples")


def _fault_series(scenario: SimScenario, signal: str, times: np.ndarray) -> np.ndarray:
    series = np.zeros_like(times)
    for fault in scenario.faults:
        if fault.signal == signal:
            series += fault.magnitude * (times >= fault.onset)
    return series


def simulate_plant(scenario: SimScenario) -> PlantSignals:
    """Integrate the truth plant and emit faulted sensor signals.

    Explicit Euler on the RC-link voltage; the cell current is the output
    current with the mode's sign, zero in bypass.  Sensor faults enter the
    measurements only, never the plant state.
    """
    n_steps = int(round(scenario.duration / scenario.dt))
    times = np.arange(n_steps + 1) * scenario.dt
    sign = _MODE_SIGNS[scenario.mode]
    p = scenario.truth

    i_out = np.array([scenario.current_at(t) for t in times])
    i_cell = sign * i_out
    v_p = np.empty(n_steps + 1)
    state = float(scenario.v_p_initial)
    v_p[0] = state
    decay = 1.0 / (p.r_p * p.c_p)
    for i in range(n_steps):
        state = state + scenario.dt * (float(i_cell[i]) / p.c_p - state * decay)
        if not math.isfinite(state):
            raise SimulationDivergedError(
                f"plant state became non-finite at t={times[i + 1]:.6g} s; "
                "reduce dt below the RC time constant"
            )
        v_p[i + 1] = state

    v_cell = v_p + p.r_o * i_cell + p.v_ocv
    return PlantSignals(
        times=times,
        mode=scenario.mode,
        v_p=v_p,
        y_vcell=v_cell,
        y_iout=i_out + _fault_series(scenario, "f_iout", times),
        y_icell=(
            i_cell + _fault_series(scenario, "f_icell", times)
            if "cell_current" in scenario.sensors
            else None
        ),
        y_iout_extra=(
            i_out + _fault_series(scenario, "f_iout_extra", times)
            if "extra_output_current" in scenario.sensors
            else None
        ),
    )


def _insertion_sign(mode: str, residual: str) -> float:
    if mode == MODE_BYPASS:
        raise ResidualModeError(
            f"residual {residual!r} is not valid in bypass mode: a bypassed cell "
            "carries no output-current information"
        )
    if mode not in _MODE_SIGNS:
        raise InputError(f"unknown mode {mode!r}")
    return _MODE_SIGNS[mode]


def residual_setup1(
    signals: PlantSignals, nominal: CellParameters, mode: str
) -> ResidualTrace:
    """Observer residual on cell voltage, driven by the measured output current.

    ``mode`` selects the residual's sign convention (the mode the residual
    is designed for) and must be an insertion mode.  The observer state is
    initialized from the first measurement, so a fault-free run gives a
    residual that is zero up to roundoff regardless of the initial RC-link
    voltage.
    """
    sign = _insertion_sign(mode, "setup1")
    dt = signals.dt
    tau_inv = 1.0 / (nominal.r_p * nominal.c_p)
    v_hat = np.empty_like(signals.times)
    v_hat[0] = signals.y_vcell[0] - sign * nominal.r_o * signals.y_iout[0] - nominal.v_ocv
    for i in range(len(v_hat) - 1):
        v_hat[i + 1] = v_hat[i] + dt * (sign * signals.y_iout[i] / nominal.c_p - v_hat[i] * tau_inv)
    r = signals.y_vcell - v_hat - sign * nominal.r_o * signals.y_iout - nominal.v_ocv
    return ResidualTrace(signals.times, r, "setup1")


def residual_cell_current(signals: PlantSignals) -> ResidualTrace:
    """Output-current vs cell-current comparison; unit gain from either fault."""
    if signals.y_icell is None:
        raise InputError("cell-current residual requires the cell_current sensor")
    sign = _insertion_sign(signals.mode, "cell_current")
    r = signals.y_iout - sign * signals.y_icell
    return ResidualTrace(signals.times, r, "cell_current")


def residual_redundant_output(signals: PlantSignals) -> ResidualTrace:
    """Difference of the two output-current sensors; valid in every mode."""
    if signals.y_iout_extra is None:
        raise InputError(
            "redundant-output residual requires the extra_output_current sensor"
        )
    r = signals.y_iout - signals.y_iout_extra
    return ResidualTrace(signals.times, r, "redundant_output")


def steady_state_gain(
    trace: ResidualTrace,
    fault_magnitude: float,
    *,
    rel_tol: float = 1e-3,
    zero_tol: float = 1e-9,
) -> float:
    """Mean of the final 10% window divided by the fault magnitude.

    Refuses traces whose tail still varies by more than ``rel_tol``
    relative to the window mean.  A zero fault magnitude yields gain 0 for
    an (essentially) zero trace and is an error otherwise.
    """
    if fault_magnitude == 0:
        if np.max(np.abs(trace.values)) <= zero_tol:
            return 0.0
        raise InputError("cannot normalize a non-zero residual by a zero fault magnitude")
    window = trace.values[-max(1, len(trace.values) // 10):]
    mean = float(window.mean())
    spread = float(window.max() - window.min())
    if spread > rel_tol * max(abs(mean), zero_tol):
        raise NonStationaryError(
            f"trace tail is not stationary: spread {spread:.3e} vs mean {mean:.3e} "
            f"over the final {len(window)} samples"
        )
    return mean / fault_magnitude


# -- scenario (de)serialization ------------------------------------------------


def _parse_current_profile(entry) -> Callable[[float], float] | float:
    if isinstance(entry, (int, float)):
        return float(entry)
    if isinstance(entry, dict):
        kind = entry.get("kind", "constant")
        if kind == "constant":
            return float(entry.get("value", 0.0))
        if kind == "sine":
            amplitude = float(entry.get("amplitude", 0.0))
            freq = float(entry.get("frequency_hz", 0.0))
            return lambda t: amplitude * math.sin(2.0 * math.pi * freq * t)
        raise InputError(f"unknown current profile kind {kind!r}")
    raise InputError("i_out must be a number or a profile object")


def _params_from_dict(data: dict | None, default: CellParameters) -> CellParameters:
    if data is None:
        return default
    try:
        return CellParameters(
            r_p=float(data["r_p"]),
            c_p=float(data["c_p"]),
            r_o=float(data["r_o"]),
            v_ocv=float(data["v_ocv"]),
        )
    except KeyError as exc:
        raise InputError(f"cell parameters missing field {exc.args[0]!r}") from None


def scenario_from_dict(data: dict) -> SimScenario:
    """Build a scenario from its JSON object form."""
    if "mode" not in data:
        raise InputError("scenario requires a 'mode' field")
    faults = tuple(
        FaultStep(
            signal=f["signal"],
            onset=float(f.get("onset", 0.0)),
            magnitude=float(f["magnitude"]),
            profile=f.get("profile", "step"),
        )
        for f in data.get("faults", ())
    )
    return SimScenario(
        mode=data["mode"],
        dt=float(data.get("dt", 1e-5)),
        duration=float(data.get("duration", 0.02)),
        truth=_params_from_dict(data.get("truth_params"), NOMINAL_CELL),
        nominal=_params_from_dict(data.get("nominal_params"), NOMINAL_CELL),
        i_out=_parse_current_profile(data.get("i_out", 0.0)),
        faults=faults,
        v_p_initial=float(data.get("v_p_initial", 0.0)),
        sensors=frozenset(data.get("sensors", ())),
    )


def applicable_residuals(
    scenario: SimScenario, signals: PlantSignals
) -> dict[str, ResidualTrace | None]:
    """Evaluate every residual the scenario's sensors and mode support."""
    insertion = scenario.mode != MODE_BYPASS
    return {
        "setup1": (
            residual_setup1(signals, scenario.nominal, scenario.mode) if insertion else None
        ),
        "cell_current": (
            residual_cell_current(signals)
            if insertion and "cell_current" in scenario.sensors
            else None
        ),
        "redundant_output": (
            residual_redundant_output(signals)
            if "extra_output_current" in scenario.sensors
            else None
        ),
    }


def write_traces_csv(
    path,
    times: np.ndarray,
    traces: dict[str, ResidualTrace | None],
) -> None:
    """CSV with one row per sample; absent residuals leave empty cells."""
    import csv

    columns = [("r_setup1_V", "setup1"), ("r_cellcurrent_A", "cell_current"),
               ("r_redundant_A", "redundant_output")]
    with open(path, "w", newline="") as handle:
        writer = csv.writer(handle)
        writer.writerow(["time_s"] + [label for label, _ in columns])
        for i, t in enumerate(times):
            row: list[object] = [f"{t:.9g}"]
            for _, key in columns:
                trace = traces.get(key)
                row.append(f"{trace.values[i]:.12g}" if trace is not None else "")
            writer.writerow(row)
