"""Process control layer.

Turns scheduler setpoints and operator overrides into per-tick commands that
are always power-feasible and interlock-safe, and raises alarms for anything
an operator should see. Overrides carry operator authority: they skip the
ramp shaping and interlocks (the plant still enforces physics) and are shed
last when power runs short.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from enum import Enum

from .plant import ModuleMode, PlantState, PlantTopology, Species

POWER_BALANCE_TOL = 1e-9


class Severity(str, Enum):
    INFO = "info"
    WARNING = "warning"
    CRITICAL = "critical"


class FrameSource(str, Enum):
    SCHEDULER = "scheduler"
    OPERATOR_OVERRIDE = "operator_override"


@dataclass(frozen=True)
class Alarm:
    time: float
    severity: Severity
    code: str
    message: str
    node: str | None = None


@dataclass(frozen=True)
class SetpointFrame:
    valid_from: float
    targets: dict[str, float]  # module name -> kW
    source: FrameSource
    operator_id: str | None = None


@dataclass
class ControlConfig:
    shed_priority: list[str] = field(
        default_factory=lambda: ["synthesis", "electrolysis", "desalination"]
    )
    low_watermark: float = 0.05
    high_watermark: float = 0.98
    watermark_overrides: dict[Species, tuple[float, float]] = field(default_factory=dict)
    stale_after_s: float = 7200.0

    def __post_init__(self) -> None:
        marks = [(self.low_watermark, self.high_watermark), *self.watermark_overrides.values()]
        for low, high in marks:
            if not (0.0 <= low < high <= 1.0):
                raise ValueError("watermarks must satisfy 0 <= low < high <= 1")

    def marks_for(self, sp: Species) -> tuple[float, float]:
        return self.watermark_overrides.get(sp, (self.low_watermark, self.high_watermark))


def _validate_shed_priority(cfg: ControlConfig, topo: PlantTopology) -> list[str]:
    if sorted(cfg.shed_priority) != sorted(topo.module_names):
        raise ValueError("shed_priority must be a permutation of the topology's modules")
    return cfg.shed_priority


def reconcile(
    frame: SetpointFrame,
    state: PlantState,
    available_power: float,
    cfg: ControlConfig,
    topo: PlantTopology,
    dt: float,
    override_modules: frozenset[str] = frozenset(),
) -> tuple[dict[str, float], list[Alarm]]:
    """Compute feasible per-module commands from targets.

    Pipeline: clamp to capacity, snap sub-minimum targets up to the
    minimum-load floor, shape by ramp reachability, apply storage
    interlocks, then shed power in priority order until the total fits
    under available_power. A zero target is a stop order and bypasses the
    ramp shaping. Idempotent: feeding the result back in reproduces it.
    """
    shed_order = _validate_shed_priority(cfg, topo)
    now = state.sim_time
    levels = state.storage
    caps = {s.species: s.capacity for s in topo.storages}
    alarms: list[Alarm] = []
    commands: dict[str, float] = {}

    for m in topo.modules:
        target = min(max(frame.targets.get(m.name, 0.0), 0.0), m.p_max)
        mstate = state.modules[m.name]
        if target <= 0.0:
            commands[m.name] = 0.0
            continue
        if m.name in override_modules:
            commands[m.name] = target
            continue
        target = max(target, m.p_min)
        ramp = m.ramp_limit * dt / 60.0
        if mstate.mode is ModuleMode.RUNNING:
            load = mstate.load
            c = min(target, load + ramp) if target > load else max(target, load - ramp)
        else:
            c = max(min(target, ramp), min(target, m.p_min))
        # Interlocks: starve-protect feed storages, overflow-protect product.
        blocked = None
        for sp in m.feed_ratios:
            low, _ = cfg.marks_for(sp)
            if levels.get(sp, 0.0) < low * caps[sp]:
                blocked = ("INTERLOCK_FEED_LOW", sp)
                break
        if blocked is None and m.product in caps:
            _, high = cfg.marks_for(m.product)
            if levels[m.product] > high * caps[m.product]:
                blocked = ("INTERLOCK_PRODUCT_HIGH", m.product)
        if blocked is not None:
            code, sp = blocked
            alarms.append(
                Alarm(
                    time=now,
                    severity=Severity.WARNING,
                    code=code,
                    message=f"{m.name} held at 0 kW: {sp.value} storage watermark",
                    node=f"module.{m.name}",
                )
            )
            c = 0.0
        commands[m.name] = c

    total = sum(commands.values())
    if total > available_power + POWER_BALANCE_TOL:
        ordered = [n for n in shed_order if n not in override_modules] + [
            n for n in shed_order if n in override_modules
        ]
        excess = total - available_power
        for name in ordered:  # controlled reductions first
            if excess <= POWER_BALANCE_TOL:
                break
            m = topo.module(name)
            mstate = state.modules[name]
            if mstate.mode is ModuleMode.RUNNING:
                floor = max(m.p_min, mstate.load - m.ramp_limit * dt / 60.0)
            else:
                floor = 0.0
            give = min(excess, max(commands[name] - floor, 0.0))
            if give > 0.0:
                commands[name] -= give
                excess -= give
                alarms.append(
                    Alarm(
                        time=now,
                        severity=Severity.WARNING,
                        code="POWER_SHED",
                        message=f"{name} shed by {give:.1f} kW to fit available power",
                        node=f"module.{name}",
                    )
                )
        for name in ordered:  # trips if controlled shedding was not enough
            if excess <= POWER_BALANCE_TOL:
                break
            if commands[name] > 0.0:
                excess -= commands[name]
                alarms.append(
                    Alarm(
                        time=now,
                        severity=Severity.WARNING,
                        code="POWER_TRIP",
                        message=f"{name} tripped to 0 kW (was commanded "
                        f"{commands[name]:.1f} kW), available power too low",
                        node=f"module.{name}",
                    )
                )
                commands[name] = 0.0

    return commands, alarms


@dataclass
class ControlTickResult:
    commands: dict[str, float]
    alarms: list[Alarm]
    safe_hold: bool = False


class ControlLoop:
    """Stateful wrapper owned by the simulation loop.

    Holds only alarm-deduplication and staleness memory; the command math
    lives in :func:`reconcile`. One instance per run, ticked once per dt.
    """

    def __init__(self, cfg: ControlConfig, topo: PlantTopology) -> None:
        self.cfg = cfg
        self.topo = topo
        _validate_shed_priority(cfg, topo)
        self._active_conditions: set[tuple[str, str]] = set()

    def _edge(self, key: tuple[str, str], active: bool) -> bool:
        """True when a condition becomes active (alarm on rising edge only)."""
        if active and key not in self._active_conditions:
            self._active_conditions.add(key)
            return True
        if not active:
            self._active_conditions.discard(key)
        return False

    def tick(
        self,
        scheduler_frame: SetpointFrame | None,
        override_frames: dict[str, SetpointFrame],
        state: PlantState,
        available_power: float,
        dt: float,
    ) -> ControlTickResult:
        now = state.sim_time
        alarms: list[Alarm] = []
        safe_hold = False

        stale = scheduler_frame is None or (
            now - scheduler_frame.valid_from > self.cfg.stale_after_s
        )
        if stale:
            safe_hold = True
            if self._edge(("STALE_SCHEDULE", "scheduler"), True):
                alarms.append(
                    Alarm(
                        time=now,
                        severity=Severity.CRITICAL,
                        code="STALE_SCHEDULE",
                        message="no fresh schedule; holding plant safe",
                        node="platform",
                    )
                )
            targets = {name: 0.0 for name in self.topo.module_names}
        else:
            self._edge(("STALE_SCHEDULE", "scheduler"), False)
            targets = dict(scheduler_frame.targets)
            sched_total = sum(
                min(max(t, 0.0), self.topo.module(n).p_max) for n, t in targets.items()
            )
            shortfall = sched_total > available_power + POWER_BALANCE_TOL
            if self._edge(("POWER_SHORTFALL", "platform"), shortfall):
                alarms.append(
                    Alarm(
                        time=now,
                        severity=Severity.INFO,
                        code="POWER_SHORTFALL",
                        message=f"realized power {available_power:.0f} kW below "
                        f"scheduled draw {sched_total:.0f} kW",
                        node="platform",
                    )
                )

        for name, frame in override_frames.items():
            targets[name] = frame.targets[name]

        merged = SetpointFrame(
            valid_from=now, targets=targets, source=FrameSource.SCHEDULER
        )
        commands, rec_alarms = reconcile(
            merged,
            state,
            available_power,
            self.cfg,
            self.topo,
            dt,
            override_modules=frozenset(override_frames),
        )
        # Deduplicate persistent interlock/shed conditions to rising edges.
        for alarm in rec_alarms:
            if self._edge((alarm.code, alarm.node or ""), True):
                alarms.append(alarm)
        current = {(a.code, a.node or "") for a in rec_alarms}
        for key in list(self._active_conditions):
            if key[0] in ("INTERLOCK_FEED_LOW", "INTERLOCK_PRODUCT_HIGH", "POWER_SHED", "POWER_TRIP"):
                if key not in current:
                    self._active_conditions.discard(key)

        return ControlTickResult(commands=commands, alarms=alarms, safe_hold=safe_hold)
