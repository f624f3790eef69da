"""Behavioral models of the asset layer.

Wind farm, seawater desalination, electrolysis, methanol synthesis and the
storages between them, advanced in discrete time by pure step functions.
All quantities are SI-ish engineering units: kW, kWh, kg, m/s, seconds.

The step functions are deterministic and side-effect free: identical inputs
produce bit-identical outputs, which the digital twin relies on for replay.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace
from enum import Enum


class Species(str, Enum):
    WATER = "water"
    HYDROGEN = "hydrogen"
    CO2 = "co2"
    METHANOL = "methanol"
    ELECTRICITY = "electricity"
    OXYGEN = "oxygen"


class ModuleKind(str, Enum):
    DESALINATION = "desalination"
    ELECTROLYSIS = "electrolysis"
    SYNTHESIS = "synthesis"


#: Primary product of each conversion module kind.
PRODUCT_OF_KIND = {
    ModuleKind.DESALINATION: Species.WATER,
    ModuleKind.ELECTROLYSIS: Species.HYDROGEN,
    ModuleKind.SYNTHESIS: Species.METHANOL,
}


class ModuleMode(str, Enum):
    OFF = "off"
    STARTING = "starting"
    RUNNING = "running"
    STOPPING = "stopping"


class PowerInfeasible(Exception):
    """Commands exceed available power: a control-layer bug, never user error."""


@dataclass(frozen=True)
class TurbineParams:
    count: int = 1
    rated_power: float = 15000.0  # kW per turbine
    cut_in: float = 3.0  # m/s
    rated_speed: float = 12.0  # m/s
    cut_out: float = 25.0  # m/s

    def __post_init__(self) -> None:
        if not (0 < self.cut_in < self.rated_speed < self.cut_out):
            raise ValueError("turbine speeds must satisfy 0 < cut_in < rated < cut_out")
        if self.rated_power <= 0 or self.count < 1:
            raise ValueError("rated_power must be > 0 and count >= 1")


@dataclass(frozen=True)
class ConversionModuleParams:
    kind: ModuleKind
    name: str
    p_max: float  # kW
    p_min_frac: float  # fraction of p_max, in [0, 1)
    ramp_limit: float  # kW per minute
    specific_energy: float  # kWh per kg of product
    startup_time: float = 0.0  # s
    feed_ratios: dict[Species, float] = field(default_factory=dict)  # kg feed / kg product
    byproduct_ratios: dict[Species, float] = field(default_factory=dict)  # kg / kg product

    def __post_init__(self) -> None:
        if self.p_max <= 0:
            raise ValueError(f"{self.name}: p_max must be > 0")
        if not (0 <= self.p_min_frac < 1):
            raise ValueError(f"{self.name}: p_min_frac must be in [0, 1)")
        if self.ramp_limit <= 0:
            raise ValueError(f"{self.name}: ramp_limit must be > 0")
        if self.specific_energy <= 0:
            raise ValueError(f"{self.name}: specific_energy must be > 0")
        if self.startup_time < 0:
            raise ValueError(f"{self.name}: startup_time must be >= 0")
        for ratios in (self.feed_ratios, self.byproduct_ratios):
            if any(r < 0 for r in ratios.values()):
                raise ValueError(f"{self.name}: ratios must be >= 0")

    @property
    def product(self) -> Species:
        return PRODUCT_OF_KIND[self.kind]

    @property
    def p_min(self) -> float:
        return self.p_min_frac * self.p_max


@dataclass(frozen=True)
class StorageParams:
    species: Species
    capacity: float  # kg (kWh for electricity)
    initial_level: float
    min_level: float = 0.0

    def __post_init__(self) -> None:
        if not (0 <= self.min_level <= self.initial_level <= self.capacity):
            raise ValueError(
                f"{self.species.value}: need 0 <= min_level <= initial_level <= capacity"
            )


@dataclass(frozen=True)
class PlantTopology:
    """Static plant description: turbine, conversion chain and storages.

    Module order is the processing order per tick (upstream first). The
    wiring is implicit through species: each storage holds one species and
    every feed/product species of a module must have exactly one storage,
    except byproducts, which are reported but not stored.
    """

    turbine: TurbineParams
    modules: tuple[ConversionModuleParams, ...]
    storages: tuple[StorageParams, ...]

    def __post_init__(self) -> None:
        names = [m.name for m in self.modules]
        if len(set(names)) != len(names):
            raise ValueError("module names must be unique")
        seen: set[Species] = set()
        for s in self.storages:
            if s.species in seen:
                raise ValueError(f"duplicate storage for {s.species.value}")
            seen.add(s.species)
        for m in self.modules:
            for sp in m.feed_ratios:
                if sp not in seen:
                    raise ValueError(f"{m.name}: no storage for feed {sp.value}")
            if m.product not in seen:
                raise ValueError(f"{m.name}: no storage for product {m.product.value}")

    def module(self, name: str) -> ConversionModuleParams:
        for m in self.modules:
            if m.name == name:
                return m
        raise KeyError(name)

    def storage(self, species: Species) -> StorageParams:
        for s in self.storages:
            if s.species == species:
                return s
        raise KeyError(species)

    @property
    def module_names(self) -> list[str]:
        return [m.name for m in self.modules]


@dataclass(frozen=True)
class ModuleState:
    mode: ModuleMode = ModuleMode.OFF
    load: float = 0.0  # kW, 0 unless RUNNING
    commanded_load: float = 0.0
    starting_remaining_s: float = 0.0  # > 0 only while STARTING


@dataclass
class FlowSet:
    """Mass and energy flows of one tick. All entries are >= 0."""

    produced: dict[Species, float] = field(default_factory=dict)
    consumed: dict[Species, float] = field(default_factory=dict)
    byproduct: dict[Species, float] = field(default_factory=dict)
    energy_kwh: dict[str, float] = field(default_factory=dict)  # per module
    offtake: dict[Species, float] = field(default_factory=dict)  # removed by ship
    delivered: dict[Species, float] = field(default_factory=dict)  # brought by ship

    def add(self, bucket: dict[Species, float], sp: Species, amount: float) -> None:
        if amount != 0.0:
            bucket[sp] = bucket.get(sp, 0.0) + amount


@dataclass(frozen=True)
class PlantState:
    sim_time: float = 0.0  # s
    modules: dict[str, ModuleState] = field(default_factory=dict)
    storage: dict[Species, float] = field(default_factory=dict)
    last_tick_flows: FlowSet = field(default_factory=FlowSet)
    available_power: float = 0.0  # kW
    curtailed_power: float = 0.0  # kW


def initial_state(topo: PlantTopology) -> PlantState:
    return PlantState(
        sim_time=0.0,
        modules={m.name: ModuleState() for m in topo.modules},
        storage={s.species: s.initial_level for s in topo.storages},
    )


def power_curve(v: float, t: TurbineParams) -> float:
    """Farm output in kW for wind speed v (m/s): cubic between cut-in and
    rated, flat to cut-out, zero outside."""
    if v < 0:
        raise ValueError("wind speed must be >= 0")
    if v < t.cut_in or v >= t.cut_out:
        return 0.0
    num = v**3 - t.cut_in**3
    den = t.rated_speed**3 - t.cut_in**3
    frac = min(max(num / den, 0.0), 1.0)
    return t.count * t.rated_power * frac


def step_module(
    params: ConversionModuleParams,
    state: ModuleState,
    command: float,
    feed_available: dict[Species, float],
    dt: float,
    product_headroom: float = math.inf,
) -> tuple[ModuleState, float, dict[Species, float], float]:
    """Advance one module by dt seconds.

    Returns (new_state, production_kg, consumption_kg_per_species, energy_kwh).

    The load follows the command under the mode machine: a command below the
    minimum-load floor is a stop order (the module cannot run below minimum,
    so it trips to zero via STOPPING). Upward moves are ramp-limited;
    downward commands execute exactly, because the control layer owns
    graceful deceleration and an off-grid plant must be able to shed
    instantly. Feed starvation and full product storage derate the load
    after the mode machine; a starved module forced below its minimum trips.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    if command < 0:
        raise ValueError("command must be >= 0")

    p_min = params.p_min
    ramp = params.ramp_limit * dt / 60.0
    target = min(command, params.p_max)
    if target < p_min or target <= 0.0:
        target = 0.0

    mode = state.mode
    load = state.load
    remaining = state.starting_remaining_s

    if target == 0.0:
        if mode in (ModuleMode.RUNNING, ModuleMode.STARTING):
            mode, load, remaining = ModuleMode.STOPPING, 0.0, 0.0
        else:
            mode, load, remaining = ModuleMode.OFF, 0.0, 0.0
    else:
        if mode in (ModuleMode.OFF, ModuleMode.STOPPING):
            mode, remaining = ModuleMode.STARTING, params.startup_time
        if mode == ModuleMode.STARTING:
            remaining -= dt
            if remaining <= 0.0:
                mode, remaining, load = ModuleMode.RUNNING, 0.0, 0.0
            else:
                load = 0.0
        if mode == ModuleMode.RUNNING:
            if target >= load:
                load = min(target, load + ramp)
            else:
                load = target
            # Minimum-load floor; on first RUNNING tick this may exceed the
            # per-tick ramp (documented mode-boundary jump).
            load = min(max(load, p_min), params.p_max)

    production = 0.0
    consumption: dict[Species, float] = {}
    if mode == ModuleMode.RUNNING and load > 0.0:
        hours = dt / 3600.0
        max_production = product_headroom
        for sp, ratio in params.feed_ratios.items():
            if ratio > 0.0:
                max_production = min(max_production, feed_available.get(sp, 0.0) / ratio)
        wanted = load * hours / params.specific_energy
        if wanted > max_production:
            production = max(max_production, 0.0)
            load = production * params.specific_energy / hours
            if load < p_min or load <= 0.0:
                mode, load, production = ModuleMode.STOPPING, 0.0, 0.0
        else:
            production = wanted
        if production > 0.0:
            consumption = {
                sp: r * production for sp, r in params.feed_ratios.items() if r > 0.0
            }

    energy_kwh = load * dt / 3600.0
    new_state = ModuleState(
        mode=mode, load=load, commanded_load=command, starting_remaining_s=max(remaining, 0.0)
    )
    return new_state, production, consumption, energy_kwh


POWER_FEAS_REL_TOL = 1e-6


def step_plant(
    topo: PlantTopology,
    state: PlantState,
    commands: dict[str, float],
    offtake_order: dict[Species, float],
    v: float,
    dt: float,
    deliveries: dict[Species, float] | None = None,
) -> tuple[PlantState, FlowSet]:
    """Advance the whole plant by dt seconds.

    Modules step in chain order against running storage levels; storages are
    clamped to their bounds only by derating the responsible module, never by
    deleting mass. Ship deliveries top up storages (clamped to capacity) and
    the offtake order is served last, clamped to what is actually in the
    store.
    """
    if dt <= 0:
        raise ValueError("dt must be > 0")
    available = power_curve(v, topo.turbine)
    commanded_total = sum(max(c, 0.0) for c in commands.values())
    if commanded_total > available * (1.0 + POWER_FEAS_REL_TOL) + 1e-9:
        raise PowerInfeasible(
            f"commands total {commanded_total:.3f} kW exceeds available {available:.3f} kW"
        )

    levels = dict(state.storage)
    caps = {s.species: s.capacity for s in topo.storages}
    flows = FlowSet()
    new_modules: dict[str, ModuleState] = {}

    def snap(sp: Species) -> None:
        # Derating keeps levels inside bounds up to float dust; anything
        # beyond dust is a bug, not something to clamp away silently.
        cap = caps[sp]
        dust = 1e-9 * max(1.0, cap)
        lv = levels[sp]
        if lv < -dust or lv > cap + dust:
            raise AssertionError(f"storage {sp.value} out of bounds: {lv} not in [0, {cap}]")
        levels[sp] = min(max(lv, 0.0), cap)

    for m in topo.modules:
        feed_avail = {sp: levels.get(sp, 0.0) for sp in m.feed_ratios}
        headroom = (caps[m.product] - levels[m.product]) if m.product in caps else math.inf
        mstate, produced, consumed, energy = step_module(
            m,
            state.modules[m.name],
            commands.get(m.name, 0.0),
            feed_avail,
            dt,
            product_headroom=max(headroom, 0.0),
        )
        new_modules[m.name] = mstate
        if produced > 0.0:
            levels[m.product] += produced
            snap(m.product)
            flows.add(flows.produced, m.product, produced)
        for sp, amount in consumed.items():
            levels[sp] -= amount
            snap(sp)
            flows.add(flows.consumed, sp, amount)
        for sp, ratio in m.byproduct_ratios.items():
            flows.add(flows.byproduct, sp, ratio * produced)
        flows.energy_kwh[m.name] = energy

    if deliveries:
        for sp, amount in deliveries.items():
            if sp in levels and amount > 0.0:
                accepted = min(amount, caps[sp] - levels[sp])
                if accepted > 0.0:
                    levels[sp] += accepted
                    flows.add(flows.delivered, sp, accepted)

    for sp, order in offtake_order.items():
        if sp in levels and order > 0.0:
            taken = min(order, levels[sp])
            if taken > 0.0:
                levels[sp] -= taken
                flows.add(flows.offtake, sp, taken)

    used_kw = sum(flows.energy_kwh.values()) * 3600.0 / dt
    curtailed = max(available - used_kw, 0.0)
    new_state = PlantState(
        sim_time=state.sim_time + dt,
        modules=new_modules,
        storage=levels,
        last_tick_flows=flows,
        available_power=available,
        curtailed_power=curtailed,
    )
    return new_state, flows


def copy_state(state: PlantState) -> PlantState:
    """Value copy of a plant state (module states are frozen, levels are rebuilt)."""
    return PlantState(
        sim_time=state.sim_time,
        modules=dict(state.modules),
        storage=dict(state.storage),
        last_tick_flows=replace(
            state.last_tick_flows,
            produced=dict(state.last_tick_flows.produced),
            consumed=dict(state.last_tick_flows.consumed),
            byproduct=dict(state.last_tick_flows.byproduct),
            energy_kwh=dict(state.last_tick_flows.energy_kwh),
            offtake=dict(state.last_tick_flows.offtake),
            delivered=dict(state.last_tick_flows.delivered),
        ),
        available_power=state.available_power,
        curtailed_power=state.curtailed_power,
    )
