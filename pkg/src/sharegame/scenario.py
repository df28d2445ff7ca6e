"""Random indoor-office scenarios and channel gains.

Path loss is a log-distance law plus a per-wall penalty on an axis-aligned
room grid::

    PL(d) = PL0 + 10 eta log10(max(d, d0) / d0) + walls * L_wall   [dB]

The defaults (46.8 dB at 1 m, slope 1.87, 12 dB heavy walls, 10 m rooms with
two 5 m corridors on a 100 m x 50 m floor) imitate an indoor-office layout;
they are configuration values, not calibrated model tables.  Fast fading is
Rayleigh, so ``|h|^2 ~ Exp(1)``.
"""

from __future__ import annotations

import json
from dataclasses import dataclass, field, replace
from pathlib import Path

import numpy as np

from .allocation import ConfigurationError

TX_COORDINATES = ((25.0, 12.5), (25.0, -12.5), (-25.0, -12.5), (-25.0, 12.5))
SCHEMA_VERSION = 1


def dbm_to_watts(dbm):
    return 10.0 ** ((np.asarray(dbm, dtype=float) - 30.0) / 10.0)


def watts_to_dbm(watts):
    with np.errstate(divide="ignore"):
        return 10.0 * np.log10(np.asarray(watts, dtype=float)) + 30.0


def band_power_dbm(density_dbm_hz: float, bandwidth_hz: float) -> float:
    """Total power over a band for a flat power spectral density."""
    return float(density_dbm_hz + 10.0 * np.log10(bandwidth_hz))


@dataclass(frozen=True)
class Layout:
    """Floor geometry, wall grid, transmitters and path-loss coefficients."""

    tx_positions: tuple = TX_COORDINATES
    tx_owner: tuple = (0, 1, 2, 3)
    x_bounds: tuple = (-50.0, 50.0)
    y_bounds: tuple = (-25.0, 25.0)
    wall_x: tuple = tuple(float(x) for x in range(-40, 41, 10))
    wall_y: tuple = (-15.0, -10.0, 0.0, 10.0, 15.0)
    home_size: tuple = (50.0, 25.0)
    pl0_db: float = 46.8
    eta: float = 1.87
    d0: float = 1.0
    wall_loss_db: float = 12.0

    def __post_init__(self):
        pos = np.asarray(self.tx_positions, dtype=float)
        if pos.ndim != 2 or pos.shape[1] != 2 or len(self.tx_owner) != pos.shape[0]:
            raise ConfigurationError("each transmitter needs a 2-D position and an owner")
        (x0, x1), (y0, y1) = self.x_bounds, self.y_bounds
        inside = (pos[:, 0] >= x0) & (pos[:, 0] <= x1) & (pos[:, 1] >= y0) & (pos[:, 1] <= y1)
        if not inside.all():
            raise ConfigurationError("transmitters must lie inside the floor")

    @property
    def n_players(self) -> int:
        return int(max(self.tx_owner)) + 1

    def transmitters_of(self, operator: int) -> np.ndarray:
        return np.flatnonzero(np.asarray(self.tx_owner) == operator)


def two_player_layout(**overrides) -> Layout:
    """TXs 1 and 3 belong to the first operator, TXs 2 and 4 to the second."""
    return Layout(tx_owner=(0, 1, 0, 1), **overrides)


def four_player_layout(**overrides) -> Layout:
    return Layout(tx_owner=(0, 1, 2, 3), **overrides)


PRESETS = {"two-player": two_player_layout, "four-player": four_player_layout}


def walls_crossed(p, q, layout: Layout):
    """Number of grid walls strictly between the two points (broadcasts)."""
    p = np.asarray(p, dtype=float)
    q = np.asarray(q, dtype=float)
    count = 0
    for coord, walls in ((0, layout.wall_x), (1, layout.wall_y)):
        lo = np.minimum(p[..., coord], q[..., coord])[..., None]
        hi = np.maximum(p[..., coord], q[..., coord])[..., None]
        w = np.asarray(walls, dtype=float)
        count = count + ((w > lo) & (w < hi)).sum(axis=-1)
    return count


def path_loss(tx_pos, user_pos, layout: Layout):
    """Path loss in dB; distances below ``d0`` are clamped."""
    tx_pos = np.asarray(tx_pos, dtype=float)
    user_pos = np.asarray(user_pos, dtype=float)
    d = np.linalg.norm(user_pos - tx_pos, axis=-1)
    d = np.maximum(d, layout.d0)
    pl = layout.pl0_db + 10.0 * layout.eta * np.log10(d / layout.d0)
    return pl + walls_crossed(tx_pos, user_pos, layout) * layout.wall_loss_db


def channel_gain(tx_pos, user_pos, layout: Layout, rng: np.random.Generator):
    """Linear power gain ``|h~|^2 / L`` with unit-mean exponential fading."""
    loss = 10.0 ** (path_loss(tx_pos, user_pos, layout) / 10.0)
    fading = rng.exponential(1.0, size=np.shape(loss))
    return fading / loss


def generate_users(layout: Layout, operator: int, mean_users: float, visiting_prob: float, rng):
    """Drop the users of one operator.

    Each of the operator's transmitters gets ``Poisson(mean_users)`` users.  A
    user lands uniformly in the ``home_size`` rectangle centred on its own
    transmitter (clipped to the floor) with probability ``1 - visiting_prob``
    and uniformly over the whole floor otherwise.

    Returns ``(positions, home_tx)`` arrays.
    """
    if not mean_users > 0:
        raise ConfigurationError("mean number of users must be positive")
    if not 0.0 <= visiting_prob <= 1.0:
        raise ConfigurationError(f"visiting probability {visiting_prob} outside [0, 1]")
    (fx0, fx1), (fy0, fy1) = layout.x_bounds, layout.y_bounds
    positions, home = [], []
    for v in layout.transmitters_of(operator):
        k = int(rng.poisson(mean_users))
        cx, cy = layout.tx_positions[v]
        hx, hy = layout.home_size[0] / 2, layout.home_size[1] / 2
        bx0, bx1 = max(cx - hx, fx0), min(cx + hx, fx1)
        by0, by1 = max(cy - hy, fy0), min(cy + hy, fy1)
        visiting = rng.random(k) < visiting_prob
        u = rng.random((k, 2))
        pts = np.where(
            visiting[:, None],
            np.column_stack([fx0 + u[:, 0] * (fx1 - fx0), fy0 + u[:, 1] * (fy1 - fy0)]),
            np.column_stack([bx0 + u[:, 0] * (bx1 - bx0), by0 + u[:, 1] * (by1 - by0)]),
        )
        positions.append(pts)
        home.append(np.full(k, v, dtype=np.int64))
    if not positions:
        return np.zeros((0, 2)), np.zeros(0, dtype=np.int64)
    return np.vstack(positions), np.concatenate(home)


@dataclass(frozen=True, eq=False)
class Scenario:
    """Everything needed to build spectral-efficiency tables.

    Powers are linear densities in W/Hz; ``gains[v, u]`` is the linear power
    gain from transmitter ``v`` to user ``u``.
    """

    n_players: int
    tx_positions: np.ndarray
    tx_owner: np.ndarray
    user_positions: np.ndarray
    user_owner: np.ndarray
    gains: np.ndarray
    tx_power: np.ndarray
    noise: float
    background: float = 0.0
    user_home: np.ndarray | None = None
    layout: Layout | None = None
    seed: int | None = None

    def __post_init__(self):
        for name in ("tx_positions", "user_positions", "gains", "tx_power"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=float))
        for name in ("tx_owner", "user_owner"):
            object.__setattr__(self, name, np.asarray(getattr(self, name), dtype=np.int64))
        V, U = self.tx_owner.size, self.user_owner.size
        if self.tx_power.ndim == 0:
            object.__setattr__(self, "tx_power", np.full(V, float(self.tx_power)))
        if self.gains.shape != (V, U):
            raise ConfigurationError(f"gains must be ({V}, {U}), got {self.gains.shape}")
        if (self.gains <= 0).any():
            raise ConfigurationError("channel gains must be positive")
        if self.noise < 0 or self.background < 0:
            raise ConfigurationError("noise and background densities must be non-negative")
        for n in np.unique(self.user_owner):
            if not (self.tx_owner == n).any():
                raise ConfigurationError(f"operator {n} has users but no transmitter")

    @property
    def n_users(self) -> int:
        return int(self.user_owner.size)

    def users_of(self, operator: int) -> np.ndarray:
        return np.flatnonzero(self.user_owner == operator)

    def transmitters_of(self, operator: int) -> np.ndarray:
        return np.flatnonzero(self.tx_owner == operator)

    @property
    def serving(self) -> np.ndarray:
        """Strongest-gain transmitter of the user's own operator."""
        own = self.tx_owner[:, None] == self.user_owner[None, :]
        g = np.where(own, self.gains, -np.inf)
        return np.argmax(g, axis=0)

    @property
    def received(self) -> np.ndarray:
        """Received power density ``P_v |h_vu|^2`` as a ``(V, U)`` array."""
        return self.tx_power[:, None] * self.gains

    def with_gains(self, gains) -> "Scenario":
        return replace(self, gains=np.asarray(gains, dtype=float))


@dataclass(frozen=True)
class ScenarioConfig:
    preset: str = "two-player"
    mean_users: float = 5.0
    visiting_prob: float = 0.0
    tx_power_dbm_hz: float = -53.0
    noise_dbm_hz: float = -195.0
    background_dbm_hz: float | None = None
    layout_overrides: dict = field(default_factory=dict)

    def layout(self) -> Layout:
        if self.preset not in PRESETS:
            raise ConfigurationError(f"unknown scenario preset {self.preset!r}; choose from {sorted(PRESETS)}")
        return PRESETS[self.preset](**self.layout_overrides)


def draw_fading(layout: Layout, user_positions, rng) -> np.ndarray:
    tx = np.asarray(layout.tx_positions, dtype=float)
    users = np.asarray(user_positions, dtype=float).reshape(-1, 2)
    return channel_gain(tx[:, None, :], users[None, :, :], layout, rng)


def generate_scenario(config: ScenarioConfig, rng: np.random.Generator, seed: int | None = None) -> Scenario:
    """Draw users for every operator, then one fading realization."""
    layout = config.layout()
    positions, owners, homes = [], [], []
    for n in range(layout.n_players):
        pos, home = generate_users(layout, n, config.mean_users, config.visiting_prob, rng)
        positions.append(pos)
        owners.append(np.full(len(home), n, dtype=np.int64))
        homes.append(home)
    user_positions = np.vstack(positions)
    gains = draw_fading(layout, user_positions, rng)
    bg = 0.0 if config.background_dbm_hz is None else float(dbm_to_watts(config.background_dbm_hz))
    return Scenario(
        n_players=layout.n_players,
        tx_positions=np.asarray(layout.tx_positions, dtype=float),
        tx_owner=np.asarray(layout.tx_owner),
        user_positions=user_positions,
        user_owner=np.concatenate(owners),
        gains=gains,
        tx_power=float(dbm_to_watts(config.tx_power_dbm_hz)),
        noise=float(dbm_to_watts(config.noise_dbm_hz)),
        background=bg,
        user_home=np.concatenate(homes),
        layout=layout,
        seed=seed,
    )


def redraw_fading(scenario: Scenario, rng: np.random.Generator) -> Scenario:
    """Same users, fresh Rayleigh fading."""
    if scenario.layout is None:
        raise ConfigurationError("scenario has no layout to redraw fading from")
    return scenario.with_gains(draw_fading(scenario.layout, scenario.user_positions, rng))


# JSON schema: positions in meters, gains linear, powers in dBm/Hz.
def scenario_to_dict(scenario: Scenario) -> dict:
    out = {
        "schema_version": SCHEMA_VERSION,
        "n_players": int(scenario.n_players),
        "transmitters": [
            {"x": float(p[0]), "y": float(p[1]), "owner": int(o), "power_dbm_hz": float(watts_to_dbm(pw))}
            for p, o, pw in zip(scenario.tx_positions, scenario.tx_owner, scenario.tx_power)
        ],
        "users": [
            {
                "x": float(p[0]),
                "y": float(p[1]),
                "owner": int(o),
                "home_tx": None if scenario.user_home is None else int(scenario.user_home[i]),
            }
            for i, (p, o) in enumerate(zip(scenario.user_positions, scenario.user_owner))
        ],
        "gains": [[float(g) for g in row] for row in scenario.gains],
        "noise_dbm_hz": float(watts_to_dbm(scenario.noise)),
        "background_dbm_hz": None if scenario.background == 0 else float(watts_to_dbm(scenario.background)),
        "seed": scenario.seed,
    }
    return out


def scenario_from_dict(data: dict, layout: Layout | None = None) -> Scenario:
    if data.get("schema_version") != SCHEMA_VERSION:
        raise ConfigurationError(f"unsupported scenario schema version {data.get('schema_version')!r}")
    txs = data["transmitters"]
    users = data["users"]
    homes = [u.get("home_tx") for u in users]
    bg = data.get("background_dbm_hz")
    return Scenario(
        n_players=int(data["n_players"]),
        tx_positions=np.array([[t["x"], t["y"]] for t in txs]).reshape(-1, 2),
        tx_owner=np.array([t["owner"] for t in txs]),
        user_positions=np.array([[u["x"], u["y"]] for u in users]).reshape(-1, 2),
        user_owner=np.array([u["owner"] for u in users], dtype=np.int64),
        gains=np.array(data["gains"], dtype=float).reshape(len(txs), len(users)),
        tx_power=dbm_to_watts([t["power_dbm_hz"] for t in txs]),
        noise=float(dbm_to_watts(data["noise_dbm_hz"])),
        background=0.0 if bg is None else float(dbm_to_watts(bg)),
        user_home=None if any(h is None for h in homes) else np.array(homes, dtype=np.int64),
        layout=layout,
        seed=data.get("seed"),
    )


def save_scenario(scenario: Scenario, path) -> None:
    Path(path).write_text(json.dumps(scenario_to_dict(scenario), indent=1, sort_keys=True) + "\n")


def load_scenario(path, layout: Layout | None = None) -> Scenario:
    return scenario_from_dict(json.loads(Path(path).read_text()), layout=layout)
