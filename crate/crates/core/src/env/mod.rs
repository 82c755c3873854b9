//! Deterministic, seedable gridworld environments with ground-truth agent
//! position.
//!
//! Four worlds cover the exploration regimes the lab studies:
//! * [`EnvKind::MultiRoomWorld`] — a pyramid of rooms behind locked doors,
//!   sparse rewards deep inside.
//! * [`EnvKind::HallwayKeyDoor`] — a key tucked into an alcove, a locked door
//!   at the far end of a hazard-patrolled hallway, treasure behind it.
//! * [`EnvKind::CrossMaze`] — four arm tokens that must all be held before
//!   the central vault pays out.
//! * [`EnvKind::DenseCollect`] — a single room of collectibles with an oxygen
//!   meter that forces surfacing.
//!
//! All dynamics are pure functions of `(spec, layout seed, episode seed,
//! action sequence)`; stochasticity enters training only through policy
//! sampling.

mod layout;

use serde::Serialize;
use thiserror::Error;

use crate::seed;

/// Observation channel indices. The compass plane, when enabled, is appended
/// after these by the training loop.
pub mod channel {
    pub const WALLS: usize = 0;
    pub const HAZARDS: usize = 1;
    pub const ITEMS: usize = 2;
    pub const DOORS: usize = 3;
    pub const AGENT: usize = 4;
    pub const STATUS: usize = 5;
}

/// Number of channels every environment observation carries.
pub const OBS_CHANNELS: u32 = 6;

#[derive(Debug, Error)]
pub enum EnvError {
    #[error("invalid env spec field `{field}`: {message}")]
    InvalidSpec { field: &'static str, message: String },
    #[error("step called on a terminated episode; call reset first")]
    EpisodeOver,
    #[error("environment must be reset before stepping")]
    NotStarted,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EnvKind {
    MultiRoomWorld,
    HallwayKeyDoor,
    CrossMaze,
    DenseCollect,
}

impl EnvKind {
    pub fn name(self) -> &'static str {
        match self {
            EnvKind::MultiRoomWorld => "multi_room_world",
            EnvKind::HallwayKeyDoor => "hallway_key_door",
            EnvKind::CrossMaze => "cross_maze",
            EnvKind::DenseCollect => "dense_collect",
        }
    }

    pub fn parse(name: &str) -> Option<EnvKind> {
        match name {
            "multi_room_world" => Some(EnvKind::MultiRoomWorld),
            "hallway_key_door" => Some(EnvKind::HallwayKeyDoor),
            "cross_maze" => Some(EnvKind::CrossMaze),
            "dense_collect" => Some(EnvKind::DenseCollect),
            _ => None,
        }
    }
}

/// Raw reward points per environment event, before clipping.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RewardTable {
    pub key: f64,
    pub door: f64,
    pub treasure: f64,
    pub arm_token: f64,
    pub vault: f64,
    pub collectible: f64,
}

impl Default for RewardTable {
    fn default() -> Self {
        RewardTable {
            key: 100.0,
            door: 300.0,
            treasure: 1000.0,
            arm_token: 50.0,
            vault: 1000.0,
            collectible: 10.0,
        }
    }
}

impl RewardTable {
    fn validate(&self) -> Result<(), EnvError> {
        let fields = [
            ("reward_table.key", self.key),
            ("reward_table.door", self.door),
            ("reward_table.treasure", self.treasure),
            ("reward_table.arm_token", self.arm_token),
            ("reward_table.vault", self.vault),
            ("reward_table.collectible", self.collectible),
        ];
        for (name, v) in fields {
            if !v.is_finite() {
                return Err(EnvError::InvalidSpec {
                    field: match name {
                        "reward_table.key" => "reward_table.key",
                        "reward_table.door" => "reward_table.door",
                        "reward_table.treasure" => "reward_table.treasure",
                        "reward_table.arm_token" => "reward_table.arm_token",
                        "reward_table.vault" => "reward_table.vault",
                        _ => "reward_table.collectible",
                    },
                    message: format!("must be finite, got {v}"),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnvSpec {
    pub kind: EnvKind,
    pub room_width: u32,
    pub room_height: u32,
    pub room_count: u32,
    pub lives: u32,
    pub max_episode_steps: u32,
    pub hazard_density: f64,
    pub reward_table: RewardTable,
}

impl EnvSpec {
    /// The lab defaults for each world. Sizes are small enough for
    /// minutes-scale runs but large enough that undirected exploration fails
    /// on the sparse variants.
    pub fn defaults(kind: EnvKind) -> EnvSpec {
        let (w, h, rooms, lives, max_steps, hazard_density) = match kind {
            EnvKind::MultiRoomWorld => (24, 18, 6, 3, 600, 0.5),
            EnvKind::HallwayKeyDoor => (40, 9, 1, 3, 400, 0.6),
            EnvKind::CrossMaze => (33, 33, 1, 1, 400, 0.0),
            EnvKind::DenseCollect => (20, 16, 1, 3, 240, 0.5),
        };
        EnvSpec {
            kind,
            room_width: w,
            room_height: h,
            room_count: rooms,
            lives,
            max_episode_steps: max_steps,
            hazard_density,
            reward_table: RewardTable::default(),
        }
    }

    pub fn validate(&self) -> Result<(), EnvError> {
        fn err(field: &'static str, message: String) -> EnvError {
            EnvError::InvalidSpec { field, message }
        }
        if self.room_width < 4 {
            return Err(err("room_width", format!("must be >= 4, got {}", self.room_width)));
        }
        if self.room_height < 4 {
            return Err(err("room_height", format!("must be >= 4, got {}", self.room_height)));
        }
        if self.lives < 1 {
            return Err(err("lives", "must be >= 1".into()));
        }
        if self.max_episode_steps < 1 {
            return Err(err("max_episode_steps", "must be >= 1".into()));
        }
        if !(0.0..=1.0).contains(&self.hazard_density) {
            return Err(err(
                "hazard_density",
                format!("must lie in [0, 1], got {}", self.hazard_density),
            ));
        }
        self.reward_table.validate()?;
        match self.kind {
            EnvKind::MultiRoomWorld => {
                if self.room_count < 1 || self.room_count > 64 {
                    return Err(err("room_count", "must lie in 1..=64".into()));
                }
                if self.room_width < 12 || self.room_height < 12 {
                    return Err(err("room_width", "multi_room_world rooms must be at least 12x12".into()));
                }
            }
            other => {
                if self.room_count != 1 {
                    return Err(err(
                        "room_count",
                        format!("{} is a single-room world", other.name()),
                    ));
                }
                let (min_w, min_h) = match other {
                    EnvKind::HallwayKeyDoor => (16, 7),
                    EnvKind::CrossMaze => (9, 9),
                    EnvKind::DenseCollect => (10, 8),
                    EnvKind::MultiRoomWorld => unreachable!(),
                };
                if self.room_width < min_w {
                    return Err(err(
                        "room_width",
                        format!("{} needs room_width >= {min_w}", other.name()),
                    ));
                }
                if self.room_height < min_h {
                    return Err(err(
                        "room_height",
                        format!("{} needs room_height >= {min_h}", other.name()),
                    ));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Up,
    Down,
    Left,
    Right,
    Stay,
    Interact,
}

impl Action {
    pub const ALL: [Action; 6] =
        [Action::Up, Action::Down, Action::Left, Action::Right, Action::Stay, Action::Interact];

    pub fn index(self) -> usize {
        match self {
            Action::Up => 0,
            Action::Down => 1,
            Action::Left => 2,
            Action::Right => 3,
            Action::Stay => 4,
            Action::Interact => 5,
        }
    }

    fn delta(self) -> (i64, i64) {
        match self {
            Action::Up => (0, -1),
            Action::Down => (0, 1),
            Action::Left => (-1, 0),
            Action::Right => (1, 0),
            Action::Stay | Action::Interact => (0, 0),
        }
    }
}

/// Ground-truth agent location; the gridworld stand-in for a position read
/// out of emulator memory.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AgentPosition {
    pub x: u32,
    pub y: u32,
    pub room: u32,
}

/// Multi-channel cell grid the agent perceives. Values lie in [0, 1]; shape
/// is constant for a given configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    width: u32,
    height: u32,
    channels: u32,
    data: Vec<f64>,
}

impl Observation {
    pub(crate) fn from_parts(width: u32, height: u32, channels: u32, data: Vec<f64>) -> Observation {
        debug_assert_eq!(data.len(), (width * height * channels) as usize);
        Observation { width, height, channels, data }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn channels(&self) -> u32 {
        self.channels
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// One channel plane, row-major.
    pub fn channel(&self, c: usize) -> &[f64] {
        let plane = (self.width * self.height) as usize;
        &self.data[c * plane..(c + 1) * plane]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepResult {
    pub obs: Observation,
    pub raw_reward: f64,
    pub terminated: bool,
    pub life_lost: bool,
    pub position: AgentPosition,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum ItemKind {
    Key,
    ArmToken,
    Vault,
    Treasure,
    Collectible,
}

impl ItemKind {
    fn obs_value(self) -> f64 {
        match self {
            ItemKind::Key => 1.0,
            ItemKind::ArmToken => 0.9,
            ItemKind::Vault => 0.8,
            ItemKind::Treasure => 0.7,
            ItemKind::Collectible => 0.5,
        }
    }
}

#[derive(Debug, Clone)]
pub(crate) struct Item {
    pub room: u32,
    pub x: u32,
    pub y: u32,
    pub kind: ItemKind,
}

#[derive(Debug, Clone, Copy)]
pub(crate) struct DoorCell {
    pub room: u32,
    pub x: u32,
    pub y: u32,
    /// Interior cell an agent lands on after passing through from the other
    /// side. Unused for single-cell doors.
    pub entry: (u32, u32),
}

#[derive(Debug, Clone)]
pub(crate) struct Door {
    pub cells: Vec<DoorCell>,
    pub locked: bool,
    pub starts_open: bool,
}

/// Patrolling hazard. The cell at global step `t` is
/// `path[(t + phase) % path.len()]`; the route comes from the layout seed and
/// the phase from the episode seed.
#[derive(Debug, Clone)]
pub(crate) struct Hazard {
    pub room: u32,
    pub path: Vec<(u32, u32)>,
}

#[derive(Debug, Clone)]
pub(crate) struct Room {
    pub walls: Vec<bool>,
}

#[derive(Debug, Clone)]
pub(crate) struct Layout {
    pub rooms: Vec<Room>,
    pub spawn: AgentPosition,
    pub items: Vec<Item>,
    pub doors: Vec<Door>,
    pub hazards: Vec<Hazard>,
    pub adjacency: Vec<(u32, u32)>,
    pub oxygen_max: Option<u32>,
    pub surface_row: Option<u32>,
    pub treasure_ends_episode: bool,
    pub token_goal: u32,
    /// Steps until a collected collectible reappears; None = no respawn.
    pub collectible_respawn: Option<u32>,
    /// Steps until a collected treasure reappears; None = one-shot.
    pub treasure_respawn: Option<u32>,
    /// Collectibles that patrol a lane on a fixed schedule, Seaquest-style.
    pub swimmers: Vec<Hazard>,
}

/// A running gridworld instance. Single-owner; distinct instances share no
/// state and may be stepped concurrently.
#[derive(Debug, Clone)]
pub struct GridEnv {
    spec: EnvSpec,
    layout: Layout,
    wall_templates: Vec<Vec<f64>>,

    started: bool,
    terminated: bool,
    steps: u32,
    lives_left: u32,
    oxygen: u32,
    pos: AgentPosition,
    key_held: bool,
    tokens_held: u32,
    item_taken: Vec<Option<u32>>,
    swimmer_taken: Vec<Option<u32>>,
    swimmer_phase: Vec<usize>,
    door_open: Vec<bool>,
    hazard_phase: Vec<usize>,
    obs_buf: Vec<f64>,
}

/// Builds an environment. Identical `(spec, seed)` pairs produce identical
/// layouts; the environment starts in a reset-required state.
pub fn make_env(spec: &EnvSpec, seed: u64) -> Result<GridEnv, EnvError> {
    spec.validate()?;
    let layout = layout::build(spec, seed);
    let plane = (spec.room_width * spec.room_height) as usize;
    let mut wall_templates = Vec::with_capacity(layout.rooms.len());
    for room in &layout.rooms {
        let mut t = vec![0.0; plane];
        for (i, &w) in room.walls.iter().enumerate() {
            if w {
                t[i] = 1.0;
            }
        }
        wall_templates.push(t);
    }
    let items = layout.items.len();
    let doors = layout.doors.len();
    let hazards = layout.hazards.len();
    let swimmers = layout.swimmers.len();
    Ok(GridEnv {
        pos: layout.spawn,
        oxygen: layout.oxygen_max.unwrap_or(0),
        lives_left: spec.lives,
        spec: spec.clone(),
        layout,
        wall_templates,
        started: false,
        terminated: false,
        steps: 0,
        key_held: false,
        tokens_held: 0,
        item_taken: vec![None; items],
        swimmer_taken: vec![None; swimmers],
        swimmer_phase: vec![0; swimmers],
        door_open: vec![false; doors],
        hazard_phase: vec![0; hazards],
        obs_buf: vec![0.0; plane * OBS_CHANNELS as usize],
    })
}

impl GridEnv {
    pub fn spec(&self) -> &EnvSpec {
        &self.spec
    }

    /// Room adjacency pairs (parent, child), for layout introspection.
    pub fn adjacency(&self) -> &[(u32, u32)] {
        &self.layout.adjacency
    }

    pub fn spawn(&self) -> AgentPosition {
        self.layout.spawn
    }

    /// Ground-truth agent position. Pure query.
    pub fn position(&self) -> AgentPosition {
        debug_assert!(self.started, "position queried before reset");
        self.pos
    }

    pub fn steps_taken(&self) -> u32 {
        self.steps
    }

    pub fn terminated(&self) -> bool {
        self.terminated
    }

    /// Starts a fresh episode: agent at spawn, lives restored, inventory
    /// cleared, hazard phases drawn from the episode seed.
    pub fn reset(&mut self, episode_seed: u64) -> Observation {
        self.started = true;
        self.terminated = false;
        self.steps = 0;
        self.lives_left = self.spec.lives;
        self.oxygen = self.layout.oxygen_max.unwrap_or(0);
        self.pos = self.layout.spawn;
        self.key_held = false;
        self.tokens_held = 0;
        self.item_taken.iter_mut().for_each(|t| *t = None);
        self.swimmer_taken.iter_mut().for_each(|t| *t = None);
        for (open, door) in self.door_open.iter_mut().zip(&self.layout.doors) {
            *open = door.starts_open;
        }
        for (i, (phase, hz)) in
            self.hazard_phase.iter_mut().zip(&self.layout.hazards).enumerate()
        {
            *phase = (seed::combine(&[episode_seed, i as u64]) % hz.path.len() as u64) as usize;
        }
        for (i, (phase, sw)) in
            self.swimmer_phase.iter_mut().zip(&self.layout.swimmers).enumerate()
        {
            *phase = (seed::combine(&[episode_seed, 0x5357, i as u64]) % sw.path.len() as u64)
                as usize;
        }
        self.rebuild_obs();
        self.observation()
    }

    /// The observation for the current state.
    pub fn observation(&self) -> Observation {
        Observation::from_parts(
            self.spec.room_width,
            self.spec.room_height,
            OBS_CHANNELS,
            self.obs_buf.clone(),
        )
    }

    fn cell_index(&self, x: u32, y: u32) -> usize {
        (y * self.spec.room_width + x) as usize
    }

    fn is_wall(&self, room: u32, x: u32, y: u32) -> bool {
        self.layout.rooms[room as usize].walls[self.cell_index(x, y)]
    }

    fn door_at(&self, room: u32, x: u32, y: u32) -> Option<(usize, usize)> {
        for (d, door) in self.layout.doors.iter().enumerate() {
            for (c, cell) in door.cells.iter().enumerate() {
                if cell.room == room && cell.x == x && cell.y == y {
                    return Some((d, c));
                }
            }
        }
        None
    }

    fn item_at(&self, room: u32, x: u32, y: u32) -> Option<usize> {
        self.layout
            .items
            .iter()
            .position(|it| it.room == room && it.x == x && it.y == y)
    }

    /// Collectibles and treasures may respawn on a fixed schedule; every
    /// other item is one-shot.
    fn item_available(&self, i: usize) -> bool {
        match self.item_taken[i] {
            None => true,
            Some(taken_at) => {
                let respawn = match self.layout.items[i].kind {
                    ItemKind::Collectible => self.layout.collectible_respawn,
                    ItemKind::Treasure => self.layout.treasure_respawn,
                    _ => None,
                };
                respawn.is_some_and(|r| self.steps.saturating_sub(taken_at) >= r)
            }
        }
    }

    fn hazard_cell(&self, hz_idx: usize) -> (u32, u32) {
        let hz = &self.layout.hazards[hz_idx];
        hz.path[(self.steps as usize + self.hazard_phase[hz_idx]) % hz.path.len()]
    }

    fn swimmer_cell(&self, idx: usize) -> (u32, u32) {
        let sw = &self.layout.swimmers[idx];
        sw.path[(self.steps as usize + self.swimmer_phase[idx]) % sw.path.len()]
    }

    fn swimmer_available(&self, idx: usize) -> bool {
        match self.swimmer_taken[idx] {
            None => true,
            Some(taken_at) => self
                .layout
                .collectible_respawn
                .is_some_and(|r| self.steps.saturating_sub(taken_at) >= r),
        }
    }

    fn hazard_hit(&self) -> bool {
        self.layout.hazards.iter().enumerate().any(|(i, hz)| {
            hz.room == self.pos.room && self.hazard_cell(i) == (self.pos.x, self.pos.y)
        })
    }

    /// Applies one action. Raw reward is the unclipped sum of event points
    /// earned this step.
    pub fn step(&mut self, action: Action) -> Result<StepResult, EnvError> {
        if !self.started {
            return Err(EnvError::NotStarted);
        }
        if self.terminated {
            return Err(EnvError::EpisodeOver);
        }
        self.steps += 1;
        let mut raw = 0.0;
        let mut life_lost = false;
        let rt = self.spec.reward_table;

        // movement
        let (dx, dy) = action.delta();
        if (dx, dy) != (0, 0) {
            let nx = self.pos.x as i64 + dx;
            let ny = self.pos.y as i64 + dy;
            if nx >= 0
                && ny >= 0
                && nx < i64::from(self.spec.room_width)
                && ny < i64::from(self.spec.room_height)
            {
                let (nx, ny) = (nx as u32, ny as u32);
                if let Some((d, side)) = self.door_at(self.pos.room, nx, ny) {
                    if self.door_open[d] {
                        let door = &self.layout.doors[d];
                        if door.cells.len() == 2 {
                            let other = &door.cells[1 - side];
                            self.pos =
                                AgentPosition { x: other.entry.0, y: other.entry.1, room: other.room };
                        } else {
                            self.pos = AgentPosition { x: nx, y: ny, ..self.pos };
                        }
                    }
                } else if !self.is_wall(self.pos.room, nx, ny) {
                    self.pos = AgentPosition { x: nx, y: ny, ..self.pos };
                }
            }
        }

        // items that collect on touch
        if let Some(i) = self.item_at(self.pos.room, self.pos.x, self.pos.y) {
            if self.item_available(i) {
                match self.layout.items[i].kind {
                    ItemKind::Treasure => {
                        self.item_taken[i] = Some(self.steps);
                        raw += rt.treasure;
                        if self.layout.treasure_ends_episode {
                            self.terminated = true;
                        }
                    }
                    ItemKind::Collectible => {
                        self.item_taken[i] = Some(self.steps);
                        raw += rt.collectible;
                    }
                    _ => {}
                }
            }
        }

        // lane swimmers collect on contact and respawn on their schedule
        for i in 0..self.layout.swimmers.len() {
            if self.layout.swimmers[i].room == self.pos.room
                && self.swimmer_cell(i) == (self.pos.x, self.pos.y)
                && self.swimmer_available(i)
            {
                self.swimmer_taken[i] = Some(self.steps);
                raw += rt.collectible;
            }
        }

        // items and doors that need an explicit interaction; one use acts on
        // the agent's own cell first, then its neighborhood in a fixed order
        // so traces stay reproducible
        if action == Action::Interact {
            let mut consumed = false;
            let reach = [(0i64, 0i64), (0, -1), (0, 1), (-1, 0), (1, 0)];
            for (ddx, ddy) in reach {
                let nx = self.pos.x as i64 + ddx;
                let ny = self.pos.y as i64 + ddy;
                if nx < 0
                    || ny < 0
                    || nx >= i64::from(self.spec.room_width)
                    || ny >= i64::from(self.spec.room_height)
                {
                    continue;
                }
                if let Some(i) = self.item_at(self.pos.room, nx as u32, ny as u32) {
                    if self.item_available(i) {
                        match self.layout.items[i].kind {
                            ItemKind::Key => {
                                self.item_taken[i] = Some(self.steps);
                                self.key_held = true;
                                raw += rt.key;
                                consumed = true;
                            }
                            ItemKind::ArmToken => {
                                self.item_taken[i] = Some(self.steps);
                                self.tokens_held += 1;
                                raw += rt.arm_token;
                                consumed = true;
                            }
                            ItemKind::Vault => {
                                if self.tokens_held >= self.layout.token_goal {
                                    self.item_taken[i] = Some(self.steps);
                                    raw += rt.vault;
                                    self.terminated = true;
                                    consumed = true;
                                }
                            }
                            _ => {}
                        }
                    }
                }
                if consumed {
                    break;
                }
            }
            if !consumed {
                for (ddx, ddy) in &reach[1..] {
                    let nx = self.pos.x as i64 + ddx;
                    let ny = self.pos.y as i64 + ddy;
                    if nx < 0
                        || ny < 0
                        || nx >= i64::from(self.spec.room_width)
                        || ny >= i64::from(self.spec.room_height)
                    {
                        continue;
                    }
                    if let Some((d, _)) = self.door_at(self.pos.room, nx as u32, ny as u32) {
                        if !self.door_open[d] {
                            let locked = self.layout.doors[d].locked;
                            if !locked || self.key_held {
                                self.door_open[d] = true;
                                raw += rt.door;
                                break;
                            }
                        }
                    }
                }
            }
        }

        // hazards, then oxygen; at most one life is consumed per step
        if !self.terminated {
            if self.hazard_hit() {
                life_lost = true;
            } else if let Some(max_ox) = self.layout.oxygen_max {
                if Some(self.pos.y) == self.layout.surface_row {
                    self.oxygen = max_ox;
                } else {
                    self.oxygen -= 1;
                    if self.oxygen == 0 {
                        life_lost = true;
                    }
                }
            }
            if life_lost {
                self.lives_left -= 1;
                if self.lives_left == 0 {
                    self.terminated = true;
                } else {
                    self.pos = self.layout.spawn;
                    self.oxygen = self.layout.oxygen_max.unwrap_or(0);
                }
            }
        }

        if self.steps >= self.spec.max_episode_steps {
            self.terminated = true;
        }

        self.rebuild_obs();
        Ok(StepResult {
            obs: self.observation(),
            raw_reward: raw,
            terminated: self.terminated,
            life_lost,
            position: self.pos,
        })
    }

    fn status_fraction(&self) -> f64 {
        if let Some(max_ox) = self.layout.oxygen_max {
            return f64::from(self.oxygen) / f64::from(max_ox);
        }
        if self.layout.token_goal > 0 {
            return f64::from(self.tokens_held) / f64::from(self.layout.token_goal);
        }
        if self.key_held {
            1.0
        } else {
            0.0
        }
    }

    fn rebuild_obs(&mut self) {
        let w = self.spec.room_width as usize;
        let h = self.spec.room_height as usize;
        let plane = w * h;
        let room = self.pos.room;

        self.obs_buf[..plane].copy_from_slice(&self.wall_templates[room as usize]);
        self.obs_buf[plane..].iter_mut().for_each(|v| *v = 0.0);

        for (i, hz) in self.layout.hazards.iter().enumerate() {
            if hz.room == room {
                let (x, y) = self.hazard_cell(i);
                self.obs_buf[channel::HAZARDS * plane + y as usize * w + x as usize] = 1.0;
            }
        }
        for (i, item) in self.layout.items.iter().enumerate() {
            if item.room == room && self.item_available(i) {
                self.obs_buf[channel::ITEMS * plane + item.y as usize * w + item.x as usize] =
                    item.kind.obs_value();
            }
        }
        for i in 0..self.layout.swimmers.len() {
            if self.layout.swimmers[i].room == room && self.swimmer_available(i) {
                let (x, y) = self.swimmer_cell(i);
                self.obs_buf[channel::ITEMS * plane + y as usize * w + x as usize] =
                    ItemKind::Collectible.obs_value();
            }
        }
        for (d, door) in self.layout.doors.iter().enumerate() {
            for cell in &door.cells {
                if cell.room == room {
                    let v = if self.door_open[d] { 0.4 } else { 1.0 };
                    self.obs_buf[channel::DOORS * plane + cell.y as usize * w + cell.x as usize] = v;
                }
            }
        }
        self.obs_buf[channel::AGENT * plane + self.pos.y as usize * w + self.pos.x as usize] = 1.0;

        let fill = (self.status_fraction() * w as f64).round() as usize;
        for x in 0..fill.min(w) {
            self.obs_buf[channel::STATUS * plane + x] = 1.0;
        }
        // remaining-episode clock on the bottom row; episodes are
        // step-capped, so the value head needs a time signal to stay Markov
        let left = 1.0 - f64::from(self.steps) / f64::from(self.spec.max_episode_steps);
        let fill = (left.max(0.0) * w as f64).round() as usize;
        for x in 0..fill.min(w) {
            self.obs_buf[channel::STATUS * plane + (h - 1) * w + x] = 1.0;
        }
    }

    /// Human-readable map of the current room plus a one-line status.
    pub fn render_ascii(&self) -> String {
        let w = self.spec.room_width as usize;
        let h = self.spec.room_height as usize;
        let room = self.pos.room;
        let mut grid = vec![vec!['.'; w]; h];
        for y in 0..h {
            for x in 0..w {
                if self.layout.rooms[room as usize].walls[y * w + x] {
                    grid[y][x] = '#';
                }
            }
        }
        for (d, door) in self.layout.doors.iter().enumerate() {
            for cell in &door.cells {
                if cell.room == room {
                    grid[cell.y as usize][cell.x as usize] =
                        if self.door_open[d] { 'd' } else { 'D' };
                }
            }
        }
        for (i, item) in self.layout.items.iter().enumerate() {
            if item.room == room && self.item_available(i) {
                grid[item.y as usize][item.x as usize] = match item.kind {
                    ItemKind::Key => 'k',
                    ItemKind::ArmToken => 't',
                    ItemKind::Vault => 'v',
                    ItemKind::Treasure => '*',
                    ItemKind::Collectible => 'o',
                };
            }
        }
        for i in 0..self.layout.swimmers.len() {
            if self.layout.swimmers[i].room == room && self.swimmer_available(i) {
                let (x, y) = self.swimmer_cell(i);
                grid[y as usize][x as usize] = 'o';
            }
        }
        for (i, hz) in self.layout.hazards.iter().enumerate() {
            if hz.room == room {
                let (x, y) = self.hazard_cell(i);
                grid[y as usize][x as usize] = 'x';
            }
        }
        grid[self.pos.y as usize][self.pos.x as usize] = '@';

        let mut out = String::with_capacity((w + 1) * h + 64);
        for row in grid {
            out.extend(row);
            out.push('\n');
        }
        out.push_str(&format!(
            "room={} lives={} steps={} key={} tokens={} oxygen={}\n",
            room,
            self.lives_left,
            self.steps,
            self.key_held,
            self.tokens_held,
            self.layout.oxygen_max.map_or_else(|| "-".into(), |_| self.oxygen.to_string()),
        ));
        out
    }
}
