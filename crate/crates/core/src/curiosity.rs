//! Intra-life novelty machinery: per-room visited-tile grids, the binary
//! exploration bonus, reset policies, reward mixing, and the compass plane
//! fed back to the network as an extra observation channel.

use serde::Serialize;

use crate::env::AgentPosition;

/// When the curiosity grid is wiped. `PerEpisode` is the default: everything
/// becomes interesting again at the start of each new episode. `PerLife`
/// additionally wipes on every life loss; `Never` simulates a count-style
/// across-training scheme where novelty is never refreshed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ResetPolicy {
    PerEpisode,
    PerLife,
    Never,
}

/// Episode boundary events the reset policy reacts to.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GridEvent {
    LifeLost,
    EpisodeEnded,
}

/// How raw environment reward and the intrinsic bonus combine into the reward
/// the learner trains on.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(rename_all = "snake_case", tag = "mode")]
pub enum RewardMixer {
    /// `beta * clip(raw) + (1 - beta) * intrinsic`
    Weighted { beta: f64 },
    /// The untuned equal-weight variant: `clip(clip(raw) + intrinsic)`.
    /// Raw reward is clipped before the sum so a huge game reward cannot
    /// drown the bonus; the outer clip only binds when both saturate.
    UntunedClip,
}

impl RewardMixer {
    pub fn validate(&self) -> Result<(), String> {
        if let RewardMixer::Weighted { beta } = self {
            if !(0.0..=1.0).contains(beta) || !beta.is_finite() {
                return Err(format!("beta must lie in [0, 1], got {beta}"));
            }
        }
        Ok(())
    }
}

/// Game reward clipped to [-1, 1].
pub fn clip_reward(raw: f64) -> f64 {
    raw.clamp(-1.0, 1.0)
}

/// Mixes one transition's rewards. `intrinsic` is 0/1 for the binary bonus;
/// the count-bonus baseline feeds its decaying value through the same path.
pub fn mix(raw_reward: f64, intrinsic: f64, mixer: RewardMixer) -> f64 {
    match mixer {
        RewardMixer::Weighted { beta } => beta * clip_reward(raw_reward) + (1.0 - beta) * intrinsic,
        RewardMixer::UntunedClip => clip_reward(clip_reward(raw_reward) + intrinsic),
    }
}

/// Tile coordinates of a position under tile size `tau`.
pub fn tile_of(pos: AgentPosition, tile_size: u32) -> (u32, u32, u32) {
    debug_assert!(tile_size >= 1);
    (pos.room, pos.x / tile_size, pos.y / tile_size)
}

/// Outcome of touching a tile: whether it was unvisited since the last reset,
/// and its all-time visit count after this touch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Touch {
    pub first_since_reset: bool,
    pub count: u32,
}

/// Per-room visited-tile bitsets plus persistent visit counts.
///
/// The bitsets carry the intra-life signal and are cleared by
/// [`CuriosityGrid::reset`]; the counts survive every reset and back both the
/// count-bonus baseline and the run-level coverage metrics.
#[derive(Debug, Clone)]
pub struct CuriosityGrid {
    tile_size: u32,
    room_width: u32,
    room_height: u32,
    tiles_x: u32,
    tiles_y: u32,
    visited: Vec<Vec<u64>>,
    counts: Vec<Vec<u32>>,
    rooms_touched: Vec<bool>,
}

impl CuriosityGrid {
    pub fn new(room_count: u32, room_width: u32, room_height: u32, tile_size: u32) -> CuriosityGrid {
        assert!(tile_size >= 1, "tile size must be at least 1");
        let tiles_x = room_width.div_ceil(tile_size);
        let tiles_y = room_height.div_ceil(tile_size);
        let per_room = (tiles_x * tiles_y) as usize;
        let words = per_room.div_ceil(64);
        CuriosityGrid {
            tile_size,
            room_width,
            room_height,
            tiles_x,
            tiles_y,
            visited: vec![vec![0; words]; room_count as usize],
            counts: vec![vec![0; per_room]; room_count as usize],
            rooms_touched: vec![false; room_count as usize],
        }
    }

    pub fn tile_size(&self) -> u32 {
        self.tile_size
    }

    pub fn room_count(&self) -> u32 {
        self.visited.len() as u32
    }

    pub fn tiles_per_room(&self) -> u32 {
        self.tiles_x * self.tiles_y
    }

    pub fn total_tiles(&self) -> u64 {
        u64::from(self.tiles_per_room()) * self.visited.len() as u64
    }

    fn tile_index(&self, pos: AgentPosition) -> (usize, usize) {
        let (room, tx, ty) = tile_of(pos, self.tile_size);
        debug_assert!(room < self.room_count() && tx < self.tiles_x && ty < self.tiles_y);
        (room as usize, (ty * self.tiles_x + tx) as usize)
    }

    /// Marks the tile under `pos`: sets its visited bit, bumps its persistent
    /// count, and notes the room as touched since the last reset.
    pub fn touch(&mut self, pos: AgentPosition) -> Touch {
        let (room, tile) = self.tile_index(pos);
        let (word, bit) = (tile / 64, tile % 64);
        let first = self.visited[room][word] & (1 << bit) == 0;
        self.visited[room][word] |= 1 << bit;
        self.counts[room][tile] = self.counts[room][tile].saturating_add(1);
        self.rooms_touched[room] = true;
        Touch { first_since_reset: first, count: self.counts[room][tile] }
    }

    /// Binary intrinsic reward: 1.0 exactly when the tile was unvisited since
    /// the last reset.
    pub fn visit(&mut self, pos: AgentPosition) -> f64 {
        if self.touch(pos).first_since_reset {
            1.0
        } else {
            0.0
        }
    }

    /// Across-training count bonus `1/sqrt(N)` where `N` is the tile's
    /// all-time visit count after this touch. Survives every reset.
    pub fn visit_count_bonus(&mut self, pos: AgentPosition) -> f64 {
        let t = self.touch(pos);
        1.0 / f64::from(t.count).sqrt()
    }

    /// Clears every visited bit and the touched-room set; persistent counts
    /// are untouched.
    pub fn reset(&mut self) {
        for room in &mut self.visited {
            room.iter_mut().for_each(|w| *w = 0);
        }
        self.rooms_touched.iter_mut().for_each(|r| *r = false);
    }

    /// Applies the reset policy for an episode-boundary event.
    pub fn maybe_reset(&mut self, policy: ResetPolicy, event: GridEvent) {
        let reset = match policy {
            ResetPolicy::PerEpisode => event == GridEvent::EpisodeEnded,
            ResetPolicy::PerLife => true,
            ResetPolicy::Never => false,
        };
        if reset {
            self.reset();
        }
    }

    pub fn is_visited(&self, room: u32, tile_x: u32, tile_y: u32) -> bool {
        let tile = (tile_y * self.tiles_x + tile_x) as usize;
        self.visited[room as usize][tile / 64] & (1 << (tile % 64)) != 0
    }

    pub fn visit_count(&self, room: u32, tile_x: u32, tile_y: u32) -> u32 {
        self.counts[room as usize][(tile_y * self.tiles_x + tile_x) as usize]
    }

    /// `(fraction of all tiles visited since last reset, rooms touched)`.
    pub fn coverage(&self) -> (f64, u32) {
        let visited: u64 = self
            .visited
            .iter()
            .map(|room| room.iter().map(|w| u64::from(w.count_ones())).sum::<u64>())
            .sum();
        let rooms = self.rooms_touched.iter().filter(|&&r| r).count() as u32;
        (visited as f64 / self.total_tiles() as f64, rooms)
    }

    /// Visited/unvisited map of `room` upsampled to `obs_width x obs_height`
    /// by nearest neighbor; 1.0 marks visited tiles.
    pub fn render_compass(&self, room: u32, obs_width: u32, obs_height: u32) -> Vec<f64> {
        let mut plane = vec![0.0; (obs_width * obs_height) as usize];
        for y in 0..obs_height {
            let cell_y = y * self.room_height / obs_height;
            let ty = cell_y / self.tile_size;
            for x in 0..obs_width {
                let cell_x = x * self.room_width / obs_width;
                let tx = cell_x / self.tile_size;
                if self.is_visited(room, tx, ty) {
                    plane[(y * obs_width + x) as usize] = 1.0;
                }
            }
        }
        plane
    }

    /// Paints the compass plane for an observation whose dimensions equal the
    /// room dimensions; writes every cell. Same output as
    /// [`CuriosityGrid::render_compass`] at native size, but walks tile
    /// blocks instead of dividing per cell.
    pub fn compass_into(&self, room: u32, plane: &mut [f64]) {
        debug_assert_eq!(plane.len(), (self.room_width * self.room_height) as usize);
        let w = self.room_width as usize;
        for ty in 0..self.tiles_y {
            let y0 = (ty * self.tile_size) as usize;
            let y1 = ((ty + 1) * self.tile_size).min(self.room_height) as usize;
            for tx in 0..self.tiles_x {
                let v = if self.is_visited(room, tx, ty) { 1.0 } else { 0.0 };
                let x0 = (tx * self.tile_size) as usize;
                let x1 = ((tx + 1) * self.tile_size).min(self.room_width) as usize;
                for y in y0..y1 {
                    plane[y * w + x0..y * w + x1].iter_mut().for_each(|p| *p = v);
                }
            }
        }
    }

    /// Since-reset visited bitset of one room, for snapshot serialization.
    pub fn visited_words(&self, room: u32) -> &[u64] {
        &self.visited[room as usize]
    }

    /// All-time visited bitset of one room (tiles with count >= 1).
    pub fn ever_words(&self, room: u32) -> Vec<u64> {
        let per_room = self.tiles_per_room() as usize;
        let mut words = vec![0u64; per_room.div_ceil(64)];
        for (tile, &c) in self.counts[room as usize].iter().enumerate() {
            if c > 0 {
                words[tile / 64] |= 1 << (tile % 64);
            }
        }
        words
    }
}

/// Hex string of a tile bitset, low tile indices first. Two hex digits per
/// byte, byte k covering tiles 8k..8k+7.
pub fn words_to_hex(words: &[u64], tile_count: u32) -> String {
    let bytes = (tile_count as usize).div_ceil(8);
    let mut out = String::with_capacity(bytes * 2);
    for i in 0..bytes {
        let byte = (words[i / 8] >> ((i % 8) * 8)) as u8;
        out.push_str(&format!("{byte:02x}"));
    }
    out
}
