//! Layout construction for the four worlds. Structural geometry is a fixed
//! function of the spec dimensions; the layout seed picks which hazard patrol
//! slots are populated.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{AgentPosition, Door, DoorCell, EnvKind, EnvSpec, Hazard, Item, ItemKind, Layout, Room};
use crate::seed;

pub(crate) fn build(spec: &EnvSpec, layout_seed: u64) -> Layout {
    match spec.kind {
        EnvKind::MultiRoomWorld => build_multi_room(spec, layout_seed),
        EnvKind::HallwayKeyDoor => build_hallway(spec, layout_seed),
        EnvKind::CrossMaze => build_cross_maze(spec),
        EnvKind::DenseCollect => build_dense_collect(spec, layout_seed),
    }
}

struct RoomGrid {
    w: u32,
    walls: Vec<bool>,
}

impl RoomGrid {
    fn solid(w: u32, h: u32) -> RoomGrid {
        RoomGrid { w, walls: vec![true; (w * h) as usize] }
    }

    fn bordered(w: u32, h: u32) -> RoomGrid {
        let mut g = RoomGrid::solid(w, h);
        for y in 1..h - 1 {
            for x in 1..w - 1 {
                g.set(x, y, false);
            }
        }
        g
    }

    fn set(&mut self, x: u32, y: u32, wall: bool) {
        self.walls[(y * self.w + x) as usize] = wall;
    }

    fn into_room(self) -> Room {
        Room { walls: self.walls }
    }
}

/// Cyclic left-right patrol along row `y`, covering `lo..=hi`.
fn bounce_row(y: u32, lo: u32, hi: u32) -> Vec<(u32, u32)> {
    let mut path: Vec<(u32, u32)> = (lo..=hi).map(|x| (x, y)).collect();
    path.extend((lo + 1..hi).rev().map(|x| (x, y)));
    path
}

/// Picks `count` of the candidate hazard routes with the layout seed.
fn pick_hazards(candidates: Vec<Hazard>, density: f64, layout_seed: u64) -> Vec<Hazard> {
    let n = (density * candidates.len() as f64).round() as usize;
    let n = n.min(candidates.len());
    let mut order: Vec<usize> = (0..candidates.len()).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed::combine(&[layout_seed, 0x4841_5a52]));
    order.shuffle(&mut rng);
    let mut chosen: Vec<usize> = order.into_iter().take(n).collect();
    chosen.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut candidates = candidates;
    for idx in chosen.into_iter().rev() {
        out.push(candidates.swap_remove(idx));
    }
    out.reverse();
    out
}

/// Row sizes of the room pyramid: 1 on top, growing by one per row, the last
/// row possibly partial.
pub(crate) fn pyramid_rows(room_count: u32) -> Vec<u32> {
    let mut rows = Vec::new();
    let mut remaining = room_count;
    let mut size = 1;
    while remaining > 0 {
        let take = size.min(remaining);
        rows.push(take);
        remaining -= take;
        size += 1;
    }
    rows
}

fn build_multi_room(spec: &EnvSpec, layout_seed: u64) -> Layout {
    let (w, h) = (spec.room_width, spec.room_height);
    let rows = pyramid_rows(spec.room_count);

    // room ids, row-major over the pyramid
    let mut ids: Vec<Vec<u32>> = Vec::new();
    let mut next = 0;
    for &size in &rows {
        ids.push((0..size).map(|i| next + i).collect());
        next += size;
    }

    let mut adjacency = Vec::new();
    let mut doors = Vec::new();
    for (r, row) in ids.iter().enumerate() {
        if r + 1 >= ids.len() {
            break;
        }
        for (i, &parent) in row.iter().enumerate() {
            for (j, child) in [(i, ids[r + 1].get(i)), (i + 1, ids[r + 1].get(i + 1))]
                .into_iter()
                .filter_map(|(j, c)| c.map(|&c| (j, c)))
            {
                adjacency.push((parent, child));
                let (px, cx) = if j == i { (w / 3, 2 * w / 3) } else { (2 * w / 3, w / 3) };
                let locked = parent == 0;
                doors.push(Door {
                    cells: vec![
                        DoorCell { room: parent, x: px, y: h - 1, entry: (px, h - 2) },
                        DoorCell { room: child, x: cx, y: 0, entry: (cx, 1) },
                    ],
                    locked,
                    starts_open: !locked,
                });
            }
        }
    }

    let mut rooms = Vec::with_capacity(spec.room_count as usize);
    for id in 0..spec.room_count {
        let mut g = RoomGrid::bordered(w, h);
        if id == 0 && w >= 12 && h >= 12 {
            // two ledges with offset gaps make the key a winding detour
            let (y_a, y_b) = (h / 3, 2 * h / 3);
            for x in 3..=w - 4 {
                if x != w - 6 {
                    g.set(x, y_a, true);
                }
                if x != 4 {
                    g.set(x, y_b, true);
                }
            }
        }
        rooms.push(g.into_room());
    }

    let mut items = vec![Item { room: 0, x: 2, y: h - 4, kind: ItemKind::Key }];
    let last_row = &ids[ids.len() - 1];
    let first = last_row[0];
    let last = last_row[last_row.len() - 1];
    items.push(Item { room: last, x: w - 4, y: h - 4, kind: ItemKind::Treasure });
    if first != last {
        items.push(Item { room: first, x: 3, y: h - 4, kind: ItemKind::Treasure });
    }

    let mut candidates = Vec::new();
    for room in [1u32, 2, 4] {
        if room < spec.room_count {
            for y in [h / 3, 2 * h / 3] {
                candidates.push(Hazard { room, path: bounce_row(y, 2, w - 3) });
            }
        }
    }
    let hazards = pick_hazards(candidates, spec.hazard_density, layout_seed);

    Layout {
        rooms,
        spawn: AgentPosition { x: w / 2, y: 2, room: 0 },
        items,
        doors,
        hazards,
        adjacency,
        oxygen_max: None,
        surface_row: None,
        treasure_ends_episode: false,
        token_goal: 0,
        collectible_respawn: None,
        treasure_respawn: None,
        swimmers: Vec::new(),
    }
}

fn build_hallway(spec: &EnvSpec, layout_seed: u64) -> Layout {
    let (w, h) = (spec.room_width, spec.room_height);
    let mid = h / 2;
    let key_x = w - 6;
    let door_x = w - 4;

    // one long open hall; the door pillar is the only way into the east end
    let mut g = RoomGrid::bordered(w, h);
    for y in 1..h - 1 {
        if y != mid {
            g.set(door_x, y, true);
        }
    }

    // key up in the far corner by the pillar, treasure behind the door:
    // both rewards sit a full hallway away from spawn
    let items = vec![
        Item { room: 0, x: key_x, y: 1, kind: ItemKind::Key },
        Item { room: 0, x: w - 2, y: mid, kind: ItemKind::Treasure },
    ];
    let doors = vec![Door {
        cells: vec![DoorCell { room: 0, x: door_x, y: mid, entry: (door_x - 1, mid) }],
        locked: true,
        starts_open: false,
    }];

    // patrols bounce across the two rows south of the spawn row; the
    // northern band stays safe, so a learned transit exists
    let mut candidates = Vec::new();
    let mut x = w / 4;
    while x + 4 <= key_x {
        candidates.push(Hazard { room: 0, path: vec![(x, mid + 1), (x, mid + 2)] });
        x += 4;
    }
    let hazards = pick_hazards(candidates, spec.hazard_density, layout_seed);

    Layout {
        rooms: vec![g.into_room()],
        spawn: AgentPosition { x: 3, y: mid, room: 0 },
        items,
        doors,
        hazards,
        adjacency: Vec::new(),
        oxygen_max: None,
        surface_row: None,
        treasure_ends_episode: true,
        token_goal: 0,
        collectible_respawn: None,
        treasure_respawn: None,
        swimmers: Vec::new(),
    }
}

fn build_cross_maze(spec: &EnvSpec) -> Layout {
    let (w, h) = (spec.room_width, spec.room_height);
    let (cx, cy) = (w / 2, h / 2);

    let mut g = RoomGrid::solid(w, h);
    for x in 1..=w - 2 {
        for y in cy - 1..=cy + 1 {
            g.set(x, y, false);
        }
    }
    for y in 1..=h - 2 {
        for x in cx - 1..=cx + 1 {
            g.set(x, y, false);
        }
    }

    let items = vec![
        Item { room: 0, x: cx, y: 1, kind: ItemKind::ArmToken },
        Item { room: 0, x: cx, y: h - 2, kind: ItemKind::ArmToken },
        Item { room: 0, x: 1, y: cy, kind: ItemKind::ArmToken },
        Item { room: 0, x: w - 2, y: cy, kind: ItemKind::ArmToken },
        Item { room: 0, x: cx, y: cy, kind: ItemKind::Vault },
    ];

    Layout {
        rooms: vec![g.into_room()],
        spawn: AgentPosition { x: cx, y: cy, room: 0 },
        items,
        doors: Vec::new(),
        hazards: Vec::new(),
        adjacency: Vec::new(),
        oxygen_max: None,
        surface_row: None,
        treasure_ends_episode: false,
        token_goal: 4,
        collectible_respawn: None,
        treasure_respawn: None,
        swimmers: Vec::new(),
    }
}

pub(crate) const DENSE_OXYGEN_STEPS: u32 = 120;

pub(crate) const DENSE_SWIMMER_RESPAWN: u32 = 25;
pub(crate) const DENSE_TREASURE_RESPAWN: u32 = 60;

fn build_dense_collect(spec: &EnvSpec, layout_seed: u64) -> Layout {
    let (w, h) = (spec.room_width, spec.room_height);
    let mut g = RoomGrid::bordered(w, h);

    // a reef covers the eastern three quarters of the water; the way into
    // the rich bottom zone is the open column by the west wall
    let reef_y = h - 6;
    for x in w / 4..w - 1 {
        g.set(x, reef_y, true);
    }

    // one meager swimmer above the reef, a school of them below it
    let mut swimmers = Vec::new();
    for (lane, y, count) in [(0usize, h / 4, 1usize), (1, h - 3, 8)] {
        let path = bounce_row(y, 2, w - 3);
        let spacing = path.len() / count;
        for k in 0..count {
            let mut rotated = path.clone();
            rotated.rotate_left((k * spacing + lane * 5) % path.len());
            swimmers.push(Hazard { room: 0, path: rotated });
        }
    }

    // predators patrol the open water between the shallow lane and the reef
    let candidates: Vec<Hazard> = [reef_y - 4, reef_y - 2]
        .into_iter()
        .map(|y| Hazard { room: 0, path: bounce_row(y, 2, w - 3) })
        .collect();
    let hazards = pick_hazards(candidates, spec.hazard_density, layout_seed);

    Layout {
        rooms: vec![g.into_room()],
        spawn: AgentPosition { x: w / 2, y: 2, room: 0 },
        items: Vec::new(),
        doors: Vec::new(),
        hazards,
        adjacency: Vec::new(),
        oxygen_max: Some(DENSE_OXYGEN_STEPS),
        surface_row: Some(1),
        treasure_ends_episode: false,
        token_goal: 0,
        collectible_respawn: Some(DENSE_SWIMMER_RESPAWN),
        treasure_respawn: None,
        swimmers,
    }
}
