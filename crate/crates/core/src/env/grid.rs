use alloc::collections::VecDeque;
use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use super::mdp::{Next, TabularMdp};
use crate::{Error, Result};

/// Action order shared by every grid world.
pub const ACTION_NAMES: [&str; 4] = ["up", "right", "down", "left"];

const MOVES: [(isize, isize); 4] = [(-1, 0), (0, 1), (1, 0), (0, -1)];

/// Per-step continuation probability of the grid worlds.
pub const DEFAULT_CONTINUATION: f64 = 0.99;

/// Reached states required of the canonical LavaWorld map.
pub const LAVAWORLD_STATES: usize = 96;

/// The canonical LavaWorld map.
pub const LAVAWORLD_MAP: &str = include_str!("../../assets/lavaworld.txt");

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Lava,
    Floor,
    Start,
    Goal,
}

/// A rectangular ASCII grid: `#` lava, `.` floor, `S` start, `G` goal.
///
/// States are the non-lava cells reachable from the start, numbered in
/// row-major order. Moving into lava or off the grid is a lava transition.
#[derive(Debug, Clone, PartialEq)]
pub struct GridMap {
    width: usize,
    height: usize,
    cells: Vec<Cell>,
    state_of: Vec<Option<usize>>,
    position: Vec<(usize, usize)>,
    start: usize,
    goal: usize,
}

impl GridMap {
    pub fn parse(text: &str) -> Result<Self> {
        let rows: Vec<&str> = text
            .lines()
            .map(|l| l.trim_end_matches('\r'))
            .filter(|l| !l.trim().is_empty())
            .collect();
        if rows.is_empty() {
            return Err(Error::InvalidMap("map is empty".into()));
        }
        let width = rows[0].chars().count();
        let height = rows.len();
        let mut cells = Vec::with_capacity(width * height);
        let mut start = None;
        let mut goal = None;
        for (r, row) in rows.iter().enumerate() {
            if row.chars().count() != width {
                return Err(Error::InvalidMap(format!(
                    "row {} has width {}, expected {width}",
                    r + 1,
                    row.chars().count()
                )));
            }
            for (c, ch) in row.chars().enumerate() {
                let cell = match ch {
                    '#' => Cell::Lava,
                    '.' => Cell::Floor,
                    'S' => Cell::Start,
                    'G' => Cell::Goal,
                    other => {
                        return Err(Error::InvalidMap(format!(
                            "unknown cell `{other}` at row {}, column {}",
                            r + 1,
                            c + 1
                        )))
                    }
                };
                let slot = match cell {
                    Cell::Start => Some(&mut start),
                    Cell::Goal => Some(&mut goal),
                    _ => None,
                };
                if let Some(slot) = slot {
                    if slot.is_some() {
                        return Err(Error::InvalidMap(format!("more than one `{ch}` cell")));
                    }
                    *slot = Some(r * width + c);
                }
                cells.push(cell);
            }
        }
        let start_cell = start.ok_or_else(|| Error::InvalidMap("no start cell `S`".into()))?;
        let goal_cell = goal.ok_or_else(|| Error::InvalidMap("no goal cell `G`".into()))?;

        let mut reached = vec![false; cells.len()];
        let mut queue = VecDeque::from([start_cell]);
        reached[start_cell] = true;
        while let Some(i) = queue.pop_front() {
            for mv in MOVES {
                if let Some(j) = neighbour(width, height, i, mv) {
                    if cells[j] != Cell::Lava && !reached[j] {
                        reached[j] = true;
                        queue.push_back(j);
                    }
                }
            }
        }
        if !reached[goal_cell] {
            return Err(Error::InvalidMap("goal is not reachable from start".into()));
        }
        let mut state_of = vec![None; cells.len()];
        let mut position = Vec::new();
        for i in 0..cells.len() {
            if reached[i] {
                state_of[i] = Some(position.len());
                position.push((i / width, i % width));
            }
        }
        Ok(Self {
            width,
            height,
            start: state_of[start_cell].expect("start reached"),
            goal: state_of[goal_cell].expect("goal reached"),
            cells,
            state_of,
            position,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_states(&self) -> usize {
        self.position.len()
    }

    pub fn start(&self) -> usize {
        self.start
    }

    pub fn goal(&self) -> usize {
        self.goal
    }

    pub fn cell(&self, row: usize, col: usize) -> Cell {
        self.cells[row * self.width + col]
    }

    /// `(row, column)` of a state.
    pub fn position(&self, state: usize) -> (usize, usize) {
        self.position[state]
    }

    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.height || col >= self.width {
            return None;
        }
        self.state_of[row * self.width + col]
    }

    /// Deterministic MDP over the reached cells; entering the goal pays 1.
    pub fn to_mdp(&self, continuation: f64) -> Result<TabularMdp> {
        let n = self.num_states();
        let mut next = Vec::with_capacity(n * 4);
        let mut reward = Vec::with_capacity(n * 4);
        for &(r, c) in &self.position {
            let i = r * self.width + c;
            for mv in MOVES {
                match neighbour(self.width, self.height, i, mv).and_then(|j| self.state_of[j]) {
                    Some(s) => {
                        next.push(Next::State(s));
                        reward.push(if s == self.goal { 1.0 } else { 0.0 });
                    }
                    None => {
                        next.push(Next::Lava);
                        reward.push(0.0);
                    }
                }
            }
        }
        TabularMdp::new(n, 4, next, reward, self.start, self.goal, continuation)
    }

    /// Map text with every reached state marked by `mark(state)`.
    pub fn render(&self, mut mark: impl FnMut(usize) -> Option<char>) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for r in 0..self.height {
            for c in 0..self.width {
                let i = r * self.width + c;
                let ch = match (self.state_of[i].and_then(&mut mark), self.cells[i]) {
                    (Some(ch), _) => ch,
                    (None, Cell::Lava) => '#',
                    (None, Cell::Floor) => '.',
                    (None, Cell::Start) => 'S',
                    (None, Cell::Goal) => 'G',
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

fn neighbour(width: usize, height: usize, i: usize, (dr, dc): (isize, isize)) -> Option<usize> {
    let r = (i / width) as isize + dr;
    let c = (i % width) as isize + dc;
    if r < 0 || c < 0 || r >= height as isize || c >= width as isize {
        return None;
    }
    Some(r as usize * width + c as usize)
}

/// The LavaWorld grid and its MDP.
#[derive(Debug, Clone, PartialEq)]
pub struct LavaWorld {
    pub map: GridMap,
    pub mdp: TabularMdp,
}

/// The canonical four-room LavaWorld: 96 states, 4 actions, γ = 0.99.
pub fn build_lavaworld() -> LavaWorld {
    let map = GridMap::parse(LAVAWORLD_MAP).expect("bundled map parses");
    assert_eq!(
        map.num_states(),
        LAVAWORLD_STATES,
        "bundled LavaWorld map must have {LAVAWORLD_STATES} states"
    );
    let mdp = map.to_mdp(DEFAULT_CONTINUATION).expect("bundled map is valid");
    LavaWorld { map, mdp }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lavaworld_shape() {
        let lw = build_lavaworld();
        assert_eq!(lw.mdp.num_states(), 96);
        assert_eq!(lw.mdp.num_actions(), 4);
        assert_eq!(lw.map.position(lw.mdp.start()), (1, 1));
        // top-left corner of the top-right room
        assert_eq!(lw.map.position(lw.mdp.goal()), (1, 8));
        for a in 0..4 {
            assert_eq!(lw.mdp.next(lw.mdp.goal(), a), Next::State(lw.mdp.goal()));
        }
    }

    #[test]
    fn lavaworld_is_deterministic() {
        assert_eq!(build_lavaworld(), build_lavaworld());
        let lw = build_lavaworld();
        assert_eq!(lw.map.render(|_| None), LAVAWORLD_MAP);
    }

    #[test]
    fn moves_follow_action_order() {
        let map = GridMap::parse("#####\n#...#\n#S.G#\n#####\n").unwrap();
        let mdp = map.to_mdp(1.0).unwrap();
        let s = map.start();
        assert_eq!(mdp.next(s, 0), Next::State(map.state_at(1, 1).unwrap()));
        assert_eq!(mdp.next(s, 1), Next::State(map.state_at(2, 2).unwrap()));
        assert_eq!(mdp.next(s, 2), Next::Lava);
        assert_eq!(mdp.next(s, 3), Next::Lava);
        let before_goal = map.state_at(2, 2).unwrap();
        assert_eq!(mdp.reward(before_goal, 1), 1.0);
    }

    #[test]
    fn grid_edge_counts_as_lava() {
        let map = GridMap::parse("S.G\n").unwrap();
        let mdp = map.to_mdp(0.9).unwrap();
        assert_eq!(mdp.next(map.start(), 0), Next::Lava);
        assert_eq!(mdp.next(map.start(), 3), Next::Lava);
    }

    #[test]
    fn unreachable_cells_are_dropped() {
        let map = GridMap::parse("S.G#..\n").unwrap();
        assert_eq!(map.num_states(), 3);
        assert_eq!(map.state_at(0, 4), None);
    }

    #[test]
    fn malformed_maps() {
        for bad in ["", "S.\n.\n", "S.x\n", "S..\n", "..G\n", "SSG\n", "S#G\n"] {
            assert!(GridMap::parse(bad).is_err(), "{bad:?}");
        }
    }
}
