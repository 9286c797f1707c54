//! Deterministic gridworld MDPs read from ASCII maps.
//!
//! Map dialect: one row per line, `X` is a wall, `.` is free, `S` and `G`
//! are free cells that also record the start/goal anchors. Lines whose first
//! character is `#` are comments and are dropped by the parser.

use std::collections::VecDeque;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// The four primitive moves, in the fixed order used for every tie-break.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Action {
    Up,
    Down,
    Right,
    Left,
}

impl Action {
    pub const ALL: [Action; 4] = [Action::Up, Action::Down, Action::Right, Action::Left];

    pub fn index(self) -> usize {
        self as usize
    }

    fn delta(self) -> (isize, isize) {
        match self {
            Action::Up => (-1, 0),
            Action::Down => (1, 0),
            Action::Right => (0, 1),
            Action::Left => (0, -1),
        }
    }

    pub fn arrow(self) -> char {
        match self {
            Action::Up => '^',
            Action::Down => 'v',
            Action::Right => '>',
            Action::Left => '<',
        }
    }
}

impl fmt::Display for Action {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Action::Up => "up",
            Action::Down => "down",
            Action::Right => "right",
            Action::Left => "left",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MapError {
    #[error("map has no rows")]
    Empty,
    #[error("line {line}: expected {expected} columns, found {found}")]
    NotRectangular {
        line: usize,
        expected: usize,
        found: usize,
    },
    #[error("line {line}, column {column}: illegal character {ch:?}")]
    IllegalChar { line: usize, column: usize, ch: char },
    #[error("line {line}, column {column}: duplicate {anchor:?} anchor")]
    DuplicateAnchor {
        line: usize,
        column: usize,
        anchor: char,
    },
    #[error("map has no free cells")]
    NoFreeCells,
    #[error("free cell at row {row}, column {col} is unreachable from row {from_row}, column {from_col}")]
    Disconnected {
        row: usize,
        col: usize,
        from_row: usize,
        from_col: usize,
    },
}

/// A deterministic gridworld. Free cells are indexed densely in row-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct GridWorld {
    width: usize,
    height: usize,
    walls: Vec<bool>,
    index: Vec<Option<usize>>,
    cells: Vec<(usize, usize)>,
    next: Vec<[usize; 4]>,
    start: Option<usize>,
    goal: Option<usize>,
}

impl GridWorld {
    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_states(&self) -> usize {
        self.cells.len()
    }

    pub fn is_wall(&self, row: usize, col: usize) -> bool {
        self.walls[row * self.width + col]
    }

    /// Dense state index of the free cell at `(row, col)`, if any.
    pub fn state_at(&self, row: usize, col: usize) -> Option<usize> {
        if row >= self.height || col >= self.width {
            return None;
        }
        self.index[row * self.width + col]
    }

    /// `(row, col)` of a state.
    pub fn cell(&self, s: usize) -> (usize, usize) {
        self.cells[s]
    }

    pub fn start(&self) -> Option<usize> {
        self.start
    }

    pub fn goal(&self) -> Option<usize> {
        self.goal
    }

    /// Deterministic transition. Moves into a wall or off the grid leave the state unchanged.
    pub fn step(&self, s: usize, a: Action) -> usize {
        self.next[s][a.index()]
    }

    /// Distinct states reachable in one move, in action order.
    pub fn neighbors(&self, s: usize) -> impl Iterator<Item = usize> + '_ {
        Action::ALL
            .iter()
            .map(move |&a| self.step(s, a))
            .filter(move |&t| t != s)
    }

    pub fn degree(&self, s: usize) -> usize {
        self.neighbors(s).count()
    }

    /// Breadth-first distances from `source` (in primitive moves).
    pub fn bfs_distances(&self, source: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; self.num_states()];
        let mut queue = VecDeque::new();
        dist[source] = 0;
        queue.push_back(source);
        while let Some(s) = queue.pop_front() {
            for t in self.neighbors(s) {
                if dist[t] == usize::MAX {
                    dist[t] = dist[s] + 1;
                    queue.push_back(t);
                }
            }
        }
        dist
    }

    /// Free cells with exactly two free neighbours on opposite sides, both of
    /// which open onto wider regions (three or more free neighbours).
    pub fn doorways(&self) -> Vec<usize> {
        (0..self.num_states())
            .filter(|&s| {
                let up = self.step(s, Action::Up) != s;
                let down = self.step(s, Action::Down) != s;
                let right = self.step(s, Action::Right) != s;
                let left = self.step(s, Action::Left) != s;
                let (a, b) = match (up, down, right, left) {
                    (true, true, false, false) => (Action::Up, Action::Down),
                    (false, false, true, true) => (Action::Right, Action::Left),
                    _ => return false,
                };
                self.degree(self.step(s, a)) >= 3 && self.degree(self.step(s, b)) >= 3
            })
            .collect()
    }

    /// Normalized map text: no comments, `\n` line endings, trailing newline.
    pub fn render(&self) -> String {
        let mut out = String::with_capacity((self.width + 1) * self.height);
        for row in 0..self.height {
            for col in 0..self.width {
                let ch = match self.state_at(row, col) {
                    None => 'X',
                    Some(s) if Some(s) == self.start => 'S',
                    Some(s) if Some(s) == self.goal => 'G',
                    Some(_) => '.',
                };
                out.push(ch);
            }
            out.push('\n');
        }
        out
    }
}

/// Map lines with comments removed, `\r` stripped, and a trailing newline.
pub fn normalize_map_text(text: &str) -> String {
    let mut out = String::new();
    for line in map_lines(text) {
        out.push_str(line.1);
        out.push('\n');
    }
    out
}

fn map_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim_end_matches('\r')))
        .filter(|(_, l)| !l.starts_with('#'))
}

pub fn parse_map(text: &str) -> Result<GridWorld, MapError> {
    let rows: Vec<(usize, &str)> = map_lines(text).collect();
    let Some(&(_, first)) = rows.first() else {
        return Err(MapError::Empty);
    };
    let width = first.chars().count();
    if width == 0 {
        return Err(MapError::Empty);
    }
    let height = rows.len();

    let mut walls = Vec::with_capacity(width * height);
    let mut start = None;
    let mut goal = None;
    for (r, &(line, text)) in rows.iter().enumerate() {
        let found = text.chars().count();
        if found != width {
            return Err(MapError::NotRectangular {
                line,
                expected: width,
                found,
            });
        }
        for (c, ch) in text.chars().enumerate() {
            let anchor = match ch {
                'X' => {
                    walls.push(true);
                    continue;
                }
                '.' => None,
                'S' => Some(&mut start),
                'G' => Some(&mut goal),
                _ => {
                    return Err(MapError::IllegalChar {
                        line,
                        column: c + 1,
                        ch,
                    })
                }
            };
            walls.push(false);
            if let Some(slot) = anchor {
                if slot.is_some() {
                    return Err(MapError::DuplicateAnchor {
                        line,
                        column: c + 1,
                        anchor: ch,
                    });
                }
                *slot = Some((r, c));
            }
        }
    }

    let mut index = vec![None; width * height];
    let mut cells = Vec::new();
    for (i, &wall) in walls.iter().enumerate() {
        if !wall {
            index[i] = Some(cells.len());
            cells.push((i / width, i % width));
        }
    }
    if cells.is_empty() {
        return Err(MapError::NoFreeCells);
    }

    let next = cells
        .iter()
        .enumerate()
        .map(|(s, &(row, col))| {
            Action::ALL.map(|a| {
                let (dr, dc) = a.delta();
                let (nr, nc) = (row as isize + dr, col as isize + dc);
                if nr < 0 || nc < 0 || nr as usize >= height || nc as usize >= width {
                    return s;
                }
                index[nr as usize * width + nc as usize].unwrap_or(s)
            })
        })
        .collect();

    let lookup = |p: Option<(usize, usize)>| p.and_then(|(r, c)| index[r * width + c]);
    let world = GridWorld {
        width,
        height,
        walls,
        start: lookup(start),
        goal: lookup(goal),
        index,
        cells,
        next,
    };

    let dist = world.bfs_distances(0);
    if let Some(s) = dist.iter().position(|&d| d == usize::MAX) {
        let (row, col) = world.cell(s);
        let (from_row, from_col) = world.cell(0);
        return Err(MapError::Disconnected {
            row,
            col,
            from_row,
            from_col,
        });
    }
    debug_assert!(world.transitions_are_symmetric());
    Ok(world)
}

impl GridWorld {
    /// Every move s -> t with t != s can be undone by some move t -> s.
    pub fn transitions_are_symmetric(&self) -> bool {
        (0..self.num_states()).all(|s| self.neighbors(s).all(|t| self.neighbors(t).any(|u| u == s)))
    }
}

/// State feature representations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeatureMap {
    /// One-hot indicator of the state index.
    TabularOneHot,
    /// Scaled `(row, col)` followed by four wall-adjacency bits (up, down, right, left).
    CoordinateSynthetic,
}

impl FeatureMap {
    pub fn dim(self, g: &GridWorld) -> usize {
        match self {
            FeatureMap::TabularOneHot => g.num_states(),
            FeatureMap::CoordinateSynthetic => 6,
        }
    }

    pub fn features(self, g: &GridWorld, s: usize) -> Vec<f64> {
        match self {
            FeatureMap::TabularOneHot => {
                let mut v = vec![0.0; g.num_states()];
                v[s] = 1.0;
                v
            }
            FeatureMap::CoordinateSynthetic => {
                let (row, col) = g.cell(s);
                let scale = |x: usize, n: usize| if n > 1 { x as f64 / (n - 1) as f64 } else { 0.0 };
                let mut v = vec![scale(row, g.height()), scale(col, g.width())];
                v.extend(Action::ALL.map(|a| if g.step(s, a) == s { 1.0 } else { 0.0 }));
                v
            }
        }
    }
}

/// The shipped evaluation domains.
pub mod maps {
    use super::{parse_map, GridWorld};

    pub const OPEN_GRID: &str = include_str!("../maps/open_grid.txt");
    pub const IMAZE: &str = include_str!("../maps/imaze.txt");
    pub const FOUR_ROOM: &str = include_str!("../maps/four_room.txt");

    pub fn open_grid() -> GridWorld {
        parse_map(OPEN_GRID).expect("shipped map parses")
    }

    pub fn imaze() -> GridWorld {
        parse_map(IMAZE).expect("shipped map parses")
    }

    pub fn four_room() -> GridWorld {
        parse_map(FOUR_ROOM).expect("shipped map parses")
    }

    /// `(name, text)` for every shipped map.
    pub fn all() -> [(&'static str, &'static str); 3] {
        [("open_grid", OPEN_GRID), ("imaze", IMAZE), ("four_room", FOUR_ROOM)]
    }
}
