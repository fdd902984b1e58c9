//! Sokoban text levels, their compilation to IPC-style problems, and
//! keypress resolution.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::SimError;
use crate::pddl::{Domain, GroundAction, GroundAtom, Literal, Objects, Problem, State};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Cell {
    Wall,
    Floor,
    Goal,
    Player,
    PlayerOnGoal,
    Stone,
    StoneOnGoal,
}

impl Cell {
    fn from_char(c: char) -> Option<Cell> {
        Some(match c {
            '#' => Cell::Wall,
            ' ' | '-' | '_' => Cell::Floor,
            '.' => Cell::Goal,
            '@' => Cell::Player,
            '+' => Cell::PlayerOnGoal,
            '$' => Cell::Stone,
            '*' => Cell::StoneOnGoal,
            _ => return None,
        })
    }

    fn is_goal(self) -> bool {
        matches!(self, Cell::Goal | Cell::PlayerOnGoal | Cell::StoneOnGoal)
    }

    fn is_player(self) -> bool {
        matches!(self, Cell::Player | Cell::PlayerOnGoal)
    }

    fn is_stone(self) -> bool {
        matches!(self, Cell::Stone | Cell::StoneOnGoal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SokobanLevel {
    pub name: String,
    pub cells: Vec<Vec<Cell>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Up,
    Down,
    Left,
    Right,
}

impl Direction {
    pub const ALL: [Direction; 4] = [
        Direction::Up,
        Direction::Down,
        Direction::Left,
        Direction::Right,
    ];

    pub fn delta(self) -> (i64, i64) {
        match self {
            Direction::Up => (-1, 0),
            Direction::Down => (1, 0),
            Direction::Left => (0, -1),
            Direction::Right => (0, 1),
        }
    }

    pub fn object(self) -> String {
        format!("dir-{self}")
    }
}

impl fmt::Display for Direction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Direction::Up => "up",
            Direction::Down => "down",
            Direction::Left => "left",
            Direction::Right => "right",
        })
    }
}

impl FromStr for Direction {
    type Err = SimError;

    fn from_str(s: &str) -> Result<Self, SimError> {
        match s.to_ascii_lowercase().as_str() {
            "u" | "up" => Ok(Direction::Up),
            "d" | "down" => Ok(Direction::Down),
            "l" | "left" => Ok(Direction::Left),
            "r" | "right" => Ok(Direction::Right),
            other => Err(SimError::Intent(format!("unknown direction `{other}`"))),
        }
    }
}

fn level_err<T>(line: usize, message: impl Into<String>) -> Result<T, SimError> {
    Err(SimError::Level {
        line,
        message: message.into(),
    })
}

/// Parses a `.sok` level. Lines starting with `;` are metadata; the first
/// one names the level. Short rows are padded with wall, and floor cells
/// the player cannot reach (the outside of the level) become wall.
pub fn parse_level(text: &str) -> Result<SokobanLevel, SimError> {
    let mut name = None;
    let mut rows: Vec<Vec<Cell>> = Vec::new();
    let mut first_line = 0;
    for (i, line) in text.lines().enumerate() {
        let line = line.trim_end_matches('\r');
        if let Some(meta) = line.strip_prefix(';') {
            if name.is_none() && !meta.trim().is_empty() {
                name = Some(meta.trim().to_string());
            }
            continue;
        }
        if line.trim().is_empty() {
            if !rows.is_empty() {
                // anything after the first blank line must be blank or metadata
                if text
                    .lines()
                    .skip(i + 1)
                    .any(|l| !l.trim().is_empty() && !l.starts_with(';'))
                {
                    return level_err(i + 1, "more than one level in file");
                }
                break;
            }
            continue;
        }
        if rows.is_empty() {
            first_line = i;
        }
        let row = line
            .chars()
            .enumerate()
            .map(|(col, c)| {
                Cell::from_char(c).ok_or_else(|| SimError::Level {
                    line: i + 1,
                    message: format!("unexpected character `{c}` at column {}", col + 1),
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        rows.push(row);
    }
    if rows.is_empty() {
        return level_err(1, "empty level");
    }
    let width = rows.iter().map(Vec::len).max().unwrap_or(0);
    for row in &mut rows {
        row.resize(width, Cell::Wall);
    }

    let players: Vec<(usize, usize)> = cells_where(&rows, Cell::is_player);
    match players.len() {
        1 => {}
        0 => return level_err(first_line + 1, "level has no player"),
        n => return level_err(first_line + 1, format!("level has {n} players")),
    }
    if cells_where(&rows, Cell::is_stone).is_empty() {
        return level_err(first_line + 1, "level has no stones");
    }

    let reachable = flood(&rows, players[0]);
    for (r, row) in rows.iter_mut().enumerate() {
        for (c, cell) in row.iter_mut().enumerate() {
            if *cell == Cell::Floor && !reachable.contains(&(r, c)) {
                *cell = Cell::Wall;
            }
        }
    }
    Ok(SokobanLevel {
        name: name.unwrap_or_else(|| "level".to_string()),
        cells: rows,
    })
}

fn cells_where(rows: &[Vec<Cell>], f: impl Fn(Cell) -> bool) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    for (r, row) in rows.iter().enumerate() {
        for (c, cell) in row.iter().enumerate() {
            if f(*cell) {
                out.push((r, c));
            }
        }
    }
    out
}

fn flood(rows: &[Vec<Cell>], start: (usize, usize)) -> BTreeSet<(usize, usize)> {
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some((r, c)) = queue.pop_front() {
        for d in Direction::ALL {
            let (dr, dc) = d.delta();
            let (nr, nc) = (r as i64 + dr, c as i64 + dc);
            if nr < 0 || nc < 0 {
                continue;
            }
            let (nr, nc) = (nr as usize, nc as usize);
            if rows
                .get(nr)
                .and_then(|row| row.get(nc))
                .is_some_and(|c| *c != Cell::Wall)
                && seen.insert((nr, nc))
            {
                queue.push_back((nr, nc));
            }
        }
    }
    seen
}

/// `Level 1` → `level-1`: lowercase, runs of other characters become `-`.
fn identifier(name: &str) -> String {
    let mut out = String::new();
    for ch in name.chars() {
        if ch.is_ascii_alphanumeric() || ch == '_' {
            out.push(ch.to_ascii_lowercase());
        } else if !out.is_empty() && !out.ends_with('-') {
            out.push('-');
        }
    }
    let out = out.trim_end_matches('-');
    if out.is_empty() {
        "level".to_string()
    } else {
        out.to_string()
    }
}

fn pos_name(r: usize, c: usize) -> String {
    format!("pos-{:02}-{:02}", r + 1, c + 1)
}

fn parse_pos_name(name: &str) -> Option<(i64, i64)> {
    let rest = name.strip_prefix("pos-")?;
    let (r, c) = rest.split_once('-')?;
    Some((r.parse::<i64>().ok()? - 1, c.parse::<i64>().ok()? - 1))
}

/// Compiles a level to a problem over the IPC sokoban-sequential domain.
/// Every grid cell, walls included, gets a location object; wall
/// locations carry no `at`, `clear` or incoming/outgoing `move-dir` atoms.
pub fn compile_level(l: &SokobanLevel) -> Problem {
    let mut objects = Objects::new();
    let mut init = State::new();
    let mut goal = BTreeSet::new();
    objects.insert("player-01".into(), "player".into());
    for d in Direction::ALL {
        objects.insert(d.object(), "direction".into());
    }
    let mut stone_no = 0;
    for (r, row) in l.cells.iter().enumerate() {
        for (c, &cell) in row.iter().enumerate() {
            let loc = pos_name(r, c);
            objects.insert(loc.clone(), "location".into());
            let flag = if cell.is_goal() {
                "is-goal"
            } else {
                "is-nongoal"
            };
            init.insert(GroundAtom::ground(flag, &[&loc]));
            if cell == Cell::Wall {
                continue;
            }
            for d in Direction::ALL {
                let (dr, dc) = d.delta();
                let (nr, nc) = (r as i64 + dr, c as i64 + dc);
                let open = nr >= 0
                    && nc >= 0
                    && l.cells
                        .get(nr as usize)
                        .and_then(|row| row.get(nc as usize))
                        .is_some_and(|n| *n != Cell::Wall);
                if open {
                    let to = pos_name(nr as usize, nc as usize);
                    init.insert(GroundAtom::ground("move-dir", &[&loc, &to, &d.object()]));
                }
            }
            if cell.is_player() {
                init.insert(GroundAtom::ground("at", &["player-01", &loc]));
            } else if cell.is_stone() {
                stone_no += 1;
                let stone = format!("stone-{stone_no:02}");
                objects.insert(stone.clone(), "stone".into());
                init.insert(GroundAtom::ground("at", &[&stone, &loc]));
                if cell.is_goal() {
                    init.insert(GroundAtom::ground("at-goal", &[&stone]));
                }
                goal.insert(Literal {
                    positive: true,
                    atom: GroundAtom::ground("at-goal", &[&stone]),
                });
            } else {
                init.insert(GroundAtom::ground("clear", &[&loc]));
            }
        }
    }
    Problem {
        name: identifier(&l.name),
        domain: "sokoban-sequential".into(),
        objects,
        init,
        goal,
    }
}

/// Grid geometry recovered from a compiled problem's `pos-R-C` locations.
#[derive(Debug, Clone)]
pub struct Grid {
    pub rows: usize,
    pub cols: usize,
    cells: BTreeMap<(i64, i64), String>,
    walls: BTreeSet<(i64, i64)>,
}

impl Grid {
    pub fn from_problem(p: &Problem) -> Result<Grid, SimError> {
        let mut cells = BTreeMap::new();
        for (o, ty) in &p.objects {
            if ty == "location" {
                let rc = parse_pos_name(o).ok_or_else(|| {
                    SimError::Intent(format!("location `{o}` is not named pos-R-C"))
                })?;
                cells.insert(rc, o.clone());
            }
        }
        if cells.is_empty() {
            return Err(SimError::Intent("problem has no locations".into()));
        }
        let open: BTreeSet<&str> = p
            .init
            .iter()
            .filter(|a| a.predicate == "move-dir")
            .flat_map(|a| a.args[..2].iter().map(String::as_str))
            .collect();
        let walls = cells
            .iter()
            .filter(|(_, name)| !open.contains(name.as_str()))
            .map(|(rc, _)| *rc)
            .collect();
        let rows = cells.keys().map(|k| k.0).max().unwrap_or(0) as usize + 1;
        let cols = cells.keys().map(|k| k.1).max().unwrap_or(0) as usize + 1;
        Ok(Grid {
            rows,
            cols,
            cells,
            walls,
        })
    }

    pub fn location(&self, rc: (i64, i64)) -> Option<&str> {
        self.cells.get(&rc).map(String::as_str)
    }

    pub fn position(&self, loc: &str) -> Option<(i64, i64)> {
        parse_pos_name(loc).filter(|rc| self.cells.contains_key(rc))
    }

    pub fn is_wall(&self, rc: (i64, i64)) -> bool {
        self.walls.contains(&rc)
    }

    /// Closest wall cell to `from` (Manhattan distance, then row-major).
    fn nearest_wall(&self, from: (i64, i64)) -> Option<&str> {
        self.walls
            .iter()
            .min_by_key(|(r, c)| ((r - from.0).abs() + (c - from.1).abs(), *r, *c))
            .and_then(|rc| self.location(*rc))
    }
}

fn locate<'a>(s: &'a State, p: &Problem, ty: &str) -> Vec<(&'a str, &'a str)> {
    s.iter()
        .filter(|a| a.predicate == "at" && p.objects.get(&a.args[0]).is_some_and(|t| t == ty))
        .map(|a| (a.args[0].as_str(), a.args[1].as_str()))
        .collect()
}

/// Maps a keypress to the ground action the game would attempt. The result
/// is executed by `step` and may fail. Targets off the grid are replaced by
/// the nearest wall location (or the player's own cell when the level has
/// no walls), so the attempt still fails as a ground action.
pub fn resolve_intent(
    s: &State,
    dir: Direction,
    d: &Domain,
    p: &Problem,
) -> Result<GroundAction, SimError> {
    let grid = Grid::from_problem(p)?;
    let players = locate(s, p, "player");
    let [(player, here)] = players[..] else {
        return Err(SimError::Intent(format!(
            "state must place exactly one player, found {}",
            players.len()
        )));
    };
    let here_rc = grid
        .position(here)
        .ok_or_else(|| SimError::Intent(format!("player location `{here}` is not on the grid")))?;
    let dir_obj = dir.object();
    if !p.objects.contains_key(&dir_obj) {
        return Err(SimError::Intent(format!(
            "problem has no direction object `{dir_obj}`"
        )));
    }
    let (dr, dc) = dir.delta();
    let off_grid = || grid.nearest_wall(here_rc).unwrap_or(here).to_string();
    let target = grid
        .location((here_rc.0 + dr, here_rc.1 + dc))
        .map(str::to_string);

    let action = match target {
        None => GroundAction::new(
            "move",
            vec![player.into(), here.into(), off_grid(), dir_obj],
        ),
        Some(target) => match locate(s, p, "stone")
            .into_iter()
            .find(|(_, l)| *l == target)
        {
            None => GroundAction::new("move", vec![player.into(), here.into(), target, dir_obj]),
            Some((stone, _)) => {
                let beyond = grid
                    .location((here_rc.0 + 2 * dr, here_rc.1 + 2 * dc))
                    .map_or_else(off_grid, str::to_string);
                let to_goal = s.contains(&GroundAtom::ground("is-goal", &[&beyond]));
                let name = if to_goal {
                    "push-to-goal"
                } else {
                    "push-to-nongoal"
                };
                GroundAction::new(
                    name,
                    vec![
                        player.into(),
                        stone.into(),
                        here.into(),
                        target,
                        beyond,
                        dir_obj,
                    ],
                )
            }
        },
    };
    d.check_action(&action, &p.objects)?;
    Ok(action)
}

/// Draws `s` in `.sok` characters.
pub fn render(p: &Problem, s: &State) -> Result<Vec<String>, SimError> {
    let grid = Grid::from_problem(p)?;
    let mut out = vec![vec![' '; grid.cols]; grid.rows];
    for (&(r, c), loc) in &grid.cells {
        let goal = s.contains(&GroundAtom::ground("is-goal", &[loc]));
        out[r as usize][c as usize] = match (grid.is_wall((r, c)), goal) {
            (true, _) => '#',
            (false, true) => '.',
            (false, false) => ' ',
        };
    }
    for (ty, plain, on_goal) in [("player", '@', '+'), ("stone", '$', '*')] {
        for (_, loc) in locate(s, p, ty) {
            if let Some((r, c)) = grid.position(loc) {
                let goal = s.contains(&GroundAtom::ground("is-goal", &[loc]));
                out[r as usize][c as usize] = if goal { on_goal } else { plain };
            }
        }
    }
    Ok(out
        .into_iter()
        .map(|row| row.into_iter().collect())
        .collect())
}
