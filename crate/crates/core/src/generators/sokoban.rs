use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use rand::seq::IndexedRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use super::{GenError, TaskSpec};
use crate::pddl::{GroundAtom, ProblemAst, TypedName};
use crate::seed;
use crate::validator::{Plan, PlanStep};

const DIRS: [(&str, i32, i32); 4] = [("up", -1, 0), ("down", 1, 0), ("left", 0, -1), ("right", 0, 1)];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
#[error("sokoban search exceeded {budget} nodes")]
pub struct BudgetExceeded {
    pub budget: usize,
}

/// A generated instance together with the solution implied by reverse play.
#[derive(Debug, Clone, PartialEq)]
pub struct SokobanInstance {
    pub problem: ProblemAst,
    /// `true` marks a wall; indexed `[row][col]`.
    pub walls: Vec<Vec<bool>>,
    pub pulls: usize,
    /// Replays the pulls backwards as pushes; valid but usually not shortest.
    pub witness: Plan,
}

type Cell = (usize, usize);

fn loc(c: Cell) -> String {
    format!("pos-{}-{}", c.0, c.1)
}

fn step(c: Cell, d: usize) -> Cell {
    let (_, dr, dc) = DIRS[d];
    ((c.0 as i32 + dr) as usize, (c.1 as i32 + dc) as usize)
}

fn opposite(d: usize) -> usize {
    d ^ 1
}

struct Grid {
    walls: Vec<Vec<bool>>,
}

impl Grid {
    fn random(h: usize, w: usize, density: f64, rng: &mut ChaCha8Rng) -> Self {
        let mut walls = vec![vec![true; w]; h];
        for row in walls.iter_mut().take(h - 1).skip(1) {
            for cell in row.iter_mut().take(w - 1).skip(1) {
                *cell = rng.random_bool(density);
            }
        }
        let mut g = Grid { walls };
        g.keep_largest_component(h, w);
        g
    }

    fn free(&self, c: Cell) -> bool {
        !self.walls[c.0][c.1]
    }

    fn free_cells(&self) -> Vec<Cell> {
        let mut out = Vec::new();
        for (r, row) in self.walls.iter().enumerate() {
            for (c, wall) in row.iter().enumerate() {
                if !wall {
                    out.push((r, c));
                }
            }
        }
        out
    }

    fn keep_largest_component(&mut self, h: usize, w: usize) {
        let mut comp = vec![vec![usize::MAX; w]; h];
        let mut sizes = Vec::new();
        for start in self.free_cells() {
            if comp[start.0][start.1] != usize::MAX {
                continue;
            }
            let id = sizes.len();
            let mut size = 0;
            let mut queue = VecDeque::from([start]);
            comp[start.0][start.1] = id;
            while let Some(c) = queue.pop_front() {
                size += 1;
                for d in 0..4 {
                    let n = step(c, d);
                    if self.free(n) && comp[n.0][n.1] == usize::MAX {
                        comp[n.0][n.1] = id;
                        queue.push_back(n);
                    }
                }
            }
            sizes.push(size);
        }
        let Some(best) = (0..sizes.len()).max_by_key(|&i| (sizes[i], std::cmp::Reverse(i))) else {
            return;
        };
        for (r, row) in self.walls.iter_mut().enumerate() {
            for (c, wall) in row.iter_mut().enumerate() {
                if !*wall && comp[r][c] != best {
                    *wall = true;
                }
            }
        }
    }

    /// Shortest walk from `from` to `to` that avoids boxes, as directions.
    fn walk(&self, from: Cell, to: Cell, boxes: &[Cell]) -> Option<Vec<usize>> {
        let mut prev: HashMap<Cell, (Cell, usize)> = HashMap::new();
        let mut queue = VecDeque::from([from]);
        prev.insert(from, (from, usize::MAX));
        while let Some(c) = queue.pop_front() {
            if c == to {
                let mut dirs = Vec::new();
                let mut cur = to;
                while cur != from {
                    let (p, d) = prev[&cur];
                    dirs.push(d);
                    cur = p;
                }
                dirs.reverse();
                return Some(dirs);
            }
            for d in 0..4 {
                let n = step(c, d);
                if self.free(n) && !boxes.contains(&n) && !prev.contains_key(&n) {
                    prev.insert(n, (c, d));
                    queue.push_back(n);
                }
            }
        }
        None
    }

    fn reachable(&self, from: Cell, boxes: &[Cell]) -> Vec<Cell> {
        let mut seen = BTreeSet::from([from]);
        let mut queue = VecDeque::from([from]);
        while let Some(c) = queue.pop_front() {
            for d in 0..4 {
                let n = step(c, d);
                if self.free(n) && !boxes.contains(&n) && seen.insert(n) {
                    queue.push_back(n);
                }
            }
        }
        seen.into_iter().collect()
    }
}

fn aux_usize(spec: &TaskSpec, key: &str, default: f64, min: f64) -> Result<usize, GenError> {
    let v = spec.aux(key, default);
    if !v.is_finite() || v < min || v.fract() != 0.0 {
        return Err(GenError::BadAuxParam {
            key: key.into(),
            message: format!("expected an integer >= {min}, got {v}"),
        });
    }
    Ok(v as usize)
}

/// Reverse-play generation. Aux keys: `width`, `height` (8), `wall_density`
/// (0.15), `pulls` (8 per box), `max_attempts` (100).
pub fn gen_sokoban(spec: &TaskSpec) -> Result<SokobanInstance, GenError> {
    spec.check_range()?;
    let b = spec.main_param as usize;
    let w = aux_usize(spec, "width", 8.0, 3.0)?;
    let h = aux_usize(spec, "height", 8.0, 3.0)?;
    let pulls = aux_usize(spec, "pulls", 8.0 * b as f64, 0.0)?;
    let attempts = aux_usize(spec, "max_attempts", 100.0, 1.0)?;
    let density = spec.aux("wall_density", 0.15);
    if !(0.0..1.0).contains(&density) {
        return Err(GenError::BadAuxParam {
            key: "wall_density".into(),
            message: format!("must lie in [0, 1), got {density}"),
        });
    }
    let mut rng = seed::rng(spec.seed);
    for _ in 0..attempts {
        let grid = Grid::random(h, w, density, &mut rng);
        let free = grid.free_cells();
        if free.len() < b + 2 {
            continue;
        }
        return Ok(reverse_play(grid, b, pulls, spec.seed, &mut rng));
    }
    Err(GenError::RetriesExhausted(attempts as u32))
}

struct Pull {
    /// Player position right after the pull.
    player: Cell,
    /// Box cell after the pull and the pull direction.
    box_at: Cell,
    dir: usize,
    which: usize,
}

fn reverse_play(grid: Grid, b: usize, pulls: usize, seed: u64, rng: &mut ChaCha8Rng) -> SokobanInstance {
    let free = grid.free_cells();
    let mut picks: Vec<Cell> = free.choose_multiple(rng, b + 1).copied().collect();
    let mut player = picks.pop().expect("b + 1 cells sampled");
    let goal_boxes = picks;
    let mut boxes = goal_boxes.clone();
    let mut history = Vec::new();

    for _ in 0..pulls {
        let region = grid.reachable(player, &boxes);
        let mut options = Vec::new();
        for (i, &c) in boxes.iter().enumerate() {
            for d in 0..4 {
                // player stands at c+d and backs away to c+2d, dragging the box
                let q = step(c, d);
                if !grid.free(q) || !region.contains(&q) {
                    continue;
                }
                let back = step(q, d);
                if grid.free(back) && !boxes.contains(&back) {
                    options.push((i, d, q, back));
                }
            }
        }
        let Some(&(i, d, q, back)) = options.choose(rng) else { break };
        boxes[i] = q;
        player = back;
        history.push(Pull { player: back, box_at: q, dir: d, which: i });
    }
    let region = grid.reachable(player, &boxes);
    let start = *region.choose(rng).expect("player cell is reachable");

    let witness = witness_plan(&grid, start, &boxes, &history);
    let problem = encode(&grid, start, &boxes, &goal_boxes, format!("sokoban-{b}-{seed:016x}"));
    SokobanInstance { problem, walls: grid.walls, pulls: history.len(), witness }
}

fn move_step(from: Cell, d: usize) -> PlanStep {
    PlanStep::new("move", [loc(from), loc(step(from, d)), DIRS[d].0.to_string()])
}

fn push_step(from: Cell, d: usize, which: usize) -> PlanStep {
    let bloc = step(from, d);
    PlanStep::new(
        "push",
        [loc(from), loc(bloc), loc(step(bloc, d)), DIRS[d].0.to_string(), format!("box-{}", which + 1)],
    )
}

fn witness_plan(grid: &Grid, start: Cell, boxes: &[Cell], history: &[Pull]) -> Plan {
    let mut boxes = boxes.to_vec();
    let mut player = start;
    let mut steps = Vec::new();
    for pull in history.iter().rev() {
        let walk = grid.walk(player, pull.player, &boxes).expect("reverse play keeps the player connected");
        for d in walk {
            steps.push(move_step(player, d));
            player = step(player, d);
        }
        let push = opposite(pull.dir);
        steps.push(push_step(player, push, pull.which));
        player = pull.box_at;
        boxes[pull.which] = step(pull.box_at, push);
    }
    Plan::new(steps)
}

fn encode(grid: &Grid, player: Cell, boxes: &[Cell], goal: &[Cell], name: String) -> ProblemAst {
    let free = grid.free_cells();
    let mut objects: Vec<TypedName> = free.iter().map(|&c| TypedName { name: loc(c), ty: "location".into() }).collect();
    objects.extend(DIRS.iter().map(|(d, _, _)| TypedName { name: (*d).into(), ty: "direction".into() }));
    objects.extend((1..=boxes.len()).map(|i| TypedName { name: format!("box-{i}"), ty: "box".into() }));

    let mut init = BTreeSet::new();
    init.insert(GroundAtom::new("at-robot", [loc(player)]));
    for (i, &c) in boxes.iter().enumerate() {
        init.insert(GroundAtom::new("at", [format!("box-{}", i + 1), loc(c)]));
    }
    for &c in &free {
        if !boxes.contains(&c) {
            init.insert(GroundAtom::new("clear", [loc(c)]));
        }
        for (d, (name, _, _)) in DIRS.iter().enumerate() {
            let n = step(c, d);
            if grid.free(n) {
                init.insert(GroundAtom::new("adjacent", [loc(c), loc(n), (*name).to_string()]));
            }
        }
    }
    let goal_pos =
        goal.iter().enumerate().map(|(i, &c)| GroundAtom::new("at", [format!("box-{}", i + 1), loc(c)])).collect();
    ProblemAst { name, domain_name: "sokoban".into(), objects, init, goal_pos, goal_neg: BTreeSet::new() }
}

/// Search state: player index then box indices (labelled, so order matters).
type Key = Vec<u16>;

/// Breadth-first search over player and box positions read from the problem's
/// `adjacent`, `at`, `at-robot` and `clear` atoms. Returns a plan with the
/// fewest actions, or [`BudgetExceeded`] after `node_budget` expansions.
pub fn solve_sokoban_bfs(problem: &ProblemAst, node_budget: usize) -> Result<Plan, BudgetExceeded> {
    let mut locs: BTreeSet<&str> = BTreeSet::new();
    for a in problem.init.iter().chain(&problem.goal_pos) {
        match (a.predicate.as_str(), a.args.as_slice()) {
            ("adjacent", [x, y, _]) => {
                locs.insert(x);
                locs.insert(y);
            }
            ("at-robot", [x]) | ("clear", [x]) | ("at", [_, x]) => {
                locs.insert(x);
            }
            _ => {}
        }
    }
    let names: Vec<&str> = locs.iter().copied().collect();
    let n = names.len();
    let idx = |s: &str| index_of(&names, s);

    let mut dirs: Vec<&str> = Vec::new();
    let mut adj: Vec<Vec<Option<u16>>> = vec![Vec::new(); n];
    let mut passable = vec![false; n];
    let mut player = 0u16;
    let mut box_names: Vec<&str> = Vec::new();
    let mut box_at: BTreeMap<&str, u16> = BTreeMap::new();
    for a in &problem.init {
        match (a.predicate.as_str(), a.args.as_slice()) {
            ("adjacent", [x, y, d]) => {
                let di = match dirs.iter().position(|e| e == d) {
                    Some(i) => i,
                    None => {
                        dirs.push(d);
                        dirs.len() - 1
                    }
                };
                let row = &mut adj[idx(x) as usize];
                if row.len() <= di {
                    row.resize(di + 1, None);
                }
                row[di] = Some(idx(y));
            }
            ("at-robot", [x]) => player = idx(x),
            ("clear", [x]) => passable[idx(x) as usize] = true,
            ("at", [b, x]) => {
                box_names.push(b);
                box_at.insert(b, idx(x));
            }
            _ => {}
        }
    }
    box_names.sort();
    box_names.dedup();
    for &p in box_at.values() {
        passable[p as usize] = true;
    }
    let mut goal: Vec<Option<u16>> = vec![None; box_names.len()];
    let mut robot_goal = None;
    for a in &problem.goal_pos {
        match (a.predicate.as_str(), a.args.as_slice()) {
            ("at", [b, x]) => {
                if let Some(i) = box_names.iter().position(|n| n == b) {
                    goal[i] = Some(idx(x));
                }
            }
            ("at-robot", [x]) => robot_goal = Some(idx(x)),
            _ => {}
        }
    }
    let nd = dirs.len();
    for row in &mut adj {
        row.resize(nd, None);
    }

    let start: Key = std::iter::once(player).chain(box_names.iter().map(|b| box_at[b])).collect();
    let is_goal = |k: &Key| {
        robot_goal.is_none_or(|g| k[0] == g) && goal.iter().enumerate().all(|(i, g)| g.is_none_or(|g| k[i + 1] == g))
    };
    // parent map: key -> (parent key, step)
    let mut parent: HashMap<Key, Option<(Key, PlanStep)>> = HashMap::new();
    parent.insert(start.clone(), None);
    let mut queue = VecDeque::from([start]);
    let mut expanded = 0usize;
    while let Some(k) = queue.pop_front() {
        if is_goal(&k) {
            let mut steps = Vec::new();
            let mut cur = k;
            while let Some(Some((p, s))) = parent.get(&cur) {
                steps.push(s.clone());
                cur = p.clone();
            }
            steps.reverse();
            return Ok(Plan::new(steps));
        }
        expanded += 1;
        if expanded > node_budget {
            return Err(BudgetExceeded { budget: node_budget });
        }
        let p = k[0];
        for d in 0..nd {
            let Some(next) = adj[p as usize][d] else { continue };
            if !passable[next as usize] {
                continue;
            }
            let pushed = k[1..].iter().position(|&c| c == next);
            let (child, s) = match pushed {
                None => {
                    let mut c = k.clone();
                    c[0] = next;
                    (c, PlanStep::new("move", [names[p as usize], names[next as usize], dirs[d]]))
                }
                Some(bi) => {
                    let Some(beyond) = adj[next as usize][d] else { continue };
                    if !passable[beyond as usize] || k[1..].contains(&beyond) {
                        continue;
                    }
                    let mut c = k.clone();
                    c[0] = next;
                    c[bi + 1] = beyond;
                    let s = PlanStep::new(
                        "push",
                        [names[p as usize], names[next as usize], names[beyond as usize], dirs[d], box_names[bi]],
                    );
                    (c, s)
                }
            };
            if !parent.contains_key(&child) {
                parent.insert(child.clone(), Some((k.clone(), s)));
                queue.push_back(child);
            }
        }
    }
    // exhausted without reaching the goal: unsolvable within any budget
    Err(BudgetExceeded { budget: node_budget })
}

fn index_of(names: &[&str], s: &str) -> u16 {
    names.binary_search(&s).expect("location collected in first pass") as u16
}
