use std::collections::{BTreeMap, BTreeSet, VecDeque};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::Rng;
use thiserror::Error;

use super::{GenError, TaskSpec};
use crate::pddl::{GroundAtom, ProblemAst, TypedName};
use crate::seed;
use crate::validator::{Plan, PlanStep};

const MODES: [&str; 3] = ["colour", "high_res", "low_res"];

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("rovers solver: {0}")]
pub struct RoversFailure(pub String);

fn obj(name: impl Into<String>, ty: &str) -> TypedName {
    TypedName { name: name.into(), ty: ty.into() }
}

fn atom<const N: usize>(p: &str, args: [&str; N]) -> GroundAtom {
    GroundAtom::new(p, args)
}

/// Aux keys: `waypoints` (4r + 4), `objectives` (r + 1), `extra_edge_prob`
/// (0.15), `extra_visibility_prob` (0.1), `sample_prob` (0.3).
pub fn gen_rovers(spec: &TaskSpec) -> Result<ProblemAst, GenError> {
    spec.check_range()?;
    let r = spec.main_param as usize;
    let nw = spec.aux("waypoints", (4 * r + 4) as f64);
    let no = spec.aux("objectives", (r + 1) as f64);
    for (key, v) in [("waypoints", nw), ("objectives", no)] {
        if !v.is_finite() || v < 2.0 || v.fract() != 0.0 {
            return Err(GenError::BadAuxParam {
                key: key.into(),
                message: format!("expected an integer >= 2, got {v}"),
            });
        }
    }
    let (nw, no) = (nw as usize, no as usize);
    let p_edge = spec.aux("extra_edge_prob", 0.15);
    let p_vis = spec.aux("extra_visibility_prob", 0.1);
    let p_sample = spec.aux("sample_prob", 0.3);
    for (key, v) in [("extra_edge_prob", p_edge), ("extra_visibility_prob", p_vis), ("sample_prob", p_sample)] {
        if !(0.0..=1.0).contains(&v) {
            return Err(GenError::BadAuxParam { key: key.into(), message: format!("probability out of range: {v}") });
        }
    }
    let mut rng = seed::rng(spec.seed);
    let wp: Vec<String> = (0..nw).map(|i| format!("waypoint{i}")).collect();
    let rovers: Vec<String> = (0..r).map(|i| format!("rover{i}")).collect();
    let objectives: Vec<String> = (0..no).map(|i| format!("objective{i}")).collect();

    // random spanning tree plus extra edges; visibility is a superset
    let mut edges = BTreeSet::new();
    for i in 1..nw {
        let j = rng.random_range(0..i);
        edges.insert((j, i));
    }
    for i in 0..nw {
        for j in i + 1..nw {
            if rng.random_bool(p_edge) {
                edges.insert((i, j));
            }
        }
    }
    let mut visible = edges.clone();
    for i in 0..nw {
        for j in i + 1..nw {
            if rng.random_bool(p_vis) {
                visible.insert((i, j));
            }
        }
    }

    let mut init = BTreeSet::new();
    for &(i, j) in &visible {
        init.insert(atom("visible", [&wp[i], &wp[j]]));
        init.insert(atom("visible", [&wp[j], &wp[i]]));
    }
    let lander_wp = rng.random_range(0..nw);
    init.insert(atom("at_lander", ["general", &wp[lander_wp]]));
    init.insert(atom("channel_free", ["general"]));

    let caps = ["soil", "rock", "imaging"];
    let mut equip: Vec<[bool; 3]> = Vec::new();
    let mut cameras = Vec::new();
    for (ri, rover) in rovers.iter().enumerate() {
        let mut e = [rng.random_bool(0.5), rng.random_bool(0.5), rng.random_bool(0.5)];
        if !e.iter().any(|&x| x) {
            e[rng.random_range(0..3)] = true;
        }
        equip.push(e);
        let store = format!("{rover}store");
        init.insert(atom("at", [rover, &wp[rng.random_range(0..nw)]]));
        init.insert(atom("available", [rover]));
        init.insert(atom("store_of", [&store, rover]));
        init.insert(atom("empty", [&store]));
        for &(i, j) in &edges {
            init.insert(atom("can_traverse", [rover, &wp[i], &wp[j]]));
            init.insert(atom("can_traverse", [rover, &wp[j], &wp[i]]));
        }
        for (c, on) in caps.iter().zip(e) {
            if on {
                let pred = match *c {
                    "soil" => "equipped_for_soil_analysis",
                    "rock" => "equipped_for_rock_analysis",
                    _ => "equipped_for_imaging",
                };
                init.insert(atom(pred, [rover]));
            }
        }
        if e[2] {
            let cam = format!("camera{ri}");
            init.insert(atom("on_board", [&cam, rover]));
            let target = objectives.choose(&mut rng).expect("at least two objectives");
            init.insert(atom("calibration_target", [&cam, target]));
            let mut modes: Vec<&str> = MODES.iter().copied().filter(|_| rng.random_bool(0.5)).collect();
            if modes.is_empty() {
                modes.push(MODES.choose(&mut rng).copied().expect("non-empty"));
            }
            for m in &modes {
                init.insert(atom("supports", [&cam, m]));
            }
            cameras.push((cam, modes));
        }
    }
    for o in &objectives {
        let k = rng.random_range(1..=3.min(nw));
        for w in wp.choose_multiple(&mut rng, k) {
            init.insert(atom("visible_from", [o, w]));
        }
    }

    let soil_sites: Vec<usize> = (0..nw).filter(|_| rng.random_bool(p_sample)).collect();
    let rock_sites: Vec<usize> = (0..nw).filter(|_| rng.random_bool(p_sample)).collect();
    for &i in &soil_sites {
        init.insert(atom("at_soil_sample", [&wp[i]]));
    }
    for &i in &rock_sites {
        init.insert(atom("at_rock_sample", [&wp[i]]));
    }

    // goals only over what some rover can actually do; the graph is
    // connected and every rover may traverse every edge, so reachability
    // is never the obstacle
    let mut goal_pos = BTreeSet::new();
    let mut pick_goals = |sites: &[usize], cap: usize, pred: &str, rng: &mut rand_chacha::ChaCha8Rng| {
        if sites.is_empty() || !equip.iter().any(|e| e[cap]) {
            return;
        }
        let k = rng.random_range(1..=sites.len().min(r + 1));
        let mut chosen: Vec<usize> = sites.to_vec();
        chosen.shuffle(rng);
        for &i in &chosen[..k] {
            goal_pos.insert(atom(pred, [&wp[i]]));
        }
    };
    pick_goals(&soil_sites, 0, "communicated_soil_data", &mut rng);
    pick_goals(&rock_sites, 1, "communicated_rock_data", &mut rng);
    let supported: BTreeSet<&str> = cameras.iter().flat_map(|(_, m)| m.iter().copied()).collect();
    if !supported.is_empty() {
        let options: Vec<(&String, &str)> =
            objectives.iter().flat_map(|o| supported.iter().map(move |m| (o, *m))).collect();
        let k = rng.random_range(1..=options.len().min(r + 1));
        for (o, m) in options.choose_multiple(&mut rng, k) {
            goal_pos.insert(atom("communicated_image_data", [o, m]));
        }
    }
    if goal_pos.is_empty() {
        // no matching capability and sample site came up; plant one
        let w = rng.random_range(0..nw);
        init.insert(atom("at_soil_sample", [&wp[w]]));
        init.insert(atom("equipped_for_soil_analysis", [&rovers[0]]));
        goal_pos.insert(atom("communicated_soil_data", [&wp[w]]));
    }

    let mut objects = Vec::new();
    objects.extend(rovers.iter().map(|x| obj(x, "rover")));
    objects.extend(rovers.iter().map(|x| obj(format!("{x}store"), "store")));
    objects.extend(wp.iter().map(|x| obj(x, "waypoint")));
    objects.extend(cameras.iter().map(|(c, _)| obj(c, "camera")));
    objects.extend(MODES.iter().map(|m| obj(*m, "mode")));
    objects.push(obj("general", "lander"));
    objects.extend(objectives.iter().map(|x| obj(x, "objective")));

    Ok(ProblemAst {
        name: format!("rovers-{r}-{:016x}", spec.seed),
        domain_name: "rover".into(),
        objects,
        init,
        goal_pos,
        goal_neg: BTreeSet::new(),
    })
}

/// Facts the greedy solver needs, read back from a problem's initial state.
struct Facts<'a> {
    at: BTreeMap<&'a str, &'a str>,
    lander_at: (&'a str, &'a str),
    traverse: BTreeMap<&'a str, BTreeMap<&'a str, Vec<&'a str>>>,
    visible: BTreeSet<(&'a str, &'a str)>,
    equipped: BTreeSet<(&'a str, &'a str)>,
    store_of: BTreeMap<&'a str, &'a str>,
    full: BTreeSet<&'a str>,
    soil: BTreeSet<&'a str>,
    rock: BTreeSet<&'a str>,
    on_board: Vec<(&'a str, &'a str)>,
    supports: BTreeSet<(&'a str, &'a str)>,
    target: BTreeMap<&'a str, &'a str>,
    visible_from: BTreeMap<&'a str, Vec<&'a str>>,
}

impl<'a> Facts<'a> {
    fn read(problem: &'a ProblemAst) -> Result<Self, RoversFailure> {
        let mut f = Facts {
            at: BTreeMap::new(),
            lander_at: ("", ""),
            traverse: BTreeMap::new(),
            visible: BTreeSet::new(),
            equipped: BTreeSet::new(),
            store_of: BTreeMap::new(),
            full: BTreeSet::new(),
            soil: BTreeSet::new(),
            rock: BTreeSet::new(),
            on_board: Vec::new(),
            supports: BTreeSet::new(),
            target: BTreeMap::new(),
            visible_from: BTreeMap::new(),
        };
        let mut lander = None;
        for a in &problem.init {
            let args: Vec<&str> = a.args.iter().map(String::as_str).collect();
            match (a.predicate.as_str(), args.as_slice()) {
                ("at", [r, w]) => {
                    f.at.insert(r, w);
                }
                ("at_lander", [l, w]) => lander = Some((*l, *w)),
                ("can_traverse", [r, x, y]) => f.traverse.entry(r).or_default().entry(x).or_default().push(y),
                ("visible", [x, y]) => {
                    f.visible.insert((x, y));
                }
                ("equipped_for_soil_analysis", [r]) => {
                    f.equipped.insert((r, "soil"));
                }
                ("equipped_for_rock_analysis", [r]) => {
                    f.equipped.insert((r, "rock"));
                }
                ("equipped_for_imaging", [r]) => {
                    f.equipped.insert((r, "imaging"));
                }
                ("store_of", [s, r]) => {
                    f.store_of.insert(r, s);
                }
                ("full", [s]) => {
                    f.full.insert(s);
                }
                ("at_soil_sample", [w]) => {
                    f.soil.insert(w);
                }
                ("at_rock_sample", [w]) => {
                    f.rock.insert(w);
                }
                ("on_board", [c, r]) => f.on_board.push((c, r)),
                ("supports", [c, m]) => {
                    f.supports.insert((c, m));
                }
                ("calibration_target", [c, o]) => {
                    f.target.insert(c, o);
                }
                ("visible_from", [o, w]) => f.visible_from.entry(o).or_default().push(w),
                _ => {}
            }
        }
        f.lander_at = lander.ok_or_else(|| RoversFailure("no lander".into()))?;
        Ok(f)
    }

    /// Shortest route for `rover` from `from` to any waypoint in `targets`.
    fn route(&self, rover: &str, from: &'a str, targets: &[&'a str]) -> Option<Vec<&'a str>> {
        let empty = BTreeMap::new();
        let graph = self.traverse.get(rover).unwrap_or(&empty);
        let mut prev: BTreeMap<&str, &str> = BTreeMap::new();
        let mut queue = VecDeque::from([from]);
        prev.insert(from, from);
        while let Some(w) = queue.pop_front() {
            if targets.contains(&w) {
                let mut path = vec![w];
                let mut cur = w;
                while cur != from {
                    cur = prev[cur];
                    path.push(cur);
                }
                path.reverse();
                return Some(path);
            }
            for &n in graph.get(w).into_iter().flatten() {
                if self.visible.contains(&(w, n)) && !prev.contains_key(n) {
                    prev.insert(n, w);
                    queue.push_back(n);
                }
            }
        }
        None
    }

    fn comm_points(&self) -> Vec<&'a str> {
        let y = self.lander_at.1;
        self.visible.iter().filter(|(_, b)| *b == y).map(|(a, _)| *a).collect()
    }
}

type Route<'a> = Vec<&'a str>;

struct Emitter<'a> {
    facts: Facts<'a>,
    steps: Vec<PlanStep>,
}

impl<'a> Emitter<'a> {
    fn drive(&mut self, rover: &'a str, path: &[&'a str]) {
        for w in path.windows(2) {
            self.steps.push(PlanStep::new("navigate", [rover, w[0], w[1]]));
        }
        if let Some(last) = path.last() {
            self.facts.at.insert(rover, last);
        }
    }

    fn communicate(&mut self, rover: &'a str, action: &str, payload: &[&str]) -> Result<(), RoversFailure> {
        let here = self.facts.at[rover];
        let points = self.facts.comm_points();
        let path = self
            .facts
            .route(rover, here, &points)
            .ok_or_else(|| RoversFailure(format!("{rover} cannot reach a waypoint visible from the lander")))?;
        self.drive(rover, &path);
        let x = self.facts.at[rover];
        let (l, y) = self.facts.lander_at;
        let mut args = vec![rover, l];
        args.extend_from_slice(payload);
        args.extend([x, y]);
        self.steps.push(PlanStep::new(action, args));
        Ok(())
    }

    /// Candidate with the shortest route to any of `targets`; ties go to the
    /// first rover by name.
    fn closest(&self, candidates: &[&'a str], targets: &[&'a str]) -> Option<(&'a str, Vec<&'a str>)> {
        candidates
            .iter()
            .filter_map(|r| self.facts.route(r, self.facts.at.get(r)?, targets).map(|p| (*r, p)))
            .min_by_key(|(_, p)| p.len())
    }

    fn sample(&mut self, kind: &str, site: &'a str) -> Result<(), RoversFailure> {
        let rovers: Vec<&str> = self.facts.equipped.iter().filter(|(_, k)| *k == kind).map(|(r, _)| *r).collect();
        let (rover, path) =
            self.closest(&rovers, &[site]).ok_or_else(|| RoversFailure(format!("no {kind} rover can reach {site}")))?;
        self.drive(rover, &path);
        let store = *self.facts.store_of.get(rover).ok_or_else(|| RoversFailure(format!("{rover} has no store")))?;
        if self.facts.full.contains(store) {
            self.steps.push(PlanStep::new("drop", [rover, store]));
        }
        self.steps.push(PlanStep::new(&format!("sample_{kind}"), [rover, store, site]));
        self.facts.full.insert(store);
        self.communicate(rover, &format!("communicate_{kind}_data"), &[site])
    }

    fn image(&mut self, objective: &'a str, mode: &'a str) -> Result<(), RoversFailure> {
        let views = self.facts.visible_from.get(objective).cloned().unwrap_or_default();
        // (cost, camera, rover, route to calibrate, route to the view)
        let mut best: Option<(usize, &str, &str, Route, Route)> = None;
        for &(cam, rover) in &self.facts.on_board {
            if !self.facts.supports.contains(&(cam, mode)) || !self.facts.equipped.contains(&(rover, "imaging")) {
                continue;
            }
            let Some(target) = self.facts.target.get(cam) else { continue };
            let cal_points = self.facts.visible_from.get(target).cloned().unwrap_or_default();
            let Some(start) = self.facts.at.get(rover) else { continue };
            let Some(p1) = self.facts.route(rover, start, &cal_points) else { continue };
            let Some(p2) = self.facts.route(rover, p1[p1.len() - 1], &views) else { continue };
            let cost = p1.len() + p2.len();
            if best.as_ref().is_none_or(|b| cost < b.0) {
                best = Some((cost, cam, rover, p1, p2));
            }
        }
        let (_, cam, rover, p1, p2) =
            best.ok_or_else(|| RoversFailure(format!("no camera can image {objective} in {mode}")))?;
        let target = self.facts.target[cam];
        self.drive(rover, &p1);
        self.steps.push(PlanStep::new("calibrate", [rover, cam, target, p1[p1.len() - 1]]));
        self.drive(rover, &p2);
        self.steps.push(PlanStep::new("take_image", [rover, p2[p2.len() - 1], objective, cam, mode]));
        self.communicate(rover, "communicate_image_data", &[objective, mode])
    }
}

/// Handles soil goals, then rock, then images, each by the closest capable
/// rover; every data point is sent to the lander right after collection.
pub fn solve_rovers_greedy(problem: &ProblemAst) -> Result<Plan, RoversFailure> {
    let mut em = Emitter { facts: Facts::read(problem)?, steps: Vec::new() };
    let mut soil = Vec::new();
    let mut rock = Vec::new();
    let mut images = Vec::new();
    for g in &problem.goal_pos {
        let args: Vec<&str> = g.args.iter().map(String::as_str).collect();
        match (g.predicate.as_str(), args.as_slice()) {
            ("communicated_soil_data", [w]) => soil.push(*w),
            ("communicated_rock_data", [w]) => rock.push(*w),
            ("communicated_image_data", [o, m]) => images.push((*o, *m)),
            _ => return Err(RoversFailure(format!("unsupported goal {g}"))),
        }
    }
    for w in soil {
        if !em.facts.soil.remove(w) {
            return Err(RoversFailure(format!("no soil sample at {w}")));
        }
        em.sample("soil", w)?;
    }
    for w in rock {
        if !em.facts.rock.remove(w) {
            return Err(RoversFailure(format!("no rock sample at {w}")));
        }
        em.sample("rock", w)?;
    }
    for (o, m) in images {
        em.image(o, m)?;
    }
    Ok(Plan::new(em.steps))
}
