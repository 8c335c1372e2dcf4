//! Embedded PDDL sources: the three benchmark domains, the prompt
//! exemplars, and small fixtures for the additional IPC domains the parser
//! must accept.

pub const BLOCKSWORLD: &str = include_str!("../fixtures/blocksworld-domain.pddl");
pub const BLOCKSWORLD_2SWAP: &str = include_str!("../fixtures/blocksworld-2swap.pddl");
pub const SOKOBAN: &str = include_str!("../fixtures/sokoban-domain.pddl");
pub const ROVERS: &str = include_str!("../fixtures/rovers-domain.pddl");

pub const GRIPPER_DOMAIN: &str = include_str!("../fixtures/prompt/gripper-domain.pddl");
pub const GRIPPER_PROBLEM: &str = include_str!("../fixtures/prompt/gripper-problem.pddl");
pub const GRIPPER_PLAN: &str = include_str!("../fixtures/prompt/gripper-plan.txt");
pub const LOGISTICS_DOMAIN: &str = include_str!("../fixtures/prompt/logistics-domain.pddl");
pub const LOGISTICS_PROBLEM: &str = include_str!("../fixtures/prompt/logistics-problem.pddl");
pub const LOGISTICS_PLAN: &str = include_str!("../fixtures/prompt/logistics-plan.txt");

macro_rules! appendix_fixture {
    ($name:literal) => {
        (
            $name,
            include_str!(concat!("../fixtures/appendix/", $name, "-domain.pddl")),
            include_str!(concat!("../fixtures/appendix/", $name, "-problem.pddl")),
            include_str!(concat!("../fixtures/appendix/", $name, "-plan.txt")),
        )
    };
}

/// (name, domain, problem, valid plan)
pub const APPENDIX: [(&str, &str, &str, &str); 7] = [
    appendix_fixture!("childsnack"),
    appendix_fixture!("ferry"),
    appendix_fixture!("floortile"),
    appendix_fixture!("miconic"),
    appendix_fixture!("satellite"),
    appendix_fixture!("spanner"),
    appendix_fixture!("transport"),
];

/// Domain, problem and plan text of an appendix fixture.
///
/// Panics on unknown names; fixtures are compile-time constants.
pub fn appendix(name: &str) -> (&'static str, &'static str, &'static str) {
    let (_, d, p, plan) = APPENDIX.iter().find(|(n, ..)| *n == name).expect("unknown fixture");
    (d, p, plan)
}

/// Every committed (domain, problem) pair.
pub fn all_fixture_pairs() -> Vec<(&'static str, &'static str)> {
    let mut out = vec![
        (BLOCKSWORLD, BLOCKSWORLD_2SWAP),
        (GRIPPER_DOMAIN, GRIPPER_PROBLEM),
        (LOGISTICS_DOMAIN, LOGISTICS_PROBLEM),
    ];
    out.extend(APPENDIX.iter().map(|(_, d, p, _)| (*d, *p)));
    out
}
