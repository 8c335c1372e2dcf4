//! Randomised batch of checks behind `plancycle rl-check`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::*;
use crate::seed;

pub const FD_STEP: f64 = 1e-5;
pub const FD_TOL: f64 = 1e-6;
pub const NORM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    Prop1,
    Prop2,
    FiniteDifference,
    Normalization,
    SgdSanity,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteConfig {
    pub cases: usize,
    pub tol: f64,
    pub seed: u64,
    pub fd_cases: usize,
    pub sgd_cases: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        SuiteConfig { cases: 100, tol: 1e-9, seed: 7, fd_cases: 20, sgd_cases: 5 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseResult {
    pub check: CheckKind,
    pub case: usize,
    pub label: String,
    pub vocab: usize,
    pub horizon: usize,
    pub prompts: usize,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub cases: usize,
    pub passed: usize,
    pub max_residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub config: SuiteConfig,
    pub summary: BTreeMap<CheckKind, CheckSummary>,
    pub cases: Vec<CaseResult>,
    pub pass: bool,
}

fn shape(rng: &mut ChaCha8Rng) -> (usize, usize, usize) {
    (rng.random_range(2..=MAX_VOCAB), rng.random_range(1..=MAX_HORIZON), rng.random_range(1..=3))
}

struct Recorder {
    cases: Vec<CaseResult>,
}

impl Recorder {
    fn push(&mut self, check: CheckKind, label: &str, p: &ToyPolicy, residual: f64, tolerance: f64, pass: bool) {
        let case = self.cases.iter().filter(|c| c.check == check).count();
        self.cases.push(CaseResult {
            check,
            case,
            label: label.into(),
            vocab: p.vocab,
            horizon: p.horizon,
            prompts: p.prompts,
            residual,
            tolerance,
            pass,
            error: None,
        });
    }

    fn gradient(&mut self, check: CheckKind, label: &str, p: &ToyPolicy, r: Result<GradientReport, RlError>) {
        match r {
            Ok(rep) => self.push(check, label, p, rep.max_abs_residual, rep.tolerance, rep.pass),
            Err(e) => {
                self.push(check, label, p, f64::NAN, f64::NAN, false);
                self.cases.last_mut().expect("just pushed").error = Some(e.to_string());
            }
        }
    }
}

pub fn run_suite(cfg: &SuiteConfig) -> SuiteReport {
    let mut rec = Recorder { cases: Vec::new() };
    prop1_cases(cfg, &mut rec);
    prop2_cases(cfg, &mut rec);
    fd_cases(cfg, &mut rec);
    sgd_cases(cfg, &mut rec);

    let mut summary: BTreeMap<CheckKind, CheckSummary> = BTreeMap::new();
    for c in &rec.cases {
        let s = summary.entry(c.check).or_insert(CheckSummary { cases: 0, passed: 0, max_residual: 0.0 });
        s.cases += 1;
        s.passed += usize::from(c.pass);
        if c.residual.is_nan() || c.residual > s.max_residual {
            s.max_residual = c.residual;
        }
    }
    let pass = rec.cases.iter().all(|c| c.pass);
    SuiteReport { config: cfg.clone(), summary, cases: rec.cases, pass }
}

fn prop1_cases(cfg: &SuiteConfig, rec: &mut Recorder) {
    let k = CheckKind::Prop1;
    let mut rng = seed::rng(seed::derive(cfg.seed, 1));
    for _ in 0..cfg.cases {
        let (v, t, m) = shape(&mut rng);
        let p = ToyPolicy::random(v, t, m, 2.0, &mut rng).expect("valid shape");
        let val = TableValidator::random(v, t, m, rng.random_range(0.1..0.9), false, &mut rng);
        let n = rng.random_range(1..=64);
        let data = RewardedDataset::sample(&p, n, &val, &mut rng);
        rec.gradient(k, "random", &p, Ok(check_prop1(&p, &data, cfg.tol)));
    }

    let p = ToyPolicy::random(3, 2, 1, 2.0, &mut rng).expect("valid shape");
    let none = RewardedDataset::sample(&p, 64, &|_: usize, _: &[usize]| false, &mut rng);
    let r = reinforce_grad_mc(&p, &none);
    let worst = r.iter().map(|v| v.abs()).fold(0.0, f64::max);
    rec.push(k, "all-invalid-zero", &p, worst, 0.0, r.iter().all(|v| *v == 0.0));

    let all = RewardedDataset::sample(&p, 64, &|_: usize, _: &[usize]| true, &mut rng);
    let rep = check_prop1(&p, &all, cfg.tol);
    let exact = rep.reinforce_grad.iter().zip(&rep.sft_grad).all(|(a, b)| *a == -*b);
    rec.push(k, "all-valid-exact", &p, rep.max_abs_residual, 0.0, exact);
}

fn prop2_cases(cfg: &SuiteConfig, rec: &mut Recorder) {
    let k = CheckKind::Prop2;
    let mut rng = seed::rng(seed::derive(cfg.seed, 2));
    for i in 0..cfg.cases {
        let (v, t, _) = shape(&mut rng);
        // one multi-prompt case; the rest use a single fixed prompt
        let m = if i == 0 { 3 } else { 1 };
        let th = ToyPolicy::random(v, t, m, 2.0, &mut rng).expect("valid shape");
        let be = ToyPolicy::random(v, t, m, 2.0, &mut rng).expect("valid shape");
        let val = TableValidator::random(v, t, m, rng.random_range(0.1..0.9), true, &mut rng);
        let lambda = rng.random_range(0.0..=1.0);
        let label = if m > 1 { "random-multi-prompt" } else { "random" };
        rec.gradient(k, label, &th, check_prop2(&th, &be, lambda, &val, cfg.tol));
        for (name, pol) in [("theta", &th), ("beta", &be)] {
            let worst = total_probability(pol).iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
            rec.push(CheckKind::Normalization, name, pol, worst, NORM_TOL, worst < NORM_TOL);
        }
    }

    let th = ToyPolicy::random(3, 2, 1, 2.0, &mut rng).expect("valid shape");
    let be = ToyPolicy::random(3, 2, 1, 2.0, &mut rng).expect("valid shape");
    let contains0 = |_: usize, y: &[usize]| y.contains(&0);
    rec.gradient(k, "contains-token-0", &th, check_prop2(&th, &be, 0.3, &contains0, cfg.tol));

    let exact = |r: Result<GradientReport, RlError>| match r {
        Ok(rep) => Ok(GradientReport { pass: rep.max_abs_residual == 0.0, tolerance: 0.0, ..rep }),
        e => e,
    };
    rec.gradient(k, "lambda-0-exact", &th, exact(check_prop2(&th, &be, 0.0, &contains0, cfg.tol)));
    rec.gradient(k, "beta-eq-theta-exact", &th, exact(check_prop2(&th, &th, 0.7, &contains0, cfg.tol)));
}

fn fd_cases(cfg: &SuiteConfig, rec: &mut Recorder) {
    let mut rng = seed::rng(seed::derive(cfg.seed, 3));
    for _ in 0..cfg.fd_cases {
        let (v, t, m) = shape(&mut rng);
        let p = ToyPolicy::random(v, t, m, 2.0, &mut rng).expect("valid shape");
        let x = rng.random_range(0..m);
        let y: Vec<usize> = (0..t).map(|_| rng.random_range(0..v)).collect();
        let err = finite_difference_error(&p, x, &y, FD_STEP);
        rec.push(CheckKind::FiniteDifference, "random", &p, err, FD_TOL, err < FD_TOL);
    }
}

fn sgd_cases(cfg: &SuiteConfig, rec: &mut Recorder) {
    let mut rng = seed::rng(seed::derive(cfg.seed, 4));
    for i in 0..cfg.sgd_cases {
        let (v, t, m) = shape(&mut rng);
        let p = ToyPolicy::random(v, t, m, 1.0, &mut rng).expect("valid shape");
        let val = TableValidator::random(v, t, m, 0.3, true, &mut rng);
        let sc = SgdConfig { seed: seed::derive(cfg.seed, 100 + i as u64), ..SgdConfig::default() };
        let tr = sgd_sanity(&p, &val, &sc);
        let label = if tr.monotone { "trajectory" } else { "trajectory (J decreased)" };
        rec.push(CheckKind::SgdSanity, label, &p, tr.max_gap, SGD_GAP_TOL, tr.pass);
    }
}
