use super::*;

fn small(root: &Path) -> RunConfig {
    RunConfig {
        domains: vec![DomainId::Blocksworld],
        task_count: 30,
        n_generations: 3,
        runs: 2,
        chunk_size: 7,
        seed: 11,
        output_root: root.to_path_buf(),
        ..RunConfig::default()
    }
}

fn read(p: &Path) -> String {
    fs::read_to_string(p).unwrap()
}

#[test]
fn config_checks() {
    let mut c = RunConfig::default();
    assert!(c.check().is_ok());
    c.runs = 0;
    assert!(matches!(c.check(), Err(PipelineError::Config(_))));
    let c = RunConfig { n_generations: 0, ..RunConfig::default() };
    assert!(c.check().is_err());
    let parsed: RunConfig =
        serde_json::from_str(r#"{"domains":["sokoban"],"policy":{"kind":"simulated","beta":3.0}}"#).unwrap();
    assert_eq!(parsed.domains, vec![DomainId::Sokoban]);
    assert!(matches!(parsed.policy, PolicySelection::Simulated(ref s) if s.beta == 3.0 && s.alpha == 1.0));
}

#[test]
fn accounting_and_layout() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    let out = run_iterative(&cfg).unwrap();
    assert!(out.awaiting.is_empty());
    let gens = &out.report.domains[&DomainId::Blocksworld];
    assert_eq!(gens.len(), 4);
    let store = TraceStore::new(cfg.domain_root(DomainId::Blocksworld).join("traces"));
    let mut last_size = [0; 2];
    for g in 0..=3 {
        let rec: GenerationRecord = serde_json::from_str(&read(&store.generation_dir(g).join("record.json"))).unwrap();
        for r in 0..2u32 {
            assert_eq!(store.load(g, r).unwrap().len(), 30);
            let size = rec.runs[r as usize].training_set_size.unwrap();
            assert!(size >= last_size[r as usize]);
            last_size[r as usize] = size;
        }
        assert!(gens[g as usize].unanimous <= *gens[g as usize].solved_per_run.iter().min().unwrap());
    }
    let root = cfg.domain_root(DomainId::Blocksworld);
    assert!(root.join("sft/gen-004/run-1/sft.jsonl").exists());
    assert!(root.join("tasks/taskset.json").exists());
    assert!(dir.path().join("metrics.csv").exists());
    assert_eq!(metrics_from_store(dir.path()).unwrap(), out.report);
    assert_eq!(metrics_from_store(&root).unwrap(), out.report);
}

#[test]
fn resume_after_crash_matches_clean_run() {
    let a = tempfile::tempdir().unwrap();
    let clean = run_iterative(&small(a.path())).unwrap();

    let b = tempfile::tempdir().unwrap();
    let cfg = small(b.path());
    // first pass stops after generation 1
    run_iterative(&RunConfig { n_generations: 1, ..cfg.clone() }).unwrap();
    // then fake a crash in the middle of generation 2: a few whole lines
    // and a torn one, no record
    let src = TraceStore::new(cfg.domain_root(DomainId::Blocksworld).join("traces"));
    let full = TraceStore::new(a.path().join("blocksworld/traces"));
    fs::create_dir_all(src.generation_dir(2)).unwrap();
    let text = read(&full.path(2, 0));
    let cut: usize = text.match_indices('\n').nth(9).unwrap().0 + 1;
    fs::write(src.path(2, 0), format!("{}{}", &text[..cut], &text[cut..cut + 25])).unwrap();

    let resumed = run_iterative(&cfg).unwrap();
    assert_eq!(resumed.report, clean.report);
    for g in 0..=3 {
        for r in 0..2 {
            assert_eq!(read(&src.path(g, r)), read(&full.path(g, r)), "gen {g} run {r}");
        }
    }
}

#[test]
fn shared_and_uncurated_modes_run() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig { shared_runs: true, curation: CurationMode::Uncurated, ..small(dir.path()) };
    let out = run_iterative(&cfg).unwrap();
    let rec: GenerationRecord =
        serde_json::from_str(&read(&cfg.domain_root(DomainId::Blocksworld).join("traces/gen-001/record.json")))
            .unwrap();
    assert_eq!(rec.runs[0].skill, rec.runs[1].skill);
    assert_eq!(out.report.domains[&DomainId::Blocksworld].len(), 4);
}

#[test]
fn mismatched_taskset_is_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small(dir.path());
    run_iterative(&RunConfig { n_generations: 1, ..cfg.clone() }).unwrap();
    let err = run_iterative(&RunConfig { task_count: 31, ..cfg }).unwrap_err();
    assert!(matches!(err, PipelineError::Config(_)));
}

#[test]
fn http_mode_waits_for_next_model() {
    // nothing listens here, so every trace is a transport error
    let dir = tempfile::tempdir().unwrap();
    let http =
        HttpConfig { base_url: "http://127.0.0.1:9".into(), max_attempts: 1, backoff_ms: 0, ..HttpConfig::default() };
    let cfg = RunConfig {
        task_count: 3,
        n_generations: 2,
        runs: 1,
        policy: PolicySelection::Http(http),
        ..small(dir.path())
    };
    let out = run_iterative(&cfg).unwrap();
    assert_eq!(out.awaiting.len(), 1);
    assert_eq!(out.awaiting[0].generation, 1);
    let gens = &out.report.domains[&DomainId::Blocksworld];
    assert_eq!(gens.len(), 1);
    assert_eq!(gens[0].solved.mean, 0.0);
    let store = TraceStore::new(cfg.domain_root(DomainId::Blocksworld).join("traces"));
    let recs = store.load(0, 0).unwrap();
    assert!(recs
        .iter()
        .all(|r| r.trace.finish_reason == crate::policy::FinishReason::Error && r.trace.error.is_some()));

    fs::write(&out.awaiting[0].model_ref_file, "tuned-1\n").unwrap();
    let out = run_iterative(&cfg).unwrap();
    assert_eq!(out.awaiting[0].generation, 2);
    let rec: GenerationRecord = serde_json::from_str(&read(&store.generation_dir(1).join("record.json"))).unwrap();
    assert_eq!(rec.runs[0].model_ref.as_deref(), Some("tuned-1"));
}
