//! One function per subcommand. Each returns its JSON results and a metrics
//! table; `main` turns those into the artifact files.
//!
//! Metrics CSV headers are part of the interface and only ever grow at the
//! end.

use std::collections::{BTreeMap, BTreeSet};
use std::path::{Path, PathBuf};

use matic_core::agents::scenarios::{default_bandit, default_character, CONTEXT_SWITCH_WINDOW};
use matic_core::agents::{
    ber_curve, garage_scenario, run_bandit, BanditConfig, Character, CharacterConfig, GateSchedule,
    Receiver, ReceiverConfig,
};
use matic_core::event::{validate_chain, ContextPolicy};
use matic_core::gcm::{run_gcm, Gcm, Signal, SignalBundle};
use matic_core::implicature::{infer_cause, rank_candidates, ConditionalModel, ImplicatureError};
use matic_core::info::{stationarity_test, time_varying_entropy};
use matic_core::logic::{
    apply_idealisation, apply_transference, check_comprehension, comprehensions, is_internal,
    parse_program, stratify_formula, LogicError, Stratification,
};
use matic_core::net::{Circularity, Network};
use matic_core::rng::{derive_seed, seeded};
use rand::Rng;
use serde_json::{json, Value};

use crate::error::{CliError, Result};
use crate::io::{load_model, load_trace, load_traces, read_json, read_text, Role};

pub struct Outcome {
    pub results: Value,
    pub header: &'static [&'static str],
    pub rows: Vec<Vec<String>>,
    /// Additional artifacts, `(file name, JSON value)`.
    pub extra: Vec<(String, Value)>,
}

impl Outcome {
    fn new(results: Value, header: &'static [&'static str], rows: Vec<Vec<String>>) -> Self {
        Self {
            results,
            header,
            rows,
            extra: Vec::new(),
        }
    }
}

fn num(v: f64) -> String {
    format!("{v}")
}

pub const TRACE_HEADER: &[&str] = &["trace", "events", "alphabet", "t_min", "t_max", "agents"];

pub fn trace_validate(path: &Path) -> Result<Outcome> {
    let traces = load_traces(path)?;
    let mut rows = Vec::new();
    let mut summaries = Vec::new();
    for (i, t) in traces.iter().enumerate() {
        if !t.is_empty() {
            validate_chain(t.events())?;
        }
        let t_min = t.events().iter().map(|e| e.t_start).min();
        let t_max = t.events().iter().map(|e| e.t_end()).max();
        let agents: BTreeSet<&str> = t.events().iter().filter_map(|e| e.agent.as_deref()).collect();
        rows.push(vec![
            i.to_string(),
            t.len().to_string(),
            t.alphabet().len().to_string(),
            t_min.map_or(String::new(), |v| v.to_string()),
            t_max.map_or(String::new(), |v| v.to_string()),
            agents.len().to_string(),
        ]);
        summaries.push(json!({
            "events": t.len(),
            "alphabet": t.alphabet(),
            "t_min": t_min,
            "t_max": t_max,
            "scenario": t.metadata.scenario,
        }));
    }
    Ok(Outcome::new(
        json!({ "valid": true, "traces": summaries }),
        TRACE_HEADER,
        rows,
    ))
}

pub const GCM_HEADER: &[&str] = &["tick", "output"];

pub fn gcm_run(config: &Path, inputs: &Path, ticks: Option<usize>, seed: u64) -> Result<Outcome> {
    let gcm: Gcm = read_json::<Gcm>(config, Role::Config)?.with_seed(seed);
    let bundle: SignalBundle = read_json(inputs, Role::Data)?;
    let ticks = ticks.or(bundle.ticks()).unwrap_or(0);
    let (out, after) = gcm
        .clone()
        .run(&bundle, ticks)
        .map_err(|e| CliError::data(e.to_string()))?;
    debug_assert_eq!(out, run_gcm(&gcm, &bundle, ticks).expect("same run"));
    let outputs = out.scalars();
    let rows = outputs
        .iter()
        .enumerate()
        .map(|(t, v)| vec![t.to_string(), num(*v)])
        .collect();
    let mean = if outputs.is_empty() {
        0.0
    } else {
        outputs.iter().sum::<f64>() / outputs.len() as f64
    };
    let mut o = Outcome::new(
        json!({
            "ticks": ticks,
            "mean_output": mean,
            "transfer_changed": after.transfer() != gcm.transfer(),
        }),
        GCM_HEADER,
        rows,
    );
    o.extra.push(("module.json".into(), serde_json::to_value(&after).expect("serialisable")));
    Ok(o)
}

pub const NET_HEADER: &[&str] = &["node", "level"];

pub fn net_check(path: &Path) -> Result<Outcome> {
    let net: Network = read_json(path, Role::Config)?;
    let (verdict, cycle, levels) = match net.detect_circularity() {
        Circularity::Acyclic { .. } => ("acyclic", Vec::new(), net.stratify()?),
        Circularity::Circular { cycle } => ("circular", cycle, BTreeMap::new()),
    };
    let rows = levels
        .iter()
        .map(|(n, l)| vec![n.clone(), l.to_string()])
        .collect();
    Ok(Outcome::new(
        json!({
            "nodes": net.node_ids().len(),
            "edges": net.edges().len(),
            "inputs": net.inputs().iter().map(|d| &d.name).collect::<Vec<_>>(),
            "verdict": verdict,
            "cycle": cycle,
            "levels": levels,
        }),
        NET_HEADER,
        rows,
    ))
}

pub const NET_RUN_HEADER: &[&str] = &["tick", "node", "output"];

pub fn net_run(path: &Path, inputs: &Path, ticks: usize) -> Result<Outcome> {
    let net: Network = read_json(path, Role::Config)?;
    let signals: BTreeMap<String, Signal> = read_json(inputs, Role::Data)?;
    let out = net.run(&signals, ticks).map_err(|e| CliError::data(e.to_string()))?;
    let mut rows = Vec::new();
    for t in 0..ticks {
        for (node, s) in &out {
            rows.push(vec![t.to_string(), node.clone(), num(s.scalars()[t])]);
        }
    }
    let finals: BTreeMap<&String, f64> = out
        .iter()
        .map(|(n, s)| (n, s.scalars().last().copied().unwrap_or(0.0)))
        .collect();
    Ok(Outcome::new(
        json!({ "ticks": ticks, "final_outputs": finals }),
        NET_RUN_HEADER,
        rows,
    ))
}

pub const INFER_HEADER: &[&str] = &["event", "cause", "context", "surprisal_bits"];

pub fn infer(
    trace: &Path,
    corpus: &Path,
    event: Option<&str>,
    k: usize,
    lambda: f64,
    top: usize,
) -> Result<Outcome> {
    let trace = load_trace(trace)?;
    let model = load_model(corpus, k, lambda)?;
    let targets: Vec<String> = match event {
        Some(e) => vec![e.to_string()],
        None => trace.events().iter().map(|e| e.id.clone()).collect(),
    };
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for y in &targets {
        match infer_cause(&model, &trace, y, k) {
            Ok(best) => {
                rows.push(vec![
                    y.clone(),
                    best.cause.clone(),
                    best.context.join(";"),
                    num(best.surprisal),
                ]);
                let ranked = if top > 1 {
                    rank_candidates(&model, &trace, y, k)?
                        .into_iter()
                        .take(top)
                        .collect()
                } else {
                    vec![best.clone()]
                };
                results.push(json!({ "event": y, "best": best, "ranked": ranked }));
            }
            // only an explicitly requested event must have candidates
            Err(ImplicatureError::NoCandidates(_)) if event.is_none() => {
                results.push(json!({ "event": y, "best": null }));
            }
            Err(e) => return Err(e.into()),
        }
    }
    Ok(Outcome::new(
        json!({ "max_context": k, "lambda": lambda, "inferences": results }),
        INFER_HEADER,
        rows,
    ))
}

pub const ENTROPY_HEADER: &[&str] = &["event", "t", "entropy_bits"];

pub fn entropy(trace: &Path, corpus: &Path, window: usize, k: usize, lambda: f64) -> Result<Outcome> {
    let trace = load_trace(trace)?;
    let model = load_model(corpus, k, lambda)?;
    let profile = time_varying_entropy(&trace, &model, &ContextPolicy::Window(window))?;
    let rows = trace
        .events()
        .iter()
        .zip(&profile)
        .map(|(e, (t, h))| vec![e.id.clone(), t.to_string(), num(*h)])
        .collect();
    let hs: Vec<f64> = profile.iter().map(|p| p.1).collect();
    let (lo, hi) = hs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &h| (a.min(h), b.max(h)));
    Ok(Outcome::new(
        json!({
            "window": window,
            "events": hs.len(),
            "min_bits": if hs.is_empty() { None } else { Some(lo) },
            "max_bits": if hs.is_empty() { None } else { Some(hi) },
            "constant": hs.windows(2).all(|w| w[0] == w[1]),
            "profile": profile,
        }),
        ENTROPY_HEADER,
        rows,
    ))
}

pub const STATIONARITY_HEADER: &[&str] =
    &["verdict", "max_divergence_bits", "worst_a", "worst_b", "windows", "tau"];

pub fn stationarity(paths: &[PathBuf], window: Option<u64>, tau: f64) -> Result<Outcome> {
    let mut traces = Vec::new();
    for p in paths {
        traces.extend(load_traces(p)?);
    }
    let window = window.unwrap_or(CONTEXT_SWITCH_WINDOW);
    let r = stationarity_test(&traces, window, tau)?;
    let verdict = serde_json::to_value(r.verdict).expect("serialisable");
    let verdict_name = match r.verdict {
        matic_core::info::Stationarity::Stationary => "Stationary",
        matic_core::info::Stationarity::NonStationary => "NonStationary",
    };
    let rows = vec![vec![
        verdict_name.to_string(),
        num(r.max_divergence),
        r.worst_pair.0.to_string(),
        r.worst_pair.1.to_string(),
        r.windows.to_string(),
        num(tau),
    ]];
    Ok(Outcome::new(
        json!({
            "verdict": verdict_name,
            "verdict_code": verdict,
            "max_divergence_bits": r.max_divergence,
            "worst_pair": r.worst_pair,
            "windows": r.windows,
            "window": window,
            "tau": tau,
            "traces": traces.len(),
        }),
        STATIONARITY_HEADER,
        rows,
    ))
}

fn program(path: &Path) -> Result<Vec<matic_core::logic::ProgramLine>> {
    Ok(parse_program(&read_text(path)?)?)
}

pub const LOGIC_CHECK_HEADER: &[&str] =
    &["line", "formula", "internal", "stratified", "comprehensions"];

pub fn logic_check(path: &Path) -> Result<Outcome> {
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for line in program(path)? {
        let f = &line.formula;
        let internal = is_internal(f);
        let strat = stratify_formula(f);
        let verdicts = comprehensions(f)
            .into_iter()
            .map(|t| check_comprehension(t).map(|v| (t.to_string(), v.to_string())))
            .collect::<std::result::Result<Vec<_>, LogicError>>()?;
        let (stratified, detail) = match &strat {
            Stratification::Stratified(levels) => (true, json!({ "levels": levels })),
            Stratification::NotStratified { cycle } => (false, json!({ "cycle": cycle })),
        };
        rows.push(vec![
            line.line.to_string(),
            f.to_string(),
            internal.to_string(),
            stratified.to_string(),
            verdicts.iter().map(|(_, v)| v.as_str()).collect::<Vec<_>>().join(";"),
        ]);
        results.push(json!({
            "line": line.line,
            "formula": f.to_string(),
            "internal": internal,
            "stratified": stratified,
            "stratification": detail,
            "comprehensions": verdicts
                .iter()
                .map(|(t, v)| json!({ "term": t, "verdict": v }))
                .collect::<Vec<_>>(),
        }));
    }
    Ok(Outcome::new(json!({ "formulas": results }), LOGIC_CHECK_HEADER, rows))
}

pub const LOGIC_REWRITE_HEADER: &[&str] = &["line", "formula", "verdict", "result"];

fn rewrite_rows(
    path: &Path,
    rule: impl Fn(&matic_core::logic::Formula) -> std::result::Result<matic_core::logic::Formula, LogicError>,
) -> Result<(Vec<Vec<String>>, Vec<Value>)> {
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for line in program(path)? {
        let (verdict, result) = match rule(&line.formula) {
            Ok(g) => ("legal".to_string(), g.to_string()),
            Err(LogicError::IllegalTransfer(issue)) => (issue.to_string(), String::new()),
            Err(LogicError::PatternMismatch(_)) => ("not_applicable".to_string(), String::new()),
            Err(e) => return Err(e.into()),
        };
        rows.push(vec![
            line.line.to_string(),
            line.formula.to_string(),
            verdict.clone(),
            result.clone(),
        ]);
        results.push(json!({
            "line": line.line,
            "formula": line.formula.to_string(),
            "verdict": verdict,
            "result": if result.is_empty() { None } else { Some(result) },
        }));
    }
    Ok((rows, results))
}

pub fn logic_transfer(path: &Path, standard: &[String]) -> Result<Outcome> {
    let std: BTreeSet<String> = standard.iter().cloned().collect();
    let (rows, results) = rewrite_rows(path, |f| apply_transference(f, &std))?;
    Ok(Outcome::new(
        json!({ "standard": std, "formulas": results }),
        LOGIC_REWRITE_HEADER,
        rows,
    ))
}

pub fn logic_idealise(path: &Path) -> Result<Outcome> {
    let (rows, results) = rewrite_rows(path, apply_idealisation)?;
    Ok(Outcome::new(json!({ "formulas": results }), LOGIC_REWRITE_HEADER, rows))
}

pub const TRAIN_HEADER: &[&str] = &["context", "cause", "outcome", "count"];

pub fn train(corpus: &Path, k: usize, lambda: f64) -> Result<Outcome> {
    let traces = load_traces(corpus)?;
    let model = ConditionalModel::train(&traces, k, lambda)?;
    let file = matic_core::implicature::ModelFile::from(model);
    let rows = file
        .records
        .iter()
        .map(|r| {
            vec![
                r.context.join(";"),
                r.cause.clone(),
                r.outcome.clone(),
                r.count.to_string(),
            ]
        })
        .collect();
    let mut o = Outcome::new(
        json!({
            "traces": traces.len(),
            "alphabet": file.alphabet,
            "max_context": k,
            "lambda": lambda,
            "records": file.records.len(),
        }),
        TRAIN_HEADER,
        rows,
    );
    o.extra.push(("model.json".into(), serde_json::to_value(&file).expect("serialisable")));
    Ok(o)
}

pub const GARAGE_HEADER: &[&str] = &["rank", "cause", "context", "surprisal_bits"];

pub fn demo_garage(k: usize, lambda: f64) -> Result<Outcome> {
    let (trace, corpus) = garage_scenario();
    let model = ConditionalModel::train(&corpus, k, lambda)?;
    let best = infer_cause(&model, &trace, "reply", k)?;
    let ranked = rank_candidates(&model, &trace, "reply", k)?;
    let profile = time_varying_entropy(&trace, &model, &ContextPolicy::Window(1))?;
    let rows = ranked
        .iter()
        .enumerate()
        .map(|(i, p)| {
            vec![
                (i + 1).to_string(),
                p.cause.clone(),
                p.context.join(";"),
                num(p.surprisal),
            ]
        })
        .collect();
    let cause_label = trace.get(&best.cause).map(|e| e.label.clone());
    Ok(Outcome::new(
        json!({
            "utterance": "reply",
            "implied_cause": best.cause,
            "implied_cause_label": cause_label,
            "context": best.context,
            "surprisal_bits": best.surprisal,
            "corpus_dialogues": corpus.len(),
            "entropy_profile": profile,
        }),
        GARAGE_HEADER,
        rows,
    ))
}

pub const RECEIVER_HEADER: &[&str] = &["label", "symbols", "errors", "error_rate", "theory"];

pub fn demo_receiver(
    config: Option<&Path>,
    symbols: usize,
    ebn0: &[f64],
    seed: u64,
) -> Result<Outcome> {
    if let Some(path) = config {
        let cfg: ReceiverConfig = read_json(path, Role::Config)?;
        let rx = Receiver::new(cfg)?;
        let run = rx.simulate(symbols, seed)?;
        let forbidden = run
            .decoded
            .windows(2)
            .filter(|w| !rx.config().allows(Some(w[0]), w[1]))
            .count();
        let rows = vec![vec![
            "config".into(),
            symbols.to_string(),
            run.errors.to_string(),
            num(run.error_rate()),
            String::new(),
        ]];
        return Ok(Outcome::new(
            json!({
                "symbols": symbols,
                "errors": run.errors,
                "symbol_error_rate": run.error_rate(),
                "forbidden_transitions_decoded": forbidden,
            }),
            RECEIVER_HEADER,
            rows,
        ));
    }
    let points = ber_curve(ebn0, 8, symbols, seed)?;
    let rows = points
        .iter()
        .map(|p| {
            vec![
                format!("ebn0_db={}", p.ebn0_db),
                p.symbols.to_string(),
                p.errors.to_string(),
                num(p.ber),
                num(p.theory),
            ]
        })
        .collect();
    let within: Vec<bool> = points.iter().map(|p| p.z_score().abs() <= 3.0).collect();
    Ok(Outcome::new(
        json!({
            "modulation": "bpsk",
            "samples_per_symbol": 8,
            "points": points,
            "within_three_sigma": within,
        }),
        RECEIVER_HEADER,
        rows,
    ))
}

pub const BANDIT_HEADER: &[&str] = &["run", "greedy_arm", "total_reward", "table"];

pub fn demo_bandit(config: Option<&Path>, runs: usize, seed: u64) -> Result<Outcome> {
    let cfg: BanditConfig = match config {
        Some(p) => read_json(p, Role::Config)?,
        None => default_bandit(),
    };
    let best = cfg
        .payouts
        .iter()
        .enumerate()
        .fold(0, |b, (i, &p)| if p > cfg.payouts[b] { i } else { b });
    let mut rows = Vec::new();
    let mut hits = 0;
    let mut frozen_ok = true;
    for run in 0..runs {
        let r = run_bandit(&cfg, derive_seed(seed, run as u64))?;
        hits += usize::from(r.greedy_arm == best);
        if let GateSchedule::Until { episode } = cfg.gate {
            if episode > 0 && episode <= r.snapshots.len() {
                frozen_ok &= r.snapshots[episode - 1..].iter().all(|s| *s == r.snapshots[episode - 1]);
            }
        }
        let table = r.module.transfer().params().unwrap_or(&[]).to_vec();
        rows.push(vec![
            run.to_string(),
            r.greedy_arm.to_string(),
            num(r.total_reward()),
            table.iter().map(|v| num(*v)).collect::<Vec<_>>().join(";"),
        ]);
    }
    let rate = if runs == 0 { 0.0 } else { hits as f64 / runs as f64 };
    Ok(Outcome::new(
        json!({
            "arms": cfg.arms(),
            "best_arm": best,
            "runs": runs,
            "convergence_rate": rate,
            "frozen_after_gate_closes": frozen_ok,
            "config": cfg,
        }),
        BANDIT_HEADER,
        rows,
    ))
}

pub const CHARACTER_HEADER: &[&str] =
    &["tick", "pose", "x", "y", "qw", "qx", "qy", "qz", "behaviour"];

pub fn demo_character(
    config: Option<&Path>,
    ticks: usize,
    condition_rate: f64,
    seed: u64,
) -> Result<Outcome> {
    let cfg: CharacterConfig = match config {
        Some(p) => read_json(p, Role::Config)?,
        None => default_character(),
    };
    if !(0.0..=1.0).contains(&condition_rate) {
        return Err(CliError::config(format!("condition rate {condition_rate} not in [0, 1]")));
    }
    let ch = Character::new(cfg)?;
    let mut rng = seeded(derive_seed(seed, 1));
    let k = ch.config().conditions.len();
    let conditions: Vec<Vec<bool>> = (0..ticks)
        .map(|_| (0..k).map(|_| rng.random_bool(condition_rate)).collect())
        .collect();
    let frames = ch.run(&conditions, derive_seed(seed, 2))?;
    let mut violations = 0;
    let mut prev = ch.config().initial_pose.clone();
    let mut visits: BTreeMap<&str, usize> = BTreeMap::new();
    for f in &frames {
        violations += usize::from(!ch.allows(&prev, &f.pose));
        prev = f.pose.clone();
        *visits.entry(f.pose.as_str()).or_default() += 1;
    }
    let rows = frames
        .iter()
        .map(|f| {
            vec![
                f.tick.to_string(),
                f.pose.clone(),
                num(f.position[0]),
                num(f.position[1]),
                num(f.rotation[0]),
                num(f.rotation[1]),
                num(f.rotation[2]),
                num(f.rotation[3]),
                f.behaviour.clone().unwrap_or_default(),
            ]
        })
        .collect();
    Ok(Outcome::new(
        json!({
            "ticks": ticks,
            "mask_violations": violations,
            "pose_visits": visits,
            "final_position": frames.last().map(|f| f.position),
        }),
        CHARACTER_HEADER,
        rows,
    ))
}
