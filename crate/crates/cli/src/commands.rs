//! Command bodies: each reads its inputs, delegates to the library, writes
//! artifacts atomically, and finishes by emitting exactly one manifest.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use anyhow::{bail, Context};
use serde::Serialize;

use l3watch::detector::{BackendConfig, ChatDetector, OracleDetector, WindowDetector};
use l3watch::evaluation::report::{
    render_latency_table, study_correlations_csv, study_entries_csv, study_groups_csv, sweep_csv,
    LatencyColumn, LatencyTable,
};
use l3watch::evaluation::{
    run_detection, sensitivity_study, sweep_windows, CorrelationOutcome, RunResult,
};
use l3watch::preprocess::{build_windows, WindowConfig, WindowLabel};
use l3watch::prompting::{
    classify_alignment, lint_description, read_descriptions, write_descriptions, AlignmentGroup,
    AttackDescription, PredicateCoverage,
};
use l3watch::sdl::{
    generate_benign_trace, hypoglyph_mutate, inject_blind_dos, truncate_trace, HypoglyphMap,
};
use l3watch::trace_io::{read_trace_file, write_atomic, write_trace_file};
use l3watch::{Error, HttpBackend, ReplayBackend, TelemetryRecord};

use crate::args::{
    DetectorArgs, GenArgs, InjectArgs, LintArgs, MutateArgs, ReportArgs, RunArgs, StudyArgs,
    SweepArgs,
};
use crate::manifest::{default_manifest_path, RunManifest};

/// Environment variable holding the chat backend credential.
const API_KEY_VAR: &str = "L3WATCH_API_KEY";

pub fn gen(args: GenArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("gen", &args)?;
    manifest.seed(args.seed);

    let mut trace = generate_benign_trace(args.ues, args.sessions, args.seed);
    if let Some(len) = args.records {
        trace = truncate_trace(trace, len);
    }
    write_trace_file(&args.out, &trace)?;
    manifest.output(&args.out)?;
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "gen", Some(&args.out)))?;
    println!("wrote {} records to {}", trace.len(), args.out.display());
    Ok(())
}

pub fn inject(args: InjectArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("inject", &args)?;
    manifest.seed(args.seed);

    let trace = read_trace_file(&args.trace)?;
    manifest.input(&args.trace)?;
    let injected = inject_blind_dos(&trace, args.count, args.min_gap, args.seed)?;
    write_trace_file(&args.out, &injected)?;
    manifest.output(&args.out)?;
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "inject", Some(&args.out)))?;
    println!(
        "injected {} attacks, wrote {} records to {}",
        args.count,
        injected.len(),
        args.out.display()
    );
    Ok(())
}

pub fn mutate(args: MutateArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("mutate", &args)?;

    let trace = read_trace_file(&args.trace)?;
    manifest.input(&args.trace)?;
    let selection = match (&args.positions, args.attacked) {
        (Some(spec), false) => parse_positions(spec)?,
        (None, true) => trace
            .iter()
            .enumerate()
            .filter(|(_, r)| r.label.is_attack())
            .map(|(i, _)| i)
            .collect(),
        (None, false) => bail!("pass --positions or --attacked to choose records"),
        (Some(_), true) => unreachable!("clap rejects the combination"),
    };
    let mutated = hypoglyph_mutate(&trace, &selection, &HypoglyphMap::standard())?;
    write_trace_file(&args.out, &mutated)?;
    manifest.output(&args.out)?;
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "mutate", Some(&args.out)))?;
    println!(
        "disguised {} records, wrote {}",
        selection.len(),
        args.out.display()
    );
    Ok(())
}

pub fn run(args: RunArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("run", &args)?;

    let trace = read_trace_file(&args.trace)?;
    manifest.input(&args.trace)?;
    if let Some(desc) = &args.desc {
        manifest.input(desc)?;
    }
    let description = description_from(args.desc.as_deref())?;
    let config = WindowConfig::new(args.w)?;

    if let Some(dump) = &args.dump_windows {
        dump_windows(&trace, config, dump)?;
        manifest.output(dump)?;
    }

    let detection_started = Instant::now();
    let mut detector = build_detector(&args.detector, &description)?;
    let result = run_detection(
        &trace,
        config,
        detector.as_mut(),
        args.unclassified_policy.into(),
    )?;
    manifest.timing("detection", detection_started.elapsed());

    print_run(&result, latency_kind(&args.detector), args.bound_ms);
    if let Some(out) = &args.out {
        write_results(out, std::slice::from_ref(&result))?;
        manifest.output(out)?;
    }
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "run", args.out.as_deref()))?;
    Ok(())
}

pub fn sweep(args: SweepArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("sweep", &args)?;

    let sizes = parse_w_spec(&args.w)?;
    let trace = read_trace_file(&args.trace)?;
    manifest.input(&args.trace)?;
    if let Some(desc) = &args.desc {
        manifest.input(desc)?;
    }
    let description = description_from(args.desc.as_deref())?;

    let detection_started = Instant::now();
    let mut factory =
        |_w: usize| -> l3watch::Result<Box<dyn WindowDetector>> {
            build_detector(&args.detector, &description)
        };
    let results = sweep_windows(
        &trace,
        sizes,
        &mut factory,
        args.unclassified_policy.into(),
    )?;
    manifest.timing("detection", detection_started.elapsed());

    let table = sweep_csv(&results)?;
    match &args.out {
        Some(out) => {
            write_atomic(out, table.as_bytes())?;
            manifest.output(out)?;
            println!("wrote {} sweep rows to {}", results.len(), out.display());
        }
        None => print!("{table}"),
    }
    if let Some(results_path) = &args.results {
        write_results(results_path, &results)?;
        manifest.output(results_path)?;
    }
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "sweep", args.out.as_deref()))?;
    Ok(())
}

pub fn lint(args: LintArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("lint", &args)?;

    let descriptions = read_descriptions(&args.desc)?;
    manifest.input(&args.desc)?;
    if descriptions.is_empty() {
        bail!("no descriptions in {}", args.desc.display());
    }
    let mut completed = Vec::with_capacity(descriptions.len());
    for (idx, description) in descriptions.iter().enumerate() {
        let coverage = lint_description(&description.body);
        println!(
            "{}\t{}\t{}/6\t{}\t{}",
            idx + 1,
            group_label(classify_alignment(coverage)),
            coverage.satisfied(),
            coverage_flags(coverage),
            description.name
        );
        if args.complete {
            completed.push(description.completed());
        }
    }
    if args.complete {
        let out = args.out.as_ref().expect("clap enforces --out");
        write_descriptions(out, &completed)?;
        manifest.output(out)?;
        println!("wrote {} completed descriptions to {}", completed.len(), out.display());
    }
    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "lint", args.out.as_deref()))?;
    Ok(())
}

pub fn study(args: StudyArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("study", &args)?;
    manifest.seed(args.seed);

    let trace = read_trace_file(&args.trace)?;
    manifest.input(&args.trace)?;
    let descriptions = read_descriptions(&args.desc)?;
    manifest.input(&args.desc)?;

    let mut factory =
        |description: &AttackDescription| -> l3watch::Result<Box<dyn WindowDetector>> {
            build_detector(&args.detector, description)
        };
    let study = sensitivity_study(
        &trace,
        &descriptions,
        &mut factory,
        args.unclassified_policy.into(),
        args.seed,
    )?;

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let artifacts = [
        ("entries.csv", study_entries_csv(&study)),
        ("groups.csv", study_groups_csv(&study)),
        ("correlations.csv", study_correlations_csv(&study)),
        ("study.json", {
            let mut text = serde_json::to_string_pretty(&study)?;
            text.push('\n');
            text
        }),
    ];
    for (name, contents) in &artifacts {
        let path = args.out_dir.join(name);
        write_atomic(&path, contents.as_bytes())?;
        manifest.output(&path)?;
    }

    for group in &study.groups {
        println!(
            "{} n={} mean_f1={:.3} median_f1={:.3} ci95=[{:.3},{:.3}] perfect={:.2}",
            group.group.as_str(),
            group.n,
            group.mean_f1,
            group.median_f1,
            group.ci95_mean_f1.0,
            group.ci95_mean_f1.1,
            group.perfect_fraction
        );
    }
    print_correlation("spearman(predicates,f1)", &study.spearman_predicates_f1);
    print_correlation("kendall(predicates,f1)", &study.kendall_predicates_f1);
    print_correlation("spearman(length,f1)", &study.spearman_length_f1);
    println!("mean_completion_gain={:.3}", study.mean_completion_gain);

    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(
        args.manifest,
        "study",
        Some(&args.out_dir.join("study.json")),
    ))?;
    Ok(())
}

pub fn report(args: ReportArgs) -> anyhow::Result<()> {
    let started = Instant::now();
    let mut manifest = RunManifest::new("report", &args)?;

    let text = std::fs::read_to_string(&args.results)
        .with_context(|| format!("reading {}", args.results.display()))?;
    manifest.input(&args.results)?;
    let results: Vec<RunResult> = match serde_json::from_str(&text) {
        Ok(list) => list,
        Err(_) => vec![serde_json::from_str(&text).with_context(|| {
            format!("{} is neither a run list nor a single run", args.results.display())
        })?],
    };

    std::fs::create_dir_all(&args.out_dir)
        .with_context(|| format!("creating {}", args.out_dir.display()))?;
    let sweep_path = args.out_dir.join("sweep.csv");
    write_atomic(&sweep_path, sweep_csv(&results)?.as_bytes())?;
    manifest.output(&sweep_path)?;
    println!("wrote {} rows to {}", results.len(), sweep_path.display());

    let bound = Duration::from_millis(args.bound_ms);
    let columns: Vec<LatencyColumn> = results
        .iter()
        .filter_map(|r| {
            r.latency_stats(bound)
                .ok()
                .map(|stats| LatencyColumn::from_stats(format!("w{}", r.w), &stats))
        })
        .collect();
    if !columns.is_empty() {
        let latency_path = args.out_dir.join("latency.csv");
        write_atomic(&latency_path, render_latency_table(&LatencyTable { columns }).as_bytes())?;
        manifest.output(&latency_path)?;
        println!("wrote latency table to {}", latency_path.display());
    }

    manifest.timing("total", started.elapsed());
    manifest.write(&manifest_path(args.manifest, "report", Some(&sweep_path)))?;
    Ok(())
}

/// Where verdict latencies come from, named in the latency report line.
#[derive(Clone, Copy)]
enum LatencyKind {
    Compute,
    Replay,
    Request,
}

impl LatencyKind {
    fn as_str(self) -> &'static str {
        match self {
            LatencyKind::Compute => "compute",
            LatencyKind::Replay => "replay",
            LatencyKind::Request => "request",
        }
    }
}

fn latency_kind(args: &DetectorArgs) -> LatencyKind {
    if args.detector == "oracle" {
        LatencyKind::Compute
    } else if args.detector.starts_with("mock:") {
        LatencyKind::Replay
    } else {
        LatencyKind::Request
    }
}

/// Instantiates the selected detector. Errors use the library's
/// configuration variant so sweep and study factories can pass them through.
fn build_detector(
    args: &DetectorArgs,
    description: &AttackDescription,
) -> l3watch::Result<Box<dyn WindowDetector>> {
    if args.detector == "oracle" {
        let mut oracle = OracleDetector::new();
        if args.no_prev {
            oracle = oracle.without_previous();
        }
        return Ok(Box::new(oracle));
    }
    if let Some(path) = args.detector.strip_prefix("mock:") {
        let backend = ReplayBackend::load(Path::new(path))?;
        let detector = ChatDetector::new(
            backend,
            backend_config(args, String::new()),
            description.clone(),
            args.mode.into(),
        )?;
        return Ok(Box::new(detector));
    }
    if args.detector == "chat" {
        let endpoint = args.endpoint.clone().ok_or_else(|| {
            Error::config("--endpoint is required with --detector chat")
        })?;
        let api_key = std::env::var(API_KEY_VAR).ok();
        let backend =
            HttpBackend::new(&endpoint, api_key, Duration::from_millis(args.timeout_ms))?;
        let detector = ChatDetector::new(
            backend,
            backend_config(args, endpoint),
            description.clone(),
            args.mode.into(),
        )?;
        return Ok(Box::new(detector));
    }
    Err(Error::config(format!(
        "unknown detector {:?}: expected oracle, mock:<file>, or chat",
        args.detector
    )))
}

fn backend_config(args: &DetectorArgs, endpoint: String) -> BackendConfig {
    BackendConfig {
        endpoint,
        model: args.model.clone(),
        temperature: 0.0,
        max_output_tokens: args.max_tokens,
        request_timeout: Duration::from_millis(args.timeout_ms),
        explanation_enabled: args.explain,
    }
}

fn description_from(desc: Option<&Path>) -> anyhow::Result<AttackDescription> {
    match desc {
        Some(path) => read_descriptions(path)?
            .into_iter()
            .next()
            .with_context(|| format!("no descriptions in {}", path.display())),
        None => Ok(AttackDescription::reference_blind_dos()),
    }
}

fn print_run(result: &RunResult, kind: LatencyKind, bound_ms: u64) {
    let c = &result.counts;
    let mut line = format!(
        "w={} windows={} attacked={} tp={} fp={} tn={} fn={} unclassified={} failed={}",
        result.w,
        result.windows,
        result.attacked_windows,
        c.true_positives,
        c.false_positives,
        c.true_negatives,
        c.false_negatives,
        c.unclassified,
        c.failed
    );
    match result.metrics() {
        Ok(m) => line.push_str(&format!(
            " accuracy={:.3} precision={:.3} recall={:.3} f1={:.3}",
            m.accuracy, m.precision, m.recall, m.f1
        )),
        Err(_) => line.push_str(" metrics=undefined"),
    }
    println!("{line}");
    match result.latency_stats(Duration::from_millis(bound_ms)) {
        Ok(stats) => println!(
            "latency[{}] mean={:.2}ms p95={:.2}ms p99={:.2}ms max={:.2}ms under_{}ms={:.1}%",
            kind.as_str(),
            stats.mean_ms,
            stats.p95_ms,
            stats.p99_ms,
            stats.max_ms,
            bound_ms,
            stats.frac_under_bound * 100.0
        ),
        Err(_) => println!("latency[{}] unavailable: no answered requests", kind.as_str()),
    }
}

fn print_correlation(name: &str, outcome: &CorrelationOutcome) {
    match outcome.value {
        Some(value) => println!("{name}={value:.3}"),
        None => println!(
            "{name}=undefined ({})",
            outcome.note.as_deref().unwrap_or("no value")
        ),
    }
}

fn group_label(group: AlignmentGroup) -> &'static str {
    match group {
        AlignmentGroup::DirectlyAligned => "Directly aligned",
        AlignmentGroup::CloselyAligned => "Closely aligned",
        AlignmentGroup::SomewhatAligned => "Somewhat aligned",
        AlignmentGroup::NotAligned => "Not aligned",
    }
}

fn coverage_flags(coverage: PredicateCoverage) -> String {
    let mut present = Vec::new();
    for (flag, name) in [
        (coverage.p1, "p1"),
        (coverage.p2, "p2"),
        (coverage.p3, "p3"),
        (coverage.p4, "p4"),
        (coverage.p5, "p5"),
        (coverage.p6, "p6"),
    ] {
        if flag {
            present.push(name);
        }
    }
    if present.is_empty() {
        "-".to_string()
    } else {
        present.join(",")
    }
}

fn write_results(path: &Path, results: &[RunResult]) -> anyhow::Result<()> {
    let mut text = serde_json::to_string_pretty(results).context("serializing results")?;
    text.push('\n');
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

/// One formatted window per JSON line, for eyeballing what a prompt will see.
#[derive(Serialize)]
struct WindowDump<'a> {
    position: u64,
    label: WindowLabel,
    history: Vec<&'a str>,
    new_message: &'a str,
    previous_same_tmsi: Option<&'a str>,
}

fn dump_windows(
    trace: &[TelemetryRecord],
    config: WindowConfig,
    path: &Path,
) -> anyhow::Result<()> {
    let windows = build_windows(trace, config)?;
    let mut text = String::new();
    for window in &windows {
        let dump = WindowDump {
            position: window.position,
            label: window.label,
            history: window.history.iter().map(|r| r.text.as_str()).collect(),
            new_message: &window.new_record.text,
            previous_same_tmsi: window.prev_same_tmsi.as_ref().map(|r| r.text.as_str()),
        };
        text.push_str(&serde_json::to_string(&dump).context("serializing window")?);
        text.push('\n');
    }
    write_atomic(path, text.as_bytes())?;
    Ok(())
}

fn manifest_path(overridden: Option<PathBuf>, command: &str, out: Option<&Path>) -> PathBuf {
    overridden.unwrap_or_else(|| default_manifest_path(command, out))
}

fn parse_positions(spec: &str) -> anyhow::Result<Vec<usize>> {
    spec.split(',')
        .map(str::trim)
        .filter(|token| !token.is_empty())
        .map(|token| {
            token
                .parse::<usize>()
                .with_context(|| format!("bad position {token:?}"))
        })
        .collect()
}

/// Window size spec: `3`, `1..10` (inclusive), or `1,3,5`.
fn parse_w_spec(spec: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((lo, hi)) = spec.split_once("..") {
        let lo: usize = lo.trim().parse().with_context(|| format!("bad bound {lo:?}"))?;
        let hi: usize = hi.trim().parse().with_context(|| format!("bad bound {hi:?}"))?;
        if lo > hi {
            bail!("empty window range {spec:?}");
        }
        return Ok((lo..=hi).collect());
    }
    spec.split(',')
        .map(str::trim)
        .filter(|token| !token.is_empty())
        .map(|token| {
            token
                .parse::<usize>()
                .with_context(|| format!("bad window size {token:?}"))
        })
        .collect()
}
