//! Command-line front end for the microstate laboratory.
//!
//! Subcommands: `sample`, `dim`, `cover`, `orbit-dist`, `mf-check`,
//! `free-product`, `battery`. Every run takes an explicit seed — the tool
//! refuses to invent entropy — and reports embed the resolved
//! configuration, so outputs are bit-identical given the same inputs.
//!
//! Exit codes: 0 pass, 2 quantitative fail with a report still written,
//! 1 usage or I/O error.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::json;

use freedim::covering::{brute_force_cover, greedy_net, max_packing, CoveringEstimate, Metric, PointCloud};
use freedim::dimension::{
    delta_top_exponent, k2_tracial_exponent, ktop2_exponent, orbit_capacity, DimensionReport,
    TraceSpec,
};
use freedim::matrixcore::{orbit_distance, read_tuple, sorted_spectrum_distance, write_tuple, OrbitOpts};
use freedim::mfcheck::{
    build_free_product_model, check_approximation_property, check_norm_convergence,
    two_projection_oracle, ModelSequence, Trend,
};
use freedim::microstates::{
    exact_witness, load_presentation, membership_defect, sample_penalty, target_norms,
    MicrostateParams, Presentation,
};
use freedim::ncpoly::{default_battery, write_battery, NcPolynomial, PolyBattery};

#[derive(Parser)]
#[command(name = "freedim", version, about = "Norm-microstate laboratory: samplers, covering estimators, dimension exponents, matrix-model checks")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Sample microstates and write HTUP1 files with a defect report.
    Sample(SampleArgs),
    /// Run a dimension estimator and emit its report.
    Dim(DimArgs),
    /// Covering/packing estimates over sampled clouds or brute-force grids.
    Cover(CoverArgs),
    /// Unitary-orbit distance between two tuple files.
    OrbitDist(OrbitArgs),
    /// Approximation-property and norm-convergence checks.
    MfCheck(MfArgs),
    /// Build a free-product model sequence and compare against the
    /// two-projection oracle.
    FreeProduct(FreeProductArgs),
    /// Emit a default word battery.
    Battery(BatteryArgs),
    /// Run a subcommand from a JSON config file whose fields mirror the
    /// flags, e.g. {"cmd": "sample", "presentation": "p.json", ...}.
    Run(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    #[arg(long)]
    config: PathBuf,
}

/// Config-file mirror of the subcommands.
#[derive(Serialize, Deserialize)]
#[serde(tag = "cmd", rename_all = "kebab-case")]
enum ConfigCmd {
    Sample(SampleArgs),
    Dim(DimArgs),
    Cover(CoverArgs),
    OrbitDist(OrbitArgs),
    MfCheck(MfArgs),
    FreeProduct(FreeProductArgs),
    Battery(BatteryArgs),
}

fn cmd_run(a: &RunArgs) -> Result<u8, CliError> {
    let text = std::fs::read_to_string(&a.config)
        .map_err(|e| CliError(format!("{}: {e}", a.config.display())))?;
    let cfg: ConfigCmd =
        serde_json::from_str(&text).map_err(|e| CliError(format!("bad config: {e}")))?;
    match &cfg {
        ConfigCmd::Sample(args) => cmd_sample(args),
        ConfigCmd::Dim(args) => cmd_dim(args),
        ConfigCmd::Cover(args) => cmd_cover(args),
        ConfigCmd::OrbitDist(args) => cmd_orbit_dist(args),
        ConfigCmd::MfCheck(args) => cmd_mf_check(args),
        ConfigCmd::FreeProduct(args) => cmd_free_product(args),
        ConfigCmd::Battery(args) => cmd_battery(args),
    }
}


fn d_one() -> usize { 1 }
fn d_iters() -> usize { 600 }
fn d_degree3() -> usize { 3 }
fn d_degree4() -> usize { 4 }
fn d_count64() -> usize { 64 }
fn d_restarts() -> usize { 8 }
fn d_omega() -> f64 { 0.05 }
fn d_eps() -> f64 { 0.05 }
fn d_grid_step() -> f64 { 0.05 }
fn d_tol() -> f64 { 1e-10 }
fn d_metric() -> String { "trace2".into() }
fn d_format() -> String { "table".into() }

#[derive(Args, Serialize, Deserialize, Clone)]
struct SampleArgs {
    /// JSON presentation file.
    #[arg(long)]
    presentation: PathBuf,
    /// Microstate dimension.
    #[arg(long)]
    k: usize,
    /// Membership tolerance ε.
    #[arg(long)]
    eps: f64,
    /// Number of samples.
    #[arg(long, default_value_t = 1)]
    #[serde(default = "d_one")]
    count: usize,
    /// Seed (mandatory; drives every random draw).
    #[arg(long)]
    seed: u64,
    /// Penalty-descent iterations per sample.
    #[arg(long, default_value_t = 600)]
    #[serde(default = "d_iters")]
    iters: usize,
    /// Battery degree.
    #[arg(long, default_value_t = 3)]
    #[serde(default = "d_degree3")]
    degree: usize,
    /// Output directory for HTUP1 files and the report.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct DimArgs {
    /// delta_top | ktop2 | k2 | capacity
    #[arg(long)]
    mode: String,
    #[arg(long)]
    presentation: PathBuf,
    /// Comma-separated dimensions, e.g. 8,12,16.
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    /// Trace file (JSON) for the tracial modes.
    #[arg(long)]
    traces: Option<PathBuf>,
    /// Orbit-ball radius for the tracial modes.
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "d_omega")]
    omega: f64,
    #[arg(long)]
    seed: u64,
    /// Output file (JSON report); table to stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// json | table
    #[arg(long, default_value = "table")]
    #[serde(default = "d_format")]
    format: String,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct CoverArgs {
    #[arg(long)]
    presentation: PathBuf,
    #[arg(long)]
    k: usize,
    /// Cloud size for sampled estimates.
    #[arg(long, default_value_t = 64)]
    #[serde(default = "d_count64")]
    count: usize,
    /// Strictly decreasing scales, e.g. 0.5,0.25,0.1.
    #[arg(long, value_delimiter = ',')]
    omega_grid: Vec<f64>,
    /// op_norm | trace2 | orbit2
    #[arg(long, default_value = "trace2")]
    #[serde(default = "d_metric")]
    metric: String,
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "d_eps")]
    eps: f64,
    #[arg(long)]
    seed: u64,
    /// Use the exhaustive grid route (k ≤ 3, spectrum presentations).
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    brute_force: bool,
    /// Grid step for the brute-force route.
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "d_grid_step")]
    grid_step: f64,
    /// CSV output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct OrbitArgs {
    file_a: PathBuf,
    file_b: PathBuf,
    #[arg(long, default_value_t = 8)]
    #[serde(default = "d_restarts")]
    restarts: usize,
    #[arg(long, default_value_t = 1e-10)]
    #[serde(default = "d_tol")]
    tol: f64,
    #[arg(long)]
    seed: u64,
    /// Also print the sorted-spectrum oracle (single matrices only).
    #[arg(long, default_value_t = false)]
    #[serde(default)]
    oracle: bool,
    /// Write the witness unitary as an HTUP1-style file.
    #[arg(long)]
    witness: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct MfArgs {
    #[arg(long)]
    presentation: PathBuf,
    /// approx | converge
    #[arg(long)]
    mode: String,
    #[arg(long, value_delimiter = ',')]
    k_list: Vec<usize>,
    #[arg(long, default_value_t = 0.05)]
    #[serde(default = "d_eps")]
    eps: f64,
    #[arg(long)]
    seed: u64,
    #[arg(long, default_value_t = 3)]
    #[serde(default = "d_degree3")]
    degree: usize,
    #[arg(long, default_value_t = 600)]
    #[serde(default = "d_iters")]
    iters: usize,
    /// Explicit model files (HTUP1) for converge mode; exact witnesses at
    /// the k-list are used when absent.
    #[arg(long, value_delimiter = ',')]
    models: Option<Vec<PathBuf>>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct FreeProductArgs {
    /// Presentation file; must be of free_product kind.
    #[arg(long)]
    presentation: PathBuf,
    #[arg(long, value_delimiter = ',')]
    sizes: Vec<usize>,
    #[arg(long)]
    seed: u64,
    /// Word battery degree for the comparison.
    #[arg(long, default_value_t = 4)]
    #[serde(default = "d_degree4")]
    degree: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Serialize, Deserialize, Clone)]
struct BatteryArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    degree: usize,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Debug)]
struct CliError(String);

impl<E: std::error::Error> From<E> for CliError {
    fn from(e: E) -> Self {
        CliError(e.to_string())
    }
}

fn tool_meta<T: Serialize>(config: &T) -> serde_json::Value {
    json!({
        "tool_version": env!("CARGO_PKG_VERSION"),
        "config": serde_json::to_value(config).unwrap_or(serde_json::Value::Null),
    })
}

/// Print without panicking when the consumer closes the pipe early.
fn print_line(text: &str) {
    use std::io::Write;
    let mut out = std::io::stdout().lock();
    let _ = writeln!(out, "{text}");
}

fn write_or_print(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError(format!("{}: {e}", p.display()))),
        None => {
            print_line(text);
            Ok(())
        }
    }
}

fn cmd_sample(a: &SampleArgs) -> Result<u8, CliError> {
    let p = load_presentation(&a.presentation)?;
    let battery = p.recommended_battery(a.degree)?;
    let params = MicrostateParams::new(a.k, a.eps, p.default_radius(), battery.clone());
    let targets = target_norms(&p, &battery)?;
    std::fs::create_dir_all(&a.out).map_err(|e| CliError(e.to_string()))?;
    let mut rows = Vec::new();
    let mut all_pass = true;
    for i in 0..a.count {
        let seed = a.seed.wrapping_add(i as u64);
        let mut best = sample_penalty(&p, &params, seed, a.iters)?;
        if let Some(w) = exact_witness(&p, a.k, seed) {
            // Conjugating by a seeded Haar unitary keeps the defect and
            // makes repeated samples distinct representatives.
            let w = w.conjugate(&freedim::matrixcore::haar_unitary(a.k, seed));
            let (d, _) = membership_defect(&w, &targets.values, &params)?;
            if d < best.defect {
                best.defect = d;
                best.tuple = w;
            }
        }
        let path = a.out.join(format!("sample_{i}.htup"));
        write_tuple(&path, &best.tuple)?;
        all_pass &= best.defect <= a.eps;
        rows.push(json!({
            "index": i,
            "seed": seed,
            "file": path.file_name().unwrap().to_string_lossy(),
            "defect": best.defect,
            "pass": best.defect <= a.eps,
        }));
    }
    let report = json!({
        "meta": tool_meta(a),
        "targets_uncertain": targets.uncertain,
        "samples": rows,
        "pass": all_pass,
    });
    std::fs::write(
        a.out.join("report.json"),
        serde_json::to_string_pretty(&report).unwrap(),
    )
    .map_err(|e| CliError(e.to_string()))?;
    Ok(if all_pass { 0 } else { 2 })
}

fn load_traces(path: &Path) -> Result<Vec<TraceSpec>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError(e.to_string()))?;
    let v: serde_json::Value = serde_json::from_str(&text).map_err(|e| CliError(e.to_string()))?;
    let arr = v
        .as_array()
        .ok_or_else(|| CliError("trace file must be a JSON array".into()))?;
    let mut out = Vec::new();
    for t in arr {
        let points: Vec<f64> = t["points"]
            .as_array()
            .ok_or_else(|| CliError("trace needs \"points\"".into()))?
            .iter()
            .filter_map(|x| x.as_f64())
            .collect();
        let weights: Vec<f64> = t["weights"]
            .as_array()
            .ok_or_else(|| CliError("trace needs \"weights\"".into()))?
            .iter()
            .filter_map(|x| x.as_f64())
            .collect();
        let degree = t["degree"].as_u64().unwrap_or(3) as usize;
        out.push(TraceSpec::from_spectrum_weights(&points, &weights, degree)?);
    }
    Ok(out)
}

fn emit_dim_report(a: &DimArgs, report: &DimensionReport) -> Result<(), CliError> {
    if a.format == "json" || a.out.is_some() {
        let v = json!({
            "meta": tool_meta(a),
            "report": report.to_json(),
        });
        write_or_print(&a.out, &serde_json::to_string_pretty(&v).unwrap())
    } else {
        write_or_print(&a.out, &report.render_table())
    }
}

fn cmd_dim(a: &DimArgs) -> Result<u8, CliError> {
    let p = load_presentation(&a.presentation)?;
    let report = match a.mode.as_str() {
        "delta_top" => delta_top_exponent(&p, &a.k_list)?,
        "ktop2" => ktop2_exponent(&p, &a.k_list)?,
        "k2" => {
            let traces = load_traces(
                a.traces
                    .as_ref()
                    .ok_or_else(|| CliError("mode k2 needs --traces".into()))?,
            )?;
            let first = traces
                .into_iter()
                .next()
                .ok_or_else(|| CliError("trace file is empty".into()))?;
            k2_tracial_exponent(&p, &first, &a.k_list, a.omega)?
        }
        "capacity" => {
            let traces = load_traces(
                a.traces
                    .as_ref()
                    .ok_or_else(|| CliError("mode capacity needs --traces".into()))?,
            )?;
            orbit_capacity(&p, &traces, &a.k_list, a.omega)?
        }
        other => return Err(CliError(format!("unknown mode {other:?}"))),
    };
    emit_dim_report(a, &report)?;
    Ok(0)
}

fn metric_from_name(s: &str) -> Result<Metric, CliError> {
    match s {
        "op_norm" => Ok(Metric::OpNorm),
        "trace2" => Ok(Metric::Trace2),
        "orbit2" => Ok(Metric::Orbit2),
        other => Err(CliError(format!("unknown metric {other:?}"))),
    }
}

fn cmd_cover(a: &CoverArgs) -> Result<u8, CliError> {
    let p = load_presentation(&a.presentation)?;
    let metric = metric_from_name(&a.metric)?;
    if a.omega_grid.is_empty() || a.omega_grid.windows(2).any(|w| w[1] >= w[0]) {
        return Err(CliError(
            "omega grid must be strictly decreasing positives".into(),
        ));
    }
    let mut csv = String::from(CoveringEstimate::CSV_HEADER);
    csv.push('\n');
    if a.brute_force {
        for &omega in &a.omega_grid {
            let est = brute_force_cover(&p, a.k, omega, a.eps, metric, a.grid_step)?;
            csv.push_str(&est.csv_row(a.k, a.eps, a.seed));
            csv.push('\n');
        }
    } else {
        let battery = p.recommended_battery(3)?;
        let params = MicrostateParams::new(a.k, a.eps, p.default_radius(), battery);
        let mut pts = Vec::with_capacity(a.count);
        for i in 0..a.count {
            let seed = a.seed.wrapping_add(i as u64);
            let ms = sample_penalty(&p, &params, seed, 200)?;
            pts.push(ms.tuple);
        }
        let cloud = PointCloud::new(pts, "penalty samples")?;
        let opts = OrbitOpts {
            seed: a.seed,
            ..OrbitOpts::default()
        };
        for &omega in &a.omega_grid {
            let net = greedy_net(&cloud, omega, metric, &opts)?;
            let packing2 = max_packing(&cloud, 2.0 * omega, metric, &opts)?;
            let est = CoveringEstimate {
                omega,
                metric,
                log_lower: (packing2.len() as f64).ln(),
                log_upper: (net.len() as f64).ln(),
                num_points: cloud.len(),
                one_sided: metric == Metric::Orbit2,
                grid_slack: 0.0,
            };
            csv.push_str(&est.csv_row(a.k, a.eps, a.seed));
            csv.push('\n');
        }
    }
    write_or_print(&a.out, csv.trim_end())?;
    Ok(0)
}

fn cmd_orbit_dist(a: &OrbitArgs) -> Result<u8, CliError> {
    let ta = read_tuple(&a.file_a)?;
    let tb = read_tuple(&a.file_b)?;
    let opts = OrbitOpts {
        restarts: a.restarts,
        tolerance: a.tol,
        seed: a.seed,
        ..OrbitOpts::default()
    };
    let (d, w) = orbit_distance(&ta, &tb, &opts)?;
    print_line(&format!("orbit_distance {d:.17e}"));
    if a.oracle {
        if ta.len() != 1 {
            return Err(CliError(
                "--oracle applies to single-matrix tuples only".into(),
            ));
        }
        let oracle = sorted_spectrum_distance(ta.get(0), tb.get(0))?;
        print_line(&format!("sorted_spectrum {oracle:.17e}"));
        print_line(&format!("gap {:.17e}", (d - oracle).abs()));
    }
    if let Some(path) = &a.witness {
        let as_tuple = freedim::matrixcore::MatrixTuple::new(vec![
            freedim::matrixcore::HermitianMatrix::new(w.matrix().clone() + w.matrix().adjoint())
                .map_err(|e| CliError(e.to_string()))?,
        ])
        .map_err(|e| CliError(e.to_string()))?;
        // The witness is unitary, not Hermitian; store re/im parts in two
        // Hermitian-symmetrized blocks is lossy, so write the raw matrix
        // instead using the same numeric format.
        drop(as_tuple);
        let mut text = format!("UNIT1 {}\n", w.dim());
        for i in 0..w.dim() {
            for j in 0..w.dim() {
                let c = w.matrix()[(i, j)];
                text.push_str(&format!("{:.17e} {:.17e} ", c.re, c.im));
            }
            text.push('\n');
        }
        std::fs::write(path, text).map_err(|e| CliError(e.to_string()))?;
    }
    Ok(0)
}

fn cmd_mf_check(a: &MfArgs) -> Result<u8, CliError> {
    let p = load_presentation(&a.presentation)?;
    let battery = p.recommended_battery(a.degree)?;
    match a.mode.as_str() {
        "approx" => {
            let report =
                check_approximation_property(&p, &a.k_list, a.eps, &battery, a.seed, a.iters)?;
            let rows: Vec<serde_json::Value> = report
                .per_k
                .iter()
                .map(|(k, d, pass)| json!({"k": k, "defect": d, "pass": pass}))
                .collect();
            let v = json!({
                "meta": tool_meta(a),
                "mode": "approx",
                "per_k": rows,
                "pass": report.overall_pass,
            });
            write_or_print(&a.out, &serde_json::to_string_pretty(&v).unwrap())?;
            Ok(if report.overall_pass { 0 } else { 2 })
        }
        "converge" => {
            let models: Vec<(usize, freedim::matrixcore::MatrixTuple)> = match &a.models {
                Some(paths) => {
                    let mut ms = Vec::new();
                    for path in paths {
                        let t = read_tuple(path)?;
                        ms.push((t.dim(), t));
                    }
                    ms
                }
                None => {
                    let mut ms = Vec::new();
                    for &k in &a.k_list {
                        if let Some(w) = exact_witness(&p, k, a.seed) {
                            ms.push((k, w));
                        }
                    }
                    ms
                }
            };
            let seq = ModelSequence::new(models, p.clone())?;
            let report = check_norm_convergence(&seq, &battery)?;
            let trend = match report.trend {
                Trend::Improving => "improving",
                Trend::Flat => "flat",
                Trend::Worsening => "worsening",
            };
            let v = json!({
                "meta": tool_meta(a),
                "mode": "converge",
                "max_final": report.max_final,
                "trend": trend,
                "uncertain_targets": report.uncertain_targets,
                "per_poly": report.per_poly.iter().enumerate().map(|(j, rows)| {
                    json!({"poly": j, "rows": rows})
                }).collect::<Vec<_>>(),
            });
            write_or_print(&a.out, &serde_json::to_string_pretty(&v).unwrap())?;
            Ok(if report.max_final <= a.eps { 0 } else { 2 })
        }
        other => Err(CliError(format!("unknown mf-check mode {other:?}"))),
    }
}

fn leg_model_sequence(p: &Presentation, max_size: usize) -> Result<ModelSequence, CliError> {
    let base = p
        .resolve_model()
        .ok_or_else(|| CliError("free-product legs must have resolvable models".into()))?;
    let k0 = base.dim();
    let mut models = vec![(k0, base)];
    if 2 * k0 <= max_size {
        if let Some(w) = exact_witness(p, 2 * k0, 0) {
            models.push((2 * k0, w));
        }
    }
    Ok(ModelSequence::new(models, p.clone())?)
}

fn cmd_free_product(a: &FreeProductArgs) -> Result<u8, CliError> {
    let p = load_presentation(&a.presentation)?;
    let (left, right) = match &p {
        Presentation::FreeProduct { left, right } => (left.as_ref(), right.as_ref()),
        _ => return Err(CliError("presentation must be of free_product kind".into())),
    };
    let max_size = *a.sizes.iter().max().unwrap_or(&0);
    let la = leg_model_sequence(left, max_size)?;
    let rb = leg_model_sequence(right, max_size)?;
    let seeds: Vec<u64> = (0..a.sizes.len() as u64).map(|i| a.seed + i).collect();
    let seq = build_free_product_model(&la, &rb, &a.sizes, &seeds)?;

    // Mixed-word battery compared against the exact oracle where it
    // applies (both legs spectra with ≤ 2 points).
    let words = mixed_words(a.degree);
    let oracle_ready = matches!(
        (left, right),
        (
            Presentation::Spectrum { points: lp },
            Presentation::Spectrum { points: rp }
        ) if lp.len() <= 2 && rp.len() <= 2
    );
    let mut rows = Vec::new();
    let mut one_sided_ok = true;
    for (size, tuple) in &seq.models {
        for w in &words {
            let val = freedim::matrixcore::operator_norm(&w.evaluate(tuple)?)?;
            if oracle_ready {
                let reparam = reparam_to_projections(left, right, w)?;
                let o = two_projection_oracle(&reparam)?;
                one_sided_ok &= val <= o.value + 1e-9;
                rows.push(json!({
                    "size": size, "word": w.to_string(), "norm": val,
                    "oracle": o.value, "deviation": (val - o.value).abs(),
                }));
            } else {
                rows.push(json!({"size": size, "word": w.to_string(), "norm": val}));
            }
        }
    }
    let v = json!({
        "meta": tool_meta(a),
        "oracle": oracle_ready,
        "one_sided_ok": one_sided_ok,
        "rows": rows,
    });
    write_or_print(&a.out, &serde_json::to_string_pretty(&v).unwrap())?;
    Ok(if one_sided_ok { 0 } else { 2 })
}

fn mixed_words(degree: usize) -> Vec<NcPolynomial> {
    // Alternating words up to the requested degree in two letters.
    let mut out = Vec::new();
    let x = NcPolynomial::letter(0, 2);
    let y = NcPolynomial::letter(1, 2);
    for d in 1..=degree.max(2) {
        let mut wx = NcPolynomial::one(2);
        let mut wy = NcPolynomial::one(2);
        for i in 0..d {
            if i % 2 == 0 {
                wx = wx.mul(&x);
                wy = wy.mul(&y);
            } else {
                wx = wx.mul(&y);
                wy = wy.mul(&x);
            }
        }
        out.push(wx);
        out.push(wy);
    }
    out
}

fn reparam_to_projections(
    left: &Presentation,
    right: &Presentation,
    w: &NcPolynomial,
) -> Result<NcPolynomial, CliError> {
    let sub = |p: &Presentation, letter: usize| -> NcPolynomial {
        match p {
            Presentation::Spectrum { points } if points.len() == 1 => {
                NcPolynomial::constant(freedim::C64::new(points[0], 0.0), 2)
            }
            Presentation::Spectrum { points } => NcPolynomial::constant(
                freedim::C64::new(points[0], 0.0),
                2,
            )
            .add(
                &NcPolynomial::letter(letter, 2)
                    .scale(freedim::C64::new(points[1] - points[0], 0.0)),
            ),
            _ => unreachable!("caller checked"),
        }
    };
    Ok(w.substitute(&[sub(left, 0), sub(right, 1)])?)
}

fn cmd_battery(a: &BatteryArgs) -> Result<u8, CliError> {
    let battery: PolyBattery = default_battery(a.n, a.degree)?;
    match &a.out {
        Some(path) => write_battery(path, &battery)?,
        None => {
            for p in battery.polys() {
                print_line(&p.to_string());
            }
        }
    }
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match &cli.cmd {
        Cmd::Sample(a) => cmd_sample(a),
        Cmd::Dim(a) => cmd_dim(a),
        Cmd::Cover(a) => cmd_cover(a),
        Cmd::OrbitDist(a) => cmd_orbit_dist(a),
        Cmd::MfCheck(a) => cmd_mf_check(a),
        Cmd::FreeProduct(a) => cmd_free_product(a),
        Cmd::Battery(a) => cmd_battery(a),
        Cmd::Run(a) => cmd_run(a),
    };
    match outcome {
        Ok(code) => ExitCode::from(code),
        Err(CliError(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
    }
}
