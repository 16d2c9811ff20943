//! Command implementations behind the `tartan` binary. Each `cmd_*` returns
//! the rendered report and an exit code; the binary only parses flags and
//! writes the result.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use crate::energy::{count_layer_events, energy, EnergyCoefficients};
use crate::error::{Error, Result};
use crate::explorer::{
    ideal_speedup_csv, load_evalset, load_weights, search_profile, AccuracyTarget, QuantizedModel,
};
use crate::functional::{ArchConfig, Engine, Fault, LayerKind};
use crate::netmodel::{
    fixture_dir, load_network, load_profile, profile_name, resolve_network, resolve_profile, save_profile,
    ACCURACY_LEVELS, IMAGENET_NETWORKS,
};
use crate::timing::{geomean, simulate_network, simulate_trt2b, wall_time_us, NetworkReport, DEFAULT_CLOCK_MHZ};
use crate::verify::{run_trials, TrialOutcome};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_VERIFY: i32 = 3;

/// Exit code for an error surfaced by a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Usage(_) => EXIT_USAGE,
        _ => EXIT_VALIDATION,
    }
}

/// `x` with four significant digits; integers of five or more digits print
/// in full.
pub fn sig4(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x}");
    }
    let mag = x.abs().log10().floor() as i32;
    let decimals = (3 - mag).max(0) as usize;
    let s = format!("{x:.decimals$}");
    if s.starts_with("-0") && s.trim_start_matches(['-', '0', '.']).is_empty() {
        s[1..].to_string()
    } else {
        s
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum OutputFormat {
    #[default]
    Csv,
    Table,
}

impl std::str::FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(Self::Csv),
            "table" => Ok(Self::Table),
            _ => Err(Error::Usage(format!("unknown format `{s}` (csv or table)"))),
        }
    }
}

#[derive(Clone, Debug)]
pub struct RunConfig {
    /// Network names or paths; several may be given for simulate and compare.
    pub networks: Vec<String>,
    /// Profile name or path per network. Empty means `<net>-100`.
    pub profiles: Vec<String>,
    pub engines: Vec<Engine>,
    pub bits_per_cycle: u8,
    pub tiles: usize,
    pub brick_size: usize,
    pub format: OutputFormat,
    pub out: Option<PathBuf>,
    pub seed: u64,
    pub clock_mhz: f64,
    pub coefficients: Option<PathBuf>,
    pub trials: u64,
    pub inject_fault: bool,
    pub weights: Option<PathBuf>,
    pub evalset: Option<PathBuf>,
    pub thresholds: Vec<f64>,
    pub accuracy_levels: Vec<String>,
}

impl Default for RunConfig {
    fn default() -> Self {
        let a = ArchConfig::default();
        Self {
            networks: Vec::new(),
            profiles: Vec::new(),
            engines: vec![Engine::Dadn, Engine::Trt],
            bits_per_cycle: a.bits_per_cycle,
            tiles: a.tiles,
            brick_size: a.brick_size,
            format: OutputFormat::Csv,
            out: None,
            seed: 0x7a27a,
            clock_mhz: DEFAULT_CLOCK_MHZ,
            coefficients: None,
            trials: 10_000,
            inject_fault: false,
            weights: None,
            evalset: None,
            thresholds: vec![1.0],
            accuracy_levels: ACCURACY_LEVELS.iter().map(|s| s.to_string()).collect(),
        }
    }
}

impl RunConfig {
    pub fn arch(&self) -> Result<ArchConfig> {
        let a = ArchConfig {
            tiles: self.tiles,
            brick_size: self.brick_size,
            ..ArchConfig::default()
        }
        .with_bits_per_cycle(self.bits_per_cycle);
        a.validate()?;
        Ok(a)
    }

    fn coefficients(&self) -> Result<EnergyCoefficients> {
        match &self.coefficients {
            Some(p) => EnergyCoefficients::load(p),
            None => EnergyCoefficients::calibration(),
        }
    }

    fn check(&self) -> Result<()> {
        if self.engines.is_empty() {
            return Err(Error::Usage("at least one engine is required".into()));
        }
        if self.clock_mhz.is_nan() || self.clock_mhz <= 0.0 {
            return Err(Error::Usage("clock must be positive".into()));
        }
        Ok(())
    }
}

/// Rendered command output.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CmdOutput {
    pub text: String,
    pub warnings: Vec<String>,
    pub code: i32,
}

impl CmdOutput {
    fn ok(text: String, warnings: Vec<String>) -> Self {
        Self {
            text,
            warnings,
            code: EXIT_OK,
        }
    }
}

/// Rows of strings rendered either as CSV or as a space-aligned table.
struct Table {
    header: Vec<&'static str>,
    rows: Vec<Vec<String>>,
}

impl Table {
    fn new(header: Vec<&'static str>) -> Self {
        Self { header, rows: Vec::new() }
    }

    fn render(&self, format: OutputFormat) -> String {
        let mut s = String::new();
        match format {
            OutputFormat::Csv => {
                s.push_str(&self.header.join(","));
                s.push('\n');
                for r in &self.rows {
                    s.push_str(&r.join(","));
                    s.push('\n');
                }
            }
            OutputFormat::Table => {
                let mut w: Vec<usize> = self.header.iter().map(|h| h.len()).collect();
                for r in &self.rows {
                    for (i, c) in r.iter().enumerate() {
                        w[i] = w[i].max(c.len());
                    }
                }
                let line = |cells: Vec<&str>| {
                    let parts: Vec<String> = cells
                        .iter()
                        .enumerate()
                        .map(|(i, c)| if i < 2 { format!("{c:<0$}", w[i]) } else { format!("{c:>0$}", w[i]) })
                        .collect();
                    parts.join("  ").trim_end().to_string() + "\n"
                };
                s.push_str(&line(self.header.clone()));
                for r in &self.rows {
                    s.push_str(&line(r.iter().map(String::as_str).collect()));
                }
            }
        }
        s
    }
}

fn network_and_profile(cfg: &RunConfig, i: usize) -> Result<(crate::netmodel::NetworkSpec, crate::netmodel::PrecisionProfile)> {
    let name = &cfg.networks[i];
    let net = load_network(resolve_network(name))?;
    let prof = match cfg.profiles.get(i) {
        Some(p) => p.clone(),
        None => profile_name(&net.name, "100"),
    };
    let profile = load_profile(resolve_profile(&prof), &net)?;
    Ok((net, profile))
}

fn kind_label(kind: Option<LayerKind>) -> &'static str {
    match kind {
        Some(LayerKind::Conv) => "CVL",
        Some(LayerKind::FullyConnected) => "FCL",
        _ => "all",
    }
}

/// Per-layer and per-group cycles, speedup over the baseline, dispatch
/// overhead, idle SIP fraction, energy efficiency over the baseline and wall
/// time, followed by geomean rows per engine and group.
pub fn cmd_simulate(cfg: &RunConfig) -> Result<CmdOutput> {
    cfg.check()?;
    if cfg.networks.is_empty() {
        return Err(Error::Usage("simulate needs --net".into()));
    }
    if !cfg.profiles.is_empty() && cfg.profiles.len() != cfg.networks.len() {
        return Err(Error::Usage("give one --profile per --net".into()));
    }
    let arch = cfg.arch()?;
    let coeffs = cfg.coefficients()?;
    let mut warnings = Vec::new();
    let mut t = Table::new(vec![
        "network",
        "layer",
        "engine",
        "cycles",
        "speedup",
        "overhead",
        "idle_fraction",
        "energy_ratio",
        "time_us",
    ]);
    let groups = [Some(LayerKind::Conv), Some(LayerKind::FullyConnected), None];
    let mut per_engine: Vec<Vec<[f64; 6]>> = vec![Vec::new(); cfg.engines.len()];
    for i in 0..cfg.networks.len() {
        let (net, profile) = network_and_profile(cfg, i)?;
        warnings.extend(net.validate_brick_alignment(&arch));
        for (ei, &engine) in cfg.engines.iter().enumerate() {
            let r = simulate_network(&net, &profile, &arch, engine)?;
            let layers: Vec<_> = net.compute_layers().collect();
            let mut ev = Vec::new();
            let mut base_ev = Vec::new();
            for ((l, c), b) in layers.iter().zip(&r.layers).zip(&r.baseline) {
                let e = count_layer_events(l, c, &arch);
                let be = count_layer_events(l, b, &arch);
                let ratio = energy(&be, Engine::Dadn, &coeffs) / energy(&e, engine, &coeffs);
                t.rows.push(vec![
                    net.name.clone(),
                    c.layer.clone(),
                    engine.to_string(),
                    c.total_cycles.to_string(),
                    sig4(b.total_cycles as f64 / c.total_cycles as f64),
                    sig4(c.dispatch_overhead_fraction),
                    sig4(c.idle_sip_fraction),
                    sig4(ratio),
                    sig4(wall_time_us(c.total_cycles, cfg.clock_mhz)),
                ]);
                ev.push((c.kind, e));
                base_ev.push((b.kind, be));
            }
            let mut agg = [0.0; 6];
            for (gi, kind) in groups.iter().enumerate() {
                let sum = |v: &[(LayerKind, crate::energy::EnergyEventCounts)]| {
                    let mut s = crate::energy::EnergyEventCounts::default();
                    for (k, e) in v {
                        if kind.is_none_or(|kk| kk == *k) {
                            s += *e;
                        }
                    }
                    s
                };
                let cycles = r.total_cycles(*kind);
                if cycles == 0 {
                    continue;
                }
                let ratio = energy(&sum(&base_ev), Engine::Dadn, &coeffs) / energy(&sum(&ev), engine, &coeffs);
                agg[gi] = r.speedup(*kind);
                agg[gi + 3] = ratio;
                t.rows.push(vec![
                    net.name.clone(),
                    kind_label(*kind).into(),
                    engine.to_string(),
                    cycles.to_string(),
                    sig4(r.speedup(*kind)),
                    sig4(r.dispatch_overhead_fraction(*kind)),
                    sig4(group_idle(&r, *kind)),
                    sig4(ratio),
                    sig4(wall_time_us(cycles, cfg.clock_mhz)),
                ]);
            }
            per_engine[ei].push(agg);
        }
    }
    for (ei, &engine) in cfg.engines.iter().enumerate() {
        for (gi, kind) in groups.iter().enumerate() {
            let rows = &per_engine[ei];
            if rows.iter().any(|a| a[gi] == 0.0) {
                continue;
            }
            t.rows.push(vec![
                "geomean".into(),
                kind_label(*kind).into(),
                engine.to_string(),
                String::new(),
                sig4(geomean(rows.iter().map(|a| a[gi]))),
                String::new(),
                String::new(),
                sig4(geomean(rows.iter().map(|a| a[gi + 3]))),
                String::new(),
            ]);
        }
    }
    let text = t.render(cfg.format);
    write_out(cfg.out.as_deref(), &text)?;
    Ok(CmdOutput::ok(text, warnings))
}

fn group_idle(r: &NetworkReport, kind: Option<LayerKind>) -> f64 {
    let (mut active, mut cap) = (0u64, 0u64);
    for l in r.layers.iter().filter(|l| kind.is_none_or(|k| k == l.kind)) {
        active += l.active_unit_cycles;
        cap += l.unit_capacity_cycles;
    }
    if cap == 0 {
        0.0
    } else {
        1.0 - active as f64 / cap as f64
    }
}

fn write_out(out: Option<&Path>, text: &str) -> Result<()> {
    if let Some(p) = out {
        std::fs::write(p, text).map_err(|e| Error::io(p, e))?;
    }
    Ok(())
}

fn threshold_label(thr: f64) -> String {
    format!("{}%", (thr * 100.0 * 1e6).round() / 1e6)
}

/// Searches one profile per threshold. With `out` set (a directory) writes
/// `<net>-<pct>.profile` files and `<net>-ideal.csv`; the returned text holds
/// the profiles followed by the ideal-speedup CSV either way.
pub fn cmd_explore(cfg: &RunConfig) -> Result<CmdOutput> {
    let [name] = cfg.networks.as_slice() else {
        return Err(Error::Usage("explore needs exactly one --net".into()));
    };
    if cfg.thresholds.is_empty() {
        return Err(Error::Usage("explore needs at least one --threshold".into()));
    }
    let net = load_network(resolve_network(name))?;
    let digits = fixture_dir().join("digits");
    let weights_path = cfg
        .weights
        .clone()
        .unwrap_or_else(|| digits.join(format!("{}.weights", net.name)));
    let eval_path = cfg.evalset.clone().unwrap_or_else(|| digits.join("eval.set"));
    let weights = load_weights(&weights_path, &net)?;
    let evalset = load_evalset(&eval_path)?;
    let model = QuantizedModel::new(&net, &weights, &evalset)?;
    let mut profiles = Vec::new();
    let mut text = String::new();
    for &thr in &cfg.thresholds {
        let base = crate::explorer::baseline_accuracy(&model, &evalset)?;
        let target = AccuracyTarget::new(base.fraction(), thr)?;
        let outcome = search_profile(&model, &evalset, &target)?;
        let _ = writeln!(
            text,
            "# target {} of {}/{}: reached {}/{} in {} evaluations",
            threshold_label(thr),
            base.correct,
            base.total,
            outcome.accuracy.correct,
            outcome.accuracy.total,
            outcome.evaluations
        );
        text.push_str(&outcome.profile.to_string());
        text.push('\n');
        profiles.push(outcome.profile);
    }
    let rows: Vec<_> = profiles.iter().map(|p| (&net, p)).collect();
    let csv = ideal_speedup_csv(&rows, 16);
    text.push_str(&csv);
    if let Some(dir) = &cfg.out {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        for (p, &thr) in profiles.iter().zip(&cfg.thresholds) {
            let pct = threshold_label(thr);
            save_profile(dir.join(format!("{}-{}.profile", net.name, pct.trim_end_matches('%'))), p)?;
        }
        let path = dir.join(format!("{}-ideal.csv", net.name));
        std::fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
    }
    Ok(CmdOutput::ok(text, Vec::new()))
}

/// Random bit-serial versus bit-parallel equivalence trials.
pub fn cmd_verify(cfg: &RunConfig) -> Result<CmdOutput> {
    let mut warnings = Vec::new();
    if cfg.trials == 0 {
        warnings.push("0 trials requested; nothing was checked".to_string());
    }
    let fault = cfg.inject_fault.then_some(Fault::NoMsbNegation);
    let (text, code) = match run_trials(cfg.trials, cfg.seed, fault)? {
        TrialOutcome::Passed { trials } => (format!("verify: {trials} trials passed (seed {})\n", cfg.seed), EXIT_OK),
        TrialOutcome::Failed {
            trial,
            seed,
            case,
            mismatch,
        } => (
            format!(
                "verify: mismatch at trial {trial} (seed {seed})\n  minimized case: {case}\n  first difference: {mismatch}\n"
            ),
            EXIT_VERIFY,
        ),
    };
    write_out(cfg.out.as_deref(), &text)?;
    Ok(CmdOutput { text, warnings, code })
}

/// Summary across networks and accuracy levels: STR and TRT group speedups,
/// TRT energy efficiency and dispatch overhead, with geomean rows. With more
/// than one bit per cycle, a second block compares the multi-bit TRT against
/// the baseline and 1-bit TRT.
pub fn cmd_compare(cfg: &RunConfig) -> Result<CmdOutput> {
    cfg.check()?;
    let arch = cfg.arch()?;
    let one_bit = arch.with_bits_per_cycle(1);
    let coeffs = cfg.coefficients()?;
    let nets: Vec<String> = if cfg.networks.is_empty() {
        IMAGENET_NETWORKS.iter().map(|s| s.to_string()).collect()
    } else {
        cfg.networks.clone()
    };
    let mut t = Table::new(vec![
        "accuracy",
        "network",
        "str_cvl",
        "str_fcl",
        "trt_cvl",
        "trt_fcl",
        "trt_cvl_efficiency",
        "trt_fcl_efficiency",
        "trt_fcl_dispatch",
    ]);
    let mut multi = Table::new(vec![
        "accuracy",
        "network",
        "cvl_vs_dadn",
        "fcl_vs_dadn",
        "cvl_vs_1bit",
        "fcl_vs_1bit",
    ]);
    let cvl = Some(LayerKind::Conv);
    let fcl = Some(LayerKind::FullyConnected);
    for level in &cfg.accuracy_levels {
        let mut cols: Vec<Vec<f64>> = vec![Vec::new(); 6];
        let mut mcols: Vec<Vec<f64>> = vec![Vec::new(); 4];
        for name in &nets {
            let net = load_network(resolve_network(name))?;
            let profile = load_profile(resolve_profile(&profile_name(&net.name, level)), &net)?;
            let s = simulate_network(&net, &profile, &one_bit, Engine::Str)?;
            let r = simulate_network(&net, &profile, &one_bit, Engine::Trt)?;
            let trt_e = crate::energy::count_events(&net, &profile, &one_bit, Engine::Trt)?;
            let base_e = crate::energy::count_events(&net, &profile, &one_bit, Engine::Dadn)?;
            let eff = |k| crate::energy::report_efficiency(&trt_e, &base_e, k, &coeffs);
            let vals = [s.speedup(cvl), s.speedup(fcl), r.speedup(cvl), r.speedup(fcl), eff(cvl)?, eff(fcl)?];
            let mut row = vec![format!("{level}%"), net.name.clone()];
            row.extend(vals.iter().map(|&v| sig4(v)));
            row.push(sig4(r.dispatch_overhead_fraction(fcl)));
            t.rows.push(row);
            for (c, v) in cols.iter_mut().zip(vals) {
                c.push(v);
            }
            if arch.bits_per_cycle > 1 {
                let m = simulate_trt2b(&net, &profile, &arch)?;
                let mv = [m.cvl_vs_dadn, m.fcl_vs_dadn, m.cvl_vs_1bit, m.fcl_vs_1bit];
                let mut row = vec![format!("{level}%"), net.name.clone()];
                row.extend(mv.iter().map(|&v| sig4(v)));
                multi.rows.push(row);
                for (c, v) in mcols.iter_mut().zip(mv) {
                    c.push(v);
                }
            }
        }
        let mut row = vec![format!("{level}%"), "geomean".into()];
        row.extend(cols.iter().map(|c| sig4(geomean(c.iter().copied()))));
        row.push(String::new());
        t.rows.push(row);
        if arch.bits_per_cycle > 1 {
            // Relative changes average as geomeans of the ratios.
            let mut row = vec![format!("{level}%"), "geomean".into()];
            row.extend(mcols.iter().map(|c| sig4(geomean(c.iter().map(|v| 1.0 + v)) - 1.0)));
            multi.rows.push(row);
        }
    }
    let mut text = t.render(cfg.format);
    if arch.bits_per_cycle > 1 {
        text.push('\n');
        text.push_str(&multi.render(cfg.format));
    }
    write_out(cfg.out.as_deref(), &text)?;
    Ok(CmdOutput::ok(text, Vec::new()))
}

/// Comma-separated engine list.
pub fn parse_engines(s: &str) -> Result<Vec<Engine>> {
    let mut v = Vec::new();
    for part in s.split(',').map(str::trim).filter(|p| !p.is_empty()) {
        let e: Engine = part.parse()?;
        if !v.contains(&e) {
            v.push(e);
        }
    }
    if v.is_empty() {
        return Err(Error::Usage("at least one engine is required".into()));
    }
    Ok(v)
}
