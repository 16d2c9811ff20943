//! One line per acceptance criterion; exits nonzero if any criterion fails.
//!
//! `cargo test --test acceptance` (or set `TARTAN_ACCEPTANCE_TRIALS` to
//! shorten the equivalence run while iterating).

use std::process::ExitCode;
use std::time::Instant;

use tartan::cli::{cmd_explore, cmd_simulate, RunConfig};
use tartan::energy::{count_layer_events, count_events, report_efficiency, EnergyCoefficients};
use tartan::explorer::{
    baseline_accuracy, ideal_speedup_table, is_locally_minimal, load_evalset, load_weights, search_profile,
    sweep_oracle, AccuracyTarget, QuantizedModel,
};
use tartan::functional::{ArchConfig, Dims, Engine, LayerKind, LayerSpec};
use tartan::netmodel::{
    fixture_dir, fixture_network, fixture_profile, profile_name, LayerPrecision, NetworkSpec, ACCURACY_LEVELS,
    IMAGENET_NETWORKS,
};
use tartan::timing::{cycles_layer, geomean, simulate_network, simulate_trt2b};
use tartan::verify::{run_trials, TrialOutcome};

type Check = Result<(bool, String), tartan::Error>;

const ALL_FIXTURES: [&str; 6] = ["alexnet", "vgg_s", "vgg_m", "vgg_19", "mlp", "cnn"];

/// Published ideal speedups: (network, level, CVL, FCL).
const IDEAL: [(&str, &str, f64, f64); 8] = [
    ("alexnet", "100", 2.38, 1.66),
    ("vgg_s", "100", 2.04, 1.64),
    ("vgg_m", "100", 2.23, 1.64),
    ("vgg_19", "100", 1.35, 1.63),
    ("alexnet", "99", 2.58, 1.85),
    ("vgg_s", "99", 2.04, 1.79),
    ("vgg_m", "99", 2.34, 1.80),
    ("vgg_19", "99", 1.57, 1.63),
];

fn within(x: f64, target: f64, tol: f64) -> bool {
    (x - target).abs() <= tol + 1e-9
}

fn functional_equivalence() -> Check {
    let n: u64 = std::env::var("TARTAN_ACCEPTANCE_TRIALS")
        .ok()
        .and_then(|s| s.parse().ok())
        .unwrap_or(1_000_000);
    let start = Instant::now();
    let outcome = run_trials(n, 0x5eed_7a27, None)?;
    let secs = start.elapsed().as_secs_f64();
    Ok(match outcome {
        TrialOutcome::Passed { trials } => (
            trials >= 1_000_000 && secs < 300.0,
            format!("{trials} random cases bit-identical in {secs:.1} s (need >= 1000000 in < 300 s)"),
        ),
        TrialOutcome::Failed { trial, case, mismatch, .. } => {
            (false, format!("trial {trial}: {mismatch}; case {case}"))
        }
    })
}

fn parity() -> Check {
    let arch = ArchConfig::default();
    let (mut total, mut equal, mut compute_equal) = (0, 0, 0);
    let mut worst = (String::new(), 0.0f64);
    for name in ALL_FIXTURES {
        let net = fixture_network(name)?;
        for l in net.compute_layers() {
            let d = cycles_layer(l, LayerPrecision::FULL, &arch, Engine::Dadn)?;
            let t = cycles_layer(l, LayerPrecision::FULL, &arch, Engine::Trt)?;
            total += 1;
            equal += (d.total_cycles == t.total_cycles) as usize;
            compute_equal += (d.total_cycles == t.compute_cycles) as usize;
            let rel = t.total_cycles as f64 / d.total_cycles as f64 - 1.0;
            if rel > worst.1 {
                worst = (format!("{name}/{}", l.name), rel);
            }
        }
    }
    Ok((
        equal == total,
        format!(
            "{equal}/{total} layers match exactly ({compute_equal}/{total} excluding exposed weight load); worst {} +{:.2}%",
            worst.0,
            100.0 * worst.1
        ),
    ))
}

fn ideal_speedups() -> Check {
    let mut ok = 0;
    let mut misses = Vec::new();
    for (name, level, cvl, fcl) in IDEAL {
        let net = fixture_network(name)?;
        let t = ideal_speedup_table(&net, &fixture_profile(&net, &profile_name(name, level))?, 16);
        for (group, got, want) in [("CVL", t.cvl.unwrap(), cvl), ("FCL", t.fcl.unwrap(), fcl)] {
            if within(got, want, 0.02) {
                ok += 1;
            } else {
                misses.push(format!("{name}-{level} {group} {got:.3} vs {want}"));
            }
        }
    }
    Ok((ok == 16, format!("{ok}/16 within 0.02; misses: {}", misses.join(", "))))
}

fn group_geomeans(level: &str) -> Result<(f64, f64), tartan::Error> {
    let arch = ArchConfig::default();
    let (mut c, mut f) = (Vec::new(), Vec::new());
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        let r = simulate_network(&net, &fixture_profile(&net, &profile_name(name, level))?, &arch, Engine::Trt)?;
        c.push(r.speedup(Some(LayerKind::Conv)));
        f.push(r.speedup(Some(LayerKind::FullyConnected)));
    }
    Ok((geomean(c), geomean(f)))
}

fn simulated_speedups() -> Check {
    let (c100, f100) = group_geomeans("100")?;
    let (c99, f99) = group_geomeans("99")?;
    let checks = [("FCL 100%", f100, 1.61), ("FCL 99%", f99, 1.73), ("CVL 100%", c100, 1.91), ("CVL 99%", c99, 2.05)];
    let ok = checks.iter().all(|&(_, got, want)| within(got, want, 0.05));
    let detail: Vec<String> = checks
        .iter()
        .map(|(label, got, want)| format!("{label} {got:.3} (target {want})"))
        .collect();
    Ok((ok, detail.join(", ")))
}

fn overhead_and_utilization() -> Check {
    let arch = ArchConfig::default();
    let (mut net_max, mut layer_max) = (0.0f64, 0.0f64);
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        for level in ACCURACY_LEVELS {
            let r = simulate_network(&net, &fixture_profile(&net, &profile_name(name, level))?, &arch, Engine::Trt)?;
            net_max = net_max.max(r.dispatch_overhead_fraction(Some(LayerKind::FullyConnected)));
            layer_max = layer_max.max(
                r.layers
                    .iter()
                    .filter(|l| l.kind == LayerKind::FullyConnected)
                    .map(|l| l.dispatch_overhead_fraction)
                    .fold(0.0, f64::max),
            );
        }
    }
    let fc = LayerSpec::fully_connected("fc8", Dims::new(1, 1, 4096), 1000);
    let idle = cycles_layer(&fc, LayerPrecision::joint(9), &arch, Engine::Trt)?.idle_sip_fraction;
    Ok((
        net_max < 0.02 && layer_max <= 0.06 && within(100.0 * idle, 2.3, 0.1),
        format!(
            "network FCL dispatch max {:.2}% (< 2%), layer max {:.2}% (<= 6%), 1000-output idle SIPs {:.2}% (2.3 +- 0.1)",
            100.0 * net_max,
            100.0 * layer_max,
            100.0 * idle
        ),
    ))
}

fn two_bit() -> Check {
    let arch = ArchConfig::two_bit();
    let (mut fd, mut f1, mut cd) = (Vec::new(), Vec::new(), Vec::new());
    let mut vgg19 = 0.0;
    let mut positive = Vec::new();
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        let m = simulate_trt2b(&net, &fixture_profile(&net, &profile_name(name, "100"))?, &arch)?;
        fd.push(1.0 + m.fcl_vs_dadn);
        f1.push(1.0 + m.fcl_vs_1bit);
        cd.push(1.0 + m.cvl_vs_dadn);
        if name == "vgg_19" {
            vgg19 = m.fcl_vs_1bit;
        }
        if m.fcl_vs_1bit > 0.0 {
            positive.push(format!("{name} {:+.2}%", 100.0 * m.fcl_vs_1bit));
        }
    }
    let (fd, f1, cd) = (100.0 * (geomean(fd) - 1.0), 100.0 * (geomean(f1) - 1.0), 100.0 * (geomean(cd) - 1.0));
    Ok((
        within(fd, 60.0, 3.0) && within(f1, -0.78, 1.0) && within(cd, 73.0, 5.0) && vgg19 > 0.0,
        format!(
            "FCL {fd:+.1}% vs baseline, {f1:+.2}% vs 1-bit; CVL {cd:+.1}%; vgg_19 FCL vs 1-bit {:+.2}% (needs > 0); 2-bit faster on: [{}]",
            100.0 * vgg19,
            positive.join(", ")
        ),
    ))
}

fn energy_properties() -> Check {
    let coeffs = EnergyCoefficients::calibration()?;
    let mut exact = true;
    for b in [1, 2] {
        let arch = ArchConfig::default().with_bits_per_cycle(b);
        for name in IMAGENET_NETWORKS {
            let net = fixture_network(name)?;
            let profile = fixture_profile(&net, &profile_name(name, "100"))?;
            for l in net.compute_layers() {
                let p = profile.get(&l.name).unwrap();
                let t = count_layer_events(l, &cycles_layer(l, p, &arch, Engine::Trt)?, &arch);
                let d = count_layer_events(l, &cycles_layer(l, p, &arch, Engine::Dadn)?, &arch);
                exact &= t.nm_bits_read * 16 == d.nm_bits_read * arch.effective_precision(p.pa) as u64;
            }
        }
    }
    let arch = ArchConfig::default();
    let mut eff = Vec::new();
    for name in IMAGENET_NETWORKS {
        let net = fixture_network(name)?;
        let profile = fixture_profile(&net, &profile_name(name, "100"))?;
        let t = count_events(&net, &profile, &arch, Engine::Trt)?;
        let d = count_events(&net, &profile, &arch, Engine::Dadn)?;
        eff.push(report_efficiency(&t, &d, Some(LayerKind::FullyConnected), &coeffs)?);
    }
    let g = geomean(eff);
    Ok((
        exact && (1.0..=1.12).contains(&g),
        format!(
            "activation traffic ratio exact for B in {{1,2}}: {exact}; FCL efficiency geomean {g:.3} in [1.00, 1.12] (calibration, not prediction)"
        ),
    ))
}

fn explorer_oracle() -> Check {
    let digits = fixture_dir().join("digits");
    let evalset = load_evalset(digits.join("eval.set"))?;
    let mut ok = true;
    let mut detail = Vec::new();
    for name in ["mlp", "cnn"] {
        let net: NetworkSpec = fixture_network(name)?;
        let weights = load_weights(digits.join(format!("{name}.weights")), &net)?;
        let model = QuantizedModel::new(&net, &weights, &evalset)?;
        let base = baseline_accuracy(&model, &evalset)?;
        let mut prev: Option<Vec<u8>> = None;
        for thr in [1.0, 0.99] {
            let target = AccuracyTarget::new(base.fraction(), thr)?;
            let out = search_profile(&model, &evalset, &target)?;
            let oracle = sweep_oracle(&model, &evalset, &target, &out.profile)?;
            let minimal = is_locally_minimal(&model, &evalset, &target, &out.profile)?;
            let bits: Vec<u8> = out.profile.precisions().map(|p| p.pa).collect();
            let monotone = prev.as_ref().is_none_or(|p| bits.iter().zip(p).all(|(a, b)| a <= b));
            ok &= oracle == out.profile && minimal && monotone;
            detail.push(format!(
                "{name}@{}% {} oracle={} minimal={minimal}",
                thr * 100.0,
                bits.iter().map(u8::to_string).collect::<Vec<_>>().join("-"),
                oracle == out.profile
            ));
            prev = Some(bits);
        }
    }
    Ok((ok, detail.join("; ")))
}

fn determinism() -> Check {
    let sim = RunConfig {
        networks: IMAGENET_NETWORKS.iter().map(|s| s.to_string()).collect(),
        engines: vec![Engine::Dadn, Engine::Str, Engine::Trt],
        ..RunConfig::default()
    };
    let a = cmd_simulate(&sim)?.text;
    let b = cmd_simulate(&sim)?.text;
    let dir = tempfile::tempdir().map_err(|e| tartan::Error::Usage(e.to_string()))?;
    let mut outs = Vec::new();
    for run in ["a", "b"] {
        let cfg = RunConfig {
            networks: vec!["mlp".into()],
            thresholds: vec![1.0, 0.99],
            out: Some(dir.path().join(run)),
            ..RunConfig::default()
        };
        let text = cmd_explore(&cfg)?.text;
        let mut files = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(dir.path().join(run))
            .map_err(|e| tartan::Error::Usage(e.to_string()))?
            .map(|e| e.unwrap().path())
            .collect();
        entries.sort();
        for p in entries {
            files.push((p.file_name().unwrap().to_owned(), std::fs::read(&p).unwrap()));
        }
        outs.push((text, files));
    }
    let explore_same = outs[0] == outs[1];
    Ok((
        a == b && explore_same,
        format!(
            "simulate identical: {}; explore identical (stdout and {} files): {explore_same}",
            a == b,
            outs[0].1.len()
        ),
    ))
}

type Criterion = (&'static str, fn() -> Check);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("functional oracle equivalence", functional_equivalence),
        ("16-bit parity with the baseline", parity),
        ("ideal speedups", ideal_speedups),
        ("simulated speedups", simulated_speedups),
        ("dispatch overhead and utilization", overhead_and_utilization),
        ("2-bit variant", two_bit),
        ("energy properties", energy_properties),
        ("explorer oracle", explorer_oracle),
        ("determinism", determinism),
    ];
    let mut failed = 0;
    for (i, (name, f)) in criteria.iter().enumerate() {
        let (ok, detail) = match f() {
            Ok(r) => r,
            Err(e) => (false, format!("error: {e}")),
        };
        failed += !ok as usize;
        println!("[{}] {}. {name}: {detail}", if ok { "PASS" } else { "FAIL" }, i + 1);
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
