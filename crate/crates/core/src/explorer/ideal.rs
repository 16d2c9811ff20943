use std::fmt::Write as _;

use crate::functional::LayerKind;
use crate::netmodel::{NetworkSpec, PrecisionProfile};

/// Upper-bound speedups over a `base`-bit bit-parallel engine, per layer
/// group, weighting each layer by its multiply-accumulate count.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IdealSpeedups {
    pub cvl: Option<f64>,
    pub fcl: Option<f64>,
}

/// `sum(MACs) / sum(MACs * p / base)` over each group, with `p = Pa` for
/// convolutions and `max(Pa, Pw)` for fully-connected layers.
pub fn ideal_speedup_table(net: &NetworkSpec, profile: &PrecisionProfile, base: u8) -> IdealSpeedups {
    let group = |kind: LayerKind| {
        let (mut macs, mut scaled) = (0.0, 0.0);
        for (l, p) in net.compute_layers().zip(profile.precisions()) {
            if l.kind != kind {
                continue;
            }
            let bits = if kind == LayerKind::Conv { p.pa } else { p.max() };
            let m = l.macs() as f64;
            macs += m;
            scaled += m * bits as f64 / base as f64;
        }
        (macs > 0.0).then(|| macs / scaled)
    };
    IdealSpeedups {
        cvl: group(LayerKind::Conv),
        fcl: group(LayerKind::FullyConnected),
    }
}

/// CSV in the layout of a per-network precision table: one row per
/// (network, profile) with each group's per-layer precisions and ideal speedup.
pub fn ideal_speedup_csv(rows: &[(&NetworkSpec, &PrecisionProfile)], base: u8) -> String {
    let mut s = String::from("network,accuracy,cvl_precisions,cvl_ideal_speedup,fcl_precisions,fcl_ideal_speedup\n");
    let fmt = |v: Option<f64>| v.map(crate::cli::sig4).unwrap_or_default();
    for (net, p) in rows {
        let t = ideal_speedup_table(net, p, base);
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            net.name,
            p.accuracy_label,
            p.group_string(net, LayerKind::Conv),
            fmt(t.cvl),
            p.group_string(net, LayerKind::FullyConnected),
            fmt(t.fcl)
        );
    }
    s
}
