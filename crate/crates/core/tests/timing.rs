use proptest::prelude::*;

use tartan::functional::{ArchConfig, Dims, Engine, LayerKind, LayerSpec};
use tartan::netmodel::{fixture_network, fixture_profile, profile_name, LayerPrecision, IMAGENET_NETWORKS};
use tartan::timing::{choose_cascade, cycles_layer, cycles_trt_fcl, geomean, simulate_network, simulate_trt2b};

const ALL: [&str; 6] = ["alexnet", "vgg_s", "vgg_m", "vgg_19", "mlp", "cnn"];

fn layer_strategy() -> impl Strategy<Value = LayerSpec> {
    prop_oneof![
        (1usize..4000, 1usize..5000).prop_map(|(i, o)| LayerSpec::fully_connected("fc", Dims::new(1, 1, i), o)),
        (3usize..40, 1usize..300, 1usize..600, 1usize..4, 1usize..3)
            .prop_map(|(x, c, f, k, s)| LayerSpec::conv("c", Dims::new(x, x, c), f, k, s, k / 2)),
    ]
}

#[test]
fn compute_parity_when_windows_fill_the_columns() {
    let arch = ArchConfig::default();
    let mut checked = 0;
    for name in ALL {
        for l in fixture_network(name).unwrap().compute_layers() {
            let d = cycles_layer(l, LayerPrecision::FULL, &arch, Engine::Dadn).unwrap();
            let t = cycles_layer(l, LayerPrecision::FULL, &arch, Engine::Trt).unwrap();
            if l.kind == LayerKind::Conv && l.windows() % 16 == 0 {
                assert_eq!(t.compute_cycles, d.total_cycles, "{name}/{}", l.name);
                assert_eq!(t.total_cycles, d.total_cycles + 1, "{name}/{}", l.name);
                checked += 1;
            }
            assert!(t.total_cycles >= d.total_cycles, "{name}/{}", l.name);
        }
    }
    assert!(checked >= 3);
}

#[test]
fn large_fc_parity_up_to_exposed_load() {
    let arch = ArchConfig::default();
    let l = LayerSpec::fully_connected("fc", Dims::new(1, 1, 4096), 4096);
    let d = cycles_layer(&l, LayerPrecision::FULL, &arch, Engine::Dadn).unwrap();
    let t = cycles_layer(&l, LayerPrecision::FULL, &arch, Engine::Trt).unwrap();
    assert_eq!(t.compute_cycles, d.total_cycles);
    assert_eq!(t.weight_load_cycles, 16);
}

#[test]
fn str_matches_trt_on_convolutions_and_baseline_on_fc() {
    let arch = ArchConfig::default();
    for name in IMAGENET_NETWORKS {
        let n = fixture_network(name).unwrap();
        let p = fixture_profile(&n, &profile_name(name, "100")).unwrap();
        let s = simulate_network(&n, &p, &arch, Engine::Str).unwrap();
        let t = simulate_network(&n, &p, &arch, Engine::Trt).unwrap();
        assert_eq!(s.total_cycles(Some(LayerKind::Conv)), t.total_cycles(Some(LayerKind::Conv)));
        assert_eq!(s.speedup(Some(LayerKind::FullyConnected)), 1.0);
    }
}

#[test]
fn speedups_stay_under_the_ideal() {
    let arch = ArchConfig::default();
    for name in IMAGENET_NETWORKS {
        let n = fixture_network(name).unwrap();
        let p = fixture_profile(&n, &profile_name(name, "100")).unwrap();
        let r = simulate_network(&n, &p, &arch, Engine::Trt).unwrap();
        for (l, s) in r.layers.iter().zip(r.layer_speedups()) {
            let bits = if l.kind == LayerKind::Conv { l.precision.pa } else { l.precision.max() };
            assert!(s <= 16.0 / bits as f64 + 1e-9, "{name}/{}: {s}", l.layer);
        }
    }
}

#[test]
fn two_bit_rounds_precisions_up() {
    let n = fixture_network("vgg_m").unwrap();
    let p = fixture_profile(&n, "vgg_m-100").unwrap();
    let m = simulate_trt2b(&n, &p, &ArchConfig::two_bit()).unwrap();
    assert!(m.cvl_vs_1bit <= 0.0, "odd CVL precisions can only lose");
    assert!(m.fcl_vs_dadn > 0.5);
    let l = LayerSpec::conv("c", Dims::new(16, 16, 64), 64, 3, 1, 1);
    let one = cycles_layer(&l, LayerPrecision::new(9, 16), &ArchConfig::default(), Engine::Trt).unwrap();
    let two = cycles_layer(&l, LayerPrecision::new(10, 16), &ArchConfig::two_bit(), Engine::Trt).unwrap();
    let nine = cycles_layer(&l, LayerPrecision::new(9, 16), &ArchConfig::two_bit(), Engine::Trt).unwrap();
    assert_eq!(two.total_cycles, nine.total_cycles);
    assert!(two.compute_cycles > one.compute_cycles);
}

#[test]
fn geomean_of_fixture_speedups_is_stable() {
    let arch = ArchConfig::default();
    let s: Vec<f64> = IMAGENET_NETWORKS
        .iter()
        .map(|name| {
            let n = fixture_network(name).unwrap();
            let p = fixture_profile(&n, &profile_name(name, "100")).unwrap();
            simulate_network(&n, &p, &arch, Engine::Trt).unwrap().speedup(Some(LayerKind::FullyConnected))
        })
        .collect();
    assert!((geomean(s) - 1.645).abs() < 0.001);
}

proptest! {
    #[test]
    fn cycles_never_drop_with_more_bits(l in layer_strategy(), p in 1u8..16, b in prop_oneof![Just(1u8), Just(2u8)]) {
        let arch = ArchConfig::default().with_bits_per_cycle(b);
        for e in [Engine::Str, Engine::Trt] {
            let (lo, hi) = if l.kind == LayerKind::Conv {
                (LayerPrecision::new(p, 16), LayerPrecision::new(p + 1, 16))
            } else {
                (LayerPrecision::joint(p), LayerPrecision::joint(p + 1))
            };
            let a = cycles_layer(&l, lo, &arch, e).unwrap();
            let c = cycles_layer(&l, hi, &arch, e).unwrap();
            prop_assert!(a.total_cycles <= c.total_cycles);
        }
    }

    #[test]
    fn report_fields_are_consistent(l in layer_strategy(), p in 1u8..=16) {
        let arch = ArchConfig::default();
        let prec = if l.kind == LayerKind::Conv { LayerPrecision::new(p, 16) } else { LayerPrecision::joint(p) };
        for e in Engine::ALL {
            let r = cycles_layer(&l, prec, &arch, e).unwrap();
            prop_assert_eq!(r.total_cycles, r.weight_load_cycles + r.compute_cycles + r.cascade_reduce_cycles);
            prop_assert!(r.active_unit_cycles <= r.unit_capacity_cycles);
            prop_assert!((0.0..1.0).contains(&r.idle_sip_fraction));
            prop_assert!((0.0..1.0).contains(&r.dispatch_overhead_fraction));
        }
    }

    #[test]
    fn default_cascade_is_no_slower_than_none(i in 16usize..8000, o in 1usize..300, p in 1u8..=16) {
        let arch = ArchConfig::default();
        let l = LayerSpec::fully_connected("fc", Dims::new(1, 1, i), o);
        let prec = LayerPrecision::joint(p);
        let chosen = cycles_trt_fcl(&l, prec, &arch, choose_cascade(o, &arch)).unwrap();
        let none = cycles_trt_fcl(&l, prec, &arch, tartan::timing::CascadePlan { np: 1 }).unwrap();
        prop_assert!(chosen.idle_sip_fraction <= none.idle_sip_fraction + 1e-12);
    }
}
