use proptest::prelude::*;

use tartan::functional::{ArchConfig, Dims, LayerKind, LayerSpec};
use tartan::netmodel::{
    fixture_network, fixture_profile, load_network, load_profile, profile_name, save_network, save_profile,
    LayerPrecision, NetworkSpec, PrecisionProfile, ACCURACY_LEVELS, IMAGENET_NETWORKS,
};
use tartan::Error;

const ALL: [&str; 6] = ["alexnet", "vgg_s", "vgg_m", "vgg_19", "mlp", "cnn"];

fn net(body: &str) -> Result<NetworkSpec, Error> {
    NetworkSpec::parse(&format!("# tartan-net v1\nname = t\ninput = 8 8 3\n{body}"), "mem")
}

#[test]
fn fixtures_round_trip_through_text() {
    let dir = tempfile::tempdir().unwrap();
    for name in ALL {
        let n = fixture_network(name).unwrap();
        assert_eq!(NetworkSpec::parse(&n.to_string(), "mem").unwrap(), n, "{name}");
        let path = dir.path().join(format!("{name}.net"));
        save_network(&path, &n).unwrap();
        assert_eq!(load_network(&path).unwrap(), n);
    }
    for name in IMAGENET_NETWORKS {
        let n = fixture_network(name).unwrap();
        for level in ACCURACY_LEVELS {
            let p = fixture_profile(&n, &profile_name(name, level)).unwrap();
            let path = dir.path().join("p.profile");
            save_profile(&path, &p).unwrap();
            assert_eq!(load_profile(&path, &n).unwrap(), p);
        }
    }
}

#[test]
fn fixture_dims_are_the_public_ones() {
    let a = fixture_network("alexnet").unwrap();
    let shape = |n: &NetworkSpec, l: &str| n.layer(l).unwrap().output_dims();
    assert_eq!(shape(&a, "conv1"), Dims::new(55, 55, 96));
    assert_eq!(shape(&a, "conv5"), Dims::new(13, 13, 256));
    assert_eq!(a.layer("fc6").unwrap().input.volume(), 9216);
    assert_eq!(a.layer("conv2").unwrap().groups, 2);
    let v = fixture_network("vgg_19").unwrap();
    assert_eq!(v.compute_layers().filter(|l| l.kind == LayerKind::Conv).count(), 16);
    assert_eq!(v.layer("fc6").unwrap().input.volume(), 25088);
    assert_eq!(fixture_network("vgg_m").unwrap().layer("fc6").unwrap().input.volume(), 18432);
    assert_eq!(fixture_network("vgg_s").unwrap().layer("fc6").unwrap().input.volume(), 18432);
}

#[test]
fn fixture_profiles_hold_the_published_precisions() {
    let rows = [
        ("alexnet", "100", "9-8-5-5-7", "10-9-9"),
        ("vgg_s", "100", "7-8-9-7-9", "10-9-9"),
        ("vgg_m", "100", "7-7-7-8-7", "10-8-8"),
        ("vgg_19", "100", "12-12-12-11-12-10-11-11-13-12-13-13-13-13-13-13", "10-9-9"),
        ("alexnet", "99", "9-7-4-5-7", "9-8-8"),
        ("vgg_s", "99", "7-8-9-7-9", "9-9-8"),
        ("vgg_m", "99", "6-8-7-7-7", "9-8-8"),
        ("vgg_19", "99", "9-9-9-8-12-10-10-12-13-11-12-13-13-13-13-13", "10-9-8"),
    ];
    for (name, level, cvl, fcl) in rows {
        let n = fixture_network(name).unwrap();
        let p = fixture_profile(&n, &profile_name(name, level)).unwrap();
        assert_eq!(p.group_string(&n, LayerKind::Conv), cvl, "{name}-{level}");
        assert_eq!(p.group_string(&n, LayerKind::FullyConnected), fcl, "{name}-{level}");
        assert_eq!(p.accuracy_label, format!("{level}%"));
    }
}

#[test]
fn brick_alignment_warnings() {
    let arch = ArchConfig::default();
    let w = fixture_network("alexnet").unwrap().validate_brick_alignment(&arch);
    assert_eq!(w.len(), 1, "{w:?}");
    assert!(w[0].contains("conv1") && w[0].contains("13/16"), "{}", w[0]);
    let fc = NetworkSpec::new("f", vec![LayerSpec::fully_connected("fc", Dims::new(1, 1, 9216), 10)]).unwrap();
    assert!(fc.validate_brick_alignment(&arch).is_empty());
}

#[test]
fn network_errors_name_the_line_or_layers() {
    let e = NetworkSpec::parse("# wrong header\n", "mem").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 1, .. }), "{e}");
    let e = net("colour = blue\n").unwrap_err();
    assert!(matches!(e, Error::Parse { line: 4, .. }), "{e}");
    let e = net("layer c {\n  kind = conv\n  filters = 4\n  kernel = 3\n  stride = 1\n  pad = 1\n").unwrap_err();
    assert!(matches!(e, Error::Parse { .. }), "{e}");
    let e = net("layer a {\n  kind = fc\n  outputs = 4\n}\nlayer a {\n  kind = fc\n  outputs = 2\n}\n").unwrap_err();
    assert!(e.to_string().contains('a'), "{e}");
    // a 5x5 kernel cannot slide over the 1x1x4 output of an fc layer
    let e = net("layer a {\n  kind = fc\n  outputs = 4\n}\nlayer b {\n  kind = conv\n  filters = 2\n  kernel = 5\n}\n")
        .unwrap_err();
    match e {
        Error::Incompatible { prev, next, .. } => assert_eq!((prev.as_str(), next.as_str()), ("a", "b")),
        e => panic!("unexpected {e}"),
    }
    assert!(net("").is_err());
    assert!(load_network("/nonexistent/x.net").is_err());
}

#[test]
fn profile_errors() {
    let n = fixture_network("mlp").unwrap();
    let parse = |body: &str| PrecisionProfile::parse(&format!("# tartan-profile v1\nnetwork = mlp\n{body}"), "mem", &n);
    assert!(parse("fc1 8 8\nfc2 8 8\nfc3 8 8\n").is_ok());
    assert!(parse("fc1 8 8\nfc2 8 8\n").is_err(), "missing entry");
    assert!(parse("fc1 8 8\nfc3 8 8\nfc2 8 8\n").is_err(), "order");
    assert!(parse("fc1 8 7\nfc2 8 8\nfc3 8 8\n").is_err(), "fc needs Pa = Pw");
    assert!(parse("fc1 0 0\nfc2 8 8\nfc3 8 8\n").is_err(), "range");
    assert!(parse("fc1 17 17\nfc2 8 8\nfc3 8 8\n").is_err(), "range");
    assert!(parse("fc1 x 8\nfc2 8 8\nfc3 8 8\n").is_err());
    let c = fixture_network("cnn").unwrap();
    let bad = PrecisionProfile::parse("# tartan-profile v1\nconv1 8 8\nconv2 8 16\nfc 8 8\n", "mem", &c);
    assert!(bad.is_err(), "conv weights stay at 16 bits");
    let other = PrecisionProfile::parse("# tartan-profile v1\nnetwork = cnn\nfc1 8 8\nfc2 8 8\nfc3 8 8\n", "mem", &n);
    assert!(other.is_err(), "profile for another network");
}

#[test]
fn uniform_and_group_profiles() {
    let n = fixture_network("alexnet").unwrap();
    let u = PrecisionProfile::uniform(&n, 8);
    u.validate(&n).unwrap();
    assert_eq!(u.get("conv1"), Some(LayerPrecision::new(8, 16)));
    assert_eq!(u.get("fc7"), Some(LayerPrecision::joint(8)));
    let g = PrecisionProfile::from_groups(&n, &[9, 8, 5, 5, 7], &[10, 9, 9], "x").unwrap();
    assert_eq!(g, fixture_profile(&n, "alexnet-100").map(|p| PrecisionProfile { accuracy_label: "x".into(), ..p }).unwrap());
    assert!(PrecisionProfile::from_groups(&n, &[9, 8], &[10, 9, 9], "x").is_err());
}

proptest! {
    // Loaders are total: arbitrary text either parses or yields an error.
    #[test]
    fn loaders_never_panic(body in "[a-z0-9 ={}\n#-]{0,200}") {
        let _ = NetworkSpec::parse(&format!("# tartan-net v1\n{body}"), "mem");
        let n = fixture_network("mlp").unwrap();
        let _ = PrecisionProfile::parse(&format!("# tartan-profile v1\n{body}"), "mem", &n);
    }

    #[test]
    fn random_chains_round_trip(x in 1usize..20, c in 1usize..40, f in 1usize..40, k in 1usize..4, o in 1usize..50) {
        let conv = LayerSpec::conv("c", Dims::new(x + 3, x + 3, c), f, k, 1, k / 2).with_relu();
        let fc = LayerSpec::fully_connected("fc", conv.output_dims(), o);
        let n = NetworkSpec::new("r", vec![conv, fc]).unwrap();
        prop_assert_eq!(NetworkSpec::parse(&n.to_string(), "mem").unwrap(), n);
    }
}
