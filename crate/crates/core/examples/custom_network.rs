//! Builds a network in code, saves it in the text format, reloads it and
//! times it under a uniform 8-bit profile.
//!
//! cargo run --example custom_network

use tartan::functional::{ArchConfig, Dims, Engine, LayerKind, LayerSpec};
use tartan::netmodel::{load_network, save_network, NetworkSpec, PrecisionProfile};
use tartan::timing::simulate_network;

fn main() -> tartan::Result<()> {
    let conv1 = LayerSpec::conv("conv1", Dims::new(32, 32, 16), 64, 3, 1, 1).with_relu();
    let pool1 = LayerSpec::max_pool("pool1", conv1.output_dims(), 2, 2);
    let conv2 = LayerSpec::conv("conv2", pool1.output_dims(), 128, 3, 1, 1).with_relu();
    let fc = LayerSpec::fully_connected("fc", conv2.output_dims(), 1000);
    let net = NetworkSpec::new("tiny", vec![conv1, pool1, conv2, fc])?;

    let path = std::env::temp_dir().join("tiny.net");
    save_network(&path, &net)?;
    let net = load_network(&path)?;
    print!("{net}");

    for w in net.validate_brick_alignment(&ArchConfig::default()) {
        println!("warning: {w}");
    }
    let profile = PrecisionProfile::uniform(&net, 8);
    let r = simulate_network(&net, &profile, &ArchConfig::default(), Engine::Trt)?;
    for l in &r.layers {
        println!("{:<6} {:>8} cycles", l.layer, l.total_cycles);
    }
    println!(
        "CVL {:.3}x  FCL {:.3}x",
        r.speedup(Some(LayerKind::Conv)),
        r.speedup(Some(LayerKind::FullyConnected))
    );
    Ok(())
}
