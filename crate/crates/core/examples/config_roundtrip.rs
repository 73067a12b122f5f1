//! Loading, validating and re-serializing a run configuration.

use crfade::Config;

fn main() -> crfade::Result<()> {
    let text = r#"{
        "Q": 1.0,
        "sigma_z2": 0.5,
        "P_avg": 4.0,
        "fading": { "type": "discrete", "points": [0.3, 1.0, 2.0], "probs": [0.2, 0.5, 0.3] },
        "log_base": "e"
    }"#;
    let cfg = Config::from_json(text)?;
    println!("{}", cfg.to_json()?);

    let broken = text.replace("0.3]", "0.4]");
    match Config::from_json(&broken) {
        Ok(_) => println!("unexpectedly valid"),
        Err(e) => println!("rejected: {e}"),
    }
    Ok(())
}
