//! The randomized oracle suite, writing its report to a temporary directory.

use unimatch::experiments::{cmd_oracle, OracleConfig};

fn main() -> unimatch::Result<()> {
    let dir = std::env::temp_dir().join("unimatch-oracle-example");
    let cfg = OracleConfig { seed: 4, ..Default::default() };
    let out = cmd_oracle(&cfg, &dir)?;
    println!("{}", serde_json::to_string_pretty(&out.summary)?);
    Ok(())
}
