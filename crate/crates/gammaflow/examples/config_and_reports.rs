//! Drive an experiment from a TOML document and render the rows in both
//! report formats. The same configuration always yields the same bytes.

use gammaflow::config::{validate, Overrides, RawConfig};
use gammaflow::harness::run_experiment;
use gammaflow::report::{render, ReportFormat};

fn main() -> gammaflow::Result<()> {
    let doc = r#"
        experiment = "two_sided"
        paths = 2000
        trials = 3
        seed = 31

        [space]
        variant = "hilbert"
        d_e = 4
    "#;
    let mut raw = RawConfig::from_toml(doc)?;

    // Flags would win over the document; emulate --paths 1500 here.
    Overrides {
        paths: Some(1500),
        ..Default::default()
    }
    .apply(&mut raw);

    let cfg = validate(&raw, None)?;
    let rows = run_experiment(&cfg)?;

    println!("== csv ==");
    print!("{}", render(&rows, ReportFormat::Csv)?);
    println!("== json (first row) ==");
    let json = render(&rows, ReportFormat::Json)?;
    let parsed: serde_json::Value = serde_json::from_str(&json).expect("own json parses");
    println!("{}", serde_json::to_string_pretty(&parsed[0]).expect("pretty"));

    let again = run_experiment(&cfg)?;
    println!(
        "rerun byte-identical: {}",
        render(&rows, ReportFormat::Csv)? == render(&again, ReportFormat::Csv)?
    );
    Ok(())
}
