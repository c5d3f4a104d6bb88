//! Drives the command-line front end on the bundled scenario file, writing
//! traces and a report to a temporary directory.

use std::path::Path;

use bayes_explore::cli::run_cli;

fn main() {
    let kp = Path::new(env!("CARGO_MANIFEST_DIR")).join("examples/kp.json");
    let kp = kp.to_str().expect("utf-8 path");
    let out = std::env::temp_dir().join("bayes-explore-example");
    let out = out.to_str().expect("utf-8 path");
    let mut stdout = std::io::stdout();
    let mut stderr = std::io::stderr();
    for args in [
        vec!["check", kp],
        vec!["benchmark", kp],
        vec!["explorable", kp, "--state", "half_one"],
        vec!["run", kp, "--rounds", "1000", "--seed", "7", "--out", out],
    ] {
        println!("$ bayes-explore {}", args.join(" "));
        let code = run_cli(std::iter::once("bayes-explore").chain(args), &mut stdout, &mut stderr);
        println!("exit {code}");
    }
    println!("{}", std::fs::read_to_string(Path::new(out).join("report.csv")).unwrap_or_default());
}
