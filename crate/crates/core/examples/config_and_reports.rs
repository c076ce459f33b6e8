//! Configuration files, the command-line entry point and report manifests.

use osgoodlab::cli::{self, parse_config};

const CONFIG: &str = "\
[problem]
domain = interval01
drift = power:1.0
sigma = 4
u0 = mode1:1

[scheme]
modes = 16
dt = 0.002
horizon = 1.5

[ensemble]
paths = 8
seed = 99
";

fn main() -> osgoodlab::Result<()> {
    let cfg = parse_config(CONFIG)?;
    println!("config hash {:016x}\n{}", cfg.hash(), cfg.serialize());

    match parse_config("[problem]\ndrift = power:1\nalpha = 1.5\nbeta = 2\nmodes = 3\n") {
        Err(e) => println!("{e}"),
        Ok(_) => unreachable!(),
    }

    let dir = std::env::temp_dir().join("osgoodlab-example");
    let path = dir.join("run.ini");
    std::fs::create_dir_all(&dir).map_err(|e| osgoodlab::Error::Io {
        path: dir.clone(),
        source: e,
    })?;
    std::fs::write(&path, CONFIG).map_err(|e| osgoodlab::Error::Io {
        path: path.clone(),
        source: e,
    })?;
    let out_dir = dir.join("out");
    let args = [
        "osgoodlab",
        "ensemble",
        "--config",
        path.to_str().unwrap(),
        "--out",
        out_dir.to_str().unwrap(),
    ];
    let code = cli::run(args, &mut std::io::stdout(), &mut std::io::stderr());
    println!("exit code {code}");
    let code = cli::run(
        ["osgoodlab", "report", out_dir.to_str().unwrap()],
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    println!("exit code {code}");
    Ok(())
}
