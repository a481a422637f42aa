use std::io::Write;

use clap::Parser;

use meshsep_cli::{run, Cli, Command, EXIT_OK, EXIT_USAGE};

fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("MESHSEP_LOG", "warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            std::process::exit(if e.use_stderr() { EXIT_USAGE } else { EXIT_OK });
        }
    };
    let out = run(&cli);
    // A closed pipe downstream must not change the exit code.
    if out.report.get("error").is_some() {
        let _ = writeln!(std::io::stderr(), "{}", serde_json::to_string(&out.report).unwrap());
    } else {
        let mut so = std::io::stdout().lock();
        let _ = writeln!(so, "{}", out.summary.trim_end());
        if matches!(cli.command, Command::Check(_)) {
            let _ = writeln!(so, "{}", serde_json::to_string_pretty(&out.report).unwrap());
        }
    }
    std::process::exit(out.code);
}
