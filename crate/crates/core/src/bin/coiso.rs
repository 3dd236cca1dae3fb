use clap::{Parser, ValueEnum};
use coiso::cli::{self, CliError, Format};
use std::process::ExitCode;

#[derive(Clone, Copy, Debug, ValueEnum)]
enum OutFormat {
    Text,
    Json,
}

/// Exact symbolic computations for coisotropic sections of Jacobi structures.
#[derive(Debug, Parser)]
#[command(name = "coiso", version, after_help = after_help())]
struct Args {
    /// Scenario file, or a built-in name (torus-obstructed, legendrian-jet).
    #[arg(long)]
    scenario: Option<String>,
    /// Task to run, `NAME[:ARG]`; repeatable. Defaults to the scenario's task list.
    #[arg(long = "task")]
    tasks: Vec<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: OutFormat,
    /// Write the report here instead of stdout.
    #[arg(long)]
    out: Option<std::path::PathBuf>,
}

fn after_help() -> String {
    let mut s = String::from("Tasks:\n");
    for (name, what) in cli::task_help() {
        s.push_str(&format!("  {name:<24} {what}\n"));
    }
    s
}

fn fail(e: &CliError) -> ExitCode {
    eprintln!("coiso: {e}");
    ExitCode::from(e.exit_code() as u8)
}

fn main() -> ExitCode {
    let args = match Args::try_parse() {
        Ok(a) => a,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let Some(src_arg) = args.scenario.as_deref() else {
        eprintln!("coiso: usage error: --scenario is required\n\n{}", after_help());
        return ExitCode::from(1);
    };
    let scenario = match cli::read_scenario_source(src_arg).and_then(|s| cli::load_scenario(&s)) {
        Ok(s) => s,
        Err(e) => return fail(&e),
    };
    let tasks = match cli::select_tasks(&scenario, &args.tasks) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("{}", after_help());
            return fail(&e);
        }
    };
    let report = cli::run(&scenario, &tasks);
    let format = match args.format {
        OutFormat::Text => Format::Text,
        OutFormat::Json => Format::Json,
    };
    let text = cli::render(&report, format);
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &text) {
                return fail(&CliError::Usage(format!("cannot write {}: {e}", path.display())));
            }
        }
        None => print!("{text}"),
    }
    for t in &report.tasks {
        if let Err(e) = &t.outcome {
            eprintln!("coiso: task {}: {e}", t.task);
        }
    }
    ExitCode::from(report.exit_code() as u8)
}
