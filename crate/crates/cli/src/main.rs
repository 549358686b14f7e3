//! `macrocell` command-line front end.
//!
//! Exit codes: 0 success, 1 usage, 2 bad input or compile error,
//! 3 container initialization refused, 4 execution trapped.

use std::fmt::Display;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use macrocell_core::binfmt;
use macrocell_core::compiler::{compile_unit, layout_variables, CompileError, CompiledFile, VariableLayout};
use macrocell_core::container::{Container, ContainerConfig, ExecStatus};
use macrocell_core::harness::{layout_from_text, layout_to_text, parse_vars, run_scenario, ExternalBinding};
use macrocell_core::lang::check_source;
use macrocell_core::perfdata::{parse_perf_data, PerfData, PlatformType};

#[derive(Parser)]
#[command(name = "macrocell", version, about = "Compile and run WCET-bounded adaptation rules")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compile a rule into a .mcf file
    Compile {
        source: PathBuf,
        /// Performance data file (.epd); repeat for each target platform
        #[arg(long = "perf", required = true)]
        perf: Vec<PathBuf>,
        #[arg(short, long)]
        output: PathBuf,
        /// Also write the variable layout sidecar
        #[arg(long)]
        layout: Option<PathBuf>,
    },
    /// Print the header and WCET table of a .mcf file
    Inspect {
        file: PathBuf,
        /// Also list the macro-code
        #[arg(long)]
        disasm: bool,
    },
    /// Initialize and execute a .mcf file once in a fresh container
    Run(RunArgs),
    /// Print the WCET table, or the WCET for one platform
    Wcet {
        file: PathBuf,
        /// Platform identity, e.g. CPU-A/1/RTOS/3/1.0
        #[arg(long)]
        platform: Option<String>,
    },
}

#[derive(Args)]
struct RunArgs {
    file: PathBuf,
    /// Performance data of the platform the container runs on
    #[arg(long)]
    perf: PathBuf,
    /// Container memory budget in bytes
    #[arg(long, default_value_t = 65536)]
    budget: u64,
    #[arg(long, default_value_t = 16)]
    max_platforms: u16,
    /// Time allocated to the rule; unlimited when omitted
    #[arg(long)]
    allocated_time: Option<u64>,
    /// Initial external variable values (`path = value` lines)
    #[arg(long)]
    vars: Option<PathBuf>,
    /// Rule source, used to derive the external variable layout
    #[arg(long, conflicts_with = "layout", required_unless_present = "layout")]
    src: Option<PathBuf>,
    /// Layout sidecar written by `compile --layout`
    #[arg(long)]
    layout: Option<PathBuf>,
    /// Print every external variable after execution
    #[arg(long)]
    dump_vars: bool,
}

struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Display) -> Self {
        Failure {
            code: 2,
            message: message.to_string(),
        }
    }
}

type Outcome = Result<(), Failure>;

fn read_text(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_bytes(path: &Path) -> Result<Vec<u8>, Failure> {
    fs::read(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn write(path: &Path, bytes: impl AsRef<[u8]>) -> Outcome {
    fs::write(path, bytes).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_perf(path: &Path) -> Result<PerfData, Failure> {
    parse_perf_data(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn read_mcf(path: &Path) -> Result<CompiledFile, Failure> {
    binfmt::deserialize(&read_bytes(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn compile_cmd(source: &Path, perf: &[PathBuf], output: &Path, layout: Option<&Path>) -> Outcome {
    let text = read_text(source)?;
    let perfs = perf.iter().map(|p| read_perf(p)).collect::<Result<Vec<_>, _>>()?;
    let unit = compile_unit(&text, &perfs).map_err(|e| match e {
        CompileError::Frontend(f) => Failure::input(f.diagnostic(&source.display().to_string())),
        other => Failure::input(format!("{}: error: {other}", source.display())),
    })?;
    let bytes = binfmt::serialize(&unit.file).map_err(Failure::input)?;
    write(output, &bytes)?;
    if let Some(path) = layout {
        write(path, layout_to_text(&unit.layout))?;
    }
    let h = unit.file.header();
    println!("external: {} B", h.external_var_size);
    println!("local: {} B", h.local_var_size);
    println!("code: {} B", h.macro_code_length);
    println!("platforms: {}", h.platform_type_count);
    for e in unit.file.wcet_table() {
        println!("wcet[{}]: {}", e.platform, e.wcet);
    }
    Ok(())
}

fn inspect_cmd(path: &Path, disasm: bool) -> Outcome {
    let file = read_mcf(path)?;
    let h = file.header();
    println!("format_version: {}", h.format_version);
    println!("compiler_type: {}", h.compiler_type);
    println!("compiler_version: {}", h.compiler_version);
    println!("macro_code_length: {}", h.macro_code_length);
    println!("external_var_size: {}", h.external_var_size);
    println!("local_var_size: {}", h.local_var_size);
    println!("platform_type_count: {}", h.platform_type_count);
    println!("content_checksum: {:#010x}", h.content_checksum);
    for e in file.wcet_table() {
        println!("wcet[{}]: {}", e.platform, e.wcet);
    }
    if disasm {
        print!("{}", file.macro_code().disassemble());
    }
    Ok(())
}

fn wcet_cmd(path: &Path, platform: Option<&str>) -> Outcome {
    let file = read_mcf(path)?;
    match platform {
        Some(id) => {
            let p = PlatformType::parse_identity(id).map_err(Failure::input)?;
            let w = file
                .wcet_for(&p)
                .ok_or_else(|| Failure::input(format!("no WCET for platform {p}")))?;
            println!("{w}");
        }
        None => {
            for e in file.wcet_table() {
                println!("{} {}", e.platform, e.wcet);
            }
        }
    }
    Ok(())
}

fn run_cmd(args: &RunArgs) -> Outcome {
    let bytes = read_bytes(&args.file)?;
    let perf = read_perf(&args.perf)?;
    let layout: VariableLayout = match (&args.src, &args.layout) {
        (Some(src), _) => {
            let program =
                check_source(&read_text(src)?).map_err(|e| Failure::input(e.diagnostic(&src.display().to_string())))?;
            layout_variables(&program)
        }
        (None, Some(path)) => {
            layout_from_text(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?
        }
        (None, None) => unreachable!("clap requires --src or --layout"),
    };
    let inputs = match &args.vars {
        Some(path) => parse_vars(&read_text(path)?).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None => Vec::new(),
    };
    let mut container = Container::new(ContainerConfig {
        platform: perf,
        memory_budget: args.budget,
        max_platform_types: args.max_platforms,
    })
    .map_err(Failure::input)?;
    let binding = ExternalBinding::allocate(&layout);
    let run = run_scenario(
        &mut container,
        &bytes,
        &binding,
        args.allocated_time.unwrap_or(u64::MAX),
        &inputs,
    )
    .map_err(Failure::input)?;
    let id = run.init.map_err(|e| Failure {
        code: 3,
        message: e.to_string(),
    })?;
    let exec = run.exec.expect("executed after successful init");
    println!("context: {}", id.0);
    println!("status: {}", exec.status);
    println!("fuel: {}", exec.fuel_consumed);
    if args.dump_vars {
        for (path, value) in binding.dump() {
            println!("{path} = {value}");
        }
    }
    match exec.status {
        ExecStatus::Ok => Ok(()),
        status => Err(Failure {
            code: 4,
            message: format!("execution trapped: {status}"),
        }),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let result = match &cli.command {
        Command::Compile {
            source,
            perf,
            output,
            layout,
        } => compile_cmd(source, perf, output, layout.as_deref()),
        Command::Inspect { file, disasm } => inspect_cmd(file, *disasm),
        Command::Run(args) => run_cmd(args),
        Command::Wcet { file, platform } => wcet_cmd(file, platform.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("{}", f.message);
            ExitCode::from(f.code)
        }
    }
}
