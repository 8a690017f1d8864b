//! `omnigraph`: validate, query, mutate and generate from workspace files.
//!
//! Exit status: 0 success, 1 domain failure (violations, failed entries,
//! conflicts, unreadable models), 2 usage error (bad arguments, malformed
//! query or script text).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use omnigraph_core::batch::run_batch;
use omnigraph_core::codegen::{load_genplan, run_genplan};
use omnigraph_core::graph::{deserialize, serialize, Workspace};
use omnigraph_core::metamodel::{light_create, validate, LightLink, LightNode, LightParams, MetaModel};
use omnigraph_core::query::{query, Query};
use omnigraph_core::script::{execute, MutationScript, Outcome};
use omnigraph_core::store::{resolve_metamodel, write_atomic, WORKSPACE_SUFFIX};

#[derive(Parser)]
#[command(name = "omnigraph", version, about = "Graph workspaces, metamodels, queries and template code generation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum, Default)]
enum Format {
    #[default]
    Text,
    Json,
}

#[derive(Args)]
struct Common {
    /// Metamodel id or `.mm.yaml` path; defaults to the workspace's own.
    #[arg(long)]
    mm: Option<String>,
    /// Store root for metamodel and plan lookup.
    #[arg(long)]
    root: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
}

#[derive(Subcommand)]
enum Command {
    /// Check a workspace against its metamodel.
    Validate {
        file: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Print node and link counts and the id high-water mark.
    Stats {
        file: PathBuf,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Print the ids a query selects, one per line.
    Query {
        file: PathBuf,
        #[arg(long)]
        q: String,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Run a mutation script on one workspace file and save it.
    Exec {
        file: PathBuf,
        #[arg(long)]
        script: PathBuf,
    },
    /// Run a mutation script on many files; each is saved only if the result validates.
    Batch {
        files: Vec<PathBuf>,
        #[arg(long)]
        script: PathBuf,
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t)]
        format: Format,
    },
    /// Render a generation plan against a workspace.
    Generate {
        file: PathBuf,
        /// Plan workspace: a file path, or an id looked up in the store root.
        #[arg(long)]
        plan: String,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Serve the HTTP API over a store directory.
    Serve {
        #[arg(long)]
        root: Option<PathBuf>,
        #[arg(long, default_value_t = omnigraph_server::DEFAULT_PORT)]
        port: u16,
    },
    /// Print a metamodel built from compact type declarations.
    NewDsl {
        #[arg(long)]
        id: String,
        #[arg(long)]
        name: Option<String>,
        /// `Type(attr:kind, ...)`, repeatable.
        #[arg(long = "node", required = true)]
        nodes: Vec<String>,
        /// `name(From->To, ...)`, repeatable.
        #[arg(long = "link")]
        links: Vec<String>,
    },
}

struct Failure {
    code: u8,
    message: String,
}

fn domain(message: impl Into<String>) -> Failure {
    Failure {
        code: 1,
        message: message.into(),
    }
}

fn usage(message: impl Into<String>) -> Failure {
    Failure {
        code: 2,
        message: message.into(),
    }
}

type CliResult = Result<ExitCode, Failure>;

fn load(file: &Path) -> Result<Workspace, Failure> {
    let text = std::fs::read_to_string(file).map_err(|e| domain(format!("{}: {e}", file.display())))?;
    deserialize(&text).map_err(|e| domain(format!("{}: {e}", file.display())))
}

fn store_root(root: Option<&Path>, file: &Path) -> PathBuf {
    root.map(Path::to_owned)
        .or_else(|| std::env::var_os(omnigraph_server::ROOT_ENV).map(PathBuf::from))
        .unwrap_or_else(|| match file.parent() {
            Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
            _ => PathBuf::from("."),
        })
}

fn metamodel_for(ws: &Workspace, common: &Common, file: &Path) -> Result<MetaModel, Failure> {
    let spec = common.mm.as_deref().unwrap_or(ws.metamodel());
    resolve_metamodel(spec, Some(&store_root(common.root.as_deref(), file))).map_err(domain)
}

fn print_json(value: &impl serde::Serialize) {
    println!("{}", serde_json::to_string_pretty(value).expect("json output"));
}

fn status(ok: bool) -> ExitCode {
    if ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(1)
    }
}

fn read_script(path: &Path) -> Result<MutationScript, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    MutationScript::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn run(cli: Cli) -> CliResult {
    match cli.command {
        Command::Validate { file, common } => {
            let ws = load(&file)?;
            let mm = metamodel_for(&ws, &common, &file)?;
            let violations = validate(&ws, &mm);
            match common.format {
                Format::Json => print_json(&violations),
                Format::Text => violations.iter().for_each(|v| println!("{v}")),
            }
            Ok(status(violations.is_empty()))
        }
        Command::Stats { file, format } => {
            let ws = load(&file)?;
            match format {
                Format::Json => print_json(&json!({
                    "nodes": ws.node_count(),
                    "links": ws.link_count(),
                    "high_water": ws.high_water(),
                })),
                Format::Text => println!(
                    "nodes {}  links {}  high_water {}",
                    ws.node_count(),
                    ws.link_count(),
                    ws.high_water()
                ),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Query { file, q, format } => {
            let q = Query::parse(&q).map_err(|e| usage(format!("--q: {e}")))?;
            let ws = load(&file)?;
            let sel = query(&ws, &q).map_err(|e| domain(e.to_string()))?;
            match format {
                Format::Json => print_json(&sel),
                Format::Text => sel.ids.iter().for_each(|id| println!("{id}")),
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Exec { file, script } => {
            let script = read_script(&script)?;
            let mut ws = load(&file)?;
            let report = execute(&mut ws, &script);
            for s in &report.outcomes {
                match &s.outcome {
                    Outcome::Created { id } => println!("{} created {id}", s.line),
                    Outcome::Updated { id } => println!("{} updated {id}", s.line),
                    Outcome::Removed { id, .. } => println!("{} removed {id}", s.line),
                    Outcome::Failed { message } => println!("{} failed {message}", s.line),
                    Outcome::RolledBack | Outcome::NotRun => {}
                }
            }
            if let Some((line, message)) = report.error {
                return Err(domain(format!("script line {line}: {message}; nothing saved")));
            }
            ws.set_version(ws.version() + 1);
            write_atomic(&file, serialize(&ws).as_bytes()).map_err(|e| domain(format!("{}: {e}", file.display())))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::Batch {
            files,
            script,
            root,
            format,
        } => {
            let script = read_script(&script)?;
            let root = root.or_else(|| std::env::var_os(omnigraph_server::ROOT_ENV).map(PathBuf::from));
            let resolver = |id: &str| resolve_metamodel(id, root.as_deref());
            let report = run_batch(&files, &script, &resolver);
            match format {
                Format::Json => print_json(&report),
                Format::Text => {
                    for f in &report.files {
                        match (&f.version, &f.error) {
                            (Some(v), _) => println!("ok {} version {v}", f.path.display()),
                            (_, Some(e)) => println!("failed {}: {e}", f.path.display()),
                            _ => {}
                        }
                    }
                }
            }
            Ok(status(report.failed() == 0))
        }
        Command::Generate {
            file,
            plan,
            out,
            common,
        } => {
            let ws = load(&file)?;
            let mm = metamodel_for(&ws, &common, &file)?;
            let plan_path = if Path::new(&plan).is_file() {
                PathBuf::from(&plan)
            } else {
                store_root(common.root.as_deref(), &file).join(format!("{plan}{WORKSPACE_SUFFIX}"))
            };
            let plan_ws = load(&plan_path)?;
            let gen_plan = load_genplan(&plan_ws).map_err(|e| domain(format!("{}: {e}", plan_path.display())))?;
            let template_dir = match plan_path.parent() {
                Some(p) if !p.as_os_str().is_empty() => p.to_owned(),
                _ => PathBuf::from("."),
            };
            let report = run_genplan(&gen_plan, &ws, &mm, &template_dir, &out).map_err(|e| domain(e.to_string()))?;
            match common.format {
                Format::Json => print_json(&report),
                Format::Text => print!("{}", report.table()),
            }
            Ok(status(report.failed() == 0))
        }
        Command::Serve { root, port } => {
            let root = omnigraph_server::resolve_root(root);
            let rt = tokio::runtime::Runtime::new().map_err(|e| domain(e.to_string()))?;
            rt.block_on(omnigraph_server::serve(root, port))
                .map_err(|e| domain(format!("serve: {e}")))?;
            Ok(ExitCode::SUCCESS)
        }
        Command::NewDsl { id, name, nodes, links } => {
            let params = LightParams {
                name: name.unwrap_or_else(|| id.clone()),
                id,
                nodes: nodes
                    .iter()
                    .map(|n| LightNode::parse(n))
                    .collect::<Result<_, _>>()
                    .map_err(|e| usage(format!("--node: {e}")))?,
                links: links
                    .iter()
                    .map(|l| LightLink::parse(l))
                    .collect::<Result<_, _>>()
                    .map_err(|e| usage(format!("--link: {e}")))?,
            };
            let mm = light_create(&params).map_err(|e| usage(e.to_string()))?;
            print!("{}", mm.to_yaml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(2) } else { ExitCode::SUCCESS };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(f) => {
            eprintln!("omnigraph: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
