//! Command-line front end: check protocol files, simulate and explore the
//! global semantics, synthesise per-node controllers, drive the projected
//! network, verify step correspondence, and run the bundled grid scenario.

use std::collections::BTreeSet;
use std::fmt::Display;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use gridproto::corpus::scenario_corpus;
use gridproto::correspond::check_bounded;
use gridproto::dist::{canonical_definition, observable_transitions};
use gridproto::global::{well_formed, well_formed_runtime};
use gridproto::project::project_network;
use gridproto::semantics::{
    explore, run, Configuration, ExploreOptions, FirstInOrder, GlobalStep, Scheduler, SeededRandom,
    DEFAULT_MAX_STEPS, DEFAULT_STATE_CAP,
};
use gridproto::state::{EffectRegistry, NodeId, ParentRef};
use gridproto::syntax::{parse_effects, parse_network, parse_protocol_entry};

const EXIT_PARSE: u8 = 2;
const EXIT_SEMANTICS: u8 = 3;
const EXIT_VERIFICATION: u8 = 4;

#[derive(Parser)]
#[command(
    name = "gridproto",
    about = "Operation-control protocols for radial power grids",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct Inputs {
    /// Protocol file (.gp)
    #[arg(long)]
    protocol: PathBuf,
    /// Network state file (.net)
    #[arg(long)]
    net: PathBuf,
    /// Side-effect file (.fx); actions default to no effects
    #[arg(long)]
    effects: Option<PathBuf>,
    /// Definition to run; defaults to the last one in the protocol file
    #[arg(long)]
    entry: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the well-formedness of a protocol file
    Check {
        /// Protocol file (.gp)
        file: PathBuf,
    },
    /// Run the global semantics under a scheduler and print the trace
    Simulate {
        #[command(flatten)]
        inputs: Inputs,
        /// Maximum number of steps
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        steps: usize,
        /// Pick steps uniformly with this seed instead of first-in-order
        #[arg(long)]
        seed: Option<u64>,
        /// Pick each step through a numbered prompt
        #[arg(long, conflicts_with = "seed")]
        interactive: bool,
    },
    /// Explore the reachable state space and print its edge list
    Explore {
        #[command(flatten)]
        inputs: Inputs,
        /// Depth bound; exhaustive when omitted
        #[arg(long)]
        depth: Option<usize>,
        /// State cap (also GRIDPROTO_STATE_CAP)
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Print the synthesised per-node controllers
    Project {
        #[command(flatten)]
        inputs: Inputs,
        /// Only print the controller of this node
        #[arg(long)]
        node: Option<String>,
    },
    /// Step the projected network by its observable transitions
    DistSimulate {
        #[command(flatten)]
        inputs: Inputs,
        /// Maximum number of steps
        #[arg(long, default_value_t = DEFAULT_MAX_STEPS)]
        steps: usize,
        /// Pick steps uniformly with this seed instead of first-in-order
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Check step correspondence between the protocol and its projection
    Verify {
        #[command(flatten)]
        inputs: Inputs,
        /// Depth bound; exhaustive when omitted
        #[arg(long)]
        depth: Option<usize>,
        /// State cap (also GRIDPROTO_STATE_CAP)
        #[arg(long)]
        cap: Option<usize>,
    },
    /// Run the bundled fault-management scenario and check its outcome
    Scenario {
        /// Also print a sample run with this seed
        #[arg(long)]
        seed: Option<u64>,
    },
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Check { file } => cmd_check(&file),
        Command::Simulate {
            inputs,
            steps,
            seed,
            interactive,
        } => cmd_simulate(&inputs, steps, seed, interactive),
        Command::Explore { inputs, depth, cap } => cmd_explore(&inputs, depth, cap),
        Command::Project { inputs, node } => cmd_project(&inputs, node.as_deref()),
        Command::DistSimulate {
            inputs,
            steps,
            seed,
        } => cmd_dist_simulate(&inputs, steps, seed),
        Command::Verify { inputs, depth, cap } => cmd_verify(&inputs, depth, cap),
        Command::Scenario { seed } => cmd_scenario(seed),
    }
}

fn fail(code: u8, message: impl Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(code)
}

fn read_file(path: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(path)
        .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", path.display())))
}

struct Instance {
    config: Configuration,
    effects: EffectRegistry,
}

fn load(inputs: &Inputs) -> Result<Instance, ExitCode> {
    let protocol_text = read_file(&inputs.protocol)?;
    let protocol = parse_protocol_entry(&protocol_text, inputs.entry.as_deref())
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", inputs.protocol.display())))?;
    let violations = well_formed_runtime(&protocol);
    if !violations.is_empty() {
        for v in &violations {
            eprintln!("{}: {v}", inputs.protocol.display());
        }
        return Err(ExitCode::from(EXIT_PARSE));
    }

    let net_text = read_file(&inputs.net)?;
    let delta = parse_network(&net_text)
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", inputs.net.display())))?;

    let effects = match &inputs.effects {
        None => EffectRegistry::new(),
        Some(path) => {
            let text = read_file(path)?;
            let registry = parse_effects(&text)
                .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", path.display())))?;
            let labels: BTreeSet<_> = protocol.labels().into_iter().collect();
            for unknown in registry.unknown_labels(&labels) {
                eprintln!("warning: effect '{unknown}' does not match any action of the protocol");
            }
            registry
        }
    };

    let config = Configuration::new(delta, protocol);
    config
        .validate()
        .map_err(|e| fail(EXIT_PARSE, format!("{}: {e}", inputs.net.display())))?;
    Ok(Instance { config, effects })
}

fn state_cap(cli_cap: Option<usize>) -> Result<usize, ExitCode> {
    if let Some(cap) = cli_cap {
        return Ok(cap);
    }
    match std::env::var("GRIDPROTO_STATE_CAP") {
        Err(_) => Ok(DEFAULT_STATE_CAP),
        Ok(value) => value.parse::<usize>().map_err(|_| {
            fail(
                EXIT_PARSE,
                format!("GRIDPROTO_STATE_CAP must be a number, got '{value}'"),
            )
        }),
    }
}

fn cmd_check(file: &PathBuf) -> ExitCode {
    let text = match read_file(file) {
        Ok(t) => t,
        Err(code) => return code,
    };
    let defs = match gridproto::syntax::parse_protocol_defs(&text) {
        Ok(defs) => defs,
        Err(e) => return fail(EXIT_PARSE, format!("{}: {e}", file.display())),
    };
    let mut clean = true;
    for (name, protocol) in &defs {
        for violation in well_formed(protocol) {
            clean = false;
            println!("{name}: {violation}");
        }
    }
    if clean {
        println!("ok: {} definition(s) well-formed", defs.len());
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_PARSE)
    }
}

/// Prompts on stdout and picks successor steps from stdin.
struct Interactive;

impl Scheduler for Interactive {
    fn pick(&mut self, _c: &Configuration, steps: &[GlobalStep]) -> Option<usize> {
        eprintln!("enabled steps:");
        for (i, step) in steps.iter().enumerate() {
            eprintln!("  [{i}] {}", step.kind);
        }
        loop {
            eprint!("step [0-{}, empty to stop]: ", steps.len() - 1);
            std::io::stderr().flush().ok();
            let mut line = String::new();
            if std::io::stdin().lock().read_line(&mut line).is_err() {
                return None;
            }
            let trimmed = line.trim();
            if trimmed.is_empty() || trimmed == "q" {
                return None;
            }
            match trimmed.parse::<usize>() {
                Ok(i) if i < steps.len() => return Some(i),
                _ => eprintln!("pick a number between 0 and {}", steps.len() - 1),
            }
        }
    }
}

fn cmd_simulate(inputs: &Inputs, steps: usize, seed: Option<u64>, interactive: bool) -> ExitCode {
    let instance = match load(inputs) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let mut scheduler: Box<dyn Scheduler> = if interactive {
        Box::new(Interactive)
    } else if let Some(seed) = seed {
        Box::new(SeededRandom::new(seed))
    } else {
        Box::new(FirstInOrder)
    };
    match run(
        &instance.config,
        &instance.effects,
        scheduler.as_mut(),
        steps,
    ) {
        Err(e) => fail(EXIT_SEMANTICS, e),
        Ok(trace) => {
            print!("{trace}");
            println!("steps: {}", trace.steps.len());
            print!("{}", trace.final_config.delta);
            ExitCode::SUCCESS
        }
    }
}

fn cmd_explore(inputs: &Inputs, depth: Option<usize>, cap: Option<usize>) -> ExitCode {
    let instance = match load(inputs) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let cap = match state_cap(cap) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let opts = ExploreOptions {
        max_depth: depth,
        state_cap: cap,
    };
    match explore(&instance.config, &instance.effects, &opts) {
        Err(e) => fail(EXIT_SEMANTICS, e),
        Ok(graph) => {
            print!("{graph}");
            ExitCode::SUCCESS
        }
    }
}

fn cmd_project(inputs: &Inputs, node: Option<&str>) -> ExitCode {
    let instance = match load(inputs) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let network = match project_network(&instance.config) {
        Ok(n) => n,
        Err(e) => return fail(EXIT_SEMANTICS, e),
    };
    let mut found = false;
    for n in network.nodes() {
        if let Some(filter) = node {
            if n.state.id.as_str() != filter {
                continue;
            }
        }
        found = true;
        println!("node {}:", n.state.id);
        println!("  {}", canonical_definition(&n.defs));
    }
    if !found {
        return fail(
            EXIT_PARSE,
            format!("node '{}' is not part of the network", node.unwrap_or("")),
        );
    }
    ExitCode::SUCCESS
}

fn cmd_dist_simulate(inputs: &Inputs, steps: usize, seed: Option<u64>) -> ExitCode {
    let instance = match load(inputs) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let mut network = match project_network(&instance.config) {
        Ok(n) => n,
        Err(e) => return fail(EXIT_SEMANTICS, e),
    };
    let mut rng = seed.map(SeededRandom::new);
    let mut taken = 0usize;
    while taken < steps {
        let transitions = match observable_transitions(&network, &instance.effects) {
            Ok(t) => t,
            Err(e) => return fail(EXIT_SEMANTICS, e),
        };
        if transitions.is_empty() {
            break;
        }
        let index = match &mut rng {
            None => 0,
            Some(r) => r.pick_index(transitions.len()),
        };
        let (label, next) = transitions.into_iter().nth(index).expect("valid index");
        println!("{label}");
        network = next;
        taken += 1;
    }
    println!("steps: {taken}");
    for n in network.nodes() {
        println!("{}", n.state);
    }
    ExitCode::SUCCESS
}

fn cmd_verify(inputs: &Inputs, depth: Option<usize>, cap: Option<usize>) -> ExitCode {
    let instance = match load(inputs) {
        Ok(i) => i,
        Err(code) => return code,
    };
    let cap = match state_cap(cap) {
        Ok(c) => c,
        Err(code) => return code,
    };
    match check_bounded(&instance.config, &instance.effects, depth, cap) {
        Err(e) => fail(EXIT_SEMANTICS, e),
        Ok(report) => {
            print!("{report}");
            if report.holds() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
    }
}

fn cmd_scenario(seed: Option<u64>) -> ExitCode {
    let corpus = scenario_corpus();
    let config = corpus.configuration();

    if let Some(seed) = seed {
        println!("sample run (seed {seed}):");
        let mut scheduler = SeededRandom::new(seed);
        match run(&config, &corpus.effects, &mut scheduler, DEFAULT_MAX_STEPS) {
            Err(e) => return fail(EXIT_SEMANTICS, e),
            Ok(trace) => print!("{trace}"),
        }
        println!();
    }

    let cap = match state_cap(None) {
        Ok(c) => c,
        Err(code) => return code,
    };
    let graph = match explore(
        &config,
        &corpus.effects,
        &ExploreOptions {
            max_depth: None,
            state_cap: cap,
        },
    ) {
        Ok(g) => g,
        Err(e) => return fail(EXIT_SEMANTICS, e),
    };
    println!(
        "explored {} state(s), {} edge(s), {} terminal",
        graph.configs.len(),
        graph.edges.len(),
        graph.terminal_states().len()
    );

    // golden outcome: the faulty line 3-4 is isolated and 4 is resupplied
    let node = |id: &str| NodeId::new(id);
    for t in graph.terminal_states() {
        let delta = &graph.configs[t].delta;
        let four = delta.node(&node("4")).unwrap();
        let three = delta.node(&node("3")).unwrap();
        let six = delta.node(&node("6")).unwrap();
        let ok = four.parent == ParentRef::Station(node("6"))
            && three.faulty_links == 0
            && three.active_links == 0
            && three.capacity == 0
            && !three.neighbors.contains(&node("4"))
            && !four.neighbors.contains(&node("3"))
            && six.active_links == 1;
        if !ok {
            eprintln!("terminal state {t} misses the expected outcome:");
            eprintln!("{delta}");
            return ExitCode::from(EXIT_VERIFICATION);
        }
    }
    println!("outcome: node 4 reparented to 6; line 3-4 isolated; all faults cleared");

    match check_bounded(&config, &corpus.effects, None, cap) {
        Err(e) => fail(EXIT_SEMANTICS, e),
        Ok(report) => {
            println!(
                "correspondence: {} state(s), {} edge(s), {} counterexample(s)",
                report.checked_states,
                report.checked_edges,
                report.counterexamples.len()
            );
            if report.holds() {
                ExitCode::SUCCESS
            } else {
                for cex in &report.counterexamples {
                    eprintln!("{cex}");
                }
                ExitCode::from(EXIT_VERIFICATION)
            }
        }
    }
}
