//! The `dcbpv` command-line tool: type-check programs, evaluate them on the
//! CK machine, elaborate surface programs, run metatheory checks over
//! corpora, and a line-oriented repl.
//!
//! Exit codes: 0 success, 1 type error, 2 parse error, 3 unexpected
//! metatheory failure, 4 usage error.

use clap::{Args, Parser, Subcommand};
use dcbpv::ast::{Comp, Context, EffectSignature, Features};
use dcbpv::kernel;
use dcbpv::machine::{self, Outcome, Strategy};
use dcbpv::meta;
use dcbpv::parser::{parse_comp_str, parse_program, Item};
use dcbpv::pretty;
use dcbpv::surface;
use dcbpv::translate;
use std::io::{BufRead, Write};
use std::path::PathBuf;
use std::process::ExitCode;

const EXIT_TYPE: u8 = 1;
const EXIT_PARSE: u8 = 2;
const EXIT_META: u8 = 3;
const EXIT_USAGE: u8 = 4;

#[derive(Parser)]
#[command(name = "dcbpv", disable_help_subcommand = true)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Copy, Default)]
struct FlagArgs {
    /// Enable dependent Kleisli extensions (dependent `to` motives).
    #[arg(long)]
    plus: bool,
    /// Enable dependent projection products.
    #[arg(long = "proj-products")]
    proj_products: bool,
    /// Eta for U in definitional equality.
    #[arg(long = "eta-thunk")]
    eta_thunk: bool,
    /// Eta for lambda forms in definitional equality.
    #[arg(long = "eta-fun")]
    eta_fun: bool,
    /// Algebraicity and mu-unrolling as definitional, fuel-bounded.
    #[arg(long = "effect-eqs")]
    effect_eqs: bool,
}

impl FlagArgs {
    fn features(&self) -> Features {
        Features {
            plus: self.plus,
            proj_products: self.proj_products,
            eta_thunk: self.eta_thunk,
            eta_fun: self.eta_fun,
            effect_eqs: self.effect_eqs,
        }
    }
}

fn default_fuel() -> usize {
    std::env::var("DCBPV_FUEL").ok().and_then(|s| s.parse().ok()).unwrap_or(100_000)
}

#[derive(Subcommand)]
enum Command {
    /// Type-check a program, printing one verdict per declaration.
    Check {
        file: PathBuf,
        #[command(flatten)]
        flags: FlagArgs,
        /// Emit machine-readable JSON diagnostics.
        #[arg(long)]
        json: bool,
    },
    /// Evaluate a program's `main` on the CK machine.
    Eval {
        file: PathBuf,
        #[command(flatten)]
        flags: FlagArgs,
        #[arg(long, default_value_t = default_fuel())]
        fuel: usize,
        /// first | seed:N | all
        #[arg(long, default_value = "first")]
        strategy: String,
        #[arg(long)]
        trace: bool,
        /// text | jsonl
        #[arg(long = "trace-format", default_value = "text")]
        trace_format: String,
    },
    /// Elaborate a surface `.dtt` program into the core.
    Translate {
        file: PathBuf,
        /// Call-by-value image.
        #[arg(long)]
        cbv: bool,
        /// Call-by-name image.
        #[arg(long)]
        cbn: bool,
        #[command(flatten)]
        flags: FlagArgs,
    },
    /// Run metatheory checks over corpora and generated programs.
    Meta {
        /// Files or directories of `.dcbpv` / `.dtt` programs.
        paths: Vec<PathBuf>,
        #[command(flatten)]
        flags: FlagArgs,
        #[arg(long, default_value_t = default_fuel())]
        fuel: usize,
        /// Additional budget of generated well-typed programs.
        #[arg(long, default_value_t = 0)]
        gen: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
    /// Read one computation per line from stdin and evaluate it.
    Repl {
        #[command(flatten)]
        flags: FlagArgs,
        #[arg(long, default_value_t = default_fuel())]
        fuel: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            // help/version requests are not usage errors
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match cli.command {
        Command::Check { file, flags, json } => cmd_check(&file, flags, json),
        Command::Eval { file, flags, fuel, strategy, trace, trace_format } => {
            cmd_eval(&file, flags, fuel, &strategy, trace, &trace_format)
        }
        Command::Translate { file, cbv, cbn, flags } => cmd_translate(&file, cbv, cbn, flags),
        Command::Meta { paths, flags, fuel, gen, seed, json } => {
            cmd_meta(&paths, flags, fuel, gen, seed, json)
        }
        Command::Repl { flags, fuel } => cmd_repl(flags, fuel),
    }
}

fn read_file(file: &PathBuf) -> Result<String, ExitCode> {
    std::fs::read_to_string(file).map_err(|e| {
        eprintln!("error: {}: {e}", file.display());
        ExitCode::from(EXIT_USAGE)
    })
}

fn parse_strategy(s: &str) -> Result<Strategy, ExitCode> {
    if s == "first" {
        Ok(Strategy::First)
    } else if s == "all" {
        Ok(Strategy::All)
    } else if let Some(n) = s.strip_prefix("seed:") {
        match n.parse::<u64>() {
            Ok(n) => Ok(Strategy::seeded(n)),
            Err(_) => {
                eprintln!("error: invalid seed in --strategy {s}");
                Err(ExitCode::from(EXIT_USAGE))
            }
        }
    } else {
        eprintln!("error: unknown strategy `{s}` (expected first | seed:N | all)");
        Err(ExitCode::from(EXIT_USAGE))
    }
}

fn load_program(
    file: &PathBuf,
    flags: FlagArgs,
) -> Result<(EffectSignature, dcbpv::parser::Program), ExitCode> {
    let text = read_file(file)?;
    let prog = parse_program(&text).map_err(|e| {
        eprintln!("{e}");
        ExitCode::from(EXIT_PARSE)
    })?;
    let mut sig = prog.signature.clone();
    meta::merge_flags(&mut sig.features, flags.features());
    Ok((sig, prog))
}

fn cmd_check(file: &PathBuf, flags: FlagArgs, json: bool) -> ExitCode {
    let (sig, prog) = match load_program(file, flags) {
        Ok(x) => x,
        Err(c) => return c,
    };
    let ctx = Context::empty();
    let mut failed = false;
    let mut emit = |name: &str, kind: &str, result: Result<String, Box<kernel::TypeError>>| {
        match result {
            Ok(info) => {
                if json {
                    println!(
                        "{}",
                        serde_json::json!({"decl": name, "kind": kind, "verdict": "ok", "type": info})
                    );
                } else if info.is_empty() {
                    println!("{name}: ok ({kind})");
                } else {
                    println!("{name}: ok ({kind}) : {info}");
                }
            }
            Err(e) => {
                failed = true;
                if json {
                    let mut v = serde_json::to_value(&*e).unwrap();
                    v["decl"] = serde_json::json!(name);
                    v["verdict"] = serde_json::json!("error");
                    println!("{v}");
                } else {
                    println!("{name}: error ({kind})");
                    eprintln!("{name}: {e}");
                }
            }
        }
    };
    for d in &prog.decls {
        let mut loc = |mut e: Box<kernel::TypeError>| {
            e.location = format!("{}:{} `{}`", file.display(), d.line, d.name);
            e
        };
        match (&d.body, &d.ascription) {
            (Item::VT(a), _) => {
                emit(&d.name, "vtype", kernel::wf_vtype(&sig, &ctx, a).map(|_| String::new()).map_err(&mut loc))
            }
            (Item::CT(b), _) => {
                emit(&d.name, "ctype", kernel::wf_ctype(&sig, &ctx, b).map(|_| String::new()).map_err(&mut loc))
            }
            (Item::V(v), Some(Item::VT(a))) => emit(
                &d.name,
                "value",
                kernel::check_value(&sig, &ctx, v, a)
                    .map(|_| pretty::vtype(a))
                    .map_err(&mut loc),
            ),
            (Item::V(v), _) => emit(
                &d.name,
                "value",
                kernel::synth_value(&sig, &ctx, v).map(|a| pretty::vtype(&a)).map_err(&mut loc),
            ),
            (Item::C(m), Some(Item::CT(b))) => emit(
                &d.name,
                "comp",
                kernel::check_comp(&sig, &ctx, m, b)
                    .map(|_| pretty::ctype(b))
                    .map_err(&mut loc),
            ),
            (Item::C(m), _) => emit(
                &d.name,
                "comp",
                kernel::synth_comp(&sig, &ctx, m).map(|b| pretty::ctype(&b)).map_err(&mut loc),
            ),
        }
    }
    if let Some(main) = &prog.main {
        emit(
            "main",
            "comp",
            kernel::synth_comp(&sig, &ctx, main).map(|b| pretty::ctype(&b)),
        );
    }
    if failed {
        ExitCode::from(EXIT_TYPE)
    } else {
        ExitCode::SUCCESS
    }
}

fn outcome_lines(outcome: &Outcome) -> Vec<String> {
    let shown = |c: &dcbpv::machine::Config| pretty::comp(&kernel::strip_annots(&c.comp));
    match outcome {
        Outcome::Terminal(c) => vec![format!(
            "terminal: {} | out: {} | state: {}",
            shown(c),
            c.out_string(),
            c.state
        )],
        Outcome::FuelExhausted(c) => vec![format!(
            "fuel exhausted: {} | out: {} | state: {}",
            shown(c),
            c.out_string(),
            c.state
        )],
        Outcome::Stuck(c, r) => vec![format!("stuck ({r}): {}", shown(c))],
        Outcome::Branches(bs) => {
            let mut lines = vec![format!("branches: {}", bs.len())];
            for b in bs {
                for l in outcome_lines(b) {
                    lines.push(format!("  {l}"));
                }
            }
            lines
        }
    }
}

fn cmd_eval(
    file: &PathBuf,
    flags: FlagArgs,
    fuel: usize,
    strategy: &str,
    trace: bool,
    trace_format: &str,
) -> ExitCode {
    let (sig, prog) = match load_program(file, flags) {
        Ok(x) => x,
        Err(c) => return c,
    };
    let main = match &prog.main {
        Some(m) => m.clone(),
        None => {
            eprintln!("error: {} has no `main`", file.display());
            return ExitCode::from(EXIT_TYPE);
        }
    };
    // the program must type-check before it runs; a main that is merely
    // unsynthesizable (no ascription) still evaluates, since the machine
    // itself is untyped
    if let Err(e) = kernel::synth_comp(&sig, &Context::empty(), &main) {
        if e.rule == "synth" {
            eprintln!("note: main has no synthesizable type ({e}); evaluating anyway");
        } else {
            eprintln!("type error in main: {e}");
            return ExitCode::from(EXIT_TYPE);
        }
    }
    let strat = match parse_strategy(strategy) {
        Ok(s) => s,
        Err(c) => return c,
    };
    if trace {
        let strat = match strat {
            Strategy::All => {
                eprintln!("error: --trace requires a single-successor strategy");
                return ExitCode::from(EXIT_USAGE);
            }
            s => s,
        };
        let (outcome, steps) = machine::run_trace(&sig, &main, fuel, strat);
        for s in &steps {
            if trace_format == "jsonl" {
                println!("{}", serde_json::to_string(s).unwrap());
            } else {
                println!(
                    "[{}] {:<14} depth {:<3} out \"{}\" state {} | {}",
                    s.index, s.rule, s.stack_depth, s.out, s.state, s.comp
                );
            }
        }
        for l in outcome_lines(&outcome) {
            println!("{l}");
        }
        println!("steps: {}", steps.len());
    } else {
        let outcome = machine::run(&sig, &main, fuel, strat);
        for l in outcome_lines(&outcome) {
            println!("{l}");
        }
    }
    ExitCode::SUCCESS
}

fn cmd_translate(file: &PathBuf, cbv: bool, cbn: bool, flags: FlagArgs) -> ExitCode {
    if cbv == cbn {
        eprintln!("error: pass exactly one of --cbv / --cbn");
        return ExitCode::from(EXIT_USAGE);
    }
    let text = match read_file(file) {
        Ok(t) => t,
        Err(c) => return c,
    };
    let prog = match surface::parse_surface_program(&text) {
        Ok(p) => p,
        Err(e) => {
            eprintln!("{e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let mut sig = prog.signature.clone();
    meta::merge_flags(&mut sig.features, flags.features());
    let image = if cbn {
        translate::translate_cbn(&prog.main, sig.features.plus)
    } else {
        translate::translate_cbv(&prog.main, sig.features.plus)
    };
    print_signature_headers(&sig);
    println!("{}", pretty::comp(&image));
    ExitCode::SUCCESS
}

fn print_signature_headers(sig: &EffectSignature) {
    let default = EffectSignature::default();
    if sig.states != default.states || sig.initial_state != default.initial_state {
        println!("#states {{{}}} init {}", sig.states.join(", "), sig.initial_state);
    }
    if !sig.errors.is_empty() {
        println!("#errors {{{}}}", sig.errors.iter().cloned().collect::<Vec<_>>().join(", "));
    }
    let mut flags = Vec::new();
    if sig.features.plus {
        flags.push("plus");
    }
    if sig.features.proj_products {
        flags.push("proj-products");
    }
    if sig.features.eta_thunk {
        flags.push("eta-thunk");
    }
    if sig.features.eta_fun {
        flags.push("eta-fun");
    }
    if sig.features.effect_eqs {
        flags.push("effect-eqs");
    }
    if !flags.is_empty() {
        println!("#flags {}", flags.join(", "));
    }
}

fn cmd_meta(
    paths: &[PathBuf],
    flags: FlagArgs,
    fuel: usize,
    gen_budget: usize,
    seed: u64,
    json: bool,
) -> ExitCode {
    let mut all_reports = Vec::new();
    for p in paths {
        match meta::run_corpus(p, flags.features(), fuel) {
            Ok(summary) => all_reports.extend(summary.reports),
            Err(e) => {
                eprintln!("error: {e}");
                return ExitCode::from(EXIT_USAGE);
            }
        }
    }
    if gen_budget > 0 {
        let mut items = Vec::new();
        for i in 0..gen_budget {
            let mut g = dcbpv::gen::Gen::new(seed.wrapping_add(i as u64));
            let (m, b) = g.program(dcbpv::gen::GenOptions::default());
            let mut sig = g.sig.clone();
            meta::merge_flags(&mut sig.features, flags.features());
            let wrapped = Comp::Annot { comp: Box::new(m), ty: Box::new(b) };
            items.push((format!("gen#{}", seed.wrapping_add(i as u64)), sig, wrapped, Vec::new()));
        }
        let summary = meta::run_reports(items, fuel.min(10_000));
        all_reports.extend(summary.reports);
    }
    let summary = meta::summarize(all_reports);
    if json {
        println!("{}", serde_json::to_string_pretty(&summary).unwrap());
    } else {
        println!(
            "{:<40} {:<18} {:<18} detail",
            "program", "property", "verdict"
        );
        for r in &summary.reports {
            let verdict = match (&r.report.verdict, r.expected_fail) {
                (meta::Verdict::Fail, true) => "fail (expected)".to_string(),
                (meta::Verdict::Pass, true) => "pass (unexpected)".to_string(),
                (v, _) => format!("{v:?}").to_lowercase(),
            };
            println!(
                "{:<40} {:<18} {:<18} {}",
                r.report.program, r.report.property, verdict, r.report.detail
            );
            if r.unexpected {
                if let Some(w) = &r.report.witness {
                    println!("    at step {}: {}", w.step_index, w.reason);
                }
            }
        }
        println!(
            "passes: {} | expected failures: {} | unexpected: {} | skipped: {} | inconclusive: {}",
            summary.passes,
            summary.expected_failures,
            summary.unexpected_failures,
            summary.skipped,
            summary.inconclusive
        );
    }
    if summary.unexpected_failures > 0 {
        ExitCode::from(EXIT_META)
    } else {
        ExitCode::SUCCESS
    }
}

fn cmd_repl(flags: FlagArgs, fuel: usize) -> ExitCode {
    let mut sig = EffectSignature::default();
    meta::merge_flags(&mut sig.features, flags.features());
    let stdin = std::io::stdin();
    let mut out = std::io::stdout();
    for line in stdin.lock().lines() {
        let line = match line {
            Ok(l) => l,
            Err(_) => break,
        };
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with("--") {
            continue;
        }
        if trimmed.starts_with('#') {
            // headers update the persistent signature
            let mini = format!("{trimmed}\nmain = return ()");
            match parse_program(&mini) {
                Ok(p) => {
                    let feats = sig.features;
                    sig.states = p.signature.states;
                    sig.initial_state = p.signature.initial_state;
                    sig.errors.extend(p.signature.errors);
                    sig.features = p.signature.features;
                    meta::merge_flags(&mut sig.features, feats);
                }
                Err(e) => eprintln!("{e}"),
            }
            continue;
        }
        match parse_comp_str(trimmed) {
            Ok(m) => {
                for t in collect_tokens_of(&m) {
                    sig.monoid_alphabet.insert(t);
                }
                match kernel::synth_comp(&sig, &Context::empty(), &m) {
                    Ok(b) => println!(": {}", pretty::ctype(&b)),
                    Err(e) => eprintln!("type error: {e}"),
                }
                let outcome = machine::run(&sig, &m, fuel, Strategy::First);
                for l in outcome_lines(&outcome) {
                    println!("{l}");
                }
            }
            Err(e) => eprintln!("{e}"),
        }
        let _ = out.flush();
    }
    ExitCode::SUCCESS
}

fn collect_tokens_of(m: &Comp) -> Vec<String> {
    fn go(m: &Comp, acc: &mut std::collections::BTreeSet<String>) {
        use dcbpv::ast::Comp::*;
        match m {
            Print(ts, k) => {
                acc.extend(ts.iter().cloned());
                go(k, acc);
            }
            LetV { body, .. } => go(body, acc),
            LetNil { bound, body } => {
                go(bound, acc);
                go(body, acc);
            }
            To { comp, body, .. } | ToTensor { comp, body, .. } => {
                go(comp, acc);
                go(body, acc);
            }
            PmSum { branches, .. } => branches.iter().for_each(|(_, k)| go(k, acc)),
            PmUnit { body, .. } | PmPair { body, .. } | PmId { body, .. } => go(body, acc),
            LamI(ks) | Choose(ks) => ks.iter().for_each(|k| go(k, acc)),
            ProjI(_, k) | Lam { body: k, .. } | Mu { body: k, .. } | Write(_, k)
            | App { fun: k, .. } | RetTensor { comp: k, .. } | AppHom { comp: k, .. }
            | Annot { comp: k, .. } => go(k, acc),
            Read(bs) => bs.iter().for_each(|(_, k)| go(k, acc)),
            Nil | Return(_) | Force(_) | Diverge | Error(_) => {}
        }
    }
    let mut set = std::collections::BTreeSet::new();
    go(m, &mut set);
    set.into_iter().collect()
}
