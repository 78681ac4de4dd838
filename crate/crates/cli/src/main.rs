//! `pegasus`: command-line front end for the tiling engine.

use std::fmt::Write as _;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use pegasus_core::analysis::{census, diameter, periodicity_scan};
use pegasus_core::bundle::Bundle;
use pegasus_core::forcing::{reproduce_case_tree, CaseNode, Manifest, NodeStatus, render_tree};
use pegasus_core::hierarchy::{
    case_book, classify_hexagon, compose, decompose, inflate, CaseBook, CaseLabel, SuperPatch,
};
use pegasus_core::lattice::disk;
use pegasus_core::render::{render_svg, RenderStyle};
use pegasus_core::{RuleSet, Shape};

const RULES_DIR_VAR: &str = "PEGASUS_RULES_DIR";

#[derive(Parser, Debug)]
#[command(name = "pegasus", version, about = "Matching rules, case analysis and supertiles for the Pegasus tile pair")]
struct Cli {
    /// Rule file; defaults to the bundled rule set.
    #[arg(long, global = true, value_name = "PATH")]
    rules: Option<PathBuf>,
    /// Write the main output here instead of standard output.
    #[arg(long, global = true, value_name = "PATH")]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Machine,
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum)]
enum SeedShape {
    Hexagon,
    Triangle,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Rebuild the case tree and compare it with the expected counts.
    VerifyCases {
        #[arg(long, value_name = "PATH")]
        expected: Option<PathBuf>,
        /// Depth of the printed transcript.
        #[arg(long, default_value_t = 3)]
        depth: usize,
        #[arg(long, default_value_t = 1_000_000)]
        limit: u64,
    },
    /// Group a patch into supertiles.
    Compose {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        levels: u32,
    },
    /// Replace supertiles by their children.
    Decompose {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        #[arg(long, default_value_t = 1)]
        levels: u32,
    },
    /// Grow a patch from one supertile.
    Inflate {
        #[arg(long, value_enum, default_value_t = SeedShape::Hexagon)]
        seed: SeedShape,
        #[arg(long, default_value_t = 0)]
        levels: u32,
    },
    /// List matching-rule violations.
    Check {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
    },
    /// Look for translations mapping the patch onto itself.
    Periodicity {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Largest vector norm tried; defaults to a third of the diameter.
        #[arg(long)]
        max_norm: Option<i32>,
        /// Fraction of the patch a translate must overlap.
        #[arg(long, default_value_t = 0.5)]
        min_overlap: f64,
    },
    /// Tile and case counts.
    Stats {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Only count cells whose disk of this radius is fully placed.
        #[arg(long, default_value_t = 0)]
        radius: usize,
    },
    /// Draw a patch as SVG.
    Render {
        #[arg(long = "in", value_name = "PATH")]
        input: PathBuf,
        /// Also outline the supertiles this many levels up.
        #[arg(long, value_name = "K")]
        overlay_level: Option<u32>,
        #[arg(long, default_value_t = 40.0)]
        scale: f64,
    },
}

/// Exit status 1 (domain) or 2 (usage, input).
enum Failure {
    Domain(String),
    Usage(String),
}

impl Failure {
    fn code(&self) -> u8 {
        match self {
            Failure::Domain(_) => 1,
            Failure::Usage(_) => 2,
        }
    }
}

fn usage(e: impl ToString) -> Failure {
    Failure::Usage(e.to_string())
}

struct Ctx {
    dir: Option<PathBuf>,
    rules: Option<PathBuf>,
    format: Format,
}

impl Ctx {
    fn rules(&self) -> Result<RuleSet, Failure> {
        Bundle::load_rules(self.dir.as_deref(), self.rules.as_deref()).map_err(usage)
    }

    fn bundle(&self) -> Result<Bundle, Failure> {
        Bundle::load(self.dir.as_deref(), self.rules.as_deref()).map_err(usage)
    }

    fn book(&self, b: &Bundle) -> Result<CaseBook, Failure> {
        let tree = reproduce_case_tree(&b.rules, &b.seed, &b.schedule, &b.manifest, 1_000_000).map_err(usage)?;
        case_book(&b.rules, &tree, &b.manifest).map_err(|e| Failure::Domain(e.to_string()))
    }

    fn machine(&self) -> bool {
        self.format == Format::Machine
    }
}

fn read_patch(path: &Path, rs: &RuleSet) -> Result<SuperPatch, Failure> {
    let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
    SuperPatch::parse(&text, rs).map_err(|e| usage(format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let ctx = Ctx { dir: std::env::var_os(RULES_DIR_VAR).map(PathBuf::from), rules: cli.rules, format: cli.format };
    let result = run(&ctx, cli.command).and_then(|(text, ok)| {
        match &cli.out {
            Some(path) => std::fs::write(path, &text).map_err(|e| usage(format!("{}: {e}", path.display())))?,
            None => {
                let _ = std::io::stdout().write_all(text.as_bytes());
            }
        }
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(f) => {
            let (Failure::Domain(m) | Failure::Usage(m)) = &f;
            eprintln!("pegasus: {m}");
            ExitCode::from(f.code())
        }
    }
}

/// Output text and whether the domain check passed.
fn run(ctx: &Ctx, command: Command) -> Result<(String, bool), Failure> {
    match command {
        Command::VerifyCases { expected, depth, limit } => verify_cases(ctx, expected.as_deref(), depth, limit),
        Command::Compose { input, levels } => {
            let b = ctx.bundle()?;
            let book = ctx.book(&b)?;
            let mut sp = read_patch(&input, &b.rules)?;
            for _ in 0..levels {
                let c = compose(&b.rules, &b.substitution, &book, &sp).map_err(|e| Failure::Domain(e.to_string()))?;
                eprintln!(
                    "level {}: {} supertiles, {} residue cells",
                    c.supertiles.level,
                    c.supertiles.patch.len(),
                    c.residue.len()
                );
                sp = c.supertiles;
            }
            Ok((sp.serialize(&b.rules), true))
        }
        Command::Decompose { input, levels } => {
            let b = ctx.bundle()?;
            let mut sp = read_patch(&input, &b.rules)?;
            if levels > sp.level {
                return Err(Failure::Domain(format!("cannot go {levels} levels down from level {}", sp.level)));
            }
            for _ in 0..levels {
                sp = decompose(&b.rules, &b.substitution, &sp).map_err(|e| Failure::Domain(e.to_string()))?;
            }
            Ok((sp.serialize(&b.rules), true))
        }
        Command::Inflate { seed, levels } => {
            let b = ctx.bundle()?;
            let shape = match seed {
                SeedShape::Hexagon => Shape::Hexagon,
                SeedShape::Triangle => Shape::Triangle,
            };
            Ok((inflate(&b.rules, &b.substitution, shape, levels).serialize(&b.rules), true))
        }
        Command::Check { input } => {
            let rs = ctx.rules()?;
            let p = read_patch(&input, &rs)?.patch;
            let violations = p.legality_violations(&rs);
            let mut out = String::new();
            if ctx.machine() {
                let _ = writeln!(out, "violations {}", violations.len());
            } else {
                let _ = writeln!(out, "{} violations", violations.len());
            }
            for v in &violations {
                let star: Vec<String> = v
                    .star
                    .iter()
                    .map(|e| e.map_or("?".to_string(), |(s, l)| format!("{}:{}", s.star_token(), rs.symbol(l))))
                    .collect();
                let _ = writeln!(out, "violation {} {} {:?} {}", v.vertex.a, v.vertex.b, v.vertex.dir, star.join(","));
            }
            Ok((out, violations.is_empty()))
        }
        Command::Periodicity { input, max_norm, min_overlap } => {
            let rs = ctx.rules()?;
            let p = read_patch(&input, &rs)?.patch;
            let n = max_norm.unwrap_or(diameter(&p) / 3);
            let r = periodicity_scan(&p, n, min_overlap);
            let mut out = String::new();
            if ctx.machine() {
                let _ = writeln!(out, "max-norm {}", r.max_norm);
                for (v, c) in r.periods.iter().zip(&r.coverage) {
                    let _ = writeln!(out, "period {} {} {:.6}", v.0, v.1, c);
                }
            } else {
                let _ = writeln!(out, "max norm {}: {} period vectors", r.max_norm, r.periods.len());
                for (v, c) in r.periods.iter().zip(&r.coverage) {
                    let _ = writeln!(out, "period ({}, {}) covers {:.1}%", v.0, v.1, 100.0 * c);
                }
            }
            Ok((out, true))
        }
        Command::Stats { input, radius } => stats(ctx, &input, radius),
        Command::Render { input, overlay_level, scale } => {
            if !(scale > 0.0 && scale.is_finite()) {
                return Err(usage("--scale must be positive"));
            }
            let (rs, overlay, sp) = match overlay_level {
                None | Some(0) => {
                    let rs = ctx.rules()?;
                    let sp = read_patch(&input, &rs)?;
                    (rs, None, sp)
                }
                Some(k) => {
                    let b = ctx.bundle()?;
                    let book = ctx.book(&b)?;
                    let sp = read_patch(&input, &b.rules)?;
                    let mut up = sp.clone();
                    for _ in 0..k {
                        up = compose(&b.rules, &b.substitution, &book, &up)
                            .map_err(|e| Failure::Domain(e.to_string()))?
                            .supertiles;
                    }
                    (b.rules, Some(up), sp)
                }
            };
            if sp.level != 0 || sp.anchor != (0, 0) {
                return Err(usage("render draws level-0 patches"));
            }
            let mut style = RenderStyle::new(&rs, scale);
            style.overlay = overlay;
            Ok((render_svg(&rs, &sp.patch, &style), true))
        }
    }
}

fn verify_cases(ctx: &Ctx, expected: Option<&Path>, depth: usize, limit: u64) -> Result<(String, bool), Failure> {
    let b = ctx.bundle()?;
    let manifest = match expected {
        Some(path) => {
            let text = std::fs::read_to_string(path).map_err(|e| usage(format!("{}: {e}", path.display())))?;
            Manifest::parse(&text).map_err(|e| usage(format!("{}: {e}", path.display())))?
        }
        None => b.manifest.clone(),
    };
    let tree = reproduce_case_tree(&b.rules, &b.seed, &b.schedule, &manifest, limit).map_err(Failure::Domain)?;
    let root = &tree.report.tree;
    let checks = tree.check(&manifest);
    let passed = checks.iter().filter(|c| c.passed()).count();
    let ok = passed == checks.len();
    let mut out = String::new();
    if ctx.machine() {
        machine_tree(root, "root", depth, &mut out);
        for c in &checks {
            let found = c.found.map_or("- -".to_string(), |(b, x)| format!("{b} {x}"));
            let _ = writeln!(
                out,
                "check {} {} {} {} {}",
                c.expected.path,
                c.expected.branches,
                c.expected.contradictions,
                found,
                if c.passed() { "pass" } else { "fail" }
            );
        }
        for k in 1..=3 {
            if let Some(n) = tree.node(&format!("case{k}")) {
                let _ = writeln!(out, "terminal case{k} {}", n.status.token());
            }
        }
        let _ = writeln!(out, "result {}", if ok { "pass" } else { "fail" });
    } else {
        let _ = writeln!(
            out,
            "{} top-level cases at {}; {} completions",
            root.children.len(),
            root.probe.map_or("-".to_string(), |c| c.to_string()),
            root.completions
        );
        out.push_str(&render_tree(&b.rules, &prune(root, depth)));
        for c in &checks {
            let found = c.found.map_or("path not found".to_string(), |(b, x)| format!("{b} branches, {x} contradictions"));
            let _ = writeln!(
                out,
                "{}: expected {} branches, {} contradictions; found {found}: {}",
                c.expected.path,
                c.expected.branches,
                c.expected.contradictions,
                if c.passed() { "ok" } else { "MISMATCH" }
            );
        }
        for k in 1..=3 {
            if let Some(n) = tree.node(&format!("case{k}")) {
                let _ = writeln!(out, "case {k} ends {}", n.status.token());
            }
        }
        let _ = writeln!(out, "{passed} of {} checks match", checks.len());
    }
    Ok((out, ok))
}

/// The tree cut below `depth`.
fn prune(n: &CaseNode, depth: usize) -> CaseNode {
    let mut m = n.clone();
    if depth == 0 {
        m.children.clear();
        if m.status != NodeStatus::Contradiction {
            m.probe = None;
        }
    } else {
        m.children = n.children.iter().map(|c| prune(c, depth - 1)).collect();
    }
    m
}

fn machine_tree(n: &CaseNode, path: &str, depth: usize, out: &mut String) {
    let _ = writeln!(
        out,
        "node {path} {} {} {} {}",
        n.status.token(),
        n.completions,
        n.children.len(),
        n.contradictions()
    );
    if depth > 0 {
        for (i, c) in n.children.iter().enumerate() {
            machine_tree(c, &format!("{path}.{}", i + 1), depth - 1, out);
        }
    }
}

fn stats(ctx: &Ctx, input: &Path, radius: usize) -> Result<(String, bool), Failure> {
    let b = ctx.bundle()?;
    let book = ctx.book(&b)?;
    let full = read_patch(input, &b.rules)?.patch;
    let p = if radius == 0 {
        full.clone()
    } else {
        let keep = full.cells().filter(|c| disk(**c, radius).iter().all(|x| full.contains(x))).copied().collect();
        full.restrict(&keep)
    };
    let c = census(&b.rules, &p);
    let mut cases = [0usize; 5];
    for h in p.cells().filter(|c| c.is_hex()) {
        let slot = match classify_hexagon(&b.rules, &book, &full, *h) {
            Ok(CaseLabel::Case1) => 0,
            Ok(CaseLabel::Case2) => 1,
            Ok(CaseLabel::Case3) => 2,
            Ok(CaseLabel::Undetermined) => 3,
            Err(_) => 4,
        };
        cases[slot] += 1;
    }
    let sep = if ctx.machine() { " " } else { ": " };
    let mut out = String::new();
    let mut line = |k: &str, v: String| {
        let _ = writeln!(out, "{k}{sep}{v}");
    };
    line("tiles", c.total().to_string());
    line("hexagons", c.hexagons.to_string());
    line("triangles", c.triangles.to_string());
    line("ratio", c.ratio().map_or("-".into(), |r| format!("{r:.4}")));
    for (name, n) in &c.per_prototile {
        line(&format!("prototile {name}"), n.to_string());
    }
    for (key, n) in &c.per_orientation {
        line(&format!("orientation {key}"), n.to_string());
    }
    for (k, n) in ["case1", "case2", "case3", "undetermined", "ambiguous"].iter().zip(cases) {
        line(k, n.to_string());
    }
    Ok((out, true))
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn cli_definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn prune_keeps_root_counts() {
        let leaf = CaseNode { placement: None, probe: None, children: vec![], status: NodeStatus::ClosedUnique, completions: 1 };
        let root = CaseNode {
            placement: None,
            probe: None,
            children: vec![leaf.clone(), leaf],
            status: NodeStatus::ClosedMultiple,
            completions: 2,
        };
        assert_eq!(prune(&root, 0).children.len(), 0);
        assert_eq!(prune(&root, 1), root);
    }
}
