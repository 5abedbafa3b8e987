//! Command orchestration and reports.

use std::collections::BTreeMap;
use std::fmt;
use std::time::{Duration, Instant};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::jet::push_unique;
use crate::kernel::Expr;
use crate::lax::check_lax;
use crate::linearization::first_variation_residual;
use crate::par;
use crate::problem::{OrientationChoice, Problem};
use crate::recursion::{
    default_ansatz, derive_determining_system, hierarchy_relations, rename_unknowns, slot_name,
    solve_determining, verify, EquationContext, Orientation, TwistRelations, VerifyReport,
};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Command {
    LaxCheck,
    Linearize,
    Verify,
    Solve,
    Hierarchy,
}

impl Command {
    pub fn name(self) -> &'static str {
        match self {
            Command::LaxCheck => "lax-check",
            Command::Linearize => "linearize",
            Command::Verify => "verify",
            Command::Solve => "solve",
            Command::Hierarchy => "hierarchy",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BasisChoice {
    Auto,
    File,
}

#[derive(Clone, Debug)]
pub struct Options {
    pub orientation: Option<OrientationChoice>,
    pub max_order: u32,
    pub branch_bound: usize,
    /// `None` uses the file's ansatz when present, else the default one.
    pub basis: Option<BasisChoice>,
    pub k: usize,
    pub timeout: Option<Duration>,
}

impl Default for Options {
    fn default() -> Options {
        Options {
            orientation: None,
            max_order: 4,
            branch_bound: 64,
            basis: None,
            k: 1,
            timeout: None,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Verdict {
    Pass,
    Fail,
    Solutions,
    Empty,
    Info,
}

impl Verdict {
    pub fn exit_code(self) -> i32 {
        match self {
            Verdict::Pass | Verdict::Solutions | Verdict::Info => 0,
            Verdict::Fail | Verdict::Empty => 1,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Verdict::Pass => "PASS",
            Verdict::Fail => "FAIL",
            Verdict::Solutions => "SOLUTIONS",
            Verdict::Empty => "EMPTY",
            Verdict::Info => "INFO",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ResidualEntry {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub orientation: Option<Orientation>,
    pub name: String,
    pub value: String,
    pub zero: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SolutionEntry {
    pub orientation: Orientation,
    /// Slot name (`f1_0`, …) to coefficient.
    pub f: BTreeMap<String, String>,
    /// Unknown constants left free in `f`.
    pub free: Vec<String>,
    pub verified: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub problem: String,
    pub command: String,
    pub verdict: Verdict,
    pub residuals: Vec<ResidualEntry>,
    pub solutions: Vec<SolutionEntry>,
    pub assumptions: Vec<String>,
    pub orientation: Vec<Orientation>,
    pub timings: BTreeMap<String, f64>,
    pub details: Vec<String>,
    pub warnings: Vec<String>,
    /// Solved twists in the same order as `solutions`; not serialized.
    #[serde(skip)]
    pub twists: Vec<TwistRelations>,
}

impl Report {
    fn new(problem: &Problem, command: Command) -> Report {
        Report {
            problem: problem.name.clone(),
            command: command.name().into(),
            verdict: Verdict::Info,
            residuals: Vec::new(),
            solutions: Vec::new(),
            assumptions: Vec::new(),
            orientation: Vec::new(),
            timings: BTreeMap::new(),
            details: Vec::new(),
            warnings: problem.warnings.clone(),
            twists: Vec::new(),
        }
    }

    fn set_assumptions(&mut self, items: &[Expr]) {
        self.assumptions = items.iter().map(|a| format!("{a} != 0")).collect();
    }

    fn residual(&mut self, orientation: Option<Orientation>, name: impl Into<String>, value: &Expr) {
        self.residuals.push(ResidualEntry {
            orientation,
            name: name.into(),
            value: value.to_string(),
            zero: value.is_zero(),
        });
    }

    pub fn exit_code(&self) -> i32 {
        self.verdict.exit_code()
    }
}

impl fmt::Display for Report {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} {}: {}", self.command, self.problem, self.verdict.name())?;
        if !self.orientation.is_empty() {
            let os: Vec<&str> = self.orientation.iter().map(|o| o.name()).collect();
            writeln!(f, "orientation: {}", os.join(", "))?;
        }
        if !self.assumptions.is_empty() {
            writeln!(f, "assuming: {}", self.assumptions.join(", "))?;
        }
        if !self.residuals.is_empty() {
            writeln!(f, "residuals:")?;
            for r in &self.residuals {
                match r.orientation {
                    Some(o) => writeln!(f, "  [{o}] {} = {}", r.name, r.value)?,
                    None => writeln!(f, "  {} = {}", r.name, r.value)?,
                }
            }
        }
        for (k, s) in self.solutions.iter().enumerate() {
            let status = if s.verified { "verified" } else { "not verified" };
            writeln!(f, "solution {} [{}] ({status}):", k + 1, s.orientation)?;
            for (slot, e) in &s.f {
                writeln!(f, "  {slot} = {e}")?;
            }
            if !s.free.is_empty() {
                writeln!(f, "  free: {}", s.free.join(", "))?;
            }
        }
        for d in &self.details {
            writeln!(f, "{d}")?;
        }
        for w in &self.warnings {
            writeln!(f, "warning: {w}")?;
        }
        if let Some(t) = self.timings.get("total") {
            writeln!(f, "time: {t:.3}s")?;
        }
        Ok(())
    }
}

fn context(problem: &Problem, options: &Options) -> Result<EquationContext> {
    EquationContext::new(
        &problem.equation,
        problem.ranking.clone(),
        problem.assumptions.clone(),
        options.max_order,
        options.timeout,
    )
}

fn orientations(problem: &Problem, options: &Options) -> Vec<Orientation> {
    options
        .orientation
        .or(problem.orientation)
        .unwrap_or(OrientationChoice::Both)
        .orientations()
}

pub fn run(command: Command, problem: &Problem, options: &Options) -> Result<Report> {
    let start = Instant::now();
    let mut report = Report::new(problem, command);
    match command {
        Command::LaxCheck => lax_check(problem, options, &mut report)?,
        Command::Linearize => linearize(problem, &mut report)?,
        Command::Verify => verify_command(problem, options, &mut report)?,
        Command::Solve => solve_command(problem, options, &mut report)?,
        Command::Hierarchy => hierarchy(problem, options, &mut report)?,
    }
    report.timings.insert("total".into(), start.elapsed().as_secs_f64());
    Ok(report)
}

fn lax_check(problem: &Problem, options: &Options, report: &mut Report) -> Result<()> {
    let ctx = context(problem, options)?;
    let r = check_lax(&problem.pair, ctx.field())?;
    report.verdict = if r.pass { Verdict::Pass } else { Verdict::Fail };
    report.set_assumptions(&r.assumptions);
    for (name, value) in &r.residuals {
        report.residual(None, name.clone(), value);
    }
    report
        .details
        .push("criterion: [X_1, X_2] = a*X_1 + b*X_2 modulo the equation and its consequences".into());
    report.details.push(format!("solved equation: {}", ctx.field_rule()));
    for (i, op) in problem.pair.ops.iter().enumerate() {
        report.details.push(format!("X{}^1 = {}", i + 1, op.x1));
        report.details.push(format!("X{}^0 = {}", i + 1, op.x0));
        if op.negated {
            report
                .details
                .push(format!("operator {} was negated to normalize the sign of X{}^1", i + 1, i + 1));
        }
    }
    if let Some((a, b)) = &r.multipliers {
        report.details.push(format!("a = {a}"));
        report.details.push(format!("b = {b}"));
    }
    Ok(())
}

fn linearize(problem: &Problem, report: &mut Report) -> Result<()> {
    let lin = crate::linearization::linearize(&problem.equation)?;
    report.details.push(format!("F = {}", problem.equation));
    report.details.push(format!("l_F = {lin}"));
    report
        .details
        .push(format!("l_F(U) = {}", lin.apply(crate::symbol::Unknown::Seed)));
    let fv = first_variation_residual(&problem.equation)?;
    report.residual(None, "first variation", &fv);
    report.verdict = if fv.is_zero() { Verdict::Info } else { Verdict::Fail };
    report.set_assumptions(&problem.assumptions);
    Ok(())
}

fn describe_verify(report: &mut Report, r: &VerifyReport) {
    let o = r.orientation;
    report.residual(Some(o), "compatibility", &r.compatibility);
    report.residual(Some(o), "symmetry", &r.symmetry);
    for (i, e) in r.relations.iter().enumerate() {
        report.details.push(format!("[{o}] E{} = {e}", i + 1));
    }
    for rule in &r.rules {
        report.details.push(format!("[{o}] {rule}"));
    }
    if r.retried {
        report.details.push(format!(
            "[{o}] retried with a raised order bound and reversed rule preference"
        ));
    }
    report
        .timings
        .insert(format!("verify.{o}"), r.elapsed.as_secs_f64());
}

fn twist_of(problem: &Problem) -> Result<[[Expr; 2]; 2]> {
    problem
        .twist
        .clone()
        .ok_or_else(|| Error::Usage(format!("{} has no twist lines to verify", problem.name)))
}

fn verify_command(problem: &Problem, options: &Options, report: &mut Report) -> Result<()> {
    let f = twist_of(problem)?;
    let ctx = context(problem, options)?;
    let os = orientations(problem, options);
    let results = par::map(&os, |&o| {
        verify(&ctx, &problem.pair, &TwistRelations { f: f.clone(), orientation: o })
    });
    let mut assumptions = Vec::new();
    let mut any = false;
    for (o, r) in os.iter().zip(results) {
        report.orientation.push(*o);
        match r {
            Ok(r) => {
                any |= r.pass;
                push_unique(&mut assumptions, r.assumptions.iter().cloned());
                describe_verify(report, &r);
            }
            Err(e) if os.len() > 1 && !matches!(e, Error::Timeout(_)) => {
                report.warnings.push(format!("[{o}] {e}"));
            }
            Err(e) => return Err(e),
        }
    }
    report.set_assumptions(&assumptions);
    report.verdict = if any { Verdict::Pass } else { Verdict::Fail };
    Ok(())
}

fn solve_command(problem: &Problem, options: &Options, report: &mut Report) -> Result<()> {
    let ctx = context(problem, options)?;
    let basis = match (options.basis, &problem.ansatz) {
        (Some(BasisChoice::File), None) => {
            return Err(Error::Usage(format!("{} has no ansatz lines", problem.name)))
        }
        (Some(BasisChoice::File), Some(b)) | (None, Some(b)) => b.clone(),
        (Some(BasisChoice::Auto), _) | (None, None) => {
            default_ansatz(&problem.equation, &problem.pair, &problem.vars)
        }
    };
    report.warnings.extend(basis.warnings.iter().cloned());
    report.details.push(format!("basis size: {}", basis.size()));
    let os = orientations(problem, options);
    let mut assumptions = Vec::new();
    let mut truncated = 0;
    for &o in &os {
        report.orientation.push(o);
        let t0 = Instant::now();
        let (sys, twist) = match derive_determining_system(&ctx, &problem.pair, &basis, o) {
            Ok(x) => x,
            Err(e) if os.len() > 1 && !matches!(e, Error::Timeout(_)) => {
                report.warnings.push(format!("[{o}] {e}"));
                continue;
            }
            Err(e) => return Err(e),
        };
        report.details.push(format!(
            "[{o}] determining system: {} equations in {} unknowns",
            sys.equations.len(),
            sys.unknowns.len()
        ));
        let outcome = solve_determining(&sys, options.branch_bound)?;
        report
            .details
            .push(format!("[{o}] branches: {}", outcome.branches));
        if outcome.unresolved > 0 {
            report.warnings.push(format!(
                "[{o}] {} branches left unresolved; solutions may be missing",
                outcome.unresolved
            ));
        }
        if outcome.truncated {
            truncated += outcome.unresolved;
        }
        let candidates: Vec<TwistRelations> = outcome
            .solutions
            .iter()
            .map(|s| twist.substitute(&s.values))
            .collect::<Result<_>>()?;
        let checks = par::map(&candidates, |t| verify(&ctx, &problem.pair, t));
        for ((sol, t), check) in outcome.solutions.iter().zip(&candidates).zip(checks) {
            let check = check?;
            if !check.pass {
                report.warnings.push(format!(
                    "[{o}] discarded a candidate that failed re-verification"
                ));
                continue;
            }
            push_unique(&mut assumptions, check.assumptions.iter().cloned());
            let mut f = BTreeMap::new();
            for i in 0..2 {
                for s in 0..2 {
                    f.insert(slot_name(i, s), t.f[i][s].to_string());
                }
            }
            report.solutions.push(SolutionEntry {
                orientation: o,
                f,
                free: sol.free.iter().map(|c| c.name()).collect(),
                verified: true,
            });
            report.twists.push(t.clone());
        }
        report
            .timings
            .insert(format!("solve.{o}"), t0.elapsed().as_secs_f64());
    }
    report.set_assumptions(&assumptions);
    if report.solutions.is_empty() && truncated > 0 {
        return Err(Error::BranchLimit { bound: options.branch_bound, unresolved: truncated });
    }
    report.verdict = if report.solutions.is_empty() { Verdict::Empty } else { Verdict::Solutions };
    Ok(())
}

fn hierarchy(problem: &Problem, options: &Options, report: &mut Report) -> Result<()> {
    let levels = hierarchy_relations(&problem.pair, options.k)?;
    for (k, rel) in levels.iter().enumerate() {
        let seed = format!("psi{k}");
        let image = format!("psi{}", k + 1);
        for (i, e) in rel.iter().enumerate() {
            report
                .details
                .push(format!("k={k} relation {}: {} = 0", i + 1, rename_unknowns(e, &seed, &image)));
        }
    }
    report.set_assumptions(&problem.assumptions);
    report.verdict = Verdict::Info;
    Ok(())
}
