//! End-to-end acceptance checks. Prints one line per criterion and exits
//! nonzero if any fails.

use std::path::{Path, PathBuf};
use std::process::Command;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

use rop_core::jet::{total_derivative, RewriteSystem};
use rop_core::kernel::{random_zero_test, Monomial, Poly, ZeroTest};
use rop_core::linearization::first_variation_residual;
use rop_core::problem::{parse_problem, Problem};
use rop_core::recursion::{verify, EquationContext, Orientation, TwistRelations};
use rop_core::{Expr, MultiIndex, Symbol, Unknown, Var};

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check);

fn problems_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems")
}

fn source(name: &str) -> String {
    std::fs::read_to_string(problems_dir().join(format!("{name}.rop"))).unwrap()
}

fn scratch(tag: &str, text: &str) -> PathBuf {
    let path = std::env::temp_dir().join(format!("rop-acceptance-{}-{tag}.rop", std::process::id()));
    std::fs::write(&path, text).unwrap();
    path
}

struct Outcome {
    code: i32,
    json: Value,
    elapsed: Duration,
}

fn rop(args: &[&str], file: &Path) -> Outcome {
    let start = Instant::now();
    let out = Command::new(env!("CARGO_BIN_EXE_rop"))
        .args(args)
        .arg(file)
        .arg("--json")
        .output()
        .expect("rop runs");
    let elapsed = start.elapsed();
    let json = serde_json::from_slice(&out.stdout).unwrap_or(Value::Null);
    Outcome { code: out.status.code().unwrap_or(-1), json, elapsed }
}

/// Replaces the twist and orientation lines of a problem.
fn with_twist(text: &str, twist: &[(&str, &str)], orientation: &str) -> String {
    let mut out: String = text
        .lines()
        .filter(|l| !l.starts_with("twist ") && !l.starts_with("orientation "))
        .map(|l| format!("{l}\n"))
        .collect();
    for (slot, value) in twist {
        out.push_str(&format!("twist {slot} = {value}\n"));
    }
    out.push_str(&format!("orientation {orientation}\n"));
    out
}

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn verify_passes(name: &str, limit: Duration, orientation: &str, assumption: Option<&str>) -> Check {
    let o = rop(&["verify"], &problems_dir().join(format!("{name}.rop")));
    ensure(o.code == 0, format!("exit code {}", o.code))?;
    ensure(o.json["verdict"] == "PASS", format!("verdict {}", o.json["verdict"]))?;
    let residuals = o.json["residuals"].as_array().cloned().unwrap_or_default();
    ensure(residuals.len() == 2, "expected two residuals")?;
    for r in &residuals {
        ensure(r["value"] == "0", format!("{} residual is {}", r["name"], r["value"]))?;
        ensure(r["orientation"] == orientation, format!("orientation {}", r["orientation"]))?;
    }
    if let Some(a) = assumption {
        let listed = o.json["assumptions"].as_array().cloned().unwrap_or_default();
        ensure(listed.iter().any(|v| v == a), format!("assumption `{a}` not reported"))?;
    }
    ensure(o.elapsed < limit, format!("took {:?}", o.elapsed))?;
    Ok(format!("compatibility = symmetry = 0 [{orientation}] in {:.2?}", o.elapsed))
}

fn criterion_1() -> Check {
    verify_passes("eq5", Duration::from_secs(120), "swapped", Some("u_s != 0"))
}

fn criterion_2() -> Check {
    verify_passes("dfkn2", Duration::from_secs(60), "forward", Some("u_x != 0"))
}

fn criterion_3() -> Check {
    verify_passes("dfkn3", Duration::from_secs(120), "forward", Some("u_x != 0"))
}

/// The known twists, canonicalized through the problem parser.
fn expected_twist(name: &str, twist: &[(&str, &str)]) -> Vec<(String, String)> {
    let p = parse_problem(&with_twist(&source(name), twist, "forward")).unwrap();
    let f = p.twist.unwrap();
    let mut out = Vec::new();
    for (i, row) in f.iter().enumerate() {
        for (s, value) in row.iter().enumerate() {
            out.push((format!("f{}_{}", i + 1, s), value.to_string()));
        }
    }
    out
}

const DFKN2_TWIST: [(&str, &str); 4] =
    [("f1_1", "-u_xz/u_x"), ("f2_1", "-u_xx/u_x"), ("f1_0", "0"), ("f2_0", "0")];

const DFKN3_TWIST: [(&str, &str); 4] = [
    ("f1_0", "(alpha*(u_xy - u_xz) - u_xz)/u_x"),
    ("f1_1", "(alpha*(u_xy - u_xz) - u_xz)/u_x"),
    ("f2_0", "(alpha*(u_xz - u_xt) - u_xt)/u_x"),
    ("f2_1", "(alpha*(u_xz - u_xt) - u_xt)/u_x"),
];

fn criterion_4() -> Check {
    let mut notes = Vec::new();
    for (name, twist) in [("dfkn2", &DFKN2_TWIST), ("dfkn3", &DFKN3_TWIST)] {
        let expected = expected_twist(name, twist);
        let o = rop(&["solve", "--basis", "auto"], &problems_dir().join(format!("{name}.rop")));
        ensure(o.code == 0, format!("{name}: exit code {}", o.code))?;
        let solutions = o.json["solutions"].as_array().cloned().unwrap_or_default();
        let found = solutions.iter().any(|s| {
            s["orientation"] == "forward"
                && s["free"].as_array().is_some_and(|f| f.is_empty())
                && expected.iter().all(|(slot, v)| s["f"][slot] == v.as_str())
        });
        ensure(found, format!("{name}: known twist not among {} solutions", solutions.len()))?;
        ensure(o.elapsed < Duration::from_secs(600), format!("{name}: took {:?}", o.elapsed))?;
        notes.push(format!("{name} in {:.2?}", o.elapsed));
    }
    Ok(format!("known twists recovered ({})", notes.join(", ")))
}

fn library_residuals(p: &Problem) -> Vec<Expr> {
    let ctx = EquationContext::new(&p.equation, p.ranking.clone(), p.assumptions.clone(), 4, None).unwrap();
    let twist = TwistRelations { f: p.twist.clone().unwrap(), orientation: Orientation::Forward };
    let r = verify(&ctx, &p.pair, &twist).unwrap();
    vec![r.compatibility, r.symmetry]
}

fn criterion_5() -> Check {
    let zero = [("f1_1", "0"), ("f2_1", "0"), ("f1_0", "0"), ("f2_0", "0")];
    let flipped = [("f1_1", "u_xz/u_x"), ("f2_1", "-u_xx/u_x"), ("f1_0", "0"), ("f2_0", "0")];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for (tag, twist) in [("zero", &zero), ("flipped", &flipped)] {
        let text = with_twist(&source("dfkn2"), twist, "forward");
        let o = rop(&["verify"], &scratch(tag, &text));
        ensure(o.code == 1 && o.json["verdict"] == "FAIL", format!("{tag}: verdict {}", o.json["verdict"]))?;
        let residuals = library_residuals(&parse_problem(&text).unwrap());
        let nonzero: Vec<&Expr> = residuals.iter().filter(|r| !r.is_zero()).collect();
        ensure(!nonzero.is_empty(), format!("{tag}: no nonzero residual"))?;
        for r in nonzero {
            let verdict = random_zero_test(r, 8, 1 << 30, &mut rng);
            ensure(verdict == ZeroTest::Nonzero, format!("{tag}: oracle found no nonzero value"))?;
        }
    }
    Ok("zero and sign-flipped twists FAIL; residuals nonzero at random points".into())
}

fn criterion_6() -> Check {
    let perturbations = [
        ("eq5", "lax D_y - u_y/u_s*D_s", "lax D_y - u_z/u_s*D_s"),
        ("dfkn2", "u_t/u_x*D_x", "u_t/u_y*D_x"),
        ("dfkn3", "lax D_y - lam*D_z - c*m*D_x", "lax D_y - lam*D_z - c*n*D_x"),
    ];
    for (name, from, to) in perturbations {
        let o = rop(&["lax-check"], &problems_dir().join(format!("{name}.rop")));
        ensure(o.code == 0 && o.json["verdict"] == "PASS", format!("{name}: verdict {}", o.json["verdict"]))?;
        let text = source(name);
        ensure(text.contains(from), format!("{name}: perturbation site missing"))?;
        let o = rop(&["lax-check"], &scratch(&format!("lax-{name}"), &text.replacen(from, to, 1)));
        ensure(
            o.code == 1 && o.json["verdict"] == "FAIL",
            format!("{name} perturbed: verdict {}", o.json["verdict"]),
        )?;
    }
    Ok("all three pairs PASS; single-coefficient perturbations FAIL".into())
}

fn var(c: char) -> Var {
    Var::new(c).unwrap()
}

/// x, y, z, t and every u-jet of order at most two in them.
fn alphabet() -> Vec<Symbol> {
    let vars: Vec<Var> = "xyzt".chars().map(var).collect();
    let mut out: Vec<Symbol> = vars.iter().map(|&v| Symbol::independent(v)).collect();
    out.push(Symbol::jet(Unknown::Field, MultiIndex::empty()));
    for (i, &a) in vars.iter().enumerate() {
        out.push(Symbol::jet(Unknown::Field, MultiIndex::from_vars(&[a]).unwrap()));
        for &b in &vars[i..] {
            out.push(Symbol::jet(Unknown::Field, MultiIndex::from_vars(&[a, b]).unwrap()));
        }
    }
    out
}

fn random_poly(rng: &mut ChaCha8Rng, syms: &[Symbol], max_terms: usize) -> Poly {
    let mut p = Poly::zero();
    for _ in 0..rng.gen_range(1..=max_terms) {
        let factors = (0..rng.gen_range(0..=3))
            .map(|_| (syms[rng.gen_range(0..syms.len())], rng.gen_range(1..=2)))
            .collect();
        let c = rng.gen_range(1..=5) * if rng.gen_bool(0.5) { 1 } else { -1 };
        p = &p + &Poly::term(Monomial::from_factors(factors), rop_core::kernel::q(c));
    }
    p
}

fn random_expr(rng: &mut ChaCha8Rng, syms: &[Symbol]) -> Expr {
    let n = random_poly(rng, syms, 4);
    let d = random_poly(rng, syms, 2);
    Expr::new(n, if d.is_zero() { Poly::one() } else { d }).unwrap()
}

fn criterion_7() -> Check {
    for name in ["eq5", "dfkn2", "dfkn3"] {
        let p = parse_problem(&source(name)).unwrap();
        let r = first_variation_residual(&p.equation).map_err(|e| e.to_string())?;
        ensure(r.is_zero(), format!("{name}: first variation residual {r}"))?;
    }
    let syms = alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for k in 0..20 {
        let f = Expr::from_poly(random_poly(&mut rng, &syms, 6));
        let r = first_variation_residual(&f).map_err(|e| e.to_string())?;
        ensure(r.is_zero(), format!("random equation {k} ({f}): residual {r}"))?;
    }
    Ok("identity holds for 3 corpus equations and 20 random ones".into())
}

fn criterion_8() -> Check {
    const CASES: usize = 1000;
    let start = Instant::now();
    let syms = alphabet();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let vars: Vec<Var> = "xyzt".chars().map(var).collect();
    let dfkn2 = parse_problem(&source("dfkn2")).unwrap();
    let ctx = EquationContext::new(&dfkn2.equation, dfkn2.ranking.clone(), dfkn2.assumptions.clone(), 4, None)
        .unwrap();
    let sys: &RewriteSystem = ctx.field();
    let d = |e: &Expr, v: Var| total_derivative(e, v).map_err(|e| e.to_string());
    for k in 0..CASES {
        let a = random_expr(&mut rng, &syms);
        let b = random_expr(&mut rng, &syms);
        let v = vars[rng.gen_range(0..4)];
        let w = vars[rng.gen_range(0..4)];

        let e = &(&a * &b) - &a;
        let n = e.normalize().map_err(|e| e.to_string())?;
        ensure(n.normalize().map_err(|e| e.to_string())? == n, format!("case {k}: normalize not idempotent"))?;

        ensure(d(&d(&a, v)?, w)? == d(&d(&a, w)?, v)?, format!("case {k}: D_{v} D_{w} != D_{w} D_{v} on {a}"))?;

        let lhs = d(&(&a * &b), v)?;
        let rhs = &(&d(&a, v)? * &b) + &(&a * &d(&b, v)?);
        ensure(lhs == rhs, format!("case {k}: Leibniz fails for {a}, {b}"))?;

        let once = sys.reduce(&a).map_err(|e| e.to_string())?;
        ensure(sys.reduce(&once).map_err(|e| e.to_string())? == once, format!("case {k}: reduce not a projection"))?;
    }
    let elapsed = start.elapsed();
    ensure(elapsed < Duration::from_secs(300), format!("took {elapsed:?}"))?;
    Ok(format!("{CASES} cases each of the four properties in {elapsed:.2?}"))
}

fn criterion_9() -> Check {
    let mut total = 0;
    for name in ["eq5", "dfkn2", "dfkn3"] {
        let o = rop(&["solve", "--orientation", "both"], &problems_dir().join(format!("{name}.rop")));
        ensure(o.code == 0, format!("{name}: exit code {}", o.code))?;
        let solutions = o.json["solutions"].as_array().cloned().unwrap_or_default();
        ensure(!solutions.is_empty(), format!("{name}: no solutions"))?;
        for (k, s) in solutions.iter().enumerate() {
            ensure(s["verified"] == true, format!("{name} #{k}: not verified"))?;
            let orientation = s["orientation"].as_str().unwrap_or_default();
            let f = s["f"].as_object().cloned().unwrap_or_default();
            let twist: Vec<(&str, &str)> =
                f.iter().map(|(slot, v)| (slot.as_str(), v.as_str().unwrap_or_default())).collect();
            let path = scratch(&format!("loop-{name}-{k}"), &with_twist(&source(name), &twist, orientation));
            let back = rop(&["verify"], &path);
            ensure(back.code == 0, format!("{name} #{k} [{orientation}]: re-verify gave {}", back.json["verdict"]))?;
            total += 1;
        }
    }
    Ok(format!("{total} solutions across the corpus re-verify from their printed form"))
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("eq5 verification", criterion_1),
        ("dfkn2 verification", criterion_2),
        ("dfkn3 verification", criterion_3),
        ("solve-mode recovery", criterion_4),
        ("negative controls", criterion_5),
        ("Lax validation", criterion_6),
        ("linearization properties", criterion_7),
        ("kernel properties", criterion_8),
        ("closed-loop soundness", criterion_9),
    ];
    let mut failed = 0;
    for (k, (title, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(note) => println!("criterion {} PASS  {title}: {note}", k + 1),
            Err(why) => {
                failed += 1;
                println!("criterion {} FAIL  {title}: {why}", k + 1);
            }
        }
    }
    println!("acceptance: {} of {} criteria passed", criteria.len() - failed, criteria.len());
    let prefix = format!("rop-acceptance-{}-", std::process::id());
    for entry in std::fs::read_dir(std::env::temp_dir()).into_iter().flatten().flatten() {
        if entry.file_name().to_string_lossy().starts_with(&prefix) {
            let _ = std::fs::remove_file(entry.path());
        }
    }
    if failed > 0 {
        std::process::exit(1);
    }
}
