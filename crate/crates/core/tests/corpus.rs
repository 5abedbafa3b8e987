use std::path::Path;

use rop_core::jet::solve_for_leading;
use rop_core::kernel::q;
use rop_core::lax::check_lax;
use rop_core::problem::{parse_problem, Problem};
use rop_core::recursion::ansatz::collect_equations;
use rop_core::recursion::{
    derive_determining_system, hierarchy_relations, relation_exprs, verify, AnsatzBasis, EquationContext,
    Orientation, TwistRelations,
};
use rop_core::{SymbolKind, Unknown};

const CORPUS: [&str; 3] = ["eq5", "dfkn2", "dfkn3"];

fn load(name: &str) -> Problem {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../problems").join(format!("{name}.rop"));
    parse_problem(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn context(p: &Problem) -> EquationContext {
    EquationContext::new(&p.equation, p.ranking.clone(), p.assumptions.clone(), 4, None).unwrap()
}

fn orientation(p: &Problem) -> Orientation {
    p.orientation.unwrap().orientations()[0]
}

fn file_twist(p: &Problem) -> TwistRelations {
    TwistRelations { f: p.twist.clone().unwrap(), orientation: orientation(p) }
}

#[test]
fn corpus_round_trips_through_the_printer() {
    for name in CORPUS {
        let p = load(name);
        let again = parse_problem(&p.to_string()).unwrap();
        assert_eq!(again.to_string(), p.to_string(), "{name}");
        assert_eq!(again.equation, p.equation, "{name}");
    }
}

#[test]
fn split_reconstructs_the_input_operators() {
    for name in CORPUS {
        let p = load(name);
        for i in 0..2 {
            let back = p.pair.ops[i].reconstruct();
            assert_eq!(back.to_string(), p.lax[i].to_string(), "{name} operator {}", i + 1);
        }
    }
}

#[test]
fn lax_check_ignores_nonzero_factors_of_the_equation() {
    for name in CORPUS {
        let p = load(name);
        let factor = p.assumptions[0].clone();
        let scaled = &p.equation * &factor;
        let base = EquationContext::new(&p.equation, p.ranking.clone(), p.assumptions.clone(), 4, None).unwrap();
        let ctx = EquationContext::new(&scaled, p.ranking.clone(), p.assumptions.clone(), 4, None).unwrap();
        assert_eq!(ctx.field_rule().rhs, base.field_rule().rhs, "{name}");
        assert!(check_lax(&p.pair, ctx.field()).unwrap().pass, "{name}");
    }
}

#[test]
fn known_twists_leave_no_determining_equations() {
    for name in CORPUS {
        let p = load(name);
        let r = verify(&context(&p), &p.pair, &file_twist(&p)).unwrap();
        assert!(r.pass, "{name}");
        let mut equations = Vec::new();
        collect_equations(&r.compatibility, &mut equations);
        collect_equations(&r.symmetry, &mut equations);
        assert!(equations.is_empty(), "{name}");
    }
}

#[test]
fn scaled_known_twists_are_determined() {
    // Each slot carries c_k times the known value: c_k = 1 satisfies the
    // system, and it is not the untwisted system.
    for name in CORPUS {
        let p = load(name);
        let f = p.twist.clone().unwrap();
        let mut basis = AnsatzBasis::empty();
        for (i, row) in f.iter().enumerate() {
            for (s, value) in row.iter().enumerate() {
                if !value.is_zero() {
                    basis.slots[i][s] = vec![value.clone()];
                }
            }
        }
        let (sys, _) = derive_determining_system(&context(&p), &p.pair, &basis, orientation(&p)).unwrap();
        assert!(!sys.equations.is_empty(), "{name}");
        for eq in &sys.equations {
            let at_one = eq.eval_partial(|s| (s.kind() == SymbolKind::UnknownConstant).then(|| q(1)));
            assert!(at_one.is_zero(), "{name}: {eq}");
        }
    }
}

#[test]
fn relations_are_solvable_for_their_image_jets() {
    for name in CORPUS {
        let p = load(name);
        let ctx = context(&p);
        for e in relation_exprs(&p.pair, &file_twist(&p)) {
            let (rule, _) = solve_for_leading(&e, Unknown::Image, ctx.ranking(), Some(ctx.seed())).unwrap();
            assert_eq!(rule.lhs.unknown, Unknown::Image);
        }
    }
}

#[test]
fn first_hierarchy_level_is_the_untwisted_relation() {
    for name in CORPUS {
        let p = load(name);
        let levels = hierarchy_relations(&p.pair, 3).unwrap();
        assert_eq!(levels.len(), 3);
        assert_eq!(levels[0], relation_exprs(&p.pair, &TwistRelations::zero(Orientation::Forward)));
    }
}
