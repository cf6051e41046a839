use proptest::prelude::*;

use gpuscript::backend::SimBackend;
use gpuscript::builtins::{min_sign, registry};
use gpuscript::depgraph::{Graph, Split};
use gpuscript::infer::{InferenceError, Problem};
use gpuscript::lower::{lower_plot, split_script};
use gpuscript::parser::parse_source;
use gpuscript::pipeline::{ExecPath, Pipeline, RenderConfig};
use gpuscript::printer::print_program;
use gpuscript::types::TypeTerm::{self, *};

fn leaf() -> impl Strategy<Value = String> {
    prop_oneof![
        Just("x".to_string()),
        Just("y".to_string()),
        Just("a".to_string()),
        (0i32..20).prop_map(|k| k.to_string()),
        (0.0f64..4.0).prop_map(|v| format!("{v:.3}")),
        Just("i".to_string()),
        Just("true".to_string()),
    ]
}

fn expr() -> impl Strategy<Value = String> {
    leaf().prop_recursive(4, 24, 3, |inner| {
        prop_oneof![
            (inner.clone(), inner.clone(), prop::sample::select(vec!["+", "-", "*", "/", "<", "==", "&"]))
                .prop_map(|(a, b, op)| format!("({a}{op}{b})")),
            (inner.clone(), prop::sample::select(vec!["sin", "cos", "sqrt", "exp", "abs", "re", "im"]))
                .prop_map(|(a, f)| format!("{f}({a})")),
            inner.clone().prop_map(|a| format!("|{a}|")),
            inner.clone().prop_map(|a| format!("-{a}")),
            (inner.clone(), 0u32..4).prop_map(|(a, k)| format!("({a})^{k}")),
            (inner.clone(), inner.clone(), inner.clone()).prop_map(|(c, a, b)| format!("if({c}, {a}, {b})")),
            (inner.clone(), inner.clone()).prop_map(|(a, b)| format!("[{a}, {b}]")),
            (inner.clone(), inner).prop_map(|(a, b)| format!("(a = {a}; {b})")),
        ]
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(std::env::var("PROPTEST_CASES").ok().and_then(|c| c.parse().ok()).unwrap_or(200)))]

    #[test]
    fn printing_round_trips(src in expr()) {
        let p = parse_source(&src).unwrap();
        let printed = print_program(&p);
        let q = parse_source(&printed).unwrap();
        prop_assert!(p.same_shape(&q), "{src} printed as {printed}");
        prop_assert_eq!(print_program(&q), printed);
    }

    #[test]
    fn worklist_matches_sweeps(src in expr(), seed in any::<u64>()) {
        let program = parse_source(&src).unwrap();
        let script = split_script(&program).unwrap();
        let Ok(l) = lower_plot(&script.plots[0].body, &program, &|_| false, &mut program.id_gen()) else {
            return Ok(());
        };
        let graph = Graph::build(&l.body);
        let split = match &l.running {
            Some(r) => Split::for_plot(&graph, graph.var(&r.name).unwrap()),
            None => Split::whole(&graph),
        };
        let inputs = Problem::static_inputs(&graph, &split, &|_| None);
        let problem = Problem::new(&graph, &split, l.running.as_ref().map(|r| r.ty()), inputs);
        let mut order: Vec<usize> = split.extent().into_iter().collect();
        let mut s = seed;
        for k in (1..order.len()).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(k, (s >> 33) as usize % (k + 1));
        }
        let (sweeps, worklist) = match (problem.solve(), problem.solve_worklist(&order)) {
            (Ok(a), Ok(b)) => (a, b),
            // unbounded list nesting such as `a = [a, a]` has no fixed point
            (Err(a), Err(b)) => {
                prop_assert!(matches!(a, InferenceError::NonTermination(_)), "{}: {:?}", src, a);
                prop_assert!(matches!(b, InferenceError::NonTermination(_)), "{}: {:?}", src, b);
                return Ok(());
            }
            (a, b) => return Err(TestCaseError::fail(format!("{src}: {:?} vs {:?}", a.err(), b.err()))),
        };
        prop_assert_eq!(&sweeps.gamma, &worklist.gamma);
        prop_assert!(problem.is_prefixpoint(&sweeps.gamma).unwrap());
    }

    #[test]
    fn cpu_and_shader_agree(src in expr()) {
        let src = format!("a = 0.5; colorplot({src});");
        let cfg = RenderConfig { width: 4, height: 4, ..Default::default() };
        let mut cpu = Pipeline::new(&src, cfg, None).unwrap();
        let mut gpu = Pipeline::new(&src, cfg, Some(Box::new(SimBackend::new()))).unwrap();
        let (c, g) = (cpu.run_frame(), gpu.run_frame());
        // runtime errors such as a bad output type must agree too
        prop_assert_eq!(c.is_ok(), g.is_ok(), "{}: {:?} vs {:?}", src, c.err(), g.err());
        let Ok(reports) = g else { return Ok(()) };
        let a = cpu.output().unwrap();
        let b = gpu.output().unwrap();
        if matches!(reports[0].path, ExecPath::Gpu { .. }) {
            prop_assert!(a.max_abs_diff(&b).unwrap() <= 1e-5, "{}", src);
        } else {
            prop_assert_eq!(a, b);
        }
    }
}

fn scalar() -> impl Strategy<Value = TypeTerm> {
    prop::sample::select(vec![Bot, Bool, Int, ConstInt(2), Real, Complex, Top])
}

fn raise(t: &TypeTerm, k: u8) -> TypeTerm {
    let chain = [Bot, Bool, Int, Real, Complex, Top];
    let from = match t {
        ConstInt(_) => 2,
        t => chain.iter().position(|c| c == t).unwrap(),
    };
    chain[(from + k as usize).min(5)].clone()
}

proptest! {
    #[test]
    fn min_sign_is_monotone(a in scalar(), b in scalar(), ka in 0u8..3, kb in 0u8..3, f in 0usize..64) {
        let names: Vec<&str> = registry().iter().map(|b| b.name).collect();
        let name = names[f % names.len()];
        let ret = |args: &[TypeTerm]| -> TypeTerm {
            if args.iter().any(|t| *t == Bot) {
                return Bot;
            }
            match min_sign(name, args) {
                Ok(Some(s)) => s.ret,
                _ => Top,
            }
        };
        let lo2 = [a.clone(), b.clone()];
        let hi2 = [raise(&a, ka), raise(&b, kb)];
        prop_assert!(ret(&lo2).is_subtype(&ret(&hi2)), "{name}{lo2:?} vs {hi2:?}");
        prop_assert!(ret(&lo2[..1]).is_subtype(&ret(&hi2[..1])), "{name}({a}) vs {}", hi2[0]);
    }
}
