use gpuscript::backend::SimBackend;
use gpuscript::pipeline::{ExecPath, Pipeline, RenderConfig, SCREEN};
use gpuscript::pixels::Viewport;

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}.gs", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

fn config(n: usize, r: f64) -> RenderConfig {
    RenderConfig {
        width: n,
        height: n,
        viewport: Viewport { x0: -r, y0: -r, x1: r, y1: r },
    }
}

fn both(src: &str, cfg: RenderConfig, frames: usize) -> (Pipeline, Pipeline) {
    let mut sim = Pipeline::new(src, cfg, Some(Box::new(SimBackend::new()))).unwrap();
    let mut cpu = Pipeline::new(src, cfg, None).unwrap();
    for p in [&mut sim, &mut cpu] {
        p.seconds = 0.7;
        for _ in 0..frames {
            p.run_frame().unwrap();
        }
    }
    (sim, cpu)
}

#[test]
fn corpus_programs_match_between_backends() {
    for (name, frames, r) in [("wave", 1, 4.0), ("elliptic", 1, 2.0), ("sphere", 1, 1.5), ("julia", 5, 2.0)] {
        let (mut sim, mut cpu) = both(&corpus(name), config(24, r), frames);
        let diff = sim.output().unwrap().max_abs_diff(&cpu.output().unwrap()).unwrap();
        assert!(diff < 1e-4, "{name}: {diff}");
        assert!(sim.stats().gpu_passes > 0, "{name} ran on gpu");
        assert_eq!(sim.stats().compiles, sim.cached_artifacts().len(), "{name}");
    }
}

#[test]
fn wave_compiles_once() {
    let mut p = Pipeline::new(&corpus("wave"), config(8, 4.0), Some(Box::new(SimBackend::new()))).unwrap();
    for f in 0..10 {
        p.seconds = f as f64 / 60.0;
        let r = p.run_frame().unwrap();
        assert!(matches!(&r[0].path, ExecPath::Gpu { compiled, .. } if *compiled == (f == 0)));
    }
    assert_eq!(p.stats().compiles, 1);
    assert_eq!(p.stats().cache_hits, 9);
    assert_eq!(p.stats().transfers, 0);
    p.read_texture(SCREEN).unwrap();
    assert_eq!(p.stats().transfers, 1);
}

fn first_path(src: &str) -> ExecPath {
    let mut p = Pipeline::new(src, config(4, 1.0), Some(Box::new(SimBackend::new()))).unwrap();
    p.run_frame().unwrap().remove(0).path
}

#[test]
fn constant_plot_runs_as_shader() {
    let src = "a = 0.5; colorplot((a = 0.25; |i| * a));";
    assert!(matches!(first_path(src), ExecPath::Gpu { .. }), "{:?}", first_path(src));
    let (mut sim, mut cpu) = both(src, config(4, 1.0), 1);
    assert_eq!(sim.output().unwrap(), cpu.output().unwrap());
}

#[test]
fn unused_statement_falls_back() {
    let src = "colorplot((b = #.x * 2; #.y));";
    let ExecPath::Cpu { reason } = first_path(src) else { panic!("expected cpu path") };
    assert!(reason.contains("does not contribute"), "{reason}");
    assert!(matches!(first_path("colorplot((1; #.y));"), ExecPath::Gpu { .. }));
}
