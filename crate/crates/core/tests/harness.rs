use std::time::Duration;

use gpuscript::backend::{Backend, SimBackend};
use gpuscript::codegen::ShaderArtifact;
use gpuscript::harness::{read_f32, write_f32, HarnessBackend, HarnessJob, HarnessResult, ResponderThread};
use gpuscript::pipeline::{Pipeline, RenderConfig};
use gpuscript::pixels::PixelBuffer;

fn corpus(name: &str) -> String {
    std::fs::read_to_string(format!("{}/../../corpus/{name}.gs", env!("CARGO_MANIFEST_DIR"))).unwrap()
}

#[test]
fn f32_files_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut p = PixelBuffer::new(3, 2);
    p.set(2, 1, [0.25, -1.0, 7.5, 1.0]);
    let path = dir.path().join("x.f32");
    write_f32(&path, &p).unwrap();
    assert_eq!(std::fs::metadata(&path).unwrap().len(), 3 * 2 * 16);
    assert_eq!(read_f32(&path, 3, 2).unwrap(), p);
    assert!(read_f32(&path, 2, 2).is_err());
}

#[test]
fn julia_session_over_file_drop_matches_sim() {
    let dir = tempfile::tempdir().unwrap();
    let _responder = ResponderThread::spawn(dir.path());
    let cfg = RenderConfig { width: 16, height: 16, ..Default::default() };
    let harness = HarnessBackend::new(dir.path(), Duration::from_secs(20)).unwrap();
    let mut remote = Pipeline::new(&corpus("julia"), cfg, Some(Box::new(harness))).unwrap();
    let mut local = Pipeline::new(&corpus("julia"), cfg, Some(Box::new(SimBackend::new()))).unwrap();
    for p in [&mut remote, &mut local] {
        for _ in 0..6 {
            p.run_frame().unwrap();
        }
    }
    let a = remote.read_texture("julia").unwrap();
    let b = local.read_texture("julia").unwrap();
    assert_eq!(a.max_abs_diff(&b).unwrap(), 0.0);
    assert_eq!(remote.stats().transfers, 1);

    let jobs: Vec<HarnessJob> = (0..)
        .map(|k| dir.path().join(format!("job-{k}.json")))
        .take_while(|p| p.exists())
        .map(|p| serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap())
        .collect();
    // two compiles, then the read carries all queued passes
    assert_eq!(jobs.len(), 3);
    let last: HarnessResult =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("result-2.json")).unwrap()).unwrap();
    assert!(last.ok);
    assert_eq!(last.precision, "float32");
    assert_eq!(last.readbacks.len(), 1);
}

#[test]
fn rejected_shader_reports_error() {
    let dir = tempfile::tempdir().unwrap();
    let _responder = ResponderThread::spawn(dir.path());
    let mut h = HarnessBackend::new(dir.path(), Duration::from_secs(20)).unwrap();
    let bad = ShaderArtifact {
        glsl: "void main() { gl_FragColor = 1; }".into(),
        uniforms: vec![],
        textures: vec![],
        type_key: "bad".into(),
    };
    let err = h.prepare(&bad).unwrap_err().to_string();
    assert!(err.contains("precision"), "{err}");
}

#[test]
fn missing_responder_times_out() {
    let dir = tempfile::tempdir().unwrap();
    let mut h = HarnessBackend::new(dir.path(), Duration::from_millis(30)).unwrap();
    let t = h.create_texture(1, 1).unwrap();
    assert!(h.download(t).is_err());
}
