use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use matrixlens_core::calctrace::{add_trace, det_trace, mul_trace, CalcTrace, Role};
use matrixlens_core::render::{encode, plan, rasterize, render_frame, render_sequence, EncodeOutcome, RenderError, Style};
use matrixlens_core::MatrixValue;
use sha2::{Digest, Sha256};

fn m(rows: Vec<Vec<i64>>) -> MatrixValue {
    MatrixValue::from_rows(rows).unwrap()
}

fn fig() -> MatrixValue {
    m(vec![vec![1, 2, 3], vec![-4, -5, -6], vec![7, 8, 9]])
}

fn digests(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().to_string_lossy().into_owned(), Sha256::digest(fs::read(e.path()).unwrap()).to_vec())
        })
        .collect()
}

/// Frame total from the trace shape alone.
fn expected_frames(t: &CalcTrace, fps: u32, s: &Style) -> usize {
    let f = |d: f64| ((d * fps as f64).round() as usize).max(1);
    let units = t.operand_a.rows() * t.operand_a.cols() + t.operand_b.as_ref().map_or(0, |b| b.rows() * b.cols());
    let (r, c) = t.result_shape();
    let steps = match t.op {
        matrixlens_core::calctrace::OpKind::Det => match t.operand_a.rows() {
            1 => f(s.step_duration),
            n => {
                let products = if n == 2 { 2 } else { 6 };
                products * f(s.step_duration) + f(s.accumulate_duration) + f(s.step_duration)
            }
        },
        matrixlens_core::calctrace::OpKind::Add => r * c * f(s.step_duration),
        matrixlens_core::calctrace::OpKind::Mul => r * c * 2 * f(s.step_duration),
    };
    units * f(s.reveal_per_unit) + steps + f(s.result_duration)
}

#[test]
fn frame_count_matches_formula() {
    let s = Style::default();
    let a = fig();
    let b = m(vec![vec![1, 0], vec![2, -1], vec![0, 3]]);
    let traces = [
        det_trace(&a).unwrap(),
        det_trace(&m(vec![vec![2, 1], vec![1, 2]])).unwrap(),
        det_trace(&m(vec![vec![4]])).unwrap(),
        add_trace(&a, &a).unwrap(),
        mul_trace(&a, &b).unwrap(),
    ];
    for fps in [1, 12, 24, 30, 60] {
        for t in &traces {
            let p = plan(t, &s, fps).unwrap();
            assert_eq!(p.frame_count, expected_frames(t, fps, &s), "{:?} at {fps}", t.op);
        }
    }
    // 3×3 add at 30 fps: 9 steps of one second, 18 units revealed, 1 s result
    assert_eq!(plan(&traces[3], &s, 30).unwrap().frame_count, 9 * 30 + 18 * 3 + 30);
}

#[test]
fn highlights_cover_each_step_and_nothing_else() {
    let a = fig();
    for t in [det_trace(&a).unwrap(), add_trace(&a, &a).unwrap(), mul_trace(&a, &a).unwrap()] {
        let p = plan(&t, &Style::default(), 10).unwrap();
        for (i, step) in t.steps.iter().enumerate() {
            let phase = &p.phases[p.step_phase[i]];
            for c in &step.cells {
                assert!(phase.scene.highlights.contains(c), "step {i} cell {c:?}");
            }
        }
        for phase in &p.phases {
            let allowed: Vec<_> = phase.steps.iter().flat_map(|&i| t.steps[i].cells.iter().copied()).collect();
            assert!(phase.scene.highlights.iter().all(|c| allowed.contains(c)));
        }
    }
}

#[test]
fn sequence_is_byte_deterministic() {
    let t = det_trace(&fig()).unwrap();
    let p = plan(&t, &Style::default(), 30).unwrap();
    let (d1, d2) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let start = Instant::now();
    let man = render_sequence(&p, d1.path(), false).unwrap();
    assert!(start.elapsed().as_secs_f64() < 30.0);
    render_sequence(&plan(&t, &Style::default(), 30).unwrap(), d2.path(), false).unwrap();
    let (h1, h2) = (digests(d1.path()), digests(d2.path()));
    // manifests name their own directory, everything else must agree
    let strip = |mut h: BTreeMap<String, Vec<u8>>| {
        h.remove("manifest.json");
        h
    };
    assert_eq!(strip(h1.clone()), strip(h2));

    let svgs: Vec<&String> = h1.keys().filter(|k| k.ends_with(".svg")).collect();
    assert_eq!(svgs.len(), p.frame_count);
    assert_eq!(man.frames.len(), p.frame_count);
    for n in 1..=p.frame_count {
        assert!(h1.contains_key(&format!("frame_{n:06}.svg")));
    }
    let back: matrixlens_core::render::FramePlan = serde_json::from_str(&fs::read_to_string(d1.path().join("plan.json")).unwrap()).unwrap();
    assert_eq!(back, p);
}

#[test]
fn frames_are_well_formed_with_one_rect_per_highlight() {
    let t = det_trace(&fig()).unwrap();
    let p = plan(&t, &Style::default(), 5).unwrap();
    for phase in &p.phases {
        let svg = render_frame(&p, phase.start).unwrap();
        let doc = roxmltree::Document::parse(&svg).expect("well-formed");
        let root = doc.root_element();
        assert_eq!(root.attribute("viewBox"), Some("0 0 1280 720"));
        let lit = doc
            .descendants()
            .filter(|n| n.has_tag_name("rect") && n.attribute("fill") == Some(p.style.highlight_fill.as_str()))
            .count();
        assert_eq!(lit, phase.scene.highlights.len());
        let groups = doc.descendants().filter(|n| n.attribute("class") == Some("matrix")).count();
        assert_eq!(groups, 1);
    }
    assert!(matches!(render_frame(&p, 0), Err(RenderError::FrameOutOfRange(0, _))));
}

#[test]
fn single_highlight_on_first_cell() {
    // 1×1 determinant: the emit phase highlights exactly (A,0,0)
    let t = det_trace(&m(vec![vec![-3]])).unwrap();
    let p = plan(&t, &Style::default(), 30).unwrap();
    let emit = &p.phases[p.step_phase[0]];
    assert_eq!(emit.scene.highlights.len(), 1);
    assert_eq!(emit.scene.highlights[0].role, Role::A);
    let svg = render_frame(&p, emit.start).unwrap();
    assert_eq!(svg.matches(&format!("fill=\"{}\"", p.style.highlight_fill)).count(), 1);
}

#[test]
fn zero_spacing_holds_in_scenes() {
    let a = fig();
    let p = plan(&mul_trace(&a, &a).unwrap(), &Style::default(), 30).unwrap();
    for l in &p.phases[0].scene.layouts {
        for r in 0..l.rows {
            for c in 0..l.cols {
                let u = l.unit(r, c);
                assert!((u.x - (l.origin.0 + c as f64 * l.side)).abs() < 1e-9);
                assert!((u.y - (l.origin.1 - r as f64 * l.side)).abs() < 1e-9);
            }
        }
    }
}

#[test]
fn png_mirror_has_canvas_size_and_highlight() {
    let t = det_trace(&m(vec![vec![1, 2], vec![3, 4]])).unwrap();
    let p = plan(&t, &Style::default(), 30).unwrap();
    let n = p.phases[p.step_phase[1]].start;
    let png = rasterize(&render_frame(&p, n).unwrap()).unwrap();
    let img = image::load_from_memory(&png).unwrap().to_rgba8();
    assert_eq!(img.dimensions(), (1280, 720));
    // #ffd54f
    assert!(img.pixels().any(|px| px.0 == [0xff, 0xd5, 0x4f, 0xff]));
}

#[test]
fn encoder_handoff() {
    let t = det_trace(&m(vec![vec![7]])).unwrap();
    let p = plan(&t, &Style::default(), 2).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let man = render_sequence(&p, dir.path(), false).unwrap();
    let out = dir.path().join("out.mp4");

    let missing = encode(&man, "/nonexistent/encoder-binary", &out).unwrap();
    assert!(matches!(missing, EncodeOutcome::Unavailable { ref message } if message.starts_with("encoder unavailable")));
    assert!(dir.path().join("frame_000001.svg").exists());

    #[cfg(unix)]
    {
        use std::os::unix::fs::PermissionsExt;
        let script = dir.path().join("fake-encoder.sh");
        fs::write(&script, "#!/bin/sh\n[ \"$1\" = -version ] && exit 0\nfor a; do last=$a; done\necho video > \"$last\"\n").unwrap();
        fs::set_permissions(&script, fs::Permissions::from_mode(0o755)).unwrap();
        let ok = encode(&man, script.to_str().unwrap(), &out).unwrap();
        assert_eq!(ok, EncodeOutcome::Encoded { path: out.clone() });
        assert!(out.exists());
        assert!(dir.path().join("frame_000001.png").exists());

        let bad = dir.path().join("bad-encoder.sh");
        fs::write(&bad, "#!/bin/sh\n[ \"$1\" = -version ] && exit 0\necho boom >&2\nexit 3\n").unwrap();
        fs::set_permissions(&bad, fs::Permissions::from_mode(0o755)).unwrap();
        match encode(&man, bad.to_str().unwrap(), &out) {
            Err(RenderError::EncoderFailed { stderr, .. }) => assert_eq!(stderr, "boom"),
            other => panic!("{other:?}"),
        }
    }
}
