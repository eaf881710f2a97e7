use std::fs;
use std::sync::Arc;

use matrixlens_core::calctrace::{verify_trace, CalcTrace};
use matrixlens_core::render::{encode, plan, render_sequence, EncodeOutcome};
use tokio::sync::mpsc;

use crate::workspace::{JobRecord, JobState};
use crate::Shared;

/// One job at a time, off the async threads.
pub(crate) async fn worker(shared: Arc<Shared>, mut rx: mpsc::UnboundedReceiver<u64>) {
    while let Some(id) = rx.recv().await {
        let s = shared.clone();
        if let Err(e) = tokio::task::spawn_blocking(move || run(&s, id)).await {
            log::error!("job {id} worker panicked: {e}");
        }
    }
}

fn update(shared: &Shared, id: u64, f: impl FnOnce(&mut JobRecord)) -> Option<JobRecord> {
    let mut jobs = shared.jobs.write().expect("jobs lock");
    let job = jobs.get_mut(&id)?;
    f(job);
    if let Err(e) = shared.ws.save_job(job) {
        log::error!("persisting job {id}: {e}");
    }
    Some(job.clone())
}

fn run(shared: &Shared, id: u64) {
    if update(shared, id, |j| j.state = JobState::Rendering).is_none() {
        log::warn!("job {id} vanished before rendering");
        return;
    }
    match render(shared, id) {
        Ok((frames, video, note)) => {
            update(shared, id, |j| {
                j.state = JobState::Done;
                j.frame_count = Some(frames);
                j.artifacts.insert("frames".into(), format!("jobs/{id}/frames"));
                j.artifacts.insert("plan".into(), format!("jobs/{id}/frames/plan.json"));
                if video {
                    j.artifacts.insert("video".into(), format!("jobs/{id}/video.mp4"));
                }
                j.message = note;
            });
            log::info!("job {id} done: {frames} frames");
        }
        Err(e) => {
            log::error!("job {id} failed: {e}");
            update(shared, id, |j| {
                j.state = JobState::Failed;
                j.message = Some(e);
            });
        }
    }
}

fn render(shared: &Shared, id: u64) -> Result<(usize, bool, Option<String>), String> {
    let dir = shared.ws.job_dir(id);
    let text = fs::read_to_string(dir.join("trace.json")).map_err(|e| format!("reading trace: {e}"))?;
    let trace: CalcTrace = serde_json::from_str(&text).map_err(|e| format!("parsing trace: {e}"))?;
    if !verify_trace(&trace).passed {
        return Err("stored trace failed verification".into());
    }
    let cfg = &shared.config;
    let p = plan(&trace, &cfg.style, cfg.fps).map_err(|e| e.to_string())?;
    let manifest = render_sequence(&p, &dir.join("frames"), false).map_err(|e| e.to_string())?;
    if !cfg.encode {
        return Ok((manifest.frame_count, false, None));
    }
    match encode(&manifest, &cfg.encoder, &dir.join("video.mp4")) {
        Ok(EncodeOutcome::Encoded { .. }) => Ok((manifest.frame_count, true, None)),
        Ok(EncodeOutcome::Unavailable { message }) => Ok((manifest.frame_count, false, Some(message))),
        // frames are fine; the video is optional
        Err(e) => Ok((manifest.frame_count, false, Some(e.to_string()))),
    }
}
