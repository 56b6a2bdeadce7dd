//! Deterministic report rendering.
//!
//! Report bodies are plain structured text (plus CSV for sweeps) and are
//! byte-identical for identical manifests; anything time-of-day lives in a
//! header line the caller prepends, never in the body.

use std::fmt::Write as _;

use crate::calibration::CalibrationOutcome;
use crate::ledger::SimResult;
use crate::model::ValidatedModel;
use crate::oracle::{ComparisonReport, Decision};
use crate::power::{InferenceEnergy, PowerBreakdown, PowerParams};
use crate::starvation::{SweepResult, VerifyReport};
use crate::time;

/// Provenance of one input file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ManifestInput {
    pub role: &'static str,
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run. Identical manifests produce
/// byte-identical report bodies.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RunManifest {
    pub tool_version: String,
    pub command: String,
    pub inputs: Vec<ManifestInput>,
    /// Resolved parameters, in insertion order.
    pub params: Vec<(String, String)>,
}

impl RunManifest {
    pub fn new(command: &str, tool_version: &str) -> Self {
        RunManifest {
            tool_version: tool_version.to_string(),
            command: command.to_string(),
            ..Default::default()
        }
    }

    pub fn input(&mut self, role: &'static str, path: &str, sha256: String) {
        self.inputs.push(ManifestInput {
            role,
            path: path.to_string(),
            sha256,
        });
    }

    pub fn param(&mut self, key: &str, value: impl ToString) {
        self.params.push((key.to_string(), value.to_string()));
    }

    fn render(&self, out: &mut String) {
        let _ = writeln!(out, "[manifest]");
        let _ = writeln!(out, "tool = spikesim {}", self.tool_version);
        let _ = writeln!(out, "command = {}", self.command);
        for i in &self.inputs {
            let _ = writeln!(out, "input.{} = {} sha256:{}", i.role, i.path, i.sha256);
        }
        for (k, v) in &self.params {
            let _ = writeln!(out, "param.{k} = {v}");
        }
    }
}

fn render_clocks(out: &mut String, model: &ValidatedModel) {
    let config = model.config();
    let _ = writeln!(out, "\n[clocks]");
    for (name, hz, period) in [
        (
            "neuron",
            config.neuron_clock_hz,
            model.neuron_period_ticks(),
        ),
        (
            "arbiter",
            config.arbiter_clock_hz,
            model.arbiter_period_ticks(),
        ),
    ] {
        let _ = writeln!(
            out,
            "{name} = nominal {hz} Hz, period {period} ticks, effective {:.3} Hz",
            time::effective_hz(period)
        );
    }
    let _ = writeln!(out, "frame_ticks = {}", config.frame_ticks);
}

fn render_ledger(out: &mut String, result: &SimResult) {
    let _ = writeln!(out, "\n[ledger]");
    let _ = writeln!(
        out,
        "layer,spikes_delivered,sops,sram_reads,requests_raised,acks_issued,wakeups,\
         neuron_cycles_ungated,arbiter_cycles_running,lost_spikes,collisions,duplicate_requests"
    );
    let mut write_row = |name: String, l: &crate::ledger::LayerActivity| {
        let _ = writeln!(
            out,
            "{name},{},{},{},{},{},{},{},{},{},{},{}",
            l.spikes_delivered,
            l.sops,
            l.sram_reads,
            l.requests_raised,
            l.acks_issued,
            l.wakeups,
            l.neuron_cycles_ungated,
            l.arbiter_cycles_running,
            l.lost_spikes,
            l.collisions,
            l.duplicate_requests
        );
    };
    for (i, l) in result.ledger.per_layer.iter().enumerate() {
        write_row(i.to_string(), l);
    }
    write_row("total".to_string(), &result.ledger.totals());
}

fn render_power(
    out: &mut String,
    power: &PowerBreakdown<f64>,
    energy: Option<&InferenceEnergy<f64>>,
) {
    let _ = writeln!(out, "\n[power]");
    let _ = writeln!(out, "floor_nw = {:.6}", power.floor_nw);
    let _ = writeln!(out, "sop_nw = {:.6}", power.sop_nw);
    let _ = writeln!(out, "wakeup_nw = {:.6}", power.wakeup_nw);
    let _ = writeln!(out, "sram_read_nw = {:.6}", power.sram_read_nw);
    let _ = writeln!(out, "neuron_cycle_nw = {:.6}", power.neuron_cycle_nw);
    let _ = writeln!(out, "dynamic_nw = {:.6}", power.dynamic_nw());
    let _ = writeln!(out, "total_nw = {:.6}", power.total_nw());
    if let Some(e) = energy {
        let _ = writeln!(out, "\n[energy]");
        let _ = writeln!(out, "frames_per_inference = {}", e.frames_per_inference);
        let _ = writeln!(out, "per_inference_from_power_nj = {:.6}", e.from_power_nj);
        let _ = writeln!(out, "per_inference_sop_only_nj = {:.6}", e.sop_only_nj);
        let _ = writeln!(
            out,
            "note = the two energy figures use different accounting and are not \
             expected to agree; both are reported"
        );
    }
}

fn render_conformance(out: &mut String, model: &ValidatedModel, result: &SimResult) {
    let _ = writeln!(out, "\n[run]");
    let _ = writeln!(out, "duration_ticks = {}", result.duration.ticks());
    let _ = writeln!(out, "frames = {}", result.frames);
    let _ = writeln!(out, "conforming = {}", result.conforming);
    let _ = writeln!(out, "lost_spikes = {}", result.ledger.totals().lost_spikes);
    let _ = writeln!(out, "collisions = {}", result.ledger.totals().collisions);
    let _ = writeln!(out, "starved = {}", result.starvation.starved);
    if let Some((core, neuron)) = result.starvation.worst {
        let _ = writeln!(
            out,
            "worst_request_latency = {} ticks (core {core}, neuron {neuron})",
            result.starvation.worst_latency_ticks
        );
    }
    let _ = writeln!(
        out,
        "open_requests_at_end = {}",
        result.open_requests_at_end
    );
    if result.trace_spikes_beyond_duration > 0 {
        let _ = writeln!(
            out,
            "trace_spikes_beyond_duration = {}",
            result.trace_spikes_beyond_duration
        );
    }
    for w in model.warnings() {
        let _ = writeln!(out, "warning = {w}");
    }
}

/// Full report of one simulate run.
pub fn render_simulate_report(
    manifest: &RunManifest,
    model: &ValidatedModel,
    result: &SimResult,
    power: &PowerBreakdown<f64>,
    energy: Option<&InferenceEnergy<f64>>,
    decision: &Decision,
) -> String {
    let mut out = String::new();
    manifest.render(&mut out);
    render_clocks(&mut out, model);
    render_conformance(&mut out, model, result);
    render_ledger(&mut out, result);

    let _ = writeln!(out, "\n[output]");
    for (f, counts) in result.output_spike_counts().iter().enumerate() {
        let joined: Vec<String> = counts.iter().map(u64::to_string).collect();
        let _ = writeln!(out, "frame_{f} = {}", joined.join(","));
    }
    let totals: Vec<String> = decision.totals.iter().map(u64::to_string).collect();
    let _ = writeln!(out, "decision_class = {}", decision.class);
    let _ = writeln!(out, "decision_totals = {}", totals.join(","));
    if decision.no_spike_decision {
        let _ = writeln!(
            out,
            "decision_note = no output spikes; class is the tie-break default"
        );
    }

    render_power(&mut out, power, energy);
    out
}

/// Per-neuron oracle comparison report.
pub fn render_compare_report(
    manifest: &RunManifest,
    model: &ValidatedModel,
    result: &SimResult,
    comparison: &ComparisonReport,
) -> String {
    let mut out = String::new();
    manifest.render(&mut out);
    render_clocks(&mut out, model);
    render_conformance(&mut out, model, result);

    let _ = writeln!(out, "\n[comparison]");
    let _ = writeln!(out, "frame = {}", comparison.frame);
    let _ = writeln!(out, "neurons = {}", comparison.total);
    let _ = writeln!(out, "passed = {}", comparison.passed);
    let _ = writeln!(out, "max_abs_deviation = {}", comparison.max_abs_deviation);
    let _ = writeln!(
        out,
        "result = {}",
        if comparison.pass { "PASS" } else { "FAIL" }
    );
    let _ = writeln!(
        out,
        "\nlayer,neuron,snn_count,expected,deviation,tolerance,pass"
    );
    for r in &comparison.rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.layer, r.neuron, r.snn_count, r.expected, r.deviation, r.tolerance, r.pass
        );
    }
    out
}

/// Sweep results as CSV with the manifest in comment lines.
pub fn render_sweep_csv(
    manifest: &RunManifest,
    sweep: &SweepResult<f64>,
    verification: &[(String, VerifyReport)],
) -> String {
    let mut out = String::new();
    let mut manifest_text = String::new();
    manifest.render(&mut manifest_text);
    for line in manifest_text.lines() {
        let _ = writeln!(out, "# {line}");
    }
    let layers = sweep
        .points
        .first()
        .map(|p| p.thresholds.len())
        .unwrap_or(0);
    let th_cols: Vec<String> = (0..layers).map(|i| format!("th_{i}")).collect();
    let _ = writeln!(
        out,
        "clock_hz,cycles_per_service,{},services_per_frame,max_requests_per_frame,margin,binding_layer,feasible,recommended",
        th_cols.join(",")
    );
    for (i, p) in sweep.points.iter().enumerate() {
        let ths: Vec<String> = p.thresholds.iter().map(u32::to_string).collect();
        let _ = writeln!(
            out,
            "{},{},{},{:.6},{:.6},{:.6},{},{},{}",
            p.clock_hz,
            p.cycles_per_service,
            ths.join(","),
            p.services,
            p.max_requests,
            p.margin,
            p.binding_layer,
            p.feasible,
            sweep.recommended.contains(&i)
        );
    }
    if !verification.is_empty() {
        let _ = writeln!(out, "# verification against simulation");
        for (label, v) in verification {
            let _ = writeln!(
                out,
                "# {label}: predicted_starved={} observed_starved={} agrees={} worst_latency={} ticks",
                v.predicted_starved, v.observed_starved, v.agrees, v.worst_latency_ticks
            );
        }
    }
    out
}

/// Calibration outcome as a structured text report.
pub fn render_calibration_report(
    manifest: &RunManifest,
    outcome: &CalibrationOutcome,
    before: &PowerParams<f64>,
) -> String {
    let mut out = String::new();
    manifest.render(&mut out);
    let _ = writeln!(out, "\n[rig]");
    let _ = writeln!(out, "channels = {}", outcome.rig.channels);
    let _ = writeln!(out, "outputs = {}", outcome.rig.outputs);
    let _ = writeln!(out, "input_threshold = {}", outcome.rig.input_threshold);
    let _ = writeln!(out, "max_feature = {}", outcome.rig.max_feature);
    let _ = writeln!(out, "frames = {}", outcome.rig.frames);
    let _ = writeln!(out, "\n[anchors]");
    let _ = writeln!(out, "idle_nw = {:.6}", outcome.params.p_floor_nw);
    let _ = writeln!(out, "max_rate_nw = {:.6}", outcome.params.p_max_ref_nw);
    let _ = writeln!(
        out,
        "anchor_power_nw = {:.6}",
        outcome.anchor_power.total_nw()
    );
    let _ = writeln!(out, "\n[fit]");
    let _ = writeln!(out, "scale = {:.9}", outcome.scale);
    let rows = [
        (
            "e_wakeup_pj",
            before.e_wakeup_pj,
            outcome.params.e_wakeup_pj,
        ),
        (
            "e_sram_read_pj",
            before.e_sram_read_pj,
            outcome.params.e_sram_read_pj,
        ),
        (
            "e_neuron_cycle_pj",
            before.e_neuron_cycle_pj,
            outcome.params.e_neuron_cycle_pj,
        ),
    ];
    for (name, b, a) in rows {
        let _ = writeln!(out, "{name} = {b:.9} -> {a:.9}");
    }
    let t = &outcome.anchor_totals;
    let _ = writeln!(out, "\n[anchor_activity]");
    let _ = writeln!(out, "sops = {}", t.sops);
    let _ = writeln!(out, "wakeups = {}", t.wakeups);
    let _ = writeln!(out, "sram_reads = {}", t.sram_reads);
    let _ = writeln!(out, "neuron_cycles_ungated = {}", t.neuron_cycles_ungated);
    out
}
