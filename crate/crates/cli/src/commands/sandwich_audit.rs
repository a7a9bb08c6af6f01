//! `chainq sandwich-audit`: run a sandwicher-scheduler simulation and audit
//! the per-victim guarantee: every included victim is sandwiched, or the
//! block is (nearly) full, or the injected volume reached the budget.

use std::path::Path;

use anyhow::bail;
use serde::Serialize;

use chainq_core::queue::{run_simulation, SchedulerKind};

use crate::commands::{ensure_out_dir, write_bytes, write_json, Format};
use crate::config::SimDocument;
use crate::manifest::RunManifest;

#[derive(Serialize)]
struct AuditJson {
    schema_version: u32,
    seed: u64,
    blocks: usize,
    budget: f64,
    blocks_with_victims: usize,
    victims_included: usize,
    victims_sandwiched: usize,
    unsandwiched_fraction: f64,
    trichotomy_violations: usize,
    evaded_by_full_block: usize,
    total_injected_volume: f64,
    total_payoff_b: f64,
    mean_payoff_b: f64,
    final_reserves: Option<(f64, f64)>,
}

pub fn run(doc: &SimDocument, raw_config: &[u8], out: &Path, format: Format) -> anyhow::Result<()> {
    doc.validate()?;
    let budget = match doc.sim.scheduler {
        SchedulerKind::Sandwicher { budget } => budget,
        _ => bail!("sandwich-audit requires the sandwicher scheduler"),
    };
    ensure_out_dir(out)?;
    let mut manifest = RunManifest::new("sandwich-audit", raw_config, Some(doc.sim.seed));

    let trace = run_simulation(&doc.sim)?;

    let victims_included: usize = trace.block_audits.iter().map(|a| a.victims_included).sum();
    let victims_sandwiched: usize = trace
        .block_audits
        .iter()
        .map(|a| a.victims_sandwiched)
        .sum();
    let violations = trace
        .block_audits
        .iter()
        .filter(|a| !a.trichotomy_ok)
        .count();
    let evaded = trace
        .block_audits
        .iter()
        .filter(|a| a.victims_included > a.victims_sandwiched)
        .filter(|a| a.emitted_len + 1 >= doc.sim.beta)
        .count();
    let total_payoff: f64 = trace.sandwich_events.iter().map(|e| e.payoff_b).sum();

    let audit = AuditJson {
        schema_version: 1,
        seed: doc.sim.seed,
        blocks: trace.blocks.len(),
        budget,
        blocks_with_victims: trace
            .block_audits
            .iter()
            .filter(|a| a.victims_included > 0)
            .count(),
        victims_included,
        victims_sandwiched,
        unsandwiched_fraction: if victims_included > 0 {
            (victims_included - victims_sandwiched) as f64 / victims_included as f64
        } else {
            0.0
        },
        trichotomy_violations: violations,
        evaded_by_full_block: evaded,
        total_injected_volume: trace.block_audits.iter().map(|a| a.injected_volume).sum(),
        total_payoff_b: total_payoff,
        mean_payoff_b: if trace.sandwich_events.is_empty() {
            0.0
        } else {
            total_payoff / trace.sandwich_events.len() as f64
        },
        final_reserves: trace.final_reserves,
    };
    write_json(&mut manifest, out, "audit.json", &audit)?;

    if format.csv() {
        let mut buf = String::from(
            "block,emitted_len,victims_included,victims_sandwiched,injected_volume,trichotomy_ok\n",
        );
        for a in &trace.block_audits {
            buf.push_str(&format!(
                "{},{},{},{},{:.16e},{}\n",
                a.block,
                a.emitted_len,
                a.victims_included,
                a.victims_sandwiched,
                a.injected_volume,
                a.trichotomy_ok
            ));
        }
        write_bytes(&mut manifest, out, "block_audits.csv", buf.as_bytes())?;

        let mut buf = String::from("block,victim_id,epsilon,payoff_b\n");
        for e in &trace.sandwich_events {
            buf.push_str(&format!(
                "{},{},{:.16e},{:.16e}\n",
                e.block, e.victim_id, e.epsilon, e.payoff_b
            ));
        }
        write_bytes(&mut manifest, out, "sandwich_events.csv", buf.as_bytes())?;
    }
    manifest.write(out)?;

    println!(
        "{} victims included, {} sandwiched (unsandwiched fraction {:.6}), {} trichotomy violations, total payoff {:.6} B",
        audit.victims_included,
        audit.victims_sandwiched,
        audit.unsandwiched_fraction,
        audit.trichotomy_violations,
        audit.total_payoff_b
    );
    Ok(())
}
