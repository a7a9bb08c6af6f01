//! `chainq simulate`: run the mempool simulation, export the trace and an
//! empirical-vs-analytic summary.

use std::path::Path;

use serde::Serialize;

use chainq_core::analytics::empirical::{chain_estimates, ArrivalCountLaw};
use chainq_core::analytics::{exact_k_distributions, PriorityQueueModel};
use chainq_core::queue::export::{write_blocks_csv, write_outcomes_csv, write_transactions_csv};
use chainq_core::queue::{run_simulation, BlockTimeLaw, SchedulerKind, SimTrace};
use chainq_core::stats::tv_distance;

use crate::commands::{ensure_out_dir, write_bytes, write_json, Format};
use crate::config::SimDocument;
use crate::manifest::RunManifest;

#[derive(Serialize)]
struct SandwichSummary {
    blocks_with_victims: usize,
    victims_included: usize,
    victims_sandwiched: usize,
    sandwiched_fraction: f64,
    trichotomy_violations: usize,
    total_payoff_b: f64,
    total_injected_volume: f64,
}

#[derive(Serialize)]
struct SimSummary {
    schema_version: u32,
    seed: u64,
    blocks: usize,
    warmup_blocks: usize,
    messages_arrived: usize,
    messages_confirmed: usize,
    messages_censored: usize,
    /// Geometric parameters and total-variation agreement, for the priority
    /// scheduler under exponential block times.
    p: Option<f64>,
    q: Option<f64>,
    tv_n_raw: Option<f64>,
    tv_n_conditional: Option<f64>,
    tv_kprime_conditional: Option<f64>,
    sandwich: Option<SandwichSummary>,
    final_reserves: Option<(f64, f64)>,
}

fn analytic_comparison(trace: &SimTrace) -> Option<(f64, f64, f64, f64, f64)> {
    let config = &trace.config;
    if !matches!(config.scheduler, SchedulerKind::Priority)
        || config.block_time_law != BlockTimeLaw::Exponential
        || config.lambda == 0.0
    {
        return None;
    }
    let model = PriorityQueueModel::new(config.lambda, config.mu, config.beta).ok()?;
    let s_law = ArrivalCountLaw::geometric(model.q).ok()?;
    let chain = trace.post_warmup_chain();
    if chain.is_empty() {
        return None;
    }
    let est = chain_estimates(chain, config.beta, &s_law, 2048).ok()?;
    let exact = exact_k_distributions(&model, 2048).ok()?;
    let geo = model.n_pmf(est.n_pmf.len());
    Some((
        model.p,
        model.q,
        tv_distance(&est.n_pmf_raw, &geo),
        tv_distance(&est.n_pmf, &geo),
        tv_distance(&est.kprime, &exact.kprime),
    ))
}

pub fn run(doc: &SimDocument, raw_config: &[u8], out: &Path, format: Format) -> anyhow::Result<()> {
    doc.validate()?;
    ensure_out_dir(out)?;
    let mut manifest = RunManifest::new("simulate", raw_config, Some(doc.sim.seed));

    let trace = run_simulation(&doc.sim)?;

    if format.csv() {
        let mut buf = Vec::new();
        write_blocks_csv(&trace, &mut buf)?;
        write_bytes(&mut manifest, out, "blocks.csv", &buf)?;

        buf = Vec::new();
        write_outcomes_csv(&trace, &mut buf)?;
        write_bytes(&mut manifest, out, "outcomes.csv", &buf)?;

        buf = Vec::new();
        write_transactions_csv(&trace, &mut buf)?;
        write_bytes(&mut manifest, out, "transactions.csv", &buf)?;
    }
    if format.json() {
        write_json(&mut manifest, out, "trace.json", &trace)?;
    }

    let comparison = analytic_comparison(&trace);
    let sandwich = if trace.block_audits.is_empty() {
        None
    } else {
        let victims_included: usize = trace.block_audits.iter().map(|a| a.victims_included).sum();
        let victims_sandwiched: usize = trace
            .block_audits
            .iter()
            .map(|a| a.victims_sandwiched)
            .sum();
        Some(SandwichSummary {
            blocks_with_victims: trace
                .block_audits
                .iter()
                .filter(|a| a.victims_included > 0)
                .count(),
            victims_included,
            victims_sandwiched,
            sandwiched_fraction: if victims_included > 0 {
                victims_sandwiched as f64 / victims_included as f64
            } else {
                0.0
            },
            trichotomy_violations: trace
                .block_audits
                .iter()
                .filter(|a| !a.trichotomy_ok)
                .count(),
            total_payoff_b: trace.sandwich_events.iter().map(|e| e.payoff_b).sum(),
            total_injected_volume: trace.block_audits.iter().map(|a| a.injected_volume).sum(),
        })
    };

    let arrived = trace.message_outcomes.len() + trace.censored_ids.len();
    let summary = SimSummary {
        schema_version: 1,
        seed: doc.sim.seed,
        blocks: trace.blocks.len(),
        warmup_blocks: trace.warmup(),
        messages_arrived: arrived,
        messages_confirmed: trace.message_outcomes.len(),
        messages_censored: trace.censored_ids.len(),
        p: comparison.map(|c| c.0),
        q: comparison.map(|c| c.1),
        tv_n_raw: comparison.map(|c| c.2),
        tv_n_conditional: comparison.map(|c| c.3),
        tv_kprime_conditional: comparison.map(|c| c.4),
        sandwich,
        final_reserves: trace.final_reserves,
    };
    write_json(&mut manifest, out, "summary.json", &summary)?;
    manifest.write(out)?;

    println!(
        "simulated {} blocks (warmup {}), {} confirmed, {} censored, seed {}",
        summary.blocks,
        summary.warmup_blocks,
        summary.messages_confirmed,
        summary.messages_censored,
        summary.seed
    );
    if let Some((p, _, tv_raw, tv_cond, tv_kprime)) = comparison {
        println!(
            "analytic p = {p:.6}; TV(N) raw = {tv_raw:.4}, conditional = {tv_cond:.4}; TV(K') = {tv_kprime:.4}"
        );
    }
    if let Some(s) = &summary.sandwich {
        println!(
            "sandwiched {}/{} victims, {} trichotomy violations, total payoff {:.6} B",
            s.victims_sandwiched, s.victims_included, s.trichotomy_violations, s.total_payoff_b
        );
    }
    Ok(())
}
