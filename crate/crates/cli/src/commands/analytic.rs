//! `chainq analytic`: distribution tables of K', K'' and K from rates,
//! tables, or measured transition estimates.

use std::path::Path;

use serde::Serialize;

use chainq_core::analytics::{exact_k_distributions, geometric_inputs, KDistributions};

use crate::commands::{ensure_out_dir, write_distribution_csv, write_json, Format};
use crate::config::{AnalyticDocument, BuiltModel};
use crate::manifest::RunManifest;

#[derive(Serialize)]
struct AnalyticSummary {
    schema_version: u32,
    beta: usize,
    /// Geometric parameters, when derived from rates.
    p: Option<f64>,
    q: Option<f64>,
    p_kprime_0: f64,
    kprime_cont: f64,
    k_max: usize,
    full_k_tail_mass: f64,
}

#[derive(Serialize)]
struct TablesJson<'a> {
    schema_version: u32,
    beta: usize,
    p_kprime: &'a [f64],
    kprime_cont: f64,
    p_kpp_first: &'a [f64],
    p_kpp_later: &'a [f64],
    p_k_head: &'a [f64],
    full_k: &'a [f64],
    full_k_tail_mass: f64,
}

pub fn run(
    doc: &AnalyticDocument,
    raw_config: &[u8],
    out: &Path,
    format: Format,
) -> anyhow::Result<()> {
    doc.validate()?;
    ensure_out_dir(out)?;
    let mut manifest = RunManifest::new("analytic", raw_config, None);

    let built = doc.model.build()?;
    let (dists, rates) = match &built {
        BuiltModel::Rates(model) => (
            KDistributions::from_inputs(&geometric_inputs(model), doc.kprime_len)?,
            Some(model.clone()),
        ),
        BuiltModel::Tables(inputs) => (KDistributions::from_inputs(inputs, doc.kprime_len)?, None),
        BuiltModel::Transitions(inputs) => (
            KDistributions::from_transitions(inputs, doc.kprime_len)?,
            None,
        ),
    };
    dists.validate()?;
    let (full_k, tail) = dists.full_k(doc.k_max);

    if format.csv() {
        write_distribution_csv(&mut manifest, out, "kprime.csv", &dists.p_kprime)?;
        write_distribution_csv(&mut manifest, out, "kpp_first.csv", &dists.p_kpp_first)?;
        write_distribution_csv(&mut manifest, out, "kpp_later.csv", &dists.p_kpp_later)?;
        write_distribution_csv(&mut manifest, out, "k_head.csv", &dists.p_k_head)?;
        write_distribution_csv(&mut manifest, out, "full_k.csv", &full_k)?;
    }
    if format.json() {
        let tables = TablesJson {
            schema_version: 1,
            beta: dists.beta,
            p_kprime: &dists.p_kprime,
            kprime_cont: dists.kprime_cont,
            p_kpp_first: &dists.p_kpp_first,
            p_kpp_later: &dists.p_kpp_later,
            p_k_head: &dists.p_k_head,
            full_k: &full_k,
            full_k_tail_mass: tail,
        };
        write_json(&mut manifest, out, "tables.json", &tables)?;
    }

    if doc.exact {
        if let Some(model) = &rates {
            let exact = exact_k_distributions(model, 4096)?;
            if format.csv() {
                write_distribution_csv(&mut manifest, out, "kprime_exact.csv", &exact.kprime)?;
                write_distribution_csv(
                    &mut manifest,
                    out,
                    "kpp_later_exact.csv",
                    &exact.kpp_later,
                )?;
            }
            if format.json() {
                write_json(&mut manifest, out, "exact.json", &exact)?;
            }
        }
    }

    let summary = AnalyticSummary {
        schema_version: 1,
        beta: dists.beta,
        p: rates.as_ref().map(|m| m.p),
        q: rates.as_ref().map(|m| m.q),
        p_kprime_0: dists.p_kprime[0],
        kprime_cont: dists.kprime_cont,
        k_max: doc.k_max,
        full_k_tail_mass: tail,
    };
    write_json(&mut manifest, out, "summary.json", &summary)?;
    manifest.write(out)?;

    match &rates {
        Some(model) => println!(
            "p = {}\nq = {}\nP(K'=0) = {}",
            model.p, model.q, dists.p_kprime[0]
        ),
        None => println!("P(K'=0) = {}", dists.p_kprime[0]),
    }
    Ok(())
}
