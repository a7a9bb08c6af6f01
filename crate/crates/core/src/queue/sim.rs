//! The simulation loop: arrivals accumulate in the pool between blocks,
//! blocks remove their included pool messages, and every included
//! non-injected message gets a (K', K'') outcome record relative to the
//! first block produced after its arrival.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp};

use super::scheduler::{naive_schedule, priority_schedule, sandwich_schedule, MessageFactory};
use super::{
    BlockAudit, BlockRecord, BlockTimeLaw, Message, MessageOutcome, SandwichEvent, SchedulerKind,
    SimConfig, SimTrace,
};
use crate::cfmm::apply_order;
use crate::error::Result;

/// Draws a marked Poisson arrival stream on (0, t_end]: exponential holding
/// times at rate `lambda`, uniform diffuse priorities. Deterministic given
/// the rng state; `lambda = 0` yields an empty stream.
pub fn sample_arrivals(lambda: f64, t_end: f64, rng: &mut impl Rng) -> Vec<Message> {
    assert!(lambda >= 0.0, "lambda must be non-negative");
    assert!(t_end > 0.0, "t_end must be positive");
    if lambda == 0.0 {
        return Vec::new();
    }
    let exp = Exp::new(lambda).expect("positive rate");
    let mut factory = MessageFactory::new();
    let mut t = 0.0;
    let mut out = Vec::new();
    loop {
        t += exp.sample(rng);
        if t > t_end {
            break;
        }
        let id = factory.next_id();
        let priority = factory.fresh_priority(rng, 0.0);
        out.push(Message {
            id,
            arrival_time: t,
            priority,
            payload: None,
            injected: false,
        });
    }
    out
}

/// Runs the configured simulation. One run is single-threaded and
/// deterministic in the seed; independent replications can run concurrently
/// on separate configs.
pub fn run_simulation(config: &SimConfig) -> Result<SimTrace> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut factory = MessageFactory::new();

    let beta = config.beta;
    let exp_interval = Exp::new(config.mu).expect("positive mu");
    let exp_arrival = if config.lambda > 0.0 {
        Some(Exp::new(config.lambda).expect("positive lambda"))
    } else {
        None
    };

    let mut cfmm = match &config.pool {
        Some(pool_cfg) => Some(pool_cfg.build()?),
        None => None,
    };

    let mut pool: Vec<Message> = Vec::new();
    let mut first_block: HashMap<u64, usize> = HashMap::new();
    let mut blocks = Vec::with_capacity(config.horizon_blocks);
    let mut embedded_chain = Vec::with_capacity(config.horizon_blocks);
    let mut message_outcomes = Vec::new();
    let mut sandwich_events = Vec::new();
    let mut block_audits = Vec::new();

    let reference = config.reference_priority.unwrap_or(f64::NEG_INFINITY);
    let mut now = 0.0f64;
    // the next pending arrival, drawn ahead of the block clock
    let mut next_arrival = exp_arrival.as_ref().map(|e| e.sample(&mut rng));

    for n in 0..config.horizon_blocks {
        let interval = match config.block_time_law {
            BlockTimeLaw::Constant => 1.0 / config.mu,
            BlockTimeLaw::Exponential => exp_interval.sample(&mut rng),
        };
        let block_time = now + interval;

        // arrivals strictly before the block time join the pool and see
        // block n as the first block after their arrival
        if let Some(exp) = exp_arrival.as_ref() {
            while let Some(t) = next_arrival {
                if t >= block_time {
                    break;
                }
                let id = factory.next_id();
                let priority = factory.fresh_priority(&mut rng, 0.0);
                let payload = config.orderflow.as_ref().and_then(|flow| {
                    if rng.gen::<f64>() < flow.order_fraction {
                        Some(crate::cfmm::MarketOrder {
                            signed_amount: flow.law.sample(&mut rng),
                        })
                    } else {
                        None
                    }
                });
                pool.push(Message {
                    id,
                    arrival_time: t,
                    priority,
                    payload,
                    injected: false,
                });
                first_block.insert(id, n);
                next_arrival = Some(t + exp.sample(&mut rng));
            }
        }

        let pool_size_before = pool.len();
        let high_priority_before = pool.iter().filter(|m| m.priority > reference).count();
        embedded_chain.push(pool_size_before);

        let (block_messages, audit) = match config.scheduler {
            SchedulerKind::Naive { p_inj } => (
                naive_schedule(&pool, beta, p_inj, &mut rng, &mut factory, block_time),
                None,
            ),
            SchedulerKind::Priority => (priority_schedule(&pool, beta, &[])?, None),
            SchedulerKind::Sandwicher { budget } => {
                let state = cfmm.as_ref().expect("validated: sandwicher has a pool");
                let (block, outcome) = sandwich_schedule(
                    &pool,
                    beta,
                    budget,
                    state,
                    &mut rng,
                    &mut factory,
                    block_time,
                )?;
                for (victim_id, epsilon, payoff_b) in &outcome.events {
                    sandwich_events.push(SandwichEvent {
                        block: n,
                        victim_id: *victim_id,
                        epsilon: *epsilon,
                        payoff_b: *payoff_b,
                    });
                }
                let unsandwiched = outcome.victims_included - outcome.victims_sandwiched;
                let trichotomy_ok = unsandwiched == 0
                    || block.len() >= beta.saturating_sub(1)
                    || outcome.injected_volume >= budget;
                let audit = BlockAudit {
                    block: n,
                    emitted_len: block.len(),
                    victims_included: outcome.victims_included,
                    victims_sandwiched: outcome.victims_sandwiched,
                    injected_volume: outcome.injected_volume,
                    trichotomy_ok,
                };
                (block, Some(audit))
            }
        };
        debug_assert!(block_messages.len() <= beta);

        if let Some(audit) = audit {
            block_audits.push(audit);
        }

        // remove included pool messages; injected ones never were in the pool
        if !block_messages.is_empty() {
            let included: std::collections::HashSet<u64> = block_messages
                .iter()
                .filter(|m| !m.injected)
                .map(|m| m.id)
                .collect();
            if matches!(config.scheduler, SchedulerKind::Priority) {
                debug_assert_eq!(included.len(), pool_size_before.min(beta));
            }
            pool.retain(|m| !included.contains(&m.id));
        }

        // outcome records for included non-injected messages
        for (pos, msg) in block_messages.iter().enumerate() {
            if msg.injected {
                continue;
            }
            let first = first_block[&msg.id];
            debug_assert!(n >= first);
            let k_prime = n - first;
            message_outcomes.push(MessageOutcome {
                id: msg.id,
                arrival_time: msg.arrival_time,
                priority: msg.priority,
                k_prime,
                k_double_prime: pos,
                k: beta * k_prime + pos,
            });
        }

        // execute payloads against the attached pool, in block order
        if let Some(state) = cfmm.as_mut() {
            for msg in &block_messages {
                if let Some(order) = &msg.payload {
                    *state = apply_order(state, order)?;
                }
            }
        }

        blocks.push(BlockRecord {
            index: n,
            interval,
            messages: block_messages,
            pool_size_before,
            high_priority_before,
        });
        now = block_time;
    }

    let censored_ids: Vec<u64> = pool.iter().map(|m| m.id).collect();
    let final_reserves = cfmm.map(|s| (s.reserve_a, s.reserve_b));

    Ok(SimTrace {
        config: config.clone(),
        blocks,
        embedded_chain,
        message_outcomes,
        censored_ids,
        sandwich_events,
        block_audits,
        final_reserves,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::orderflow::OrderSizeLaw;
    use crate::queue::{CfmmConfig, OrderFlowConfig};
    use crate::stats::ks_statistic_exponential;
    use std::collections::HashSet;

    fn base_config() -> SimConfig {
        SimConfig {
            lambda: 1.0,
            mu: 1.0,
            beta: 5,
            block_time_law: BlockTimeLaw::Exponential,
            scheduler: SchedulerKind::Priority,
            horizon_blocks: 2000,
            warmup_blocks: Some(100),
            seed: 42,
            reference_priority: None,
            orderflow: None,
            pool: None,
        }
    }

    #[test]
    fn arrivals_empty_for_zero_rate() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        assert!(sample_arrivals(0.0, 100.0, &mut rng).is_empty());
    }

    #[test]
    fn arrivals_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let lambda = 2.0;
        let t_end = 1000.0;
        let msgs = sample_arrivals(lambda, t_end, &mut rng);
        let n = msgs.len() as f64;
        // count within 3 sigma of lambda * t
        let expected = lambda * t_end;
        assert!((n - expected).abs() < 3.0 * expected.sqrt(), "count {n}");
        // holding times pass a KS test against Exp(lambda) at alpha = 0.01
        let mut holds: Vec<f64> = msgs
            .windows(2)
            .map(|w| w[1].arrival_time - w[0].arrival_time)
            .collect();
        holds.push(msgs[0].arrival_time);
        let d = ks_statistic_exponential(&mut holds, lambda);
        let critical = 1.628 / (holds.len() as f64).sqrt();
        assert!(d < critical, "KS statistic {d} >= {critical}");
    }

    #[test]
    fn arrivals_deterministic_in_seed() {
        let a = sample_arrivals(1.5, 500.0, &mut ChaCha8Rng::seed_from_u64(9));
        let b = sample_arrivals(1.5, 500.0, &mut ChaCha8Rng::seed_from_u64(9));
        assert_eq!(a, b);
    }

    #[test]
    fn simulation_deterministic_in_seed() {
        let config = base_config();
        let a = run_simulation(&config).unwrap();
        let b = run_simulation(&config).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn pool_conservation_no_message_in_two_blocks() {
        let trace = run_simulation(&base_config()).unwrap();
        let mut seen = HashSet::new();
        for block in &trace.blocks {
            for m in &block.messages {
                assert!(seen.insert(m.id), "message {} included twice", m.id);
            }
        }
    }

    #[test]
    fn outcome_decomposition_invariant() {
        let trace = run_simulation(&base_config()).unwrap();
        assert!(!trace.message_outcomes.is_empty());
        for o in &trace.message_outcomes {
            assert_eq!(o.k, 5 * o.k_prime + o.k_double_prime);
            assert!(o.k_double_prime < 5);
        }
    }

    #[test]
    fn work_conservation_under_priority() {
        let trace = run_simulation(&base_config()).unwrap();
        for block in &trace.blocks {
            assert_eq!(
                block.messages.len(),
                block.pool_size_before.min(5),
                "block {} is not work-conserving",
                block.index
            );
        }
    }

    #[test]
    fn injected_only_scheduler_keeps_pool_empty() {
        let mut config = base_config();
        config.lambda = 0.0;
        config.scheduler = SchedulerKind::Naive { p_inj: 1.0 };
        config.horizon_blocks = 200;
        config.warmup_blocks = Some(10);
        let trace = run_simulation(&config).unwrap();
        for block in &trace.blocks {
            assert_eq!(block.pool_size_before, 0);
            assert_eq!(block.messages.len(), 5);
            assert!(block.messages.iter().all(|m| m.injected));
        }
        assert!(trace.censored_ids.is_empty());
    }

    #[test]
    fn censored_messages_are_reported() {
        let mut config = base_config();
        // overloaded queue: most messages never confirm
        config.lambda = 20.0;
        config.horizon_blocks = 200;
        config.warmup_blocks = Some(10);
        let trace = run_simulation(&config).unwrap();
        assert!(!trace.censored_ids.is_empty());
        let outcome_ids: HashSet<u64> = trace.message_outcomes.iter().map(|o| o.id).collect();
        for id in &trace.censored_ids {
            assert!(!outcome_ids.contains(id));
        }
    }

    #[test]
    fn naive_injected_counts_are_lag1_independent() {
        // chi-square independence test on lag-1 pairs of injected counts
        let mut config = base_config();
        config.scheduler = SchedulerKind::Naive { p_inj: 0.4 };
        config.beta = 10;
        config.horizon_blocks = 10_000;
        config.warmup_blocks = Some(100);
        let trace = run_simulation(&config).unwrap();
        let counts: Vec<usize> = trace
            .post_warmup_blocks()
            .iter()
            .map(|b| b.injected_count())
            .collect();
        // bin into low/mid/high around the Binomial(10, 0.4) bulk
        let bin = |c: usize| -> usize {
            match c {
                0..=2 => 0,
                3..=4 => 1,
                _ => 2,
            }
        };
        let mut table = [[0.0f64; 3]; 3];
        for w in counts.windows(2) {
            table[bin(w[0])][bin(w[1])] += 1.0;
        }
        let total: f64 = table.iter().flatten().sum();
        let row: Vec<f64> = table.iter().map(|r| r.iter().sum::<f64>()).collect();
        let col: Vec<f64> = (0..3).map(|j| table.iter().map(|r| r[j]).sum()).collect();
        let mut chi2 = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                let expected = row[i] * col[j] / total;
                if expected > 0.0 {
                    let d = table[i][j] - expected;
                    chi2 += d * d / expected;
                }
            }
        }
        // df = (3-1)(3-1) = 4; critical value at alpha = 0.01
        use statrs::distribution::{ChiSquared, ContinuousCDF};
        let critical = ChiSquared::new(4.0).unwrap().inverse_cdf(0.99);
        assert!(chi2 < critical, "chi2 {chi2} >= {critical}");
    }

    #[test]
    fn constant_blocks_have_smaller_embedded_variance() {
        let mut exp_cfg = base_config();
        exp_cfg.lambda = 2.5;
        exp_cfg.horizon_blocks = 20_000;
        exp_cfg.warmup_blocks = Some(500);
        let mut const_cfg = exp_cfg.clone();
        const_cfg.block_time_law = BlockTimeLaw::Constant;

        let var = |trace: &SimTrace| {
            let chain = trace.post_warmup_chain();
            let mean = chain.iter().sum::<usize>() as f64 / chain.len() as f64;
            chain
                .iter()
                .map(|&x| (x as f64 - mean) * (x as f64 - mean))
                .sum::<f64>()
                / chain.len() as f64
        };
        let v_exp = var(&run_simulation(&exp_cfg).unwrap());
        let v_const = var(&run_simulation(&const_cfg).unwrap());
        assert!(
            v_const < 0.9 * v_exp,
            "constant {v_const} vs exponential {v_exp}"
        );
    }

    #[test]
    fn sandwicher_simulation_audits_clean() {
        let config = SimConfig {
            lambda: 3.0,
            mu: 1.0,
            beta: 6,
            block_time_law: BlockTimeLaw::Exponential,
            scheduler: SchedulerKind::Sandwicher { budget: 5.0 },
            horizon_blocks: 500,
            warmup_blocks: Some(20),
            seed: 7,
            reference_priority: None,
            orderflow: Some(OrderFlowConfig {
                order_fraction: 0.3,
                law: OrderSizeLaw::UniformSymmetric { l: 0.5 },
            }),
            pool: Some(CfmmConfig {
                rule: "cpmm".into(),
                level: 10_000.0,
                initial_reserve_a: 100.0,
            }),
        };
        let trace = run_simulation(&config).unwrap();
        assert!(!trace.sandwich_events.is_empty());
        assert!(trace.block_audits.iter().all(|a| a.trichotomy_ok));
        for e in &trace.sandwich_events {
            assert!(e.payoff_b > 0.0);
        }
        // memoryless legs cancel: final reserve_a = initial + net victim flow
        let victim_net: f64 = trace
            .blocks
            .iter()
            .flat_map(|b| b.messages.iter())
            .filter(|m| !m.injected)
            .filter_map(|m| m.payload.as_ref())
            .map(|o| o.signed_amount)
            .sum();
        let (ra, _) = trace.final_reserves.unwrap();
        assert!((ra - (100.0 + victim_net)).abs() < 1e-9);
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut config = base_config();
        config.mu = 0.0;
        assert!(run_simulation(&config).is_err());

        let mut config = base_config();
        config.horizon_blocks = 10;
        config.warmup_blocks = Some(10);
        assert!(run_simulation(&config).is_err());

        let mut config = base_config();
        config.scheduler = SchedulerKind::Sandwicher { budget: 1.0 };
        assert!(run_simulation(&config).is_err(), "sandwicher needs a pool");
    }
}
