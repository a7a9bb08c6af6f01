//! Block schedulers: naive (random injection), rational priority, and the
//! sandwicher. Schedulers read the pool immutably and return the ordered
//! block; the simulation loop removes included pool messages afterwards.

use std::collections::HashSet;

use rand::Rng;

use super::Message;
use crate::cfmm::{apply_order, memoryless_sandwich_payoff_signed, CfmmState, MarketOrder};
use crate::error::{Error, Result};

/// Creates injected messages and guarantees globally distinct priorities by
/// rejection sampling on the raw bits of every priority ever issued.
#[derive(Debug, Default)]
pub struct MessageFactory {
    next_id: u64,
    seen_priorities: HashSet<u64>,
}

impl MessageFactory {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn next_id(&mut self) -> u64 {
        let id = self.next_id;
        self.next_id += 1;
        id
    }

    /// Uniform draw on (offset, offset + 1), rejecting any value already
    /// issued so the diffuse-priority hypothesis holds exactly.
    pub fn fresh_priority(&mut self, rng: &mut impl Rng, offset: f64) -> f64 {
        loop {
            let u: f64 = rng.gen();
            let v = u + offset;
            if self.seen_priorities.insert(v.to_bits()) {
                return v;
            }
        }
    }

    pub fn injected(
        &mut self,
        rng: &mut impl Rng,
        time: f64,
        priority_offset: f64,
        payload: Option<MarketOrder>,
    ) -> Message {
        Message {
            id: self.next_id(),
            arrival_time: time,
            priority: self.fresh_priority(rng, priority_offset),
            payload,
            injected: true,
        }
    }
}

/// Naive scheduler: each of the beta positions holds an injected message
/// with probability `p_inj`, independently; other positions are filled FIFO
/// from the pool until it runs out. The injected count is Binomial(beta,
/// p_inj) regardless of the pool.
pub fn naive_schedule(
    pool: &[Message],
    beta: usize,
    p_inj: f64,
    rng: &mut impl Rng,
    factory: &mut MessageFactory,
    now: f64,
) -> Vec<Message> {
    assert!((0.0..=1.0).contains(&p_inj), "p_inj must lie in [0, 1]");
    let mut block = Vec::with_capacity(beta);
    let mut next_pool = 0usize;
    for _ in 0..beta {
        if rng.gen::<f64>() < p_inj {
            block.push(factory.injected(rng, now, 0.0, None));
        } else if next_pool < pool.len() {
            block.push(pool[next_pool].clone());
            next_pool += 1;
        }
    }
    block
}

/// Rational priority scheduler: the top-beta messages of pool and injected
/// set by priority, sorted descending. Satisfies priority inclusion (no
/// excluded candidate outranks an included one) and priority order.
///
/// All injected messages must outrank the whole pool; a priority tie among
/// candidates is an error since the generator rules ties out.
pub fn priority_schedule(
    pool: &[Message],
    beta: usize,
    injected: &[Message],
) -> Result<Vec<Message>> {
    if let (Some(inj_min), Some(pool_max)) = (
        injected.iter().map(|m| m.priority).min_by(f64::total_cmp),
        pool.iter().map(|m| m.priority).max_by(f64::total_cmp),
    ) {
        if inj_min <= pool_max {
            return Err(Error::InjectedNotDominant {
                injected: inj_min,
                pool: pool_max,
            });
        }
    }
    let mut candidates: Vec<&Message> = pool.iter().chain(injected.iter()).collect();
    candidates.sort_by(|a, b| b.priority.total_cmp(&a.priority));
    for w in candidates.windows(2) {
        if w[0].priority == w[1].priority {
            return Err(Error::PriorityTie(w[0].priority));
        }
    }
    Ok(candidates.into_iter().take(beta).cloned().collect())
}

/// Result of one sandwicher pass.
#[derive(Debug, Clone, Default)]
pub struct SandwichOutcome {
    /// (victim id, leg size, payoff in B) per executed sandwich.
    pub events: Vec<(u64, f64, f64)>,
    /// Victims present in the emitted block.
    pub victims_included: usize,
    /// Victims present and wrapped.
    pub victims_sandwiched: usize,
    /// Total |amount| over injected legs.
    pub injected_volume: f64,
    /// Pool messages evicted to make room for legs.
    pub evicted: usize,
}

/// Sandwicher scheduler. Starts from the priority block and wraps each
/// included market order in a memoryless sandwich (front leg matching the
/// victim's direction, back leg cancelling it), spending the full remaining
/// A-budget on each front leg; the back leg restores it, so every victim in
/// the block can be wrapped with the same balance.
///
/// Legs are injected messages. When the block is full the lowest-priority
/// unwrapped messages are evicted to make room, plain messages before
/// unwrapped orders; a victim stays unwrapped only when nothing is left to
/// evict, which means the block is packed with orders and legs and has
/// length at least beta - 1. On every emitted block each included victim is
/// therefore sandwiched, or the block has length at least beta - 1, or the
/// injected volume has reached the budget.
pub fn sandwich_schedule(
    pool: &[Message],
    beta: usize,
    budget: f64,
    cfmm: &CfmmState,
    rng: &mut impl Rng,
    factory: &mut MessageFactory,
    now: f64,
) -> Result<(Vec<Message>, SandwichOutcome)> {
    assert!(budget >= 0.0, "budget must be non-negative");
    let mut block = priority_schedule(pool, beta, &[])?;
    let mut outcome = SandwichOutcome::default();

    if budget <= 0.0 || beta < 3 {
        outcome.victims_included = count_victims(&block);
        return Ok((block, outcome));
    }

    let mut running = cfmm.clone();
    let mut wrapped: HashSet<u64> = HashSet::new();
    let mut i = 0usize;
    while i < block.len() {
        let msg = &block[i];
        let order = match (&msg.payload, msg.injected) {
            (Some(order), false) => *order,
            _ => {
                if let Some(o) = &msg.payload {
                    // injected legs still move the pool
                    running = apply_order(&running, o)?;
                }
                i += 1;
                continue;
            }
        };

        if wrapped.contains(&msg.id) {
            running = apply_order(&running, &order)?;
            i += 1;
            continue;
        }

        // capacity: two leg slots, evicting the cheapest messages if full
        let mut need = (block.len() + 2).saturating_sub(beta);
        while need > 0 {
            let Some(pos) = eviction_candidate(&block, i, &wrapped) else {
                break;
            };
            if pos < i {
                i -= 1;
            }
            block.remove(pos);
            outcome.evicted += 1;
            need -= 1;
        }
        if block.len() + 2 > beta {
            // nothing left to evict: the block already has length >= beta - 1
            running = apply_order(&running, &order)?;
            i += 1;
            continue;
        }

        let epsilon = budget;
        let front_amount = epsilon.copysign(order.signed_amount);
        let front = MarketOrder::new(front_amount)?;
        let back = MarketOrder::new(-front_amount)?;

        // the sandwich must execute: front, victim, back
        let after_front = match apply_order(&running, &front) {
            Ok(s) => s,
            Err(_) => {
                running = apply_order(&running, &order)?;
                i += 1;
                continue;
            }
        };
        let after_victim = match apply_order(&after_front, &order) {
            Ok(s) => s,
            Err(_) => {
                running = apply_order(&running, &order)?;
                i += 1;
                continue;
            }
        };
        let after_back = apply_order(&after_victim, &back)?;

        let (_, payoff_b) =
            memoryless_sandwich_payoff_signed(&running, order.signed_amount, epsilon);

        let front_msg = factory.injected(rng, now, 1.0, Some(front));
        let back_msg = factory.injected(rng, now, 1.0, Some(back));
        block.insert(i, front_msg);
        block.insert(i + 2, back_msg);

        outcome
            .events
            .push((msg_id(&block[i + 1]), epsilon, payoff_b));
        outcome.injected_volume += 2.0 * epsilon;
        wrapped.insert(msg_id(&block[i + 1]));
        running = after_back;
        i += 3;
    }

    outcome.victims_included = count_victims(&block);
    outcome.victims_sandwiched = outcome.events.len();
    Ok((block, outcome))
}

fn msg_id(m: &Message) -> u64 {
    m.id
}

fn count_victims(block: &[Message]) -> usize {
    block
        .iter()
        .filter(|m| m.payload.is_some() && !m.injected)
        .count()
}

/// Index of the cheapest evictable message: the lowest-priority non-injected
/// message other than the current victim and already-wrapped victims.
/// Plain messages are evicted before unwrapped orders, which still have
/// sandwich value.
fn eviction_candidate(block: &[Message], current: usize, wrapped: &HashSet<u64>) -> Option<usize> {
    let candidates = |orders: bool| {
        (0..block.len())
            .filter(|&j| j != current)
            .filter(|&j| !block[j].injected && !wrapped.contains(&block[j].id))
            .filter(|&j| block[j].payload.is_some() == orders)
            .min_by(|&a, &b| block[a].priority.total_cmp(&block[b].priority))
    };
    candidates(false).or_else(|| candidates(true))
}
