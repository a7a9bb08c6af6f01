//! Constant function market maker pricing.
//!
//! A pricing rule is a twice continuously differentiable invariant
//! `f(x, y)` with strictly positive partials, pinned to one level set
//! `f = lambda`. Along the level set, the reserves of token B balancing `x`
//! units of the numeraire A are given by the cost potential `P(x)`, whose
//! negative derivative is the marginal price of B in A. Swaps move the
//! reserve point along the level set; amounts are always denominated on the
//! A side, with BUY (positive sign) meaning "buy B with A".

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance for level-set self-consistency checks.
pub const LEVEL_RTOL: f64 = 1e-9;

/// An invariant pinned to a level, exposing the cost potential and its
/// derivatives. Implementations must be stateless; derivative defaults use
/// central differences with step `max(1e-6, 1e-6 * |x|)`.
pub trait PricingRule: Send + Sync {
    fn name(&self) -> &'static str;

    /// The pinned invariant level.
    fn level(&self) -> f64;

    /// The invariant f evaluated off the level set.
    fn invariant(&self, x: f64, y: f64) -> f64;

    /// Cost potential: B reserves balancing `x` units of A on the level set.
    fn potential(&self, x: f64) -> f64;

    fn potential_deriv(&self, x: f64) -> f64 {
        let h = fd_step(x);
        (self.potential(x + h) - self.potential(x - h)) / (2.0 * h)
    }

    fn potential_second_deriv(&self, x: f64) -> f64 {
        let h = fd_step(x);
        (self.potential(x + h) - 2.0 * self.potential(x) + self.potential(x - h)) / (h * h)
    }

    /// Marginal price of B in terms of A at reserve point x: -1/P'(x) is the
    /// price of A in B; the quoted price of B in A is -P'(x).
    fn marginal_price(&self, x: f64) -> f64 {
        -self.potential_deriv(x)
    }
}

fn fd_step(x: f64) -> f64 {
    (1e-6f64).max(1e-6 * x.abs())
}

/// Constant product rule: f(x, y) = x * y, P(x) = lambda / x.
#[derive(Debug, Clone, Copy)]
pub struct Cpmm {
    level: f64,
}

impl Cpmm {
    pub fn new(level: f64) -> Result<Self> {
        if level <= 0.0 || !level.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "cpmm level must be positive, got {level}"
            )));
        }
        Ok(Self { level })
    }
}

/// Constant product rule at the given invariant level.
pub fn cpmm_rule(level: f64) -> Result<Cpmm> {
    Cpmm::new(level)
}

impl PricingRule for Cpmm {
    fn name(&self) -> &'static str {
        "cpmm"
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn invariant(&self, x: f64, y: f64) -> f64 {
        x * y
    }

    fn potential(&self, x: f64) -> f64 {
        self.level / x
    }

    fn potential_deriv(&self, x: f64) -> f64 {
        -self.level / (x * x)
    }

    fn potential_second_deriv(&self, x: f64) -> f64 {
        2.0 * self.level / (x * x * x)
    }
}

/// Constant sum rule: f(x, y) = x + y, P(x) = level - x. Linear potential,
/// so sandwiching it yields exactly zero; useful as a convexity control.
#[derive(Debug, Clone, Copy)]
pub struct ConstantSum {
    level: f64,
}

impl ConstantSum {
    pub fn new(level: f64) -> Result<Self> {
        if level <= 0.0 || !level.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "constant-sum level must be positive, got {level}"
            )));
        }
        Ok(Self { level })
    }
}

impl PricingRule for ConstantSum {
    fn name(&self) -> &'static str {
        "constant_sum"
    }

    fn level(&self) -> f64 {
        self.level
    }

    fn invariant(&self, x: f64, y: f64) -> f64 {
        x + y
    }

    fn potential(&self, x: f64) -> f64 {
        self.level - x
    }

    fn potential_deriv(&self, _x: f64) -> f64 {
        -1.0
    }

    fn potential_second_deriv(&self, _x: f64) -> f64 {
        0.0
    }
}

/// Reserve pair on a pinned level set. `reserve_b` is always
/// `rule.potential(reserve_a)` by construction.
#[derive(Clone)]
pub struct CfmmState {
    pub reserve_a: f64,
    pub reserve_b: f64,
    rule: Arc<dyn PricingRule>,
}

impl std::fmt::Debug for CfmmState {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("CfmmState")
            .field("rule", &self.rule.name())
            .field("level", &self.rule.level())
            .field("reserve_a", &self.reserve_a)
            .field("reserve_b", &self.reserve_b)
            .finish()
    }
}

impl CfmmState {
    pub fn new(reserve_a: f64, rule: Arc<dyn PricingRule>) -> Result<Self> {
        if reserve_a <= 0.0 || !reserve_a.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "reserve_a must be positive, got {reserve_a}"
            )));
        }
        let reserve_b = rule.potential(reserve_a);
        if reserve_b <= 0.0 || !reserve_b.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "potential({reserve_a}) = {reserve_b} is outside the open quadrant"
            )));
        }
        let state = Self {
            reserve_a,
            reserve_b,
            rule,
        };
        state.check_level()?;
        Ok(state)
    }

    pub fn rule(&self) -> &Arc<dyn PricingRule> {
        &self.rule
    }

    pub fn level(&self) -> f64 {
        self.rule.level()
    }

    fn check_level(&self) -> Result<()> {
        let lvl = self.rule.invariant(self.reserve_a, self.reserve_b);
        let target = self.rule.level();
        if (lvl - target).abs() > LEVEL_RTOL * target.abs().max(1.0) {
            return Err(Error::NumericalInstability(format!(
                "level set violated: f = {lvl}, expected {target}"
            )));
        }
        Ok(())
    }

    /// Marginal price of B in A at the current reserves.
    pub fn marginal_price(&self) -> f64 {
        self.rule.marginal_price(self.reserve_a)
    }
}

/// Market order denominated on the A side. Positive = BUY (buy B with A),
/// negative = SELL (sell B for A); the magnitude is the A-side amount.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketOrder {
    pub signed_amount: f64,
}

impl MarketOrder {
    pub fn new(signed_amount: f64) -> Result<Self> {
        if signed_amount == 0.0 || !signed_amount.is_finite() {
            return Err(Error::InvalidParameter(
                "order amount must be non-zero and finite".into(),
            ));
        }
        Ok(Self { signed_amount })
    }

    pub fn is_buy(&self) -> bool {
        self.signed_amount > 0.0
    }
}

/// Front-run / victim / back-run triple sharing one market. The memoryless
/// case has `tau_plus = -tau_minus`, so the pool ends in the same state as if
/// the victim had executed alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SandwichTriple {
    pub tau_minus: f64,
    pub tau_0: MarketOrder,
    pub tau_plus: f64,
    pub sandwicher: String,
    pub victim: String,
}

impl SandwichTriple {
    pub fn memoryless(
        victim_order: MarketOrder,
        epsilon: f64,
        sandwicher: &str,
        victim: &str,
    ) -> Self {
        let leg = epsilon.copysign(victim_order.signed_amount);
        Self {
            tau_minus: leg,
            tau_0: victim_order,
            tau_plus: -leg,
            sandwicher: sandwicher.to_string(),
            victim: victim.to_string(),
        }
    }

    pub fn is_memoryless(&self) -> bool {
        self.tau_plus == -self.tau_minus
    }
}

/// Amount of B received for `a > 0` units of A: P(x) - P(x + a).
pub fn exchange_out(state: &CfmmState, a: f64) -> f64 {
    assert!(a > 0.0, "exchange_out takes a positive A amount");
    state.rule.potential(state.reserve_a) - state.rule.potential(state.reserve_a + a)
}

/// Two-dimensional payoff of a BUY swap of `a` units: (-a, P(x) - P(x + a)).
pub fn swap_payoff(state: &CfmmState, a: f64) -> (f64, f64) {
    (-a, exchange_out(state, a))
}

/// Scalarisation of the swap payoff against an external price of B in A.
pub fn swap_payoff_scalar(state: &CfmmState, a: f64, external_price: f64) -> f64 {
    -a + external_price * exchange_out(state, a)
}

/// Executes a market order, producing the successor reserve point. SELL
/// orders that would exhaust the A reserve are rejected.
pub fn apply_order(state: &CfmmState, order: &MarketOrder) -> Result<CfmmState> {
    let new_a = state.reserve_a + order.signed_amount;
    if new_a <= 0.0 {
        return Err(Error::ReservesExhausted {
            amount: order.signed_amount,
            reserve: state.reserve_a,
        });
    }
    Ok(CfmmState {
        reserve_a: new_a,
        reserve_b: state.rule.potential(new_a),
        rule: Arc::clone(&state.rule),
    })
}

/// Payoff of the memoryless sandwich around a BUY victim of size `tau_0`,
/// with outer legs of size `epsilon`:
///
///   (0, P(x) - P(x + eps) + P(x + eps + tau_0) - P(x + tau_0))
///
/// The A coordinate is exactly zero and the pool's final state equals the
/// unsandwiched one.
pub fn memoryless_sandwich_payoff(state: &CfmmState, tau_0: f64, epsilon: f64) -> (f64, f64) {
    assert!(tau_0 > 0.0, "victim must be a BUY order");
    assert!(epsilon > 0.0, "sandwich legs must have positive size");
    memoryless_sandwich_payoff_signed(state, tau_0, epsilon)
}

/// Signed-victim variant used by the sandwicher scheduler: the front leg
/// matches the victim's direction, the back leg cancels it. For strictly
/// convex potentials the B payoff is positive in both directions.
pub fn memoryless_sandwich_payoff_signed(
    state: &CfmmState,
    tau_0: f64,
    epsilon: f64,
) -> (f64, f64) {
    let x = state.reserve_a;
    let p = |r: f64| state.rule.potential(r);
    let leg = epsilon.copysign(tau_0);
    let payoff_b = p(x) - p(x + leg) + p(x + leg + tau_0) - p(x + tau_0);
    (0.0, payoff_b)
}

/// Numerically checks strict convexity of the potential on `[x_lo, x_hi]`
/// via two independent criteria that must agree:
///  1. central second differences P'' > 0 on a grid;
///  2. P(x + a) - P(x) strictly increasing in x for sampled (x, a).
pub fn is_strictly_convex(rule: &dyn PricingRule, x_lo: f64, x_hi: f64) -> Result<bool> {
    assert!(x_lo > 0.0 && x_hi > x_lo, "range must lie in (0, inf)");
    const GRID: usize = 64;
    let scale = rule.potential(x_lo).abs().max(1.0);
    let tol = 1e-10 * scale / (x_hi - x_lo).powi(2);

    let step = (x_hi - x_lo) / (GRID as f64 - 1.0);
    let mut second_all_positive = true;
    let mut second_any_negative = false;
    for i in 0..GRID {
        let x = x_lo + step * i as f64;
        let d2 = rule.potential_second_deriv(x);
        if d2 <= tol {
            second_all_positive = false;
        }
        if d2 < -tol {
            second_any_negative = true;
        }
    }

    let mut increment_strict = true;
    let mut increment_any_decrease = false;
    for ai in 1..=8usize {
        let a = (x_hi - x_lo) * ai as f64 / 16.0;
        let mut prev = rule.potential(x_lo + a) - rule.potential(x_lo);
        for i in 1..GRID / 2 {
            let x = x_lo + step * 2.0 * i as f64;
            if x + a > x_hi + (x_hi - x_lo) {
                break;
            }
            let cur = rule.potential(x + a) - rule.potential(x);
            let gap = cur - prev;
            if gap <= tol * a {
                increment_strict = false;
            }
            if gap < -tol * a {
                increment_any_decrease = true;
            }
            prev = cur;
        }
    }

    if second_all_positive != increment_strict {
        // Allow the degenerate agreement case: neither criterion sees strict
        // convexity but neither sees concavity (e.g. linear potentials).
        if !second_any_negative && !increment_any_decrease {
            return Ok(false);
        }
        return Err(Error::NumericalInstability(format!(
            "convexity criteria disagree on [{x_lo}, {x_hi}]: second-derivative {} vs increment {}",
            second_all_positive, increment_strict
        )));
    }
    Ok(second_all_positive)
}

/// Grid validation of a user-supplied rule: strictly positive invariant
/// partials and level-set consistency f(x, P(x)) = level.
pub fn validate_rule(rule: &dyn PricingRule, x_lo: f64, x_hi: f64) -> Result<()> {
    assert!(x_lo > 0.0 && x_hi > x_lo);
    const GRID: usize = 32;
    let step = (x_hi - x_lo) / (GRID as f64 - 1.0);
    for i in 0..GRID {
        let x = x_lo + step * i as f64;
        let y = rule.potential(x);
        if y.is_nan() || y <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "potential({x}) = {y} leaves the open quadrant"
            )));
        }
        let hx = fd_step(x);
        let hy = fd_step(y);
        let dfdx = (rule.invariant(x + hx, y) - rule.invariant(x - hx, y)) / (2.0 * hx);
        let dfdy = (rule.invariant(x, y + hy) - rule.invariant(x, y - hy)) / (2.0 * hy);
        if dfdx <= 0.0 || dfdy <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "invariant partials must be strictly positive (got {dfdx}, {dfdy} at ({x}, {y}))"
            )));
        }
        let lvl = rule.invariant(x, y);
        if (lvl - rule.level()).abs() > LEVEL_RTOL * rule.level().abs().max(1.0) {
            return Err(Error::NumericalInstability(format!(
                "f(x, P(x)) = {lvl} deviates from level {}",
                rule.level()
            )));
        }
    }
    Ok(())
}
