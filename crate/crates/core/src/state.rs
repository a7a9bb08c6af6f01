//! Token-balance state machine.
//!
//! State is a mapping from (address, token) to a non-negative balance.
//! Transactions are conditional balanced translations: a finitely supported
//! vector of signed deltas that sums to zero per token. A translation applies
//! atomically if every resulting balance stays non-negative, and otherwise
//! leaves the state untouched.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub type Address = String;
pub type TokenId = String;

/// Relative tolerance for the per-token conservation check, scaled by the
/// largest delta magnitude to absorb float noise in composed trades.
pub const CONSERVATION_RTOL: f64 = 1e-12;

/// Balances keyed by (address, token). Absent keys are implicitly zero.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TokenBalanceState {
    balances: BTreeMap<(Address, TokenId), f64>,
}

impl TokenBalanceState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_balance(mut self, address: &str, token: &str, amount: f64) -> Self {
        assert!(amount >= 0.0, "balances are non-negative");
        self.balances
            .insert((address.to_string(), token.to_string()), amount);
        self
    }

    pub fn balance(&self, address: &str, token: &str) -> f64 {
        self.balances
            .get(&(address.to_string(), token.to_string()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Total supply of one token across all addresses.
    pub fn total_supply(&self, token: &str) -> f64 {
        self.balances
            .iter()
            .filter(|((_, t), _)| t == token)
            .map(|(_, v)| v)
            .sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&(Address, TokenId), &f64)> {
        self.balances.iter()
    }
}

/// A finitely supported vector of signed balance deltas that conserves each
/// token: per token, the deltas sum to zero (no mints, no burns).
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct BalancedTranslation {
    deltas: BTreeMap<(Address, TokenId), f64>,
}

impl BalancedTranslation {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn with_delta(mut self, address: &str, token: &str, amount: f64) -> Self {
        let key = (address.to_string(), token.to_string());
        *self.deltas.entry(key).or_insert(0.0) += amount;
        self
    }

    pub fn deltas(&self) -> impl Iterator<Item = (&(Address, TokenId), &f64)> {
        self.deltas.iter()
    }

    /// Checks per-token conservation: |column sum| <= rtol * max|delta|.
    pub fn validate(&self) -> Result<()> {
        let mut sums: BTreeMap<&str, (f64, f64)> = BTreeMap::new();
        for ((_, token), &d) in &self.deltas {
            let entry = sums.entry(token).or_insert((0.0, 0.0));
            entry.0 += d;
            entry.1 = entry.1.max(d.abs());
        }
        for (token, (sum, max_abs)) in sums {
            if sum.abs() > CONSERVATION_RTOL * max_abs {
                return Err(Error::UnbalancedTranslation {
                    token: token.to_string(),
                    sum,
                });
            }
        }
        Ok(())
    }
}

/// Two-point transfer of one token between distinct addresses.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValueTransfer {
    pub sender: Address,
    pub receiver: Address,
    pub token: TokenId,
    pub amount: f64,
}

impl ValueTransfer {
    pub fn new(sender: &str, receiver: &str, token: &str, amount: f64) -> Result<Self> {
        if amount <= 0.0 {
            return Err(Error::InvalidParameter(format!(
                "transfer amount must be positive, got {amount}"
            )));
        }
        if sender == receiver {
            return Err(Error::InvalidParameter(
                "sender and receiver must differ".into(),
            ));
        }
        Ok(Self {
            sender: sender.to_string(),
            receiver: receiver.to_string(),
            token: token.to_string(),
            amount,
        })
    }

    pub fn as_translation(&self) -> BalancedTranslation {
        BalancedTranslation::new()
            .with_delta(&self.sender, &self.token, -self.amount)
            .with_delta(&self.receiver, &self.token, self.amount)
    }
}

/// Applies a balanced translation. Returns the translated state when every
/// resulting balance is non-negative, and the input state unchanged
/// otherwise. Total supply per token is preserved on both branches.
pub fn apply_translation(
    state: &TokenBalanceState,
    translation: &BalancedTranslation,
) -> Result<TokenBalanceState> {
    translation.validate()?;
    let mut next = state.clone();
    for ((address, token), &delta) in translation.deltas() {
        let entry = next
            .balances
            .entry((address.clone(), token.clone()))
            .or_insert(0.0);
        *entry += delta;
    }
    let feasible = next.balances.values().all(|&b| b >= 0.0);
    if feasible {
        Ok(next)
    } else {
        Ok(state.clone())
    }
}

/// Applies a value transfer: the two-point translation, which degenerates to
/// the identity when the sender balance is insufficient.
pub fn apply_value_transfer(
    state: &TokenBalanceState,
    transfer: &ValueTransfer,
) -> Result<TokenBalanceState> {
    apply_translation(state, &transfer.as_translation())
}
