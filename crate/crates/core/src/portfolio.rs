//! Normalized portfolio state and its one-day transition.
//!
//! The state is the fraction of total value held as cash, gold and bitcoin
//! together with the total value itself. A decision `(x, y)` moves the fraction
//! `x` of total value into gold and `y` into bitcoin (negative values sell).
//! Everything here is expressed in fractions so the recursion stays well scaled
//! however large the portfolio grows.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Absolute slack allowed on every feasibility inequality.
pub const FEASIBILITY_SLACK: f64 = 1e-12;

/// How commissions apply to sales.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CommissionMode {
    /// Buys and sells both pay `rate * |amount|`.
    #[default]
    Symmetric,
    /// Cash changes by `-amount * (1 + rate)` for either sign, so a sale
    /// credits the commission instead of charging it.
    Literal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommissionRates {
    /// Gold commission fraction.
    pub alpha: f64,
    /// Bitcoin commission fraction.
    pub beta: f64,
    #[serde(default)]
    pub mode: CommissionMode,
}

impl Default for CommissionRates {
    fn default() -> Self {
        Self {
            alpha: 0.01,
            beta: 0.02,
            mode: CommissionMode::Symmetric,
        }
    }
}

impl CommissionRates {
    pub fn new(alpha: f64, beta: f64, mode: CommissionMode) -> Result<Self> {
        let rates = Self { alpha, beta, mode };
        rates.validate()?;
        Ok(rates)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("alpha", self.alpha), ("beta", self.beta)] {
            if !(0.0..1.0).contains(&r) {
                return Err(Error::InvalidArgument(format!(
                    "commission {name} must be in [0, 1), got {r}"
                )));
            }
        }
        Ok(())
    }

    /// Value lost to commission when trading `amount` (a fraction of total
    /// value) at `rate`. Negative under `Literal` sales.
    pub fn fee(&self, amount: f64, rate: f64) -> f64 {
        match self.mode {
            CommissionMode::Symmetric => rate * amount.abs(),
            CommissionMode::Literal => rate * amount,
        }
    }

    /// Cash fraction consumed by trading `amount` at `rate`.
    pub fn cash_needed(&self, amount: f64, rate: f64) -> f64 {
        amount + self.fee(amount, rate)
    }

    /// Total cash fraction consumed by a decision.
    pub fn cash_outflow(&self, d: TradeDecision) -> f64 {
        self.cash_needed(d.x, self.alpha) + self.cash_needed(d.y, self.beta)
    }
}

/// Units held: cash in USD, gold in troy ounces, bitcoin in coins.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Holdings {
    pub cash: f64,
    pub gold: f64,
    pub bitcoin: f64,
}

impl Holdings {
    pub fn value(&self, gold_price: f64, btc_price: f64) -> f64 {
        self.cash + self.gold * gold_price + self.bitcoin * btc_price
    }
}

/// Fractions of total value in cash, gold and bitcoin plus the total value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PortfolioState {
    pub c: f64,
    pub g: f64,
    pub b: f64,
    pub value: f64,
}

impl PortfolioState {
    /// All cash.
    pub fn cash(value: f64) -> Self {
        Self {
            c: 1.0,
            g: 0.0,
            b: 0.0,
            value,
        }
    }

    pub fn fraction_sum(&self) -> f64 {
        self.c + self.g + self.b
    }

    /// Rebuilds unit holdings at the given prices.
    pub fn holdings(&self, gold_price: f64, btc_price: f64) -> Holdings {
        Holdings {
            cash: self.c * self.value,
            gold: self.g * self.value / gold_price,
            bitcoin: self.b * self.value / btc_price,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct TradeDecision {
    /// Fraction of total value moved into gold.
    pub x: f64,
    /// Fraction of total value moved into bitcoin.
    pub y: f64,
}

impl TradeDecision {
    pub const HOLD: TradeDecision = TradeDecision { x: 0.0, y: 0.0 };

    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn is_hold(&self) -> bool {
        self.x == 0.0 && self.y == 0.0
    }
}

/// Simple one-day returns of gold and bitcoin.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DayReturns {
    pub gold: f64,
    pub btc: f64,
}

impl DayReturns {
    pub fn new(gold: f64, btc: f64) -> Self {
        Self { gold, btc }
    }

    /// Returns between two consecutive days' prices.
    pub fn from_prices(gold_today: f64, gold_next: f64, btc_today: f64, btc_next: f64) -> Self {
        Self {
            gold: gold_next / gold_today - 1.0,
            btc: btc_next / btc_today - 1.0,
        }
    }
}

/// Converts unit holdings to the normalized state.
pub fn normalize(holdings: Holdings, gold_price: f64, btc_price: f64) -> Result<PortfolioState> {
    if !(gold_price > 0.0 && btc_price > 0.0) {
        return Err(Error::InvalidArgument("prices must be positive".into()));
    }
    if holdings.cash < 0.0 || holdings.gold < 0.0 || holdings.bitcoin < 0.0 {
        return Err(Error::InvalidArgument("holdings must be non-negative".into()));
    }
    let value = holdings.value(gold_price, btc_price);
    if !(value > 0.0) {
        return Err(Error::InvalidArgument("portfolio has zero value".into()));
    }
    Ok(PortfolioState {
        c: holdings.cash / value,
        g: holdings.gold * gold_price / value,
        b: holdings.bitcoin * btc_price / value,
        value,
    })
}

/// Growth factor `V_{i+1} / V_i` for a decision under the given returns.
pub fn growth_factor(
    state: &PortfolioState,
    decision: TradeDecision,
    returns: DayReturns,
    rates: &CommissionRates,
) -> f64 {
    1.0 + returns.gold * (decision.x + state.g) + returns.btc * (decision.y + state.b)
        - rates.fee(decision.x, rates.alpha)
        - rates.fee(decision.y, rates.beta)
}

/// Total value after trading today and marking to tomorrow's prices.
pub fn value_step(
    state: &PortfolioState,
    decision: TradeDecision,
    returns: DayReturns,
    rates: &CommissionRates,
) -> Result<f64> {
    let next = state.value * growth_factor(state, decision, returns, rates);
    if !next.is_finite() {
        return Err(Error::Numerical(format!(
            "non-finite portfolio value after {decision:?}"
        )));
    }
    Ok(next)
}

/// Normalized state before the next day's trade.
pub fn state_step(
    state: &PortfolioState,
    decision: TradeDecision,
    returns: DayReturns,
    rates: &CommissionRates,
) -> Result<PortfolioState> {
    let value = value_step(state, decision, returns, rates)?;
    if !(value > 0.0) {
        return Err(Error::Infeasible(format!(
            "portfolio value {value} after {decision:?}"
        )));
    }
    let scale = state.value / value;
    let c = scale * (state.c - rates.cash_outflow(decision));
    let g = scale * (1.0 + returns.gold) * (decision.x + state.g);
    let b = scale * (1.0 + returns.btc) * (decision.y + state.b);
    if c < -FEASIBILITY_SLACK || g < -FEASIBILITY_SLACK || b < -FEASIBILITY_SLACK {
        return Err(Error::Infeasible(format!(
            "negative fraction in ({c}, {g}, {b}) after {decision:?}"
        )));
    }
    Ok(PortfolioState { c, g, b, value })
}

/// Whether a decision respects the cash floor, the no-short constraints and
/// the gold calendar.
pub fn feasible(
    state: &PortfolioState,
    decision: TradeDecision,
    rates: &CommissionRates,
    gold_tradable: bool,
    delta: f64,
) -> bool {
    if !(decision.x.is_finite() && decision.y.is_finite()) {
        return false;
    }
    let cash_left = state.c - rates.cash_outflow(decision);
    cash_left >= delta - FEASIBILITY_SLACK
        && decision.x + state.g >= -FEASIBILITY_SLACK
        && decision.y + state.b >= -FEASIBILITY_SLACK
        && (gold_tradable || decision.x == 0.0)
}

/// Projects a decision onto the feasible set.
///
/// Sales are first clipped to the holdings, then purchases are scaled down
/// uniformly until the cash floor holds. If sales alone still leave cash below
/// the floor, bitcoin and then gold are sold to cover the shortfall. Returns
/// `None` when no decision can satisfy the floor.
pub fn repair(
    state: &PortfolioState,
    decision: TradeDecision,
    rates: &CommissionRates,
    gold_tradable: bool,
    delta: f64,
) -> Option<TradeDecision> {
    let mut x = if gold_tradable && decision.x.is_finite() {
        decision.x.max(-state.g)
    } else {
        0.0
    };
    let mut y = if decision.y.is_finite() {
        decision.y.max(-state.b)
    } else {
        0.0
    };

    let spend = |x: f64, y: f64| rates.cash_needed(x, rates.alpha) + rates.cash_needed(y, rates.beta);
    if state.c - spend(x, y) >= delta {
        return Some(TradeDecision { x, y });
    }

    // Cash freed by sales alone; purchases must fit in what remains.
    let sale_cash = -(rates.cash_needed(x.min(0.0), rates.alpha)
        + rates.cash_needed(y.min(0.0), rates.beta));
    let buy_cost = rates.cash_needed(x.max(0.0), rates.alpha) + rates.cash_needed(y.max(0.0), rates.beta);
    let budget = state.c + sale_cash - delta;
    if budget >= 0.0 {
        let k = if buy_cost > 0.0 { (budget / buy_cost).clamp(0.0, 1.0) } else { 1.0 };
        if x > 0.0 {
            x *= k;
        }
        if y > 0.0 {
            y *= k;
        }
        // Rounding can leave the product a hair above the budget.
        for _ in 0..4 {
            if state.c - spend(x, y) >= delta - FEASIBILITY_SLACK {
                break;
            }
            x = if x > 0.0 { x * (1.0 - 1e-12) } else { x };
            y = if y > 0.0 { y * (1.0 - 1e-12) } else { y };
        }
        return Some(TradeDecision { x, y });
    }

    // Sales must be increased to lift cash to the floor.
    let mut x = x.min(0.0);
    let mut y = y.min(0.0);
    let mut shortfall = delta - (state.c - spend(x, y));
    let cash_per_unit = |rate: f64| -rates.cash_needed(-1.0, rate);
    let extra_btc = (shortfall / cash_per_unit(rates.beta)).min(y + state.b);
    y -= extra_btc;
    shortfall -= extra_btc * cash_per_unit(rates.beta);
    if shortfall > 0.0 && gold_tradable {
        let extra_gold = (shortfall / cash_per_unit(rates.alpha)).min(x + state.g);
        x -= extra_gold;
    }
    let d = TradeDecision { x, y };
    feasible(state, d, rates, gold_tradable, delta).then_some(d)
}

/// Independent holdings-space transition: applies the trade to unit holdings,
/// then marks to the next prices. Used to cross-check the normalized path.
pub fn holdings_step(
    holdings: Holdings,
    gold_units_bought: f64,
    btc_units_bought: f64,
    prices_today: (f64, f64),
    rates: &CommissionRates,
) -> Holdings {
    let (pg, pb) = prices_today;
    let gold_cost = pg * gold_units_bought;
    let btc_cost = pb * btc_units_bought;
    let delta_cash = match rates.mode {
        CommissionMode::Literal => -gold_cost * (1.0 + rates.alpha) - btc_cost * (1.0 + rates.beta),
        CommissionMode::Symmetric => {
            -gold_cost - rates.alpha * gold_cost.abs() - btc_cost - rates.beta * btc_cost.abs()
        }
    };
    Holdings {
        cash: holdings.cash + delta_cash,
        gold: holdings.gold + gold_units_bought,
        bitcoin: holdings.bitcoin + btc_units_bought,
    }
}
