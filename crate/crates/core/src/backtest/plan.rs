//! The three-day trading plan the swarm searches over: six numbers
//! `[x_i, y_i, x_{i+1}, y_{i+1}, x_{i+2}, y_{i+2}]`, evaluated along the
//! forecast price path.

use crate::forecaster::HORIZON;
use crate::portfolio::{self, CommissionRates, DayReturns, PortfolioState, TradeDecision};
use crate::pso::Constraint;
use crate::risk::{self, Personality, RiskParams};

pub const PLAN_DIM: usize = 2 * HORIZON;

/// Everything the planner knows on the decision day.
#[derive(Debug, Clone)]
pub struct PlanContext {
    pub state: PortfolioState,
    /// Today's prices.
    pub gold_price: f64,
    pub btc_price: f64,
    pub gold_forecast: [f64; HORIZON],
    pub btc_forecast: [f64; HORIZON],
    pub gold_sigma: f64,
    pub btc_sigma: f64,
    /// Gold tradability on the three planned days.
    pub gold_open: [bool; HORIZON],
    pub rates: CommissionRates,
    pub risk: RiskParams,
}

/// States and values along a planned path.
#[derive(Debug, Clone)]
pub struct PlannedPath {
    pub values: [f64; HORIZON + 1],
    /// Average over the planned days of the held units' forecast spread, in USD.
    pub risk: f64,
}

impl PlanContext {
    fn price_path(&self) -> ([f64; HORIZON + 1], [f64; HORIZON + 1]) {
        let mut g = [self.gold_price; HORIZON + 1];
        let mut b = [self.btc_price; HORIZON + 1];
        g[1..].copy_from_slice(&self.gold_forecast);
        b[1..].copy_from_slice(&self.btc_forecast);
        (g, b)
    }

    fn decision(plan: &[f64], k: usize) -> TradeDecision {
        TradeDecision::new(plan[2 * k], plan[2 * k + 1])
    }

    /// Runs the plan along the forecast path. `None` if any planned day is
    /// infeasible.
    pub fn simulate(&self, plan: &[f64]) -> Option<PlannedPath> {
        let (gp, bp) = self.price_path();
        let mut state = self.state;
        let mut values = [0.0; HORIZON + 1];
        values[0] = state.value;
        let mut risk = 0.0;
        for k in 0..HORIZON {
            let d = Self::decision(plan, k);
            if !portfolio::feasible(&state, d, &self.rates, self.gold_open[k], self.risk.delta) {
                return None;
            }
            let gold_units = (d.x + state.g).max(0.0) * state.value / gp[k];
            let btc_units = (d.y + state.b).max(0.0) * state.value / bp[k];
            risk += gold_units * self.gold_sigma + btc_units * self.btc_sigma;
            let r = DayReturns::from_prices(gp[k], gp[k + 1], bp[k], bp[k + 1]);
            state = portfolio::state_step(&state, d, r, &self.rates).ok()?;
            values[k + 1] = state.value;
        }
        Some(PlannedPath {
            values,
            risk: risk / HORIZON as f64,
        })
    }

    /// Objective of a plan for the configured personality; `-inf` when the
    /// plan is infeasible.
    pub fn score(&self, plan: &[f64]) -> f64 {
        self.score_as(self.risk.personality, plan)
    }

    pub fn score_as(&self, personality: Personality, plan: &[f64]) -> f64 {
        let Some(path) = self.simulate(plan) else {
            return f64::NEG_INFINITY;
        };
        risk::objective(personality, &path.values, path.risk, &self.risk).unwrap_or(f64::NEG_INFINITY)
    }

    /// Projects each planned day onto its feasible set in turn.
    pub fn repair_plan(&self, plan: &mut [f64]) -> bool {
        let (gp, bp) = self.price_path();
        let mut state = self.state;
        for k in 0..HORIZON {
            let Some(d) = portfolio::repair(
                &state,
                Self::decision(plan, k),
                &self.rates,
                self.gold_open[k],
                self.risk.delta,
            ) else {
                return false;
            };
            plan[2 * k] = d.x;
            plan[2 * k + 1] = d.y;
            let r = DayReturns::from_prices(gp[k], gp[k + 1], bp[k], bp[k + 1]);
            match portfolio::state_step(&state, d, r, &self.rates) {
                Ok(s) => state = s,
                Err(_) => return false,
            }
        }
        true
    }
}

impl Constraint for PlanContext {
    fn is_feasible(&self, x: &[f64]) -> bool {
        self.simulate(x).is_some()
    }

    fn repair(&self, x: &mut [f64]) -> bool {
        self.repair_plan(x)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ctx(personality: Personality) -> PlanContext {
        PlanContext {
            state: PortfolioState::cash(1000.0),
            gold_price: 100.0,
            btc_price: 100.0,
            gold_forecast: [100.0; 3],
            btc_forecast: [110.0, 121.0, 133.1],
            gold_sigma: 0.0,
            btc_sigma: 9.0,
            gold_open: [true, false, false],
            rates: CommissionRates::default(),
            risk: RiskParams {
                personality,
                ..RiskParams::default()
            },
        }
    }

    #[test]
    fn hold_plan_in_flat_forecast_keeps_value() {
        let mut c = ctx(Personality::Crazy);
        c.btc_forecast = [100.0; 3];
        let p = c.simulate(&[0.0; 6]).unwrap();
        assert_eq!(p.values, [1000.0; 4]);
    }

    #[test]
    fn buying_into_a_rally_beats_holding() {
        let c = ctx(Personality::Crazy);
        let all_in = [0.0, 1.0 / 1.02, 0.0, 0.0, 0.0, 0.0];
        assert!(c.score(&all_in) > c.score(&[0.0; 6]));
        let v3 = c.simulate(&all_in).unwrap().values[3];
        assert!((v3 - 1000.0 / 1.02 * 1.331).abs() < 1e-9, "{v3}");
    }

    #[test]
    fn closed_gold_days_reject_gold_trades() {
        let c = ctx(Personality::Crazy);
        assert!(c.simulate(&[0.0, 0.0, 0.1, 0.0, 0.0, 0.0]).is_none());
        let mut plan = [0.0, 0.0, 0.1, 0.0, 0.0, 0.0];
        assert!(c.repair_plan(&mut plan));
        assert_eq!(plan[2], 0.0);
    }

    #[test]
    fn repair_makes_every_day_feasible() {
        let c = ctx(Personality::Middle);
        let mut plan = [0.9, 0.9, 0.0, 0.5, 0.0, -2.0];
        assert!(c.repair_plan(&mut plan));
        assert!(c.simulate(&plan).is_some());
    }

    #[test]
    fn middle_penalizes_exposure() {
        let mut c = ctx(Personality::Middle);
        c.btc_forecast = [100.0; 3];
        let hold = c.score(&[0.0; 6]);
        assert_eq!(hold, 0.0);
        // Exposure with no expected gain only adds fees and risk.
        assert!(c.score(&[0.0, 0.5, 0.0, 0.0, 0.0, 0.0]) < hold);
    }
}
