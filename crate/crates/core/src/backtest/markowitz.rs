use crate::error::Result;
use crate::forecaster::HORIZON;
use crate::portfolio::{self, CommissionRates, PortfolioState, TradeDecision};
use crate::risk;

use super::MarkowitzParams;

/// Inputs of one mean-variance rebalancing decision.
#[derive(Debug, Clone)]
pub struct MarkowitzContext<'a> {
    pub state: PortfolioState,
    /// Trailing prices ending today.
    pub gold_history: &'a [f64],
    pub btc_history: &'a [f64],
    pub gold_forecast: [f64; HORIZON],
    pub btc_forecast: [f64; HORIZON],
    pub gold_open: bool,
    pub rates: CommissionRates,
    pub delta: f64,
    pub params: &'a MarkowitzParams,
}

fn daily_returns(prices: &[f64]) -> Vec<f64> {
    prices.windows(2).map(|w| w[1] / w[0] - 1.0).collect()
}

impl MarkowitzContext<'_> {
    /// Forecast return over the horizon minus commission minus the variance
    /// penalty, for target weights `(wg, wb)` reached by `d`.
    fn score(&self, d: TradeDecision, wg: f64, wb: f64, cov: &[Vec<f64>]) -> f64 {
        let today_g = self.gold_history[self.gold_history.len() - 1];
        let today_b = self.btc_history[self.btc_history.len() - 1];
        let rg = self.gold_forecast[HORIZON - 1] / today_g - 1.0;
        let rb = self.btc_forecast[HORIZON - 1] / today_b - 1.0;
        let fee = self.rates.fee(d.x, self.rates.alpha) + self.rates.fee(d.y, self.rates.beta);
        let var = wg * wg * cov[0][0] + 2.0 * wg * wb * cov[0][1] + wb * wb * cov[1][1];
        wg * rg + wb * rb - fee - self.params.lambda * HORIZON as f64 * var
    }
}

/// Sweeps target bitcoin weight down from its maximum and gold weight up
/// from zero on the configured grid, and returns the best repaired trade
/// with its score. Holding is the first candidate, so ties keep the current
/// allocation. `None` when fewer than two trailing returns are available.
pub fn markowitz_decision(ctx: &MarkowitzContext<'_>) -> Result<Option<(TradeDecision, f64)>> {
    if ctx.gold_history.len() < 3 || ctx.btc_history.len() != ctx.gold_history.len() {
        return Ok(None);
    }
    let (_, cov) = risk::sample_moments(&[daily_returns(ctx.gold_history), daily_returns(ctx.btc_history)])?;
    let s = &ctx.state;
    let k = (1.0 / ctx.params.grid_step).round() as usize;
    let evaluate = |d: TradeDecision| -> Option<(TradeDecision, f64)> {
        let d = portfolio::repair(s, d, &ctx.rates, ctx.gold_open, ctx.delta)?;
        Some((d, ctx.score(d, s.g + d.x, s.b + d.y, &cov)))
    };

    let mut best = evaluate(TradeDecision::HOLD);
    for jb in (0..=k).rev() {
        let wb = jb as f64 / k as f64;
        let gold_targets: Vec<f64> = if ctx.gold_open {
            (0..=k - jb).map(|jg| jg as f64 / k as f64).collect()
        } else {
            vec![s.g]
        };
        for wg in gold_targets {
            let x = if ctx.gold_open { wg - s.g } else { 0.0 };
            if let Some(cand) = evaluate(TradeDecision::new(x, wb - s.b)) {
                if best.is_none_or(|b| cand.1 > b.1) {
                    best = Some(cand);
                }
            }
        }
    }
    Ok(best)
}
