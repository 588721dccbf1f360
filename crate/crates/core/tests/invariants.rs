mod common;

use ctp_core::market_data::HermiteSpline;
use ctp_core::portfolio::{
    self, CommissionMode, CommissionRates, DayReturns, Holdings, PortfolioState, TradeDecision,
};
use ctp_core::pso::{self, Bounds, BoxOnly, PsoConfig};
use ctp_core::risk::{self, markowitz_sweep, sharpe_ratio, Personality, RiskParams};
use proptest::prelude::*;

fn state() -> impl Strategy<Value = PortfolioState> {
    (0.0f64..1.0, 0.0f64..1.0, 0.0f64..1.0, 1.0f64..1e6).prop_map(|(a, b, c, v)| {
        let (a, b, c) = (a + 1e-3, b * b, c * c);
        let s = a + b + c;
        PortfolioState {
            c: a / s,
            g: b / s,
            b: c / s,
            value: v,
        }
    })
}

fn rates() -> impl Strategy<Value = CommissionRates> {
    (0.0f64..0.05, 0.0f64..0.05).prop_map(|(alpha, beta)| CommissionRates {
        alpha,
        beta,
        mode: CommissionMode::Symmetric,
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn repair_always_yields_a_feasible_trade(
        s in state(), r in rates(), x in -2.0f64..2.0, y in -2.0f64..2.0,
        open in any::<bool>(), delta in 0.0f64..0.3,
    ) {
        match portfolio::repair(&s, TradeDecision::new(x, y), &r, open, delta) {
            Some(d) => prop_assert!(portfolio::feasible(&s, d, &r, open, delta)),
            // Only a floor that even selling everything cannot reach defeats it.
            None => {
                let sell_all = TradeDecision::new(if open { -s.g } else { 0.0 }, -s.b);
                prop_assert!(!portfolio::feasible(&s, sell_all, &r, open, delta));
            }
        }
    }

    #[test]
    fn feasible_trades_are_left_alone(
        s in state(), r in rates(), x in -1.0f64..1.0, y in -1.0f64..1.0,
    ) {
        let d = TradeDecision::new(x, y);
        if x >= -s.g && y >= -s.b && s.c - r.cash_outflow(d) >= 0.0 {
            prop_assert_eq!(portfolio::repair(&s, d, &r, true, 0.0), Some(d));
        }
    }

    #[test]
    fn transitions_stay_normalized(
        s in state(), r in rates(), x in -1.0f64..1.0, y in -1.0f64..1.0,
        rg in -0.2f64..0.2, rb in -0.5f64..0.5,
    ) {
        let d = portfolio::repair(&s, TradeDecision::new(x, y), &r, true, 0.0).unwrap();
        let next = portfolio::state_step(&s, d, DayReturns::new(rg, rb), &r).unwrap();
        prop_assert!((next.c + next.g + next.b - 1.0).abs() < 1e-9);
        prop_assert!(next.c.min(next.g).min(next.b) >= -1e-12);
        let v = portfolio::value_step(&s, d, DayReturns::new(rg, rb), &r).unwrap();
        prop_assert_eq!(v, next.value);
    }

    #[test]
    fn trading_in_a_flat_market_never_adds_value(
        s in state(), r in rates(), x in -1.0f64..1.0, y in -1.0f64..1.0,
    ) {
        let d = portfolio::repair(&s, TradeDecision::new(x, y), &r, true, 0.0).unwrap();
        let v = portfolio::value_step(&s, d, DayReturns::default(), &r).unwrap();
        prop_assert!(v <= s.value * (1.0 + 1e-15));
        let hold = portfolio::value_step(&s, TradeDecision::HOLD, DayReturns::default(), &r).unwrap();
        prop_assert_eq!(hold, s.value);
    }

    #[test]
    fn normalized_and_holdings_paths_agree(
        s in state(), r in rates(), x in -1.0f64..1.0, y in -1.0f64..1.0,
        pg in 100.0f64..3000.0, pb in 100.0f64..60000.0,
        rg in -0.1f64..0.1, rb in -0.3f64..0.3,
    ) {
        // A tiny floor keeps the oracle's cash strictly positive.
        let d = portfolio::repair(&s, TradeDecision::new(x, y), &r, true, 1e-9).unwrap();
        let h = s.holdings(pg, pb);
        let next_h = portfolio::holdings_step(h, d.x * s.value / pg, d.y * s.value / pb, (pg, pb), &r);
        let (pg1, pb1) = (pg * (1.0 + rg), pb * (1.0 + rb));
        let oracle = portfolio::normalize(next_h, pg1, pb1).unwrap();
        let next = portfolio::state_step(&s, d, DayReturns::new(rg, rb), &r).unwrap();
        prop_assert!((next.value / oracle.value - 1.0).abs() < 1e-9);
        for (a, b) in [(next.c, oracle.c), (next.g, oracle.g), (next.b, oracle.b)] {
            prop_assert!((a - b).abs() < 1e-9);
        }
    }

    #[test]
    fn normalization_sums_to_one(cash in 0.0f64..1e5, gold in 0.0f64..50.0, btc in 0.0f64..5.0,
                                 pg in 1.0f64..3000.0, pb in 1.0f64..60000.0) {
        prop_assume!(cash + gold + btc > 1e-3);
        let s = portfolio::normalize(Holdings { cash, gold, bitcoin: btc }, pg, pb).unwrap();
        prop_assert!((s.fraction_sum() - 1.0).abs() < 1e-12);
        let back = s.holdings(pg, pb);
        prop_assert!((back.cash - cash).abs() <= 1e-9 * s.value);
    }

    #[test]
    fn sharpe_is_translation_and_scale_invariant(
        xs in prop::collection::vec(-0.1f64..0.1, 3..20), k in -0.05f64..0.05, m in 0.1f64..10.0,
    ) {
        let sd = ctp_core::forecaster::population_std(&xs);
        prop_assume!(sd > 1e-6);
        let base = sharpe_ratio(&xs, 0.001).unwrap();
        let shifted: Vec<f64> = xs.iter().map(|v| v + k).collect();
        prop_assert!((sharpe_ratio(&shifted, 0.001 + k).unwrap() - base).abs() < 1e-6 * base.abs().max(1.0));
        let scaled: Vec<f64> = xs.iter().map(|v| m * (v - 0.001)).collect();
        prop_assert!((sharpe_ratio(&scaled, 0.0).unwrap() - base).abs() < 1e-6 * base.abs().max(1.0));
    }

    #[test]
    fn frontier_is_pareto_consistent(
        a in prop::collection::vec(-0.05f64..0.05, 10),
        b in prop::collection::vec(-0.05f64..0.05, 10),
        c in prop::collection::vec(-0.05f64..0.05, 10),
    ) {
        let f = markowitz_sweep(&[a, b, c], 0.1).unwrap();
        prop_assert!(!f.is_empty());
        for w in f.windows(2) {
            prop_assert!(w[1].variance >= w[0].variance && w[1].mean > w[0].mean);
        }
        for p in &f {
            prop_assert!((p.weights.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn objectives_move_the_right_way(v0 in 500.0f64..2000.0, v1 in 500.0f64..2000.0,
                                     v2 in 500.0f64..2000.0, v3 in 500.0f64..2000.0,
                                     up in 0.1f64..100.0, sigma in 0.0f64..50.0) {
        let p = RiskParams::default();
        let t = [v0, v1, v2, v3];
        let t_up = [v0, v1, v2, v3 + up];
        prop_assert!(risk::objective(Personality::Crazy, &t_up, sigma, &p).unwrap()
            > risk::objective(Personality::Crazy, &t, sigma, &p).unwrap());
        prop_assert!(risk::objective(Personality::Middle, &t, sigma + up, &p).unwrap()
            < risk::objective(Personality::Middle, &t, sigma, &p).unwrap());
    }

    #[test]
    fn hermite_hits_knots_and_stays_inside_monotone_stretches(
        steps in prop::collection::vec((1u32..4, -5.0f64..5.0), 4..30),
    ) {
        let mut xs = vec![0.0];
        let mut ys = vec![100.0];
        for (dx, dy) in &steps {
            xs.push(xs.last().unwrap() + *dx as f64);
            ys.push(ys.last().unwrap() + dy);
        }
        let s = HermiteSpline::new(&xs, &ys).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            prop_assert_eq!(s.eval(*x), *y);
        }
        let sec = |k: usize| ys[k + 1] - ys[k];
        for k in 1..xs.len() - 2 {
            if sec(k - 1) * sec(k) > 0.0 && sec(k) * sec(k + 1) > 0.0 {
                let (lo, hi) = (ys[k].min(ys[k + 1]), ys[k].max(ys[k + 1]));
                for j in 1..20 {
                    let x = xs[k] + (xs[k + 1] - xs[k]) * j as f64 / 20.0;
                    let v = s.eval(x);
                    prop_assert!(v >= lo - 1e-9 && v <= hi + 1e-9, "k={} x={} v={}", k, x, v);
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pso_is_deterministic_and_monotone(seed in any::<u64>()) {
        let b = Bounds::uniform(4, -3.0, 3.0).unwrap();
        let f = |x: &[f64]| -(x[0] - 1.0).powi(2) - x[1].abs() - (x[2] * x[3]).powi(2);
        let c = PsoConfig { seed, n_particles: 20, max_iters: 40, ..Default::default() };
        let a = pso::optimize(&f, &BoxOnly, &b, &c, &[]).unwrap();
        let a2 = pso::optimize(&f, &BoxOnly, &b, &c, &[]).unwrap();
        prop_assert_eq!(&a.trace, &a2.trace);
        prop_assert!(a.trace.windows(2).all(|w| w[1] >= w[0]));
        prop_assert_eq!(f(&a.best_position), a.best_score);
    }
}
