//! Euler scheme for models with a Gaussian part.
//!
//! Steps are cut at claim arrivals, so jumps are placed exactly. Within a
//! step the Brownian bridge between the endpoints gives the new running
//! maximum (sampled exactly from its conditional law) and the probability of
//! having crossed the tax-adjusted ruin level. Ruin inside a diffusion step
//! is ruin by creeping. Passage times, `κ` and the discount applied to tax
//! are all resolved to the step grid, which leaves an `O(h)` bias.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Exp1, StandardNormal};

use super::{PathRecord, Ruin, Simulator};

pub(super) fn run(sim: &Simulator<'_>, rng: &mut ChaCha8Rng, path_id: u64) -> PathRecord {
    let c = sim.model.drift();
    let sigma = sim.model.sigma();
    let var = sigma * sigma;
    let lambda = sim.model.jump_measure().total_mass();
    let rule = sim.rule;
    let cfg = sim.config;
    let q = cfg.tax_discount;

    let mut rec = PathRecord::new(path_id);
    let mut t = 0.0;
    let mut x = rule.base();
    let mut s = x;
    let mut tax = 0.0;
    let mut kappa = 0.0;
    let mut next_claim = if lambda > 0.0 {
        rng.sample::<f64, _>(Exp1) / lambda
    } else {
        f64::INFINITY
    };

    loop {
        if t >= cfg.horizon {
            rec.censored = true;
            return rec;
        }
        let end = (t + cfg.step).min(next_claim).min(cfg.horizon);
        let dt = end - t;
        let n: f64 = rng.sample(StandardNormal);
        let x1 = x + c * dt + sigma * dt.sqrt() * n;

        // Maximum of the bridge from x to x1 over dt.
        let v: f64 = 1.0 - rng.random::<f64>();
        let spread = (x1 - x) * (x1 - x) - 2.0 * var * dt * v.ln();
        let top = 0.5 * (x + x1 + spread.sqrt());
        if top > s {
            let new_tax = rule.tax_paid(top).expect("levels stay above the base");
            rec.discounted_tax += (new_tax - tax) * (-q * (t + 0.5 * dt)).exp();
            tax = new_tax;
            s = top;
            kappa = end;
            if let (Some(a), None) = (cfg.barrier, rec.tau_plus) {
                if s - tax >= a {
                    rec.tau_plus = Some(end);
                    if cfg.stop_at_barrier {
                        return rec;
                    }
                }
            }
            let gap = (rule.gamma_bar(s).expect("levels stay above the base") - (s - tax)).abs();
            rec.max_sup_gap = rec.max_sup_gap.max(gap);
        }

        // Ruin while diffusing: the bridge dips below the tax level.
        let floor = tax;
        let u: f64 = rng.random();
        let crossed = x1 <= floor || u < (-2.0 * (x - floor) * (x1 - floor) / (var * dt)).exp();
        if crossed {
            rec.ruin = Some(Ruin {
                time: end,
                kappa,
                sup: s - tax,
                undershoot: 0.0,
                deficit: 0.0,
                creep: true,
            });
            return rec;
        }
        x = x1;
        t = end;

        if end == next_claim {
            let claim = sim.claim_size(rng);
            let before = x - tax;
            if claim > before {
                rec.ruin = Some(Ruin {
                    time: t,
                    kappa,
                    sup: s - tax,
                    undershoot: before,
                    deficit: claim - before,
                    creep: false,
                });
                return rec;
            }
            x -= claim;
            next_claim += rng.sample::<f64, _>(Exp1) / lambda;
        }
    }
}
