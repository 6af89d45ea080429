//! Event-driven simulation for a compound Poisson process with drift.
//!
//! State between events: pre-tax maximum `S`, depth `D = S − X` below it,
//! accumulated tax `T = ∫γ(S)dS`, and the post-tax maximum `S^U` grown
//! separately by `(1 − γ) dS` on every ladder piece.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::Exp1;

use super::{discount_integral, PathRecord, Ruin, Simulator};

pub(super) fn run(sim: &Simulator<'_>, rng: &mut ChaCha8Rng, path_id: u64) -> PathRecord {
    let c = sim.model.drift();
    let lambda = sim.model.jump_rate();
    let rule = sim.rule;
    let cfg = sim.config;
    let q = cfg.tax_discount;
    let horizon = cfg.horizon;

    let mut rec = PathRecord::new(path_id);
    let mut t = 0.0;
    let mut s = rule.base();
    let mut depth = 0.0;
    let mut tax = 0.0;
    let mut sup_u = rule.base();
    let mut kappa = 0.0;

    loop {
        let e: f64 = rng.sample(Exp1);
        let mut remaining = e / lambda;

        if depth > 0.0 {
            let climb = depth / c;
            if remaining < climb {
                if t + remaining >= horizon {
                    rec.censored = true;
                    return rec;
                }
                t += remaining;
                depth -= c * remaining;
                remaining = 0.0;
            } else {
                if t + climb >= horizon {
                    rec.censored = true;
                    return rec;
                }
                t += climb;
                depth = 0.0;
                remaining -= climb;
            }
        }

        if depth == 0.0 {
            // Ladder phase: X = S rises at rate c until the next claim.
            while remaining > 0.0 {
                let g = rule.gamma(s).expect("levels stay above the base");
                let next = rule.next_breakpoint(s);
                let to_break = next.map_or(f64::INFINITY, |b| (b - s) / c);
                let dt = remaining.min(to_break).min(horizon - t);

                if let (Some(a), None) = (cfg.barrier, rec.tau_plus) {
                    let to_barrier = (a - sup_u) / ((1.0 - g) * c);
                    if to_barrier <= dt {
                        let x_at = s + c * to_barrier;
                        rec.tau_plus = Some(t + to_barrier);
                        rec.barrier_gap = sim.barrier_level.map(|lvl| (x_at - lvl).abs());
                        if cfg.stop_at_barrier {
                            rec.discounted_tax += g * c * discount_integral(q, t, to_barrier);
                            return rec;
                        }
                    }
                }

                rec.discounted_tax += g * c * discount_integral(q, t, dt);
                s = if dt == to_break { next.unwrap() } else { s + c * dt };
                tax += g * c * dt;
                sup_u += (1.0 - g) * c * dt;
                t += dt;
                remaining -= dt;

                let exact = rule.gamma_bar(s).expect("levels stay above the base");
                let gap = (sup_u - (s - tax)).abs().max((sup_u - exact).abs());
                rec.max_sup_gap = rec.max_sup_gap.max(gap);

                if t >= horizon {
                    rec.censored = true;
                    return rec;
                }
            }
            kappa = t;
        }

        let claim = sim.claim_size(rng);
        let before = sup_u - depth;
        if claim > before {
            rec.ruin = Some(Ruin {
                time: t,
                kappa,
                sup: sup_u,
                undershoot: before,
                deficit: claim - before,
                creep: false,
            });
            return rec;
        }
        depth += claim;
    }
}
