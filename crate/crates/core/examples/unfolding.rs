//! Unfolding identity and weak two-scale pairings on commensurate ε.

use std::f64::consts::PI;

use orlicz_homog::harness::checks::unfolding_integrands;
use orlicz_homog::unfold::{check_unfolding_identity, weak_two_scale_pairing};
use orlicz_homog::{Result, Vector};

fn main() -> Result<()> {
    for (label, g) in unfolding_integrands() {
        for eps in [1.0 / 3.0, 0.2] {
            let r = check_unfolding_identity(g, 1, eps, 3)?;
            println!("{label:<28} eps={eps:.4} lhs={:.10} rhs={:.10} gap={:.1e}", r.lhs, r.rhs, r.gap);
        }
    }
    // v(x) = sin²(2πx/ε + x) converges weakly two-scale to sin²(2πy)
    for k in [2, 4, 8, 16] {
        let eps = 1.0 / k as f64;
        let v = move |x: &Vector| (2.0 * PI * x[0] / eps + x[0]).sin().powi(2);
        let p = weak_two_scale_pairing(v, |_| 1.0, |y| (2.0 * PI * y[0]).sin().powi(2), 1, eps, 3)?;
        println!("eps=1/{k:<3} pairing={p:.8} limit=0.375");
    }
    Ok(())
}
