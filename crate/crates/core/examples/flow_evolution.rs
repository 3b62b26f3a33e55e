//! The potential flow on matrix units, its analytic continuation, and the coarseness modulus.

use num_complex::Complex64;
use roe_kms::flow::coarseness_modulus;
use roe_kms::space::make_squares;
use roe_kms::{analytic_evolve, evolve, BandOperator, PotentialRule};

fn main() -> roe_kms::Result<()> {
    let s = make_squares(30)?.into_shared();
    let h = PotentialRule::LogSqrtLabel.on(&s)?;
    let e = BandOperator::matrix_unit(s.clone(), 3, 1)?;
    for t in [0.0, 0.5, 1.0, std::f64::consts::PI] {
        println!("σ_{t:.3}(e_(4,2)) = {:.6}", evolve(&e, &h, t)?.get(3, 1));
    }
    for beta in [0.5, 1.0, 2.0] {
        // e^{-β(h(x)-h(y))} with h = log k: (k_y/k_x)^β
        let got = analytic_evolve(&e, &h, beta)?.get(3, 1);
        println!("σ_(iβ) at β={beta}: {:.6} (expected {:.6})", got, Complex64::new((2.0f64 / 4.0).powf(beta), 0.0));
    }
    let w = coarseness_modulus(&s, &h, &[1.0, 10.0, 100.0])?;
    println!("coarseness modulus ω(r): {:?}", w.pairs);
    Ok(())
}
