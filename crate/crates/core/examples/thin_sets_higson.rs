//! Thin sets on the integers and Higson variation of cylinder and oscillating functions.

use roe_kms::asymptotics::{build_thin_set, higson_variation};
use roe_kms::space::{make_interval, make_tree};
use roe_kms::tree::Cylinder;
use roe_kms::{TruncationSequence, Word};

fn main() -> roe_kms::Result<()> {
    let line = make_interval(200)?;
    let thin = build_thin_set(&line, 6);
    println!("thin set: {:?} {}", thin.set.points, thin.notice.unwrap_or_default());
    let (even, odd) = thin.set.even_odd();
    println!("even part {even:?}, odd part {odd:?}");

    let t = make_tree(2, 10)?;
    let cyl = Cylinder::new(Word::parse("12")?).points(2, 10);
    let chi: Vec<f64> = t.ids().map(|x| f64::from(u8::from(cyl.contains(&x)))).collect();
    let depths: Vec<usize> = (0..10).collect();
    println!("cylinder 12, R=2: {:?}", higson_variation(&t, TruncationSequence::Tree { n: 2 }, &chi, 2.0, &depths)?);

    let big = make_interval(2000)?;
    let sin: Vec<f64> = big.ids().map(|x| (x as f64).sin()).collect();
    let slow: Vec<f64> = big.ids().map(|x| (1.0 + x as f64).ln().sin()).collect();
    let d = [0, 10, 100, 1000, 1990];
    println!("sin x:      {:?}", higson_variation(&big, TruncationSequence::Interval, &sin, 1.0, &d)?);
    println!("sin log x:  {:?}", higson_variation(&big, TruncationSequence::Interval, &slow, 1.0, &d)?);
    Ok(())
}
