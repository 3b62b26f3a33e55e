//! Ball growth of the three model spaces, and the closed-ball convention.

use roe_kms::space::{growth_profile, make_interval, make_squares, make_tree};

fn main() -> roe_kms::Result<()> {
    let radii = [0.0, 1.0, 2.0, 4.0, 8.0];
    let spaces = [
        ("interval:64", make_interval(64)?),
        ("squares:64", make_squares(64)?),
        ("tree:2:6", make_tree(2, 6)?),
        ("tree:3:4", make_tree(3, 4)?),
    ];
    for (name, s) in &spaces {
        let profile = growth_profile(s, &radii)?;
        let row: Vec<String> = profile.iter().map(|(r, n)| format!("r={r}: {n}")).collect();
        println!("{name:<12} |X|={:<5} max ball  {}", s.len(), row.join(", "));
    }

    // balls are closed: on the squares 1 and 4 are at distance 3
    let sq = make_squares(10)?;
    println!("squares: d(1, 4) = {}, |B(1, 3)| = {}", sq.dist(0, 1), sq.ball(0, 3.0).len());
    Ok(())
}
