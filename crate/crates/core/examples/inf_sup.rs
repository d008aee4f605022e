//! Discrete inf-sup constants of the weakly coupled pairings for a sweep of
//! meshes and length scales, down to pure elasticity.
use cosserat_mfe::properties::infsup_study;

fn main() {
    let st = infsup_study();
    for (m, rows) in &st.beta {
        for (ell, row) in st.ells.iter().zip(rows) {
            let vals: Vec<String> = st.levels.iter().zip(row).map(|(n, b)| format!("n={n}: {b:.4}")).collect();
            println!("{m:7} ell={ell:<5} {}", vals.join("  "));
        }
    }
    println!("mismatched pairing: {:?}", st.control);
    println!("largest relative spread across ell at fixed n: {:.3}", st.ell_spread());
}
