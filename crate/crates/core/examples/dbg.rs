use phi_pbil::problems::{self, enumerate_global_optima};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn main() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let p = problems::instantiate("Pgrid16", None, &mut rng).unwrap();
    let optima = enumerate_global_optima(&p).unwrap();
    println!("Pgrid16: {} optima at fitness {}", optima.len(), p.evaluate(&optima[0]));
    for g in optima.iter().take(10) {
        println!("  {}", g.to_bit_string());
    }
}
