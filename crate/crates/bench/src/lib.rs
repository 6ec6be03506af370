//! Shared inputs for the benchmarks under `benches/`.

use catrate::schur::WeightedQubitFamily;
use catrate::QubitDensity;

/// The BB84 pair `½ρ_pq, ½Zρ_pqZ` at a typical operating point.
pub fn bb84_family(p: f64, q: f64) -> WeightedQubitFamily {
    let rho = QubitDensity::rho_pq(p, q).expect("valid parameters");
    WeightedQubitFamily::new(vec![(0.5, rho), (0.5, rho.z_conjugate())]).expect("valid family")
}
