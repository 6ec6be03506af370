//! Brute-force constructions used as ground truth at small sizes.
//!
//! Nothing here calls the block-diagonal or closed-form routines; states are
//! assembled explicitly from bit/phase error distributions and diagonalized
//! densely.

use std::collections::HashMap;

use nalgebra::DMatrix;

use crate::bb84::BitPhaseDistribution;
use crate::entropy::{binary_entropy_unchecked, von_neumann_entropy_real};
use crate::error::{check_probability, check_range, Error, Result};
use crate::schur::WeightedQubitFamily;

/// Largest `m` for [`dense_mixture_entropy`].
pub const MAX_DENSE_QUBITS: usize = 12;
/// Largest `m` for [`enumerate_xy`].
pub const MAX_ENUMERATED_BITS: usize = 6;
/// Largest `m` for [`eve_mutual_info`].
pub const MAX_EVE_QUBITS: usize = 4;
/// Largest `m1 * m2` for [`iterated_enumeration_check`].
pub const MAX_ITERATED_QUBITS: usize = 13;

fn cap(m: usize, max: usize) -> Result<()> {
    if m > max {
        return Err(Error::DimensionCap {
            dimension: 1usize.checked_shl(m as u32).unwrap_or(usize::MAX),
            cap: 1 << max,
        });
    }
    Ok(())
}

fn parity(x: u64) -> u8 {
    (x.count_ones() & 1) as u8
}

/// Stabilizer and logical vectors of the `[m, 1]` repetition code as bit masks
/// (bit `j` is position `j + 1`).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CatCodeBasis {
    pub m: usize,
    /// `ξ₁ … ξ_{m-1}` give the syndrome, `ξ_m` the key bit.
    pub xi: Vec<u64>,
    /// Dual vectors with `ξᵢ·ηⱼ = δᵢⱼ`; `η_m` is the all-ones vector.
    pub eta: Vec<u64>,
}

impl CatCodeBasis {
    pub fn new(m: usize) -> Result<Self> {
        if m == 0 || m > 64 {
            return Err(Error::Domain(format!("cat code length {m} not in [1, 64]")));
        }
        let all = if m == 64 { u64::MAX } else { (1u64 << m) - 1 };
        let mut xi = Vec::with_capacity(m);
        let mut eta = Vec::with_capacity(m);
        for i in 1..m {
            xi.push(1 | (1u64 << i));
            eta.push(1u64 << i);
        }
        xi.push(1);
        eta.push(all);
        Ok(Self { m, xi, eta })
    }

    /// Whether `ξᵢ·ηⱼ = δᵢⱼ` over GF(2) for all pairs.
    pub fn is_dual(&self) -> bool {
        (0..self.m).all(|i| (0..self.m).all(|j| parity(self.xi[i] & self.eta[j]) == u8::from(i == j)))
    }

    /// Split `u = l_x η_m + Σ sᵢ ηᵢ` into the logical bit and the syndrome mask.
    pub fn decompose(&self, u: u64) -> (u8, u64) {
        let mut syndrome = 0u64;
        for i in 0..self.m - 1 {
            syndrome |= u64::from(parity(self.xi[i] & u)) << i;
        }
        (parity(self.xi[self.m - 1] & u), syndrome)
    }

    /// Inverse of [`decompose`](Self::decompose).
    pub fn compose(&self, lx: u8, syndrome: u64) -> u64 {
        let mut u = if lx & 1 == 1 { self.eta[self.m - 1] } else { 0 };
        for i in 0..self.m - 1 {
            if syndrome >> i & 1 == 1 {
                u ^= self.eta[i];
            }
        }
        u
    }
}

fn bernoulli_mass(bits: u64, n: usize, p: f64) -> f64 {
    let ones = bits.count_ones() as i32;
    p.powi(ones) * (1.0 - p).powi(n as i32 - ones)
}

/// Dense real tensor power.
fn tensor_power(a: &DMatrix<f64>, m: usize) -> DMatrix<f64> {
    let mut acc = DMatrix::from_element(1, 1, 1.0);
    for _ in 0..m {
        acc = acc.kronecker(a);
    }
    acc
}

/// `S(Σ wᵢ ρᵢ^⊗m)` in bits, built explicitly.
pub fn dense_mixture_entropy(family: &WeightedQubitFamily, m: usize) -> Result<f64> {
    cap(m, MAX_DENSE_QUBITS)?;
    let dim = 1usize << m;
    let mut total = DMatrix::zeros(dim, dim);
    for (w, rho) in family.terms() {
        total += tensor_power(&rho.to_real_matrix()?, m) * *w;
    }
    von_neumann_entropy_real(&total)
}

/// `I(X:Y)` for bit-flip rate `p̃` by summing over every error pattern.
pub fn enumerate_xy(m: usize, p_tilde: f64) -> Result<f64> {
    cap(m, MAX_ENUMERATED_BITS)?;
    check_probability("p_tilde", p_tilde)?;
    let code = CatCodeBasis::new(m)?;
    let mut joint: HashMap<u64, [f64; 2]> = HashMap::new();
    for u in 0..1u64 << m {
        let (lx, s) = code.decompose(u);
        joint.entry(s).or_insert([0.0; 2])[lx as usize] += bernoulli_mass(u, m, p_tilde);
    }
    let mut loss = 0.0;
    for [a, b] in joint.values() {
        let both = a + b;
        if both > 0.0 {
            loss += both * binary_entropy_unchecked(b / both);
        }
    }
    Ok(1.0 - loss)
}

/// Phase register state `Σ_f q_f Z^f |Ψ_u⟩⟨Ψ_u| Z^f` for one bit-error pattern `u`.
fn phase_register_state(dist: &BitPhaseDistribution, m: usize, u: u64, q: f64) -> DMatrix<f64> {
    let dim = 1usize << m;
    let amplitude: Vec<f64> = (0..dim as u64)
        .map(|v| {
            (0..m)
                .map(|i| {
                    let (ui, vi) = ((u >> i & 1) as u8, (v >> i & 1) as u8);
                    let marginal = dist.get(ui, 0) + dist.get(ui, 1);
                    if marginal > 0.0 {
                        (dist.get(ui, vi) / marginal).sqrt()
                    } else {
                        0.0
                    }
                })
                .product()
        })
        .collect();
    let mut rho = DMatrix::zeros(dim, dim);
    for f in 0..dim as u64 {
        let w = bernoulli_mass(f, m, q);
        if w == 0.0 {
            continue;
        }
        for v1 in 0..dim {
            for v2 in 0..dim {
                let sign = if parity(f & (v1 ^ v2) as u64) == 1 { -1.0 } else { 1.0 };
                rho[(v1, v2)] += w * sign * amplitude[v1] * amplitude[v2];
            }
        }
    }
    rho
}

/// `I(X:E)` from the classical-quantum state of the key bit, Eve's bit-error
/// register `E₁`, and her phase register `E₂`, after noise `q` and the cat code.
///
/// `σ_XĒ = ½ Σ_x [x] ⊗ Σ_u p_u [u] ⊗ (Z^{η_m})^x ρ_u (Z^{η_m})^x` is
/// diagonalized one `u` block at a time.
pub fn eve_mutual_info(m: usize, dist: &BitPhaseDistribution, q: f64) -> Result<f64> {
    cap(m, MAX_EVE_QUBITS)?;
    if m == 0 {
        return Err(Error::Domain("blocklength must be positive".into()));
    }
    check_probability("q", q)?;
    let code = CatCodeBasis::new(m)?;
    let dim = 1usize << m;
    let logical_z = code.eta[m - 1];
    let flip = DMatrix::from_fn(dim, dim, |i, k| {
        if i != k {
            0.0
        } else if parity(i as u64 & logical_z) == 1 {
            -1.0
        } else {
            1.0
        }
    });
    let mut trace = 0.0;
    let mut s_e = 0.0;
    let mut s_e_given_x = [0.0; 2];
    for u in 0..dim as u64 {
        let p_u: f64 = (0..m)
            .map(|i| {
                let ui = (u >> i & 1) as u8;
                dist.get(ui, 0) + dist.get(ui, 1)
            })
            .product();
        if p_u == 0.0 {
            continue;
        }
        let rho0 = phase_register_state(dist, m, u, q) * p_u;
        let rho1 = &flip * &rho0 * &flip;
        trace += rho0.trace();
        let avg = (&rho0 + &rho1) * 0.5;
        s_e += von_neumann_entropy_real(&avg)?;
        s_e_given_x[0] += von_neumann_entropy_real(&rho0)?;
        s_e_given_x[1] += von_neumann_entropy_real(&rho1)?;
    }
    if (trace - 1.0).abs() > 1e-10 {
        return Err(Error::Numerical(format!("assembled state has trace {trace}")));
    }
    // classical E₁ entropies cancel between the two terms
    Ok(s_e - 0.5 * (s_e_given_x[0] + s_e_given_x[1]))
}

/// `max_t [I(X:E)(t) - I(X:E)(p²)]` over the given `t` values for the BB84 family.
pub fn independent_error_check(m: usize, p: f64, q: f64, t_grid: &[f64]) -> Result<f64> {
    let reference = eve_mutual_info(m, &BitPhaseDistribution::independent(p)?, q)?;
    let mut worst = 0.0f64;
    for &t in t_grid {
        check_range("t", t, 0.0, p)?;
        let value = eve_mutual_info(m, &BitPhaseDistribution::bb84(p, t)?, q)?;
        worst = worst.max(value - reference);
    }
    Ok(worst)
}

/// Mutual informations of the twofold iterated scheme from raw enumeration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IteratedOracle {
    pub i_xy: f64,
    pub i_xe: f64,
}

/// Exhaustive `I(X:Y)` over bit errors `u`, first-round flips `f`, and
/// second-round flips `F`; dense `I(X:E)` on all `m1·m2` phase qubits.
pub fn iterated_enumeration_check(m1: usize, m2: usize, p: f64, q: f64, big_q: f64) -> Result<IteratedOracle> {
    if m1 == 0 || m2 == 0 {
        return Err(Error::Domain("blocklengths must be positive".into()));
    }
    let n = m1 * m2;
    cap(n, MAX_ITERATED_QUBITS)?;
    check_probability("p", p)?;
    check_probability("q", q)?;
    check_probability("Q", big_q)?;
    let inner = CatCodeBasis::new(m1)?;
    let outer = CatCodeBasis::new(m2)?;
    let block_mask = (1u64 << m1) - 1;

    // Bob's side: (all inner syndromes, outer syndrome) -> [P(L=0), P(L=1)]
    let mut joint: HashMap<(u64, u64), [f64; 2]> = HashMap::new();
    for u in 0..1u64 << n {
        let pu = bernoulli_mass(u, n, p);
        for f in 0..1u64 << n {
            let pf = bernoulli_mass(f, n, q);
            let e = u ^ f;
            let mut syndromes = 0u64;
            let mut logical = 0u64;
            for i in 0..m2 {
                let (b, s) = inner.decompose(e >> (i * m1) & block_mask);
                syndromes |= s << (i * (m1 - 1));
                logical |= u64::from(b) << i;
            }
            for big_f in 0..1u64 << m2 {
                let w = pu * pf * bernoulli_mass(big_f, m2, big_q);
                let (l, s_outer) = outer.decompose(logical ^ big_f);
                joint.entry((syndromes, s_outer)).or_insert([0.0; 2])[l as usize] += w;
            }
        }
    }
    let mut loss = 0.0;
    for [a, b] in joint.values() {
        let both = a + b;
        if both > 0.0 {
            loss += both * binary_entropy_unchecked(b / both);
        }
    }

    // Eve's side: independent errors, so |Ψ⟩ = |φ₊⟩^⊗n and E₁ decouples.
    // The phase register is Σ_g w(g) Z^g [φ₊^⊗n] Z^g with g = f ⊕ (F spread over blocks).
    let dim = 1usize << n;
    let mut w = vec![0.0; dim];
    for f in 0..dim as u64 {
        let pf = bernoulli_mass(f, n, q);
        for big_f in 0..1u64 << m2 {
            let mut spread = 0u64;
            for i in 0..m2 {
                if big_f >> i & 1 == 1 {
                    spread |= inner.eta[m1 - 1] << (i * m1);
                }
            }
            w[(f ^ spread) as usize] += pf * bernoulli_mass(big_f, m2, big_q);
        }
    }
    // character sums W(d) = Σ_g w(g) (-1)^{g·d}
    let walsh: Vec<f64> = (0..dim as u64)
        .map(|d| {
            w.iter()
                .enumerate()
                .map(|(g, &x)| if parity(g as u64 & d) == 1 { -x } else { x })
                .sum()
        })
        .collect();
    let amplitude: Vec<f64> = (0..dim as u64)
        .map(|v| {
            let ones = v.count_ones() as i32;
            p.sqrt().powi(ones) * (1.0 - p).sqrt().powi(n as i32 - ones)
        })
        .collect();
    let rho0 = DMatrix::from_fn(dim, dim, |v1, v2| amplitude[v1] * amplitude[v2] * walsh[v1 ^ v2]);
    // Z^⊗n conjugation flips the sign of odd-distance entries
    let rho1 = DMatrix::from_fn(dim, dim, |v1, v2| {
        if parity((v1 ^ v2) as u64) == 1 {
            -rho0[(v1, v2)]
        } else {
            rho0[(v1, v2)]
        }
    });
    let avg = (&rho0 + &rho1) * 0.5;
    let i_xe = von_neumann_entropy_real(&avg)? - von_neumann_entropy_real(&rho0)?;
    Ok(IteratedOracle { i_xy: 1.0 - loss, i_xe })
}
