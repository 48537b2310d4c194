//! Markov chain samplers for the complex gas `∝ exp(-β_n H)` and for the real
//! mixture gas `Σ_k (1/Z_{n,k}) exp(-(β_n/2) H)`, plus two-sample validation
//! against direct root sampling.
//!
//! Moves are explicit descriptors ([`Move`]) so that a proposal and its exact
//! reverse can both be evaluated, which is what the detailed-balance tests
//! do. Particle proposals are Gaussian with scale `σ √(1+|z|²)`, so the step
//! grows with the particle's distance from the origin. The resulting
//! asymmetry enters the Hastings ratio through `log_q_fwd` and `log_q_rev`.
//!
//! The dimension move of the real chain is the deterministic bijection
//! `x_a < x_b ↔ m + i d` with `m = (x_a + x_b)/2`, `d = (x_b - x_a)/2`, whose
//! Jacobian is `½` (split) or `2` (merge). On unordered states the component
//! with `k` pairs has density `(n-2k)! k! / Z_{n,k} · exp(-(β_n/2) H)`.
//!
//! Multi-chain runs use chain `c` on stream `c` of the shared seed.

use alloc::vec::Vec;
use core::f64::consts::PI;
use num_complex::Complex64;
#[allow(unused_imports)]
use num_traits::Float;

use crate::ensembles::{find_roots, sample_with, Basis, EnsembleError, ModelSpec};
use crate::exactlaws::{mixture_constants, snap_mixture_layout, ExactLawError};
use crate::functionals::{hamiltonian, log_confinement};
use crate::rng::{normal, open01, stream_rng, Rng, StreamRng};
use crate::special::{ln_binomial, ln_factorial, log_sum_exp, NeumaierSum};
use crate::stats::{integrated_autocorrelation, ks_test, KsResult};

/// Acceptance rate targeted by the scale adaptation.
pub const TARGET_ACCEPTANCE: f64 = 0.3;
/// Steps between checks of the cached Hamiltonian against a fresh evaluation.
pub const CACHE_CHECK_EVERY: u64 = 1000;
/// Probability of attempting a dimension move in the real chain.
pub const P_DIMENSION: f64 = 0.3;
const INITIAL_SCALE: f64 = 0.5;

#[derive(Clone, Debug, PartialEq, thiserror::Error)]
pub enum GibbsError {
    #[error("invalid chain configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("invalid initial state: {0}")]
    InitialState(#[from] ExactLawError),
    #[error("empty sample")]
    EmptySample,
    #[error(transparent)]
    Ensemble(#[from] EnsembleError),
}

/// Move families; the scale adapts separately for each in-plane family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum MoveKind {
    /// Complex chain: one particle in `C`.
    Particle,
    /// Real chain: one real particle along `R`.
    RealParticle,
    /// Real chain: one conjugate pair, mirror updated with it.
    Pair,
    /// Real chain: two real particles become one pair.
    Split,
    /// Real chain: one pair becomes two real particles.
    Merge,
}

impl MoveKind {
    pub const ALL: [MoveKind; 5] = [Self::Particle, Self::RealParticle, Self::Pair, Self::Split, Self::Merge];

    fn slot(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::Particle => "particle",
            Self::RealParticle => "real",
            Self::Pair => "pair",
            Self::Split => "split",
            Self::Merge => "merge",
        }
    }
}

/// A fully specified move from the current state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Move {
    Particle { i: usize, to: Complex64 },
    RealParticle { i: usize, to: f64 },
    /// `p` indexes pairs; `to` is the new upper-half-plane representative.
    Pair { p: usize, to: Complex64 },
    /// `a`, `b` index real particles.
    Split { a: usize, b: usize },
    Merge { p: usize },
}

impl Move {
    pub fn kind(&self) -> MoveKind {
        match self {
            Move::Particle { .. } => MoveKind::Particle,
            Move::RealParticle { .. } => MoveKind::RealParticle,
            Move::Pair { .. } => MoveKind::Pair,
            Move::Split { .. } => MoveKind::Split,
            Move::Merge { .. } => MoveKind::Merge,
        }
    }
}

/// One chain state. Real case: `particles` holds the `n-2k` real particles
/// (imaginary part exactly zero) followed by `k` exact pairs `(z, z̄)` with
/// `Im z > 0`.
#[derive(Clone, Debug, PartialEq)]
pub struct GasState {
    pub particles: Vec<Complex64>,
    pub k: Option<usize>,
    pub hamiltonian: f64,
    pub step: u64,
    /// Position of the generator in its stream, in 32-bit words.
    pub rng_word_pos: u128,
}

impl GasState {
    /// The pair representatives in the upper half-plane.
    pub fn pair_representatives(&self) -> Vec<Complex64> {
        match self.k {
            Some(k) => {
                let r = self.particles.len() - 2 * k;
                self.particles[r..].iter().step_by(2).copied().collect()
            }
            None => Vec::new(),
        }
    }
}

#[derive(Clone, Debug)]
enum Confinement {
    /// Monic coefficients `b` of `Π(X - z_i)` and weights `w_k`.
    Coefficients { b: Vec<Complex64>, w: Vec<f64> },
    /// `s_j = Σ_i log|p_j - z_i|` over the support points, with `log ν_j - nφ_j`.
    Support { points: Vec<Complex64>, log_w: Vec<f64>, s: Vec<f64> },
}

impl Confinement {
    fn new(spec: &ModelSpec, z: &[Complex64]) -> Self {
        let n = spec.n;
        match &spec.basis {
            Basis::Orthogonal(d) => {
                let mut points = Vec::new();
                let mut log_w = Vec::new();
                for ((&p, &w), &f) in d.support.iter().zip(&d.nu).zip(&d.phi) {
                    if w > 0.0 {
                        points.push(p);
                        log_w.push(w.ln() - n as f64 * f);
                    }
                }
                let s = points.iter().map(|&p| z.iter().map(|&zi| (p - zi).norm().ln()).sum()).collect();
                Confinement::Support { points, log_w, s }
            }
            basis => {
                let w = (0..=n)
                    .map(|k| match basis {
                        Basis::Elliptic => (-((n + 1) as f64).ln() - ln_binomial(n, k)).exp(),
                        _ => 1.0,
                    })
                    .collect();
                Confinement::Coefficients { b: crate::ensembles::monic_from_roots(z), w }
            }
        }
    }

    fn log_value(&self) -> f64 {
        match self {
            Confinement::Coefficients { b, w } => {
                b.iter().zip(w).map(|(bk, wk)| wk * bk.norm_sqr()).collect::<NeumaierSum>().value().ln()
            }
            Confinement::Support { log_w, s, .. } => {
                let t: Vec<f64> = log_w.iter().zip(s).map(|(lw, sj)| lw + 2.0 * sj).collect();
                log_sum_exp(&t)
            }
        }
    }

    /// Replace the root `from` by `to`.
    fn replace(&mut self, from: Complex64, to: Complex64) {
        match self {
            Confinement::Coefficients { b, .. } => {
                let q = deflate(b, from);
                b[0] = -to * q[0];
                for k in 1..b.len() - 1 {
                    b[k] = q[k - 1] - to * q[k];
                }
                let last = b.len() - 1;
                b[last] = q[last - 1];
            }
            Confinement::Support { points, s, .. } => {
                for (sj, &p) in s.iter_mut().zip(points.iter()) {
                    *sj += (p - to).norm().ln() - (p - from).norm().ln();
                }
            }
        }
    }
}

/// Quotient of a monic `b` by `(X - r)`; forward recurrence for `|r| ≤ 1`,
/// backward otherwise, which keeps the error growth bounded by one.
fn deflate(b: &[Complex64], r: Complex64) -> Vec<Complex64> {
    let n = b.len() - 1;
    let mut q = alloc::vec![Complex64::new(0.0, 0.0); n];
    if r.norm() <= 1.0 {
        q[n - 1] = b[n];
        for k in (1..n).rev() {
            q[k - 1] = b[k] + r * q[k];
        }
    } else {
        q[0] = -b[0] / r;
        for k in 1..n {
            q[k] = (q[k - 1] - b[k]) / r;
        }
    }
    q
}

/// The outcome of evaluating a move: proposal densities, Jacobian, target
/// ratio, acceptance, and the incremental state needed to apply it.
#[derive(Clone, Debug)]
pub struct Proposal {
    pub mv: Move,
    /// `log q(x → y)`, including the discrete selection probabilities.
    pub log_q_fwd: f64,
    /// `log q(y → x)`.
    pub log_q_rev: f64,
    /// Log Jacobian of the dimension-matching map (zero for in-plane moves).
    pub log_jac: f64,
    /// `log π(y) - log π(x)`.
    pub log_target_ratio: f64,
    /// `min(0, log π(y) - log π(x) + log q(y→x) - log q(x→y) + log J)`.
    pub log_accept: f64,
    /// The move that takes `y` back to `x`.
    pub reverse: Move,
    particles: Vec<Complex64>,
    k: Option<usize>,
    pair_log: f64,
    conf: Confinement,
    h: f64,
}

/// Metropolis acceptance `min(1, exp(-β ΔH))`.
pub fn metropolis_acceptance(beta: f64, delta_h: f64) -> f64 {
    (-beta * delta_h).exp().min(1.0)
}

/// Gaussian step with scale `σ √(1+|z|²)`; returns the new point and `log q`.
fn local_scale(sigma: f64, z: Complex64) -> f64 {
    sigma * (1.0 + z.norm_sqr()).sqrt()
}

fn log_q_complex(sigma: f64, from: Complex64, to: Complex64) -> f64 {
    let s = local_scale(sigma, from);
    -(PI * s * s).ln() - (to - from).norm_sqr() / (s * s)
}

fn log_q_real(sigma: f64, from: f64, to: f64) -> f64 {
    let s = local_scale(sigma, Complex64::new(from, 0.0));
    -s.ln() - 0.5 * (0.5 * core::f64::consts::TAU).ln() - (to - from) * (to - from) / (2.0 * s * s)
}

/// A Metropolis / reversible-jump sampler holding one chain state.
#[derive(Clone, Debug)]
pub struct Sampler {
    spec: ModelSpec,
    particles: Vec<Complex64>,
    k: Option<usize>,
    pair_log: f64,
    conf: Confinement,
    h: f64,
    /// Per-kind proposal scales.
    scales: [f64; 5],
    /// `log((n-2k)! k! / Z_{n,k})` in the real case.
    log_c: Vec<f64>,
}

fn pair_log_sum(z: &[Complex64]) -> f64 {
    let mut s = NeumaierSum::new();
    for i in 0..z.len() {
        for j in 0..i {
            s.add((z[i] - z[j]).norm().ln());
        }
    }
    s.value()
}

impl Sampler {
    fn build(spec: &ModelSpec, particles: Vec<Complex64>, k: Option<usize>) -> Result<Self, GibbsError> {
        if particles.len() != spec.n || spec.n == 0 {
            return Err(ExactLawError::WrongLength { got: particles.len(), want: spec.n }.into());
        }
        let log_c = match k {
            Some(_) => {
                let n = spec.n;
                let lz = mixture_constants(spec).log_z;
                lz.iter().enumerate().map(|(kk, z)| ln_factorial(n - 2 * kk) + ln_factorial(kk) - z).collect()
            }
            None => Vec::new(),
        };
        let mut s = Sampler {
            spec: spec.clone(),
            conf: Confinement::new(spec, &particles),
            particles,
            k,
            pair_log: 0.0,
            h: 0.0,
            scales: [INITIAL_SCALE; 5],
            log_c,
        };
        s.resync();
        if !s.h.is_finite() {
            return Err(ExactLawError::CoincidentParticles.into());
        }
        Ok(s)
    }

    /// Sampler for the complex gas started at `init`.
    pub fn complex(spec: &ModelSpec, init: &[Complex64]) -> Result<Self, GibbsError> {
        Self::build(spec, init.to_vec(), None)
    }

    /// Sampler for the real mixture started at a layout with `k` pairs.
    pub fn real(spec: &ModelSpec, init: &[Complex64], k: usize) -> Result<Self, GibbsError> {
        if init.len() != spec.n {
            return Err(ExactLawError::WrongLength { got: init.len(), want: spec.n }.into());
        }
        let exact = snap_mixture_layout(init, k)?;
        Self::build(spec, exact, Some(k))
    }

    fn n(&self) -> usize {
        self.spec.n
    }

    fn reals(&self) -> usize {
        self.n() - 2 * self.k.unwrap_or(0)
    }

    fn beta_eff(&self) -> f64 {
        if self.k.is_some() { 0.5 * self.spec.beta } else { self.spec.beta }
    }

    fn h_from(&self, pair_log: f64, log_conf: f64) -> f64 {
        let nf = self.n() as f64;
        -2.0 * pair_log / (nf * nf) + (nf + 1.0) / (nf * nf) * log_conf
    }

    /// Recompute all caches from the particles; returns the discrepancy
    /// between the cached and the fresh Hamiltonian.
    pub fn resync(&mut self) -> f64 {
        let fresh = hamiltonian(&self.particles, &self.spec);
        let drift = (self.h - fresh).abs();
        self.conf = Confinement::new(&self.spec, &self.particles);
        self.pair_log = pair_log_sum(&self.particles);
        self.h = fresh;
        drift
    }

    pub fn hamiltonian(&self) -> f64 {
        self.h
    }

    pub fn particles(&self) -> &[Complex64] {
        &self.particles
    }

    pub fn k(&self) -> Option<usize> {
        self.k
    }

    pub fn scale(&self, kind: MoveKind) -> f64 {
        self.scales[kind.slot()]
    }

    pub fn set_scale(&mut self, kind: MoveKind, sigma: f64) {
        self.scales[kind.slot()] = sigma;
    }

    /// `log π` up to a constant shared by all states.
    pub fn log_target(&self) -> f64 {
        let c = self.k.map_or(0.0, |k| self.log_c[k]);
        -self.beta_eff() * self.h + c
    }

    pub fn state(&self, step: u64, rng_word_pos: u128) -> GasState {
        GasState { particles: self.particles.clone(), k: self.k, hamiltonian: self.h, step, rng_word_pos }
    }

    /// Draw a move of the given kind, or `None` if the kind is infeasible.
    pub fn draw<R: Rng + ?Sized>(&self, kind: MoveKind, rng: &mut R) -> Option<Move> {
        let n = self.n();
        let r = self.reals();
        let k = self.k.unwrap_or(0);
        let sigma = self.scales[kind.slot()];
        let gauss_c = |rng: &mut R| Complex64::new(normal(rng), normal(rng)) * core::f64::consts::FRAC_1_SQRT_2;
        match kind {
            MoveKind::Particle => {
                if self.k.is_some() {
                    return None;
                }
                let i = rng.random_range(0..n);
                let z = self.particles[i];
                Some(Move::Particle { i, to: z + local_scale(sigma, z) * gauss_c(rng) })
            }
            MoveKind::RealParticle => {
                if self.k.is_none() || r == 0 {
                    return None;
                }
                let i = rng.random_range(0..r);
                let x = self.particles[i].re;
                Some(Move::RealParticle { i, to: x + local_scale(sigma, self.particles[i]) * normal(rng) })
            }
            MoveKind::Pair => {
                if self.k.is_none() || k == 0 {
                    return None;
                }
                let p = rng.random_range(0..k);
                let z = self.particles[r + 2 * p];
                Some(Move::Pair { p, to: z + local_scale(sigma, z) * gauss_c(rng) })
            }
            MoveKind::Split => {
                if self.k.is_none() || r < 2 {
                    return None;
                }
                let a = rng.random_range(0..r);
                let mut b = rng.random_range(0..r - 1);
                if b >= a {
                    b += 1;
                }
                Some(Move::Split { a, b })
            }
            MoveKind::Merge => {
                if self.k.is_none() || k == 0 {
                    return None;
                }
                Some(Move::Merge { p: rng.random_range(0..k) })
            }
        }
    }

    /// Evaluate a move: new configuration, densities and acceptance.
    /// Returns `None` when the move leaves the state space (a pair
    /// representative crossing the real axis, coincident particles).
    pub fn evaluate(&self, mv: Move) -> Option<Proposal> {
        let n = self.n();
        let r = self.reals();
        let k = self.k.unwrap_or(0);
        let sigma = self.scales[mv.kind().slot()];
        let (changes, log_q_fwd, log_q_rev, log_jac, new_k, reverse): (Vec<(usize, Complex64)>, f64, f64, f64, Option<usize>, Move) =
            match mv {
                Move::Particle { i, to } => {
                    let z = self.particles[i];
                    let sel = -(n as f64).ln();
                    (
                        alloc::vec![(i, to)],
                        sel + log_q_complex(sigma, z, to),
                        sel + log_q_complex(sigma, to, z),
                        0.0,
                        None,
                        Move::Particle { i, to: z },
                    )
                }
                Move::RealParticle { i, to } => {
                    let x = self.particles[i].re;
                    let sel = -(r as f64).ln();
                    (
                        alloc::vec![(i, Complex64::new(to, 0.0))],
                        sel + log_q_real(sigma, x, to),
                        sel + log_q_real(sigma, to, x),
                        0.0,
                        self.k,
                        Move::RealParticle { i, to: x },
                    )
                }
                Move::Pair { p, to } => {
                    if to.im <= 0.0 {
                        return None;
                    }
                    let z = self.particles[r + 2 * p];
                    let sel = -(k as f64).ln();
                    (
                        alloc::vec![(r + 2 * p, to), (r + 2 * p + 1, to.conj())],
                        sel + log_q_complex(sigma, z, to),
                        sel + log_q_complex(sigma, to, z),
                        0.0,
                        self.k,
                        Move::Pair { p, to: z },
                    )
                }
                Move::Split { a, b } => {
                    let (xa, xb) = (self.particles[a].re, self.particles[b].re);
                    let (lo, hi) = if xa < xb { (xa, xb) } else { (xb, xa) };
                    let z = Complex64::new(0.5 * (lo + hi), 0.5 * (hi - lo));
                    if z.im <= 0.0 {
                        return None;
                    }
                    let ln_pairs = ((r * (r - 1) / 2) as f64).ln();
                    (
                        alloc::vec![(a, z), (b, z.conj())],
                        -ln_pairs,
                        -((k + 1) as f64).ln(),
                        -core::f64::consts::LN_2,
                        Some(k + 1),
                        Move::Merge { p: k },
                    )
                }
                Move::Merge { p } => {
                    let z = self.particles[r + 2 * p];
                    let (lo, hi) = (z.re - z.im, z.re + z.im);
                    let r2 = r + 2;
                    (
                        alloc::vec![(r + 2 * p, Complex64::new(lo, 0.0)), (r + 2 * p + 1, Complex64::new(hi, 0.0))],
                        -(k as f64).ln(),
                        -((r2 * (r2 - 1) / 2) as f64).ln(),
                        core::f64::consts::LN_2,
                        Some(k - 1),
                        Move::Split { a: r, b: r + 1 },
                    )
                }
            };

        // Incremental pair sum and confinement, applying changes in order.
        let mut pos = self.particles.clone();
        let mut pair_log = self.pair_log;
        let mut conf = self.conf.clone();
        for &(i, to) in &changes {
            let from = pos[i];
            let mut d = 0.0;
            for (j, &pj) in pos.iter().enumerate() {
                if j != i {
                    let dn = (to - pj).norm();
                    if dn == 0.0 {
                        return None;
                    }
                    d += dn.ln() - (from - pj).norm().ln();
                }
            }
            pair_log += d;
            conf.replace(from, to);
            pos[i] = to;
        }
        let mut log_conf = conf.log_value();
        if !log_conf.is_finite() {
            log_conf = log_confinement(&pos, &self.spec);
            conf = Confinement::new(&self.spec, &pos);
        }
        let h = self.h_from(pair_log, log_conf);

        // Relabel so the layout stays "reals, then pairs".
        let particles = match mv {
            Move::Split { a, b } => {
                let mut out: Vec<Complex64> = (0..r).filter(|&j| j != a && j != b).map(|j| pos[j]).collect();
                out.extend_from_slice(&pos[r..]);
                let z = if pos[a].im > 0.0 { pos[a] } else { pos[b] };
                out.push(z);
                out.push(z.conj());
                out
            }
            Move::Merge { p } => {
                let mut out: Vec<Complex64> = pos[..r].to_vec();
                out.push(pos[r + 2 * p]);
                out.push(pos[r + 2 * p + 1]);
                for q in 0..k {
                    if q != p {
                        out.push(pos[r + 2 * q]);
                        out.push(pos[r + 2 * q + 1]);
                    }
                }
                out
            }
            _ => pos,
        };

        let be = self.beta_eff();
        let c_old = self.k.map_or(0.0, |kk| self.log_c[kk]);
        let c_new = new_k.map_or(0.0, |kk| self.log_c[kk]);
        let log_target_ratio = -be * (h - self.h) + c_new - c_old;
        let log_accept = (log_target_ratio + log_q_rev - log_q_fwd + log_jac).min(0.0);
        Some(Proposal {
            mv,
            log_q_fwd,
            log_q_rev,
            log_jac,
            log_target_ratio,
            log_accept: if log_accept.is_nan() { f64::NEG_INFINITY } else { log_accept },
            reverse,
            particles,
            k: new_k,
            pair_log,
            conf,
            h,
        })
    }

    /// Move to the proposed state.
    pub fn apply(&mut self, p: Proposal) {
        self.particles = p.particles;
        self.k = p.k;
        self.pair_log = p.pair_log;
        self.conf = p.conf;
        self.h = p.h;
    }

    /// The sampler that would result from accepting `p`.
    pub fn applied(&self, p: &Proposal) -> Sampler {
        let mut s = self.clone();
        s.apply(p.clone());
        s
    }

    /// Choose a move kind for the next step.
    fn choose_kind<R: Rng + ?Sized>(&self, rng: &mut R) -> MoveKind {
        match self.k {
            None => MoveKind::Particle,
            Some(k) => {
                if open01(rng) < P_DIMENSION {
                    if open01(rng) < 0.5 { MoveKind::Split } else { MoveKind::Merge }
                } else if rng.random_range(0..self.n()) < self.n() - 2 * k {
                    MoveKind::RealParticle
                } else {
                    MoveKind::Pair
                }
            }
        }
    }

    /// One Metropolis–Hastings step; returns the kind tried and acceptance.
    pub fn step<R: Rng + ?Sized>(&mut self, rng: &mut R) -> (MoveKind, bool) {
        let kind = self.choose_kind(rng);
        let proposal = self.draw(kind, rng).and_then(|mv| self.evaluate(mv));
        let u = open01(rng);
        match proposal {
            Some(p) if u.ln() < p.log_accept => {
                self.apply(p);
                (kind, true)
            }
            _ => (kind, false),
        }
    }
}

/// Mismatches of one move against its reverse from the moved state.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BalanceResidual {
    /// `|q_rev(x→y) - q_fwd(y→x)|` in log space.
    pub proposal: f64,
    /// `|log J + log J_rev|`.
    pub jacobian: f64,
    /// `|π(x) q(x→y) α(x→y) - π(y) q(y→x) α(y→x) |J||` in log space.
    pub flow: f64,
    /// Largest particle displacement after applying the move and its reverse.
    pub restore: f64,
}

impl BalanceResidual {
    pub fn max(&self) -> f64 {
        self.proposal.max(self.jacobian).max(self.flow).max(self.restore)
    }
}

fn sorted_particles(s: &Sampler) -> Vec<Complex64> {
    let mut v = s.particles().to_vec();
    v.sort_by(|u, w| u.re.total_cmp(&w.re).then(u.im.total_cmp(&w.im)));
    v
}

/// Detailed-balance residuals of `mv` from the frozen state `x`; `None` if
/// the move or its reverse is infeasible.
pub fn detailed_balance_residual(x: &Sampler, mv: Move) -> Option<BalanceResidual> {
    let p = x.evaluate(mv)?;
    let y = x.applied(&p);
    let r = y.evaluate(p.reverse)?;
    let lhs = x.log_target() + p.log_q_fwd + p.log_accept;
    let rhs = y.log_target() + r.log_q_fwd + r.log_accept + p.log_jac;
    let back = y.applied(&r);
    let restore = sorted_particles(&back)
        .iter()
        .zip(&sorted_particles(x))
        .map(|(u, v)| (u - v).norm())
        .fold(0.0, f64::max);
    Some(BalanceResidual {
        proposal: (r.log_q_fwd - p.log_q_rev).abs(),
        jacobian: (r.log_jac + p.log_jac).abs(),
        flow: (lhs - rhs).abs(),
        restore,
    })
}

/// Chain length and bookkeeping.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChainConfig {
    pub steps: u64,
    pub seed: u64,
    pub stream: u64,
    /// Discarded steps; `None` means `steps / 5`. Scales adapt only here.
    pub burn_in: Option<u64>,
    /// Record every `record_every`-th post-burn-in state.
    pub record_every: u64,
}

impl ChainConfig {
    pub fn new(steps: u64, seed: u64) -> Self {
        ChainConfig { steps, seed, stream: 0, burn_in: None, record_every: 1 }
    }

    pub fn stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    pub fn record_every(mut self, every: u64) -> Self {
        self.record_every = every.max(1);
        self
    }

    pub fn burn_in_steps(&self) -> u64 {
        self.burn_in.unwrap_or(self.steps / 5)
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct MoveStats {
    pub kind: MoveKind,
    pub proposed: u64,
    pub accepted: u64,
}

impl MoveStats {
    pub fn rate(&self) -> f64 {
        if self.proposed == 0 { 0.0 } else { self.accepted as f64 / self.proposed as f64 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ChainDiagnostics {
    /// Post-burn-in counts for each kind that was tried.
    pub moves: Vec<MoveStats>,
    /// Integrated autocorrelation time of the post-burn-in `H` trace.
    pub iat_h: f64,
    /// Post-burn-in step counts per `k` (real case).
    pub k_histogram: Option<Vec<u64>>,
    /// Largest cached-vs-fresh Hamiltonian discrepancy seen.
    pub max_cache_drift: f64,
    pub cache_checks: u64,
    /// Scales frozen at the end of burn-in.
    pub scales: Vec<(MoveKind, f64)>,
    pub burn_in: u64,
    /// `β_n ≠ n²`: outside the regime where the gas is the root law.
    pub nondefault_beta: bool,
}

#[derive(Clone, Debug)]
pub struct Chain {
    pub states: Vec<GasState>,
    /// Post-burn-in Hamiltonian at every step.
    pub h_trace: Vec<f64>,
    pub diagnostics: ChainDiagnostics,
}

fn run(mut s: Sampler, cfg: &ChainConfig) -> Result<Chain, GibbsError> {
    if cfg.steps == 0 {
        return Err(GibbsError::InvalidConfig("steps must be positive"));
    }
    let mut rng = stream_rng(cfg.seed, cfg.stream);
    let burn = cfg.burn_in_steps().min(cfg.steps - 1);
    let mut counts = [(0u64, 0u64); 5];
    let mut adapt = [0u64; 5];
    let real = s.k.is_some();
    let mut k_hist = alloc::vec![0u64; s.n() / 2 + 1];
    let mut states = Vec::new();
    let mut h_trace = Vec::with_capacity((cfg.steps - burn) as usize);
    let (mut drift, mut checks) = (0.0f64, 0u64);
    for step in 0..cfg.steps {
        let (kind, acc) = s.step(&mut rng);
        let slot = kind.slot();
        if step < burn {
            if matches!(kind, MoveKind::Particle | MoveKind::RealParticle | MoveKind::Pair) {
                adapt[slot] += 1;
                let gain = 1.0 / (adapt[slot] as f64).sqrt().max(10.0);
                let a = if acc { 1.0 } else { 0.0 };
                s.scales[slot] = (s.scales[slot].ln() + gain * (a - TARGET_ACCEPTANCE)).exp().clamp(1e-4, 1e2);
            }
        } else {
            counts[slot].0 += 1;
            counts[slot].1 += acc as u64;
            h_trace.push(s.h);
            if let Some(k) = s.k {
                k_hist[k] += 1;
            }
            if (step - burn).is_multiple_of(cfg.record_every) {
                states.push(s.state(step, rng.get_word_pos()));
            }
        }
        if (step + 1) % CACHE_CHECK_EVERY == 0 {
            drift = drift.max(s.resync());
            checks += 1;
        }
    }
    let moves = MoveKind::ALL
        .iter()
        .filter(|k| counts[k.slot()].0 > 0)
        .map(|&kind| MoveStats { kind, proposed: counts[kind.slot()].0, accepted: counts[kind.slot()].1 })
        .collect();
    let scales = MoveKind::ALL
        .iter()
        .filter(|k| matches!(k, MoveKind::Particle) != real && !matches!(k, MoveKind::Split | MoveKind::Merge))
        .map(|&k| (k, s.scales[k.slot()]))
        .collect();
    let diagnostics = ChainDiagnostics {
        moves,
        iat_h: integrated_autocorrelation(&h_trace),
        k_histogram: real.then_some(k_hist),
        max_cache_drift: drift,
        cache_checks: checks,
        scales,
        burn_in: burn,
        nondefault_beta: !s.spec.is_default_speed(),
    };
    Ok(Chain { states, h_trace, diagnostics })
}

/// Distinct points on the unit circle.
pub fn default_complex_start(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::from_polar(1.0, 2.0 * PI * (j as f64 + 0.25) / n as f64)).collect()
}

/// Distinct real points in `[-1, 1]`.
pub fn default_real_start(n: usize) -> Vec<Complex64> {
    (0..n).map(|j| Complex64::new(if n == 1 { 0.0 } else { -1.0 + 2.0 * j as f64 / (n - 1) as f64 }, 0.0)).collect()
}

/// Metropolis chain for the complex gas from the default start.
pub fn mcmc_complex(spec: &ModelSpec, cfg: &ChainConfig) -> Result<Chain, GibbsError> {
    mcmc_complex_from(spec, cfg, &default_complex_start(spec.n))
}

pub fn mcmc_complex_from(spec: &ModelSpec, cfg: &ChainConfig, init: &[Complex64]) -> Result<Chain, GibbsError> {
    run(Sampler::complex(spec, init)?, cfg)
}

/// Reversible-jump chain for the real mixture from all-real start.
pub fn mcmc_real_mixture(spec: &ModelSpec, cfg: &ChainConfig) -> Result<Chain, GibbsError> {
    mcmc_real_mixture_from(spec, cfg, &default_real_start(spec.n), 0)
}

pub fn mcmc_real_mixture_from(spec: &ModelSpec, cfg: &ChainConfig, init: &[Complex64], k: usize) -> Result<Chain, GibbsError> {
    run(Sampler::real(spec, init, k)?, cfg)
}

/// A scalar summary of a configuration; must be symmetric in the particles.
#[derive(Clone, Copy, Debug)]
pub struct Statistic {
    pub name: &'static str,
    pub eval: fn(&[Complex64]) -> f64,
}

/// `|Π z_i|`.
pub const ABS_PRODUCT: Statistic = Statistic { name: "abs_product", eval: |z| z.iter().map(|v| v.norm()).product() };
/// `Σ |z_i|`.
pub const ABS_SUM: Statistic = Statistic { name: "abs_sum", eval: |z| z.iter().map(|v| v.norm()).sum() };

/// Statistics of recorded states, thinned by the largest integrated
/// autocorrelation time among them (stride `⌈τ⌉`).
pub fn thinned_statistics(states: &[GasState], stats: &[Statistic]) -> (Vec<Vec<f64>>, f64) {
    let raw: Vec<Vec<f64>> = stats.iter().map(|s| states.iter().map(|st| (s.eval)(&st.particles)).collect()).collect();
    let tau = raw.iter().map(|x| integrated_autocorrelation(x)).fold(1.0, f64::max);
    let stride = tau.ceil() as usize;
    (raw.into_iter().map(|x| x.into_iter().step_by(stride).collect()).collect(), tau)
}

/// `count` independent root configurations drawn by sampling coefficients.
pub fn direct_root_samples(spec: &ModelSpec, count: usize, seed: u64) -> Result<Vec<Vec<Complex64>>, GibbsError> {
    let mut rng = stream_rng(seed, 0);
    (0..count)
        .map(|_| {
            let p = sample_with(spec, &mut rng)?;
            Ok(find_roots(&p)?.into_atoms())
        })
        .collect()
}

/// Monte Carlo estimate and standard error of `P(a₁² < 4 a₀ a₂)` for iid
/// `N(0, ½)` coefficients.
pub fn quadratic_complex_fraction(draws: usize, seed: u64) -> (f64, f64) {
    let mut rng = stream_rng(seed, 0);
    let hits = (0..draws)
        .filter(|_| {
            let (a0, a1, a2) = (normal(&mut rng), normal(&mut rng), normal(&mut rng));
            a1 * a1 < 4.0 * a0 * a2
        })
        .count();
    let p = hits as f64 / draws as f64;
    (p, (p * (1.0 - p) / draws as f64).sqrt())
}

#[derive(Clone, Debug, PartialEq)]
pub struct StatisticReport {
    pub name: &'static str,
    pub ks: KsResult,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ValidationReport {
    pub entries: Vec<StatisticReport>,
}

impl ValidationReport {
    pub fn min_p(&self) -> f64 {
        self.entries.iter().map(|e| e.ks.p_value).fold(1.0, f64::min)
    }

    pub fn passes(&self, alpha: f64) -> bool {
        self.min_p() > alpha
    }
}

/// Two-sample KS per statistic; small samples use the permutation test.
pub fn two_sample_validate(
    a: &[Vec<Complex64>],
    b: &[Vec<Complex64>],
    stats: &[Statistic],
    seed: u64,
) -> Result<ValidationReport, GibbsError> {
    let xs: Vec<Vec<f64>> = stats.iter().map(|s| a.iter().map(|z| (s.eval)(z)).collect()).collect();
    let ys: Vec<Vec<f64>> = stats.iter().map(|s| b.iter().map(|z| (s.eval)(z)).collect()).collect();
    validate_values(&xs, &ys, stats, seed)
}

/// As [`two_sample_validate`] on precomputed statistic columns.
pub fn validate_values(xs: &[Vec<f64>], ys: &[Vec<f64>], stats: &[Statistic], seed: u64) -> Result<ValidationReport, GibbsError> {
    let mut rng: StreamRng = stream_rng(seed, 0);
    let mut entries = Vec::with_capacity(stats.len());
    for ((s, x), y) in stats.iter().zip(xs).zip(ys) {
        if x.is_empty() || y.is_empty() {
            return Err(GibbsError::EmptySample);
        }
        entries.push(StatisticReport { name: s.name, ks: ks_test(x, y, &mut rng) });
    }
    Ok(ValidationReport { entries })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ensembles::{CoefficientField, OrthogonalData};
    use crate::stats::gelman_rubin;
    use alloc::sync::Arc;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn assert_balance(x: &Sampler, mv: Move) {
        let r = detailed_balance_residual(x, mv).expect("feasible move");
        assert!(r.proposal < 1e-12 && r.jacobian < 1e-15 && r.restore < 1e-12, "{r:?}");
        assert!(r.flow < 1e-12, "{:?}: {r:?}", mv.kind());
    }

    #[test]
    fn metropolis_rule() {
        assert_eq!(metropolis_acceptance(4.0, 0.0), 1.0);
        assert!((metropolis_acceptance(4.0, 0.25) - (-1.0f64).exp()).abs() < 1e-16);
        assert_eq!(metropolis_acceptance(4.0, -1.0), 1.0);
    }

    #[test]
    fn zero_delta_h_is_always_accepted() {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 3);
        let z = [c(0.5, 0.1), c(-0.3, 0.8), c(1.2, -0.4)];
        let s = Sampler::complex(&spec, &z).unwrap();
        // Rotation leaves H unchanged; use a one-particle rotation of n = 1.
        let one = ModelSpec::kac(CoefficientField::ComplexGaussian, 1);
        let s1 = Sampler::complex(&one, &[c(0.6, 0.0)]).unwrap();
        let p = s1.evaluate(Move::Particle { i: 0, to: c(0.0, 0.6) }).unwrap();
        assert!(p.log_target_ratio.abs() < 1e-15);
        assert_eq!(p.log_accept, 0.0);
        assert!(s.evaluate(Move::Particle { i: 0, to: z[1] }).is_none());
    }

    #[test]
    fn detailed_balance_on_frozen_states() {
        let mut rng = stream_rng(11, 0);
        let specs = [
            ModelSpec::kac(CoefficientField::ComplexGaussian, 3),
            ModelSpec::elliptic(CoefficientField::ComplexGaussian, 3),
        ];
        for spec in &specs {
            let x = Sampler::complex(spec, &[c(0.5, 0.1), c(-0.3, 0.8), c(1.2, -0.4)]).unwrap();
            for _ in 0..50 {
                let mv = x.draw(MoveKind::Particle, &mut rng).unwrap();
                assert_balance(&x, mv);
            }
        }
        for field_spec in [
            ModelSpec::kac(CoefficientField::RealGaussian, 3),
            ModelSpec::elliptic(CoefficientField::RealGaussian, 3),
        ] {
            let three_real = Sampler::real(&field_spec, &[c(-0.7, 0.0), c(0.2, 0.0), c(1.5, 0.0)], 0).unwrap();
            let one_pair = Sampler::real(&field_spec, &[c(0.4, 0.0), c(-0.2, 0.9), c(-0.2, -0.9)], 1).unwrap();
            for _ in 0..30 {
                assert_balance(&three_real, three_real.draw(MoveKind::RealParticle, &mut rng).unwrap());
                assert_balance(&three_real, three_real.draw(MoveKind::Split, &mut rng).unwrap());
                assert_balance(&one_pair, one_pair.draw(MoveKind::RealParticle, &mut rng).unwrap());
                assert_balance(&one_pair, one_pair.draw(MoveKind::Merge, &mut rng).unwrap());
                let mv = one_pair.draw(MoveKind::Pair, &mut rng).unwrap();
                // Pair proposals below the real axis leave the state space.
                if one_pair.evaluate(mv).is_some() {
                    assert_balance(&one_pair, mv);
                }
            }
            assert!(three_real.draw(MoveKind::Merge, &mut rng).is_none());
        }
    }

    #[test]
    fn split_at_zero_delta_h_is_z_ratio_times_proposal_ratio() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 2);
        let x = Sampler::real(&spec, &[c(-0.5, 0.0), c(0.5, 0.0)], 0).unwrap();
        let p = x.evaluate(Move::Split { a: 0, b: 1 }).unwrap();
        let y = x.applied(&p);
        let lz = mixture_constants(&spec).log_z;
        let dh = y.hamiltonian() - x.hamiltonian();
        // Remove the energy part; what is left is the constant and proposal ratio.
        let rest = p.log_target_ratio + 0.5 * spec.beta * dh;
        let expect = (ln_factorial(0) + ln_factorial(1) - lz[1]) - (ln_factorial(2) - lz[0]);
        assert!((rest - expect).abs() < 1e-14);
        assert_eq!(p.log_q_fwd, 0.0);
        assert_eq!(p.log_q_rev, 0.0);
        assert_eq!(p.log_jac, -core::f64::consts::LN_2);
    }

    #[test]
    fn incremental_hamiltonian_matches_recomputation() {
        let data = OrthogonalData::new(
            crate::quadrature::circle_nodes(64),
            alloc::vec![1.0 / 64.0; 64],
            alloc::vec![0.0; 64],
        )
        .unwrap();
        let specs = [
            ModelSpec::kac(CoefficientField::ComplexGaussian, 6),
            ModelSpec::elliptic(CoefficientField::ComplexGaussian, 6),
            ModelSpec::new(Basis::Orthogonal(Arc::new(data)), CoefficientField::ComplexGaussian, 6).unwrap(),
        ];
        for spec in &specs {
            let chain = mcmc_complex(spec, &ChainConfig::new(20_000, 3)).unwrap();
            assert_eq!(chain.diagnostics.cache_checks, 20);
            assert!(chain.diagnostics.max_cache_drift < 1e-9, "{}", chain.diagnostics.max_cache_drift);
            for st in chain.states.iter().step_by(997) {
                assert!((st.hamiltonian - hamiltonian(&st.particles, spec)).abs() < 1e-9);
            }
        }
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 5);
        let chain = mcmc_real_mixture(&spec, &ChainConfig::new(20_000, 4)).unwrap();
        assert!(chain.diagnostics.max_cache_drift < 1e-9);
    }

    #[test]
    fn real_layout_is_exact_at_every_recorded_step() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 5);
        let chain = mcmc_real_mixture(&spec, &ChainConfig::new(20_000, 5)).unwrap();
        let hist = chain.diagnostics.k_histogram.clone().unwrap();
        assert_eq!(hist.len(), 3);
        assert!(hist.iter().all(|&h| h > 0), "{hist:?}");
        for st in &chain.states {
            let k = st.k.unwrap();
            let r = 5 - 2 * k;
            assert!(st.particles[..r].iter().all(|z| z.im == 0.0));
            for p in st.particles[r..].chunks(2) {
                assert!(p[0].im > 0.0 && p[1] == p[0].conj());
            }
        }
        for m in &chain.diagnostics.moves {
            assert!((0.0..=1.0).contains(&m.rate()));
        }
    }

    #[test]
    fn reproducible_chains() {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 3);
        let a = mcmc_complex(&spec, &ChainConfig::new(3000, 9)).unwrap();
        let b = mcmc_complex(&spec, &ChainConfig::new(3000, 9)).unwrap();
        let d = mcmc_complex(&spec, &ChainConfig::new(3000, 9).stream(1)).unwrap();
        assert_eq!(a.h_trace, b.h_trace);
        assert_ne!(a.h_trace, d.h_trace);
    }

    #[test]
    fn validation_report_edges() {
        let a: Vec<Vec<Complex64>> = (0..200).map(|i| alloc::vec![c(i as f64, 0.0)]).collect();
        let r = two_sample_validate(&a, &a, &[ABS_PRODUCT, ABS_SUM], 1).unwrap();
        assert!(r.entries.iter().all(|e| e.ks.p_value == 1.0));
        let b: Vec<Vec<Complex64>> = (0..200).map(|i| alloc::vec![c(1e4 + i as f64, 0.0)]).collect();
        assert!(two_sample_validate(&a, &b, &[ABS_SUM], 1).unwrap().min_p() < 1e-10);
        assert_eq!(two_sample_validate(&a, &[], &[ABS_SUM], 1), Err(GibbsError::EmptySample));
    }

    #[test]
    fn complex_n3_chain_matches_direct_roots() {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 3);
        let chain = mcmc_complex(&spec, &ChainConfig::new(400_000, 21)).unwrap();
        let (mc, tau) = thinned_statistics(&chain.states, &[ABS_PRODUCT, ABS_SUM]);
        assert!(tau < 100.0, "{tau}");
        let direct = direct_root_samples(&spec, 4000, 22).unwrap();
        let xs: Vec<Vec<f64>> = [ABS_PRODUCT, ABS_SUM].iter().map(|s| direct.iter().map(|z| (s.eval)(z)).collect()).collect();
        let r = validate_values(&xs, &mc, &[ABS_PRODUCT, ABS_SUM], 1).unwrap();
        assert!(r.passes(0.01), "{r:?}");
    }

    #[test]
    fn n2_real_chain_complex_fraction() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 2);
        let chain = mcmc_real_mixture(&spec, &ChainConfig::new(400_000, 23)).unwrap();
        let hist = chain.diagnostics.k_histogram.unwrap();
        let p = hist[1] as f64 / (hist[0] + hist[1]) as f64;
        let (q, _) = quadratic_complex_fraction(100_000, 24);
        assert!((p - q).abs() < 0.02, "{p} {q}");
    }

    #[test]
    fn real_n3_mixture_matches_direct_roots() {
        let spec = ModelSpec::kac(CoefficientField::RealGaussian, 3);
        let chain = mcmc_real_mixture(&spec, &ChainConfig::new(400_000, 25)).unwrap();
        let hist = chain.diagnostics.k_histogram.unwrap();
        let p = hist[1] as f64 / hist.iter().sum::<u64>() as f64;
        let direct = direct_root_samples(&spec, 20_000, 26).unwrap();
        let q = direct.iter().filter(|z| z.iter().any(|v| v.im.abs() > 1e-9)).count() as f64 / 20_000.0;
        assert!((p - q).abs() < 0.03, "{p} {q}");
    }

    #[test]
    fn distant_starts_mix() {
        let spec = ModelSpec::kac(CoefficientField::ComplexGaussian, 4);
        let cfg = ChainConfig::new(100_000, 31);
        let near = mcmc_complex_from(&spec, &cfg, &default_complex_start(4)).unwrap();
        let far_start: Vec<Complex64> = (0..4).map(|j| c(50.0 + 10.0 * j as f64, -40.0)).collect();
        let far = mcmc_complex_from(&spec, &cfg.stream(1), &far_start).unwrap();
        let rhat = gelman_rubin(&[&near.h_trace, &far.h_trace]);
        assert!(rhat < 1.1, "{rhat}");
    }
}
