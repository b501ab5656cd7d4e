//! Model data types and the link function.
//!
//! An observed network is a binary tensor `x[t][i][j]` over `T` slices and `N`
//! entities. Every entity belongs to exactly one community per slice, and
//! every directed slot `(t, i, j)` carries a sender group `g_{i->j}` drawn from
//! the sender's membership and a receiver group `g_{i<-j}` drawn from the
//! receiver's membership. The edge logit is
//!
//! ```text
//! y = B[l][k]          if i and j share a community (l = sender, k = receiver group)
//! y = B[k][k] + Q[k]   if they do not, and both groups equal k
//! y = eps              otherwise
//! ```
//!
//! and `x ~ Bernoulli(sigmoid(y))`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Mat2;

/// Observed binary relations with a train/held-out mask.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TemporalNetwork {
    n_entities: usize,
    n_slices: usize,
    directed: bool,
    self_loops_allowed: bool,
    adjacency: Vec<u8>,
    observed: Vec<bool>,
}

impl TemporalNetwork {
    /// An all-zero network with every eligible slot observed.
    pub fn new(
        n_entities: usize,
        n_slices: usize,
        directed: bool,
        self_loops_allowed: bool,
    ) -> Result<Self> {
        if n_entities == 0 || n_slices == 0 {
            return Err(Error::Parameter(format!(
                "network needs at least one entity and one slice (got N={n_entities}, T={n_slices})"
            )));
        }
        let len = n_slices * n_entities * n_entities;
        let mut net = TemporalNetwork {
            n_entities,
            n_slices,
            directed,
            self_loops_allowed,
            adjacency: vec![0; len],
            observed: vec![true; len],
        };
        if !self_loops_allowed {
            for t in 0..n_slices {
                for i in 0..n_entities {
                    let idx = net.index(t, i, i);
                    net.observed[idx] = false;
                }
            }
        }
        Ok(net)
    }

    #[inline]
    pub fn n_entities(&self) -> usize {
        self.n_entities
    }

    #[inline]
    pub fn n_slices(&self) -> usize {
        self.n_slices
    }

    #[inline]
    pub fn directed(&self) -> bool {
        self.directed
    }

    #[inline]
    pub fn self_loops_allowed(&self) -> bool {
        self.self_loops_allowed
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.n_entities + i) * self.n_entities + j
    }

    #[inline]
    pub fn edge(&self, t: usize, i: usize, j: usize) -> u8 {
        self.adjacency[self.index(t, i, j)]
    }

    #[inline]
    pub fn is_observed(&self, t: usize, i: usize, j: usize) -> bool {
        self.observed[self.index(t, i, j)]
    }

    pub fn adjacency(&self) -> &[u8] {
        &self.adjacency
    }

    pub fn observed_mask(&self) -> &[bool] {
        &self.observed
    }

    fn check_slot(&self, t: usize, i: usize, j: usize) -> Result<()> {
        if t >= self.n_slices || i >= self.n_entities || j >= self.n_entities {
            return Err(Error::Dimension(format!(
                "slot ({t}, {i}, {j}) outside a network with T={}, N={}",
                self.n_slices, self.n_entities
            )));
        }
        Ok(())
    }

    /// Sets `x[t][i][j]`; undirected networks also set the mirrored slot.
    pub fn set_edge(&mut self, t: usize, i: usize, j: usize, value: bool) -> Result<()> {
        self.check_slot(t, i, j)?;
        if i == j && !self.self_loops_allowed {
            return Err(Error::Data(format!(
                "self loop ({t}, {i}, {i}) in a network without self loops"
            )));
        }
        let v = u8::from(value);
        let idx = self.index(t, i, j);
        self.adjacency[idx] = v;
        if !self.directed {
            let idx = self.index(t, j, i);
            self.adjacency[idx] = v;
        }
        Ok(())
    }

    /// Marks a slot observed or held out; undirected networks keep both
    /// orientations in the same fold. Diagonal slots stay unobserved when
    /// self loops are disallowed.
    pub fn set_observed(&mut self, t: usize, i: usize, j: usize, observed: bool) -> Result<()> {
        self.check_slot(t, i, j)?;
        let eligible = i != j || self.self_loops_allowed;
        let idx = self.index(t, i, j);
        self.observed[idx] = observed && eligible;
        if !self.directed {
            let idx = self.index(t, j, i);
            self.observed[idx] = observed && eligible;
        }
        Ok(())
    }

    /// Overwrites the held-out slots' values without touching the mask.
    pub fn set_unobserved_value(&mut self, t: usize, i: usize, j: usize, value: u8) {
        let idx = self.index(t, i, j);
        debug_assert!(!self.observed[idx]);
        self.adjacency[idx] = value;
    }

    /// Replaces the whole mask (shape `T x N x N`).
    pub fn set_observed_mask(&mut self, mask: Vec<bool>) -> Result<()> {
        if mask.len() != self.observed.len() {
            return Err(Error::Dimension(format!(
                "mask has {} entries, expected {}",
                mask.len(),
                self.observed.len()
            )));
        }
        self.observed = mask;
        if !self.self_loops_allowed {
            for t in 0..self.n_slices {
                for i in 0..self.n_entities {
                    let idx = self.index(t, i, i);
                    self.observed[idx] = false;
                }
            }
        }
        Ok(())
    }

    /// Slots eligible for modelling: off-diagonal unless self loops are allowed.
    #[inline]
    pub fn is_eligible(&self, i: usize, j: usize) -> bool {
        i != j || self.self_loops_allowed
    }

    /// Iterator over observed slots in row-major `(t, i, j)` order.
    pub fn observed_slots(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        let n = self.n_entities;
        (0..self.n_slices).flat_map(move |t| {
            (0..n).flat_map(move |i| {
                (0..n).filter_map(move |j| self.is_observed(t, i, j).then_some((t, i, j)))
            })
        })
    }

    /// Whether `(t, i, j)` enters the likelihood: observed, and for
    /// undirected networks the `i <= j` representative of its pair.
    #[inline]
    pub fn is_modelled(&self, t: usize, i: usize, j: usize) -> bool {
        (self.directed || i <= j) && self.is_observed(t, i, j)
    }

    /// Likelihood slots in row-major order.
    pub fn modelled_slots(&self) -> impl Iterator<Item = (usize, usize, usize)> + '_ {
        self.observed_slots()
            .filter(move |&(_, i, j)| self.directed || i <= j)
    }

    pub fn n_observed(&self) -> usize {
        self.observed.iter().filter(|&&o| o).count()
    }

    /// Density of ones among observed slots.
    pub fn observed_density(&self) -> f64 {
        let (mut ones, mut total) = (0usize, 0usize);
        for (idx, &obs) in self.observed.iter().enumerate() {
            if obs {
                total += 1;
                ones += usize::from(self.adjacency[idx]);
            }
        }
        if total == 0 {
            0.0
        } else {
            ones as f64 / total as f64
        }
    }

    pub fn validate(&self) -> Result<()> {
        let len = self.n_slices * self.n_entities * self.n_entities;
        if self.adjacency.len() != len || self.observed.len() != len {
            return Err(Error::Dimension("adjacency/mask length mismatch".into()));
        }
        if self.adjacency.iter().any(|&v| v > 1) {
            return Err(Error::Data("adjacency entries must be 0 or 1".into()));
        }
        for t in 0..self.n_slices {
            for i in 0..self.n_entities {
                if !self.self_loops_allowed && self.is_observed(t, i, i) {
                    return Err(Error::Data(format!("diagonal slot ({t}, {i}, {i}) is observed")));
                }
                if !self.directed {
                    for j in (i + 1)..self.n_entities {
                        let (a, b) = (self.index(t, i, j), self.index(t, j, i));
                        if self.observed[a] != self.observed[b] {
                            return Err(Error::Data(format!(
                                "undirected slots ({t}, {i}, {j}) and ({t}, {j}, {i}) fall in different folds"
                            )));
                        }
                        if self.observed[a] && self.adjacency[a] != self.adjacency[b] {
                            return Err(Error::Data(format!(
                                "undirected network is asymmetric at ({t}, {i}, {j})"
                            )));
                        }
                    }
                }
            }
        }
        Ok(())
    }
}

/// Fixed hyperparameters of the model.
///
/// `sigma_b` and `sigma_q` are prior variances; `iw_scale` is the
/// inverse-Wishart scale for the covariance of each off-diagonal pair
/// `(B[l][k], B[k][l])`, `l < k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub n_groups: usize,
    pub alpha: Vec<f64>,
    pub zeta: f64,
    pub eta: f64,
    pub mu_b: f64,
    pub sigma_b: f64,
    pub mu_q: f64,
    pub sigma_q: f64,
    pub mu_kl: [f64; 2],
    pub iw_dof: f64,
    pub iw_scale: Mat2,
    pub epsilon: f64,
}

pub const DEFAULT_EPSILON: f64 = -6.0;

impl Hyperparams {
    /// Defaults for `k` groups.
    pub fn with_groups(k: usize) -> Self {
        Hyperparams {
            n_groups: k,
            alpha: vec![0.5; k],
            zeta: 1.0,
            eta: 1.0,
            mu_b: 0.0,
            sigma_b: 4.0,
            mu_q: 0.0,
            sigma_q: 4.0,
            mu_kl: [0.0, 0.0],
            iw_dof: 5.0,
            iw_scale: Mat2::scaled_identity(4.0),
            epsilon: DEFAULT_EPSILON,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_groups;
        if k == 0 {
            return Err(Error::Parameter("n_groups must be at least 1".into()));
        }
        if self.alpha.len() != k {
            return Err(Error::Parameter(format!(
                "alpha has {} entries but n_groups = {k}",
                self.alpha.len()
            )));
        }
        if self.alpha.iter().any(|&a| !(a > 0.0 && a.is_finite())) {
            return Err(Error::Parameter("alpha entries must be positive".into()));
        }
        for (name, v) in [
            ("zeta", self.zeta),
            ("eta", self.eta),
            ("sigma_b", self.sigma_b),
            ("sigma_q", self.sigma_q),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Parameter(format!("{name} must be positive, got {v}")));
            }
        }
        for (name, v) in [
            ("mu_b", self.mu_b),
            ("mu_q", self.mu_q),
            ("mu_kl[0]", self.mu_kl[0]),
            ("mu_kl[1]", self.mu_kl[1]),
        ] {
            if !v.is_finite() {
                return Err(Error::Parameter(format!("{name} must be finite")));
            }
        }
        if !(self.iw_dof > 1.0 && self.iw_dof.is_finite()) {
            return Err(Error::Parameter(format!(
                "iw_dof must exceed 1, got {}",
                self.iw_dof
            )));
        }
        if !self.iw_scale.is_spd() {
            return Err(Error::Parameter(
                "iw_scale must be symmetric positive definite".into(),
            ));
        }
        if self.epsilon.is_nan() || self.epsilon == f64::INFINITY {
            return Err(Error::Parameter("epsilon must be a finite logit or -inf".into()));
        }
        Ok(())
    }

    pub fn alpha_sum(&self) -> f64 {
        self.alpha.iter().sum()
    }
}

impl Default for Hyperparams {
    fn default() -> Self {
        Hyperparams::with_groups(2)
    }
}

/// Index of the unordered pair `{l, k}`, `l != k`, in the packed upper triangle.
#[inline]
pub fn pair_index(k_groups: usize, l: usize, k: usize) -> usize {
    let (a, b) = if l < k { (l, k) } else { (k, l) };
    a * (2 * k_groups - a - 1) / 2 + (b - a - 1)
}

/// Compatibility matrix `B`, across-community adjustment `Q`, and the
/// covariance of each off-diagonal pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompatibilityParams {
    n_groups: usize,
    b: Vec<f64>,
    q: Vec<f64>,
    sigma_pairs: Vec<Mat2>,
}

impl CompatibilityParams {
    /// Zero `B`, zero `Q`, identity pair covariances.
    pub fn zeros(k: usize) -> Self {
        CompatibilityParams {
            n_groups: k,
            b: vec![0.0; k * k],
            q: vec![0.0; k],
            sigma_pairs: vec![Mat2::IDENTITY; k * k.saturating_sub(1) / 2],
        }
    }

    /// `b` is row-major `K x K`: `b[l * K + k] = B[l][k]`.
    pub fn new(k: usize, b: Vec<f64>, q: Vec<f64>, sigma_pairs: Vec<Mat2>) -> Result<Self> {
        let p = CompatibilityParams {
            n_groups: k,
            b,
            q,
            sigma_pairs,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.n_groups;
        if self.b.len() != k * k || self.q.len() != k {
            return Err(Error::Dimension(format!(
                "B/Q shapes do not match K = {k}"
            )));
        }
        if self.sigma_pairs.len() != k * k.saturating_sub(1) / 2 {
            return Err(Error::Dimension(format!(
                "expected {} pair covariances, found {}",
                k * k.saturating_sub(1) / 2,
                self.sigma_pairs.len()
            )));
        }
        if self.b.iter().chain(self.q.iter()).any(|v| !v.is_finite()) {
            return Err(Error::Numeric("B and Q must be finite".into()));
        }
        if let Some(bad) = self.sigma_pairs.iter().find(|s| !s.is_spd()) {
            return Err(Error::Numeric(format!(
                "pair covariance {:?} is not symmetric positive definite",
                bad.0
            )));
        }
        Ok(())
    }

    #[inline]
    pub fn n_groups(&self) -> usize {
        self.n_groups
    }

    #[inline]
    pub fn b(&self, l: usize, k: usize) -> f64 {
        self.b[l * self.n_groups + k]
    }

    #[inline]
    pub fn set_b(&mut self, l: usize, k: usize, v: f64) {
        self.b[l * self.n_groups + k] = v;
    }

    #[inline]
    pub fn q(&self, k: usize) -> f64 {
        self.q[k]
    }

    #[inline]
    pub fn set_q(&mut self, k: usize, v: f64) {
        self.q[k] = v;
    }

    pub fn b_matrix(&self) -> &[f64] {
        &self.b
    }

    pub fn q_vector(&self) -> &[f64] {
        &self.q
    }

    /// Covariance of `(B[a][b], B[b][a])` for `a = min(l, k)`, `b = max(l, k)`.
    #[inline]
    pub fn sigma(&self, l: usize, k: usize) -> &Mat2 {
        &self.sigma_pairs[pair_index(self.n_groups, l, k)]
    }

    pub fn set_sigma(&mut self, l: usize, k: usize, s: Mat2) {
        let idx = pair_index(self.n_groups, l, k);
        self.sigma_pairs[idx] = s;
    }

    pub fn sigma_pairs(&self) -> &[Mat2] {
        &self.sigma_pairs
    }
}

/// Per-slice mixed memberships `theta[t][i]`, only materialised by the
/// generative simulator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MembershipState {
    pub n_entities: usize,
    pub n_slices: usize,
    pub n_groups: usize,
    pub theta: Vec<f64>,
}

impl MembershipState {
    pub fn row(&self, t: usize, i: usize) -> &[f64] {
        let start = (t * self.n_entities + i) * self.n_groups;
        &self.theta[start..start + self.n_groups]
    }

    pub fn validate(&self) -> Result<()> {
        for t in 0..self.n_slices {
            for i in 0..self.n_entities {
                let row = self.row(t, i);
                let s: f64 = row.iter().sum();
                if row.iter().any(|&v| v < 0.0) || (s - 1.0).abs() > 1e-12 {
                    return Err(Error::Numeric(format!(
                        "membership ({t}, {i}) is not on the simplex"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Sender and receiver group indicators per directed slot.
///
/// `send[(t, i, j)]` is `g_{i->j}` (drawn from `theta[t][i]`) and
/// `recv[(t, i, j)]` is `g_{i<-j}` (drawn from `theta[t][j]`). Entries for
/// unobserved slots are kept at 0 and never read.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupAssignments {
    pub n_entities: usize,
    pub n_slices: usize,
    pub send: Vec<u32>,
    pub recv: Vec<u32>,
}

impl GroupAssignments {
    pub fn zeros(n_entities: usize, n_slices: usize) -> Self {
        let len = n_slices * n_entities * n_entities;
        GroupAssignments {
            n_entities,
            n_slices,
            send: vec![0; len],
            recv: vec![0; len],
        }
    }

    #[inline]
    pub fn index(&self, t: usize, i: usize, j: usize) -> usize {
        (t * self.n_entities + i) * self.n_entities + j
    }

    #[inline]
    pub fn send(&self, t: usize, i: usize, j: usize) -> usize {
        self.send[self.index(t, i, j)] as usize
    }

    #[inline]
    pub fn recv(&self, t: usize, i: usize, j: usize) -> usize {
        self.recv[self.index(t, i, j)] as usize
    }

    pub fn validate(&self, k: usize) -> Result<()> {
        if self.send.iter().chain(self.recv.iter()).any(|&g| g as usize >= k) {
            return Err(Error::Dimension(format!("group index outside [0, {k})")));
        }
        Ok(())
    }
}

/// What the link function needs to know about a single slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LinkContext {
    pub same_community: bool,
    pub send_group: usize,
    pub recv_group: usize,
}

/// Piecewise edge logit. Checks group indices against `params`.
pub fn link_logit(ctx: LinkContext, params: &CompatibilityParams, eps: f64) -> Result<f64> {
    let k = params.n_groups();
    if ctx.send_group >= k || ctx.recv_group >= k {
        return Err(Error::Dimension(format!(
            "groups ({}, {}) outside [0, {k})",
            ctx.send_group, ctx.recv_group
        )));
    }
    Ok(logit_unchecked(
        ctx.same_community,
        ctx.send_group,
        ctx.recv_group,
        params,
        eps,
    ))
}

#[inline]
pub(crate) fn logit_unchecked(
    same: bool,
    l: usize,
    k: usize,
    params: &CompatibilityParams,
    eps: f64,
) -> f64 {
    if same {
        params.b(l, k)
    } else if l == k {
        params.b(k, k) + params.q(k)
    } else {
        eps
    }
}

/// Logistic sigmoid; rejects non-finite input.
pub fn link_probability(y: f64) -> Result<f64> {
    if !y.is_finite() {
        return Err(Error::Numeric(format!("non-finite logit {y}")));
    }
    Ok(sigmoid(y))
}

#[inline]
pub fn sigmoid(y: f64) -> f64 {
    if y >= 0.0 {
        1.0 / (1.0 + (-y).exp())
    } else {
        let e = y.exp();
        e / (1.0 + e)
    }
}

/// `log(1 + e^y)` without overflow.
#[inline]
pub fn softplus(y: f64) -> f64 {
    if y > 0.0 {
        y + (-y).exp().ln_1p()
    } else {
        y.exp().ln_1p()
    }
}

/// `log p(x | y)` for a Bernoulli-logistic observation.
#[inline]
pub fn edge_loglik(x: u8, y: f64) -> f64 {
    if y == f64::NEG_INFINITY {
        return if x == 1 { f64::NEG_INFINITY } else { 0.0 };
    }
    if x == 1 {
        y - softplus(y)
    } else {
        -softplus(y)
    }
}
