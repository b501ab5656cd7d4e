use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::dist::{sample_inverse_wishart2, sample_mvn2, sample_normal};
use crate::error::{Error, Result};
use crate::model::{
    logit_unchecked, CompatibilityParams, GroupAssignments, Hyperparams,
    TemporalNetwork,
};
use crate::partition::{sample_chain_prior, Partition, PartitionChain};
use crate::pg::PgSampler;

/// Which branch of the link function a slot currently uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SlotCell {
    /// Same community, sender group `l`, receiver group `k`.
    Within(usize, usize),
    /// Different communities, both groups `k`.
    Cross(usize),
    /// Different communities and groups: fixed logit floor.
    Floor,
}

impl SlotCell {
    #[inline]
    pub fn classify(same: bool, l: usize, k: usize) -> Self {
        if same {
            SlotCell::Within(l, k)
        } else if l == k {
            SlotCell::Cross(k)
        } else {
            SlotCell::Floor
        }
    }
}

/// Sufficient statistics over the likelihood slots.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct CountCaches {
    n_groups: usize,
    n_entities: usize,
    /// `K x K`, within-community slots by (sender, receiver) group.
    pub n_lk: Vec<u64>,
    pub n1_lk: Vec<u64>,
    /// Across-community slots whose two groups coincide.
    pub n_cross: Vec<u64>,
    pub n1_cross: Vec<u64>,
    /// `(t, i, k)`: slots where `i` sends with group `k`.
    pub n_send: Vec<u32>,
    /// `(t, j, k)`: slots where `j` receives with group `k`.
    pub n_recv: Vec<u32>,
}

impl CountCaches {
    fn empty(n_entities: usize, n_slices: usize, k: usize) -> Self {
        CountCaches {
            n_groups: k,
            n_entities,
            n_lk: vec![0; k * k],
            n1_lk: vec![0; k * k],
            n_cross: vec![0; k],
            n1_cross: vec![0; k],
            n_send: vec![0; n_slices * n_entities * k],
            n_recv: vec![0; n_slices * n_entities * k],
        }
    }

    pub fn recount(
        network: &TemporalNetwork,
        chain: &PartitionChain,
        groups: &GroupAssignments,
        k: usize,
    ) -> Self {
        let mut c = CountCaches::empty(network.n_entities(), network.n_slices(), k);
        for (t, i, j) in network.modelled_slots() {
            let (l, r) = (groups.send(t, i, j), groups.recv(t, i, j));
            let cell = SlotCell::classify(chain.same_community(t, i, j), l, r);
            c.add_cell(cell, network.edge(t, i, j));
            *c.send_mut(t, i, l) += 1;
            *c.recv_mut(t, j, r) += 1;
        }
        c
    }

    #[inline]
    pub fn entity_index(&self, t: usize, i: usize, k: usize) -> usize {
        (t * self.n_entities + i) * self.n_groups + k
    }

    #[inline]
    pub fn send(&self, t: usize, i: usize, k: usize) -> u32 {
        self.n_send[self.entity_index(t, i, k)]
    }

    #[inline]
    pub fn recv(&self, t: usize, i: usize, k: usize) -> u32 {
        self.n_recv[self.entity_index(t, i, k)]
    }

    /// Group usage of entity `i` at `t` over both roles.
    #[inline]
    pub fn usage(&self, t: usize, i: usize, k: usize) -> u32 {
        self.send(t, i, k) + self.recv(t, i, k)
    }

    #[inline]
    pub(crate) fn send_mut(&mut self, t: usize, i: usize, k: usize) -> &mut u32 {
        let idx = self.entity_index(t, i, k);
        &mut self.n_send[idx]
    }

    #[inline]
    pub(crate) fn recv_mut(&mut self, t: usize, i: usize, k: usize) -> &mut u32 {
        let idx = self.entity_index(t, i, k);
        &mut self.n_recv[idx]
    }

    #[inline]
    pub(crate) fn add_cell(&mut self, cell: SlotCell, x: u8) {
        match cell {
            SlotCell::Within(l, k) => {
                let idx = l * self.n_groups + k;
                self.n_lk[idx] += 1;
                self.n1_lk[idx] += u64::from(x);
            }
            SlotCell::Cross(k) => {
                self.n_cross[k] += 1;
                self.n1_cross[k] += u64::from(x);
            }
            SlotCell::Floor => {}
        }
    }

    #[inline]
    pub(crate) fn remove_cell(&mut self, cell: SlotCell, x: u8) {
        match cell {
            SlotCell::Within(l, k) => {
                let idx = l * self.n_groups + k;
                self.n_lk[idx] -= 1;
                self.n1_lk[idx] -= u64::from(x);
            }
            SlotCell::Cross(k) => {
                self.n_cross[k] -= 1;
                self.n1_cross[k] -= u64::from(x);
            }
            SlotCell::Floor => {}
        }
    }

    /// `(n, n1)` for within-community cell `(l, k)`.
    #[inline]
    pub fn within(&self, l: usize, k: usize) -> (u64, u64) {
        let idx = l * self.n_groups + k;
        (self.n_lk[idx], self.n1_lk[idx])
    }

    #[inline]
    pub fn cross(&self, k: usize) -> (u64, u64) {
        (self.n_cross[k], self.n1_cross[k])
    }
}

/// Latest Pólya-Gamma auxiliaries, kept for inspection and checkpoints.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PgAux {
    /// `K x K`; off-diagonal cells only.
    pub offdiag: Vec<f64>,
    /// Per group: within-community same-group cell.
    pub within: Vec<f64>,
    /// Per group: across-community same-group cell.
    pub cross: Vec<f64>,
}

impl PgAux {
    fn zeros(k: usize) -> Self {
        PgAux {
            offdiag: vec![0.0; k * k],
            within: vec![0.0; k],
            cross: vec![0.0; k],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Mode {
    /// Dynamic communities with fragmentation-coagulation.
    #[default]
    Fc,
    /// Everyone in one community at every slice: a plain MMSB.
    Vanilla,
}

/// Which blocks a sweep updates. Disabled blocks stay clamped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct UpdateMask {
    pub offdiag: bool,
    pub diag: bool,
    pub sigma: bool,
    pub groups: bool,
    pub chains: bool,
}

impl UpdateMask {
    pub const ALL: UpdateMask = UpdateMask {
        offdiag: true,
        diag: true,
        sigma: true,
        groups: true,
        chains: true,
    };

    pub const NONE: UpdateMask = UpdateMask {
        offdiag: false,
        diag: false,
        sigma: false,
        groups: false,
        chains: false,
    };
}

impl Default for UpdateMask {
    fn default() -> Self {
        UpdateMask::ALL
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SamplerOptions {
    pub mode: Mode,
    pub pg: PgSampler,
    pub updates: UpdateMask,
}

impl SamplerOptions {
    pub fn vanilla() -> Self {
        SamplerOptions {
            mode: Mode::Vanilla,
            ..Default::default()
        }
    }

    /// Updates that actually run: vanilla mode never touches the chain.
    pub fn effective_updates(&self) -> UpdateMask {
        let mut u = self.updates;
        if self.mode == Mode::Vanilla {
            u.chains = false;
        }
        u
    }
}

/// Serialized ChaCha position: seed, stream and word position.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RngState {
    pub seed: [u8; 32],
    pub stream: u64,
    /// `u128` as a decimal string; JSON numbers cannot hold it.
    pub word_pos: String,
}

impl RngState {
    pub fn capture(rng: &ChaCha8Rng) -> Self {
        RngState {
            seed: rng.get_seed(),
            stream: rng.get_stream(),
            word_pos: rng.get_word_pos().to_string(),
        }
    }

    pub fn restore(&self) -> Result<ChaCha8Rng> {
        let pos: u128 = self
            .word_pos
            .parse()
            .map_err(|e| Error::Data(format!("bad RNG word position {:?}: {e}", self.word_pos)))?;
        let mut rng = ChaCha8Rng::from_seed(self.seed);
        rng.set_stream(self.stream);
        rng.set_word_pos(pos);
        Ok(rng)
    }
}

/// Everything the Gibbs sampler updates, plus its RNG stream.
///
/// Count caches are derived data: they are rebuilt on deserialization and
/// maintained incrementally by the conditionals.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "StateRepr", into = "StateRepr")]
pub struct SamplerState {
    network: TemporalNetwork,
    hyper: Hyperparams,
    pub(crate) chain: PartitionChain,
    pub(crate) groups: GroupAssignments,
    pub(crate) compat: CompatibilityParams,
    pub(crate) pg_aux: PgAux,
    pub(crate) counts: CountCaches,
    options: SamplerOptions,
    pub(crate) rng: ChaCha8Rng,
    pub(crate) iteration: u64,
}

#[derive(Serialize, Deserialize)]
struct StateRepr {
    network: TemporalNetwork,
    hyper: Hyperparams,
    chain: PartitionChain,
    groups: GroupAssignments,
    compat: CompatibilityParams,
    pg_aux: PgAux,
    options: SamplerOptions,
    rng: RngState,
    iteration: u64,
}

impl From<SamplerState> for StateRepr {
    fn from(s: SamplerState) -> Self {
        StateRepr {
            rng: RngState::capture(&s.rng),
            network: s.network,
            hyper: s.hyper,
            chain: s.chain,
            groups: s.groups,
            compat: s.compat,
            pg_aux: s.pg_aux,
            options: s.options,
            iteration: s.iteration,
        }
    }
}

impl TryFrom<StateRepr> for SamplerState {
    type Error = Error;

    fn try_from(r: StateRepr) -> Result<Self> {
        let rng = r.rng.restore()?;
        let mut s = SamplerState::from_parts(
            r.network, r.hyper, r.chain, r.groups, r.compat, r.options, 0,
        )?;
        s.rng = rng;
        s.pg_aux = r.pg_aux;
        s.iteration = r.iteration;
        Ok(s)
    }
}

impl SamplerState {
    /// Starting state: one CRP partition repeated across slices (a single
    /// community in vanilla mode), uniform groups, and compatibility
    /// parameters drawn from their priors.
    pub fn initialize(
        network: TemporalNetwork,
        hyper: Hyperparams,
        options: SamplerOptions,
        seed: u64,
    ) -> Result<Self> {
        network.validate()?;
        hyper.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = network.n_entities();
        let t_slices = network.n_slices();
        let k = hyper.n_groups;

        let chain = match options.mode {
            Mode::Vanilla => PartitionChain::constant(Partition::one_block(n), t_slices),
            Mode::Fc => {
                let first = sample_chain_prior(n, 1, hyper.zeta, hyper.eta, &mut rng)?;
                PartitionChain::constant(first.coarse(0).clone(), t_slices)
            }
        };

        let mut groups = GroupAssignments::zeros(n, t_slices);
        for (t, i, j) in network.modelled_slots() {
            let idx = groups.index(t, i, j);
            groups.send[idx] = rand::Rng::random_range(&mut rng, 0..k as u32);
            groups.recv[idx] = rand::Rng::random_range(&mut rng, 0..k as u32);
        }

        let compat = sample_compat_prior(&hyper, &mut rng)?;
        let mut state = SamplerState::from_parts(network, hyper, chain, groups, compat, options, 0)?;
        state.rng = rng;
        Ok(state)
    }

    /// Assembles a state from explicit values; `seed` starts the RNG stream.
    pub fn from_parts(
        network: TemporalNetwork,
        hyper: Hyperparams,
        chain: PartitionChain,
        groups: GroupAssignments,
        compat: CompatibilityParams,
        options: SamplerOptions,
        seed: u64,
    ) -> Result<Self> {
        network.validate()?;
        hyper.validate()?;
        chain.validate()?;
        compat.validate()?;
        let k = hyper.n_groups;
        if compat.n_groups() != k {
            return Err(Error::Dimension(format!(
                "compatibility parameters have {} groups, hyperparameters {k}",
                compat.n_groups()
            )));
        }
        if chain.n_entities() != network.n_entities() || chain.n_slices() != network.n_slices() {
            return Err(Error::Dimension("chain shape does not match the network".into()));
        }
        if groups.n_entities != network.n_entities() || groups.n_slices != network.n_slices() {
            return Err(Error::Dimension("group assignments do not match the network".into()));
        }
        groups.validate(k)?;
        if options.mode == Mode::Vanilla && chain.communities_per_slice().iter().any(|&c| c != 1) {
            return Err(Error::Parameter(
                "vanilla mode needs a single community at every slice".into(),
            ));
        }
        let counts = CountCaches::recount(&network, &chain, &groups, k);
        Ok(SamplerState {
            network,
            hyper,
            chain,
            groups,
            compat,
            pg_aux: PgAux::zeros(k),
            counts,
            options,
            rng: ChaCha8Rng::seed_from_u64(seed),
            iteration: 0,
        })
    }

    pub fn network(&self) -> &TemporalNetwork {
        &self.network
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    pub fn chain(&self) -> &PartitionChain {
        &self.chain
    }

    pub fn groups(&self) -> &GroupAssignments {
        &self.groups
    }

    pub fn compat(&self) -> &CompatibilityParams {
        &self.compat
    }

    pub fn pg_aux(&self) -> &PgAux {
        &self.pg_aux
    }

    pub fn counts(&self) -> &CountCaches {
        &self.counts
    }

    pub fn options(&self) -> &SamplerOptions {
        &self.options
    }

    pub fn iteration(&self) -> u64 {
        self.iteration
    }

    pub fn n_groups(&self) -> usize {
        self.hyper.n_groups
    }

    pub fn rng_mut(&mut self) -> &mut ChaCha8Rng {
        &mut self.rng
    }

    pub fn set_options(&mut self, options: SamplerOptions) {
        self.options = options;
    }

    pub fn set_chain(&mut self, chain: PartitionChain) -> Result<()> {
        chain.validate()?;
        if chain.n_entities() != self.network.n_entities()
            || chain.n_slices() != self.network.n_slices()
        {
            return Err(Error::Dimension("chain shape does not match the network".into()));
        }
        self.chain = chain;
        self.refresh_counts();
        Ok(())
    }

    pub fn set_groups(&mut self, groups: GroupAssignments) -> Result<()> {
        groups.validate(self.n_groups())?;
        if groups.n_entities != self.network.n_entities() || groups.n_slices != self.network.n_slices() {
            return Err(Error::Dimension("group assignments do not match the network".into()));
        }
        self.groups = groups;
        self.refresh_counts();
        Ok(())
    }

    pub fn set_compat(&mut self, compat: CompatibilityParams) -> Result<()> {
        compat.validate()?;
        if compat.n_groups() != self.n_groups() {
            return Err(Error::Dimension("compatibility parameters have the wrong K".into()));
        }
        self.compat = compat;
        Ok(())
    }

    /// Replaces the values of the modelled slots (mask unchanged), e.g. to
    /// resimulate data from the current state.
    pub fn set_network(&mut self, network: TemporalNetwork) -> Result<()> {
        network.validate()?;
        if network.n_entities() != self.network.n_entities()
            || network.n_slices() != self.network.n_slices()
        {
            return Err(Error::Dimension("network shape changed".into()));
        }
        self.network = network;
        self.refresh_counts();
        Ok(())
    }

    fn refresh_counts(&mut self) {
        self.counts = CountCaches::recount(&self.network, &self.chain, &self.groups, self.n_groups());
    }

    /// Full recount compared against the incremental caches.
    pub fn check_counts(&self) -> Result<()> {
        let fresh = CountCaches::recount(&self.network, &self.chain, &self.groups, self.n_groups());
        if fresh != self.counts {
            return Err(Error::Numeric("count caches diverged from a full recount".into()));
        }
        Ok(())
    }

    /// Current link-function branch of a slot.
    #[inline]
    pub fn slot_cell(&self, t: usize, i: usize, j: usize) -> SlotCell {
        SlotCell::classify(
            self.chain.same_community(t, i, j),
            self.groups.send(t, i, j),
            self.groups.recv(t, i, j),
        )
    }

    /// Current logit of a slot.
    #[inline]
    pub fn slot_logit(&self, t: usize, i: usize, j: usize) -> f64 {
        logit_unchecked(
            self.chain.same_community(t, i, j),
            self.groups.send(t, i, j),
            self.groups.recv(t, i, j),
            &self.compat,
            self.hyper.epsilon,
        )
    }
}

/// Draws `sigma`, `B` and `Q` from their priors.
pub fn sample_compat_prior<R: rand::Rng + ?Sized>(
    hyper: &Hyperparams,
    rng: &mut R,
) -> Result<CompatibilityParams> {
    let k = hyper.n_groups;
    let mut compat = CompatibilityParams::zeros(k);
    for l in 0..k {
        for m in (l + 1)..k {
            let sigma = sample_inverse_wishart2(rng, hyper.iw_dof, &hyper.iw_scale)?;
            let pair = sample_mvn2(rng, hyper.mu_kl, &sigma)?;
            compat.set_sigma(l, m, sigma);
            compat.set_b(l, m, pair[0]);
            compat.set_b(m, l, pair[1]);
        }
    }
    for l in 0..k {
        compat.set_b(l, l, sample_normal(rng, hyper.mu_b, hyper.sigma_b));
    }
    for l in 0..k {
        compat.set_q(l, sample_normal(rng, hyper.mu_q, hyper.sigma_q));
    }
    debug_assert_eq!(compat.sigma_pairs().len(), k * (k - 1) / 2);
    Ok(compat)
}
