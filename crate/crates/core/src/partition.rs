//! Discrete fragmentation-coagulation process over community partitions.
//!
//! A chain over `T` slices holds one coarse partition per slice (the
//! communities that enter the likelihood) and one fine partition per boundary
//! between consecutive slices. Coarse slice 0 is a CRP(zeta) draw; at every
//! boundary each coarse community splits by an independent CRP(zeta)
//! (fragmentation) and the resulting fine communities are regrouped by a
//! CRP(eta) whose customers are the fine communities themselves
//! (coagulation).

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::dist::ln_gamma;
use crate::error::{Error, Result};

/// Relabels communities by order of first appearance.
pub fn canonicalize(labels: &[usize]) -> Vec<usize> {
    let mut map: Vec<(usize, usize)> = Vec::new();
    labels
        .iter()
        .map(|&l| match map.iter().find(|(from, _)| *from == l) {
            Some(&(_, to)) => to,
            None => {
                let to = map.len();
                map.push((l, to));
                to
            }
        })
        .collect()
}

/// A set partition of `N` entities stored as canonical labels.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct Partition {
    labels: Vec<usize>,
}

impl TryFrom<Vec<usize>> for Partition {
    type Error = Error;

    fn try_from(labels: Vec<usize>) -> Result<Self> {
        let p = Partition::from_labels(&labels);
        if p.labels != labels {
            return Err(Error::Data(format!(
                "partition labels {labels:?} are not canonical"
            )));
        }
        Ok(p)
    }
}

impl From<Partition> for Vec<usize> {
    fn from(p: Partition) -> Self {
        p.labels
    }
}

impl Partition {
    pub fn from_labels(labels: &[usize]) -> Self {
        Partition {
            labels: canonicalize(labels),
        }
    }

    pub fn one_block(n: usize) -> Self {
        Partition { labels: vec![0; n] }
    }

    pub fn singletons(n: usize) -> Self {
        Partition {
            labels: (0..n).collect(),
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    #[inline]
    pub fn label(&self, i: usize) -> usize {
        self.labels[i]
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn n_blocks(&self) -> usize {
        self.labels.iter().copied().max().map_or(0, |m| m + 1)
    }

    pub fn block_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_blocks()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.n_blocks()];
        for (i, &l) in self.labels.iter().enumerate() {
            blocks[l].push(i);
        }
        blocks
    }

    /// True if every block of `self` lies inside one block of `coarser`.
    pub fn refines(&self, coarser: &Partition) -> bool {
        if self.len() != coarser.len() {
            return false;
        }
        let mut image: Vec<Option<usize>> = vec![None; self.n_blocks()];
        for (&f, &c) in self.labels.iter().zip(coarser.labels.iter()) {
            match image[f] {
                None => image[f] = Some(c),
                Some(prev) if prev != c => return false,
                Some(_) => {}
            }
        }
        true
    }

    /// The partition induced on `entities` (in the given order).
    pub fn restrict(&self, entities: &[usize]) -> Partition {
        let labels: Vec<usize> = entities.iter().map(|&i| self.labels[i]).collect();
        Partition::from_labels(&labels)
    }
}

/// Coarse partitions per slice and fine partitions per boundary.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct PartitionChain {
    coarse: Vec<Partition>,
    fine: Vec<Partition>,
}

impl PartitionChain {
    pub fn new(coarse: Vec<Partition>, fine: Vec<Partition>) -> Result<Self> {
        let chain = PartitionChain { coarse, fine };
        chain.validate()?;
        Ok(chain)
    }

    /// The same partition at every slice with no fragmentation.
    pub fn constant(p: Partition, n_slices: usize) -> Self {
        PartitionChain {
            coarse: vec![p.clone(); n_slices],
            fine: vec![p; n_slices.saturating_sub(1)],
        }
    }

    #[inline]
    pub fn n_slices(&self) -> usize {
        self.coarse.len()
    }

    #[inline]
    pub fn n_entities(&self) -> usize {
        self.coarse.first().map_or(0, Partition::len)
    }

    #[inline]
    pub fn coarse(&self, t: usize) -> &Partition {
        &self.coarse[t]
    }

    #[inline]
    pub fn fine(&self, t: usize) -> &Partition {
        &self.fine[t]
    }

    pub fn coarse_partitions(&self) -> &[Partition] {
        &self.coarse
    }

    pub fn fine_partitions(&self) -> &[Partition] {
        &self.fine
    }

    /// Whether entities `i` and `j` share a coarse community at slice `t`.
    #[inline]
    pub fn same_community(&self, t: usize, i: usize, j: usize) -> bool {
        self.coarse[t].labels[i] == self.coarse[t].labels[j]
    }

    pub fn validate(&self) -> Result<()> {
        if self.coarse.is_empty() {
            return Err(Error::Parameter("chain needs at least one slice".into()));
        }
        if self.fine.len() + 1 != self.coarse.len() {
            return Err(Error::Dimension(format!(
                "chain with {} coarse partitions needs {} fine partitions, found {}",
                self.coarse.len(),
                self.coarse.len() - 1,
                self.fine.len()
            )));
        }
        let n = self.n_entities();
        if self
            .coarse
            .iter()
            .chain(self.fine.iter())
            .any(|p| p.len() != n)
        {
            return Err(Error::Dimension("partitions differ in size".into()));
        }
        for (t, f) in self.fine.iter().enumerate() {
            if !f.refines(&self.coarse[t]) {
                return Err(Error::Data(format!(
                    "fine partition {t} does not refine coarse partition {t}"
                )));
            }
            if !f.refines(&self.coarse[t + 1]) {
                return Err(Error::Data(format!(
                    "fine partition {t} does not refine coarse partition {}",
                    t + 1
                )));
            }
        }
        Ok(())
    }

    pub fn is_valid(&self) -> bool {
        self.validate().is_ok()
    }

    /// The chain induced on a subset of entities.
    pub fn restrict(&self, entities: &[usize]) -> PartitionChain {
        PartitionChain {
            coarse: self.coarse.iter().map(|p| p.restrict(entities)).collect(),
            fine: self.fine.iter().map(|p| p.restrict(entities)).collect(),
        }
    }

    /// Overwrites one entity's labels and re-canonicalises. `None` places
    /// the entity in a fresh community. Validity is the caller's concern.
    pub(crate) fn assign_entity(
        &mut self,
        entity: usize,
        coarse: &[Option<usize>],
        fine: &[Option<usize>],
    ) {
        let n = self.n_entities();
        for (p, choice) in self
            .coarse
            .iter_mut()
            .zip(coarse)
            .chain(self.fine.iter_mut().zip(fine))
        {
            let mut labels = p.labels.clone();
            labels[entity] = choice.unwrap_or(n);
            *p = Partition::from_labels(&labels);
        }
    }

    pub fn communities_per_slice(&self) -> Vec<usize> {
        self.coarse.iter().map(Partition::n_blocks).collect()
    }
}

fn check_concentration(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v.is_finite()) {
        return Err(Error::Parameter(format!(
            "{name} must be positive and finite, got {v}"
        )));
    }
    Ok(())
}

/// CRP seating probabilities for one more customer: proportional to the
/// existing table sizes, plus `conc` for a new table (last entry).
fn crp_predictive(sizes: &[usize], conc: f64) -> Vec<f64> {
    let total: usize = sizes.iter().sum();
    let denom = total as f64 + conc;
    sizes
        .iter()
        .map(|&s| s as f64 / denom)
        .chain(std::iter::once(conc / denom))
        .collect()
}

/// Initial-slice kernel: probabilities that the remaining entity joins each
/// existing community (sizes counted without it) or opens a new one (last).
pub fn init_distribution(other_sizes: &[usize], zeta: f64) -> Result<Vec<f64>> {
    check_concentration("zeta", zeta)?;
    if other_sizes.contains(&0) {
        return Err(Error::Parameter("community sizes must be positive".into()));
    }
    Ok(crp_predictive(other_sizes, zeta))
}

/// Fragmentation kernel for an entity whose parent community holds
/// `parent_members` besides it.
///
/// Returns one probability per candidate child community followed by the
/// probability of a new child. Candidates that are not contained in the
/// parent get probability 0. An otherwise empty parent forces a new child.
pub fn frag_distribution(
    parent_members: &[usize],
    children: &[Vec<usize>],
    zeta: f64,
) -> Result<Vec<f64>> {
    check_concentration("zeta", zeta)?;
    let mut out = vec![0.0; children.len() + 1];
    if parent_members.is_empty() {
        out[children.len()] = 1.0;
        return Ok(out);
    }
    let denom = parent_members.len() as f64 + zeta;
    for (h, child) in children.iter().enumerate() {
        let nested = !child.is_empty() && child.iter().all(|m| parent_members.contains(m));
        if nested {
            out[h] = child.len() as f64 / denom;
        }
    }
    out[children.len()] = zeta / denom;
    Ok(out)
}

/// Coagulation kernel.
///
/// `assignment[f]` is the coarse community that fine community `f` joins
/// among the other entities; the fine community holding only the updated
/// entity (if any) is `None`. `fine_of_i` is the updated entity's fine
/// community. Returns probabilities over the `n_coarse` existing coarse
/// communities followed by a new one.
pub fn coal_distribution(
    assignment: &[Option<usize>],
    n_coarse: usize,
    fine_of_i: usize,
    eta: f64,
) -> Result<Vec<f64>> {
    check_concentration("eta", eta)?;
    if fine_of_i >= assignment.len() {
        return Err(Error::Dimension(format!(
            "fine community {fine_of_i} outside {} fine communities",
            assignment.len()
        )));
    }
    let mut out = vec![0.0; n_coarse + 1];
    if let Some(e) = assignment[fine_of_i] {
        if e >= n_coarse {
            return Err(Error::Dimension(format!(
                "coarse community {e} outside {n_coarse}"
            )));
        }
        out[e] = 1.0;
        return Ok(out);
    }
    let mut omega = vec![0usize; n_coarse];
    for (f, a) in assignment.iter().enumerate() {
        if f == fine_of_i {
            continue;
        }
        match a {
            Some(e) if *e < n_coarse => omega[*e] += 1,
            Some(e) => {
                return Err(Error::Dimension(format!(
                    "coarse community {e} outside {n_coarse}"
                )))
            }
            None => {
                return Err(Error::Parameter(format!(
                    "fine community {f} has no coarse assignment"
                )))
            }
        }
    }
    Ok(crp_predictive(&omega, eta))
}

/// Fine communities (among the other entities) at one boundary.
#[derive(Debug, Clone)]
struct BoundaryFrame {
    sizes: Vec<usize>,
    labels: Vec<usize>,
    /// Coarse state at the earlier slice.
    parent: Vec<usize>,
    /// Coarse state at the later slice.
    child: Vec<usize>,
    /// Per later-slice coarse state: number of fine communities merged into it.
    omega: Vec<usize>,
}

#[derive(Debug, Clone)]
struct SliceFrame {
    sizes: Vec<usize>,
    labels: Vec<usize>,
}

/// The state spaces and kernels seen by one entity when every other
/// entity's labels are held fixed.
///
/// At slice `t` the coarse states are the communities of the other entities
/// (indices `0..n_coarse(t)`) plus one "new" state `n_coarse(t)`; boundaries
/// are laid out the same way for fine communities.
#[derive(Debug, Clone)]
pub struct EntityFrame {
    entity: usize,
    n_others: usize,
    slices: Vec<SliceFrame>,
    boundaries: Vec<BoundaryFrame>,
}

fn collect_states(p: &Partition, entity: usize) -> (Vec<usize>, Vec<usize>, Vec<Option<usize>>) {
    let n_labels = p.n_blocks();
    let mut sizes_by_label = vec![0usize; n_labels];
    for (j, &l) in p.labels().iter().enumerate() {
        if j != entity {
            sizes_by_label[l] += 1;
        }
    }
    let mut state_of_label = vec![None; n_labels];
    let mut sizes = Vec::new();
    let mut labels = Vec::new();
    for (l, &s) in sizes_by_label.iter().enumerate() {
        if s > 0 {
            state_of_label[l] = Some(sizes.len());
            sizes.push(s);
            labels.push(l);
        }
    }
    (sizes, labels, state_of_label)
}

impl EntityFrame {
    /// Builds the frame for `entity`. The chain must be valid.
    pub fn new(chain: &PartitionChain, entity: usize) -> Self {
        let n = chain.n_entities();
        let t_slices = chain.n_slices();
        let mut slices = Vec::with_capacity(t_slices);
        let mut slice_maps = Vec::with_capacity(t_slices);
        for t in 0..t_slices {
            let (sizes, labels, map) = collect_states(chain.coarse(t), entity);
            slices.push(SliceFrame { sizes, labels });
            slice_maps.push(map);
        }
        let mut boundaries = Vec::with_capacity(t_slices.saturating_sub(1));
        for t in 0..t_slices.saturating_sub(1) {
            let fine = chain.fine(t);
            let (sizes, labels, _) = collect_states(fine, entity);
            let mut parent = vec![usize::MAX; labels.len()];
            let mut child = vec![usize::MAX; labels.len()];
            let mut state_of_label = vec![usize::MAX; fine.n_blocks()];
            for (s, &l) in labels.iter().enumerate() {
                state_of_label[l] = s;
            }
            for j in (0..n).filter(|&j| j != entity) {
                let s = state_of_label[fine.label(j)];
                if parent[s] == usize::MAX {
                    parent[s] = slice_maps[t][chain.coarse(t).label(j)]
                        .expect("other entity has a coarse state");
                    child[s] = slice_maps[t + 1][chain.coarse(t + 1).label(j)]
                        .expect("other entity has a coarse state");
                }
            }
            let mut omega = vec![0usize; slices[t + 1].sizes.len()];
            for &c in &child {
                omega[c] += 1;
            }
            boundaries.push(BoundaryFrame {
                sizes,
                labels,
                parent,
                child,
                omega,
            });
        }
        EntityFrame {
            entity,
            n_others: n.saturating_sub(1),
            slices,
            boundaries,
        }
    }

    pub fn entity(&self) -> usize {
        self.entity
    }

    pub fn n_slices(&self) -> usize {
        self.slices.len()
    }

    /// Number of existing coarse states at slice `t`; the new state has this index.
    pub fn n_coarse(&self, t: usize) -> usize {
        self.slices[t].sizes.len()
    }

    /// Number of existing fine states at boundary `t`; the new state has this index.
    pub fn n_fine(&self, t: usize) -> usize {
        self.boundaries[t].sizes.len()
    }

    /// Chain label of an existing coarse state.
    pub fn coarse_label(&self, t: usize, state: usize) -> Option<usize> {
        self.slices[t].labels.get(state).copied()
    }

    pub fn fine_label(&self, t: usize, state: usize) -> Option<usize> {
        self.boundaries[t].labels.get(state).copied()
    }

    /// Chain labels of every existing coarse state at `t`.
    pub fn coarse_labels(&self, t: usize) -> &[usize] {
        &self.slices[t].labels
    }

    /// Initial-slice probabilities over coarse states.
    pub fn init_row(&self, zeta: f64) -> Vec<f64> {
        debug_assert_eq!(
            self.slices[0].sizes.iter().sum::<usize>(),
            self.n_others
        );
        crp_predictive(&self.slices[0].sizes, zeta)
    }

    /// Fragmentation probabilities from coarse state `c` at slice `t` to
    /// each fine state at boundary `t`.
    pub fn frag_row(&self, t: usize, c: usize, zeta: f64) -> Vec<f64> {
        let b = &self.boundaries[t];
        let m = b.sizes.len();
        let mut row = vec![0.0; m + 1];
        if c >= self.n_coarse(t) {
            row[m] = 1.0;
            return row;
        }
        let denom = self.slices[t].sizes[c] as f64 + zeta;
        for f in 0..m {
            if b.parent[f] == c {
                row[f] = b.sizes[f] as f64 / denom;
            }
        }
        row[m] = zeta / denom;
        row
    }

    /// Coagulation probabilities from fine state `f` at boundary `t` to each
    /// coarse state at slice `t + 1`.
    pub fn coal_row(&self, t: usize, f: usize, eta: f64) -> Vec<f64> {
        let b = &self.boundaries[t];
        let r = self.n_coarse(t + 1);
        if f < b.sizes.len() {
            let mut row = vec![0.0; r + 1];
            row[b.child[f]] = 1.0;
            return row;
        }
        let total = b.sizes.len() as f64;
        let denom = total + eta;
        b.omega
            .iter()
            .map(|&o| o as f64 / denom)
            .chain(std::iter::once(eta / denom))
            .collect()
    }

    /// The entity's current state sequence in `chain`: coarse states per
    /// slice and fine states per boundary.
    pub fn current_states(&self, chain: &PartitionChain) -> (Vec<usize>, Vec<usize>) {
        let i = self.entity;
        let coarse = (0..self.n_slices())
            .map(|t| {
                let l = chain.coarse(t).label(i);
                self.slices[t]
                    .labels
                    .iter()
                    .position(|&x| x == l)
                    .unwrap_or(self.n_coarse(t))
            })
            .collect();
        let fine = (0..self.boundaries.len())
            .map(|t| {
                let l = chain.fine(t).label(i);
                self.boundaries[t]
                    .labels
                    .iter()
                    .position(|&x| x == l)
                    .unwrap_or(self.n_fine(t))
            })
            .collect();
        (coarse, fine)
    }

    /// Log prior probability of a state sequence for the entity.
    pub fn sequence_logprob(&self, coarse: &[usize], fine: &[usize], zeta: f64, eta: f64) -> f64 {
        let mut lp = self.init_row(zeta)[coarse[0]].ln();
        for t in 0..self.boundaries.len() {
            lp += self.frag_row(t, coarse[t], zeta)[fine[t]].ln();
            lp += self.coal_row(t, fine[t], eta)[coarse[t + 1]].ln();
        }
        lp
    }

    /// Writes a state sequence into `chain` for this entity.
    pub fn apply(&self, chain: &mut PartitionChain, coarse: &[usize], fine: &[usize]) {
        let c: Vec<Option<usize>> = coarse
            .iter()
            .enumerate()
            .map(|(t, &s)| self.coarse_label(t, s))
            .collect();
        let f: Vec<Option<usize>> = fine
            .iter()
            .enumerate()
            .map(|(t, &s)| self.fine_label(t, s))
            .collect();
        chain.assign_entity(self.entity, &c, &f);
    }
}

/// Log prior probability of `entity`'s full label sequence given every
/// other entity's labels: the initial kernel times alternating
/// fragmentation and coagulation kernels. Invalid chains score `-inf`.
pub fn chain_prior_logprob(chain: &PartitionChain, entity: usize, zeta: f64, eta: f64) -> Result<f64> {
    check_concentration("zeta", zeta)?;
    check_concentration("eta", eta)?;
    if entity >= chain.n_entities() {
        return Err(Error::Dimension(format!(
            "entity {entity} outside a chain of {} entities",
            chain.n_entities()
        )));
    }
    if !chain.is_valid() {
        return Ok(f64::NEG_INFINITY);
    }
    let frame = EntityFrame::new(chain, entity);
    let (coarse, fine) = frame.current_states(chain);
    Ok(frame.sequence_logprob(&coarse, &fine, zeta, eta))
}

/// Log of the Ewens sampling formula: the probability that CRP(conc) seats
/// `sum(sizes)` customers at tables of the given sizes.
pub fn crp_log_eppf(sizes: &[usize], conc: f64) -> f64 {
    let n: usize = sizes.iter().sum();
    let k = sizes.len() as f64;
    k * conc.ln() + ln_gamma(conc) - ln_gamma(conc + n as f64)
        + sizes.iter().map(|&s| ln_gamma(s as f64)).sum::<f64>()
}

/// Joint log prior probability of the whole chain.
pub fn chain_log_prior(chain: &PartitionChain, zeta: f64, eta: f64) -> f64 {
    if !chain.is_valid() {
        return f64::NEG_INFINITY;
    }
    let mut lp = crp_log_eppf(&chain.coarse(0).block_sizes(), zeta);
    for t in 0..chain.n_slices() - 1 {
        let coarse = chain.coarse(t);
        let fine = chain.fine(t);
        // fragmentation: per coarse block, CRP over its fine children
        let mut child_sizes: Vec<Vec<usize>> = vec![Vec::new(); coarse.n_blocks()];
        let fine_sizes = fine.block_sizes();
        let mut parent_of_fine = vec![usize::MAX; fine.n_blocks()];
        for i in 0..fine.len() {
            parent_of_fine[fine.label(i)] = coarse.label(i);
        }
        for (f, &size) in fine_sizes.iter().enumerate() {
            child_sizes[parent_of_fine[f]].push(size);
        }
        lp += child_sizes
            .iter()
            .map(|sizes| crp_log_eppf(sizes, zeta))
            .sum::<f64>();
        // coagulation: CRP over fine blocks
        let next = chain.coarse(t + 1);
        let mut merged = vec![0usize; next.n_blocks()];
        let mut seen = vec![false; fine.n_blocks()];
        for i in 0..fine.len() {
            let f = fine.label(i);
            if !seen[f] {
                seen[f] = true;
                merged[next.label(i)] += 1;
            }
        }
        lp += crp_log_eppf(&merged, eta);
    }
    lp
}

/// Sequential CRP seating of `n` customers.
fn seat_crp<R: Rng + ?Sized>(rng: &mut R, n: usize, conc: f64) -> Vec<usize> {
    let mut sizes: Vec<usize> = Vec::new();
    let mut labels = Vec::with_capacity(n);
    for _ in 0..n {
        let w = crp_predictive(&sizes, conc);
        let h = crate::dist::sample_categorical(rng, &w);
        if h == sizes.len() {
            sizes.push(1);
        } else {
            sizes[h] += 1;
        }
        labels.push(h);
    }
    labels
}

/// Draws a chain from the fragmentation-coagulation prior by sequential
/// seating.
pub fn sample_chain_prior<R: Rng + ?Sized>(
    n: usize,
    t_slices: usize,
    zeta: f64,
    eta: f64,
    rng: &mut R,
) -> Result<PartitionChain> {
    check_concentration("zeta", zeta)?;
    check_concentration("eta", eta)?;
    if n == 0 || t_slices == 0 {
        return Err(Error::Parameter(format!(
            "chain needs n >= 1 and t_slices >= 1 (got {n}, {t_slices})"
        )));
    }
    let mut coarse = vec![Partition::from_labels(&seat_crp(rng, n, zeta))];
    let mut fine = Vec::with_capacity(t_slices - 1);
    for _ in 1..t_slices {
        let parent = coarse.last().expect("non-empty");
        let mut fine_labels = vec![0usize; n];
        let mut next_label = 0;
        for block in parent.blocks() {
            let sub = seat_crp(rng, block.len(), zeta);
            let n_sub = sub.iter().copied().max().map_or(0, |m| m + 1);
            for (&member, &s) in block.iter().zip(sub.iter()) {
                fine_labels[member] = next_label + s;
            }
            next_label += n_sub;
        }
        let fine_p = Partition::from_labels(&fine_labels);
        let merge = seat_crp(rng, fine_p.n_blocks(), eta);
        let coarse_labels: Vec<usize> = fine_p.labels().iter().map(|&f| merge[f]).collect();
        fine.push(fine_p);
        coarse.push(Partition::from_labels(&coarse_labels));
    }
    Ok(PartitionChain { coarse, fine })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize(&[2, 2, 0, 1]), vec![0, 0, 1, 2]);
        assert_eq!(canonicalize(&[0, 0, 1, 2]), vec![0, 0, 1, 2]);
        assert_eq!(canonicalize(&[5]), vec![0]);
    }

    #[test]
    fn init_examples() {
        assert_eq!(init_distribution(&[1], 1.0).unwrap(), vec![0.5, 0.5]);
        assert_eq!(
            init_distribution(&[2, 1], 1.0).unwrap(),
            vec![0.5, 0.25, 0.25]
        );
        assert!(matches!(
            init_distribution(&[1], 0.0),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn frag_examples() {
        // parent {1,2,3} without entity 3, children {1}, {2}
        let p = frag_distribution(&[1, 2], &[vec![1], vec![2]], 1.0).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        // singleton parent forces a new child
        assert_eq!(frag_distribution(&[], &[vec![4]], 1.0).unwrap(), vec![0.0, 1.0]);
        // child outside the parent
        let p = frag_distribution(&[1, 2], &[vec![1], vec![5]], 1.0).unwrap();
        assert_eq!(p[1], 0.0);
    }

    #[test]
    fn coal_examples() {
        let p = coal_distribution(&[Some(0), Some(1), Some(1)], 2, 1, 1.0).unwrap();
        assert_eq!(p, vec![0.0, 1.0, 0.0]);
        let p = coal_distribution(&[Some(0), Some(0), Some(1), None], 2, 3, 1.0).unwrap();
        assert_eq!(p, vec![0.5, 0.25, 0.25]);
        let p = coal_distribution(&[Some(0), None], 1, 1, 1e12).unwrap();
        assert!(p[1] > 1.0 - 1e-11);
        assert!(coal_distribution(&[None], 0, 0, -1.0).is_err());
    }

    #[test]
    fn single_slice_reduces_to_init() {
        let chain = PartitionChain::constant(Partition::from_labels(&[0, 0, 1]), 1);
        let lp = chain_prior_logprob(&chain, 2, 1.0, 1.0).unwrap();
        assert!((lp - (1.0f64 / 3.0).ln()).abs() < 1e-15);
    }

    #[test]
    fn invalid_chain_has_zero_probability() {
        let chain = PartitionChain {
            coarse: vec![Partition::from_labels(&[0, 0, 1]), Partition::one_block(3)],
            fine: vec![Partition::one_block(3)],
        };
        assert!(chain.validate().is_err());
        assert_eq!(
            chain_prior_logprob(&chain, 0, 1.0, 1.0).unwrap(),
            f64::NEG_INFINITY
        );
        assert_eq!(chain_log_prior(&chain, 1.0, 1.0), f64::NEG_INFINITY);
    }

    #[test]
    fn single_entity_chain_is_certain() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let chain = sample_chain_prior(1, 4, 1.0, 1.0, &mut rng).unwrap();
        assert!(chain.coarse_partitions().iter().all(|p| p.labels() == [0]));
        assert_eq!(chain_prior_logprob(&chain, 0, 1.0, 1.0).unwrap(), 0.0);
    }

    #[test]
    fn tiny_zeta_never_fragments() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let chain = sample_chain_prior(6, 3, 1e-12, 1.0, &mut rng).unwrap();
            for t in 0..2 {
                assert_eq!(chain.fine(t), chain.coarse(t));
            }
        }
    }

    #[test]
    fn sampled_chains_are_valid_with_finite_probability() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..300 {
            let chain = sample_chain_prior(7, 4, 0.8, 1.7, &mut rng).unwrap();
            chain.validate().unwrap();
            for i in 0..7 {
                assert!(chain_prior_logprob(&chain, i, 0.8, 1.7).unwrap().is_finite());
            }
            assert!(chain_log_prior(&chain, 0.8, 1.7).is_finite());
        }
    }

    #[test]
    fn partition_serde_rejects_non_canonical() {
        let ok: Partition = serde_json::from_str("[0,1,0]").unwrap();
        assert_eq!(ok.n_blocks(), 2);
        assert!(serde_json::from_str::<Partition>("[1,0]").is_err());
    }
}
