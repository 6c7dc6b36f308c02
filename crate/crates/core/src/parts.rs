//! The part-of relation, equivalence, part enumeration and coexistence.
//!
//! `α → β` holds when `α = f(β)` for a surjection `f: Ω_β → Ω_α`, comparing
//! at the level of the lower-type entity: an observable is compared with
//! `Î` or `M^∧∧`, an instrument with `M̂`. Two measurement models are
//! compared through their probe observables when they share `(H, K, η, ν)`.

use indexmap::IndexMap;

use crate::effects::{ensure_same_dim, DensityState, Effect, StateKind};
use crate::error::{Error, Result};
use crate::instruments::Instrument;
use crate::labels::OutcomeLabel;
use crate::linalg::{self, frobenius_distance, trace_re, CMatrix, Tolerance};
use crate::models::MeasurementModel;
use crate::observables::Observable;
use crate::scalar::Real;
use crate::surjection::Surjection;

/// Default cap on parent outcomes for [`enumerate_parts`].
pub const DEFAULT_MAX_OUTCOMES: usize = 8;

/// Observable, instrument or measurement model.
#[derive(Debug, Clone, PartialEq)]
pub enum Entity<T: Real> {
    Observable(Observable<T>),
    Instrument(Instrument<T>),
    Model(MeasurementModel<T>),
}

impl<T: Real> Entity<T> {
    /// Base dimension.
    pub fn dim(&self) -> usize {
        match self {
            Entity::Observable(a) => a.dim(),
            Entity::Instrument(i) => i.dim(),
            Entity::Model(m) => m.base_dim(),
        }
    }

    fn rank(&self) -> u8 {
        match self {
            Entity::Observable(_) => 0,
            Entity::Instrument(_) => 1,
            Entity::Model(_) => 2,
        }
    }

    pub fn kind(&self) -> &'static str {
        match self {
            Entity::Observable(_) => "observable",
            Entity::Instrument(_) => "instrument",
            Entity::Model(_) => "mm",
        }
    }

    /// Outcome labels `Ω_α`.
    pub fn labels(&self) -> Vec<OutcomeLabel> {
        match self {
            Entity::Observable(a) => a.labels().cloned().collect(),
            Entity::Instrument(i) => i.labels().cloned().collect(),
            Entity::Model(m) => m.probe_observable().labels().cloned().collect(),
        }
    }

    /// The observable measured: `A`, `Î` or `M^∧∧`.
    pub fn observable(&self, tol: Tolerance<T>) -> Result<Observable<T>> {
        match self {
            Entity::Observable(a) => Ok(a.clone()),
            Entity::Instrument(i) => Ok(i.measured_observable()),
            Entity::Model(m) => m.observable(tol),
        }
    }

    /// `f(α)`: coarse-graining at the entity's own type.
    pub fn coarse_grain(&self, f: &Surjection) -> Result<Entity<T>> {
        Ok(match self {
            Entity::Observable(a) => Entity::Observable(a.coarse_grain(f)?),
            Entity::Instrument(i) => Entity::Instrument(i.coarse_grain(f)?),
            Entity::Model(m) => Entity::Model(m.with_probe_observable(m.probe_observable().coarse_grain(f)?)?),
        })
    }

    /// `Φ_ρ^α(X)`.
    pub fn event_probability(&self, rho: &DensityState<T>, event: &[OutcomeLabel], tol: Tolerance<T>) -> Result<T> {
        match self {
            Entity::Observable(a) => a.event_probability(rho, event, tol),
            Entity::Instrument(i) => instrument_event_probability(i, rho, event, tol),
            Entity::Model(m) => instrument_event_probability(&m.instrument(tol)?, rho, event, tol),
        }
    }
}

fn instrument_event_probability<T: Real>(
    i: &Instrument<T>,
    rho: &DensityState<T>,
    event: &[OutcomeLabel],
    tol: Tolerance<T>,
) -> Result<T> {
    if rho.kind() != StateKind::Full {
        return Err(Error::PartialStateNotAllowed);
    }
    let p = trace_re(&i.event(event)?.apply(rho.matrix())?);
    crate::effects::clip_probability(p, tol)
}

impl<T: Real> From<Observable<T>> for Entity<T> {
    fn from(a: Observable<T>) -> Self {
        Entity::Observable(a)
    }
}

impl<T: Real> From<Instrument<T>> for Entity<T> {
    fn from(i: Instrument<T>) -> Self {
        Entity::Instrument(i)
    }
}

impl<T: Real> From<MeasurementModel<T>> for Entity<T> {
    fn from(m: MeasurementModel<T>) -> Self {
        Entity::Model(m)
    }
}

/// Matrices compared by the part-of search.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Level {
    /// Effects on the base (or probe) space.
    Effects,
    /// Choi matrices of instrument operations.
    Choi,
}

impl Level {
    fn bound<T: Real>(self, n: usize, tol: Tolerance<T>) -> T {
        match self {
            Level::Effects => tol.scaled(n),
            Level::Choi => crate::instruments::choi_bound(n, tol),
        }
    }
}

struct Items<T: Real> {
    level: Level,
    dim: usize,
    labels: Vec<OutcomeLabel>,
    mats: Vec<CMatrix<T>>,
}

fn effect_items<T: Real>(a: &Observable<T>) -> Items<T> {
    Items {
        level: Level::Effects,
        dim: a.dim(),
        labels: a.labels().cloned().collect(),
        mats: a.effects().map(|e| e.matrix().clone()).collect(),
    }
}

fn choi_items<T: Real>(i: &Instrument<T>) -> Items<T> {
    Items {
        level: Level::Choi,
        dim: i.dim(),
        labels: i.labels().cloned().collect(),
        mats: i.iter().map(|(_, op)| op.choi().clone()).collect(),
    }
}

/// Child and parent matrices at the child's comparison level, or `None`
/// when the child has the higher type.
fn comparison<T: Real>(
    child: &Entity<T>,
    parent: &Entity<T>,
    tol: Tolerance<T>,
) -> Result<Option<(Items<T>, Items<T>)>> {
    ensure_same_dim(parent.dim(), child.dim(), "part-of base dimension")?;
    Ok(match (child, parent) {
        (Entity::Observable(a), p) => Some((effect_items(a), effect_items(&p.observable(tol)?))),
        (Entity::Instrument(i), Entity::Instrument(j)) => Some((choi_items(i), choi_items(j))),
        (Entity::Instrument(i), Entity::Model(m)) => Some((choi_items(i), choi_items(&m.instrument(tol)?))),
        (Entity::Model(m1), Entity::Model(m2)) => {
            if !m1.shares_apparatus(m2, tol)? {
                return Err(Error::IncomparableModels);
            }
            Some((effect_items(m1.probe_observable()), effect_items(m2.probe_observable())))
        }
        _ => None,
    })
}

fn map_residual<T: Real>(child: &Items<T>, parent: &Items<T>, map: &Surjection) -> Result<T> {
    map.check_domain(&parent.labels)?;
    if map.codomain_len() != child.labels.len() || child.labels.iter().any(|x| !map.codomain().any(|c| c == x)) {
        return Err(Error::OutcomeSpaceMismatch(
            "map codomain must be the child's outcome space".into(),
        ));
    }
    let mut worst = T::zero();
    for (x, cx) in child.labels.iter().zip(&child.mats) {
        let mut sum = linalg::zeros(cx.nrows(), cx.ncols());
        for y in map.fiber(x) {
            let k = parent.labels.iter().position(|p| p == y).expect("checked domain");
            sum += &parent.mats[k];
        }
        worst = worst.max(frobenius_distance(cx, &sum)?);
    }
    Ok(worst)
}

/// Proof that `child = f(parent)` at the child's comparison level.
#[derive(Debug, Clone, PartialEq)]
pub struct PartCertificate<T: Real> {
    child: Entity<T>,
    parent: Entity<T>,
    map: Surjection,
    residual: T,
}

impl<T: Real> PartCertificate<T> {
    /// Checks a proposed map, returning a certificate when it replays.
    pub fn verify(child: Entity<T>, parent: Entity<T>, map: Surjection, tol: Tolerance<T>) -> Result<Self> {
        let (c, p) = comparison(&child, &parent, tol)?.ok_or(Error::UnsupportedEntity(
            "a higher-type entity cannot be a part of a lower-type one",
        ))?;
        let residual = map_residual(&c, &p, &map)?;
        if residual > c.level.bound(c.dim, tol) {
            return Err(Error::StaleWitness {
                residual: residual.as_f64(),
            });
        }
        Ok(Self {
            child,
            parent,
            map,
            residual,
        })
    }

    pub fn child(&self) -> &Entity<T> {
        &self.child
    }

    pub fn parent(&self) -> &Entity<T> {
        &self.parent
    }

    pub fn map(&self) -> &Surjection {
        &self.map
    }

    pub fn residual(&self) -> T {
        self.residual
    }

    /// Recomputes the fiber-sum residual from scratch.
    pub fn replay(&self, tol: Tolerance<T>) -> Result<T> {
        let (c, p) = comparison(&self.child, &self.parent, tol)?.ok_or(Error::UnsupportedEntity(
            "a higher-type entity cannot be a part of a lower-type one",
        ))?;
        map_residual(&c, &p, &self.map)
    }

    /// `f(β)` at the parent's type; its measured observable (or instrument)
    /// reproduces the child.
    pub fn lift(&self) -> Result<Entity<T>> {
        self.parent.coarse_grain(&self.map)
    }

    /// Composes `self: α = g(β)` with `inner: β = f(γ)` into `α = (g∘f)(γ)`.
    pub fn compose(&self, inner: &PartCertificate<T>, tol: Tolerance<T>) -> Result<PartCertificate<T>> {
        let map = self.map.after(&inner.map)?;
        PartCertificate::verify(self.child.clone(), inner.parent.clone(), map, tol)
    }
}

/// Backtracking search for an assignment `parent index → child index` whose
/// fiber sums match the child within the level's bound.
fn search<T: Real>(child: &Items<T>, parent: &Items<T>, tol: Tolerance<T>) -> Option<Vec<usize>> {
    let m = child.mats.len();
    let k = parent.mats.len();
    if m > k {
        return None;
    }
    let bound = child.level.bound(child.dim, tol);
    let mut order: Vec<usize> = (0..k).collect();
    let traces: Vec<T> = parent.mats.iter().map(trace_re).collect();
    order.sort_by(|&a, &b| traces[b].partial_cmp(&traces[a]).unwrap_or(std::cmp::Ordering::Equal));

    struct State<T: Real> {
        sums: Vec<CMatrix<T>>,
        counts: Vec<usize>,
        assign: Vec<usize>,
    }
    let mut state = State {
        sums: child.mats.iter().map(|c| linalg::zeros(c.nrows(), c.ncols())).collect(),
        counts: vec![0; m],
        assign: vec![usize::MAX; k],
    };

    fn go<T: Real>(
        depth: usize,
        order: &[usize],
        child: &Items<T>,
        parent: &Items<T>,
        bound: T,
        st: &mut State<T>,
    ) -> bool {
        let m = child.mats.len();
        if depth == order.len() {
            return (0..m).all(|c| {
                st.counts[c] > 0
                    && frobenius_distance(&child.mats[c], &st.sums[c]).is_ok_and(|d| d <= bound)
            });
        }
        let empty = st.counts.iter().filter(|&&c| c == 0).count();
        if empty > order.len() - depth {
            return false;
        }
        let p = order[depth];
        for c in 0..m {
            let candidate = &st.sums[c] + &parent.mats[p];
            let gap = &child.mats[c] - &candidate;
            if linalg::min_eigenvalue(&linalg::symmetrize(&gap)) < -bound {
                continue;
            }
            let previous = std::mem::replace(&mut st.sums[c], candidate);
            st.counts[c] += 1;
            st.assign[p] = c;
            if go(depth + 1, order, child, parent, bound, st) {
                return true;
            }
            st.sums[c] = previous;
            st.counts[c] -= 1;
            st.assign[p] = usize::MAX;
        }
        false
    }

    go(0, &order, child, parent, bound, &mut state).then_some(state.assign)
}

fn certificate_from_search<T: Real>(
    child: Entity<T>,
    parent: Entity<T>,
    tol: Tolerance<T>,
) -> Result<Option<PartCertificate<T>>> {
    let Some((c, p)) = comparison(&child, &parent, tol)? else {
        return Ok(None);
    };
    let Some(assign) = search(&c, &p, tol) else {
        return Ok(None);
    };
    let map = Surjection::new(
        p.labels.iter().zip(&assign).map(|(y, &x)| (y.clone(), c.labels[x].clone())),
        c.labels.iter().cloned(),
    )?;
    let residual = map_residual(&c, &p, &map)?;
    Ok(Some(PartCertificate {
        child,
        parent,
        map,
        residual,
    }))
}

/// Finds `f` with `child = f(parent)` for observables.
pub fn find_part_map<T: Real>(
    child: &Observable<T>,
    parent: &Observable<T>,
    tol: Tolerance<T>,
) -> Result<Option<PartCertificate<T>>> {
    certificate_from_search(child.clone().into(), parent.clone().into(), tol)
}

/// Finds `f` with `child = f(parent)` for instruments, comparing Choi matrices.
pub fn find_part_map_instr<T: Real>(
    child: &Instrument<T>,
    parent: &Instrument<T>,
    tol: Tolerance<T>,
) -> Result<Option<PartCertificate<T>>> {
    certificate_from_search(child.clone().into(), parent.clone().into(), tol)
}

/// `α → β` for any pair of entities. A higher-type child inside a
/// lower-type parent is `None`; models with different apparatus are
/// incomparable.
pub fn part_of<T: Real>(alpha: &Entity<T>, beta: &Entity<T>, tol: Tolerance<T>) -> Result<Option<PartCertificate<T>>> {
    certificate_from_search(alpha.clone(), beta.clone(), tol)
}

/// `α ≅ β`: `α = f(β)` for a bijection `f`.
pub fn equivalent<T: Real>(alpha: &Entity<T>, beta: &Entity<T>, tol: Tolerance<T>) -> Result<bool> {
    ensure_same_dim(alpha.dim(), beta.dim(), "equivalence base dimension")?;
    if alpha.labels().len() != beta.labels().len() {
        return Ok(false);
    }
    let forward = if alpha.rank() <= beta.rank() {
        part_of(alpha, beta, tol)?
    } else {
        part_of(beta, alpha, tol)?
    };
    Ok(forward.is_some_and(|c| c.map().is_bijective()))
}

/// Set partitions of `{0..k}` as restricted growth strings, in
/// lexicographic order.
#[derive(Debug, Clone)]
pub struct SetPartitions {
    current: Option<Vec<usize>>,
}

impl SetPartitions {
    pub fn new(k: usize) -> Self {
        Self {
            current: Some(vec![0; k]),
        }
    }
}

impl Iterator for SetPartitions {
    type Item = Vec<usize>;

    fn next(&mut self) -> Option<Vec<usize>> {
        let out = self.current.take()?;
        let k = out.len();
        let mut next = out.clone();
        let mut prefix_max = vec![0usize; k];
        for i in 1..k {
            prefix_max[i] = prefix_max[i - 1].max(next[i - 1]);
        }
        let mut i = k;
        while i > 1 {
            i -= 1;
            if next[i] <= prefix_max[i] {
                next[i] += 1;
                for v in next.iter_mut().skip(i + 1) {
                    *v = 0;
                }
                self.current = Some(next);
                break;
            }
        }
        Some(out)
    }
}

/// Greedy multiset match of two observables' effects.
fn same_effect_multiset<T: Real>(a: &Observable<T>, b: &Observable<T>, tol: Tolerance<T>) -> Result<bool> {
    if a.len() != b.len() || a.dim() != b.dim() {
        return Ok(false);
    }
    let mut used = vec![false; b.len()];
    let theirs: Vec<&Effect<T>> = b.effects().collect();
    for e in a.effects() {
        let mut found = false;
        for (k, f) in theirs.iter().enumerate() {
            if !used[k] && e.approx_eq(f, tol)? {
                used[k] = true;
                found = true;
                break;
            }
        }
        if !found {
            return Ok(false);
        }
    }
    Ok(true)
}

/// All parts of `parent` up to equivalence, each with its inducing
/// surjection. Block labels are `"1".."m"` in first-occurrence order.
pub fn enumerate_parts<T: Real>(
    parent: &Observable<T>,
    tol: Tolerance<T>,
    max_outcomes: usize,
) -> Result<Vec<(Observable<T>, Surjection)>> {
    let k = parent.len();
    if k > max_outcomes {
        return Err(Error::OutcomeCap {
            count: k,
            cap: max_outcomes,
        });
    }
    let labels: Vec<OutcomeLabel> = parent.labels().cloned().collect();
    let mut classes: Vec<(Observable<T>, Surjection)> = Vec::new();
    for rgs in SetPartitions::new(k) {
        let f = Surjection::from_fn(&labels, |y| {
            let idx = labels.iter().position(|l| l == y).expect("own label");
            OutcomeLabel::from(rgs[idx] + 1)
        });
        let part = parent.coarse_grain(&f)?;
        let mut duplicate = false;
        for (rep, _) in &classes {
            if same_effect_multiset(&part, rep, tol)? {
                duplicate = true;
                break;
            }
        }
        if !duplicate {
            classes.push((part, f));
        }
    }
    Ok(classes)
}

/// Checks each member is the corresponding marginal of `joint`, whose
/// outcome space must be the product of the members' spaces.
pub fn marginal_check<T: Real>(joint: &Observable<T>, members: &[Observable<T>], tol: Tolerance<T>) -> Result<bool> {
    let expected: usize = members.iter().map(Observable::len).product();
    if members.is_empty() || joint.len() != expected {
        return Err(Error::OutcomeSpaceMismatch(format!(
            "joint has {} outcomes, product space has {expected}",
            joint.len()
        )));
    }
    for label in joint.labels() {
        let ok = label.components().is_some_and(|c| {
            c.len() == members.len() && c.iter().zip(members).all(|(x, a)| a.effect(x).is_ok())
        });
        if !ok {
            return Err(Error::OutcomeSpaceMismatch(format!(
                "joint outcome {label} is not in the product space"
            )));
        }
    }
    for (i, member) in members.iter().enumerate() {
        ensure_same_dim(joint.dim(), member.dim(), "marginal dimension")?;
        let proj = Surjection::new(
            joint
                .labels()
                .map(|t| (t.clone(), t.components().expect("tuple")[i].clone())),
            member.labels().cloned(),
        )?;
        if !joint.coarse_grain(&proj)?.approx_eq(member, tol)? {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Joint observable `h(C)` on `Ω₁ × … × Ω_n` with `h(y) = (f₁(y),…,f_n(y))`.
/// Product outcomes outside the image of `h` carry the zero effect.
pub fn joint_from_common<T: Real>(common: &Observable<T>, maps: &[Surjection]) -> Result<Observable<T>> {
    for f in maps {
        f.check_domain(common.labels())?;
    }
    let mut tuples: Vec<Vec<OutcomeLabel>> = vec![Vec::new()];
    for f in maps {
        tuples = tuples
            .into_iter()
            .flat_map(|t| {
                f.codomain().map(move |x| {
                    let mut next = t.clone();
                    next.push(x.clone());
                    next
                })
            })
            .collect();
    }
    let mut outcomes: IndexMap<OutcomeLabel, CMatrix<T>> = tuples
        .into_iter()
        .map(|t| (OutcomeLabel::tuple(t), linalg::zeros(common.dim(), common.dim())))
        .collect();
    for (y, cy) in common.iter() {
        let key = OutcomeLabel::tuple(maps.iter().map(|f| f.apply(y).expect("checked domain").clone()));
        *outcomes.get_mut(&key).expect("product label") += cy.matrix();
    }
    Ok(Observable::from_parts_unchecked(
        common.dim(),
        outcomes
            .into_iter()
            .map(|(k, m)| (k, Effect::from_matrix_unchecked(m)))
            .collect(),
    ))
}

/// `A∘B` as a joint for commuting `A` and `B`.
pub fn joint_for_commuting<T: Real>(a: &Observable<T>, b: &Observable<T>, tol: Tolerance<T>) -> Result<Observable<T>> {
    let norm = a.max_commutator(b)?;
    if norm > tol.scaled(a.dim()) {
        return Err(Error::NonCommuting { norm: norm.as_f64() });
    }
    a.seq_prod(b)
}

/// Certificates for a set of entities sharing one parent.
#[derive(Debug, Clone, PartialEq)]
pub struct CoexistenceWitness<T: Real> {
    parent: Entity<T>,
    certificates: Vec<PartCertificate<T>>,
}

impl<T: Real> CoexistenceWitness<T> {
    pub fn new(certificates: Vec<PartCertificate<T>>) -> Result<Self> {
        let parent = certificates
            .first()
            .map(|c| c.parent.clone())
            .ok_or(Error::NoOutcomes)?;
        if certificates.iter().any(|c| c.parent != parent) {
            return Err(Error::OutcomeSpaceMismatch(
                "certificates must share one parent".into(),
            ));
        }
        Ok(Self { parent, certificates })
    }

    pub fn parent(&self) -> &Entity<T> {
        &self.parent
    }

    pub fn certificates(&self) -> &[PartCertificate<T>] {
        &self.certificates
    }

    /// `Φ_ρ(α₁ ∈ X₁, …, α_n ∈ X_n)` from the parent's
    /// `∩ f_i⁻¹(X_i)` event, after re-checking every certificate.
    pub fn joint_distribution(
        &self,
        rho: &DensityState<T>,
        events: &[Vec<OutcomeLabel>],
        tol: Tolerance<T>,
    ) -> Result<T> {
        if events.len() != self.certificates.len() {
            return Err(Error::OutcomeSpaceMismatch(format!(
                "{} events for {} members",
                events.len(),
                self.certificates.len()
            )));
        }
        for cert in &self.certificates {
            let (c, _) = comparison(&cert.child, &cert.parent, tol)?.expect("verified pair");
            let residual = cert.replay(tol)?;
            if residual > c.level.bound(c.dim, tol) {
                return Err(Error::StaleWitness {
                    residual: residual.as_f64(),
                });
            }
        }
        if let Entity::Model(_) = self.parent {
            if self.certificates.iter().any(|c| matches!(c.child, Entity::Model(_))) {
                return Err(Error::UnsupportedEntity("joint distributions of measurement-model members"));
            }
        }
        for (cert, event) in self.certificates.iter().zip(events) {
            let own = cert.child.labels();
            if let Some(bad) = event.iter().find(|x| !own.contains(x)) {
                return Err(Error::UnknownLabel(bad.to_string()));
            }
        }
        let intersection: Vec<OutcomeLabel> = self
            .parent
            .labels()
            .into_iter()
            .filter(|z| {
                self.certificates
                    .iter()
                    .zip(events)
                    .all(|(c, ev)| c.map.apply(z).is_some_and(|x| ev.contains(x)))
            })
            .collect();
        self.parent.event_probability(rho, &intersection, tol)
    }
}

/// Searches for certificates of every member inside `parent`.
pub fn coexist<T: Real>(
    members: &[Entity<T>],
    parent: &Entity<T>,
    tol: Tolerance<T>,
) -> Result<Option<CoexistenceWitness<T>>> {
    let mut certificates = Vec::with_capacity(members.len());
    for m in members {
        match part_of(m, parent, tol)? {
            Some(c) => certificates.push(c),
            None => return Ok(None),
        }
    }
    CoexistenceWitness::new(certificates).map(Some)
}
