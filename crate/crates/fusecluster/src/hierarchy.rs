//! The full method: fixed-gamma alternating solve, centroid merging by
//! connected components, the gamma-path driver producing the hierarchy, and
//! plateau-based selection of the cluster count.

use std::collections::VecDeque;
use std::fmt::Write as _;

use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::admm::{admm_u_with_state, AdmmParams, AdmmState};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::fmt_f64;
use crate::fuzzy::{caf_objective, squared_distances, update_memberships, CentroidSet, MembershipMatrix};

/// A centroid fusion recorded on the path. `absorbed` are the cluster indices
/// of the previous level (or the initial centroids for level 0) that merged;
/// `survivor` is their index at this level.
#[derive(Debug, Clone, PartialEq)]
pub struct MergeEvent {
    pub gamma: f64,
    pub absorbed: Vec<usize>,
    pub survivor: usize,
    pub level: usize,
}

#[derive(Debug, Clone)]
pub struct LevelSolution {
    pub gamma: f64,
    pub memberships: MembershipMatrix,
    pub centroids: CentroidSet,
    pub c: usize,
    pub assignment: Vec<usize>,
    pub objective: f64,
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlateauChoice {
    pub c: usize,
    pub gamma_range: (f64, f64),
}

#[derive(Debug, Clone)]
pub struct HierarchyPath {
    pub dataset: String,
    pub params: ResolvedPathParams,
    pub levels: Vec<LevelSolution>,
    pub merges: Vec<MergeEvent>,
    pub initial_k: usize,
    pub a: f64,
    pub optimal: Option<PlateauChoice>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PathParams {
    /// First penalty value; `None` derives 0.01 * RMS pairwise distance.
    pub gamma_start: Option<f64>,
    /// Additive gamma increment; `None` derives 0.01 * RMS pairwise distance.
    pub epsilon: Option<f64>,
    pub max_levels: usize,
    /// Initialization factor: K0 = floor(a * sqrt(n)), a in [1, 3].
    pub a: f64,
    /// Stop once the cluster count reaches this value.
    pub stop_at_c: usize,
    /// Relative objective-change tolerance of the outer alternating loop.
    pub tol: f64,
    /// Outer alternating cycle cap per gamma.
    pub max_cycles: usize,
    pub admm: AdmmParams,
    /// Fusion-edge threshold on ||v_kl||; `None` derives 1e-4 * RMS pairwise distance.
    pub merge_tol: Option<f64>,
    pub seed: u64,
}

impl Default for PathParams {
    fn default() -> Self {
        PathParams {
            gamma_start: None,
            epsilon: None,
            max_levels: 200,
            a: 2.0,
            stop_at_c: 1,
            tol: 1e-6,
            max_cycles: 100,
            admm: AdmmParams::default(),
            merge_tol: None,
            seed: 0,
        }
    }
}

/// [`PathParams`] with every scale-derived default filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedPathParams {
    pub gamma_start: f64,
    pub epsilon: f64,
    pub max_levels: usize,
    pub a: f64,
    pub stop_at_c: usize,
    pub tol: f64,
    pub max_cycles: usize,
    pub admm: AdmmParams,
    pub merge_tol: f64,
    pub seed: u64,
}

impl PathParams {
    pub fn resolve(&self, ds: &Dataset) -> ResolvedPathParams {
        let scale = ds.rms_pairwise_distance();
        ResolvedPathParams {
            gamma_start: self.gamma_start.unwrap_or(0.01 * scale),
            epsilon: self.epsilon.unwrap_or(0.01 * scale),
            max_levels: self.max_levels,
            a: self.a,
            stop_at_c: self.stop_at_c,
            tol: self.tol,
            max_cycles: self.max_cycles,
            admm: self.admm,
            merge_tol: self.merge_tol.unwrap_or(1e-4 * scale),
            seed: self.seed,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveParams {
    pub tol: f64,
    pub max_cycles: usize,
    pub admm: AdmmParams,
    pub merge_tol: f64,
}

impl Default for SolveParams {
    fn default() -> Self {
        SolveParams {
            tol: 1e-6,
            max_cycles: 100,
            admm: AdmmParams::default(),
            merge_tol: 1e-6,
        }
    }
}

/// One BFS component of near-zero difference variables, in the index space of
/// the centroids passed to [`merge_centroids`].
#[derive(Debug, Clone, PartialEq)]
pub struct ComponentMerge {
    pub absorbed: Vec<usize>,
    pub survivor: usize,
}

/// Per-row argmax; ties break toward the lowest cluster index.
pub fn hard_assignment(p: &MembershipMatrix) -> Vec<usize> {
    (0..p.n())
        .map(|i| {
            let row = p.mu().row(i);
            let mut best = 0;
            for j in 1..p.k() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

/// Fuse centroids connected by difference variables with ||v_kl|| <= merge_tol.
/// BFS components become the new clusters, numbered in order of their smallest
/// member index; each merged centroid is the `weights`-weighted average of its
/// members. Returns the new centroids, the old-to-new index remap, and one
/// [`ComponentMerge`] per component of size >= 2.
pub fn merge_centroids(
    u: &CentroidSet,
    state: &AdmmState,
    weights: &[f64],
    merge_tol: f64,
) -> (CentroidSet, Vec<usize>, Vec<ComponentMerge>) {
    let k = u.k();
    let mut adjacency = vec![Vec::new(); k];
    for (idx, &(a, b)) in state.pairs.pairs().iter().enumerate() {
        let norm2: f64 = state.v.column(idx).iter().map(|v| v * v).sum();
        if norm2.sqrt() <= merge_tol {
            adjacency[a].push(b);
            adjacency[b].push(a);
        }
    }
    let mut component = vec![usize::MAX; k];
    let mut members: Vec<Vec<usize>> = Vec::new();
    for start in 0..k {
        if component[start] != usize::MAX {
            continue;
        }
        let id = members.len();
        let mut queue = VecDeque::from([start]);
        component[start] = id;
        let mut group = vec![start];
        while let Some(node) = queue.pop_front() {
            for &next in &adjacency[node] {
                if component[next] == usize::MAX {
                    component[next] = id;
                    group.push(next);
                    queue.push_back(next);
                }
            }
        }
        group.sort_unstable();
        members.push(group);
    }
    let d = u.d();
    let mut merged = Array2::zeros((d, members.len()));
    let mut events = Vec::new();
    for (id, group) in members.iter().enumerate() {
        let mut wsum: f64 = group.iter().map(|&j| weights[j]).sum();
        let uniform = wsum <= 0.0;
        if uniform {
            wsum = group.len() as f64;
        }
        for &j in group {
            let w = if uniform { 1.0 } else { weights[j] };
            let mut col = merged.column_mut(id);
            col.scaled_add(w / wsum, &u.u().column(j));
        }
        if group.len() >= 2 {
            events.push(ComponentMerge {
                absorbed: group.clone(),
                survivor: id,
            });
        }
    }
    let centroids = CentroidSet::new(merged).expect("merged centroids are finite");
    (centroids, component, events)
}

#[derive(Debug, Clone, Copy)]
pub struct CycleRecord {
    pub objective: f64,
    pub merged: bool,
}

#[derive(Debug, Clone)]
pub struct FixedGammaSolve {
    pub level: LevelSolution,
    /// Composed map from input centroid indices to output cluster indices.
    pub remap: Vec<usize>,
    /// One event per fused group, in input index space. `gamma` is set,
    /// `level` is 0 until the path driver fills it in.
    pub merges: Vec<MergeEvent>,
    pub cycles: usize,
    pub trace: Vec<CycleRecord>,
}

/// Alternate membership update, ADMM centroid solve, and centroid merging at
/// a fixed gamma until the fused objective stabilizes.
pub fn solve_fixed_gamma(
    ds: &Dataset,
    u_init: &CentroidSet,
    gamma: f64,
    params: &SolveParams,
) -> Result<FixedGammaSolve> {
    if gamma < 0.0 {
        return Err(Error::InvalidParam(format!("gamma = {gamma} must be >= 0")));
    }
    let input_k = u_init.k();
    let mut u = u_init.clone();
    let mut state = AdmmState::zeros(u.d(), u.k(), params.admm.beta);
    let mut remap: Vec<usize> = (0..input_k).collect();
    let mut trace: Vec<CycleRecord> = Vec::new();
    let mut converged = false;
    let mut inner_ok = true;
    let mut cycles = 0;
    let mut memberships = update_memberships(&squared_distances(ds, &u)?);
    while cycles < params.max_cycles {
        cycles += 1;
        memberships = update_memberships(&squared_distances(ds, &u)?);
        let admm = admm_u_with_state(ds, &memberships, &u, state, gamma, &params.admm)?;
        inner_ok &= admm.converged;
        u = admm.centroids;
        state = admm.state;
        let weights = memberships.column_mass_sq();
        let (merged_u, step_remap, components) =
            merge_centroids(&u, &state, &weights, params.merge_tol);
        let merged = !components.is_empty();
        if merged {
            u = merged_u;
            for r in remap.iter_mut() {
                *r = step_remap[*r];
            }
            state = AdmmState::zeros(u.d(), u.k(), params.admm.beta);
            memberships = update_memberships(&squared_distances(ds, &u)?);
        }
        let objective = caf_objective(ds, &memberships, &u, gamma)?;
        let prev = trace.last().map(|r| r.objective);
        trace.push(CycleRecord { objective, merged });
        if !merged {
            if let Some(prev) = prev {
                if (prev - objective).abs() <= params.tol * prev.abs().max(1e-12) {
                    converged = true;
                    break;
                }
            }
        }
    }
    // Events from the composed remap: groups of inputs sharing an output.
    let mut groups: Vec<Vec<usize>> = vec![Vec::new(); u.k()];
    for (input, &out) in remap.iter().enumerate() {
        groups[out].push(input);
    }
    let merges = groups
        .iter()
        .enumerate()
        .filter(|(_, g)| g.len() >= 2)
        .map(|(out, g)| MergeEvent {
            gamma,
            absorbed: g.clone(),
            survivor: out,
            level: 0,
        })
        .collect();
    let assignment = hard_assignment(&memberships);
    let objective = trace.last().map(|r| r.objective).unwrap_or(f64::NAN);
    Ok(FixedGammaSolve {
        level: LevelSolution {
            gamma,
            c: u.k(),
            memberships,
            centroids: u,
            assignment,
            objective,
            converged: converged && inner_ok,
        },
        remap,
        merges,
        cycles,
        trace,
    })
}

/// Widest-plateau selection: for each distinct cluster count, measure the
/// gamma-length of its longest contiguous run; the count with the longest run
/// wins, excluding the terminal c = 1 run and an initial run at c = initial_k.
/// Ties break toward the smaller count.
pub fn select_optimal_c(seq: &[(f64, usize)], initial_k: usize) -> Result<PlateauChoice> {
    if seq.is_empty() {
        return Err(Error::EmptyInput);
    }
    // maximal runs of constant c
    let mut runs: Vec<(usize, usize, usize)> = Vec::new(); // (c, start, end)
    let mut start = 0;
    for i in 1..=seq.len() {
        if i == seq.len() || seq[i].1 != seq[start].1 {
            runs.push((seq[start].1, start, i - 1));
            start = i;
        }
    }
    let last = runs.len() - 1;
    let mut best: Option<(f64, PlateauChoice)> = None;
    for (idx, &(c, s, e)) in runs.iter().enumerate() {
        if idx == last && c == 1 {
            continue;
        }
        if s == 0 && c == initial_k {
            continue;
        }
        let len = seq[e].0 - seq[s].0;
        let choice = PlateauChoice {
            c,
            gamma_range: (seq[s].0, seq[e].0),
        };
        let better = match best {
            None => true,
            Some((blen, bc)) => len > blen || (len == blen && c < bc.c),
        };
        if better {
            best = Some((len, choice));
        }
    }
    best.map(|(_, choice)| choice).ok_or(Error::NoPlateau)
}

/// Run the whole gamma path: K0 = floor(a * sqrt(n)) random sample columns,
/// warm-started fixed-gamma solves at gamma, gamma + epsilon, ..., recording
/// levels and merge events, then plateau selection.
pub fn fit_path(ds: &Dataset, params: &PathParams) -> Result<HierarchyPath> {
    if ds.len() < 2 {
        return Err(Error::InvalidParam("fit_path requires n >= 2".into()));
    }
    if !(1.0..=3.0).contains(&params.a) {
        return Err(Error::InvalidParam(format!("a = {} outside [1, 3]", params.a)));
    }
    let resolved = params.resolve(ds);
    let initial_k = ((params.a * (ds.len() as f64).sqrt()).floor() as usize)
        .max(1)
        .min(ds.len());
    let mut rng = ChaCha8Rng::seed_from_u64(resolved.seed);
    let mut u = CentroidSet::init_from_samples(ds, initial_k, &mut rng)?;
    let solve_params = SolveParams {
        tol: resolved.tol,
        max_cycles: resolved.max_cycles,
        admm: resolved.admm,
        merge_tol: resolved.merge_tol,
    };
    let mut levels = Vec::new();
    let mut merges = Vec::new();
    let mut gamma = resolved.gamma_start;
    for level_idx in 0..resolved.max_levels {
        let solve = solve_fixed_gamma(ds, &u, gamma, &solve_params)?;
        for mut event in solve.merges {
            event.level = level_idx;
            merges.push(event);
        }
        u = solve.level.centroids.clone();
        let c = solve.level.c;
        levels.push(solve.level);
        if c <= resolved.stop_at_c {
            break;
        }
        gamma += resolved.epsilon;
    }
    let seq: Vec<(f64, usize)> = levels.iter().map(|l| (l.gamma, l.c)).collect();
    let optimal = select_optimal_c(&seq, initial_k).ok();
    Ok(HierarchyPath {
        dataset: ds.name.clone(),
        params: resolved,
        levels,
        merges,
        initial_k,
        a: params.a,
        optimal,
    })
}

impl HierarchyPath {
    /// The median level of the winning plateau, if one was selected.
    pub fn optimal_level(&self) -> Option<&LevelSolution> {
        let choice = self.optimal?;
        let in_range: Vec<&LevelSolution> = self
            .levels
            .iter()
            .filter(|l| {
                l.c == choice.c
                    && l.gamma >= choice.gamma_range.0
                    && l.gamma <= choice.gamma_range.1
            })
            .collect();
        in_range.get(in_range.len() / 2).copied()
    }

    /// Cluster index remap from level `level - 1` (or the initial centroids
    /// for level 0) into level `level`, reconstructed from the merge events.
    pub fn level_remap(&self, level: usize) -> Vec<usize> {
        let c_in = if level == 0 {
            self.initial_k
        } else {
            self.levels[level - 1].c
        };
        level_remap_from_events(
            c_in,
            &self
                .merges
                .iter()
                .filter(|m| m.level == level)
                .cloned()
                .collect::<Vec<_>>(),
        )
    }

    /// JSON serialization with 17-significant-digit floats; byte-identical
    /// across identical runs.
    pub fn to_json(&self) -> String {
        let mut out = String::new();
        out.push('{');
        let _ = write!(out, "\"dataset\":{:?},", self.dataset);
        let p = &self.params;
        let _ = write!(
            out,
            "\"params\":{{\"gamma_start\":{},\"epsilon\":{},\"max_levels\":{},\"a\":{},\"stop_at_c\":{},\"tol\":{},\"max_cycles\":{},\"beta\":{},\"tol_primal\":{},\"tol_dual\":{},\"admm_max_iter\":{},\"merge_tol\":{},\"seed\":{},\"initial_k\":{}}},",
            fmt_f64(p.gamma_start),
            fmt_f64(p.epsilon),
            p.max_levels,
            fmt_f64(p.a),
            p.stop_at_c,
            fmt_f64(p.tol),
            p.max_cycles,
            fmt_f64(p.admm.beta),
            fmt_f64(p.admm.tol_primal),
            fmt_f64(p.admm.tol_dual),
            p.admm.max_iter,
            fmt_f64(p.merge_tol),
            p.seed,
            self.initial_k,
        );
        out.push_str("\"levels\":[");
        for (i, level) in self.levels.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "{{\"gamma\":{},\"c\":{},\"objective\":{},\"assignment\":[",
                fmt_f64(level.gamma),
                level.c,
                fmt_f64(level.objective)
            );
            for (j, a) in level.assignment.iter().enumerate() {
                if j > 0 {
                    out.push(',');
                }
                let _ = write!(out, "{a}");
            }
            let u = level.centroids.u();
            let _ = write!(
                out,
                "],\"centroids\":{{\"rows\":{},\"cols\":{},\"data\":[",
                u.nrows(),
                u.ncols()
            );
            let mut first = true;
            for r in 0..u.nrows() {
                for c in 0..u.ncols() {
                    if !first {
                        out.push(',');
                    }
                    first = false;
                    out.push_str(&fmt_f64(u[(r, c)]));
                }
            }
            out.push_str("]}}");
        }
        out.push_str("],\"merges\":[");
        for (i, m) in self.merges.iter().enumerate() {
            if i > 0 {
                out.push(',');
            }
            let _ = write!(
                out,
                "{{\"gamma\":{},\"absorbed\":[{}],\"survivor\":{},\"level\":{}}}",
                fmt_f64(m.gamma),
                m.absorbed
                    .iter()
                    .map(|v| v.to_string())
                    .collect::<Vec<_>>()
                    .join(","),
                m.survivor,
                m.level
            );
        }
        out.push_str("],");
        match self.optimal {
            Some(choice) => {
                let _ = write!(
                    out,
                    "\"optimal_c\":{},\"optimal_gamma_range\":[{},{}]",
                    choice.c,
                    fmt_f64(choice.gamma_range.0),
                    fmt_f64(choice.gamma_range.1)
                );
            }
            None => {
                out.push_str("\"optimal_c\":null,\"optimal_gamma_range\":null");
            }
        }
        out.push('}');
        out
    }

    /// Dendrogram-style DOT digraph over (level, cluster) nodes. Each cluster
    /// points to its successor at the next level; merge survivors are
    /// annotated with the gamma at which they formed.
    pub fn to_dot(&self) -> String {
        dot_from_parts(
            &self.dataset,
            self.initial_k,
            &self
                .levels
                .iter()
                .map(|l| (l.gamma, l.c))
                .collect::<Vec<_>>(),
            &self.merges,
        )
    }
}

/// Reconstruct the old-to-new cluster remap of one level from its merge
/// events; works because components are numbered by smallest member index.
pub fn level_remap_from_events(c_in: usize, events: &[MergeEvent]) -> Vec<usize> {
    let mut survivor_of = vec![usize::MAX; c_in];
    for e in events {
        for &a in &e.absorbed {
            survivor_of[a] = e.absorbed[0];
        }
    }
    // representative of each input = itself unless absorbed into a group
    let mut reps: Vec<usize> = (0..c_in)
        .map(|i| if survivor_of[i] == usize::MAX { i } else { survivor_of[i] })
        .collect();
    // number distinct representatives in ascending order
    let mut sorted: Vec<usize> = reps.clone();
    sorted.sort_unstable();
    sorted.dedup();
    for r in reps.iter_mut() {
        *r = sorted.binary_search(r).unwrap();
    }
    reps
}

pub fn dot_from_parts(
    name: &str,
    initial_k: usize,
    levels: &[(f64, usize)],
    merges: &[MergeEvent],
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "digraph hierarchy {{");
    let _ = writeln!(out, "  rankdir=TB;");
    let _ = writeln!(out, "  label={:?};", name);
    let _ = writeln!(out, "  node [shape=box, fontsize=10];");
    for (i, &(gamma, c)) in levels.iter().enumerate() {
        let level_merges: Vec<&MergeEvent> = merges.iter().filter(|m| m.level == i).collect();
        for j in 0..c {
            let annotated = level_merges.iter().any(|m| m.survivor == j);
            if annotated {
                let _ = writeln!(
                    out,
                    "  L{i}C{j} [label=\"L{i}.{j}\\nmerged @ gamma={gamma:.4}\", style=filled, fillcolor=lightgrey];"
                );
            } else {
                let _ = writeln!(out, "  L{i}C{j} [label=\"L{i}.{j}\"];");
            }
        }
        if i > 0 {
            let c_in = levels[i - 1].1;
            let remap = level_remap_from_events(
                c_in,
                &level_merges.iter().map(|&m| m.clone()).collect::<Vec<_>>(),
            );
            for (src, &dst) in remap.iter().enumerate() {
                let prev = i - 1;
                let _ = writeln!(out, "  L{prev}C{src} -> L{i}C{dst};");
            }
        }
    }
    let _ = writeln!(out, "  // initial centroids: {initial_k}");
    out.push('}');
    out.push('\n');
    out
}
